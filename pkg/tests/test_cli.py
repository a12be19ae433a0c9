import json
import subprocess
import sys

import pytest

from rigidlab.cli import main


def run(args):
    return main(list(args))


class TestExitCodes:
    def test_invalid_eta_exits_2(self, tmp_path):
        assert run(["thicken", "--eta", "1.5",
                    "--output", str(tmp_path)]) == 2

    def test_invalid_gamma_exits_2(self, tmp_path):
        assert run(["rigidity", "--gamma", "0.0",
                    "--output", str(tmp_path)]) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert run(["schedule", "--config", str(tmp_path / "nope.json"),
                    "--output", str(tmp_path)]) == 2

    def test_unknown_config_key_exits_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert run(["schedule", "--config", str(cfg),
                    "--output", str(tmp_path)]) == 2

    def test_failed_check_exits_1(self, tmp_path, capsys):
        # threshold exponent p = q/(3d) must be flagged
        code = run(["schedule", "--p", str(1 / 6),
                    "--output", str(tmp_path)])
        assert code == 1
        assert "CHECK FAILED" in capsys.readouterr().err

    def test_list_exits_0(self, capsys):
        assert run(["list"]) == 0
        assert capsys.readouterr().out.strip()


class TestArtifacts:
    def test_schedule_report(self, tmp_path):
        assert run(["schedule", "--output", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["ok"] is True

    def test_tunnel_artifacts(self, tmp_path):
        assert run(["tunnel", "--sigma", "0.1", "--output", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report
        assert list((tmp_path / "tables").glob("*.csv"))

    def test_sharpness_artifacts(self, tmp_path):
        assert run(["sharpness", "--kmin", "4", "--kmax", "7",
                    "--output", str(tmp_path)]) == 0
        assert (tmp_path / "report.json").exists()
        assert list((tmp_path / "plots").glob("*.svg"))

    def test_config_file_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"p": 0.125}))
        assert run(["schedule", "--config", str(cfg),
                    "--output", str(tmp_path)]) == 0

    def test_thicken_ellipse(self, tmp_path):
        assert run(["thicken", "--shape", "ellipse", "--rho", "0.01",
                    "--output", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert all(report["checks"].values())


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "rigidlab.cli", "list"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip()
