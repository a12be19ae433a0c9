import numpy as np
import pytest
import shapely

from rigidlab.geometry import PlanarRegion, circle_curve, ellipse_curve
from rigidlab.instances import gen_spiky_set
from rigidlab.lattice import Box
from rigidlab.thickening import (ThickeningParams, classify_boundary_cubes,
                                 classify_line, thicken, thicken_graph)


OMEGA = Box([-4, -4], [4, 4])
OMEGA_TILDE = Box([-3.5, -3.5], [3.5, 3.5])


class TestParams:
    def test_defaults_from_formulas(self):
        p = ThickeningParams(eta=0.1, gamma=0.2, q=1.0)
        assert p.rho == pytest.approx(0.1 ** 7 * 0.2)
        assert p.Lambda == pytest.approx(2 * 2 * 12 * 15 ** 2 * p.phi.phi_max)
        assert p.theta == pytest.approx(1 / 200)

    def test_invalid_eta_rejected(self):
        with pytest.raises(ValueError):
            ThickeningParams(eta=1.5, gamma=0.2, q=1.0)

    def test_invalid_gamma_rejected(self):
        with pytest.raises(ValueError):
            ThickeningParams(eta=0.1, gamma=0.0, q=1.0)


class TestClassifyLine:
    def test_horizontal_through_center_good2(self):
        out = classify_line((0.0, 0.0), (0.0, 1.0), (0.0, 0.0),
                            rho=1.0, theta=0.01)
        assert out["case"] == "good2"

    def test_diagonal_good1(self):
        nu = np.array([1.0, 1.0]) / np.sqrt(2)
        out = classify_line((0.0, 0.0), nu, (0.0, 0.0), rho=1.0, theta=0.01)
        assert out["case"] == "good1"

    def test_face_hugging_bad(self):
        out = classify_line((0.0, 0.48), (0.0, 1.0), (0.0, 0.0),
                            rho=1.0, theta=0.002)
        assert out["case"] == "bad"
        assert out["k"] == 1
        assert out["side"] == 1


class TestClassifyBoundaryCubes:
    def test_gentle_disk_all_flat(self):
        E = PlanarRegion([circle_curve(1.0, n=128)], check=False)
        params = ThickeningParams(eta=0.1, gamma=0.2, q=1.0, rho=0.05)
        cls = classify_boundary_cubes(E, OMEGA, params)
        assert cls.count("flat") > 0
        assert cls.count("acc") == 0

    def test_empty_when_outside_safety_margin(self):
        E = PlanarRegion([circle_curve(0.2, center=(3.9, 3.9), n=64)],
                         check=False)
        params = ThickeningParams(eta=0.1, gamma=0.2, q=1.0, rho=0.05)
        cls = classify_boundary_cubes(E, OMEGA, params)
        assert cls.count("flat") == 0

    def test_tiny_circle_accumulates(self):
        # a circle contained in one cube concentrates its full turning
        # (2*pi*gamma for q=1) in a single window, beating Lambda*rho
        E = PlanarRegion([circle_curve(2e-5, n=64)], check=False)
        params = ThickeningParams(eta=0.1, gamma=0.2, q=1.0, rho=1e-4)
        cls = classify_boundary_cubes(E, OMEGA, params)
        assert cls.count("acc") == 1
        assert cls.count("flat") == 0


class TestThicken:
    PARAMS = ThickeningParams(eta=0.1, gamma=0.2, q=1.0, rho=0.01)

    def test_empty_region(self):
        rep = thicken(None, OMEGA, OMEGA_TILDE, self.PARAMS)
        assert rep.volume_added == 0.0
        assert all(rep.checks.values())

    def test_ellipse_literal_bounds(self):
        E = PlanarRegion([ellipse_curve(1.0, 0.5, n=128)], check=False)
        rep = thicken(E, OMEGA, OMEGA_TILDE, self.PARAMS)
        budget = 0.1 * 0.2
        assert rep.volume_added <= budget * rep.f_surf_before
        assert rep.hausdorff_distance <= budget
        assert rep.margin >= 0.1 ** 8 * 0.2
        assert all(rep.checks.values())

    def test_thickened_set_contains_region(self):
        E = PlanarRegion([ellipse_curve(1.0, 0.5, n=128)], check=False)
        rep = thicken(E, OMEGA, OMEGA_TILDE, self.PARAMS)
        pts = E.polygon().exterior.coords
        inner = shapely.points(np.asarray(pts) * 0.99)
        assert np.all(shapely.contains(rep.polygon, inner))

    def test_small_disks_swallowed(self):
        # satellite disks of diameter below the cube size end up inside
        E = gen_spiky_set(3)
        params = ThickeningParams(eta=0.1, gamma=0.2, q=1.0, rho=0.3)
        rep = thicken(E, OMEGA, OMEGA_TILDE, params)
        smallest = E.boundaries[-1]
        pts = shapely.points(smallest.sample(32))
        assert np.all(shapely.contains(rep.polygon.buffer(1e-9), pts))


class TestThickenGraph:
    def test_constant_profile(self):
        params = ThickeningParams(eta=0.1, gamma=0.2, q=1.0, rho=0.01)
        rep = thicken_graph(lambda x: np.full_like(np.asarray(x, float), 0.5),
                            (0.0, 1.0), 1.0, params)
        assert rep.checks["below"]
        assert rep.checks["perimeter"]
        # full graph drops by at most one cube neighbourhood (6*rho)
        assert rep.volume_added == pytest.approx(6 * params.rho, rel=1e-2)

    def test_bump_stays_below(self):
        params = ThickeningParams(eta=0.1, gamma=0.2, q=1.0, rho=0.01)

        def h(x):
            x = np.asarray(x, float)
            return 0.5 + 0.25 * np.exp(-((x - 0.5) / 0.15) ** 2)

        rep = thicken_graph(h, (0.0, 1.0), 1.0, params)
        assert rep.checks["below"]

    def test_narrow_notch_filled_from_below(self):
        params = ThickeningParams(eta=0.1, gamma=0.2, q=1.0, rho=0.05)

        def h(x):
            x = np.asarray(x, float)
            notch = 0.3 * np.exp(-((x - 0.5) / 0.01) ** 2)
            return 0.6 - notch

        rep = thicken_graph(h, (0.0, 1.0), 1.0, params)
        assert rep.checks["below"]
        assert np.all(rep.h_thick <= h(rep.x) + 1e-9)
