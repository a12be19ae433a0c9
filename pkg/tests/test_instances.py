import numpy as np
import pytest

from rigidlab import kernels
from rigidlab.instances import (InstanceError, gen_ball, gen_graph_film,
                                gen_sharp_stripes, gen_spiky_set,
                                gen_thin_tunnel, stripe_energy_and_forced_ratio)
from rigidlab.surface import curvature_integral


class TestThinTunnel:
    def test_analytic_energy_fact(self):
        inst = gen_thin_tunnel(0.3, delta_t=0.05)
        assert inst.facts["elastic_energy"] == pytest.approx(
            0.3 ** 2 * 0.05 ** 3 / 3.0)
        assert inst.facts["rotation_mismatch_sq"] == pytest.approx(
            4.0 * (1.0 - np.cos(0.3)))

    def test_branch_continuity(self):
        # left/bend and bend/right pieces agree on the interfaces x=0, x=1
        inst = gen_thin_tunnel(0.4, delta_t=0.05)
        maps = inst.extras["branch_maps"]
        ys = np.linspace(-1.5, 2.5, 200)
        left_iface = np.stack([np.zeros_like(ys), ys], axis=1)
        right_iface = np.stack([np.ones_like(ys), ys], axis=1)
        assert np.max(np.abs(maps["left"](left_iface)
                             - maps["mid"](left_iface))) < 1e-12
        assert np.max(np.abs(maps["right"](right_iface)
                             - maps["mid"](right_iface))) < 1e-12

    def test_bend_gradient_matches_finite_differences(self):
        inst = gen_thin_tunnel(0.25, delta_t=0.1)
        rng = np.random.default_rng(0)
        pts = rng.uniform([0.1, 0.52], [0.9, 0.58], (50, 2))
        F = inst.field.gradient(pts, 1e-6)
        F_exact = inst.field.grad(pts)
        assert np.max(np.abs(F - F_exact)) < 1e-6

    def test_rigid_outside_tunnel(self):
        inst = gen_thin_tunnel(0.3)
        pts = np.array([[-1.0, 1.0], [-0.5, -1.0], [2.0, 0.3], [1.5, 2.0]])
        F = inst.field.grad(pts)
        assert np.max(kernels.dist2_so(F)) < 1e-24

    def test_invalid_parameters(self):
        with pytest.raises(InstanceError):
            gen_thin_tunnel(2.0)
        with pytest.raises(InstanceError):
            gen_thin_tunnel(0.3, delta_t=0.5)


class TestSharpStripes:
    def test_energy_scales_like_gamma_4_over_q(self):
        # per-stripe bend energy m * sigma^2 * w^3 / 3 with sigma=gamma^{1/q},
        # w ~ 3*sigma gives total ~ 9*sigma^4 = 9*gamma^{4/q}
        q = 1.0
        for gamma in (0.05, 0.02, 0.01):
            inst = gen_sharp_stripes(gamma, q)
            measured = stripe_energy_and_forced_ratio(inst)["epsilon"]
            predicted = inst.facts["elastic_energy_estimate"]
            assert measured == pytest.approx(predicted, rel=0.2)

    def test_macroscopic_rotation_forced(self):
        inst = gen_sharp_stripes(0.05, 1.0)
        out = stripe_energy_and_forced_ratio(inst)
        assert out["forced_residual"] > 1e3 * out["epsilon"]

    def test_single_stripe_rejected(self):
        with pytest.raises(InstanceError):
            gen_sharp_stripes(0.9, 1.0)

    def test_stripe_count(self):
        inst = gen_sharp_stripes(0.05, 1.0)
        assert inst.facts["m"] == int(np.ceil(1.0 / (3 * 0.05)))


class TestBalls:
    def test_planar_facts(self):
        inst = gen_ball(0.25, d=2, q=1.0)
        assert inst.facts["perimeter"] == pytest.approx(2 * np.pi * 0.25)
        assert inst.facts["curvature_integral"] == pytest.approx(2 * np.pi)
        curve = inst.extras["curve"]
        assert curve.length() == pytest.approx(2 * np.pi * 0.25, rel=1e-4)
        assert curvature_integral(curve, 1.0) == pytest.approx(2 * np.pi,
                                                               rel=1e-3)

    def test_curvature_mass_grows_as_radius_shrinks(self):
        q = 2.0
        vals = [gen_ball(s, q=q).facts["curvature_integral"]
                for s in (0.1, 0.01)]
        assert vals[1] == pytest.approx(10 * vals[0])

    def test_sphere_facts(self):
        inst = gen_ball(0.5, d=3, q=1.0)
        assert inst.facts["area"] == pytest.approx(np.pi)
        mesh = inst.extras["mesh"]
        assert mesh.area() == pytest.approx(np.pi, rel=1e-2)

    def test_invalid_radius(self):
        with pytest.raises(InstanceError):
            gen_ball(-1.0)


class TestSpikySets:
    def test_spikes_raise_curvature_energy(self):
        q = 2.0
        smooth = sum(curvature_integral(c, q)
                     for c in gen_spiky_set(0).boundaries)
        spiky = sum(curvature_integral(c, q)
                    for c in gen_spiky_set(5).boundaries)
        assert spiky > 10 * smooth

    def test_satellite_disks_shrink_geometrically(self):
        region = gen_spiky_set(3, scale_ratio=0.75)
        disks = region.boundaries[1:]
        lengths = np.array([c.length() for c in disks])
        ratios = lengths[1:] / lengths[:-1]
        assert np.allclose(ratios, 0.75, rtol=1e-3)

    def test_no_spikes_single_component(self):
        assert len(gen_spiky_set(0).boundaries) == 1

    def test_invalid_ratio(self):
        with pytest.raises(InstanceError):
            gen_spiky_set(3, scale_ratio=1.5)


class TestGraphFilms:
    def test_all_kinds_stay_in_range(self):
        x = np.linspace(0, 1, 4096)
        for kind in ("flat", "bump", "notch", "sine"):
            inst = gen_graph_film(kind)
            hv = inst.extras["h"](x)
            assert hv.min() >= 0 and hv.max() <= inst.facts["M"]

    def test_unknown_kind_rejected(self):
        with pytest.raises(InstanceError):
            gen_graph_film("sawtooth")

    def test_out_of_range_profile_rejected(self):
        with pytest.raises(InstanceError):
            gen_graph_film("bump", amplitude=0.9)

    def test_field_is_affine_with_given_strain(self):
        inst = gen_graph_film("flat", delta=1e-3, strain=0.1)
        pts = np.random.default_rng(1).uniform(0, 1, (20, 2))
        F = inst.field.grad(pts)
        expected = np.eye(2) + 1e-3 * np.array([[0.1, 0.0],
                                                [0.0, -0.1 / 3.0]])
        assert np.max(np.abs(F - expected)) < 1e-15
