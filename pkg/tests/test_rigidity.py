import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigidlab.lattice import CubeLattice, cubic_set_from_indices
from rigidlab.rigidity import (DeformationField, RigidityError, best_rotation,
                               chain_rigidity, cube_rigidity, dist_SO,
                               identity_field, linear_form_residual,
                               poincare_fit, rigid_motion_field, rotation_2d)


def _brute_dist_so2(F, n=200000):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    R = np.stack([np.stack([np.cos(th), -np.sin(th)], -1),
                  np.stack([np.sin(th), np.cos(th)], -1)], -2)
    return np.sqrt(np.min(np.sum((R - F) ** 2, axis=(1, 2))))


class TestDistSO:
    def test_rotation_is_zero(self):
        assert dist_SO(rotation_2d(0.73)) == pytest.approx(0.0, abs=1e-14)

    def test_uniform_dilation(self):
        # singular values (2, 2): squared distance (2-1)^2 + (2-1)^2 = 2
        assert dist_SO(2 * np.eye(2)) == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_reflection_branch(self):
        # det < 0 flips the sign of the smallest singular value
        F = np.diag([1.0, -1.0])
        assert dist_SO(F) == pytest.approx(2.0, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-2.0, 2.0), min_size=4, max_size=4))
    def test_matches_brute_force(self, entries):
        F = np.array(entries).reshape(2, 2)
        assert dist_SO(F) == pytest.approx(_brute_dist_so2(F), abs=1e-3)

    def test_3d_rotation_zero(self):
        th = 0.4
        R = np.array([[np.cos(th), -np.sin(th), 0],
                      [np.sin(th), np.cos(th), 0], [0, 0, 1.0]])
        assert dist_SO(R) == pytest.approx(0.0, abs=1e-12)


class TestBestRotation:
    def test_constant_samples_recovered(self):
        R0 = rotation_2d(1.1)
        fit = best_rotation(np.repeat(R0[None], 50, axis=0))
        assert np.allclose(fit.R, R0, atol=1e-12)
        assert fit.residual == pytest.approx(0.0, abs=1e-12)

    def test_equivariance(self):
        rng = np.random.default_rng(5)
        F = np.eye(2) + 0.05 * rng.normal(size=(40, 2, 2))
        R0 = rotation_2d(0.9)
        a = best_rotation(F).R
        b = best_rotation(R0[None] @ F).R
        assert np.allclose(R0 @ a, b, atol=1e-10)

    def test_two_rotations_average(self):
        F = np.stack([rotation_2d(0.0), rotation_2d(0.2)])
        fit = best_rotation(F)
        assert np.allclose(fit.R, rotation_2d(0.1), atol=1e-12)

    def test_3d_svd_with_det_correction(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(3, 3))
        U, _, Vt = np.linalg.svd(A)
        R0 = U @ np.diag([1, 1, np.sign(np.linalg.det(U @ Vt))]) @ Vt
        fit = best_rotation(np.repeat(R0[None], 10, axis=0))
        assert np.linalg.det(fit.R) == pytest.approx(1.0, rel=1e-10)
        assert np.allclose(fit.R, R0, atol=1e-10)


class TestLinearFormResidual:
    def test_exact_rotation_all_zero(self):
        R = rotation_2d(0.3)
        lhs, base, quad = linear_form_residual(R, R)
        assert lhs == pytest.approx(0.0, abs=1e-14)
        assert base == pytest.approx(0.0, abs=1e-14)

    def test_symmetric_perturbation_linear(self):
        eps = 1e-2
        F = np.eye(2) + eps * np.diag([1.0, 0.0])
        lhs, base, quad = linear_form_residual(F, np.eye(2))
        assert abs(lhs - eps) < 1e-12
        assert abs(lhs - base) <= 2 * eps**2


class TestCubeAndChain:
    def _bend_field(self, k=1e-3):
        def y(p):
            p = np.atleast_2d(p)
            return np.stack([(p[:, 1] + 1 / k) * np.sin(k * p[:, 0]),
                             (p[:, 1] + 1 / k) * np.cos(k * p[:, 0])], axis=1)

        def grad(p):
            p = np.atleast_2d(p)
            c, s = np.cos(k * p[:, 0]), np.sin(k * p[:, 0])
            r = (p[:, 1] + 1 / k) * k
            G = np.empty((len(p), 2, 2))
            G[:, 0, 0] = r * c
            G[:, 0, 1] = s
            G[:, 1, 0] = -r * s
            G[:, 1, 1] = c
            return G

        return DeformationField(y=y, grad=grad, mask=None, dim=2)

    def test_rigid_motion_exact(self):
        R = rotation_2d(0.3)
        f = rigid_motion_field(R, np.array([0.5, -1.0]))
        lat = CubeLattice(1.0, 2)
        S = cubic_set_from_indices(lat, [(i, 0) for i in range(8)])
        res = chain_rigidity(f, S)
        assert res.exact_rigid
        assert res.lhs_grad + res.lhs_poincare <= 1e-12
        assert np.allclose(res.R, R, atol=1e-10)

    def test_chain_ratio_slope_at_most_two(self):
        f = self._bend_field()
        rats = []
        Ns = [4, 8, 16, 32]
        for N in Ns:
            lat = CubeLattice(1.0, 2)
            S = cubic_set_from_indices(lat, [(i, 0) for i in range(N)])
            res = chain_rigidity(f, S)
            rats.append(res.lhs_grad / res.rhs)
        slope = np.polyfit(np.log(Ns), np.log(rats), 1)[0]
        assert slope <= 2.3

    def test_disconnected_set_rejected(self):
        lat = CubeLattice(1.0, 2)
        S = cubic_set_from_indices(lat, [(0, 0), (2, 0)])
        with pytest.raises(RigidityError):
            chain_rigidity(identity_field(2), S)

    def test_pinned_identity(self):
        f = identity_field(2)
        lat = CubeLattice(1.0, 2)
        S = cubic_set_from_indices(lat, [(0, 0), (1, 0)])
        res = chain_rigidity(f, S, pin={"cube": (0, 0), "fraction": 0.5})
        assert res.pinned
        assert np.allclose(res.R, np.eye(2))

    def test_pin_rejected_when_not_identity(self):
        R = rotation_2d(0.4)
        f = rigid_motion_field(R, np.zeros(2))
        lat = CubeLattice(1.0, 2)
        S = cubic_set_from_indices(lat, [(0, 0), (1, 0)])
        with pytest.raises(RigidityError):
            chain_rigidity(f, S, pin={"cube": (0, 0), "fraction": 0.5})

    def test_cube_rigidity_sine_perturbation(self):
        eps = 1e-2

        def y(p):
            p = np.atleast_2d(p)
            out = p.copy()
            out[:, 1] = out[:, 1] + eps * np.sin(p[:, 0])
            return out

        def grad(p):
            p = np.atleast_2d(p)
            G = np.tile(np.eye(2), (len(p), 1, 1))
            G[:, 1, 0] = eps * np.cos(p[:, 0])
            return G

        f = DeformationField(y=y, grad=grad, mask=None, dim=2)
        lat = CubeLattice(1.0, 2)
        res = cube_rigidity(f, lat, (0, 0))
        assert res.rhs > 0
        assert res.lhs / res.rhs <= 4.0


class TestPoincare:
    def test_constant_zero(self):
        def v(p):
            p = np.atleast_2d(p)
            return np.full((len(p), 2), 3.0)

        def g(p):
            return np.zeros((len(np.atleast_2d(p)), 2, 2))

        f = DeformationField(y=v, grad=g, mask=None, dim=2)
        lat = CubeLattice(1.0, 2)
        S = cubic_set_from_indices(lat, [(0, 0)])
        res = poincare_fit(f, S)
        assert res.lhs == pytest.approx(0.0, abs=1e-20)
        assert np.allclose(res.b, [3.0, 3.0])

    def test_affine_moment_exact(self):
        A = np.array([[1.0, 2.0], [0.0, -1.0]])

        def v(p):
            return np.atleast_2d(p) @ A.T

        def g(p):
            return np.tile(A, (len(np.atleast_2d(p)), 1, 1))

        f = DeformationField(y=v, grad=g, mask=None, dim=2)
        lat = CubeLattice(1.0, 2)
        S = cubic_set_from_indices(lat, [(0, 0)])
        res = poincare_fit(f, S)
        # second moment of the unit cube: integral |A(x-c)|^2 = |A|_F^2 / 12
        expect = np.sum(A**2) / 12.0
        # midpoint-grid variance carries a (1 - 1/n^2) factor; allow for it
        assert res.lhs == pytest.approx(expect, rel=5e-3)

    def test_linear_growth_slope(self):
        def v(p):
            p = np.atleast_2d(p)
            return np.stack([p[:, 0], np.zeros(len(p))], axis=1)

        def g(p):
            G = np.zeros((len(np.atleast_2d(p)), 2, 2))
            G[:, 0, 0] = 1.0
            return G

        f = DeformationField(y=v, grad=g, mask=None, dim=2)
        rats = []
        Ns = [4, 8, 16, 32]
        for N in Ns:
            lat = CubeLattice(1.0, 2)
            S = cubic_set_from_indices(lat, [(i, 0) for i in range(N)])
            rats.append(poincare_fit(f, S).ratio)
        slope = np.polyfit(np.log(Ns), np.log(rats), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.3)
