import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigidlab.geometry import (Curve, GeometryError, NormPhi, PlanarRegion,
                               blob_curve, circle_curve, ellipse_curve,
                               euclidean_norm, l1_norm, linf_norm)


class TestCurve:
    def test_circle_length(self):
        c = circle_curve(1.0, n=64)
        assert c.length() == pytest.approx(2 * np.pi, rel=1e-6)

    def test_circle_curvature_constant(self):
        c = circle_curve(0.5, n=256)
        t = np.linspace(0, 1, 100, endpoint=False)
        assert np.max(np.abs(np.abs(c.curvature(t)) - 2.0)) < 5e-4

    def test_circle_diameter(self):
        c = circle_curve(1.5, n=64)
        assert c.diameter() == pytest.approx(3.0, rel=1e-6)

    def test_ellipse_area_via_polygon(self):
        # pi*a*b for semi-axes (1, 0.5)
        region = PlanarRegion([ellipse_curve(1.0, 0.5, n=128)], check=False)
        assert region.area() == pytest.approx(np.pi * 0.5, rel=1e-3)

    def test_open_curve_endpoints_interpolated(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.3], [2.0, 0.0]])
        c = Curve(pts, closed=False)
        assert np.allclose(c.point([0.0])[0], pts[0])
        assert np.allclose(c.point([1.0])[0], pts[-1])

    def test_closed_curve_needs_enough_points(self):
        with pytest.raises(GeometryError):
            Curve(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), closed=True)

    def test_transformed_preserves_length(self):
        c = blob_curve(1.0)
        th = 0.7
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        c2 = c.transformed(rotation=R, translation=np.array([3.0, -1.0]))
        assert c2.length() == pytest.approx(c.length(), rel=1e-10)


class TestPlanarRegion:
    def test_contains_disk(self):
        region = PlanarRegion([circle_curve(1.0, n=64)], check=False)
        pts = np.array([[0.0, 0.0], [0.5, 0.5], [1.5, 0.0]])
        assert list(region.contains(pts)) == [True, True, False]

    def test_disjoint_components_union_area(self):
        a = circle_curve(1.0, n=64)
        b = circle_curve(0.5, center=(5.0, 0.0), n=64)
        region = PlanarRegion([a, b], check=False)
        expect = np.pi * 1.0 + np.pi * 0.25
        assert region.area() == pytest.approx(expect, rel=1e-4)

    def test_nested_curve_makes_hole(self):
        outer = circle_curve(1.0, n=64)
        inner = circle_curve(0.5, n=64)
        region = PlanarRegion([outer, inner], check=False)
        assert region.area() == pytest.approx(np.pi * (1.0 - 0.25), rel=1e-4)

    def test_intersecting_curves_rejected(self):
        a = circle_curve(1.0, n=64)
        b = circle_curve(1.0, center=(1.0, 0.0), n=64)
        with pytest.raises(GeometryError):
            PlanarRegion([a, b], check=True)


class TestNormPhi:
    def test_euclidean_on_unit_vectors(self):
        phi = euclidean_norm()
        v = np.array([[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]])
        assert np.allclose(phi(v), 1.0)

    def test_l1_linf_values(self):
        v = np.array([[1.0, 1.0]])
        assert l1_norm()(v)[0] == pytest.approx(2.0)
        assert linf_norm()(v)[0] == pytest.approx(1.0)

    def test_phi_min_max(self):
        phi = l1_norm()
        assert phi.phi_min == pytest.approx(1.0, rel=1e-3)
        assert phi.phi_max == pytest.approx(np.sqrt(2.0), rel=1e-3)

    def test_non_homogeneous_rejected(self):
        with pytest.raises(GeometryError):
            NormPhi(lambda v: np.linalg.norm(v, axis=-1) + 1.0, dim=2)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.01, 100.0),
           st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
    def test_homogeneity_and_symmetry(self, s, x, y):
        phi = l1_norm()
        v = np.array([[x, y]])
        if abs(x) + abs(y) < 1e-12:
            return
        assert phi(s * v)[0] == pytest.approx(s * phi(v)[0], rel=1e-10)
        assert phi(-v)[0] == pytest.approx(phi(v)[0], rel=1e-10)
