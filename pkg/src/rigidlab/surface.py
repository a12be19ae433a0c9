"""Surface functionals: curvature integrals, anisotropic perimeter, and the
small-area / large-curvature dichotomy checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Curve, NormPhi, PlanarRegion, euclidean_norm
from .lattice import Box
from .mesh import SurfaceMesh
from .quadrature import segment_quadrature


class SurfaceError(ValueError):
    pass


def _window_mask(points: np.ndarray, window: Box | None) -> np.ndarray:
    if window is None:
        return np.ones(len(points), dtype=bool)
    return window.contains(points)


def _curve_quadrature(curve: Curve, n_quad: int = 16):
    t, w = segment_quadrature(curve.knots, n_quad)
    pts = np.atleast_2d(curve.point(t))
    speed = np.linalg.norm(np.atleast_2d(curve.velocity(t)), axis=1)
    return t, w * speed, pts


def curvature_integral(shape, q: float = 2.0, window: Box | None = None,
                       n_quad: int = 16) -> float:
    """Integral of |second fundamental form|^q over the boundary in the window.

    For planar regions this is the line integral of |kappa|^q; for meshes it is
    the per-vertex (kappa_1^2 + kappa_2^2)^(q/2) weighted by lumped areas.
    """
    if q < 0:
        raise SurfaceError("q must be nonnegative")
    if isinstance(shape, SurfaceMesh):
        a2 = shape.second_fundamental_norm_sq()
        if not np.all(np.isfinite(a2)):
            bad = int(np.argmax(~np.isfinite(a2)))
            raise SurfaceError(f"non-finite curvature at vertex {bad}")
        mask = _window_mask(shape.vertices, window)
        return float(np.sum((a2[mask] ** (q / 2.0)) * shape.vertex_areas()[mask]))
    curves = shape.boundary if isinstance(shape, PlanarRegion) else [shape]
    total = 0.0
    for curve in curves:
        t, dl, pts = _curve_quadrature(curve, n_quad)
        kappa = np.abs(np.asarray(curve.curvature(t)))
        if not np.all(np.isfinite(kappa)):
            bad = t[np.argmax(~np.isfinite(kappa))]
            raise SurfaceError(f"non-finite curvature at parameter {bad}")
        mask = _window_mask(pts, window)
        total += float(np.sum((kappa[mask] ** q) * dl[mask]))
    return total


def anisotropic_perimeter(shape, phi: NormPhi | None = None,
                          window: Box | None = None, n_quad: int = 16) -> float:
    """Surface measure weighted by the norm phi evaluated at unit normals."""
    if isinstance(shape, SurfaceMesh):
        if phi is None:
            phi = euclidean_norm(3)
        areas, normals = shape.triangle_areas_normals()
        centers = shape.vertices[shape.triangles].mean(axis=1)
        mask = _window_mask(centers, window)
        return float(np.sum(np.asarray(phi(normals[mask])) * areas[mask]))
    if phi is None:
        phi = euclidean_norm(2)
    curves = shape.boundary if isinstance(shape, PlanarRegion) else [shape]
    total = 0.0
    for curve in curves:
        t, dl, pts = _curve_quadrature(curve, n_quad)
        normals = np.atleast_2d(curve.normal(t))
        mask = _window_mask(pts, window)
        total += float(np.sum(np.asarray(phi(normals[mask])) * dl[mask]))
    return total


def polygon_perimeter_phi(polygon, phi: NormPhi | None = None) -> float:
    """Anisotropic perimeter of a shapely polygon or multipolygon."""
    if phi is None:
        phi = euclidean_norm(2)
    geoms = getattr(polygon, "geoms", [polygon])
    total = 0.0
    for geom in geoms:
        rings = [geom.exterior, *geom.interiors]
        for ring in rings:
            xy = np.asarray(ring.coords)
            seg = np.diff(xy, axis=0)
            lengths = np.linalg.norm(seg, axis=1)
            keep = lengths > 0
            seg, lengths = seg[keep], lengths[keep]
            normals = np.stack([seg[:, 1], -seg[:, 0]], axis=1) / lengths[:, None]
            total += float(np.sum(np.asarray(phi(normals)) * lengths))
    return total


def surface_energy(shape, phi: NormPhi, gamma: float, q: float,
                   window: Box | None = None, n_quad: int = 16) -> float:
    """Anisotropic perimeter plus gamma times the curvature integral."""
    if not (0.0 < gamma < 1.0):
        raise SurfaceError(f"gamma must lie in (0,1), got {gamma}")
    return (anisotropic_perimeter(shape, phi, window, n_quad)
            + gamma * curvature_integral(shape, q, window, n_quad))


@dataclass
class GaussBonnetReport:
    total_angle_defect: float
    euler_characteristic: int
    residual: float


def gauss_bonnet_defect(mesh: SurfaceMesh) -> GaussBonnetReport:
    """Total angle defect against 2*pi*chi for a closed mesh."""
    if not mesh.is_closed():
        raise SurfaceError("mesh has boundary; Gauss-Bonnet check needs a closed mesh")
    defect = float(mesh.angle_defects().sum())
    chi = mesh.euler_characteristic()
    return GaussBonnetReport(defect, chi, abs(defect - 2.0 * np.pi * chi))


@dataclass
class MeanCurvatureReport:
    integral_h_sq: float
    integral_a_sq: float
    integral_gauss: float
    identity_residual: float  # relative residual of |A|^2 = |H|^2 - 2 G


def mean_curvature_integral(mesh: SurfaceMesh) -> MeanCurvatureReport:
    """Discrete integral of |H|^2 and the identity linking it to |A|^2 and the
    total Gaussian curvature (from angle defects)."""
    if not mesh.is_closed():
        raise SurfaceError("mesh has boundary; mean-curvature identity needs a closed mesh")
    va = mesh.vertex_areas()
    h = mesh.cotangent_mean_curvature()
    int_h2 = float(np.sum(h * h * va))
    int_a2 = float(np.sum(mesh.second_fundamental_norm_sq() * va))
    int_g = float(mesh.angle_defects().sum())  # Gauss-Bonnet: integral of G
    rhs = int_h2 - 2.0 * int_g
    scale = max(abs(int_a2), abs(rhs), 1e-300)
    return MeanCurvatureReport(int_h2, int_a2, int_g, abs(int_a2 - rhs) / scale)


@dataclass
class CurveLowerBoundReport:
    lhs: float          # integral of |kappa|^q
    rhs: float          # diam^(1-q)
    passed: bool


def curve_lower_bound_check(curve: Curve, q: float, n_quad: int = 16,
                            slack: float = 1e-6) -> CurveLowerBoundReport:
    """Closed-curve bound: the |kappa|^q integral dominates diam^(1-q)."""
    if q < 1:
        raise SurfaceError("q must be >= 1")
    if not curve.closed:
        raise SurfaceError("bound applies to closed curves")
    lhs = curvature_integral(curve, q=q, n_quad=n_quad)
    rhs = curve.diameter() ** (1.0 - q)
    return CurveLowerBoundReport(lhs, rhs, lhs >= rhs * (1.0 - slack))


def c_lambda_2d(Lambda: float, q: float) -> float:
    return (Lambda + 1.0) ** (-1.0 / q)


def c_lambda_3d(Lambda: float, q: float, alpha0: float = 0.1, c0: float = 0.01) -> float:
    """Admissible-scale constant in 3d; alpha0/c0 are configurable placeholders."""
    a = c0 ** ((1.0 - q) / q) * 4.0 * alpha0 * (Lambda + 1.0) ** (-1.0 / q)
    b = (4.0 * np.pi) ** 0.5 * c0 ** (1.0 / q - 0.5) * (Lambda + 1.0) ** (-1.0 / q)
    return float(min(a, b))


@dataclass
class SlicingReport:
    area: float
    curv: float
    rho: float
    area_small: bool
    curv_large: bool
    implication_holds: bool


def slicing_check(shape, cube_center, rho: float, gamma: float, q: float,
                  Lambda: float, c0: float = 1.0, alpha0_3d: float = 0.1,
                  c0_3d: float = 0.01, dim: int = 2) -> SlicingReport:
    """Check (area < c0 rho^(d-1)) => (gamma * curvature energy > Lambda rho^(d-1))
    on the 8x enlarged cube window.

    The admissible-scale precondition rho <= c_Lambda * gamma^(1/q) is enforced;
    so is nonempty boundary intersection with the 3x window.
    """
    center = np.asarray(cube_center, dtype=float)
    d = dim
    cl = c_lambda_2d(Lambda, q) if d == 2 else c_lambda_3d(Lambda, q, alpha0_3d, c0_3d)
    if rho > cl * gamma ** (1.0 / q) * (1 + 1e-12):
        raise SurfaceError(
            f"rho={rho} violates the admissible-scale bound rho <= "
            f"c_Lambda*gamma^(1/q) = {cl * gamma ** (1.0 / q):.6g}")
    w3 = Box(tuple(center - 1.5 * rho), tuple(center + 1.5 * rho))
    w8 = Box(tuple(center - 4.0 * rho), tuple(center + 4.0 * rho))
    if _boundary_measure(shape, w3) <= 0.0:
        raise SurfaceError("boundary does not meet the 3x cube window")
    area = _boundary_measure(shape, w8)
    curv = gamma * curvature_integral(shape, q=q, window=w8)
    thresh = rho ** (d - 1)
    area_small = area < c0 * thresh
    curv_large = curv > Lambda * thresh
    return SlicingReport(area, curv, rho, area_small, curv_large,
                         (not area_small) or curv_large)


def _boundary_measure(shape, window: Box | None) -> float:
    if isinstance(shape, SurfaceMesh):
        areas, _ = shape.triangle_areas_normals()
        centers = shape.vertices[shape.triangles].mean(axis=1)
        return float(np.sum(areas[_window_mask(centers, window)]))
    curves = shape.boundary if isinstance(shape, PlanarRegion) else [shape]
    total = 0.0
    for curve in curves:
        _, dl, pts = _curve_quadrature(curve)
        total += float(np.sum(dl[_window_mask(pts, window)]))
    return total
