"""Planar regions bounded by spline curves, and norms for anisotropic perimeter."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from shapely.geometry import Polygon
from shapely.ops import unary_union
import shapely

_RNG_HOMOG = np.random.default_rng(20240611)


class GeometryError(ValueError):
    pass


class Curve:
    """Cubic spline curve through control points, optionally periodic (closed)."""

    def __init__(self, control_points, closed: bool = True):
        pts = np.asarray(control_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise GeometryError("control points must be (n,2)")
        if closed and pts.shape[0] < 8:
            raise GeometryError("closed curves need at least 8 control points")
        self.closed = closed
        self.control_points = pts
        if closed:
            if np.allclose(pts[0], pts[-1]):
                pts = pts[:-1]
            knots = np.linspace(0.0, 1.0, len(pts) + 1)
            data = np.vstack([pts, pts[:1]])
            self._spline = CubicSpline(knots, data, bc_type="periodic")
            self._t1 = 1.0
        else:
            knots = np.linspace(0.0, 1.0, len(pts))
            self._spline = CubicSpline(knots, pts, bc_type="natural")
            self._t1 = 1.0
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        self.n_segments = len(knots) - 1
        self.knots = knots

    def point(self, t):
        return self._spline(np.mod(t, self._t1) if self.closed else t)

    def velocity(self, t):
        return self._d1(np.mod(t, self._t1) if self.closed else t)

    def acceleration(self, t):
        return self._d2(np.mod(t, self._t1) if self.closed else t)

    def curvature(self, t):
        """Signed curvature (x'y'' - y'x'') / |c'|^3."""
        v = np.atleast_2d(self.velocity(t))
        a = np.atleast_2d(self.acceleration(t))
        speed = np.linalg.norm(v, axis=1)
        if np.any(speed < 1e-14):
            raise GeometryError("degenerate parametrization: zero speed")
        num = v[:, 0] * a[:, 1] - v[:, 1] * a[:, 0]
        out = num / speed**3
        return out if np.ndim(t) else float(out[0])

    def normal(self, t):
        """Unit normal, tangent rotated by -90 deg (outward for a CCW curve)."""
        v = np.atleast_2d(self.velocity(t))
        speed = np.linalg.norm(v, axis=1, keepdims=True)
        n = np.stack([v[:, 1], -v[:, 0]], axis=1) / speed
        return n if np.ndim(t) else n[0]

    def sample(self, n: int) -> np.ndarray:
        t = np.linspace(0.0, self._t1, n, endpoint=not self.closed)
        return np.atleast_2d(self.point(t))

    def length(self, n_quad: int = 16) -> float:
        from .quadrature import segment_quadrature
        t, w = segment_quadrature(self.knots, n_quad)
        return float(np.sum(w * np.linalg.norm(self._d1(t), axis=1)))

    def diameter(self, n: int = 256) -> float:
        p = self.sample(n)
        try:
            from scipy.spatial import ConvexHull
            hull = p[ConvexHull(p).vertices]
        except Exception:
            hull = p
        d2 = np.sum((hull[:, None, :] - hull[None, :, :]) ** 2, axis=-1)
        return float(np.sqrt(d2.max()))

    def transformed(self, rotation=None, translation=None) -> "Curve":
        pts = self.control_points
        if rotation is not None:
            pts = pts @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            pts = pts + np.asarray(translation, dtype=float)
        return Curve(pts, closed=self.closed)


def circle_curve(radius: float, center=(0.0, 0.0), n: int = 32) -> Curve:
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = np.stack([np.cos(th), np.sin(th)], axis=1) * radius + np.asarray(center)
    return Curve(pts, closed=True)


def ellipse_curve(a: float, b: float, center=(0.0, 0.0), n: int = 48) -> Curve:
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = np.stack([a * np.cos(th), b * np.sin(th)], axis=1) + np.asarray(center)
    return Curve(pts, closed=True)


def blob_curve(radius: float = 1.0, center=(0.0, 0.0), wobble: float = 0.15,
               n: int = 64, seed: int = 7) -> Curve:
    """Smooth star-shaped perturbation of a circle."""
    rng = np.random.default_rng(seed)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    r = radius * np.ones(n)
    for k in range(2, 6):
        amp = wobble * radius * rng.uniform(-1, 1) / k
        phase = rng.uniform(0, 2 * np.pi)
        r += amp * np.cos(k * th + phase)
    pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1) + np.asarray(center)
    return Curve(pts, closed=True)


class PlanarRegion:
    """Open region bounded by disjoint closed spline curves.

    The first curve is the main outer boundary (counter-clockwise); further
    curves nested inside it are holes, and curves disjoint from it are
    additional connected components.
    """

    def __init__(self, boundary: Sequence[Curve], check: bool = True,
                 poly_samples: int = 512):
        self.boundary = list(boundary)
        for c in self.boundary:
            if not c.closed:
                raise GeometryError("region boundaries must be closed curves")
        self._poly_samples = poly_samples
        self._polygon = None
        if check:
            self._check_simple()

    def _check_simple(self, n: int = 256):
        rings = [c.sample(n) for c in self.boundary]
        for i, ring in enumerate(rings):
            lr = Polygon(ring)
            if not lr.is_valid:
                raise GeometryError(f"boundary curve {i} self-intersects at sampling resolution")
        for i in range(len(rings)):
            for j in range(i + 1, len(rings)):
                if Polygon(rings[i]).boundary.intersects(Polygon(rings[j]).boundary):
                    raise GeometryError(f"boundary curves {i} and {j} intersect")

    def polygon(self, n: int | None = None) -> Polygon:
        """Polygonal approximation as a shapely polygon (outer minus holes)."""
        if n is None and self._polygon is not None:
            return self._polygon
        ns = n or self._poly_samples
        outer = Polygon(self.boundary[0].sample(ns))
        rest = [Polygon(c.sample(ns)) for c in self.boundary[1:]]
        poly = outer
        inner = [h for h in rest if outer.contains(h.representative_point())]
        extra = [h for h in rest if not outer.contains(h.representative_point())]
        if inner:
            poly = poly.difference(unary_union(inner))
        if extra:
            poly = unary_union([poly] + extra)
        if n is None:
            self._polygon = poly
        return poly

    @property
    def boundaries(self) -> list:
        return self.boundary

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return shapely.contains_xy(self.polygon(), p[:, 0], p[:, 1])

    def area(self) -> float:
        return float(self.polygon().area)

    def transformed(self, rotation=None, translation=None) -> "PlanarRegion":
        return PlanarRegion([c.transformed(rotation, translation) for c in self.boundary],
                            check=False, poly_samples=self._poly_samples)


def curves_from_json(path_or_text: str) -> list[Curve]:
    """Load curves from JSON: a list of {"points": [[x,y],...], "closed": bool}."""
    try:
        data = json.loads(path_or_text)
    except json.JSONDecodeError:
        with open(path_or_text) as fh:
            data = json.load(fh)
    curves = []
    for entry in data:
        curves.append(Curve(entry["points"], closed=entry.get("closed", True)))
    return curves


@dataclass
class NormPhi:
    """A norm on R^d evaluated at surface normals.

    User evaluators are symmetrized, phi(v) -> max(phi(v), phi(-v)), so the
    weighted surface measure does not depend on the orientation convention.
    """

    func: Callable[[np.ndarray], np.ndarray]
    dim: int = 2
    name: str = "custom"
    phi_min: float = field(init=False, default=0.0)
    phi_max: float = field(init=False, default=0.0)

    def __post_init__(self):
        raw = self.func
        sphere = _unit_sphere_samples(self.dim)
        vals_p = np.asarray(raw(sphere), dtype=float)
        vals_m = np.asarray(raw(-sphere), dtype=float)
        if np.max(np.abs(vals_p - vals_m)) > 1e-9 * max(1.0, np.max(np.abs(vals_p))):
            warnings.warn("norm is not even; symmetrizing phi(v) := max(phi(v), phi(-v))")
        self.func = lambda v: np.maximum(np.asarray(raw(np.atleast_2d(v)), dtype=float),
                                         np.asarray(raw(-np.atleast_2d(v)), dtype=float))
        self._check_homogeneity(raw)
        vals = np.maximum(vals_p, vals_m)
        self.phi_min = float(vals.min())
        self.phi_max = float(vals.max())
        if not self.phi_min > 0:
            raise GeometryError("norm must be positive on the unit sphere")

    def _check_homogeneity(self, raw, n: int = 1000, tol: float = 1e-12):
        v = _RNG_HOMOG.normal(size=(n, self.dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        t = _RNG_HOMOG.uniform(-2.0, 2.0, size=n)
        lhs = np.asarray(raw(v * t[:, None]), dtype=float)
        rhs = np.abs(t) * np.asarray(raw(v), dtype=float)
        if np.max(np.abs(lhs - rhs)) > tol * max(1.0, np.max(np.abs(rhs))):
            raise GeometryError("evaluator is not positively 1-homogeneous")

    def __call__(self, v) -> np.ndarray:
        out = self.func(np.atleast_2d(np.asarray(v, dtype=float)))
        return out if np.ndim(v) > 1 else float(out[0])


def _unit_sphere_samples(dim: int, n: int = 4096) -> np.ndarray:
    if dim == 2:
        th = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    rng = np.random.default_rng(0)
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def euclidean_norm(dim: int = 2) -> NormPhi:
    return NormPhi(lambda v: np.linalg.norm(np.atleast_2d(v), axis=1), dim=dim,
                   name="euclidean")


def l1_norm(dim: int = 2) -> NormPhi:
    return NormPhi(lambda v: np.sum(np.abs(np.atleast_2d(v)), axis=1), dim=dim,
                   name="l1")


def linf_norm(dim: int = 2) -> NormPhi:
    return NormPhi(lambda v: np.max(np.abs(np.atleast_2d(v)), axis=1), dim=dim,
                   name="linf")
