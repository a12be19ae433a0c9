"""Closed-form example geometries and deformations with their analytic facts."""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .geometry import (Curve, GeometryError, PlanarRegion, blob_curve,
                       circle_curve, ellipse_curve)
from .lattice import Box
from .rigidity import DeformationField


class InstanceError(ValueError):
    pass


@dataclass
class ExampleInstance:
    name: str
    omega: Box
    omega_tilde: Optional[Box]
    region: Optional[PlanarRegion]
    field: Optional[DeformationField]
    facts: dict
    extras: dict = dc_field(default_factory=dict)

    def scenario_json(self) -> str:
        data = {"name": self.name,
                "omega": [self.omega.lo.tolist(), self.omega.hi.tolist()],
                "facts": {k: v for k, v in self.facts.items()
                          if isinstance(v, (int, float, str, bool))}}
        if self.omega_tilde is not None:
            data["omega_tilde"] = [self.omega_tilde.lo.tolist(),
                                   self.omega_tilde.hi.tolist()]
        return json.dumps(data, indent=2)


def rounded_rectangle_curve(lo, hi, fillet: float, n: int = 256) -> Curve:
    """Closed spline tracing an axis-aligned rectangle with filleted corners."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    w, hgt = hi - lo
    r = min(fillet, 0.49 * w, 0.49 * hgt)
    # walk the outline counter-clockwise: 4 straight edges + 4 quarter arcs
    pieces = []
    corners = [  # (arc center, start angle) after each edge
        (np.array([hi[0] - r, lo[1] + r]), -np.pi / 2),
        (np.array([hi[0] - r, hi[1] - r]), 0.0),
        (np.array([lo[0] + r, hi[1] - r]), np.pi / 2),
        (np.array([lo[0] + r, lo[1] + r]), np.pi),
    ]
    edges = [
        (np.array([lo[0] + r, lo[1]]), np.array([hi[0] - r, lo[1]])),
        (np.array([hi[0], lo[1] + r]), np.array([hi[0], hi[1] - r])),
        (np.array([hi[0] - r, hi[1]]), np.array([lo[0] + r, hi[1]])),
        (np.array([lo[0], hi[1] - r]), np.array([lo[0], lo[1] + r])),
    ]
    edge_len = [np.linalg.norm(b - a) for a, b in edges]
    arc_len = np.pi * r / 2
    total = sum(edge_len) + 4 * arc_len
    for (a, b), L, (c, th0) in zip(edges, edge_len, corners):
        ne = max(2, int(np.ceil(n * L / total)))
        t = np.linspace(0, 1, ne, endpoint=False)[:, None]
        pieces.append(a + t * (b - a))
        na = max(3, int(np.ceil(n * arc_len / total)))
        th = th0 + np.linspace(0, np.pi / 2, na, endpoint=False)
        pieces.append(c + r * np.stack([np.cos(th), np.sin(th)], axis=1))
    return Curve(np.concatenate(pieces), closed=True)


# -- thin tunnel -----------------------------------------------------------

def gen_thin_tunnel(sigma: float, delta_t: float = 0.05,
                    fillet: float = 0.02) -> ExampleInstance:
    """Two blocks separated by a thin horizontal channel; the deformation is
    rigid on both sides but bends through the channel, forcing a macroscopic
    rotation mismatch at vanishing elastic cost."""
    if not (0 < sigma < np.pi / 2):
        raise InstanceError("bend angle out of (0, pi/2)")
    if not (0 < delta_t < 0.4):
        raise InstanceError("channel height out of range")
    y0, y1 = 0.5, 0.5 + delta_t
    omega = Box([-2.0, -2.0], [3.0, 3.0])
    omega_tilde = Box([-1.5, 0.2], [2.5, 0.8])
    lower = rounded_rectangle_curve([0.0, -2.0], [1.0, y0], fillet)
    upper = rounded_rectangle_curve([0.0, y1], [1.0, 3.0], fillet)
    region = PlanarRegion([lower, upper], check=False)

    tau1 = np.array([0.0, 1.0 / sigma - y0])
    c, s = np.cos(sigma), np.sin(sigma)
    R = np.array([[c, s], [-s, c]])
    # continuity across x1 = 1 pins the right-hand translation
    tau3 = np.array([(1.0 / sigma - y0) * s - c, (1.0 / sigma - y0) * c + s])

    def bend(p):
        r = (p[:, 1] - y0) + 1.0 / sigma
        th = sigma * p[:, 0]
        return np.stack([r * np.sin(th), r * np.cos(th)], axis=1)

    def bend_grad(p):
        r = (p[:, 1] - y0) + 1.0 / sigma
        th = sigma * p[:, 0]
        F = np.empty((len(p), 2, 2))
        F[:, 0, 0] = r * sigma * np.cos(th)
        F[:, 1, 0] = -r * sigma * np.sin(th)
        F[:, 0, 1] = np.sin(th)
        F[:, 1, 1] = np.cos(th)
        return F

    def u1(p):
        return p + tau1

    def u3(p):
        return p @ R.T + tau3

    def y_map(p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        out = np.empty_like(p)
        left = p[:, 0] < 0
        right = p[:, 0] > 1
        mid = ~left & ~right
        out[left] = u1(p[left])
        out[right] = u3(p[right])
        out[mid] = bend(p[mid])
        return out

    def y_grad(p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        F = np.empty((len(p), 2, 2))
        left = p[:, 0] < 0
        right = p[:, 0] > 1
        mid = ~left & ~right
        F[left] = np.eye(2)
        F[right] = R
        F[mid] = bend_grad(p[mid])
        return F

    def mask(p):
        p = np.atleast_2d(p)
        in_omega = ((p[:, 0] > omega.lo[0]) & (p[:, 0] < omega.hi[0])
                    & (p[:, 1] > omega.lo[1]) & (p[:, 1] < omega.hi[1]))
        free = (p[:, 0] < 0) | (p[:, 0] > 1) | ((p[:, 1] > y0) & (p[:, 1] < y1))
        return in_omega & free

    field = DeformationField(y=y_map, grad=y_grad, mask=mask, dim=2)
    facts = {
        "sigma": sigma,
        "delta_t": delta_t,
        "elastic_energy": sigma**2 * delta_t**3 / 3.0,
        "rotation_mismatch_sq": 4.0 * (1.0 - np.cos(sigma)),
    }
    extras = {"tunnel_box": Box([0.0, y0], [1.0, y1]),
              "rotation_right": R, "tau1": tau1,
              "branch_maps": {"left": u1, "mid": bend, "right": u3}}
    return ExampleInstance("thin-tunnel", omega, omega_tilde, region, field,
                           facts, extras)


# -- sharpness stripes -----------------------------------------------------

def gen_sharp_stripes(gamma: float, q: float, d: int = 2) -> ExampleInstance:
    """Unit square sliced into vertical stripes by thin slits; each stripe
    bends by a fixed small angle so the total rotation is macroscopic while
    the elastic energy scales like gamma^(4/q)."""
    if d != 2:
        raise InstanceError("stripes are a planar example")
    sigma = gamma ** (1.0 / q)
    m = int(np.ceil(1.0 / (3.0 * sigma)))
    if m < 2:
        raise InstanceError("gamma too large: fewer than 2 stripes fit")
    w = 1.0 / m
    slit_hw = min(w / 20.0, 0.004)
    omega = Box([0.0, 0.0], [1.0, 1.0])

    def stripe_of(p):
        return np.clip(np.floor(p[:, 0] / w).astype(int), 0, m - 1)

    def y_map(p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        k = stripe_of(p)
        th = sigma * (p[:, 1] + k)
        rad = 1.0 / sigma - (p[:, 0] - k * w)
        return np.stack([rad * np.sin(th), rad * np.cos(th)], axis=1)

    def y_grad(p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        k = stripe_of(p)
        th = sigma * (p[:, 1] + k)
        rad = 1.0 / sigma - (p[:, 0] - k * w)
        F = np.empty((len(p), 2, 2))
        F[:, 0, 0] = -np.sin(th)
        F[:, 1, 0] = -np.cos(th)
        F[:, 0, 1] = rad * sigma * np.cos(th)
        F[:, 1, 1] = -rad * sigma * np.sin(th)
        return F

    def mask(p):
        p = np.atleast_2d(p)
        inside = ((p[:, 0] > 0) & (p[:, 0] < 1)
                  & (p[:, 1] > 0) & (p[:, 1] < 1))
        frac = np.mod(p[:, 0], w)
        return inside & (np.minimum(frac, w - frac) > slit_hw)

    slits = [rounded_rectangle_curve([k * w - slit_hw, -0.1],
                                     [k * w + slit_hw, 1.1],
                                     fillet=slit_hw / 2, n=96)
             for k in range(1, m)]
    region = PlanarRegion(slits, check=False) if slits else None

    field = DeformationField(y=y_map, grad=y_grad, mask=mask, dim=2)
    facts = {
        "sigma": sigma, "m": m, "stripe_width": w,
        "elastic_energy_estimate": m * sigma**2 * w**3 / 3.0,
        "total_rotation": m * sigma,
    }
    return ExampleInstance("sharp-stripes", omega, None, region, field, facts,
                           {"slit_halfwidth": slit_hw})


def stripe_energy_and_forced_ratio(inst: ExampleInstance,
                                   n_across: int = 16,
                                   n_along: int = 48) -> dict:
    """Measured elastic energy and the residual of the best single rotation,
    integrated stripe by stripe on a midpoint grid."""
    from .rigidity import best_rotation
    from . import kernels

    m = inst.facts["m"]
    w = inst.facts["stripe_width"]
    s = inst.extras["slit_halfwidth"]
    field = inst.field
    all_F = []
    all_w = []
    for k in range(m):
        x0 = k * w + (s if k > 0 else 0.0)
        x1 = (k + 1) * w - (s if k < m - 1 else 0.0)
        xs = np.linspace(x0, x1, n_across, endpoint=False) \
            + (x1 - x0) / n_across / 2
        ys = np.linspace(0, 1, n_along, endpoint=False) + 0.5 / n_along
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        cell = (x1 - x0) / n_across * (1.0 / n_along)
        all_F.append(field.gradient(pts))
        all_w.append(np.full(len(pts), cell))
    F = np.concatenate(all_F)
    wts = np.concatenate(all_w)
    eps = float(np.sum(wts * kernels.dist2_so(F)))
    fit = best_rotation(F, wts)
    return {"epsilon": eps, "forced_residual": fit.residual,
            "ratio": fit.residual / eps}


# -- shrinking balls -------------------------------------------------------

def gen_ball(sigma: float, d: int = 2, q: float = 1.0,
             center=(0.0, 0.0)) -> ExampleInstance:
    """A ball of radius sigma with closed-form perimeter and curvature mass."""
    if sigma <= 0:
        raise InstanceError("radius must be positive")
    if d == 2:
        curve = circle_curve(sigma, center=center, n=max(24, 48))
        region = PlanarRegion([curve], check=False)
        facts = {"radius": sigma,
                 "perimeter": 2 * np.pi * sigma,
                 "curvature_integral": 2 * np.pi * sigma ** (1.0 - q),
                 "q": q}
        omega = Box(np.asarray(center) - 8 * sigma, np.asarray(center) + 8 * sigma)
        return ExampleInstance("ball", omega, None, region, None, facts,
                               {"curve": curve})
    if d == 3:
        from .mesh import icosphere
        mesh = icosphere(sigma, center=(*center, 0.0) if len(center) == 2
                         else center, subdivisions=3)
        facts = {"radius": sigma,
                 "area": 4 * np.pi * sigma**2,
                 "curvature_integral": 4 * np.pi * 2 ** (q / 2.0)
                 * sigma ** (2.0 - q),
                 "q": q}
        omega = Box([-8 * sigma] * 3, [8 * sigma] * 3)
        return ExampleInstance("ball3", omega, None, None, None, facts,
                               {"mesh": mesh})
    raise InstanceError("d must be 2 or 3")


# -- spiky sets ------------------------------------------------------------

def gen_spiky_set(n_spikes: int, scale_ratio: float = 0.75,
                  seed: int = 3) -> PlanarRegion:
    """A smooth blob, optionally with smooth radial spikes and a cascade of
    shrinking satellite disks."""
    if not (0 < scale_ratio < 1):
        raise InstanceError("scale ratio must lie in (0,1)")
    rng = np.random.default_rng(seed)
    n = 1024
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    r = np.ones(n)
    for k in range(2, 6):
        r += 0.08 * rng.uniform(-1, 1) / k * np.cos(k * th + rng.uniform(0, 2 * np.pi))
    for i in range(n_spikes):
        phi_i = 2 * np.pi * i / max(n_spikes, 1) + 0.4
        dphi = np.angle(np.exp(1j * (th - phi_i)))
        wphi = 0.35
        sel = np.abs(dphi) < wphi
        r[sel] += 0.55 * (1.0 - (dphi[sel] / wphi) ** 2) ** 2
    pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    curves = [Curve(pts[::4], closed=True)]
    if n_spikes > 0:
        x = 1.9
        radius = 0.32 * scale_ratio
        for _ in range(3):
            x += radius * 1.5
            curves.append(circle_curve(radius, center=(x, 0.0), n=24))
            x += radius * 1.5
            radius *= scale_ratio
    region = PlanarRegion(curves, check=True)
    return region


# -- graph films -----------------------------------------------------------

def gen_graph_film(kind: str, amplitude: float = 0.2, base: float = 0.5,
                   M: float = 1.0, delta: float = 1e-3,
                   strain: float = 0.1) -> ExampleInstance:
    """Film profile h on (0,1) plus a compatible small-strain deformation
    y = id + delta*u with u equal to a fixed affine stretch below the film."""
    kinds = {"flat", "bump", "notch", "sine"}
    if kind not in kinds:
        raise InstanceError(f"unknown profile kind; choose from {sorted(kinds)}")

    def h(x):
        x = np.asarray(x, dtype=float)
        if kind == "flat":
            return np.full_like(x, base)
        if kind == "sine":
            return base + amplitude * np.sin(2 * np.pi * x)
        if kind == "bump":
            return base + amplitude * np.exp(-((x - 0.5) / 0.12) ** 2)
        bump = amplitude * np.exp(-((x - 0.5) / 0.02) ** 2)
        return base - bump

    hv = h(np.linspace(0, 1, 2048))
    if hv.min() < 0 or hv.max() > M:
        raise InstanceError("profile leaves the admissible range [0, M]")

    A = np.array([[strain, 0.0], [0.0, -strain / 3.0]])

    def u(p):
        p = np.atleast_2d(p)
        return p @ A.T

    def y_map(p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        return p + delta * u(p)

    def y_grad(p):
        p = np.atleast_2d(p)
        return np.broadcast_to(np.eye(2) + delta * A, (len(p), 2, 2)).copy()

    omega = Box([0.0, -1.0], [1.0, M + 1.0])
    field = DeformationField(y=y_map, grad=y_grad, dim=2)
    facts = {"kind": kind, "amplitude": amplitude, "delta": delta,
             "strain": strain, "M": M,
             "strain_energy_density": 2.0 * (strain**2 + (strain / 3.0) ** 2)}
    return ExampleInstance(f"film-{kind}", omega, None, None, field, facts,
                           {"h": h, "u": u, "u_grad": lambda p: np.broadcast_to(
                               A, (len(np.atleast_2d(p)), 2, 2)).copy()})


CATALOG = [
    ("tunnel", "two blocks joined through a thin bending channel"),
    ("sharp-stripes", "slit square attaining the worst-case rate"),
    ("ball", "shrinking disk/sphere with closed-form curvature mass"),
    ("spiky", "blob with spikes and shrinking satellite disks"),
    ("film-flat", "flat film profile"),
    ("film-bump", "smooth bump film profile"),
    ("film-notch", "narrow notch film profile"),
    ("film-sine", "sinusoidal film profile"),
    ("curves.json", "custom curves from a JSON file"),
    ("mesh.off/.stl", "custom surface mesh from OFF or binary STL"),
    ("schedule", "parameter-schedule demonstration"),
]
