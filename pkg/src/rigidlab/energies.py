"""Nonlinear elastic energies, their quadratic linearizations, vanishing-
hardness parameter schedules, and the void/film functionals built on them."""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .geometry import NormPhi, PlanarRegion, euclidean_norm
from .lattice import Box
from .rigidity import DeformationField
from .surface import anisotropic_perimeter, curvature_integral


class EnergyError(ValueError):
    pass


@dataclass
class Infeasible:
    """A functional value of +infinity, tagged with the violated constraint."""
    constraint: str
    detail: str = ""

    def __bool__(self):  # pragma: no cover - convenience
        return False


def _sym(G):
    return 0.5 * (G + np.swapaxes(G, -1, -2))


# -- energy densities ------------------------------------------------------

@dataclass
class EnergyDensity:
    """Frame-indifferent stored energy W acting on batches of gradients."""
    name: str
    w: Callable[[np.ndarray], np.ndarray]
    quadratic_closed_form: Optional[Callable] = None

    def __call__(self, F) -> np.ndarray:
        F = np.asarray(F, dtype=float)
        single = F.ndim == 2
        vals = self.w(F[None] if single else F)
        return float(vals[0]) if single else np.asarray(vals)


def _w1(F):
    return kernels.dist2_so(F)


def _w2(F):
    d = F.shape[-1]
    C = np.einsum("nji,njk->nik", F, F) - np.eye(d)[None]
    return 0.25 * np.einsum("nij,nij->n", C, C)


def _q_isotropic(G):
    S = _sym(np.asarray(G, dtype=float))
    return 2.0 * np.einsum("...ij,...ij->...", S, S)


W1 = EnergyDensity("dist2_SO", _w1, _q_isotropic)
W2 = EnergyDensity("quarter_CmI2", _w2, _q_isotropic)


# -- quadratic form (Hessian at the identity) ------------------------------

class QuadraticForm:
    """The Hessian form of W at the identity, G -> D2W(Id) G : G."""

    def __init__(self, tensor: Optional[np.ndarray] = None,
                 closed_form: Optional[Callable] = None, dim: int = 2):
        if tensor is None and closed_form is None:
            raise EnergyError("need a Hessian tensor or a closed form")
        self.tensor = tensor
        self.closed_form = closed_form
        self.dim = dim

    def __call__(self, G) -> np.ndarray:
        G = np.asarray(G, dtype=float)
        if self.closed_form is not None:
            out = self.closed_form(G)
            return float(out) if G.ndim == 2 else np.asarray(out)
        single = G.ndim == 2
        B = G[None] if single else G
        out = np.einsum("ijkl,nij,nkl->n", self.tensor, B, B)
        return float(out[0]) if single else out

    @classmethod
    def for_energy(cls, W: EnergyDensity, dim: int = 2,
                   step: float = 1e-4) -> "QuadraticForm":
        if W.quadratic_closed_form is not None:
            return cls(closed_form=W.quadratic_closed_form, dim=dim)
        return cls(tensor=hessian_at_identity(W, dim, step), dim=dim)

    def symmetric_spectrum(self) -> np.ndarray:
        """Eigenvalues of the form restricted to symmetric matrices."""
        d = self.dim
        basis = []
        for i in range(d):
            E = np.zeros((d, d))
            E[i, i] = 1.0
            basis.append(E)
        for i in range(d):
            for j in range(i + 1, d):
                E = np.zeros((d, d))
                E[i, j] = E[j, i] = 1.0 / np.sqrt(2)
                basis.append(E)
        n = len(basis)
        M = np.empty((n, n))
        for a in range(n):
            for b in range(n):
                M[a, b] = 0.25 * (self(basis[a] + basis[b])
                                  - self(basis[a] - basis[b]))
        return np.linalg.eigvalsh(M)


def hessian_at_identity(W: EnergyDensity, dim: int = 2,
                        step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of W at Id with one Richardson pass,
    symmetrized in the (ij)<->(kl) pairing."""
    eye = np.eye(dim)

    def second(i, j, k, l, h):
        A = np.zeros((dim, dim))
        A[i, j] = h
        B = np.zeros((dim, dim))
        B[k, l] = h
        return (W(eye + A + B) - W(eye + A - B)
                - W(eye - A + B) + W(eye - A - B)) / (4 * h * h)

    H = np.empty((dim, dim, dim, dim))
    for i in range(dim):
        for j in range(dim):
            for k in range(dim):
                for l in range(dim):
                    c, f = second(i, j, k, l, step), second(i, j, k, l, step / 2)
                    H[i, j, k, l] = (4 * f - c) / 3.0
    H = 0.5 * (H + np.transpose(H, (2, 3, 0, 1)))
    return H


# -- schedules -------------------------------------------------------------

@dataclass
class Schedule:
    """delta -> (gamma_delta, kappa_delta) with gamma_delta = gamma0 delta^p."""
    d: int
    q: float
    p: float
    gamma0: float = 1.0
    deltas: np.ndarray = dc_field(
        default_factory=lambda: np.logspace(-60, -1, 60))

    def gamma(self, delta):
        return self.gamma0 * np.asarray(delta, dtype=float) ** self.p

    def kappa(self, delta):
        delta = np.asarray(delta, dtype=float)
        return delta ** (-1.0 / 6.0) * self.gamma(delta) ** (-self.d / (2 * self.q))

    @property
    def at_threshold(self) -> bool:
        return self.p >= self.q / (3.0 * self.d) - 1e-15


@dataclass
class ScheduleReport:
    rows: list                  # (delta, delta*kappa^3, gamma^{d/q} kappa, delta^{-q/3d} gamma)
    delta_kappa3_vanishes: bool
    gamma_kappa_diverges: bool
    rate_diverges: bool
    threshold_flagged: bool

    @property
    def ok(self) -> bool:
        return (self.delta_kappa3_vanishes and self.gamma_kappa_diverges
                and self.rate_diverges and not self.threshold_flagged)

    def to_json(self) -> str:
        return json.dumps({
            "rows": [{"delta": d, "delta_kappa3": a, "gamma_dq_kappa": b,
                      "rate": c} for d, a, b, c in self.rows],
            "delta_kappa3_vanishes": self.delta_kappa3_vanishes,
            "gamma_kappa_diverges": self.gamma_kappa_diverges,
            "rate_diverges": self.rate_diverges,
            "threshold_flagged": self.threshold_flagged,
            "ok": self.ok,
        }, indent=2)


def schedule_check(s: Schedule) -> ScheduleReport:
    deltas = np.sort(np.asarray(s.deltas, dtype=float))[::-1]  # decreasing
    kap = s.kappa(deltas)
    gam = s.gamma(deltas)
    a = deltas * kap**3
    b = gam ** (s.d / s.q) * kap
    c = deltas ** (-s.q / (3.0 * s.d)) * gam
    rows = list(zip(deltas.tolist(), a.tolist(), b.tolist(), c.tolist()))
    dk_ok = bool(np.all(np.diff(a) < 1e-15) and a[-1] < 1e-2)
    gk_ok = bool(np.all(np.diff(b) > -1e-15) and b[-1] > 1e2)
    rate_ok = bool(np.all(np.diff(c) > -1e-15) and c[-1] > c[0] * 1e2)
    return ScheduleReport(rows, dk_ok, gk_ok, rate_ok, s.at_threshold)


# -- limit displacements ---------------------------------------------------

@dataclass
class Jump:
    points: np.ndarray          # (n,2) polyline

    def lengths_midpoints_normals(self, n_sub: int = 64):
        P = np.asarray(self.points, dtype=float)
        fine = []
        for a, b in zip(P[:-1], P[1:]):
            t = np.linspace(0, 1, n_sub + 1)[:, None]
            fine.append(a + t * (b - a))
        segs = np.concatenate([f[:-1] for f in fine]), np.concatenate(
            [f[1:] for f in fine])
        p0, p1 = segs
        d = p1 - p0
        L = np.linalg.norm(d, axis=1)
        keep = L > 0
        p0, p1, d, L = p0[keep], p1[keep], d[keep], L[keep]
        mid = 0.5 * (p0 + p1)
        nu = np.stack([-d[:, 1], d[:, 0]], axis=1) / L[:, None]
        return L, mid, nu


@dataclass
class LimitDisplacement:
    """Piecewise-smooth displacement with an explicit jump set.

    `pieces` is a list of (mask, u, grad_u) with vectorized callbacks; the
    first matching mask wins. `jumps` lists the discontinuity polylines."""
    pieces: list
    jumps: list = dc_field(default_factory=list)
    dim: int = 2

    def u(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.zeros_like(pts, dtype=float)
        done = np.zeros(len(pts), dtype=bool)
        for mask, u, _ in self.pieces:
            sel = np.asarray(mask(pts), dtype=bool) & ~done
            if np.any(sel):
                out[sel] = u(pts[sel])
                done |= sel
        return out

    def strain(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.zeros((len(pts), self.dim, self.dim))
        done = np.zeros(len(pts), dtype=bool)
        for mask, _, gu in self.pieces:
            sel = np.asarray(mask(pts), dtype=bool) & ~done
            if np.any(sel):
                out[sel] = _sym(np.asarray(gu(pts[sel]), dtype=float))
                done |= sel
        return out


# -- void functional (finite-hardness and limit) ---------------------------

@dataclass
class VoidEnergyBreakdown:
    elastic: float
    perimeter: float
    curvature: float

    @property
    def total(self) -> float:
        return self.elastic + self.perimeter + self.curvature


def _grid_integral(fn, box: Box, h: float, mask=None) -> float:
    pts = box.sample_grid(h)
    if mask is not None:
        pts = pts[mask(pts)]
    if len(pts) == 0:
        return 0.0
    return h ** box.dim * float(np.sum(fn(pts)))


def F_delta_eval(y: DeformationField, E: Optional[PlanarRegion], delta: float,
                 gamma_delta: float, q: float, omega: Box,
                 phi: Optional[NormPhi] = None, W: EnergyDensity = W1,
                 u0=None, dirichlet_segments=None, h: float | None = None,
                 trace_tol: float = 1e-8):
    """Finite-hardness void energy: rescaled bulk term plus anisotropic
    perimeter and curvature of the void boundary.  Constraint violations
    return an Infeasible tag instead of a number."""
    phi = phi or euclidean_norm(omega.dim)
    h = h or min(omega.hi - omega.lo) / 128.0
    e_poly = E.polygon() if E is not None and E.boundaries else None

    if dirichlet_segments:
        import shapely
        for p0, p1 in dirichlet_segments:
            t = np.linspace(0, 1, 200)[:, None]
            pts = np.asarray(p0) + t * (np.asarray(p1) - np.asarray(p0))
            if e_poly is not None:
                dmin = float(shapely.distance(shapely.points(pts), e_poly).min())
                if dmin <= 1e-12:
                    return Infeasible("void_touches_dirichlet_boundary")
            target = pts if u0 is None else pts + delta * np.asarray(u0(pts))
            ok = y.in_mask(pts)
            if np.any(ok):
                err = np.max(np.abs(np.asarray(y.y(pts[ok])) - target[ok]))
                if err > trace_tol:
                    return Infeasible("trace_mismatch", f"max error {err:.3g}")

    def body(pts):
        ok = y.stencil_ok(pts, h)
        if e_poly is not None:
            import shapely
            ok &= ~shapely.contains_xy(e_poly, pts[:, 0], pts[:, 1])
        return ok

    def dens(pts):
        return W(y.gradient(pts, h))

    elastic = _grid_integral(dens, omega, h, mask=body) / delta**2
    per = 0.0
    curv = 0.0
    if E is not None:
        for b in E.boundaries:
            per += anisotropic_perimeter(b, phi, window=omega)
            curv += gamma_delta * curvature_integral(b, q, window=omega)
    return VoidEnergyBreakdown(elastic, per, curv)


def F_zero_eval(u: LimitDisplacement, E: Optional[PlanarRegion],
                Q: QuadraticForm, omega: Box, phi: Optional[NormPhi] = None,
                u0=None, dirichlet_segments=None, h: float | None = None,
                overlap_tol: float = 1e-9, trace_tol: float = 1e-8):
    """Limiting void energy: linear-elastic bulk, void perimeter, doubled
    interior jumps, and the Dirichlet boundary relaxation terms."""
    import shapely

    phi = phi or euclidean_norm(omega.dim)
    h = h or min(omega.hi - omega.lo) / 128.0
    e_poly = E.polygon() if E is not None and E.boundaries else None
    e_boundary = e_poly.boundary if e_poly is not None else None

    def body(pts):
        if e_poly is None:
            return np.ones(len(pts), dtype=bool)
        return ~shapely.contains_xy(e_poly, pts[:, 0], pts[:, 1])

    elastic = 0.5 * _grid_integral(lambda p: Q(u.strain(p)), omega, h, mask=body)

    per = 0.0
    if E is not None:
        for b in E.boundaries:
            per += anisotropic_perimeter(b, phi, window=omega)

    jump_term = 0.0
    for jump in u.jumps:
        L, mid, nu = jump.lengths_midpoints_normals()
        inside = omega.contains(mid)
        on_e = np.zeros(len(mid), dtype=bool)
        if e_boundary is not None:
            on_e = shapely.dwithin(shapely.points(mid), e_boundary, overlap_tol)
        sel = inside & ~on_e
        jump_term += 2.0 * float(np.sum(L[sel] * phi(nu[sel])))

    bdry = 0.0
    if dirichlet_segments:
        for p0, p1 in dirichlet_segments:
            t = np.linspace(0, 1, 400)
            pts = np.asarray(p0)[None] + t[:, None] * (np.asarray(p1)
                                                       - np.asarray(p0))[None]
            seg = np.asarray(p1) - np.asarray(p0)
            L = np.linalg.norm(seg)
            nu = np.array([-seg[1], seg[0]]) / L
            w = L / len(t)
            in_e = np.zeros(len(pts), dtype=bool)
            if e_poly is not None:
                in_e = shapely.dwithin(shapely.points(pts), e_poly, overlap_tol)
            bdry += float(np.sum(in_e) * w) * float(phi(nu))
            tr = u.u(pts)
            tr0 = np.zeros_like(pts) if u0 is None else np.asarray(u0(pts))
            mismatch = np.max(np.abs(tr - tr0), axis=1) > trace_tol
            bdry += 2.0 * float(np.sum(mismatch & ~in_e) * w) * float(phi(nu))

    return {"elastic": elastic, "perimeter": per, "jump": jump_term,
            "boundary": bdry,
            "total": elastic + per + jump_term + bdry}


# -- film functional -------------------------------------------------------

@dataclass
class FilmEnergyBreakdown:
    elastic: float
    surface: float
    curvature: float
    surface_alt: float
    curvature_alt: float

    @property
    def total(self) -> float:
        return self.elastic + self.surface + self.curvature


def _profile_grid(h_func, a, b, n):
    x = np.linspace(a, b, n)
    hv = np.asarray(h_func(x), dtype=float)
    dh = np.gradient(hv, x)
    ddh = np.gradient(dh, x)
    return x, hv, dh, ddh


def G_delta_eval(y: DeformationField, h_func, delta: float, gamma_delta: float,
                 q: float, omega_interval, M: float, W: EnergyDensity = W1,
                 grid: float | None = None, n_profile: int = 4096):
    """Finite-hardness film energy on the subgraph of a profile.

    The surface and curvature terms are computed twice: by the 1-d graph
    formulas in x' and by spline quadrature of the graph curve."""
    a, b = map(float, omega_interval)
    x, hv, dh, ddh = _profile_grid(h_func, a, b, n_profile)
    if np.any(hv < -1e-12) or np.any(hv > M + 1e-12):
        return Infeasible("profile_out_of_range")
    speed = np.sqrt(1.0 + dh**2)
    surface = float(np.trapezoid(speed, x))
    kappa_pow = np.abs(ddh) ** q * speed ** (1.0 - 3.0 * q)
    curvature = gamma_delta * float(np.trapezoid(kappa_pow, x))

    from .geometry import Curve
    n_ctrl = 512
    xs = np.linspace(a, b, n_ctrl)
    graph = Curve(np.stack([xs, np.asarray(h_func(xs), dtype=float)], axis=1),
                  closed=False)
    surface_alt = graph.length()
    curvature_alt = gamma_delta * curvature_integral(graph, q)

    grid = grid or (b - a) / 256.0

    def body(pts):
        inside = (pts[:, 1] > 0) & (pts[:, 1] < np.interp(pts[:, 0], x, hv))
        return inside & y.stencil_ok(pts, grid)

    box = Box([a, 0.0], [b, max(hv.max(), 1e-9)])
    elastic = _grid_integral(lambda p: W(y.gradient(p, grid)), box, grid,
                             mask=body) / delta**2
    return FilmEnergyBreakdown(elastic, surface, curvature,
                               surface_alt, curvature_alt)


def G_zero_eval(u: LimitDisplacement, h_func, Q: QuadraticForm,
                omega_interval, grid: float | None = None,
                n_profile: int = 4096):
    """Limiting film energy with doubled vertical-shadow jump penalty."""
    a, b = map(float, omega_interval)
    x, hv, dh, _ = _profile_grid(h_func, a, b, n_profile)
    surface = float(np.trapezoid(np.sqrt(1 + dh**2), x))
    grid = grid or (b - a) / 256.0

    def body(pts):
        return (pts[:, 1] > 0) & (pts[:, 1] < np.interp(pts[:, 0], x, hv))

    box = Box([a, 0.0], [b, max(hv.max(), 1e-9)])
    elastic = 0.5 * _grid_integral(lambda p: Q(u.strain(p)), box, grid,
                                   mask=body)
    shadow = shadow_measure(u.jumps, h_func, (a, b), n_profile)
    return {"elastic": elastic, "surface": surface, "shadow": 2.0 * shadow,
            "total": elastic + surface + 2.0 * shadow}


def shadow_measure(jumps, h_func, omega_interval, n_cols: int = 4096) -> float:
    """Length of the upward shadow of the jump set inside the subgraph.

    Columns hit by the jump set contribute the lower-envelope curve of the
    jump heights; degenerate (vertical-cut) runs contribute the vertical ray
    from the cut up to the graph."""
    a, b = map(float, omega_interval)
    cols = np.linspace(a, b, n_cols)
    dx = cols[1] - cols[0]
    env = np.full(n_cols, np.inf)
    vertical = 0.0
    for jump in jumps:
        P = np.asarray(jump.points, dtype=float)
        for p0, p1 in zip(P[:-1], P[1:]):
            if abs(p1[0] - p0[0]) < dx / 2:
                x0 = 0.5 * (p0[0] + p1[0])
                if not a <= x0 <= b:
                    continue
                y0 = min(p0[1], p1[1])
                hx = float(np.asarray(h_func(np.array([x0])), dtype=float)[0])
                if y0 < hx:
                    vertical += hx - y0
                continue
            sel = (cols >= min(p0[0], p1[0])) & (cols <= max(p0[0], p1[0]))
            t = (cols[sel] - p0[0]) / (p1[0] - p0[0])
            env[sel] = np.minimum(env[sel], p0[1] + t * (p1[1] - p0[1]))
    hit = np.isfinite(env)
    if not hit.any():
        return vertical
    hcols = np.asarray(h_func(cols), dtype=float)
    total = vertical
    runs = np.split(np.flatnonzero(hit),
                    np.flatnonzero(np.diff(np.flatnonzero(hit)) > 1) + 1)
    for run in runs:
        inside = env[run] < hcols[run]
        if len(run) < 2:
            continue
        xs, ys = cols[run], np.minimum(env[run], hcols[run])
        seg = np.sqrt(np.diff(xs) ** 2 + np.diff(ys) ** 2)
        keep = inside[:-1] & inside[1:]
        total += float(np.sum(seg[keep]))
    return total


# -- Taylor expansion checks -----------------------------------------------

def _displacement_energy(W, u_grad, region: Box, delta: float, h: float):
    pts = region.sample_grid(h)
    G = np.asarray(u_grad(pts), dtype=float)
    gmax = float(np.max(np.abs(G)))
    if gmax > delta ** (-0.25) + 1e-12:
        raise EnergyError("displacement gradient exceeds the admissible bound")
    F = np.eye(region.dim)[None] + delta * G
    bulk = h ** region.dim * float(np.sum(W(F))) / delta**2
    Q = QuadraticForm.for_energy(W, region.dim)
    quad = 0.5 * h ** region.dim * float(np.sum(Q(_sym(G))))
    cubic = h ** region.dim * float(np.sum(np.linalg.norm(
        G.reshape(len(G), -1), axis=1) ** 3))
    return bulk, quad, cubic


def taylor_residual(W: EnergyDensity, u_grad, region: Box, delta: float,
                    h: float = 1 / 64.0):
    """Third-order Taylor defect of W at y = id + delta*u.

    ``bulk`` is the delta^-2 rescaled nonlinear energy and ``quadratic`` the
    linearized one; their gap is bounded by a constant times delta times the
    cubic mass of the displacement gradient, so ``residual`` reports the gap
    per unit delta^3 of raw energy.
    """
    bulk, quad, cubic = _displacement_energy(W, u_grad, region, delta, h)
    return {"residual": abs(bulk - quad) / delta, "bulk": bulk,
            "quadratic": quad, "cubic_mass": cubic}


def lower_bound_gap(W: EnergyDensity, u_grad, region: Box, delta: float,
                    h: float = 1 / 64.0):
    """Signed gap of the rescaled nonlinear energy over its linearization."""
    bulk, quad, cubic = _displacement_energy(W, u_grad, region, delta, h)
    return {"gap": bulk - quad, "bulk": bulk, "quadratic": quad,
            "cubic_mass": cubic}
