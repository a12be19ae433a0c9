"""Rigidity estimation: optimal rotations per cube, chaining over cubic sets,
Poincare fits, and the variable-domain verification pipeline."""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .lattice import Box, CubeLattice, CubicSet, connected_components, cubes_meeting
from .geometry import PlanarRegion

Matrix = np.ndarray


class RigidityError(ValueError):
    pass


class MaskError(RigidityError):
    pass


# -- pointwise / batched primitives ---------------------------------------

def dist_SO(F) -> float:
    """Distance (not squared) of a single d x d matrix to the rotation group."""
    F = np.asarray(F, dtype=float)
    if not np.all(np.isfinite(F)):
        raise RigidityError("non-finite matrix entries")
    d = F.shape[-1]
    if d not in (2, 3):
        raise RigidityError("only d in {2,3} supported")
    return float(np.sqrt(kernels.dist2_so(F[None])[0]))


def dist2_SO_batch(F) -> np.ndarray:
    return kernels.dist2_so(F)


def rotation_2d(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def special_orthogonal_polar(M: Matrix):
    """Closest rotation to M (polar factor with determinant correction).

    Returns (R, degenerate) where degenerate flags a rank-deficient input.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if d == 2:
        a = M[0, 0] + M[1, 1]
        b = M[1, 0] - M[0, 1]
        h = np.hypot(a, b)
        if h < 1e-300:
            return np.eye(2), True
        c, s = a / h, b / h
        return np.array([[c, -s], [s, c]]), False
    U, sig, Vt = np.linalg.svd(M)
    D = np.eye(d)
    if np.linalg.det(U @ Vt) < 0:
        D[-1, -1] = -1.0
    return U @ D @ Vt, bool(sig[-1] < 1e-12 * max(sig[0], 1.0))


@dataclass
class RotationFit:
    R: np.ndarray
    residual: float
    degenerate: bool


def best_rotation(samples, weights=None) -> RotationFit:
    """Weighted least-squares rotation fit over gradient samples.

    The minimizer of sum w_i |F_i - R|^2 over rotations R is the
    special-orthogonal polar factor of the weighted mean matrix.
    """
    F = np.asarray(samples, dtype=float)
    if F.ndim == 2:
        F = F[None]
    n = len(F)
    if n == 0:
        raise RigidityError("need at least one gradient sample")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise RigidityError("weights must be nonnegative with positive sum")
    d = F.shape[-1]
    if d == 2:
        mean, _ = kernels.weighted_mean_and_frob2(F, w, np.eye(2))
    else:
        mean = np.einsum("n,nij->ij", w, F) / w.sum()
    R, degenerate = special_orthogonal_polar(mean)
    diff = F - R[None]
    residual = float(np.einsum("n,nij,nij->", w, diff, diff))
    return RotationFit(R, residual, degenerate)


def linear_form_residual(F, R):
    """Triple (|sym(R^T F - Id)|, dist(F, SO(d)), |F - R|^2).

    The first quantity agrees with the second up to a term controlled by the
    third (the linearization formula around a rotation).
    """
    F = np.asarray(F, dtype=float)
    R = np.asarray(R, dtype=float)
    if np.max(np.abs(R.T @ R - np.eye(len(R)))) > 1e-9 or np.linalg.det(R) < 0:
        raise RigidityError("R must be a rotation")
    G = R.T @ F - np.eye(len(R))
    lhs = float(np.linalg.norm(0.5 * (G + G.T)))
    base = dist_SO(F)
    quad = float(np.sum((F - R) ** 2))
    return lhs, base, quad


# -- deformation fields ---------------------------------------------------

@dataclass
class DeformationField:
    """A deformation given by vectorized callbacks.

    `y` maps (n,d) points to (n,d) images. `grad`, if given, maps (n,d) to
    (n,d,d) gradients; otherwise central differences at step `fd_step` are
    used, and only at points whose full difference stencil stays inside the
    mask. `mask` is a vectorized membership predicate for the body (None
    means all of R^d).
    """

    y: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    mask: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dim: int = 2
    fd_step: float = 1e-5

    def in_mask(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        if self.mask is None:
            return np.ones(len(p), dtype=bool)
        return np.asarray(self.mask(p), dtype=bool)

    def stencil_ok(self, points, step: float | None = None) -> np.ndarray:
        if self.mask is None:
            return np.ones(len(np.atleast_2d(points)), dtype=bool)
        if self.grad is not None:
            return self.in_mask(points)
        h = step or self.fd_step
        p = np.atleast_2d(points)
        ok = self.in_mask(p)
        for a in range(self.dim):
            e = np.zeros(self.dim)
            e[a] = h
            ok &= self.in_mask(p + e) & self.in_mask(p - e)
        return ok

    def gradient(self, points, step: float | None = None) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.grad is not None:
            return np.asarray(self.grad(p), dtype=float)
        h = step or self.fd_step
        out = np.empty((len(p), self.dim, self.dim))
        for a in range(self.dim):
            e = np.zeros(self.dim)
            e[a] = h
            out[:, :, a] = (np.asarray(self.y(p + e)) - np.asarray(self.y(p - e))) / (2 * h)
        return out


def identity_field(dim: int = 2) -> DeformationField:
    eye = np.eye(dim)
    return DeformationField(y=lambda p: np.atleast_2d(p).copy(),
                            grad=lambda p: np.broadcast_to(eye, (len(np.atleast_2d(p)), dim, dim)).copy(),
                            dim=dim)


def rigid_motion_field(R, b, dim: int = 2) -> DeformationField:
    R = np.asarray(R, dtype=float)
    b = np.asarray(b, dtype=float)
    return DeformationField(y=lambda p: np.atleast_2d(p) @ R.T + b,
                            grad=lambda p: np.broadcast_to(R, (len(np.atleast_2d(p)), dim, dim)).copy(),
                            dim=dim)


def _cube_cell_centers(lattice: CubeLattice, idx, h: float) -> np.ndarray:
    lo, hi = lattice.bounds(idx)
    axes = [np.arange(l + h / 2, hi_a, h) for l, hi_a in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# -- per-cube and chained rigidity ----------------------------------------

@dataclass
class CubeRigidityResult:
    R: np.ndarray
    lhs: float        # integral of |grad y - R_Q|^2
    rhs: float        # integral of dist^2(grad y, SO(d))
    ratio: Optional[float]
    exact_rigid: bool
    excluded_measure: float


def cube_rigidity(field: DeformationField, lattice: CubeLattice, idx,
                  h: float | None = None) -> CubeRigidityResult:
    """Optimal rotation and both sides of the single-cube rigidity bound."""
    h = h or lattice.spacing / 16.0
    pts = _cube_cell_centers(lattice, idx, h)
    ok = field.stencil_ok(pts, h)
    if not np.any(ok):
        raise MaskError("cube does not intersect the body mask")
    cell = h ** lattice.dim
    excluded = cell * float(np.sum(~ok))
    F = field.gradient(pts[ok], h)
    fit = best_rotation(F)
    lhs = cell * fit.residual
    rhs = cell * float(np.sum(dist2_SO_batch(F)))
    exact = rhs < 1e-24
    ratio = None if exact else lhs / rhs
    return CubeRigidityResult(fit.R, lhs, rhs, ratio, exact, excluded)


@dataclass
class ChainRigidityResult:
    R: np.ndarray
    b: np.ndarray
    n_cubes: int
    lhs_grad: float       # integral |grad y - R|^2
    lhs_poincare: float   # r^-2 integral |y - (Rx+b)|^2
    rhs: float            # integral dist^2(grad y, SO(d))
    cube_rotations: list
    measured_c_grad: Optional[float]      # lhs_grad / (N^2 rhs)
    measured_c_poincare: Optional[float]  # lhs_poincare / (N^4 rhs)
    pinned: bool
    exact_rigid: bool


def chain_rigidity(field: DeformationField, S: CubicSet,
                   pin: Optional[dict] = None, h: float | None = None) -> ChainRigidityResult:
    """Single-rotation fit on a connected cubic set with the chained bounds.

    `pin` is {"cube": index, "fraction": c}: if the deformation gradient is the
    identity on at least a c-fraction of that cube, the rotation is pinned to
    the identity.
    """
    if len(connected_components(S)) != 1:
        raise RigidityError("cubic set must be connected")
    r = S.lattice.spacing
    h = h or r / 16.0
    cell = h ** S.lattice.dim

    all_pts = []
    cube_slices = []
    for idx in S.sorted_indices():
        pts = _cube_cell_centers(S.lattice, idx, h)
        ok = field.stencil_ok(pts, h)
        start = sum(len(p) for p in all_pts)
        all_pts.append(pts[ok])
        cube_slices.append((idx, slice(start, start + int(ok.sum()))))
    pts = np.concatenate(all_pts)
    F = field.gradient(pts, h)

    pinned = False
    if pin is not None:
        idx = tuple(pin["cube"])
        frac = float(pin.get("fraction", 0.1))
        sl = dict((i, s) for i, s in cube_slices)[idx]
        Fq = F[sl]
        eye = np.eye(S.lattice.dim)
        is_id = np.max(np.abs(Fq - eye), axis=(1, 2)) <= 1e-10
        measured = cell * float(is_id.sum()) / r ** S.lattice.dim
        if measured < frac:
            raise RigidityError(
                f"pinned cube has identity-gradient fraction {measured:.3g} < {frac}")
        R = eye
        pinned = True
    else:
        R = best_rotation(F).R

    cube_rotations = [(idx, best_rotation(F[sl]).R if sl.stop > sl.start else None)
                      for idx, sl in cube_slices]
    diff = F - R[None]
    lhs_grad = cell * float(np.einsum("nij,nij->", diff, diff))
    rhs = cell * float(np.sum(dist2_SO_batch(F)))
    v = np.asarray(field.y(pts)) - pts @ R.T
    b = v.mean(axis=0)
    lhs_poincare = cell * float(np.sum((v - b) ** 2)) / r**2
    n = len(S)
    exact = rhs < 1e-24
    return ChainRigidityResult(
        R=R, b=b, n_cubes=n, lhs_grad=lhs_grad, lhs_poincare=lhs_poincare,
        rhs=rhs, cube_rotations=cube_rotations,
        measured_c_grad=None if exact else lhs_grad / (n**2 * rhs),
        measured_c_poincare=None if exact else lhs_poincare / (n**4 * rhs),
        pinned=pinned, exact_rigid=exact)


@dataclass
class PoincareResult:
    b: np.ndarray
    lhs: float
    rhs: float
    ratio: Optional[float]
    n_cubes: int


def poincare_fit(v: DeformationField, S: CubicSet, h: float | None = None) -> PoincareResult:
    """Mean-value fit b and both sides of the cubic-set Poincare inequality."""
    r = S.lattice.spacing
    h = h or r / 16.0
    cell = h ** S.lattice.dim
    pts = np.concatenate([_cube_cell_centers(S.lattice, idx, h)
                          for idx in S.sorted_indices()])
    ok = v.stencil_ok(pts, h)
    pts = pts[ok]
    vals = np.asarray(v.y(pts))
    b = vals.mean(axis=0)
    lhs = cell * float(np.sum((vals - b) ** 2)) / r**2
    G = v.gradient(pts, h)
    rhs = cell * float(np.einsum("nij,nij->", G, G))
    ratio = None if rhs < 1e-24 else lhs / rhs
    return PoincareResult(b, lhs, rhs, ratio, len(S))


# -- variable-domain pipeline ---------------------------------------------

@dataclass
class ComponentReport:
    cubes: CubicSet
    chain: ChainRigidityResult
    sym_lhs: float     # integral |sym(R^T grad y - Id)|^2
    touches_dirichlet: bool = False


@dataclass
class RigidityReport:
    epsilon: float                      # integral of dist^2 over the body
    r: float
    components: list
    total_lhs_sym: float
    total_lhs_grad: float
    total_lhs_poincare: float
    gamma_powers: dict
    forced_single_rotation: Optional[dict] = None
    thickening: object = None
    field: object = dc_field(default=None, repr=False)

    def to_json(self) -> str:
        def comp(c):
            return {
                "n_cubes": c.chain.n_cubes,
                "rotation": c.chain.R.tolist(),
                "translation": c.chain.b.tolist(),
                "lhs_sym": c.sym_lhs,
                "lhs_grad": c.chain.lhs_grad,
                "lhs_poincare": c.chain.lhs_poincare,
                "pinned": c.chain.pinned,
            }
        data = {
            "epsilon": self.epsilon,
            "r": self.r,
            "n_components": len(self.components),
            "components": [comp(c) for c in self.components],
            "total_lhs_sym": self.total_lhs_sym,
            "total_lhs_grad": self.total_lhs_grad,
            "total_lhs_poincare": self.total_lhs_poincare,
            "gamma_powers": self.gamma_powers,
            "forced_single_rotation": self.forced_single_rotation,
        }
        return json.dumps(data, indent=2)


def _sym_lhs(field: DeformationField, pts: np.ndarray, R: np.ndarray,
             cell: float, h: float) -> float:
    F = field.gradient(pts, h)
    G = np.einsum("ji,njk->nik", R, F) - np.eye(len(R))[None]
    sym = 0.5 * (G + np.swapaxes(G, 1, 2))
    return cell * float(np.einsum("nij,nij->", sym, sym))


def epsilon_integral(field: DeformationField, domain: Box, h: float) -> float:
    """Integral of dist^2(grad y, SO(d)) over the masked part of the domain."""
    pts = domain.sample_grid(h)
    ok = field.stencil_ok(pts, h)
    F = field.gradient(pts[ok], h)
    return h ** domain.dim * float(np.sum(dist2_SO_batch(F)))


def verify_variable_domain_rigidity(
        omega: Box, omega_tilde: Box, E: Optional[PlanarRegion],
        field: DeformationField, params, r: float | None = None,
        h: float | None = None, pin_region: Optional[Box] = None,
        thickening_report=None):
    """Full pipeline: thicken E, tile the complement, split into components,
    and fit one rotation per component, reporting all measured ratios.

    `r` defaults to eta*rho/(2 sqrt d), the safety margin guaranteed by the
    thickening construction (identical to the closed-form choice when rho
    keeps its default value eta^7 gamma^(1/q)).
    """
    from .thickening import thicken

    d = omega.dim
    if E is not None and thickening_report is None:
        thickening_report = thicken(E, omega, omega_tilde, params)
    thick_poly = thickening_report.polygon if thickening_report is not None else None
    e_poly = E.polygon() if E is not None else None

    if r is None:
        r = params.eta * params.rho / (2.0 * np.sqrt(d))
    lattice = CubeLattice(r, d)
    if h is None:
        h = r / 8.0

    import shapely

    def complement(pts):
        pts = np.atleast_2d(pts)
        ok = omega_tilde.contains(pts)
        if thick_poly is not None:
            ok &= ~shapely.contains_xy(thick_poly, pts[:, 0], pts[:, 1])
        return ok

    cubes = cubes_meeting(complement, omega_tilde, lattice, min_resolution_frac=4)

    # safety check: the doubled cube around any selected cube avoids E and
    # stays in the domain
    if e_poly is not None:
        centers = cubes.centers()
        if len(centers):
            corners = []
            for sx in (-1.0, 0.0, 1.0):
                for sy in (-1.0, 0.0, 1.0):
                    corners.append(centers + r * np.array([sx, sy]))
            test = np.concatenate(corners)
            inside_e = shapely.contains_xy(e_poly, test[:, 0], test[:, 1])
            in_domain = omega.contains(test)
            if np.any(inside_e) or not np.all(in_domain):
                raise RigidityError(
                    "safety margin violated: a doubled lattice cube meets the void "
                    "or leaves the domain (lattice spacing too large for the margin)")

    comps = connected_components(cubes)
    cell = h**d
    reports = []
    for comp in comps:
        pts_all = np.concatenate([_cube_cell_centers(lattice, idx, h)
                                  for idx in comp.sorted_indices()])
        keep = complement(pts_all) & field.stencil_ok(pts_all, h)
        if not np.any(keep):
            continue
        sub = _restrict_field(field, complement)
        chain = chain_rigidity(sub, comp, h=h)
        pts = pts_all[keep]
        sym = _sym_lhs(field, pts, chain.R, cell, h)
        touches = bool(pin_region is not None and np.any(pin_region.contains(pts)))
        reports.append(ComponentReport(comp, chain, sym, touches))

    eps = epsilon_integral(field, omega, h)
    q, gamma = params.q, params.gamma
    gamma_powers = {
        "sym": gamma ** (-5.0 * d / q),
        "grad": gamma ** (-2.0 * d / q),
        "poincare": gamma ** ((2.0 - 4.0 * d) / q),
    }
    fit_all = _forced_single_rotation(field, omega_tilde, e_poly, h)
    return RigidityReport(
        epsilon=eps, r=r, components=reports,
        total_lhs_sym=sum(c.sym_lhs for c in reports),
        total_lhs_grad=sum(c.chain.lhs_grad for c in reports),
        total_lhs_poincare=sum(c.chain.lhs_poincare for c in reports),
        gamma_powers=gamma_powers,
        forced_single_rotation=fit_all,
        thickening=thickening_report,
        field=field)


def _restrict_field(field: DeformationField, extra_mask) -> DeformationField:
    base = field.mask

    def mask(pts):
        ok = extra_mask(pts)
        if base is not None:
            ok = ok & np.asarray(base(np.atleast_2d(pts)), dtype=bool)
        return ok

    return DeformationField(y=field.y, grad=field.grad, mask=mask,
                            dim=field.dim, fd_step=field.fd_step)


def _forced_single_rotation(field: DeformationField, window: Box, e_poly, h: float):
    import shapely
    pts = window.sample_grid(h)
    ok = field.stencil_ok(pts, h)
    if e_poly is not None:
        ok &= ~shapely.contains_xy(e_poly, pts[:, 0], pts[:, 1])
    pts = pts[ok]
    if len(pts) == 0:
        return None
    F = field.gradient(pts, h)
    fit = best_rotation(F)
    return {"rotation": fit.R.tolist(),
            "lhs_grad": h ** window.dim * fit.residual}


def dirichlet_pin(report: RigidityReport, dirichlet_region: Box,
                  tol: float = 1e-12) -> RigidityReport:
    """Re-fit components meeting the Dirichlet region with the identity rotation.

    Requires the deformation to equal the identity on the region (sampled)."""
    field = report.field
    pts = dirichlet_region.sample_grid(
        min(dirichlet_region.hi[0] - dirichlet_region.lo[0], 1.0) / 16.0)
    ok = field.in_mask(pts)
    if np.any(ok):
        ys = np.asarray(field.y(pts[ok]))
        if np.max(np.abs(ys - pts[ok])) > tol:
            raise RigidityError("deformation is not the identity on the Dirichlet region")
    new_components = []
    d = field.dim
    for comp in report.components:
        pts_c = np.concatenate([
            _cube_cell_centers(comp.cubes.lattice, idx, comp.cubes.lattice.spacing / 8.0)
            for idx in comp.cubes.sorted_indices()])
        overlap = np.any(dirichlet_region.contains(pts_c) & field.in_mask(pts_c))
        if not overlap:
            new_components.append(comp)
            continue
        h = comp.cubes.lattice.spacing / 8.0
        keep = field.stencil_ok(pts_c, h)
        pts_k = pts_c[keep]
        F = field.gradient(pts_k, h)
        cell = h**d
        eye = np.eye(d)
        diff = F - eye[None]
        lhs_grad = cell * float(np.einsum("nij,nij->", diff, diff))
        v = np.asarray(field.y(pts_k)) - pts_k
        lhs_poincare = cell * float(np.sum(v**2)) / comp.cubes.lattice.spacing**2
        chain = ChainRigidityResult(
            R=eye, b=np.zeros(d), n_cubes=comp.chain.n_cubes,
            lhs_grad=lhs_grad, lhs_poincare=lhs_poincare, rhs=comp.chain.rhs,
            cube_rotations=comp.chain.cube_rotations,
            measured_c_grad=None, measured_c_poincare=None,
            pinned=True, exact_rigid=comp.chain.exact_rigid)
        sym = _sym_lhs(field, pts_k, eye, cell, h)
        new_components.append(ComponentReport(comp.cubes, chain, sym, True))
    return RigidityReport(
        epsilon=report.epsilon, r=report.r, components=new_components,
        total_lhs_sym=sum(c.sym_lhs for c in new_components),
        total_lhs_grad=sum(c.chain.lhs_grad for c in new_components),
        total_lhs_poincare=sum(c.chain.lhs_poincare for c in new_components),
        gamma_powers=report.gamma_powers,
        forced_single_rotation=report.forced_single_rotation,
        thickening=report.thickening, field=report.field)
