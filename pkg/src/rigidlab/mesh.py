"""Oriented triangle meshes with discrete curvature quantities.

Per-vertex principal curvatures come from a quadric fit of the 1-ring in the
tangent frame of the area-weighted vertex normal; Gaussian curvature totals
use angle defects, mean curvature uses the cotangent Laplacian.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    pass


@dataclass
class SurfaceMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be (n,3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be (m,3)")
        counts = self._edge_counts()
        if np.any(counts > 2):
            raise MeshError("non-manifold edge (shared by more than two triangles)")

    # -- topology ---------------------------------------------------------
    def _edges(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.sort(e, axis=1)

    def _edge_counts(self):
        e = self._edges()
        _, counts = np.unique(e, axis=0, return_counts=True)
        return counts

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(np.unique(self._edges(), axis=0))

    @property
    def n_triangles(self):
        return len(self.triangles)

    def is_closed(self) -> bool:
        return bool(np.all(self._edge_counts() == 2))

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    # -- metric quantities ------------------------------------------------
    def triangle_areas_normals(self):
        if "tri_an" not in self._cache:
            v = self.vertices
            t = self.triangles
            cr = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
            nrm = np.linalg.norm(cr, axis=1)
            self._cache["tri_an"] = (0.5 * nrm, cr / nrm[:, None])
        return self._cache["tri_an"]

    def area(self) -> float:
        return float(self.triangle_areas_normals()[0].sum())

    def vertex_areas(self) -> np.ndarray:
        """Barycentric lumped areas (one third of each incident triangle)."""
        if "vareas" not in self._cache:
            areas, _ = self.triangle_areas_normals()
            va = np.zeros(self.n_vertices)
            np.add.at(va, self.triangles.ravel(), np.repeat(areas / 3.0, 3))
            self._cache["vareas"] = va
        return self._cache["vareas"]

    def vertex_normals(self) -> np.ndarray:
        if "vnormals" not in self._cache:
            areas, tn = self.triangle_areas_normals()
            vn = np.zeros_like(self.vertices)
            w = (areas[:, None] * tn)
            for k in range(3):
                np.add.at(vn, self.triangles[:, k], w)
            vn /= np.linalg.norm(vn, axis=1, keepdims=True)
            self._cache["vnormals"] = vn
        return self._cache["vnormals"]

    def corner_angles(self):
        """(m,3) interior angles of each triangle."""
        v = self.vertices
        t = self.triangles
        angles = np.empty((len(t), 3))
        for k in range(3):
            a = v[t[:, k]]
            b = v[t[:, (k + 1) % 3]]
            c = v[t[:, (k + 2) % 3]]
            u1 = b - a
            u2 = c - a
            cosang = np.sum(u1 * u2, axis=1) / (
                np.linalg.norm(u1, axis=1) * np.linalg.norm(u2, axis=1))
            angles[:, k] = np.arccos(np.clip(cosang, -1.0, 1.0))
        return angles

    def angle_defects(self) -> np.ndarray:
        """2*pi minus the total interior angle at each (interior) vertex."""
        angles = self.corner_angles()
        tot = np.zeros(self.n_vertices)
        for k in range(3):
            np.add.at(tot, self.triangles[:, k], angles[:, k])
        return 2.0 * np.pi - tot

    def cotangent_mean_curvature(self) -> np.ndarray:
        """Pointwise unsigned mean curvature |H| = kappa_1 + kappa_2 convention.

        Uses the cotangent Laplacian: the discrete mean-curvature vector at a
        vertex is (1/(2 A_v)) * sum_j (cot a_ij + cot b_ij)(x_i - x_j).
        """
        v = self.vertices
        t = self.triangles
        acc = np.zeros_like(v)
        for k in range(3):
            i = t[:, (k + 1) % 3]
            j = t[:, (k + 2) % 3]
            o = t[:, k]
            u1 = v[i] - v[o]
            u2 = v[j] - v[o]
            cr = np.linalg.norm(np.cross(u1, u2), axis=1)
            cot = np.sum(u1 * u2, axis=1) / np.maximum(cr, 1e-300)
            contrib = cot[:, None] * (v[i] - v[j])
            np.add.at(acc, i, contrib)
            np.add.at(acc, j, -contrib)
        hvec = acc / (2.0 * self.vertex_areas()[:, None])
        return np.linalg.norm(hvec, axis=1)

    def principal_curvatures(self) -> np.ndarray:
        """(n,2) principal curvatures from a 1-ring quadric fit per vertex."""
        if "principal" in self._cache:
            return self._cache["principal"]
        v = self.vertices
        normals = self.vertex_normals()
        ring = [[] for _ in range(self.n_vertices)]
        for tri in self.triangles:
            for k in range(3):
                ring[tri[k]].append(tri[(k + 1) % 3])
                ring[tri[k]].append(tri[(k + 2) % 3])
        out = np.zeros((self.n_vertices, 2))
        for i in range(self.n_vertices):
            nbrs = np.unique(ring[i])
            n = normals[i]
            # tangent frame
            t1 = np.cross(n, [1.0, 0.0, 0.0])
            if np.linalg.norm(t1) < 1e-6:
                t1 = np.cross(n, [0.0, 1.0, 0.0])
            t1 /= np.linalg.norm(t1)
            t2 = np.cross(n, t1)
            rel = v[nbrs] - v[i]
            x = rel @ t1
            y = rel @ t2
            z = rel @ n
            # z = a x^2 + b x y + c y^2 (+ dx + ey): fit with linear terms to
            # absorb normal estimation error, keep the quadratic part
            A = np.stack([x * x, x * y, y * y, x, y], axis=1)
            coef, *_ = np.linalg.lstsq(A, z, rcond=None)
            a, b, c = coef[0], coef[1], coef[2]
            shape_op = np.array([[2 * a, b], [b, 2 * c]])
            out[i] = np.sort(np.linalg.eigvalsh(shape_op))
        self._cache["principal"] = out
        return out

    def second_fundamental_norm_sq(self) -> np.ndarray:
        k = self.principal_curvatures()
        return np.sum(k * k, axis=1)

    def transformed(self, rotation=None, translation=None) -> "SurfaceMesh":
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=float)
        return SurfaceMesh(v, self.triangles.copy())


def merge_meshes(a: SurfaceMesh, b: SurfaceMesh) -> SurfaceMesh:
    verts = np.vstack([a.vertices, b.vertices])
    tris = np.vstack([a.triangles, b.triangles + a.n_vertices])
    return SurfaceMesh(verts, tris)


# -- generators -----------------------------------------------------------

def icosphere(radius: float = 1.0, center=(0.0, 0.0, 0.0), subdivisions: int = 4) -> SurfaceMesh:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    tris = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    for _ in range(subdivisions):
        verts, tris = _subdivide_on_sphere(verts, tris)
    v = verts * radius + np.asarray(center, dtype=float)
    return SurfaceMesh(v, tris)


def _subdivide_on_sphere(verts, tris):
    verts = list(verts)
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = 0.5 * (np.asarray(verts[i]) + np.asarray(verts[j]))
            m /= np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(m)
        return cache[key]

    new_tris = []
    for a, b, c in tris:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_tris += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.asarray(verts), np.asarray(new_tris)


def torus_mesh(major: float = 2.0, minor: float = 0.5, n_major: int = 96,
               n_minor: int = 48) -> SurfaceMesh:
    iu, iv = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    u = 2 * np.pi * iu / n_major
    v = 2 * np.pi * iv / n_minor
    x = (major + minor * np.cos(v)) * np.cos(u)
    y = (major + minor * np.cos(v)) * np.sin(u)
    z = minor * np.sin(v)
    verts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)

    def vid(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    tris = []
    for i in range(n_major):
        for j in range(n_minor):
            tris.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
            tris.append([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return SurfaceMesh(verts, np.asarray(tris))


def disk_mesh(radius: float = 1.0, n_rings: int = 8) -> SurfaceMesh:
    """Flat disk (open mesh), mostly used to exercise closedness preconditions."""
    verts = [(0.0, 0.0, 0.0)]
    tris = []
    ring_start = [0]
    for r in range(1, n_rings + 1):
        k = 6 * r
        th = np.linspace(0, 2 * np.pi, k, endpoint=False)
        rad = radius * r / n_rings
        ring_start.append(len(verts))
        verts.extend(np.stack([rad * np.cos(th), rad * np.sin(th),
                               np.zeros(k)], axis=1))
    for r in range(1, n_rings + 1):
        k = 6 * r
        start = ring_start[r]
        if r == 1:
            for j in range(k):
                tris.append([0, start + j, start + (j + 1) % k])
        else:
            prev, kp = ring_start[r - 1], 6 * (r - 1)
            # stitch rings by nearest angular neighbor
            for j in range(k):
                jn = (j + 1) % k
                jp = int(round(j * kp / k)) % kp
                jpn = int(round(jn * kp / k)) % kp
                tris.append([start + j, start + jn, prev + jp])
                if jpn != jp:
                    tris.append([start + jn, prev + jpn, prev + jp])
    return SurfaceMesh(np.asarray(verts, dtype=float), np.asarray(tris))


# -- file I/O -------------------------------------------------------------

def read_off(path: str) -> SurfaceMesh:
    with open(path) as fh:
        tokens = fh.read().split()
    if tokens[0] != "OFF":
        raise MeshError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    tris = []
    for _ in range(nf):
        k = int(tokens[pos])
        if k != 3:
            raise MeshError("only triangular faces are supported")
        tris.append([int(tokens[pos + 1]), int(tokens[pos + 2]), int(tokens[pos + 3])])
        pos += k + 1
    return SurfaceMesh(verts, np.asarray(tris))


def write_off(mesh: SurfaceMesh, path: str):
    with open(path, "w") as fh:
        fh.write(f"OFF\n{mesh.n_vertices} {mesh.n_triangles} 0\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]} {v[1]} {v[2]}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def read_stl_binary(path: str, merge_tol: float = 1e-9) -> SurfaceMesh:
    with open(path, "rb") as fh:
        fh.read(80)
        (n,) = struct.unpack("<I", fh.read(4))
        data = np.frombuffer(fh.read(n * 50), dtype=np.uint8).reshape(n, 50)
    tris_xyz = data[:, 12:48].copy().view("<f4").reshape(n, 3, 3).astype(float)
    pts = tris_xyz.reshape(-1, 3)
    keys = np.round(pts / merge_tol).astype(np.int64)
    _, idx, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    verts = pts[idx]
    tris = inv.reshape(n, 3)
    return SurfaceMesh(verts, tris)


def write_stl_binary(mesh: SurfaceMesh, path: str):
    areas, normals = mesh.triangle_areas_normals()
    with open(path, "wb") as fh:
        fh.write(b"\0" * 80)
        fh.write(struct.pack("<I", mesh.n_triangles))
        for tri, nrm in zip(mesh.triangles, normals):
            fh.write(struct.pack("<3f", *nrm))
            for vid in tri:
                fh.write(struct.pack("<3f", *mesh.vertices[vid]))
            fh.write(struct.pack("<H", 0))
