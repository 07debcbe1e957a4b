"""Turns optimized plane proxies into per-region affine transforms and
carries them back to the full-resolution mesh through a pyramid of
smoothed skinning weights."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from . import kernels
from .mesh import Mesh, RegionLabeling, cotan_weights


@dataclass(frozen=True)
class AffineTransform:
    """3x4 affine map x -> A x + b."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))
        if not (np.isfinite(self.linear).all() and np.isfinite(self.translation).all()):
            raise ValueError("non-finite affine transform")

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return p @ self.linear.T + self.translation

    def compose(self, inner: "AffineTransform") -> "AffineTransform":
        """self after inner: x -> self(inner(x))."""
        return AffineTransform(self.linear @ inner.linear,
                               self.linear @ inner.translation + self.translation)

    def as_row12(self) -> np.ndarray:
        return np.concatenate([self.linear, self.translation[:, None]], axis=1).ravel()


# ---------------------------------------------------------------------------
# rotations


PARALLEL_SNAP = 1e-8  # radians: below this the rotation is exactly identity


def rotation_between(n: np.ndarray, n_prime: np.ndarray) -> np.ndarray:
    """Rotation taking unit vector n to n_prime about axis n x n_prime.

    Evaluated through the half-angle quaternion (1 + n.n', n x n'),
    which keeps the error ~eps/sqrt(1 + n.n') instead of the raw
    Rodrigues form's ~eps/(1 + n.n'). Angles below PARALLEL_SNAP give
    the exact identity; near-antiparallel inputs rotate by pi about a
    deterministic axis perpendicular to n (smallest-component rule).
    Non-unit inputs are normalized, with a warning past 1e-6 deviation.
    """
    n = _normalized_checked(n)
    np_ = _normalized_checked(n_prime)
    a = np.cross(n, np_)
    s = np.linalg.norm(a)
    c = float(np.dot(n, np_))
    angle = np.arctan2(s, c)
    if angle < PARALLEL_SNAP:
        return np.eye(3)
    if np.pi - angle < PARALLEL_SNAP:
        axis = _perpendicular_axis(n)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    return _quat_to_matrix(1.0 + c, a)


def _quat_to_matrix(w, v):
    """Rotation matrix of the (unnormalized) quaternion (w, v)."""
    q = np.concatenate([[w], np.asarray(v, dtype=np.float64)])
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _normalized_checked(v):
    v = np.asarray(v, dtype=np.float64)
    nn = np.linalg.norm(v)
    if nn == 0:
        raise ValueError("zero vector has no direction")
    if abs(nn - 1.0) > 1e-6:
        warnings.warn(f"rotation_between input deviates from unit length by {abs(nn-1):.2e}")
    return v / nn


def _perpendicular_axis(n):
    """Unit vector perpendicular to n, seeded on n's smallest component."""
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    axis = e - n * n[k]
    return axis / np.linalg.norm(axis)


def _skew(a):
    return np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])


def rotation_matrices_between(n0: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Batched rotation_between: n0 (K,3) unit rows to n (..., K, 3)."""
    n0 = np.asarray(n0, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    a = np.cross(np.broadcast_to(n0, n.shape), n)
    c = np.einsum("...ki,ki->...k", n, n0)
    s = np.linalg.norm(a, axis=-1)
    angle = np.arctan2(s, c)

    q = np.concatenate([(1.0 + c)[..., None], a], axis=-1)
    norm = np.linalg.norm(q, axis=-1)
    q = q / np.where(norm > 1e-300, norm, 1.0)[..., None]
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rot = np.empty(n.shape[:-1] + (3, 3))
    rot[..., 0, 0] = 1 - 2 * (y * y + z * z)
    rot[..., 0, 1] = 2 * (x * y - w * z)
    rot[..., 0, 2] = 2 * (x * z + w * y)
    rot[..., 1, 0] = 2 * (x * y + w * z)
    rot[..., 1, 1] = 1 - 2 * (x * x + z * z)
    rot[..., 1, 2] = 2 * (y * z - w * x)
    rot[..., 2, 0] = 2 * (x * z - w * y)
    rot[..., 2, 1] = 2 * (y * z + w * x)
    rot[..., 2, 2] = 1 - 2 * (x * x + y * y)

    eye = np.broadcast_to(np.eye(3), n.shape[:-1] + (3, 3))
    out = np.where((angle >= PARALLEL_SNAP)[..., None, None], rot, eye)
    anti = (np.pi - angle) < PARALLEL_SNAP
    if anti.any():
        for row in np.argwhere(anti):
            axis = _perpendicular_axis(n0[row[-1]])
            out[tuple(row)] = 2.0 * np.outer(axis, axis) - np.eye(3)
    return out


# ---------------------------------------------------------------------------
# per-region transforms


def rigid_part(before, after) -> AffineTransform:
    """Rigid motion implied by the proxy change: rotates the normal and
    carries the centroid c -> c'."""
    r = rotation_between(before.normal, after.normal)
    return AffineTransform(r, after.centroid - r @ before.centroid)


def planarize_part(proxy, mu: float) -> AffineTransform:
    """Scales space toward the proxy plane: distance d becomes (1-mu) d."""
    n = np.asarray(proxy.normal, dtype=np.float64)
    lin = np.eye(3) - mu * np.outer(n, n)
    return AffineTransform(lin, mu * float(np.dot(n, proxy.centroid)) * n)


def region_transform(before, after, mu: float) -> AffineTransform:
    """Planarize against the original proxy, then move rigidly with it."""
    return rigid_part(before, after).compose(planarize_part(before, mu))


# ---------------------------------------------------------------------------
# skinning pyramid


MAX_LEVELS = 12
PRUNE_THRESHOLD = 1e-6


@dataclass
class SkinningPyramid:
    """Per-vertex weights over regions 0..K at L smoothing levels.

    Level 0 is the normalized incident-face count; level l applies
    2^(l-1) more uniform neighbor-averaging passes than level l-1, so the
    cumulative smoothing grows geometrically down the pyramid.
    """

    levels: list  # of csr_matrix, shape (n_vertices, K+1)
    region_count: int
    iteration_schedule: list = field(default_factory=list)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def interpolated(self, scale: np.ndarray) -> sparse.csr_matrix:
        """Row-wise linear interpolation between the two levels bracketing
        each vertex's smoothing scale."""
        n = self.levels[0].shape[0]
        s = np.asarray(scale, dtype=np.float64)
        top = float(self.n_levels - 1)
        if (s < 0).any() or (s > top).any():
            warnings.warn("smoothing scale outside [0, L-1]; clamping")
            s = np.clip(s, 0.0, top)
        low = np.floor(s).astype(np.int64)
        low = np.minimum(low, self.n_levels - 1)
        frac = s - low
        out = None
        for l in np.unique(low):
            mask = low == l
            w_lo = sparse.diags(np.where(mask, 1.0 - frac, 0.0)) @ self.levels[l]
            acc = w_lo
            if l + 1 < self.n_levels:
                acc = acc + sparse.diags(np.where(mask, frac, 0.0)) @ self.levels[l + 1]
            out = acc if out is None else out + acc
        return out.tocsr()


def build_skinning_pyramid(m: Mesh, labels: RegionLabeling, levels: int = 8) -> SkinningPyramid:
    """Precompute the weight pyramid for a labeled mesh."""
    if levels < 1:
        raise ValueError("need at least one level")
    if levels > MAX_LEVELS:
        raise ValueError(f"levels > {MAX_LEVELS} would smooth excessively")
    n = m.n_vertices
    k = labels.region_count

    rows = m.triangles.ravel()
    cols = labels.face_labels.repeat(3)
    w0 = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, k + 1)
    )
    w0 = _normalize_rows(w0)

    adj = m.vertex_adjacency()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    isolated = deg == 0
    inv = np.where(isolated, 0.0, 1.0 / np.where(deg == 0, 1.0, deg))
    smooth = sparse.diags(inv) @ adj
    if isolated.any():
        # keep isolated vertices' weights instead of zeroing them
        fix = sparse.diags(isolated.astype(np.float64))
        smooth = smooth + fix

    pyramid = [w0]
    schedule = [0]
    for l in range(1, levels):
        passes = 2 ** (l - 1)
        w = pyramid[-1]
        for _ in range(passes):
            w = smooth @ w
        w = _prune_rows(w.tocsr())
        pyramid.append(w)
        schedule.append(passes)
    return SkinningPyramid(pyramid, k, schedule)


def _normalize_rows(w: sparse.csr_matrix) -> sparse.csr_matrix:
    sums = np.asarray(w.sum(axis=1)).ravel()
    sums[sums == 0] = 1.0
    return (sparse.diags(1.0 / sums) @ w).tocsr()


def _prune_rows(w: sparse.csr_matrix) -> sparse.csr_matrix:
    w = w.copy()
    w.data[w.data < PRUNE_THRESHOLD] = 0.0
    w.eliminate_zeros()
    return _normalize_rows(w)


# ---------------------------------------------------------------------------
# smoothing-scale diffusion


@dataclass
class DiffusionReport:
    field_values: np.ndarray
    flagged_vertices: list


class SmoothingScaleSolver:
    """Harmonic interpolation of per-boundary smoothing scales.

    For each region the clamped cotangent Dirichlet problem is factorized
    once (the factorization is independent of the assigned values) and
    reused across interactive edits.
    """

    def __init__(self, m: Mesh, labels: RegionLabeling):
        self.mesh = m
        self.labels = labels
        inc = m.edge_face_incidence()
        interior = inc[:, 1] >= 0
        fl = labels.face_labels
        la = fl[inc[interior, 0]]
        lb = fl[inc[interior, 1]]
        edges = m.edges()[interior]
        self._boundary_vertices: dict[tuple[int, int], np.ndarray] = {}
        diff = la != lb
        for e, (i, j) in zip(edges[diff], zip(np.minimum(la, lb)[diff], np.maximum(la, lb)[diff])):
            self._boundary_vertices.setdefault((int(i), int(j)), []).append(e)
        for key, es in self._boundary_vertices.items():
            self._boundary_vertices[key] = np.unique(np.concatenate(es))
        self._region_vertices: dict[int, np.ndarray] = {}
        for r in range(0, labels.region_count + 1):
            faces = m.triangles[fl == r]
            self._region_vertices[r] = np.unique(faces)
        self._factor_cache: dict = {}

    def boundaries(self) -> list[tuple[int, int]]:
        return sorted(self._boundary_vertices)

    def solve(self, boundary_values: dict) -> DiffusionReport:
        """Per-vertex scale field for the given {(i, j): s} edits.

        Regions not touched by any valued boundary stay at scale 0.
        Vertices shared by several solved regions average their values.
        """
        n = self.mesh.n_vertices
        acc = np.zeros(n)
        cnt = np.zeros(n)
        flagged: list[int] = []

        dirichlet_by_region: dict[int, dict[int, float]] = {}
        for (i, j), s in boundary_values.items():
            key = (min(i, j), max(i, j))
            if key not in self._boundary_vertices:
                raise KeyError(f"no boundary between regions {key}")
            if s < 0:
                raise ValueError("smoothing scale must be >= 0")
            for r in key:
                d = dirichlet_by_region.setdefault(r, {})
                for v in self._boundary_vertices[key]:
                    d[int(v)] = float(s)

        for r, dval in sorted(dirichlet_by_region.items()):
            verts = self._region_vertices[r]
            values = np.zeros(len(verts))
            index_of = {int(v): i for i, v in enumerate(verts)}
            fixed = np.zeros(len(verts), dtype=bool)
            for v, s in dval.items():
                if v in index_of:
                    fixed[index_of[v]] = True
                    values[index_of[v]] = s
            if not fixed.any():
                continue
            sol, bad = self._solve_region(r, verts, fixed, values)
            flagged += [int(verts[i]) for i in bad]
            acc[verts] += sol
            cnt[verts] += 1.0

        out = np.where(cnt > 0, acc / np.where(cnt == 0, 1.0, cnt), 0.0)
        return DiffusionReport(out, flagged)

    def _solve_region(self, r, verts, fixed, values):
        fvals = values[fixed]
        if np.allclose(fvals, fvals[0], rtol=0, atol=0):
            # constants are harmonic; skip the solve and stay exact
            return np.full(len(verts), fvals[0]), []
        L, free, bad = self._factorization(r, verts, fixed)
        sol = values.copy()
        sol[~fixed] = 0.0
        if len(free):
            lu, l_fd, free_idx = L
            rhs = -l_fd @ values[fixed]
            sol[free_idx] = lu.solve(rhs)
        # flagged vertices take the nearest boundary value
        if bad:
            fixed_pos = self.mesh.vertices[verts[fixed]]
            for i in bad:
                d = np.linalg.norm(fixed_pos - self.mesh.vertices[verts[i]], axis=1)
                sol[i] = fvals[np.argmin(d)]
        return sol, bad

    def _factorization(self, r, verts, fixed):
        key = (r, fixed.tobytes())
        if key in self._factor_cache:
            return self._factor_cache[key]
        fl = self.labels.face_labels
        faces = self.mesh.triangles[fl == r]
        index_of = {int(v): i for i, v in enumerate(verts)}
        local = np.array([[index_of[int(x)] for x in tri] for tri in faces])
        edges, weights = cotan_weights(self.mesh.vertices[verts], local)
        k = len(verts)
        a, b = edges[:, 0], edges[:, 1]
        rows = np.concatenate([a, b, a, b])
        cols = np.concatenate([b, a, a, b])
        data = np.concatenate([-weights, -weights, weights, weights])
        L = sparse.csr_matrix((data, (rows, cols)), shape=(k, k))

        # free vertices whose positive-weight component holds no Dirichlet
        # vertex would make the system singular (clamping can disconnect);
        # they fall back to the nearest boundary value instead
        pos = weights > 0
        g = sparse.csr_matrix(
            (np.ones(pos.sum()), (a[pos], b[pos])), shape=(k, k)
        )
        from scipy.sparse import csgraph

        _, comp = csgraph.connected_components(g + g.T, directed=False)
        anchored = set(comp[fixed].tolist())
        free_mask = ~fixed
        bad = [int(i) for i in np.where(free_mask)[0] if comp[i] not in anchored]
        if bad:
            warnings.warn(
                f"region {r}: {len(bad)} vertices unreachable after clamping"
            )
            free_mask = free_mask.copy()
            free_mask[bad] = False
        free_idx = np.where(free_mask)[0]
        if len(free_idx):
            l_ff = L[free_idx][:, free_idx].tocsc()
            l_fd = L[free_idx][:, np.where(fixed)[0]]
            lu = splu(l_ff)
            result = ((lu, l_fd, free_idx), free_idx, bad)
        else:
            result = ((None, None, free_idx), free_idx, bad)
        self._factor_cache[key] = result
        return result


def diffuse_smoothing_scale(m: Mesh, labels: RegionLabeling, boundary_values: dict) -> np.ndarray:
    """One-shot wrapper around ``SmoothingScaleSolver``."""
    return SmoothingScaleSolver(m, labels).solve(boundary_values).field_values


# ---------------------------------------------------------------------------
# applying the transfer


def transform_stack(transforms: dict, region_count: int) -> np.ndarray:
    """(K+1, 12) row-major 3x4 matrices; row 0 is the identity for the
    area outside the optimization."""
    rows = np.zeros((region_count + 1, 12))
    rows[0] = AffineTransform.identity().as_row12()
    for r in range(1, region_count + 1):
        t = transforms.get(r)
        if t is None:
            raise ValueError(f"missing transform for region {r}")
        rows[r] = t.as_row12()
    return rows


def apply_transfer(
    m: Mesh,
    transforms: dict,
    pyramid: SkinningPyramid,
    scale_field: np.ndarray | None = None,
) -> np.ndarray:
    """Deform the full mesh: each vertex applies the weight-blended
    affine transform at its smoothing scale. Returns new positions."""
    if scale_field is None:
        scale_field = np.zeros(m.n_vertices)
    w = pyramid.interpolated(scale_field)
    tmats = transform_stack(transforms, pyramid.region_count)
    return kernels.blend_apply(
        w.indptr.astype(np.int64),
        w.indices.astype(np.int64),
        w.data.astype(np.float64),
        tmats,
        m.vertices,
    )


def landmark_region_weights(pyramid: SkinningPyramid, scale_field, vertex_ids) -> dict:
    """Dense per-region weight vectors for selected vertices, frozen for
    one optimization run."""
    w = pyramid.interpolated(np.asarray(scale_field, dtype=np.float64))
    out = {}
    for v in vertex_ids:
        out[int(v)] = np.asarray(w[int(v)].todense()).ravel()
    return out
