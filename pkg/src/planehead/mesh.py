"""Indexed triangle mesh, validation, adjacency queries and the cotangent
Laplacian shared by the transfer stage."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph


class MeshError(Exception):
    """Base class for mesh construction / IO problems."""


class MeshParseError(MeshError):
    """Raised when a mesh file cannot be parsed."""


class MeshValidationError(MeshError):
    """Raised when a mesh violates structural invariants.

    Carries the full ``ValidationReport`` so callers can inspect the
    offending elements.
    """

    def __init__(self, report: "ValidationReport"):
        self.report = report
        kinds = ", ".join(sorted({d[0] for d in report.defects})) or "unknown"
        super().__init__(f"invalid mesh: {kinds} ({len(report.defects)} defects)")


@dataclass
class ValidationReport:
    is_manifold: bool
    is_connected: bool
    boundary_loop_count: int
    defects: list[tuple[str, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.defects


class Mesh:
    """Immutable indexed triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) float array
        Vertex positions, arbitrary model units.
    triangles : (m, 3) int array
        Vertex index triples, consistently counter-clockwise.
    validate : bool
        If True (default) reject meshes that break the structural
        invariants (bad indices, degenerate faces, non-manifold edges,
        inconsistent orientation).
    """

    def __init__(self, vertices, triangles, validate: bool = True):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be (n, 3)")
        if self.triangles.size and (self.triangles.ndim != 2 or self.triangles.shape[1] != 3):
            raise MeshError("triangles must be (m, 3)")
        if self.triangles.size == 0:
            self.triangles = self.triangles.reshape(0, 3)
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self._cache: dict = {}
        if validate:
            report = validate_mesh(self)
            if report.defects:
                raise MeshValidationError(report)

    # -- basic counts ------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def bbox_diagonal(self) -> float:
        if not len(self.vertices):
            return 0.0
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))

    # -- derived connectivity (cached) -------------------------------------

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def halfedges(self) -> np.ndarray:
        """Directed edges, 3 per triangle, in traversal order (3m, 2)."""
        return self._cached(
            "halfedges",
            lambda: self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2),
        )

    def _edge_maps(self):
        def build():
            he = self.halfedges()
            und = np.sort(he, axis=1)
            edges, inverse, counts = np.unique(
                und, axis=0, return_inverse=True, return_counts=True
            )
            return edges, inverse.ravel(), counts

        return self._cached("edge_maps", build)

    def edges(self) -> np.ndarray:
        """Unique undirected edges (E, 2), each row sorted."""
        return self._edge_maps()[0]

    def edge_lengths(self) -> np.ndarray:
        e = self.edges()
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    @property
    def mean_edge_length(self) -> float:
        """Mean length over unique edges (the scan-resolution scale)."""

        def build():
            lengths = self.edge_lengths()
            return float(lengths.mean()) if len(lengths) else 0.0

        return self._cached("mean_edge_length", build)

    def edge_face_incidence(self):
        """For each unique edge, the (up to 2) incident face indices.

        Returns (E, 2) int array, second column -1 for boundary edges.
        Edges with >2 incident faces are not representable; call
        ``validate_mesh`` first.
        """

        def build():
            _, inverse, counts = self._edge_maps()
            faces = np.repeat(np.arange(self.n_triangles), 3)
            order = np.argsort(inverse, kind="stable")
            sorted_faces = faces[order]
            n_edges = len(self.edges())
            out = np.full((n_edges, 2), -1, dtype=np.int64)
            starts = np.searchsorted(inverse[order], np.arange(n_edges))
            out[:, 0] = sorted_faces[starts]
            two = counts >= 2
            out[two, 1] = sorted_faces[starts[two] + 1]
            return out

        return self._cached("edge_face_incidence", build)

    def boundary_edge_mask(self) -> np.ndarray:
        return self._edge_maps()[2] == 1

    def boundary_vertex_mask(self) -> np.ndarray:
        def build():
            mask = np.zeros(self.n_vertices, dtype=bool)
            be = self.edges()[self.boundary_edge_mask()]
            mask[be.ravel()] = True
            return mask

        return self._cached("boundary_vertex_mask", build)

    def vertex_adjacency(self) -> sparse.csr_matrix:
        """Symmetric 0/1 vertex adjacency."""

        def build():
            e = self.edges()
            n = self.n_vertices
            data = np.ones(2 * len(e), dtype=np.float64)
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

        return self._cached("vertex_adjacency", build)

    def face_adjacency_pairs(self) -> np.ndarray:
        """(A, 2) pairs of faces sharing an edge."""

        def build():
            inc = self.edge_face_incidence()
            both = inc[inc[:, 1] >= 0]
            return both

        return self._cached("face_adjacency_pairs", build)

    def vertex_face_incidence(self) -> sparse.csr_matrix:
        """(n_vertices, n_triangles) 0/1 incidence."""

        def build():
            m = self.n_triangles
            rows = self.triangles.ravel()
            cols = np.repeat(np.arange(m), 3)
            data = np.ones(3 * m, dtype=np.float64)
            return sparse.csr_matrix((data, (rows, cols)), shape=(self.n_vertices, m))

        return self._cached("vertex_face_incidence", build)

    def face_normals_and_areas(self):
        def build():
            v = self.vertices
            t = self.triangles
            cr = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
            nrm = np.linalg.norm(cr, axis=1)
            areas = 0.5 * nrm
            with np.errstate(invalid="ignore", divide="ignore"):
                normals = np.where(nrm[:, None] > 0, cr / np.where(nrm == 0, 1, nrm)[:, None], 0.0)
            return normals, areas

        return self._cached("face_normals_and_areas", build)

    def with_vertices(self, vertices) -> "Mesh":
        """Same connectivity, new positions (no re-validation of geometry)."""
        return Mesh(vertices, self.triangles, validate=False)


def validate_mesh(m: Mesh) -> ValidationReport:
    """Enumerate structural defects; always returns a report.

    Defect kinds: ``bad-index``, ``degenerate-face`` (repeated index or
    zero area), ``non-manifold-edge``, ``orientation`` (shared edge
    traversed the same way twice). Connectivity is reported through the
    ``is_connected`` flag only (it is not a structural invariant).
    """
    defects: list[tuple[str, int]] = []
    t = m.triangles
    n = m.n_vertices

    if t.size:
        bad = np.where((t < 0).any(axis=1) | (t >= n).any(axis=1))[0]
        defects += [("bad-index", int(f)) for f in bad]
        if len(bad):
            # remaining checks would index out of range
            return ValidationReport(False, False, 0, defects)

        repeated = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
        _, areas = m.face_normals_and_areas()
        degenerate = np.where(repeated | (areas == 0.0))[0]
        defects += [("degenerate-face", int(f)) for f in degenerate]

    edges, inverse, counts = m._edge_maps()
    over = np.where(counts > 2)[0]
    defects += [("non-manifold-edge", int(e)) for e in over]

    # orientation: the two halfedges of an interior edge must be opposite
    he = m.halfedges()
    inner = np.where(counts == 2)[0]
    if len(inner):
        order = np.argsort(inverse, kind="stable")
        sorted_edges = inverse[order]
        starts = np.searchsorted(sorted_edges, inner)
        first = he[order[starts]]
        second = he[order[starts + 1]]
        same_dir = (first == second).all(axis=1)
        defects += [("orientation", int(e)) for e in inner[same_dir]]

    boundary_count = 0
    is_connected = True
    if t.size:
        # vertices not used by any face form trivial components; ignore them
        used = np.zeros(n, dtype=bool)
        used[t.ravel()] = True
        sub = m.vertex_adjacency()[used][:, used]
        n_comp, _ = csgraph.connected_components(sub, directed=False)
        is_connected = n_comp <= 1
        boundary_count = _count_boundary_loops(m)

    is_manifold = not any(d[0] in ("non-manifold-edge", "orientation") for d in defects)
    return ValidationReport(is_manifold, is_connected, boundary_count, defects)


def _count_boundary_loops(m: Mesh) -> int:
    edges = m.edges()[m.boundary_edge_mask()]
    if not len(edges):
        return 0
    n = m.n_vertices
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    g = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    used = np.unique(edges)
    n_comp, _ = csgraph.connected_components(g[used][:, used], directed=False)
    return int(n_comp)


# ---------------------------------------------------------------------------
# region labels


@dataclass
class RegionLabeling:
    """Per-face region ids in {0..K}; 0 marks the area left untouched."""

    face_labels: np.ndarray
    region_count: int  # K

    def __post_init__(self):
        self.face_labels = np.asarray(self.face_labels, dtype=np.int64)

    def validate(self, m: Mesh) -> None:
        if len(self.face_labels) != m.n_triangles:
            raise ValueError(
                f"labeling covers {len(self.face_labels)} faces, mesh has {m.n_triangles}"
            )
        if self.face_labels.min(initial=0) < 0 or self.face_labels.max(initial=0) > self.region_count:
            raise ValueError("face label outside {0..K}")
        for r in range(1, self.region_count + 1):
            faces = np.where(self.face_labels == r)[0]
            if not len(faces):
                raise ValueError(f"region {r} is empty")
            if not _faces_connected(m, faces):
                raise ValueError(f"region {r} is not face-connected")

    def to_json_dict(self) -> dict:
        return {"K": int(self.region_count), "face_labels": self.face_labels.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "RegionLabeling":
        return cls(np.asarray(d["face_labels"], dtype=np.int64), int(d["K"]))


def _faces_connected(m: Mesh, faces: np.ndarray) -> bool:
    if len(faces) <= 1:
        return True
    pairs = m.face_adjacency_pairs()
    sel = np.zeros(m.n_triangles, dtype=bool)
    sel[faces] = True
    keep = pairs[sel[pairs[:, 0]] & sel[pairs[:, 1]]]
    remap = -np.ones(m.n_triangles, dtype=np.int64)
    remap[faces] = np.arange(len(faces))
    k = len(faces)
    g = sparse.csr_matrix(
        (np.ones(len(keep)), (remap[keep[:, 0]], remap[keep[:, 1]])), shape=(k, k)
    )
    n_comp, _ = csgraph.connected_components(g, directed=False)
    return n_comp == 1


def region_adjacency(m: Mesh, labels: RegionLabeling) -> dict[tuple[int, int], float]:
    """Undirected region adjacency with total shared boundary length.

    Returns ``{(i, j): length}`` with ``i < j`` for every pair of labels
    (including 0) separated by at least one mesh edge.
    """
    if len(labels.face_labels) != m.n_triangles:
        raise ValueError("labeling does not match mesh")
    inc = m.edge_face_incidence()
    interior = inc[:, 1] >= 0
    la = labels.face_labels[inc[interior, 0]]
    lb = labels.face_labels[inc[interior, 1]]
    diff = la != lb
    lengths = m.edge_lengths()[interior][diff]
    lo = np.minimum(la[diff], lb[diff])
    hi = np.maximum(la[diff], lb[diff])
    out: dict[tuple[int, int], float] = {}
    for a, b, ln in zip(lo, hi, lengths):
        key = (int(a), int(b))
        out[key] = out.get(key, 0.0) + float(ln)
    return out


# ---------------------------------------------------------------------------
# cotangent Laplacian


def cotan_weights(vertices: np.ndarray, triangles: np.ndarray, clamp: bool = True):
    """Per-edge cotangent weights w_ij = 0.5 (cot a + cot b) for a face set.

    Returns (edges (E,2) sorted rows, weights (E,)). Negative weights are
    clamped to zero so downstream diffusion keeps the maximum principle.
    """
    v = vertices
    t = np.asarray(triangles)
    ii, jj, ww = [], [], []
    for k in range(3):
        a = t[:, k]
        b = t[:, (k + 1) % 3]
        opp = t[:, (k + 2) % 3]
        u1 = v[a] - v[opp]
        u2 = v[b] - v[opp]
        cos_ = (u1 * u2).sum(1)
        sin_ = np.linalg.norm(np.cross(u1, u2), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            cot = np.where(sin_ > 0, cos_ / np.where(sin_ == 0, 1, sin_), 0.0)
        ii.append(np.minimum(a, b))
        jj.append(np.maximum(a, b))
        ww.append(0.5 * cot)
    ii = np.concatenate(ii)
    jj = np.concatenate(jj)
    ww = np.concatenate(ww)
    und = np.stack([ii, jj], axis=1)
    edges, inverse = np.unique(und, axis=0, return_inverse=True)
    weights = np.zeros(len(edges))
    np.add.at(weights, inverse.ravel(), ww)
    if clamp:
        weights = np.maximum(weights, 0.0)
    return edges, weights


def cotangent_laplacian(m: Mesh, vertex_subset) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Clamped cotangent Laplacian over the patch induced by a vertex set.

    The patch consists of the mesh triangles whose three corners all lie
    in ``vertex_subset``. Returns ``(L, patch_vertices)`` where ``L`` is
    the symmetric PSD operator (diagonal = sum of incident weights, so
    row sums are zero) indexed by ``patch_vertices`` order.
    """
    subset = np.unique(np.asarray(vertex_subset, dtype=np.int64))
    if not len(subset):
        raise ValueError("empty vertex subset")
    sel = np.zeros(m.n_vertices, dtype=bool)
    sel[subset] = True
    faces = m.triangles[sel[m.triangles].all(axis=1)]
    return _patch_laplacian(m.vertices, faces, subset)


def _patch_laplacian(vertices, faces, patch_vertices):
    remap = {}
    for i, v in enumerate(patch_vertices):
        remap[int(v)] = i
    k = len(patch_vertices)
    if len(faces) == 0:
        return sparse.csr_matrix((k, k)), np.asarray(patch_vertices)
    edges, weights = cotan_weights(vertices, faces)
    a = np.array([remap[int(x)] for x in edges[:, 0]])
    b = np.array([remap[int(x)] for x in edges[:, 1]])
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([b, a, a, b])
    data = np.concatenate([-weights, -weights, weights, weights])
    L = sparse.csr_matrix((data, (rows, cols)), shape=(k, k))
    return L, np.asarray(patch_vertices)
