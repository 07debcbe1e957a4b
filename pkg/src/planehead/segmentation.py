"""Region labeling: variational shape approximation for generic models
and nearest-vertex label transfer from a pre-aligned template for faces."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .mesh import Mesh, RegionLabeling, region_adjacency


@dataclass
class VsaProxy:
    region: int
    normal: np.ndarray  # unit
    seed_face: int


@dataclass
class LabeledTemplate:
    mesh: Mesh
    labels: RegionLabeling


@dataclass
class VsaResult:
    labeling: RegionLabeling
    proxies: list[VsaProxy]
    energies: list[float] = field(default_factory=list)


def vsa_energy(m: Mesh, labels: np.ndarray, normals_by_region: np.ndarray) -> float:
    """Sum over faces of A_t * |n_t - n_r(t)|^2."""
    fn, fa = m.face_normals_and_areas()
    diff = fn - normals_by_region[labels]
    return float((fa * (diff * diff).sum(axis=1)).sum())


def _face_adjacency_lists(m: Mesh):
    pairs = m.face_adjacency_pairs()
    adj = [[] for _ in range(m.n_triangles)]
    for a, b in pairs:
        adj[int(a)].append(int(b))
        adj[int(b)].append(int(a))
    return adj


def _farthest_face_seeds(m: Mesh, k: int, rng: np.random.Generator) -> list[int]:
    """Greedy farthest-point sampling on the face graph (centroid hops)."""
    cen = m.vertices[m.triangles].mean(axis=1)
    adj = _face_adjacency_lists(m)

    def dijkstra_from(sources, dist):
        heap = [(0.0, s) for s in sources]
        for s in sources:
            dist[s] = 0.0
        heapq.heapify(heap)
        while heap:
            d, f = heapq.heappop(heap)
            if d > dist[f]:
                continue
            for g in adj[f]:
                nd = d + float(np.linalg.norm(cen[f] - cen[g]))
                if nd < dist[g]:
                    dist[g] = nd
                    heapq.heappush(heap, (nd, g))

    first = int(rng.integers(m.n_triangles))
    dist = np.full(m.n_triangles, np.inf)
    dijkstra_from([first], dist)
    seeds = [int(np.argmax(dist))]
    dist = np.full(m.n_triangles, np.inf)
    dijkstra_from(seeds, dist)
    while len(seeds) < k:
        nxt = int(np.argmax(dist))
        seeds.append(nxt)
        dijkstra_from([nxt], dist)
    return seeds


def vsa(m: Mesh, k: int, max_iters: int = 20, seed: int = 0) -> VsaResult:
    """Lloyd-style VSA: priority region growing against plane proxies,
    then an area-weighted normal refit, until labels settle.

    The per-iteration energy is non-increasing: an assignment pass that
    would raise it reverts to the previous labeling and stops.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > m.n_triangles:
        raise ValueError(f"k={k} exceeds face count {m.n_triangles}")
    rng = np.random.default_rng(seed)
    fn, fa = m.face_normals_and_areas()
    adj = _face_adjacency_lists(m)
    seeds = _farthest_face_seeds(m, k, rng)
    normals = fn[seeds].copy()  # (k, 3)

    def grow(seed_faces):
        labels = np.full(m.n_triangles, -1, dtype=np.int64)
        heap = []
        for r, f in enumerate(seed_faces):
            heapq.heappush(heap, (0.0, f, r))
        while heap:
            err, f, r = heapq.heappop(heap)
            if labels[f] != -1:
                continue
            labels[f] = r
            for g in adj[f]:
                if labels[g] == -1:
                    d = fn[g] - normals[r]
                    heapq.heappush(heap, (float(fa[g] * (d * d).sum()), g, r))
        if (labels == -1).any():
            raise ValueError("mesh is not face-connected; VSA needs a connected input")
        return labels

    labels = grow(seeds)
    energies = []
    best = None
    for _ in range(max_iters):
        # refit proxies: area-weighted mean normal per region
        for r in range(k):
            sel = labels == r
            s = (fa[sel, None] * fn[sel]).sum(axis=0)
            nrm = np.linalg.norm(s)
            if nrm > 0:
                normals[r] = s / nrm
        e = vsa_energy(m, labels, normals)
        if best is not None and e > best[0] + 1e-12:
            labels, normals = best[1], best[2]
            energies.append(best[0])
            break
        energies.append(e)
        best = (e, labels.copy(), normals.copy())
        # reseed each region at its best-fitting face, then regrow
        seeds = []
        for r in range(k):
            faces = np.where(labels == r)[0]
            d = fn[faces] - normals[r]
            seeds.append(int(faces[np.argmin(fa[faces] * (d * d).sum(axis=1))]))
        new_labels = grow(seeds)
        if (new_labels == labels).all():
            break
        labels = new_labels

    proxies = [VsaProxy(r + 1, normals[r].copy(), seeds[r]) for r in range(k)]
    return VsaResult(RegionLabeling(labels + 1, k), proxies, energies)


def vsa_segment(m: Mesh, k: int, max_iters: int = 20, seed: int = 0) -> RegionLabeling:
    return vsa(m, k, max_iters=max_iters, seed=seed).labeling


# ---------------------------------------------------------------------------
# template label transfer


def _vertex_labels_from_faces(m: Mesh, labels: RegionLabeling) -> np.ndarray:
    """Majority label of incident faces per vertex (tie: lowest id)."""
    counts = np.zeros((m.n_vertices, labels.region_count + 1), dtype=np.int64)
    for corner in range(3):
        np.add.at(counts, (m.triangles[:, corner], labels.face_labels), 1)
    return np.argmax(counts, axis=1)  # argmax breaks ties at the lowest id


def _majority_face_labels(tri_vertex_labels: np.ndarray) -> np.ndarray:
    a, b, c = tri_vertex_labels.T
    out = np.minimum(np.minimum(a, b), c)  # all-distinct: lowest id
    out = np.where(a == b, a, out)
    out = np.where(b == c, b, out)
    out = np.where(a == c, a, out)
    return out


def transfer_labels(m: Mesh, template: LabeledTemplate,
                    min_area_fraction: float = 1e-3) -> RegionLabeling:
    """Label a pre-aligned input by nearest template vertex.

    Vertices inherit the region of the Euclidean-nearest template vertex,
    faces take the majority of their three vertex labels (ties to the
    lowest id). Components that come out disconnected are split into
    fresh regions and anything below ``min_area_fraction`` of the total
    area is merged into its longest-boundary neighbor; ids are compacted.
    """
    if template.mesh.n_vertices == 0:
        raise ValueError("empty template")
    tvl = _vertex_labels_from_faces(template.mesh, template.labels)
    tree = cKDTree(template.mesh.vertices)
    _, nearest = tree.query(m.vertices)
    vertex_labels = tvl[nearest]
    face_labels = _majority_face_labels(vertex_labels[m.triangles])
    face_labels = _split_components(m, face_labels)
    face_labels = _merge_small(m, face_labels, min_area_fraction)
    return _compact(face_labels)


def _split_components(m: Mesh, labels: np.ndarray) -> np.ndarray:
    pairs = m.face_adjacency_pairs()
    same = labels[pairs[:, 0]] == labels[pairs[:, 1]]
    keep = pairs[same]
    g = sparse.csr_matrix(
        (np.ones(len(keep)), (keep[:, 0], keep[:, 1])),
        shape=(m.n_triangles, m.n_triangles),
    )
    _, comp = csgraph.connected_components(g, directed=False)
    out = np.zeros_like(labels)
    next_id = 1
    for c in np.unique(comp):
        faces = comp == c
        if labels[np.argmax(faces)] == 0:
            continue  # the outside area may be disconnected
        out[faces] = next_id
        next_id += 1
    return out


def _merge_small(m: Mesh, labels: np.ndarray, min_fraction: float) -> np.ndarray:
    _, fa = m.face_normals_and_areas()
    total = fa.sum()
    labels = labels.copy()
    while True:
        ids = [r for r in np.unique(labels) if r != 0]
        areas = {r: fa[labels == r].sum() for r in ids}
        small = [r for r in ids if areas[r] < min_fraction * total]
        if not small:
            return labels
        r = min(small, key=lambda r: areas[r])
        adj = region_adjacency(m, RegionLabeling(labels, int(labels.max())))
        borders = {}
        for (i, j), ln in adj.items():
            if i == r:
                borders[j] = borders.get(j, 0.0) + ln
            elif j == r:
                borders[i] = borders.get(i, 0.0) + ln
        borders.pop(0, None)
        if not borders:
            labels[labels == r] = 0
        else:
            target = max(sorted(borders), key=lambda t: borders[t])
            labels[labels == r] = target


def _compact(labels: np.ndarray) -> RegionLabeling:
    ids = sorted(r for r in np.unique(labels) if r != 0)
    remap = {0: 0}
    for new, old in enumerate(ids, start=1):
        remap[old] = new
    out = np.array([remap[int(x)] for x in labels], dtype=np.int64)
    return RegionLabeling(out, len(ids))
