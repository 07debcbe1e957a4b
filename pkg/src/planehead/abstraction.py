"""Builds the coarse abstracted mesh that the stylization optimizes:
anchor vertices along region borders, boundary polylines per region
pair, per-region anchor loops, and the initial quantities the
regularizers pull back toward."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .mesh import Mesh, RegionLabeling

OPEN = -1  # pseudo-label for the open mesh boundary in polyline pair keys

# Anchor spacing along borders, in units of the full mesh's mean edge
# length. Chosen so a K=32 face lands under a hundred anchors while the
# border shape survives.
SPACING_FACTOR = 8.0
# Open-boundary vertices where the rim turns at least this much become
# anchors regardless of spacing, so coarse rims keep their corners.
TURN_ANGLE = np.deg2rad(30.0)


@dataclass
class Polyline:
    pair: tuple[int, int]  # (a, b) with a < b; a == OPEN marks the mesh rim
    anchors: np.ndarray  # ordered anchor indices
    closed: bool


@dataclass
class AbstractedMesh:
    anchors: np.ndarray  # (n, 3) positions
    anchor_sources: np.ndarray  # (n,) full-mesh vertex index
    on_open_boundary: np.ndarray  # (n,) bool, held fixed by the optimizer
    polylines: list[Polyline]
    loops: dict[int, list[np.ndarray]]  # region -> anchor cycles (region on the left)
    initial_normal: np.ndarray  # (K+1, 3), row r for region r (row 0 unused)
    initial_centroid: np.ndarray  # (K+1, 3)
    initial_area: np.ndarray  # (K+1,)
    border_edges: np.ndarray  # (E, 2) anchor pairs on region-region polylines
    initial_edge_length: np.ndarray  # (E,)
    mean_edge_length: float  # border-edge mean, normalizes the vertex energy
    region_count: int
    flags: list[str] = field(default_factory=list)

    @property
    def n_anchors(self) -> int:
        return len(self.anchors)

    def free_mask(self) -> np.ndarray:
        return ~self.on_open_boundary

    def style_pairs(self) -> list[tuple[int, int]]:
        """Adjacent region pairs that take part in exaggeration (both >= 1)."""
        pairs = sorted({pl.pair for pl in self.polylines if pl.pair[0] >= 1})
        return pairs

    def boundary_lengths(self) -> dict[tuple[int, int], float]:
        """Initial length per region pair, summed over its polylines."""
        out: dict[tuple[int, int], float] = {}
        for pl in self.polylines:
            if pl.pair[0] == OPEN:
                continue
            pts = self.anchors[pl.anchors]
            out[pl.pair] = out.get(pl.pair, 0.0) + geometry.polyline_length(pts, pl.closed)
        return out

    def to_json_dict(self) -> dict:
        return {
            "anchors": self.anchors.tolist(),
            "anchor_sources": self.anchor_sources.tolist(),
            "on_open_boundary": self.on_open_boundary.astype(int).tolist(),
            "polylines": [
                {"pair": list(pl.pair), "anchors": pl.anchors.tolist(), "closed": pl.closed}
                for pl in self.polylines
            ],
            "loops": {str(r): [c.tolist() for c in cycles] for r, cycles in self.loops.items()},
            "initial_normal": self.initial_normal.tolist(),
            "initial_centroid": self.initial_centroid.tolist(),
            "initial_area": self.initial_area.tolist(),
            "border_edges": self.border_edges.tolist(),
            "initial_edge_length": self.initial_edge_length.tolist(),
            "mean_edge_length": self.mean_edge_length,
            "region_count": self.region_count,
            "flags": self.flags,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "AbstractedMesh":
        return cls(
            anchors=np.asarray(d["anchors"], dtype=np.float64),
            anchor_sources=np.asarray(d["anchor_sources"], dtype=np.int64),
            on_open_boundary=np.asarray(d["on_open_boundary"], dtype=bool),
            polylines=[
                Polyline(tuple(p["pair"]), np.asarray(p["anchors"], dtype=np.int64), p["closed"])
                for p in d["polylines"]
            ],
            loops={
                int(r): [np.asarray(c, dtype=np.int64) for c in cycles]
                for r, cycles in d["loops"].items()
            },
            initial_normal=np.asarray(d["initial_normal"], dtype=np.float64),
            initial_centroid=np.asarray(d["initial_centroid"], dtype=np.float64),
            initial_area=np.asarray(d["initial_area"], dtype=np.float64),
            border_edges=np.asarray(d["border_edges"], dtype=np.int64).reshape(-1, 2),
            initial_edge_length=np.asarray(d["initial_edge_length"], dtype=np.float64),
            mean_edge_length=float(d["mean_edge_length"]),
            region_count=int(d["region_count"]),
            flags=list(d.get("flags", [])),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "AbstractedMesh":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# construction


def build_abstracted_mesh(
    mesh: Mesh,
    labels: RegionLabeling,
    spacing_factor: float = SPACING_FACTOR,
    validate_labels: bool = True,
) -> AbstractedMesh:
    """Place anchors along region borders and assemble the coarse mesh.

    Anchors are mandatory at corners (vertices touching >= 3 labels and
    border vertices on the open mesh boundary), at sharp rim turns, and
    are otherwise subsampled so consecutive anchors sit at most
    ``spacing_factor * mean_edge_length`` apart. All anchor positions are
    full-mesh vertex positions; the build is deterministic.
    """
    if validate_labels:
        labels.validate(mesh)
    fl = labels.face_labels
    spacing = spacing_factor * mesh.mean_edge_length

    inc = mesh.edge_face_incidence()
    edges = mesh.edges()
    la = fl[inc[:, 0]]
    lb = np.where(inc[:, 1] >= 0, fl[np.maximum(inc[:, 1], 0)], OPEN)
    border_mask = la != lb
    border_idx = np.where(border_mask)[0]
    if not len(border_idx):
        raise ValueError("labeling has no region borders and no open boundary")

    pair_lo = np.minimum(la, lb)[border_idx]
    pair_hi = np.maximum(la, lb)[border_idx]

    # distinct labels incident at each vertex
    vert_labels: dict[int, set[int]] = {}
    for tri, lab in zip(mesh.triangles, fl):
        for v in tri:
            vert_labels.setdefault(int(v), set()).add(int(lab))
    open_vertex = mesh.boundary_vertex_mask()

    mandatory: set[int] = set()
    for v, ls in vert_labels.items():
        if len(ls) >= 3 or (len(ls) >= 2 and open_vertex[v]):
            mandatory.add(v)
    mandatory |= _rim_turn_vertices(mesh)

    # class-local degree; any vertex with degree != 2 inside a class ends chains
    classes: dict[tuple[int, int], list[int]] = {}
    for pos, e in enumerate(border_idx):
        classes.setdefault((int(pair_lo[pos]), int(pair_hi[pos])), []).append(int(e))

    chains = []  # (pair, vertex chain, closed)
    for pair in sorted(classes):
        if pair == (OPEN, 0):
            continue  # rim inside the untouched area: not on any region loop
        chains += _chain_class(edges, classes[pair], pair, mandatory)

    anchor_vertices: set[int] = set()
    chain_anchor_ids: list[list[int]] = []
    for pair, chain, closed in chains:
        picked = _pick_anchors(mesh.vertices, chain, closed, mandatory, spacing)
        if closed and len(picked) < 3:
            raise ValueError(f"border {pair} degenerates to fewer than 3 anchors")
        chain_anchor_ids.append(picked)
        anchor_vertices.update(chain[i] for i in picked)

    sources = np.array(sorted(anchor_vertices), dtype=np.int64)
    index_of = {int(v): i for i, v in enumerate(sources)}
    anchors = mesh.vertices[sources].copy()
    on_open = open_vertex[sources]

    polylines = []
    for (pair, chain, closed), picked in zip(chains, chain_anchor_ids):
        ids = np.array([index_of[chain[i]] for i in picked], dtype=np.int64)
        polylines.append(Polyline(pair, ids, closed))

    loops = _region_loops(mesh, fl, labels.region_count, index_of)

    k = labels.region_count
    init_n = np.zeros((k + 1, 3))
    init_c = np.zeros((k + 1, 3))
    init_a = np.zeros(k + 1)
    for r in range(1, k + 1):
        cycles = [anchors[c] for c in loops[r]]
        init_n[r] = geometry.proxy_normal(cycles)
        init_c[r] = geometry.proxy_centroid(cycles)
        init_a[r] = geometry.loop_area(cycles)
        if not init_a[r] > 0:
            raise ValueError(f"region {r} has zero initial loop area")

    eidx = []
    for pl in polylines:
        if pl.pair[0] == OPEN:
            continue
        a = pl.anchors
        pairs = np.stack([a, np.roll(a, -1)], axis=1) if pl.closed else np.stack(
            [a[:-1], a[1:]], axis=1
        )
        eidx.append(pairs)
    border_edges = (
        np.concatenate(eidx, axis=0) if eidx else np.zeros((0, 2), dtype=np.int64)
    )
    edge_len0 = np.linalg.norm(
        anchors[border_edges[:, 0]] - anchors[border_edges[:, 1]], axis=1
    )
    if (edge_len0 <= 0).any():
        raise ValueError("zero-length border edge in abstracted mesh")

    if len(edge_len0):
        ebar = float(edge_len0.mean())
    else:
        all_len = [
            geometry.polyline_length(anchors[pl.anchors], pl.closed) / max(len(pl.anchors) - 1, 1)
            for pl in polylines
        ]
        ebar = float(np.mean(all_len)) if all_len else mesh.mean_edge_length

    return AbstractedMesh(
        anchors=anchors,
        anchor_sources=sources,
        on_open_boundary=on_open,
        polylines=polylines,
        loops=loops,
        initial_normal=init_n,
        initial_centroid=init_c,
        initial_area=init_a,
        border_edges=border_edges,
        initial_edge_length=edge_len0,
        mean_edge_length=ebar,
        region_count=k,
    )


def _rim_turn_vertices(mesh: Mesh) -> set[int]:
    """Open-boundary vertices where the rim direction turns sharply."""
    edges = mesh.edges()[mesh.boundary_edge_mask()]
    if not len(edges):
        return set()
    nbrs: dict[int, list[int]] = {}
    for a, b in edges:
        nbrs.setdefault(int(a), []).append(int(b))
        nbrs.setdefault(int(b), []).append(int(a))
    out = set()
    v = mesh.vertices
    for p, ns in nbrs.items():
        if len(ns) != 2:
            out.add(p)  # rim pinch: always an anchor
            continue
        d1 = v[p] - v[ns[0]]
        d2 = v[ns[1]] - v[p]
        c = np.dot(d1, d2) / (np.linalg.norm(d1) * np.linalg.norm(d2))
        if np.arccos(np.clip(c, -1, 1)) >= TURN_ANGLE:
            out.add(p)
    return out


def _chain_class(edges, edge_ids, pair, mandatory):
    """Split one border class into chains ending at mandatory anchors."""
    adj: dict[int, list[int]] = {}
    for e in edge_ids:
        a, b = int(edges[e, 0]), int(edges[e, 1])
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    endpoint_set = {v for v, ns in adj.items() if v in mandatory or len(ns) != 2}
    endpoints = sorted(endpoint_set)
    used: set[tuple[int, int]] = set()

    def take(a, b):
        used.add((min(a, b), max(a, b)))

    def taken(a, b):
        return (min(a, b), max(a, b)) in used

    chains = []
    for start in endpoints:
        for nxt in sorted(adj[start]):
            if taken(start, nxt):
                continue
            chain = [start, nxt]
            take(start, nxt)
            while chain[-1] not in endpoint_set:
                cur, prev = chain[-1], chain[-2]
                options = [w for w in adj[cur] if w != prev and not taken(cur, w)]
                if not options:
                    break
                w = options[0]
                take(cur, w)
                chain.append(w)
            if chain[-1] == chain[0]:
                chains.append((pair, chain[:-1], True))
            else:
                chains.append((pair, chain, False))
    # untouched edges form closed cycles without mandatory anchors
    for e in edge_ids:
        a, b = int(edges[e, 0]), int(edges[e, 1])
        if taken(a, b):
            continue
        start = min(a, b)
        chain = [start]
        cur, prev = start, None
        while True:
            options = [w for w in adj[cur] if w != prev and not taken(cur, w)]
            if not options:
                break
            w = min(options)
            take(cur, w)
            chain.append(w)
            prev, cur = cur, w
            if cur == start:
                chain.pop()
                break
        chains.append((pair, chain, True))
    return chains


def _pick_anchors(vertices, chain, closed, mandatory, spacing):
    """Indices into ``chain`` that become anchors: mandatory vertices plus
    arc-length subsampling so gaps stay <= spacing."""
    pts = vertices[np.asarray(chain)]
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    n = len(chain)
    fixed = sorted(
        {i for i in range(n) if chain[i] in mandatory}
        | ({0, n - 1} if not closed else set())
    )
    if closed:
        if not fixed:
            fixed = [0]
        total = arc[-1] + np.linalg.norm(pts[-1] - pts[0])
    else:
        total = arc[-1]

    picked = set(fixed)
    spans = list(zip(fixed[:-1], fixed[1:]))
    if closed and fixed:
        spans.append((fixed[-1], fixed[0] + n))  # wraps; use extended arc

    def arc_at(i):
        if i < n:
            return arc[i]
        return total + arc[i - n]

    for p, q in spans:
        length = arc_at(q) - arc_at(p)
        if length <= spacing or q - p < 2:
            continue
        k = int(np.ceil(length / spacing))
        targets = [arc_at(p) + j * length / k for j in range(1, k)]
        lo = p
        for t in targets:
            cand = range(lo + 1, q)
            best = min(cand, key=lambda i: abs(arc_at(i) - t), default=None)
            if best is None:
                break
            picked.add(best % n)
            lo = best
    sel = sorted(picked)

    # guarantee the spacing bound where the chain resolution allows it
    changed = True
    while changed:
        changed = False
        sel = sorted(picked)
        ring = sel + ([sel[0] + n] if closed else [])
        for a, b in zip(ring[:-1], ring[1:]):
            if arc_at(b) - arc_at(a) > spacing * (1 + 1e-9) and b - a >= 2:
                mid_t = 0.5 * (arc_at(a) + arc_at(b))
                best = min(range(a + 1, b), key=lambda i: abs(arc_at(i) - mid_t))
                picked.add(best % n)
                changed = True
                break

    sel = sorted(picked)
    if closed and len(sel) < 3 and n >= 3:
        for frac in (1 / 3, 2 / 3):
            tgt = total * frac
            best = min(range(n), key=lambda i: abs(arc[i] - tgt))
            picked.add(best)
        sel = sorted(picked)
    return sel


def _region_loops(mesh: Mesh, face_labels, k, anchor_index):
    """Ordered anchor cycles bounding each region, region on the left."""
    tri = mesh.triangles
    # directed halfedge -> (face, next vertex in that face)
    succ_in_face: dict[tuple[int, int], int] = {}
    he_face: dict[tuple[int, int], int] = {}
    for f, (a, b, c) in enumerate(tri):
        for u, v, w in ((a, b, c), (b, c, a), (c, a, b)):
            succ_in_face[(int(u), int(v))] = int(w)
            he_face[(int(u), int(v))] = f

    border_by_region: dict[int, list[tuple[int, int]]] = {r: [] for r in range(1, k + 1)}
    for (u, v), f in he_face.items():
        r = int(face_labels[f])
        if r == 0:
            continue
        rev = (v, u)
        if rev not in he_face or face_labels[he_face[rev]] != r:
            border_by_region[r].append((u, v))

    loops: dict[int, list[np.ndarray]] = {r: [] for r in range(1, k + 1)}
    for r in range(1, k + 1):
        border_hes = sorted(border_by_region[r])
        unvisited = set(border_hes)
        for start in border_hes:
            if start not in unvisited:
                continue
            loop_vertices = []
            cur = start
            while True:
                unvisited.discard(cur)
                loop_vertices.append(cur[0])
                nxt = _border_successor(cur, r, face_labels, succ_in_face, he_face)
                if nxt == start:
                    break
                cur = nxt
            cycle = [anchor_index[v] for v in loop_vertices if v in anchor_index]
            if len(cycle) >= 3:
                loops[r].append(np.asarray(cycle, dtype=np.int64))
        if not loops[r]:
            raise ValueError(f"region {r} has no usable boundary loop")
    return loops


def _border_successor(he, r, face_labels, succ_in_face, he_face):
    """Next border halfedge of region r after (a, b): rotate around b
    through r's face fan until the border is hit again."""
    a, b = he
    c = succ_in_face[(a, b)]
    guard = 0
    while True:
        guard += 1
        if guard > 100000:
            raise RuntimeError("border walk did not terminate")
        rev = (c, b)
        if rev not in he_face or face_labels[he_face[rev]] != r:
            return (b, c)
        # interior edge of the region: hop into the neighbor face
        c = succ_in_face[rev]


# ---------------------------------------------------------------------------
# display triangulation


def triangulate_regions(a: AbstractedMesh) -> tuple[Mesh, list[int]]:
    """Fill each region loop with triangles for display.

    Regions whose projected loop cannot be ear-clipped (self-intersecting
    projection) fall back to a fan around the loop centroid (which adds
    that centroid as a vertex) and are reported in the flagged list.
    """
    verts = [a.anchors.copy()]
    extra_base = a.n_anchors
    tris = []
    flagged = []
    for r in range(1, a.region_count + 1):
        cycles = a.loops[r]
        normal = a.initial_normal[r]
        u, v = geometry.plane_basis(normal)
        ok = len(cycles) == 1
        if ok:
            cycle = cycles[0]
            pts = a.anchors[cycle]
            p2 = np.stack([pts @ u, pts @ v], axis=1)
            ears = geometry.ear_clip(p2)
            if ears is not None:
                # keep the region's outward orientation
                flip = geometry.proxy_normal([pts]) @ normal < 0
                for t in ears:
                    face = [int(cycle[t[0]]), int(cycle[t[1]]), int(cycle[t[2]])]
                    tris.append(face[::-1] if flip else face)
                continue
        flagged.append(r)
        for cycle in cycles:
            pts = a.anchors[cycle]
            center = pts.mean(axis=0)
            cid = extra_base + sum(len(x) for x in verts[1:])
            verts.append(center[None, :])
            m = len(cycle)
            for i in range(m):
                tris.append([cid, int(cycle[i]), int(cycle[(i + 1) % m])])
    allverts = np.concatenate(verts, axis=0)
    return Mesh(allverts, np.asarray(tris, dtype=np.int64), validate=False), flagged
