"""Procedural meshes used by the test-suite, the CLI demos and the
shipped face template. Everything here is deterministic."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, RegionLabeling
from .metrics import LandmarkSet


def single_triangle() -> Mesh:
    v = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    return Mesh(v, np.array([[0, 1, 2]]))


def unit_cube() -> Mesh:
    """Closed unit cube, 8 vertices / 12 CCW triangles (normals outward)."""
    v = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=float,
    )
    quads = [
        ([0, 3, 2, 1], "-z"),
        ([4, 5, 6, 7], "+z"),
        ([0, 1, 5, 4], "-y"),
        ([2, 3, 7, 6], "+y"),
        ([1, 2, 6, 5], "+x"),
        ([0, 4, 7, 3], "-x"),
    ]
    tris = []
    for q, _ in quads:
        tris.append([q[0], q[1], q[2]])
        tris.append([q[0], q[2], q[3]])
    return Mesh(v, np.array(tris))


def cube_face_labels() -> RegionLabeling:
    """One region per geometric cube face (regions 1..6)."""
    labels = np.repeat(np.arange(1, 7), 2)
    return RegionLabeling(labels, 6)


def two_squares(dihedral: float = np.pi) -> tuple[Mesh, RegionLabeling]:
    """Two unit squares hinged along the y-axis; ``dihedral`` is the
    interior angle between them (pi = coplanar). Regions 1 and 2."""
    half = (np.pi - dihedral) / 2.0
    c, s = np.cos(half), np.sin(half)
    v = np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [c, 0.0, s],
            [c, 1.0, s],
            [-c, 0.0, s],
            [-c, 1.0, s],
        ]
    )
    tris = np.array([[0, 2, 3], [0, 3, 1], [0, 1, 5], [0, 5, 4]])
    labels = RegionLabeling(np.array([1, 1, 2, 2]), 2)
    return Mesh(v, tris), labels


def hinge_abstracted(dihedral: float = np.pi):
    """Two unit-square regions sharing a hinge edge, built directly as an
    AbstractedMesh: the minimal optimization testbed. The two hinge
    anchors are held fixed (they would sit on the open boundary of any
    real two-square mesh); the four outer corners are free. ``dihedral``
    is the interior angle (pi = coplanar); both square normals face
    +z-ish."""
    from . import geometry
    from .abstraction import AbstractedMesh, Polyline

    half = (np.pi - dihedral) / 2.0
    c, s = np.cos(half), np.sin(half)
    anchors = np.array(
        [
            [0.0, 0.0, 0.0],  # hinge bottom
            [0.0, 1.0, 0.0],  # hinge top
            [c, 0.0, s],
            [c, 1.0, s],
            [-c, 0.0, s],
            [-c, 1.0, s],
        ]
    )
    loops = {
        1: [np.array([0, 2, 3, 1], dtype=np.int64)],
        2: [np.array([0, 1, 5, 4], dtype=np.int64)],
    }
    init_n = np.zeros((3, 3))
    init_c = np.zeros((3, 3))
    init_a = np.zeros(3)
    for r in (1, 2):
        pts = anchors[loops[r][0]]
        init_n[r] = geometry.proxy_normal([pts])
        init_c[r] = geometry.proxy_centroid([pts])
        init_a[r] = geometry.loop_area([pts])
    return AbstractedMesh(
        anchors=anchors,
        anchor_sources=np.arange(6, dtype=np.int64),
        on_open_boundary=np.array([True, True, False, False, False, False]),
        polylines=[Polyline((1, 2), np.array([0, 1], dtype=np.int64), False)],
        loops=loops,
        initial_normal=init_n,
        initial_centroid=init_c,
        initial_area=init_a,
        border_edges=np.array([[0, 1]], dtype=np.int64),
        initial_edge_length=np.array([1.0]),
        mean_edge_length=1.0,
        region_count=2,
    )


def grid_mesh(nx: int, ny: int, width: float = 1.0, height: float = 1.0,
              z=None, mirror_x: bool = False) -> Mesh:
    """Regular grid of (nx x ny) cells, each split into two triangles.

    ``z`` may be a callable z(x, y) evaluated on the vertex grid.
    Triangles are CCW seen from +z. With ``mirror_x`` the diagonal flips
    in the right half so the triangulation is mirror-symmetric about the
    grid's vertical midline (nx should be even).
    """
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gz = z(gx, gy) if z is not None else np.zeros_like(gx)
    verts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if mirror_x and i >= nx // 2:
                tris.append([a, b, d])
                tris.append([b, c, d])
            else:
                tris.append([a, b, c])
                tris.append([a, c, d])
    return Mesh(verts, np.array(tris))


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> Mesh:
    """Subdivided icosahedron; level 6 is ~41k vertices / ~82k faces."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    t = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    for _ in range(subdivisions):
        v, t = _subdivide_once(v, t)
    v = v / np.linalg.norm(v, axis=1, keepdims=True) * radius
    return Mesh(v, t)


def _subdivide_once(v: np.ndarray, t: np.ndarray):
    edges = np.sort(t[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
    mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    newv = np.vstack([v, mid])
    m = inverse.reshape(-1, 3) + len(v)  # midpoint ids per face edge (01, 12, 20)
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    ab, bc, ca = m[:, 0], m[:, 1], m[:, 2]
    newt = np.concatenate(
        [
            np.stack([a, ab, ca], 1),
            np.stack([b, bc, ab], 1),
            np.stack([c, ca, bc], 1),
            np.stack([ab, bc, ca], 1),
        ]
    )
    return newv, newt


def octant_labels(m: Mesh) -> RegionLabeling:
    """Eight regions by face-centroid sign octant (for closed spheres)."""
    cen = m.vertices[m.triangles].mean(axis=1)
    bits = (cen >= 0).astype(np.int64)
    labels = 1 + bits[:, 0] * 4 + bits[:, 1] * 2 + bits[:, 2]
    return RegionLabeling(labels, 8)


def subdivided_sphere_30k() -> Mesh:
    """The large benchmark fixture (40962 vertices)."""
    return icosphere(6)


# ---------------------------------------------------------------------------
# synthetic face


_FACE_SITES = [
    # (region name, x, y) — Voronoi sites on the mask; ids are 1-based in
    # list order. Symmetric pairs share coordinates mirrored in x.
    ("forehead_center", 0.00, 0.78),
    ("forehead_l", -0.34, 0.76),
    ("forehead_r", 0.34, 0.76),
    ("temple_l", -0.66, 0.55),
    ("temple_r", 0.66, 0.55),
    ("brow_l", -0.30, 0.50),
    ("brow_r", 0.30, 0.50),
    ("glabella", 0.00, 0.44),
    ("socket_upper_l", -0.30, 0.33),
    ("socket_upper_r", 0.30, 0.33),
    ("socket_lower_l", -0.30, 0.16),
    ("socket_lower_r", 0.30, 0.16),
    ("nose_bridge", 0.00, 0.26),
    ("nose_side_l", -0.12, -0.02),
    ("nose_side_r", 0.12, -0.02),
    ("nose_tip", 0.00, -0.16),
    ("cheekbone_l", -0.58, 0.14),
    ("cheekbone_r", 0.58, 0.14),
    ("cheek_l", -0.46, -0.22),
    ("cheek_r", 0.46, -0.22),
    ("philtrum", 0.00, -0.38),
    ("mouth_l", -0.24, -0.52),
    ("mouth_r", 0.24, -0.52),
    ("lower_lip", 0.00, -0.62),
    ("chin", 0.00, -0.84),
    ("chin_side_l", -0.26, -0.78),
    ("chin_side_r", 0.26, -0.78),
    ("jaw_l", -0.56, -0.52),
    ("jaw_r", 0.56, -0.52),
    ("septum", 0.00, -0.33),
    ("side_face_l", -0.76, -0.10),
    ("side_face_r", 0.76, -0.10),
]

_FACE_LANDMARKS = {
    # landmark name -> (x, y) snapped to the nearest grid vertex
    "inner_eye_L": (-0.16, 0.28),
    "inner_eye_R": (0.16, 0.28),
    "outer_eye_L": (-0.46, 0.30),
    "outer_eye_R": (0.46, 0.30),
    "brow_mid_L": (-0.30, 0.44),
    "brow_mid_R": (0.30, 0.44),
    "mouth_corner_L": (-0.26, -0.52),
    "mouth_corner_R": (0.26, -0.52),
    "nose_tip": (0.0, -0.2083),
    "nose_bridge": (0.0, 0.26),
    "chin": (0.0, -0.92),
    "ear_base_L": (-0.94, 0.04),
    "ear_base_R": (0.94, 0.04),
    "ear_notch_L": (-0.94, 0.16),
    "ear_notch_R": (0.94, 0.16),
    "nostril_L": (-0.20, -0.44),
    "nostril_R": (0.20, -0.44),
}


def _face_relief(x, y):
    """Height field with the angular landscape of a face mask: a snub
    tent-profile nose (planar flanks, sharp crest), brow bar, eye
    hollows, cheekbones, and mouth/chin mounds over a gentle dome."""

    def bump(cx, cy, sx, sy, h):
        return h * np.exp(-(((x - cx) / sx) ** 2 + ((y - cy) / sy) ** 2))

    z = 0.30 * (1.0 - 0.45 * (x ** 2 + 0.55 * y ** 2))
    # nose tent, tallest near the tip
    nose_mask = np.exp(-(((y + 0.18) / 0.22) ** 2))
    z = z + 0.56 * np.maximum(0.0, 1.0 - np.abs(x) / 0.17) * nose_mask
    # brow bar: tent crest along y = 0.48
    brow_mask = np.exp(-(((np.abs(x) - 0.32) / 0.20) ** 2))
    z = z + 0.17 * np.maximum(0.0, 1.0 - np.abs(y - 0.48) / 0.14) * brow_mask
    # eye hollows
    z = z - bump(-0.30, 0.25, 0.15, 0.11, 0.20) - bump(0.30, 0.25, 0.15, 0.11, 0.20)
    # cheekbones
    z = z + bump(-0.55, 0.10, 0.20, 0.16, 0.10) + bump(0.55, 0.10, 0.20, 0.16, 0.10)
    # mouth mound and chin
    z = z + bump(0.0, -0.50, 0.30, 0.14, 0.10)
    z = z + bump(0.0, -0.86, 0.22, 0.14, 0.12)
    # fade everything to zero at the rim so the mask sits on a flat band
    fade = np.clip(1.15 - (x ** 2 + y ** 2), 0.0, 1.0)
    return z * fade


def synthetic_face(grid: int = 44):
    """Deterministic face-mask fixture.

    Returns ``(mesh, labeling, landmarks)``: an open grid mesh over
    [-1, 1]^2 with a face-like relief, 32 face-connected regions from a
    clipped Voronoi partition (label 0 = outer band / ears), and the
    named landmark vertices. The default resolution is tuned so the
    abstracted mesh stays under a hundred anchors; other resolutions
    change where borders snap to the grid and with them the stylization
    response, so tests pin the default.
    """
    n = grid
    mesh = grid_mesh(
        n, n, width=2.0, height=2.0,
        z=lambda gx, gy: _face_relief(gx - 1.0, gy - 1.0),
        mirror_x=True,
    )
    verts = mesh.vertices.copy()
    verts[:, 0] -= 1.0
    verts[:, 1] -= 1.0
    mesh = Mesh(verts, mesh.triangles, validate=False)

    sites = np.array([[sx, sy] for _, sx, sy in _FACE_SITES])
    cen = mesh.vertices[mesh.triangles].mean(axis=1)[:, :2]
    d2 = ((cen[:, None, :] - sites[None, :, :]) ** 2).sum(-1)
    labels = np.argmin(d2, axis=1) + 1
    oval = (cen[:, 0] / 0.90) ** 2 + (cen[:, 1] / 0.96) ** 2
    labels[oval > 1.0] = 0
    labeling = _compact_connected(mesh, labels)

    lms = {}
    for name, (lx, ly) in _FACE_LANDMARKS.items():
        d = (mesh.vertices[:, 0] - lx) ** 2 + (mesh.vertices[:, 1] - ly) ** 2
        lms[name] = int(np.argmin(d))
    return mesh, labeling, LandmarkSet(lms)


def face_template(grid: int = 32):
    """The face fixture with a vote-stable labeling for template transfer.

    Nearest-vertex label transfer votes faces from vertex labels, which
    shifts borders on labelings that are not fixed points of that vote.
    This variant iterates the transfer onto itself until the labeling is
    exactly reproduced, so transferring the template onto an identical
    (or slightly perturbed) input returns it unchanged. The default grid
    is one whose fixed point keeps all 32 regions well clear of the
    sliver-merge threshold.
    """
    from .segmentation import LabeledTemplate, transfer_labels

    mesh, labels, landmarks = synthetic_face(grid)
    for _ in range(14):
        nxt = transfer_labels(mesh, LabeledTemplate(mesh, labels))
        if (nxt.face_labels == labels.face_labels).all() and nxt.region_count == labels.region_count:
            return mesh, nxt, landmarks
        labels = nxt
    raise RuntimeError("face template labeling did not reach a vote-stable fixed point")


def packaged_template_paths():
    """Paths of the face template shipped with the package
    (PLY + labels JSON + landmarks JSON), for `segment --mode template`."""
    from importlib import resources

    base = resources.files("planehead") / "data"
    return (
        str(base / "face_template.ply"),
        str(base / "face_template.labels.json"),
        str(base / "face_template.landmarks.json"),
    )


def _compact_connected(mesh: Mesh, labels: np.ndarray) -> RegionLabeling:
    """Split disconnected label components, then compact ids to 1..K.

    Used by fixture generation; the Voronoi cells are convex so splits are
    rare, but clipping by the oval can strand slivers.
    """
    from scipy import sparse
    from scipy.sparse import csgraph

    pairs = mesh.face_adjacency_pairs()
    out = np.zeros_like(labels)
    next_id = 1
    for r in np.unique(labels):
        if r == 0:
            continue
        faces = np.where(labels == r)[0]
        sel = np.zeros(mesh.n_triangles, dtype=bool)
        sel[faces] = True
        keep = pairs[sel[pairs[:, 0]] & sel[pairs[:, 1]]]
        remap = -np.ones(mesh.n_triangles, dtype=np.int64)
        remap[faces] = np.arange(len(faces))
        g = sparse.csr_matrix(
            (np.ones(len(keep)), (remap[keep[:, 0]], remap[keep[:, 1]])),
            shape=(len(faces), len(faces)),
        )
        n_comp, comp = csgraph.connected_components(g, directed=False)
        sizes = np.bincount(comp)
        main = np.argmax(sizes)
        for c in range(n_comp):
            if c == main:
                out[faces[comp == c]] = next_id
            else:
                # stranded sliver: fold into the outside band
                out[faces[comp == c]] = 0
        next_id += 1
    return RegionLabeling(out, next_id - 1)
