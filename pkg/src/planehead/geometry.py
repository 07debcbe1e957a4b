"""Loop-based proxy geometry shared by the abstractor and the stylizer.

A region of the abstracted mesh is represented purely by its ordered
anchor loops; its plane proxy (normal, centroid) and area are derived
from boundary edges only, which matches the area-weighted average over
the interior triangles exactly for the full boundary and approximates it
for the subsampled one.
"""

from __future__ import annotations

import numpy as np


class DegenerateLoopError(ValueError):
    pass


def loop_vector_area(loops: list[np.ndarray]) -> np.ndarray:
    """Half the sum of v_i x v_{i+1} over every closed loop (3-vector)."""
    total = np.zeros(3)
    for loop in loops:
        p = np.asarray(loop, dtype=np.float64)
        total += 0.5 * np.cross(p, np.roll(p, -1, axis=0)).sum(axis=0)
    return total


def proxy_normal(loops, fallback: np.ndarray | None = None) -> np.ndarray:
    """Unit normal from the oriented boundary edges of one or more loops.

    Accepts a single (L, 3) loop or a list of loops. A degenerate
    (zero-magnitude) sum falls back to ``fallback`` if given, else
    raises.
    """
    loops = _as_loops(loops)
    s = loop_vector_area(loops)
    n = np.linalg.norm(s)
    if n < 1e-300 or not np.isfinite(n):
        if fallback is not None:
            return np.asarray(fallback, dtype=np.float64)
        raise DegenerateLoopError("loop has zero vector area")
    return s / n


def loop_area(loops) -> float:
    """Magnitude of the summed vector area (polygon area for planar loops)."""
    return float(np.linalg.norm(loop_vector_area(_as_loops(loops))))


def proxy_centroid(loops) -> np.ndarray:
    """Area-weighted centroid of the fan triangulation about the anchor mean.

    Fan triangle areas are signed against the loop normal, which
    reproduces the shoelace centroid for planar polygons. Zero total area
    falls back to the plain anchor mean.
    """
    loops = _as_loops(loops)
    all_pts = np.concatenate(loops, axis=0)
    m = all_pts.mean(axis=0)
    sv = loop_vector_area(loops)
    total = np.linalg.norm(sv)
    if total < 1e-300:
        return m
    n = sv / total
    acc = np.zeros(3)
    for loop in loops:
        p = np.asarray(loop, dtype=np.float64)
        q = np.roll(p, -1, axis=0)
        signed = 0.5 * np.cross(p - m, q - m) @ n
        tri_cen = (m + p + q) / 3.0
        acc += (signed[:, None] * tri_cen).sum(axis=0)
    return acc / total


def _as_loops(loops) -> list[np.ndarray]:
    arr = loops
    if isinstance(arr, np.ndarray) and arr.ndim == 2:
        return [arr]
    return [np.asarray(x, dtype=np.float64) for x in arr]


def polyline_length(points: np.ndarray, closed: bool = False) -> float:
    p = np.asarray(points, dtype=np.float64)
    segs = np.linalg.norm(np.diff(p, axis=0), axis=1).sum()
    if closed and len(p) > 1:
        segs += np.linalg.norm(p[0] - p[-1])
    return float(segs)


# ---------------------------------------------------------------------------
# polygon triangulation (display only)


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _cross2(q2 - q1, p1 - q1)
    d2 = _cross2(q2 - q1, p2 - q1)
    d3 = _cross2(p2 - p1, q1 - p1)
    d4 = _cross2(p2 - p1, q2 - p1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def polygon_is_simple(pts: np.ndarray) -> bool:
    """True when no two non-adjacent polygon edges cross."""
    n = len(pts)
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect(a1, a2, pts[j], pts[(j + 1) % n]):
                return False
    return True


def ear_clip(points2d: np.ndarray) -> np.ndarray | None:
    """Triangulate a simple polygon by ear clipping.

    Returns (n-2, 3) indices into ``points2d``, or None for
    self-intersecting input (no valid ear decomposition).
    """
    pts = np.asarray(points2d, dtype=np.float64)
    n = len(pts)
    if n < 3 or not polygon_is_simple(pts):
        return None
    idx = list(range(n))
    area2 = sum(
        _cross2(pts[idx[k]] - pts[idx[0]], pts[idx[k + 1]] - pts[idx[0]])
        for k in range(1, n - 1)
    )
    ccw = area2 >= 0
    tris = []
    guard = 0
    while len(idx) > 3 and guard < n * n:
        guard += 1
        found = False
        for k in range(len(idx)):
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            cr = _cross2(pts[b] - pts[a], pts[c] - pts[b])
            if (cr <= 1e-14) if ccw else (cr >= -1e-14):
                continue  # reflex or flat corner
            if _any_point_in_triangle(pts, idx, a, b, c):
                continue
            tris.append((a, b, c))
            idx.pop(k)
            found = True
            break
        if not found:
            return None
    tris.append(tuple(idx))
    return np.asarray(tris, dtype=np.int64)


def _any_point_in_triangle(pts, idx, a, b, c) -> bool:
    pa, pb, pc = pts[a], pts[b], pts[c]
    for j in idx:
        if j in (a, b, c):
            continue
        p = pts[j]
        d1 = _cross2(pb - pa, p - pa)
        d2 = _cross2(pc - pb, p - pb)
        d3 = _cross2(pa - pc, p - pc)
        neg = (d1 < 0) or (d2 < 0) or (d3 < 0)
        pos = (d1 > 0) or (d2 > 0) or (d3 > 0)
        if not (neg and pos):
            return True
    return False


def plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal vectors spanning the plane with the given normal."""
    n = np.asarray(normal, dtype=np.float64)
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    u = np.cross(n, e)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v
