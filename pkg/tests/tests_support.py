"""Shared generators for the randomized geometry tests."""

import numpy as np


def random_planar_patch(rng, n=40, z_noise=0.02):
    """Triangulated planar-ish disk patch; returns (verts, tris)."""
    from scipy.spatial import Delaunay

    r = np.sqrt(rng.uniform(0.05, 1.0, n))
    ang = rng.uniform(0, 2 * np.pi, n)
    pts = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    tri = Delaunay(pts)
    z = rng.normal(scale=z_noise, size=n)
    return np.column_stack([pts, z]), tri.simplices


def boundary_loop_edges(tris):
    """Directed boundary edges of a triangulation, in traversal order."""
    seen = {}
    for t in tris:
        for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(e), max(e))
            seen.setdefault(key, []).append(e)
    return [es[0] for es in seen.values() if len(es) == 1]
