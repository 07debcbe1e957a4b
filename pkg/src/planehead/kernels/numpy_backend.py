"""Pure NumPy implementation of the hot kernels.

Broadcasts over a leading batch axis so a whole finite-difference
Jacobian can be evaluated in one call. Summation orders match the
compiled backend (sequential per region segment) to within pairwise
rounding, so either backend may be active.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

IMPLEMENTATION = "numpy"


def region_quantities(pos, edge_a, edge_b, region_edge_ptr,
                      anchor_idx, region_anchor_ptr, normal0):
    """Loop normals, centroids and areas per region.

    pos: (B, n, 3); the index arrays are grouped by region via the ptr
    arrays (K+1 entries). Returns (normals (B,K,3), centroids, areas).
    Degenerate loops fall back to the initial normal / anchor mean.
    """
    B = pos.shape[0]
    k = len(region_edge_ptr) - 1
    va = pos[:, edge_a]
    vb = pos[:, edge_b]
    cr = np.cross(va, vb)  # (B, M, 3)
    s = np.add.reduceat(cr, region_edge_ptr[:-1], axis=1)  # (B, K, 3)
    snorm = np.linalg.norm(s, axis=2)  # (B, K)
    areas = 0.5 * snorm
    safe = snorm > 1e-300
    normals = np.where(
        safe[:, :, None], s / np.where(safe, snorm, 1.0)[:, :, None],
        np.broadcast_to(normal0, (B, k, 3)),
    )

    counts = np.diff(region_anchor_ptr)
    pa = pos[:, anchor_idx]  # (B, M2, 3)
    mean = np.add.reduceat(pa, region_anchor_ptr[:-1], axis=1) / counts[None, :, None]

    region_of_edge = np.repeat(np.arange(k), np.diff(region_edge_ptr))
    m_e = mean[:, region_of_edge]  # (B, M, 3)
    n_e = normals[:, region_of_edge]
    cr2 = np.cross(va - m_e, vb - m_e)
    signed = 0.5 * np.einsum("bmi,bmi->bm", cr2, n_e)  # (B, M)
    tri_cen = (m_e + va + vb) / 3.0
    num = np.add.reduceat(signed[:, :, None] * tri_cen, region_edge_ptr[:-1], axis=1)
    den = np.add.reduceat(signed, region_edge_ptr[:-1], axis=1)
    ok = np.abs(den) > 1e-300
    centroids = np.where(ok[:, :, None], num / np.where(ok, den, 1.0)[:, :, None], mean)
    return normals, centroids, areas


def geometry_residuals(
    pos,
    edge_a, edge_b, region_edge_ptr,
    anchor_idx, region_anchor_ptr,
    normal0, area0,
    pair_i, pair_j, c_pair,
    c_flat,
    c_area,
    bedge_a, bedge_b, edge_len0, c_edge,
    free_idx, v0, c_vertex,
    c_normal,
):
    """Assemble the geometry part of the residual vector for a batch of
    anchor configurations. Layout: [pairs | flatness | area | edge |
    vertex | normal]. Also returns the per-region quantities."""
    B = pos.shape[0]
    k = len(region_edge_ptr) - 1
    normals, centroids, areas = region_quantities(
        pos, edge_a, edge_b, region_edge_ptr, anchor_idx, region_anchor_ptr, normal0
    )

    parts = []
    nsum = normals[:, pair_i] + normals[:, pair_j]
    parts.append(c_pair[None, :] * np.linalg.norm(nsum, axis=2))

    region_of_anchor = np.repeat(np.arange(k), np.diff(region_anchor_ptr))
    n_a = normals[:, region_of_anchor]
    c_a = centroids[:, region_of_anchor]
    v_a = pos[:, anchor_idx]
    parts.append(c_flat * np.einsum("bmi,bmi->bm", n_a, c_a - v_a))

    parts.append(c_area * (1.0 - areas / area0[None, :]))

    if len(bedge_a):
        el = np.linalg.norm(pos[:, bedge_a] - pos[:, bedge_b], axis=2)
        parts.append(c_edge * (1.0 - el / edge_len0[None, :]))
    else:
        parts.append(np.zeros((B, 0)))

    parts.append((c_vertex * (pos[:, free_idx] - v0[None, free_idx])).reshape(B, -1))
    parts.append((c_normal * (normals - normal0[None, :, :])).reshape(B, -1))
    return np.concatenate(parts, axis=1), normals, centroids, areas


def blend_apply(indptr, indices, data, tmats, verts):
    """Per-vertex blended affine transform.

    ``(indptr, indices, data)`` is CSR of per-vertex weights over R
    transforms; ``tmats`` is (R, 12) row-major 3x4. Returns transformed
    copies of ``verts``.
    """
    n = len(verts)
    w = sparse.csr_matrix((data, indices, indptr), shape=(n, tmats.shape[0]))
    m = np.asarray(w @ tmats).reshape(n, 3, 4)
    return np.einsum("nij,nj->ni", m[:, :, :3], verts) + m[:, :, 3]
