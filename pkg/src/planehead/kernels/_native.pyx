# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels: residual assembly for the
coarse-mesh optimization and the per-vertex transform blend. Mirrors
numpy_backend exactly (same residual layout, same reduction order)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

IMPLEMENTATION = "cython"


def region_quantities(pos, edge_a, edge_b, region_edge_ptr,
                      anchor_idx, region_anchor_ptr, normal0):
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    cdef Py_ssize_t B = pos.shape[0]
    cdef Py_ssize_t K = len(region_edge_ptr) - 1
    normals = np.empty((B, K, 3))
    centroids = np.empty((B, K, 3))
    areas = np.empty((B, K))
    _quantities(pos, edge_a, edge_b, region_edge_ptr, anchor_idx,
                region_anchor_ptr, normal0, normals, centroids, areas)
    return normals, centroids, areas


cdef void _quantities(double[:, :, ::1] pos,
                      long long[::1] edge_a, long long[::1] edge_b,
                      long long[::1] region_edge_ptr,
                      long long[::1] anchor_idx,
                      long long[::1] region_anchor_ptr,
                      double[:, ::1] normal0,
                      double[:, :, ::1] normals,
                      double[:, :, ::1] centroids,
                      double[:, ::1] areas) noexcept:
    cdef Py_ssize_t B = pos.shape[0]
    cdef Py_ssize_t K = region_edge_ptr.shape[0] - 1
    cdef Py_ssize_t b, q, e, i, a, c
    cdef double sx, sy, sz, snorm, mx, my, mz, cnt
    cdef double ax, ay, az, bx, by, bz, ux, uy, uz, wx, wy, wz
    cdef double cx, cy, cz, signed, nx, ny, nz, numx, numy, numz, den
    for b in range(B):
        for q in range(K):
            sx = sy = sz = 0.0
            for e in range(region_edge_ptr[q], region_edge_ptr[q + 1]):
                a = edge_a[e]
                c = edge_b[e]
                ax = pos[b, a, 0]; ay = pos[b, a, 1]; az = pos[b, a, 2]
                bx = pos[b, c, 0]; by = pos[b, c, 1]; bz = pos[b, c, 2]
                sx += ay * bz - az * by
                sy += az * bx - ax * bz
                sz += ax * by - ay * bx
            snorm = sqrt(sx * sx + sy * sy + sz * sz)
            areas[b, q] = 0.5 * snorm
            if snorm > 1e-300:
                nx = sx / snorm; ny = sy / snorm; nz = sz / snorm
            else:
                nx = normal0[q, 0]; ny = normal0[q, 1]; nz = normal0[q, 2]
            normals[b, q, 0] = nx; normals[b, q, 1] = ny; normals[b, q, 2] = nz

            mx = my = mz = 0.0
            cnt = 0.0
            for i in range(region_anchor_ptr[q], region_anchor_ptr[q + 1]):
                a = anchor_idx[i]
                mx += pos[b, a, 0]; my += pos[b, a, 1]; mz += pos[b, a, 2]
                cnt += 1.0
            mx /= cnt; my /= cnt; mz /= cnt

            numx = numy = numz = 0.0
            den = 0.0
            for e in range(region_edge_ptr[q], region_edge_ptr[q + 1]):
                a = edge_a[e]
                c = edge_b[e]
                ux = pos[b, a, 0] - mx; uy = pos[b, a, 1] - my; uz = pos[b, a, 2] - mz
                wx = pos[b, c, 0] - mx; wy = pos[b, c, 1] - my; wz = pos[b, c, 2] - mz
                cx = uy * wz - uz * wy
                cy = uz * wx - ux * wz
                cz = ux * wy - uy * wx
                signed = 0.5 * (cx * nx + cy * ny + cz * nz)
                numx += signed * (mx + pos[b, a, 0] + pos[b, c, 0]) / 3.0
                numy += signed * (my + pos[b, a, 1] + pos[b, c, 1]) / 3.0
                numz += signed * (mz + pos[b, a, 2] + pos[b, c, 2]) / 3.0
                den += signed
            if fabs(den) > 1e-300:
                centroids[b, q, 0] = numx / den
                centroids[b, q, 1] = numy / den
                centroids[b, q, 2] = numz / den
            else:
                centroids[b, q, 0] = mx
                centroids[b, q, 1] = my
                centroids[b, q, 2] = mz


def geometry_residuals(pos,
                       edge_a, edge_b, region_edge_ptr,
                       anchor_idx, region_anchor_ptr,
                       normal0, area0,
                       pair_i, pair_j, c_pair,
                       double c_flat,
                       double c_area,
                       bedge_a, bedge_b, edge_len0, double c_edge,
                       free_idx, v0, double c_vertex,
                       double c_normal):
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    cdef Py_ssize_t B = pos.shape[0]
    cdef Py_ssize_t K = len(region_edge_ptr) - 1
    cdef Py_ssize_t P = len(pair_i)
    cdef Py_ssize_t M2 = len(anchor_idx)
    cdef Py_ssize_t E = len(bedge_a)
    cdef Py_ssize_t F = len(free_idx)
    cdef Py_ssize_t m = P + M2 + K + E + 3 * F + 3 * K
    normals, centroids, areas = region_quantities(
        pos, edge_a, edge_b, region_edge_ptr, anchor_idx, region_anchor_ptr, normal0)
    res = np.empty((B, m))
    _residuals(pos, normals, centroids, areas,
               region_edge_ptr, anchor_idx, region_anchor_ptr,
               normal0, area0, pair_i, pair_j, c_pair,
               c_flat, c_area, bedge_a, bedge_b, edge_len0, c_edge,
               free_idx, v0, c_vertex, c_normal, res)
    return res, normals, centroids, areas


cdef void _residuals(double[:, :, ::1] pos,
                     double[:, :, ::1] normals,
                     double[:, :, ::1] centroids,
                     double[:, ::1] areas,
                     long long[::1] region_edge_ptr,
                     long long[::1] anchor_idx,
                     long long[::1] region_anchor_ptr,
                     double[:, ::1] normal0,
                     double[::1] area0,
                     long long[::1] pair_i, long long[::1] pair_j,
                     double[::1] c_pair,
                     double c_flat, double c_area,
                     long long[::1] bedge_a, long long[::1] bedge_b,
                     double[::1] edge_len0, double c_edge,
                     long long[::1] free_idx,
                     double[:, ::1] v0, double c_vertex, double c_normal,
                     double[:, ::1] res) noexcept:
    cdef Py_ssize_t B = pos.shape[0]
    cdef Py_ssize_t K = region_edge_ptr.shape[0] - 1
    cdef Py_ssize_t P = pair_i.shape[0]
    cdef Py_ssize_t M2 = anchor_idx.shape[0]
    cdef Py_ssize_t E = bedge_a.shape[0]
    cdef Py_ssize_t F = free_idx.shape[0]
    cdef Py_ssize_t b, p, q, i, e, a, c, off
    cdef double dx, dy, dz, el
    for b in range(B):
        off = 0
        for p in range(P):
            dx = normals[b, pair_i[p], 0] + normals[b, pair_j[p], 0]
            dy = normals[b, pair_i[p], 1] + normals[b, pair_j[p], 1]
            dz = normals[b, pair_i[p], 2] + normals[b, pair_j[p], 2]
            res[b, off + p] = c_pair[p] * sqrt(dx * dx + dy * dy + dz * dz)
        off += P
        for q in range(K):
            for i in range(region_anchor_ptr[q], region_anchor_ptr[q + 1]):
                a = anchor_idx[i]
                res[b, off + i] = c_flat * (
                    normals[b, q, 0] * (centroids[b, q, 0] - pos[b, a, 0])
                    + normals[b, q, 1] * (centroids[b, q, 1] - pos[b, a, 1])
                    + normals[b, q, 2] * (centroids[b, q, 2] - pos[b, a, 2])
                )
        off += M2
        for q in range(K):
            res[b, off + q] = c_area * (1.0 - areas[b, q] / area0[q])
        off += K
        for e in range(E):
            a = bedge_a[e]
            c = bedge_b[e]
            dx = pos[b, a, 0] - pos[b, c, 0]
            dy = pos[b, a, 1] - pos[b, c, 1]
            dz = pos[b, a, 2] - pos[b, c, 2]
            el = sqrt(dx * dx + dy * dy + dz * dz)
            res[b, off + e] = c_edge * (1.0 - el / edge_len0[e])
        off += E
        for i in range(F):
            a = free_idx[i]
            res[b, off + 3 * i] = c_vertex * (pos[b, a, 0] - v0[a, 0])
            res[b, off + 3 * i + 1] = c_vertex * (pos[b, a, 1] - v0[a, 1])
            res[b, off + 3 * i + 2] = c_vertex * (pos[b, a, 2] - v0[a, 2])
        off += 3 * F
        for q in range(K):
            res[b, off + 3 * q] = c_normal * (normals[b, q, 0] - normal0[q, 0])
            res[b, off + 3 * q + 1] = c_normal * (normals[b, q, 1] - normal0[q, 1])
            res[b, off + 3 * q + 2] = c_normal * (normals[b, q, 2] - normal0[q, 2])


def blend_apply(indptr, indices, data, tmats, verts):
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    tmats = np.ascontiguousarray(tmats, dtype=np.float64)
    out = np.empty((verts.shape[0], 3))
    _blend_apply(indptr, indices, data, tmats, verts, out)
    return out


cdef void _blend_apply(long long[::1] indptr, long long[::1] indices,
                       double[::1] data, const double[:, ::1] tmats,
                       const double[:, ::1] verts, double[:, ::1] out) noexcept:
    cdef Py_ssize_t n = verts.shape[0]
    cdef Py_ssize_t i, j, r, k
    cdef double w
    cdef double m[12]
    for i in range(n):
        for k in range(12):
            m[k] = 0.0
        for j in range(indptr[i], indptr[i + 1]):
            r = indices[j]
            w = data[j]
            for k in range(12):
                m[k] += w * tmats[r, k]
        out[i, 0] = m[0] * verts[i, 0] + m[1] * verts[i, 1] + m[2] * verts[i, 2] + m[3]
        out[i, 1] = m[4] * verts[i, 0] + m[5] * verts[i, 1] + m[6] * verts[i, 2] + m[7]
        out[i, 2] = m[8] * verts[i, 0] + m[9] * verts[i, 1] + m[10] * verts[i, 2] + m[11]
