"""Compare the compiled kernels against the pure-NumPy implementation.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Covers the two hot paths: residual assembly (evaluated hundreds of
times per optimization for the finite-difference Jacobian) and the
per-vertex transform blend (once per streamed frame).
"""

import argparse
import time

import numpy as np

from planehead import fixtures
from planehead.abstraction import build_abstracted_mesh
from planehead.kernels import available_backends
from planehead.stylize import StyleParams, StyleSystem
from planehead.transfer import build_skinning_pyramid


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")

    mesh, labels, _ = fixtures.synthetic_face()
    abstracted = build_abstracted_mesh(mesh, labels)
    system = StyleSystem(abstracted, StyleParams(lambda_d=1.6))
    nfree = 3 * len(system.free_idx)
    batch = np.repeat(abstracted.anchors[None], nfree + 1, axis=0)
    print(f"\nresidual assembly: {abstracted.n_anchors} anchors, "
          f"batch of {nfree + 1} states (one FD Jacobian)")
    res_args = (
        batch,
        system.edge_a, system.edge_b, system.region_edge_ptr,
        system.anchor_idx, system.region_anchor_ptr,
        system.normal0, system.area0,
        system.pair_i, system.pair_j, system.c_pair,
        system.c_flat, system.c_area,
        system.bedge_a, system.bedge_b, system.edge_len0, system.c_edge,
        system.free_idx, system.v0, system.c_vertex,
        system.c_normal,
    )
    times = {}
    for name, backend in backends.items():
        times[name] = time_call(lambda b=backend: b.geometry_residuals(*res_args), args.repeats)
        print(f"  {name:8s} {times[name] * 1000:8.2f} ms")
    if len(times) == 2:
        print(f"  speedup: {times['numpy'] / times['cython']:.1f}x")

    sphere = fixtures.subdivided_sphere_30k()
    slabels = fixtures.octant_labels(sphere)
    pyramid = build_skinning_pyramid(sphere, slabels, levels=8)
    w = pyramid.interpolated(np.full(sphere.n_vertices, 1.5))
    rng = np.random.default_rng(0)
    tmats = rng.normal(size=(slabels.region_count + 1, 12))
    blend_args = (
        w.indptr.astype(np.int64), w.indices.astype(np.int64),
        w.data.astype(np.float64), tmats, sphere.vertices,
    )
    print(f"\ntransform blend: {sphere.n_vertices} vertices")
    times = {}
    for name, backend in backends.items():
        times[name] = time_call(lambda b=backend: b.blend_apply(*blend_args), args.repeats)
        print(f"  {name:8s} {times[name] * 1000:8.2f} ms")
    if len(times) == 2:
        print(f"  speedup: {times['numpy'] / times['cython']:.1f}x")


if __name__ == "__main__":
    main()
