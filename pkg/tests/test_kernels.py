import numpy as np
import pytest

from planehead.kernels import available_backends
from planehead.stylize import StyleParams, StyleSystem

BACKENDS = available_backends()


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")
def test_geometry_residuals_backend_parity(face_bundle):
    a = face_bundle["abstracted"]
    system = StyleSystem(a, StyleParams(lambda_d=1.4))
    rng = np.random.default_rng(0)
    batch = a.anchors[None] + rng.normal(scale=0.02, size=(5,) + a.anchors.shape)
    args = (
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
    res_c, n_c, c_c, a_c = BACKENDS["cython"].geometry_residuals(*args)
    res_n, n_n, c_n, a_n = BACKENDS["numpy"].geometry_residuals(*args)
    assert np.allclose(res_c, res_n, atol=1e-12)
    assert np.allclose(n_c, n_n, atol=1e-13)
    assert np.allclose(c_c, c_n, atol=1e-12)
    assert np.allclose(a_c, a_n, atol=1e-13)


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")
def test_blend_apply_backend_parity(face_bundle):
    mesh, pyr = face_bundle["mesh"], face_bundle["pyramid"]
    rng = np.random.default_rng(1)
    tmats = np.vstack([
        np.concatenate([np.eye(3), np.zeros((3, 1))], axis=1).ravel()[None],
        rng.normal(size=(pyr.region_count, 12)),
    ])
    w = pyr.interpolated(np.full(mesh.n_vertices, 1.25))
    args = (
        w.indptr.astype(np.int64), w.indices.astype(np.int64),
        w.data.astype(np.float64), tmats, mesh.vertices,
    )
    out_c = BACKENDS["cython"].blend_apply(*args)
    out_n = BACKENDS["numpy"].blend_apply(*args)
    assert np.allclose(out_c, out_n, atol=1e-11)


def test_active_backend_exposed():
    from planehead import kernels

    assert kernels.IMPLEMENTATION in ("cython", "numpy")


def test_pure_python_env_override():
    import subprocess
    import sys

    code = (
        "import planehead.kernels as k; print(k.IMPLEMENTATION)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PLANEHEAD_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
