"""End-to-end runs on generic (non-face) inputs: VSA labels on a closed
surface, and a region with a hole (two boundary loops)."""

import numpy as np
import pytest

from planehead import fixtures
from planehead.abstraction import build_abstracted_mesh
from planehead.mesh import RegionLabeling
from planehead.segmentation import vsa_segment
from planehead.session import StudioSession
from planehead.stylize import StyleParams


@pytest.fixture(scope="module")
def sphere():
    return fixtures.icosphere(3)


def test_vsa_pipeline_on_closed_sphere(sphere):
    labels = vsa_segment(sphere, 8, seed=0)
    labels.validate(sphere)
    sess = StudioSession(sphere, labels, params=StyleParams(lambda_d=1.5))
    state = sess.run_until_converged()
    assert state.converged
    trace = state.energy_trace
    assert all(b < a for a, b in zip(trace, trace[1:]))
    assert np.isfinite(sess.positions).all()
    # closed surface: no anchor is pinned, yet the regularizers keep the
    # shape close to the input
    assert not sess.abstracted.on_open_boundary.any()
    assert np.linalg.norm(sess.positions - sphere.vertices, axis=1).max() < 0.1


def test_annulus_region_has_two_loops(sphere):
    lab = np.full(sphere.n_triangles, 3)
    cen = sphere.vertices[sphere.triangles].mean(axis=1)
    lab[cen[:, 2] > 0.45] = 1  # polar cap
    lab[(cen[:, 2] > 0.05) & (cen[:, 2] <= 0.45)] = 2  # band around it
    labels = RegionLabeling(lab, 3)
    labels.validate(sphere)
    a = build_abstracted_mesh(sphere, labels)
    assert len(a.loops[1]) == 1
    assert len(a.loops[2]) == 2  # the annulus
    assert (a.initial_area[1:] > 0).all()

    sess = StudioSession(sphere, labels, params=StyleParams(lambda_d=1.0))
    state = sess.run_until_converged()
    assert state.converged
    assert np.isfinite(sess.positions).all()


def test_single_region_open_mesh_degenerates_gracefully():
    # one region on an open grid: every anchor sits on the rim, so the
    # optimizer has nothing to move and says so
    grid = fixtures.grid_mesh(6, 6, 1.0, 1.0,
                              z=lambda x, y: 0.2 * np.sin(3 * x) * np.cos(2 * y))
    labels = RegionLabeling(np.ones(grid.n_triangles, dtype=int), 1)
    a = build_abstracted_mesh(grid, labels)
    assert a.style_pairs() == []
    assert len(a.border_edges) == 0
    from planehead.stylize import optimize

    state = optimize(a, StyleParams(lambda_d=1.0))
    assert state.converged and state.reason == "no free variables"
    sess = StudioSession(grid, labels, params=StyleParams(lambda_d=0.5))
    sess.run_until_converged()
    assert np.isfinite(sess.positions).all()


def test_single_region_closed_mesh_rejected():
    with pytest.raises(ValueError):
        build_abstracted_mesh(
            fixtures.icosphere(1), RegionLabeling(np.ones(80, dtype=int), 1)
        )
