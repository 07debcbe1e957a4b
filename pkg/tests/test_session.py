import numpy as np
import pytest

from planehead import fixtures
from planehead.session import StudioSession
from planehead.stylize import PlaneProxy, StyleParams
from planehead.transfer import region_transform


@pytest.fixture(scope="module")
def face_session():
    mesh, labels, _ = fixtures.synthetic_face(24)
    return mesh, labels


def test_full_planarization_lands_on_the_proxy_plane():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n1 = rng.normal(size=3); n1 /= np.linalg.norm(n1)
        n2 = rng.normal(size=3); n2 /= np.linalg.norm(n2)
        before = PlaneProxy(1, n1, rng.normal(size=3))
        after = PlaneProxy(1, n2, rng.normal(size=3))
        t = region_transform(before, after, mu=1.0)
        p = rng.normal(size=3) * 2
        # mu = 1 projects onto the before-plane, the rigid part carries that
        # plane onto the after-plane: the image must lie on it exactly
        assert abs(float(after.normal @ (t.apply(p) - after.centroid))) < 1e-12


def test_smoothing_scale_changes_the_transfer(face_session):
    mesh, labels = face_session
    sess = StudioSession(mesh, labels, params=StyleParams(lambda_d=2.0))
    sess.run_until_converged()
    crisp = sess.positions.copy()
    pair = sess.scale_solver.boundaries()[0]
    assert sess.set_edge_smoothing(*pair, 5.0)
    sess.transfer()  # same optimized proxies, smoother weight field
    smooth = sess.positions
    assert np.isfinite(smooth).all()
    assert np.abs(smooth - crisp).max() > 0
    # smoothing only blurs the blend; the far field stays identical
    field = sess.scale_field()
    untouched = field == 0.0
    assert untouched.any()
    assert np.abs(smooth[untouched] - crisp[untouched]).max() < 1e-12


def test_per_region_planarization_flattens_it(face_session):
    mesh, labels = face_session
    sess = StudioSession(mesh, labels, params=StyleParams(lambda_d=0.0, lambda_f=0.0))
    # pick the region with the most interior (single-weight) vertices
    w0 = sess.pyramid.levels[0]
    counts = [
        int((np.asarray(w0[:, r].todense()).ravel() == 1.0).sum())
        for r in range(labels.region_count + 1)
    ]
    region = int(np.argmax(counts[1:])) + 1
    assert sess.set_face_planarization(region, 1.0)
    sess.run_until_converged()
    col = np.asarray(w0[:, region].todense()).ravel()
    inside = col == 1.0
    assert inside.sum() > 3
    n0 = sess.abstracted.initial_normal[region]
    c0 = sess.abstracted.initial_centroid[region]
    # anchors did not move (no style forces), so the region transform is the
    # pure planarization: interior vertices land on the proxy plane
    d = np.abs((sess.positions[inside] - c0) @ n0)
    d_before = np.abs((mesh.vertices[inside] - c0) @ n0)
    assert d.max() < 1e-10
    assert d_before.max() > 1e-3  # it was genuinely non-planar before


def test_session_rejects_unknown_edits(face_session):
    mesh, labels = face_session
    sess = StudioSession(mesh, labels)
    with pytest.raises(ValueError):
        sess.set_global("lambda_q", 1.0)
    with pytest.raises(ValueError):
        sess.set_edge_weight(1, 99, 1.0)
    with pytest.raises(ValueError):
        sess.set_face_planarization(0, 0.5)
    with pytest.raises(ValueError):
        sess.set_face_planarization(1, 1.5)


def test_landmark_weights_frozen_per_run(face_session):
    mesh, labels = face_session
    _, _, lms = fixtures.synthetic_face(24)
    sess = StudioSession(mesh, labels, landmarks=lms, params=StyleParams(lambda_d=1.0))
    w1 = sess.landmark_weights()
    assert w1  # constraints present
    for v, w in w1.items():
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
