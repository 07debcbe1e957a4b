import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planehead import fixtures, transfer
from planehead.geometry import proxy_centroid, proxy_normal
from planehead.metrics import eye_socket_measures
from planehead.stylize import (
    LanteriConstraint,
    OptimizationState,
    StyleParams,
    StyleSystem,
    default_edge_weights,
    initial_state,
    lanteri_residuals_from_transforms,
    optimize,
    reg_residuals,
    region_transforms,
    style_residuals,
)


from tests_support import boundary_loop_edges, random_planar_patch  # noqa: E402


# -- proxy quantities ------------------------------------------------------------


def test_proxy_normal_square():
    square = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    assert np.allclose(proxy_normal([square]), [0, 0, 1], atol=1e-15)
    assert np.allclose(proxy_normal([square[::-1]]), [0, 0, -1], atol=1e-15)


def test_proxy_normal_matches_area_weighted_triangles():
    rng = np.random.default_rng(7)
    for _ in range(25):
        verts, tris = random_planar_patch(rng)
        total = np.zeros(3)
        for t in tris:  # oracle: sum of A_t n_t over all patch triangles
            total += 0.5 * np.cross(verts[t[1]] - verts[t[0]], verts[t[2]] - verts[t[0]])
        oracle = total / np.linalg.norm(total)
        border = np.zeros(3)
        for a, b in boundary_loop_edges(tris):
            border += np.cross(verts[a], verts[b])
        got = border / np.linalg.norm(border)
        assert np.linalg.norm(got - oracle) <= 1e-10


def test_proxy_normal_degenerate_falls_back():
    line = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
    with pytest.raises(ValueError):
        proxy_normal([line])
    assert np.allclose(proxy_normal([line], fallback=np.array([0.0, 0, 1])), [0, 0, 1])


def test_proxy_centroid_square_and_translation():
    square = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    assert np.allclose(proxy_centroid([square]), [0.5, 0.5, 0.0], atol=1e-15)
    t = np.array([3.0, -2.0, 5.0])
    assert np.allclose(proxy_centroid([square + t]), [0.5, 0.5, 0.0] + t, atol=1e-12)


def test_proxy_centroid_matches_shoelace():
    rng = np.random.default_rng(1)
    for _ in range(10):
        k = rng.integers(5, 12)
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        rad = rng.uniform(0.5, 2.0, k)
        poly = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        x, y = poly[:, 0], poly[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = cross.sum() / 2
        cx = ((x + xn) * cross).sum() / (6 * area)
        cy = ((y + yn) * cross).sum() / (6 * area)
        got = proxy_centroid([np.column_stack([poly, np.zeros(k)])])
        assert np.allclose(got, [cx, cy, 0.0], atol=1e-12)


def test_default_edge_weights():
    hinge = fixtures.hinge_abstracted()
    assert default_edge_weights(hinge) == {(1, 2): pytest.approx(1.0)}


def test_default_edge_weights_ratio():
    from planehead.abstraction import AbstractedMesh, Polyline

    anchors = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 4, 0]])
    a = AbstractedMesh(
        anchors=anchors,
        anchor_sources=np.arange(4),
        on_open_boundary=np.zeros(4, dtype=bool),
        polylines=[
            Polyline((1, 2), np.array([0, 1]), False),
            Polyline((2, 3), np.array([2, 3]), False),
        ],
        loops={},
        initial_normal=np.zeros((4, 3)),
        initial_centroid=np.zeros((4, 3)),
        initial_area=np.ones(4),
        border_edges=np.array([[0, 1], [2, 3]]),
        initial_edge_length=np.array([1.0, 3.0]),
        mean_edge_length=2.0,
        region_count=3,
    )
    w = default_edge_weights(a)
    assert w[(1, 2)] == pytest.approx(0.5)
    assert w[(2, 3)] == pytest.approx(1.5)
    assert np.mean(list(w.values())) == pytest.approx(1.0)


# -- residuals ---------------------------------------------------------------------


def test_style_residuals_coplanar_pair():
    hinge = fixtures.hinge_abstracted(np.pi)  # coplanar squares
    params = StyleParams(lambda_d=1.0, lambda_f=1.0)
    system = StyleSystem(hinge, params)
    res = system.split(system.residuals(hinge.anchors))
    # offset form: pair cost = lambda_d * w * (n_i . n_j + 1) = 2
    assert float(res["pair"] @ res["pair"]) == pytest.approx(2.0, abs=1e-12)
    assert np.abs(res["flat"]).max() == 0.0


def test_style_residuals_antiparallel_pair():
    hinge = fixtures.hinge_abstracted(1e-9)  # folded shut: opposing normals
    system = StyleSystem(hinge, StyleParams(lambda_d=1.0))
    res = system.split(system.residuals(hinge.anchors))
    assert float(res["pair"] @ res["pair"]) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("theta_deg", [13.0, 77.0, 131.0, 164.0])
def test_style_residual_matches_direct_dot(theta_deg):
    dihedral = np.pi - np.deg2rad(theta_deg)
    hinge = fixtures.hinge_abstracted(dihedral)
    lam = 1.7
    system = StyleSystem(hinge, StyleParams(lambda_d=lam))
    res = system.split(system.residuals(hinge.anchors))
    n1 = proxy_normal([hinge.anchors[hinge.loops[1][0]]])
    n2 = proxy_normal([hinge.anchors[hinge.loops[2][0]]])
    direct = lam * 1.0 * (float(n1 @ n2) + 1.0)
    assert float(res["pair"] @ res["pair"]) == pytest.approx(direct, abs=1e-12)


def test_reg_residuals_zero_at_rest(face_bundle):
    system = StyleSystem(face_bundle["abstracted"], StyleParams())
    res = reg_residuals(system, face_bundle["abstracted"].anchors)
    assert np.abs(res).max() == 0.0


def test_reg_residuals_uniform_scale():
    hinge = fixtures.hinge_abstracted(np.deg2rad(150))
    params = StyleParams(lambda_d=0.0, lambda_f=0.0)
    system = StyleSystem(hinge, params)
    res = system.split(system.residuals(2.0 * hinge.anchors))
    assert np.allclose(res["edge"], -np.sqrt(params.lambda_e), atol=1e-12)
    assert np.allclose(res["area"], np.sqrt(params.lambda_a) * (1 - 4), atol=1e-12)


def test_reg_residuals_scale_invariance():
    # scaling both the initial configuration and the state leaves the
    # area/edge/vertex blocks unchanged (the vertex term through ebar)
    rng = np.random.default_rng(5)
    bump = rng.normal(scale=0.05, size=(6, 3))
    d0 = np.deg2rad(150)
    params = StyleParams()
    res_blocks = []
    for s in (1.0, 7.3):
        hinge = fixtures.hinge_abstracted(d0)
        scaled = fixtures.hinge_abstracted(d0)
        scaled.anchors[:] = hinge.anchors * s
        scaled.initial_area[:] = hinge.initial_area * s * s
        scaled.initial_centroid[:] = hinge.initial_centroid * s
        scaled.initial_edge_length = hinge.initial_edge_length * s
        scaled.mean_edge_length = hinge.mean_edge_length * s
        system = StyleSystem(scaled, params)
        res = system.split(system.residuals(s * (hinge.anchors + bump)))
        res_blocks.append(np.concatenate([res["area"], res["edge"], res["vertex"]]))
    assert np.allclose(res_blocks[0], res_blocks[1], atol=1e-10)


def test_translation_invariance_of_energy():
    rng = np.random.default_rng(11)
    bump = rng.normal(scale=0.08, size=(6, 3))
    t = np.array([4.0, -7.0, 2.5])
    d0 = np.deg2rad(140)
    costs = []
    for shift in (np.zeros(3), t):
        hinge = fixtures.hinge_abstracted(d0)
        hinge.anchors[:] = hinge.anchors + shift
        hinge.initial_centroid[1:] = hinge.initial_centroid[1:] + shift
        system = StyleSystem(hinge, StyleParams(lambda_d=1.2))
        r = system.residuals(hinge.anchors + bump)
        costs.append(float(r @ r))
    assert costs[0] == pytest.approx(costs[1], abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_dot_product_rewrite_identity(raw):
    v = np.asarray(raw).reshape(2, 3)
    if np.linalg.norm(v[0]) < 1e-3 or np.linalg.norm(v[1]) < 1e-3:
        return
    n1 = v[0] / np.linalg.norm(v[0])
    n2 = v[1] / np.linalg.norm(v[1])
    lhs = 0.5 * np.linalg.norm(n1 + n2) ** 2 - 1.0
    assert abs(lhs - float(n1 @ n2)) <= 1e-12


# -- Lanteri -----------------------------------------------------------------------


def _toy_constraints():
    p1 = np.array([0.0, 0.0, 0.0])
    p2 = np.array([1.0, 0.5, -0.25])
    cons = [
        LanteriConstraint("absolute_position", (0,), p1[None], None, name="abs"),
        LanteriConstraint("relative_position", (0, 1), np.stack([p1, p2]),
                          float(np.linalg.norm(p1 - p2)), name="relpos"),
        LanteriConstraint("relative_distance", (0, 1), np.stack([p1, p2]),
                          float(np.linalg.norm(p1 - p2)), name="reldist"),
    ]
    weights = {0: np.array([0.0, 0.5, 0.5]), 1: np.array([0.0, 0.4, 0.6])}
    return cons, weights


def test_lanteri_identity_transforms_zero():
    cons, weights = _toy_constraints()
    transforms = {1: transfer.AffineTransform.identity(), 2: transfer.AffineTransform.identity()}
    res = lanteri_residuals_from_transforms(cons, transforms, weights, ebar=0.5, lambda_v=60)
    assert np.abs(res).max() < 1e-14


def test_lanteri_common_translation():
    cons, weights = _toy_constraints()
    t = np.array([0.3, -0.2, 0.7])
    transforms = {r: transfer.AffineTransform(np.eye(3), t) for r in (1, 2)}
    ebar, lam = 0.5, 60.0
    res = lanteri_residuals_from_transforms(cons, transforms, weights, ebar=ebar, lambda_v=lam)
    # relative forms vanish; absolute form is sqrt(lam/(2 ebar^2)) * t
    expected = np.sqrt(lam / (2 * ebar ** 2)) * t
    assert np.allclose(res[:3], expected, atol=1e-12)
    assert np.abs(res[3:]).max() < 1e-12


def test_lanteri_random_affines_match_energy_forms():
    rng = np.random.default_rng(3)
    cons, weights = _toy_constraints()
    transforms = {
        r: transfer.AffineTransform(np.eye(3) + 0.3 * rng.normal(size=(3, 3)),
                                    rng.normal(size=3))
        for r in (1, 2)
    }
    ebar, lam = 0.8, 60.0
    res = lanteri_residuals_from_transforms(cons, transforms, weights, ebar=ebar, lambda_v=lam)

    def blend(v, p):
        w = weights[v]
        out = w[0] * p
        for r in (1, 2):
            out = out + w[r] * (transforms[r].linear @ p + transforms[r].translation)
        return out

    p1, p2 = cons[1].ref_points
    tp1, tp2 = blend(0, p1), blend(1, p2)
    d0 = np.linalg.norm(p1 - p2)
    e_abs = lam / (2 * ebar ** 2) * np.linalg.norm(blend(0, p1) - p1) ** 2
    e_relpos = lam / 2 * np.linalg.norm((tp1 - tp2) - (p1 - p2)) ** 2 / d0 ** 2
    e_reldist = lam / 2 * (np.linalg.norm(tp1 - tp2) - d0) ** 2 / d0 ** 2
    assert float(res[:3] @ res[:3]) == pytest.approx(e_abs, rel=1e-12)
    assert float(res[3:6] @ res[3:6]) == pytest.approx(e_relpos, rel=1e-12)
    assert float(res[6] ** 2) == pytest.approx(e_reldist, rel=1e-12)


def test_lanteri_batched_path_matches_reference(face_bundle):
    a = face_bundle["abstracted"]
    params = StyleParams(lambda_d=1.6)
    system = StyleSystem(a, params, face_bundle["constraints"], face_bundle["landmark_weights"])
    rng = np.random.default_rng(9)
    state_pos = a.anchors + rng.normal(scale=0.01, size=a.anchors.shape)
    res = system.split(system.residuals(state_pos))["lanteri"]

    _, normals, centroids, _ = system.residual_batch(state_pos[None])
    st = OptimizationState(
        positions=state_pos, free_mask=a.free_mask(), cost=0.0, energy_trace=[],
        iterations=0, converged=True, reason="", lm_damping=1e-3,
        normals=normals[0], centroids=centroids[0], areas=np.ones(a.region_count),
    )
    # the reference path builds explicit AffineTransforms; the batched path
    # must agree through the same before-proxies
    transforms = {}
    for r in range(1, a.region_count + 1):
        from planehead.stylize import PlaneProxy

        before = PlaneProxy(r, system.normal0[r - 1], system.centroid0[r - 1])
        after = PlaneProxy(r, normals[0][r - 1], centroids[0][r - 1])
        transforms[r] = transfer.region_transform(before, after, params.mu_for(r))
    ref = lanteri_residuals_from_transforms(
        face_bundle["constraints"], transforms, face_bundle["landmark_weights"],
        ebar=a.mean_edge_length, lambda_v=params.lambda_v,
    )
    assert np.allclose(res, ref, atol=1e-10)


def test_coincident_landmarks_rejected():
    p = np.zeros((2, 3))
    with pytest.raises(ValueError):
        LanteriConstraint("relative_distance", (0, 1), p, 0.0)


# -- optimization -----------------------------------------------------------------


def test_zero_style_fixpoint_hinge():
    hinge = fixtures.hinge_abstracted(np.deg2rad(150))
    state = optimize(hinge, StyleParams(lambda_d=0.0, lambda_f=0.0))
    bbox = np.linalg.norm(hinge.anchors.max(0) - hinge.anchors.min(0))
    assert np.abs(state.positions - hinge.anchors).max() <= 1e-8 * bbox


def test_fixed_anchors_bit_identical():
    hinge = fixtures.hinge_abstracted(np.deg2rad(150))
    state = optimize(hinge, StyleParams(lambda_d=2.0))
    assert np.array_equal(state.positions[:2], hinge.anchors[:2])
    assert np.abs(state.positions[2:] - hinge.anchors[2:]).max() > 0


def test_energy_trace_strictly_decreasing():
    hinge = fixtures.hinge_abstracted(np.deg2rad(150))
    state = optimize(hinge, StyleParams(lambda_d=2.0))
    trace = state.energy_trace
    assert len(trace) >= 2
    assert all(b < a for a, b in zip(trace, trace[1:]))


def test_gradient_matches_fd():
    hinge = fixtures.hinge_abstracted(np.deg2rad(145))
    params = StyleParams(lambda_d=1.3)
    system = StyleSystem(hinge, params)
    rng = np.random.default_rng(4)
    free = system.free_idx

    def cost(x):
        pos = hinge.anchors.copy()
        pos[free] = x.reshape(-1, 3)
        r = system.residuals(pos)
        return float(r @ r)

    x0 = (hinge.anchors[free] + rng.normal(scale=0.03, size=(len(free), 3))).ravel()
    h = 1e-6
    fd = np.array([(cost(x0 + h * e) - cost(x0 - h * e)) / (2 * h) for e in np.eye(len(x0))])

    pos = hinge.anchors.copy()
    pos[free] = x0.reshape(-1, 3)
    r0 = system.residuals(pos)
    jac = np.empty((len(r0), len(x0)))
    for k in range(len(x0)):
        xp = x0.copy()
        xp[k] += h
        posp = hinge.anchors.copy()
        posp[free] = xp.reshape(-1, 3)
        jac[:, k] = (system.residuals(posp) - r0) / h
    analytic = 2 * jac.T @ r0
    denom = max(np.abs(fd).max(), 1e-12)
    assert np.abs(analytic - fd).max() / denom <= 1e-4


def test_hinge_monotone_against_grid_oracle():
    d0 = np.deg2rad(150)
    hinge = fixtures.hinge_abstracted(d0)
    prev = -np.inf
    for lam in (0.0, 1.0, 2.0):
        params = StyleParams(lambda_d=lam)
        system = StyleSystem(hinge, params)
        state = optimize(hinge, params, ftol=1e-12, gtol=1e-10)
        n1, n2 = state.normals
        opening = np.degrees(np.arccos(np.clip(n1 @ n2, -1, 1)))
        assert opening >= prev - 1e-9
        prev = opening
        grid = np.deg2rad(np.linspace(0.0, 179.0, 1791))
        confs = np.stack([fixtures.hinge_abstracted(np.pi - g).anchors for g in grid])
        res = system.residual_batch(confs)[0]
        costs = (res * res).sum(axis=1)
        oracle = np.degrees(grid[np.argmin(costs)])
        assert abs(opening - oracle) <= 1.0


def test_face_high_exaggeration_keeps_eyes(face_bundle):
    # strong stylization with constraints: inner-eye span within 2 percent
    # while the sockets measurably deepen
    mesh, lms = face_bundle["mesh"], face_bundle["landmarks"]
    params = StyleParams(lambda_d=2.3)
    state = optimize(
        face_bundle["abstracted"], params, face_bundle["constraints"],
        landmark_weights=face_bundle["landmark_weights"], ftol=1e-10, max_iters=500,
    )
    transforms = region_transforms(face_bundle["abstracted"], state, params)
    out = transfer.apply_transfer(mesh, transforms, face_bundle["pyramid"])
    li, ri = lms["inner_eye_L"], lms["inner_eye_R"]
    before = np.linalg.norm(mesh.vertices[li] - mesh.vertices[ri])
    after = np.linalg.norm(out[li] - out[ri])
    assert abs(after - before) / before <= 0.02
    assert eye_socket_measures(lms, out).a > eye_socket_measures(lms, mesh.vertices).a


def test_nonfinite_start_rejected():
    hinge = fixtures.hinge_abstracted(np.deg2rad(150))
    bad = hinge.anchors.copy()
    bad[2, 0] = np.nan
    with pytest.raises(ValueError):
        optimize(hinge, StyleParams(), x0=bad)


def test_params_validation():
    with pytest.raises(ValueError):
        StyleParams(lambda_d=3.0).validate()
    with pytest.raises(ValueError):
        StyleParams(mu=1.5).validate()
    with pytest.raises(ValueError):
        StyleParams(lambda_a=-1).validate()
    p = StyleParams(lambda_d=2.9, mu=1.0)
    p.validate()


def test_params_json_roundtrip():
    p = StyleParams(lambda_d=1.6, mu=0.4)
    p.edge_scales[(1, 2)] = 2.0
    p.edge_smoothing[(3, 4)] = 1.5
    p.mu_per_region[7] = 0.9
    p.use_lanteri = False
    q = StyleParams.from_json_dict(p.to_json_dict())
    assert q.to_json_dict() == p.to_json_dict()


def test_initial_state(face_bundle):
    st = initial_state(face_bundle["abstracted"], StyleParams(lambda_d=0.0, lambda_f=0.0))
    assert st.cost == 0.0
    assert st.converged
