import numpy as np
import pytest

from planehead import fixtures
from planehead.mesh import RegionLabeling
from planehead.segmentation import (
    LabeledTemplate,
    _majority_face_labels,
    transfer_labels,
    vsa,
    vsa_segment,
)


def test_vsa_cube_recovers_faces():
    cube = fixtures.unit_cube()
    result = vsa(cube, 6, seed=0)
    labels = result.labeling
    assert labels.region_count == 6
    # both triangles of each geometric cube face share a label, and the six
    # labels are distinct
    per_face = labels.face_labels.reshape(6, 2)
    assert (per_face[:, 0] == per_face[:, 1]).all()
    assert len(set(per_face[:, 0])) == 6
    assert result.energies[-1] == pytest.approx(0.0, abs=1e-24)


def test_vsa_k1_single_region():
    m = fixtures.icosphere(1)
    labels = vsa_segment(m, 1)
    assert labels.region_count == 1
    assert (labels.face_labels == 1).all()


@pytest.mark.parametrize("level", [1, 2, 3])
def test_vsa_sphere_energy_monotone(level):
    m = fixtures.icosphere(level)
    result = vsa(m, 8, max_iters=15, seed=0)
    e = result.energies
    assert all(b <= a + 1e-12 for a, b in zip(e, e[1:]))
    result.labeling.validate(m)  # regions nonempty and connected


def test_vsa_k_too_large():
    with pytest.raises(ValueError):
        vsa_segment(fixtures.single_triangle(), 2)


def test_vsa_deterministic():
    m = fixtures.icosphere(2)
    a = vsa_segment(m, 5, seed=3)
    b = vsa_segment(m, 5, seed=3)
    assert np.array_equal(a.face_labels, b.face_labels)


# -- template transfer --------------------------------------------------------


def test_majority_rule():
    tri = np.array([[3, 3, 7], [1, 2, 3], [5, 5, 5], [9, 2, 9]])
    out = _majority_face_labels(tri)
    assert out.tolist() == [3, 1, 5, 9]


def test_transfer_identity():
    mesh, labels, _ = fixtures.face_template(32)
    template = LabeledTemplate(mesh, labels)
    out = transfer_labels(mesh, template)
    assert out.region_count == labels.region_count
    assert np.array_equal(out.face_labels, labels.face_labels)


def test_transfer_under_small_noise():
    mesh, labels, _ = fixtures.face_template(32)
    template = LabeledTemplate(mesh, labels)
    min_edge = mesh.edge_lengths().min()
    rng = np.random.default_rng(0)
    noise = rng.uniform(-1, 1, size=mesh.vertices.shape)
    noise *= (0.3 * min_edge) / np.linalg.norm(noise, axis=1).max()
    noisy = mesh.with_vertices(mesh.vertices + noise)
    out = transfer_labels(noisy, template)
    assert np.array_equal(out.face_labels, labels.face_labels)


def test_transfer_output_regions_connected():
    mesh, labels, _ = fixtures.face_template(32)
    # transfer to a coarser grid of the same shape
    coarse, _, _ = fixtures.synthetic_face(20)
    out = transfer_labels(coarse, LabeledTemplate(mesh, labels))
    out.validate(coarse)  # nonempty + face-connected regions


def test_transfer_empty_template():
    from planehead.mesh import Mesh

    mesh, labels, _ = fixtures.synthetic_face(20)
    empty = LabeledTemplate(
        Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int), validate=False),
        RegionLabeling(np.zeros(0, dtype=int), 0),
    )
    with pytest.raises(ValueError):
        transfer_labels(mesh, empty)


def test_transfer_idempotent_on_template():
    mesh, labels, _ = fixtures.face_template(32)
    once = transfer_labels(mesh, LabeledTemplate(mesh, labels))
    twice = transfer_labels(mesh, LabeledTemplate(mesh, once))
    assert np.array_equal(once.face_labels, twice.face_labels)
    assert once.region_count == twice.region_count
