import numpy as np
import pytest

from planehead import fixtures
from planehead.abstraction import build_abstracted_mesh
from planehead.metrics import build_lanteri_constraints
from planehead.transfer import build_skinning_pyramid, landmark_region_weights


@pytest.fixture(scope="session")
def face_bundle():
    """The synthetic face with everything derived from it (built once)."""
    mesh, labels, landmarks = fixtures.synthetic_face()
    abstracted = build_abstracted_mesh(mesh, labels)
    pyramid = build_skinning_pyramid(mesh, labels, levels=8)
    constraints = build_lanteri_constraints(landmarks, mesh.vertices)
    weights = landmark_region_weights(
        pyramid, np.zeros(mesh.n_vertices), [landmarks[n] for n in landmarks.landmarks]
    )
    return {
        "mesh": mesh,
        "labels": labels,
        "landmarks": landmarks,
        "abstracted": abstracted,
        "pyramid": pyramid,
        "constraints": constraints,
        "landmark_weights": weights,
    }


@pytest.fixture(scope="session")
def sphere30k():
    """The large benchmark mesh (~41k vertices)."""
    return fixtures.subdivided_sphere_30k()


@pytest.fixture(scope="session")
def sphere30k_labeled(sphere30k):
    return sphere30k, fixtures.octant_labels(sphere30k)
