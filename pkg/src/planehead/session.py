"""A loaded stylization session: mesh + labels + abstraction + pyramid
plus the current parameters and optimization state. The CLI drives it
to convergence in one shot; the live service drives it incrementally."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import meshio, stylize, transfer
from .abstraction import AbstractedMesh, build_abstracted_mesh
from .mesh import Mesh, RegionLabeling
from .metrics import LandmarkSet, build_lanteri_constraints
from .stylize import LanteriConstraint, OptimizationState, StyleParams


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class StudioSession:
    """Holds everything needed to re-run optimize + transfer on demand."""

    def __init__(
        self,
        mesh: Mesh,
        labels: RegionLabeling,
        params: StyleParams | None = None,
        landmarks: LandmarkSet | None = None,
        abstracted: AbstractedMesh | None = None,
        constraints: list[LanteriConstraint] | None = None,
        pyramid_levels: int = 8,
        mesh_path: str | None = None,
        mesh_sha256: str | None = None,
    ):
        labels.validate(mesh)
        self.mesh = mesh
        self.labels = labels
        self.params = params or StyleParams()
        self.params.validate()
        self.landmarks = landmarks
        self.abstracted = abstracted or build_abstracted_mesh(mesh, labels)
        self.pyramid_levels = pyramid_levels
        self.pyramid = transfer.build_skinning_pyramid(mesh, labels, pyramid_levels)
        self.scale_solver = transfer.SmoothingScaleSolver(mesh, labels)
        if constraints is not None:
            self.constraints = constraints
        elif landmarks is not None:
            self.constraints = build_lanteri_constraints(landmarks, mesh.vertices)
        else:
            self.constraints = []
        self.mesh_path = mesh_path
        self.mesh_sha256 = mesh_sha256
        self.state: OptimizationState = stylize.initial_state(self.abstracted, self.params)
        self.positions = mesh.vertices.copy()
        self.revision = 0
        self._scale_cache: tuple | None = None

    # -- parameter edits ----------------------------------------------------

    def set_global(self, name: str, value: float) -> bool:
        if name not in StyleParams.GLOBALS:
            raise ValueError(f"unknown global parameter {name!r}")
        candidate = self.params.copy()
        setattr(candidate, name, float(value))
        candidate.validate()
        if getattr(self.params, name) == float(value):
            return False
        self.params = candidate
        return True

    def set_edge_weight(self, i: int, j: int, scale: float) -> bool:
        return self._set_pair("edge_scales", i, j, scale)

    def set_edge_smoothing(self, i: int, j: int, scale: float) -> bool:
        return self._set_pair("edge_smoothing", i, j, scale)

    def _set_pair(self, field: str, i: int, j: int, value: float) -> bool:
        key = (min(int(i), int(j)), max(int(i), int(j)))
        if key not in self.abstracted.boundary_lengths():
            raise ValueError(f"no boundary between regions {key}")
        candidate = self.params.copy()
        getattr(candidate, field)[key] = float(value)
        candidate.validate()
        if getattr(self.params, field).get(key) == float(value):
            return False
        self.params = candidate
        return True

    def set_face_planarization(self, region: int, mu: float) -> bool:
        if not (1 <= int(region) <= self.labels.region_count):
            raise ValueError(f"region {region} out of range")
        candidate = self.params.copy()
        candidate.mu_per_region[int(region)] = float(mu)
        candidate.validate()
        if self.params.mu_per_region.get(int(region)) == float(mu):
            return False
        self.params = candidate
        return True

    def toggle_lanteri(self, enabled: bool) -> bool:
        if self.params.use_lanteri == bool(enabled):
            return False
        self.params = self.params.copy()
        self.params.use_lanteri = bool(enabled)
        return True

    # -- evaluation ----------------------------------------------------------

    def scale_field(self) -> np.ndarray:
        """Per-vertex smoothing scale from the current boundary edits."""
        values = dict(self.params.edge_smoothing)
        if self.params.smoothing_default > 0:
            for pair in self.scale_solver.boundaries():
                values.setdefault(pair, self.params.smoothing_default)
        key = tuple(sorted(values.items()))
        if self._scale_cache is not None and self._scale_cache[0] == key:
            return self._scale_cache[1]
        if values:
            field = self.scale_solver.solve(values).field_values
            top = float(self.pyramid.n_levels - 1)
            field = np.clip(field, 0.0, top)
        else:
            field = np.zeros(self.mesh.n_vertices)
        self._scale_cache = (key, field)
        return field

    def landmark_weights(self) -> dict:
        if not self.constraints:
            return {}
        ids = sorted({v for c in self.constraints for v in c.landmarks})
        return transfer.landmark_region_weights(self.pyramid, self.scale_field(), ids)

    def optimize(self, *, max_iters: int = 200, time_budget: float | None = None,
                 warm: bool = True, damping: float | None = None) -> OptimizationState:
        x0 = self.state.positions if warm else None
        self.state = stylize.optimize(
            self.abstracted,
            self.params,
            self.constraints,
            landmark_weights=self.landmark_weights(),
            x0=x0,
            max_iters=max_iters,
            time_budget=time_budget,
            damping=self.state.lm_damping if (warm and damping is None) else (damping or 1e-3),
        )
        return self.state

    def transfer(self) -> np.ndarray:
        transforms = stylize.region_transforms(self.abstracted, self.state, self.params)
        self.positions = transfer.apply_transfer(
            self.mesh, transforms, self.pyramid, self.scale_field()
        )
        self.revision += 1
        return self.positions

    def run_until_converged(self, max_iters: int = 200) -> OptimizationState:
        self.optimize(max_iters=max_iters, warm=True, damping=1e-3)
        self.transfer()
        return self.state

    def export_mesh(self, path) -> None:
        meshio.save_mesh(self.mesh.with_vertices(self.positions), path)

    # -- persistence ----------------------------------------------------------

    def to_session_dict(self) -> dict:
        if not self.mesh_path:
            raise ValueError("session has no mesh path; cannot persist")
        return {
            "version": 1,
            "mesh": {"path": str(self.mesh_path), "sha256": self.mesh_sha256 or file_sha256(self.mesh_path)},
            "labels": self.labels.to_json_dict(),
            "abstracted": self.abstracted.to_json_dict(),
            "params": self.params.to_json_dict(),
            "landmarks": self.landmarks.to_json_dict() if self.landmarks else None,
            "constraints": [
                {
                    "kind": c.kind,
                    "landmarks": list(c.landmarks),
                    "ref_points": c.ref_points.tolist(),
                    "ref_distance": c.ref_distance,
                    "name": c.name,
                }
                for c in self.constraints
            ],
            "pyramid": {"levels": self.pyramid_levels},
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_session_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path, mesh_root: str | None = None) -> "StudioSession":
        with open(path) as fh:
            d = json.load(fh)
        mesh_path = Path(d["mesh"]["path"])
        if mesh_root is not None and not mesh_path.is_absolute():
            mesh_path = Path(mesh_root) / mesh_path
        digest = file_sha256(mesh_path)
        if digest != d["mesh"]["sha256"]:
            raise ValueError(
                f"mesh content hash mismatch for {mesh_path} "
                f"(expected {d['mesh']['sha256'][:12]}..., got {digest[:12]}...)"
            )
        mesh = meshio.load_mesh(mesh_path)
        labels = RegionLabeling.from_json_dict(d["labels"])
        constraints = [
            LanteriConstraint(
                c["kind"], tuple(c["landmarks"]), np.asarray(c["ref_points"]),
                c["ref_distance"], name=c.get("name", ""),
            )
            for c in d.get("constraints", [])
        ]
        return cls(
            mesh,
            labels,
            params=StyleParams.from_json_dict(d["params"]),
            landmarks=LandmarkSet.from_json_dict(d["landmarks"]) if d.get("landmarks") else None,
            abstracted=AbstractedMesh.from_json_dict(d["abstracted"]),
            constraints=constraints,
            pyramid_levels=int(d["pyramid"]["levels"]),
            mesh_path=str(mesh_path),
            mesh_sha256=digest,
        )
