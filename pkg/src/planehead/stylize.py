"""Stylization of the abstracted mesh: residual assembly for the
exaggeration / planarization / regularization energies and their
Levenberg-Marquardt minimization over the anchor positions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels, transfer
from .abstraction import AbstractedMesh
from .geometry import proxy_centroid, proxy_normal  # re-exported ops  # noqa: F401
from .leastsq import levenberg_marquardt

LAMBDA_D_MAX = 3.0  # exclusive upper bound on the exaggeration weight


@dataclass(frozen=True)
class PlaneProxy:
    """The sculptor's plane of one region: unit normal + centroid."""

    region: int
    normal: np.ndarray
    centroid: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        c = np.asarray(self.centroid, dtype=np.float64)
        if abs(np.linalg.norm(n) - 1.0) > 1e-6:
            raise ValueError("proxy normal must be unit length")
        if not np.isfinite(c).all():
            raise ValueError("proxy centroid must be finite")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "centroid", c)


@dataclass(frozen=True)
class LanteriConstraint:
    """Caliper constraint preserving a facial measurement.

    kind: absolute_position (1 landmark), relative_position or
    relative_distance (2 landmarks). Reference points (and distance) are
    captured from the undeformed mesh at setup.
    """

    kind: str
    landmarks: tuple
    ref_points: np.ndarray
    ref_distance: float | None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("absolute_position", "relative_position", "relative_distance"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        pts = np.asarray(self.ref_points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "ref_points", pts)
        n_needed = 1 if self.kind == "absolute_position" else 2
        if len(self.landmarks) != n_needed or len(pts) != n_needed:
            raise ValueError(f"{self.kind} takes {n_needed} landmark(s)")
        if n_needed == 2:
            if self.landmarks[0] == self.landmarks[1]:
                raise ValueError("relative constraint needs two distinct landmarks")
            if not (self.ref_distance and self.ref_distance > 0):
                raise ValueError("reference distance must be positive")


@dataclass
class StyleParams:
    """All stylization weights and per-element user edits."""

    lambda_d: float = 1.0  # exaggeration
    lambda_f: float = 1.0  # flatness
    lambda_a: float = 10.0  # area preservation
    lambda_e: float = 4.0  # border edge preservation
    lambda_v: float = 60.0  # vertex + Lanteri preservation
    lambda_n: float = 1.0  # normal preservation
    mu: float = 0.0  # global planarization in [0, 1]
    mu_per_region: dict = field(default_factory=dict)
    edge_scales: dict = field(default_factory=dict)  # (i, j) -> s_ij
    edge_smoothing: dict = field(default_factory=dict)  # (i, j) -> s
    smoothing_default: float = 0.0
    use_lanteri: bool = True

    GLOBALS = ("lambda_d", "lambda_f", "lambda_a", "lambda_e", "lambda_v",
               "lambda_n", "mu", "smoothing_default")

    def validate(self) -> None:
        for name in ("lambda_f", "lambda_a", "lambda_e", "lambda_v", "lambda_n"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not (0.0 <= self.lambda_d < LAMBDA_D_MAX):
            raise ValueError(f"lambda_d must lie in [0, {LAMBDA_D_MAX})")
        if not (0.0 <= self.mu <= 1.0):
            raise ValueError("mu must lie in [0, 1]")
        for r, v in self.mu_per_region.items():
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"mu for region {r} must lie in [0, 1]")
        for key, v in self.edge_scales.items():
            if v < 0:
                raise ValueError(f"edge scale {key} must be >= 0")
        for key, v in self.edge_smoothing.items():
            if v < 0:
                raise ValueError(f"edge smoothing {key} must be >= 0")
        if self.smoothing_default < 0:
            raise ValueError("smoothing_default must be >= 0")

    def mu_for(self, region: int) -> float:
        return float(self.mu_per_region.get(region, self.mu))

    def copy(self) -> "StyleParams":
        return StyleParams.from_json_dict(self.to_json_dict())

    def to_json_dict(self) -> dict:
        d = {name: getattr(self, name) for name in self.GLOBALS}
        d["mu_per_region"] = {str(r): v for r, v in sorted(self.mu_per_region.items())}
        d["edge_scales"] = {f"{i}-{j}": v for (i, j), v in sorted(self.edge_scales.items())}
        d["edge_smoothing"] = {f"{i}-{j}": v for (i, j), v in sorted(self.edge_smoothing.items())}
        d["use_lanteri"] = self.use_lanteri
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "StyleParams":
        def pairs(m):
            return {tuple(int(x) for x in k.split("-")): float(v) for k, v in m.items()}

        p = cls(**{name: float(d[name]) for name in cls.GLOBALS if name in d})
        p.mu_per_region = {int(r): float(v) for r, v in d.get("mu_per_region", {}).items()}
        p.edge_scales = pairs(d.get("edge_scales", {}))
        p.edge_smoothing = pairs(d.get("edge_smoothing", {}))
        p.use_lanteri = bool(d.get("use_lanteri", True))
        return p

    @classmethod
    def load(cls, path) -> "StyleParams":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")


def default_edge_weights(a: AbstractedMesh) -> dict:
    """Boundary length over mean boundary length, per adjacent region
    pair; the defaults average to one by construction."""
    lengths = {p: l for p, l in a.boundary_lengths().items() if p[0] >= 1}
    if not lengths:
        return {}
    mean = sum(lengths.values()) / len(lengths)
    return {p: l / mean for p, l in lengths.items()}


# ---------------------------------------------------------------------------
# residual system


class StyleSystem:
    """Preassembled index arrays + coefficients for residual evaluation.

    The reference quantities (A0, n0, v0) are evaluated through the same
    kernel as later residuals, so the undeformed state is an exact root.
    """

    def __init__(self, abstracted: AbstractedMesh, params: StyleParams,
                 constraints=(), landmark_weights=None):
        params.validate()
        self.abstracted = abstracted
        self.params = params
        k = abstracted.region_count
        self.region_count = k
        self.ebar = abstracted.mean_edge_length

        edge_a, edge_b, eptr, aidx, aptr = [], [], [0], [], [0]
        for r in range(1, k + 1):
            for cycle in abstracted.loops[r]:
                edge_a.extend(cycle.tolist())
                edge_b.extend(np.roll(cycle, -1).tolist())
                aidx.extend(cycle.tolist())
            eptr.append(len(edge_a))
            aptr.append(len(aidx))
        self.edge_a = np.asarray(edge_a, dtype=np.int64)
        self.edge_b = np.asarray(edge_b, dtype=np.int64)
        self.region_edge_ptr = np.asarray(eptr, dtype=np.int64)
        self.anchor_idx = np.asarray(aidx, dtype=np.int64)
        self.region_anchor_ptr = np.asarray(aptr, dtype=np.int64)

        weights = default_edge_weights(abstracted)
        pairs = sorted(weights)
        self.pairs = pairs
        self.pair_i = np.asarray([p[0] - 1 for p in pairs], dtype=np.int64)
        self.pair_j = np.asarray([p[1] - 1 for p in pairs], dtype=np.int64)
        w = np.asarray(
            [weights[p] * params.edge_scales.get(p, 1.0) for p in pairs]
        )
        self.pair_weights = w
        self.c_pair = np.sqrt(params.lambda_d * w / 2.0)
        self.energy_offset = float(params.lambda_d * w.sum())

        self.c_flat = float(np.sqrt(params.lambda_f))
        self.c_area = float(np.sqrt(params.lambda_a))
        self.c_edge = float(np.sqrt(params.lambda_e))
        self.c_vertex = float(np.sqrt(params.lambda_v / (2.0 * self.ebar ** 2)))
        self.c_normal = float(np.sqrt(params.lambda_n / 2.0))
        self.c_relative = float(np.sqrt(params.lambda_v / 2.0))

        self.bedge_a = abstracted.border_edges[:, 0].astype(np.int64)
        self.bedge_b = abstracted.border_edges[:, 1].astype(np.int64)
        self.edge_len0 = abstracted.initial_edge_length.astype(np.float64)

        self.free_mask = abstracted.free_mask()
        self.free_idx = np.where(self.free_mask)[0].astype(np.int64)
        self.v0 = abstracted.anchors.astype(np.float64)

        # reference quantities through the evaluation kernel itself
        n0, c0, a0 = kernels.region_quantities(
            self.v0[None], self.edge_a, self.edge_b, self.region_edge_ptr,
            self.anchor_idx, self.region_anchor_ptr,
            abstracted.initial_normal[1:].astype(np.float64),
        )
        self.normal0 = np.ascontiguousarray(n0[0])
        self.centroid0 = np.ascontiguousarray(c0[0])
        self.area0 = np.ascontiguousarray(a0[0])
        if not (self.area0 > 0).all():
            raise ValueError("degenerate region loop (zero area)")

        # Lanteri tables
        self.constraints = list(constraints) if params.use_lanteri else []
        self.landmark_weights = landmark_weights or {}
        if self.constraints:
            missing = [
                v
                for c in self.constraints
                for v in c.landmarks
                if v not in self.landmark_weights
            ]
            if missing:
                raise ValueError(f"no skinning weights for landmarks {sorted(set(missing))}")
            mus = np.array([params.mu_for(r) for r in range(1, k + 1)])
            n0 = self.normal0
            outer = np.einsum("ki,kj->kij", n0, n0)
            self.plan_lin = np.eye(3)[None] - mus[:, None, None] * outer
            ndotc = np.einsum("ki,ki->k", n0, self.centroid0)
            self.plan_trans = (mus * ndotc)[:, None] * n0

        self.n_geo = (
            len(self.pair_i)
            + len(self.anchor_idx)
            + k
            + len(self.bedge_a)
            + 3 * len(self.free_idx)
            + 3 * k
        )
        self.n_lanteri = sum(1 if c.kind == "relative_distance" else 3 for c in self.constraints)
        self.offsets = {
            "pair": (0, len(self.pair_i)),
            "flat": (len(self.pair_i), len(self.pair_i) + len(self.anchor_idx)),
        }
        o = len(self.pair_i) + len(self.anchor_idx)
        self.offsets["area"] = (o, o + k)
        o += k
        self.offsets["edge"] = (o, o + len(self.bedge_a))
        o += len(self.bedge_a)
        self.offsets["vertex"] = (o, o + 3 * len(self.free_idx))
        o += 3 * len(self.free_idx)
        self.offsets["normal"] = (o, o + 3 * k)
        o += 3 * k
        self.offsets["lanteri"] = (o, o + self.n_lanteri)

    # -- evaluation --------------------------------------------------------

    def residual_batch(self, positions: np.ndarray):
        """positions (B, n, 3) -> residuals (B, m) plus region quantities."""
        res, normals, centroids, areas = kernels.geometry_residuals(
            np.ascontiguousarray(positions, dtype=np.float64),
            self.edge_a, self.edge_b, self.region_edge_ptr,
            self.anchor_idx, self.region_anchor_ptr,
            self.normal0, self.area0,
            self.pair_i, self.pair_j, self.c_pair,
            self.c_flat, self.c_area,
            self.bedge_a, self.bedge_b, self.edge_len0, self.c_edge,
            self.free_idx, self.v0, self.c_vertex,
            self.c_normal,
        )
        if self.constraints:
            lan = self._lanteri_batch(normals, centroids)
            res = np.concatenate([res, lan], axis=1)
        return res, normals, centroids, areas

    def residuals(self, positions: np.ndarray) -> np.ndarray:
        return self.residual_batch(positions[None])[0][0]

    def _region_transform_rows(self, normals, centroids):
        """Batched 3x4 transforms per region from current proxies."""
        rot = transfer.rotation_matrices_between(self.normal0, normals)  # (B,K,3,3)
        lin = rot @ self.plan_lin[None]
        trans = (
            np.einsum("bkij,kj->bki", rot, self.plan_trans)
            + centroids
            - np.einsum("bkij,kj->bki", rot, self.centroid0)
        )
        return lin, trans

    def _lanteri_batch(self, normals, centroids):
        B = normals.shape[0]
        lin, trans = self._region_transform_rows(normals, centroids)
        out = np.empty((B, self.n_lanteri))
        col = 0
        for c in self.constraints:
            tps = []
            for v, p in zip(c.landmarks, c.ref_points):
                w = self.landmark_weights[v]
                a_p = w[0] * np.eye(3)[None] + np.einsum("k,bkij->bij", w[1:], lin)
                b_p = np.einsum("k,bki->bi", w[1:], trans)
                tps.append(np.einsum("bij,j->bi", a_p, p) + b_p)
            if c.kind == "absolute_position":
                out[:, col:col + 3] = self.c_vertex * (tps[0] - c.ref_points[0])
                col += 3
            elif c.kind == "relative_position":
                d0 = c.ref_points[0] - c.ref_points[1]
                out[:, col:col + 3] = (
                    self.c_relative * ((tps[0] - tps[1]) - d0) / c.ref_distance
                )
                col += 3
            else:  # relative_distance
                d = np.linalg.norm(tps[0] - tps[1], axis=1)
                out[:, col] = self.c_relative * (d - c.ref_distance) / c.ref_distance
                col += 1
        return out

    def split(self, res: np.ndarray) -> dict:
        return {name: res[..., a:b] for name, (a, b) in self.offsets.items()}


# spec-facing residual views ------------------------------------------------


def style_residuals(system: StyleSystem, positions: np.ndarray) -> np.ndarray:
    """Exaggeration + flatness rows of the residual vector."""
    parts = system.split(system.residuals(positions))
    return np.concatenate([parts["pair"], parts["flat"]])


def reg_residuals(system: StyleSystem, positions: np.ndarray) -> np.ndarray:
    """Area / edge / vertex / normal regularizer rows."""
    parts = system.split(system.residuals(positions))
    return np.concatenate([parts["area"], parts["edge"], parts["vertex"], parts["normal"]])


def lanteri_residuals(system: StyleSystem, positions: np.ndarray) -> np.ndarray:
    return system.split(system.residuals(positions))["lanteri"]


def lanteri_residuals_from_transforms(constraints, transforms: dict, weights: dict,
                                      ebar: float, lambda_v: float) -> np.ndarray:
    """Reference implementation against explicit per-region transforms
    (region 0 = identity); used to cross-check the batched path."""
    c_vertex = np.sqrt(lambda_v / (2.0 * ebar ** 2))
    c_rel = np.sqrt(lambda_v / 2.0)
    region_ids = sorted(transforms)

    def apply_blend(v, p):
        w = weights[v]
        out = w[0] * p
        for r in region_ids:
            out = out + w[r] * transforms[r].apply(p)
        return out

    rows = []
    for c in constraints:
        tp = [apply_blend(v, p) for v, p in zip(c.landmarks, c.ref_points)]
        if c.kind == "absolute_position":
            rows.extend(c_vertex * (tp[0] - c.ref_points[0]))
        elif c.kind == "relative_position":
            d0 = c.ref_points[0] - c.ref_points[1]
            rows.extend(c_rel * ((tp[0] - tp[1]) - d0) / c.ref_distance)
        else:
            d = np.linalg.norm(tp[0] - tp[1])
            rows.append(c_rel * (d - c.ref_distance) / c.ref_distance)
    return np.asarray(rows)


# ---------------------------------------------------------------------------
# optimization


@dataclass
class OptimizationState:
    positions: np.ndarray  # all anchors (n, 3)
    free_mask: np.ndarray
    cost: float  # sum of squared residuals
    energy_trace: list[float]
    iterations: int
    converged: bool
    reason: str
    lm_damping: float
    normals: np.ndarray  # (K, 3) current proxies (region r -> row r-1)
    centroids: np.ndarray
    areas: np.ndarray
    energy_offset: float = 0.0

    @property
    def energy(self) -> float:
        """Reported energy including the constant from the dot-product
        rewrite, so it matches the printed E_style + E_reg."""
        return self.cost - self.energy_offset

    def proxies(self) -> dict[int, PlaneProxy]:
        return {
            r: PlaneProxy(r, self.normals[r - 1], self.centroids[r - 1])
            for r in range(1, len(self.normals) + 1)
        }


def optimize(
    abstracted: AbstractedMesh,
    params: StyleParams,
    constraints=(),
    *,
    landmark_weights=None,
    x0: np.ndarray | None = None,
    max_iters: int = 200,
    ftol: float = 1e-6,
    gtol: float = 1e-8,
    time_budget: float | None = None,
    damping: float = 1e-3,
) -> OptimizationState:
    """Minimize the stylization + regularization energy over the free
    anchors (open-boundary anchors stay bit-identical to the input)."""
    system = StyleSystem(abstracted, params, constraints, landmark_weights)
    positions = (abstracted.anchors if x0 is None else np.asarray(x0, dtype=np.float64)).copy()
    if positions.shape != abstracted.anchors.shape:
        raise ValueError("x0 has the wrong shape")
    free = system.free_idx

    def assemble(x):
        p = positions.copy()
        p[free] = x.reshape(-1, 3)
        return p

    def fun(x):
        return system.residuals(assemble(x))

    def batch_fun(xs):
        batch = np.repeat(positions[None], len(xs), axis=0)
        batch[:, free] = xs.reshape(len(xs), -1, 3)
        return system.residual_batch(batch)[0]

    x_init = positions[free].ravel()
    if not np.isfinite(system.residuals(positions)).all():
        raise ValueError("non-finite energy at the starting state")

    result = levenberg_marquardt(
        fun,
        x_init,
        fd_step=1e-6 * abstracted.mean_edge_length,
        batch_fun=batch_fun,
        ftol=ftol,
        gtol=gtol,
        max_iters=max_iters,
        time_budget=time_budget,
        damping=damping,
    )
    final = assemble(result.x)
    _, normals, centroids, areas = system.residual_batch(final[None])
    return OptimizationState(
        positions=final,
        free_mask=system.free_mask.copy(),
        cost=result.cost,
        energy_trace=result.energy_trace,
        iterations=result.iterations,
        converged=result.converged,
        reason=result.reason,
        lm_damping=result.damping,
        normals=normals[0],
        centroids=centroids[0],
        areas=areas[0],
        energy_offset=system.energy_offset,
    )


def initial_state(abstracted: AbstractedMesh, params: StyleParams) -> OptimizationState:
    """The undeformed state packaged as an OptimizationState."""
    system = StyleSystem(abstracted, params)
    res, normals, centroids, areas = system.residual_batch(abstracted.anchors[None])
    return OptimizationState(
        positions=abstracted.anchors.copy(),
        free_mask=system.free_mask.copy(),
        cost=float(res[0] @ res[0]),
        energy_trace=[float(res[0] @ res[0])],
        iterations=0,
        converged=True,
        reason="initial",
        lm_damping=1e-3,
        normals=normals[0],
        centroids=centroids[0],
        areas=areas[0],
        energy_offset=system.energy_offset,
    )


def region_transforms(abstracted: AbstractedMesh, state: OptimizationState,
                      params: StyleParams) -> dict:
    """Per-region affine transforms from build-time proxies to the
    optimized ones (planarize first, then the rigid motion)."""
    out = {}
    for r in range(1, abstracted.region_count + 1):
        before = PlaneProxy(r, abstracted.initial_normal[r], abstracted.initial_centroid[r])
        after = PlaneProxy(r, state.normals[r - 1], state.centroids[r - 1])
        out[r] = transfer.region_transform(before, after, params.mu_for(r))
    return out
