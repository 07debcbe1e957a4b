"""Landmark bookkeeping, caliper-style constraint construction and the
eye-socket depth measures used to compare groups of scans."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from statistics import mean, median

import numpy as np

from .stylize import LanteriConstraint

MEASURES = ("A", "B", "C", "D")


@dataclass(frozen=True)
class LandmarkSet:
    """Named fiducial vertices on a mesh.

    Canonical names: inner_eye_L/R, outer_eye_L/R, brow_mid_L/R,
    mouth_corner_L/R, nose_tip, nose_bridge, chin, ear_base_L/R,
    ear_notch_L/R, nostril_L/R, sternum (optional).
    """

    landmarks: dict

    def __post_init__(self):
        for name, idx in self.landmarks.items():
            if int(idx) < 0:
                raise ValueError(f"landmark {name} has negative index")
        for a, b in [("inner_eye_L", "inner_eye_R"), ("outer_eye_L", "outer_eye_R"),
                     ("brow_mid_L", "brow_mid_R"), ("mouth_corner_L", "mouth_corner_R"),
                     ("ear_base_L", "ear_base_R"), ("nostril_L", "nostril_R")]:
            if a in self.landmarks and b in self.landmarks:
                if self.landmarks[a] == self.landmarks[b]:
                    raise ValueError(f"left/right pair {a}/{b} maps to one vertex")

    def __contains__(self, name) -> bool:
        return name in self.landmarks

    def __getitem__(self, name) -> int:
        return int(self.landmarks[name])

    def has_all(self, names) -> bool:
        return all(n in self.landmarks for n in names)

    def to_json_dict(self) -> dict:
        return {"landmarks": {k: int(v) for k, v in self.landmarks.items()}}

    @classmethod
    def from_json_dict(cls, d: dict) -> "LandmarkSet":
        return cls({k: int(v) for k, v in d["landmarks"].items()})

    @classmethod
    def load(cls, path) -> "LandmarkSet":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")


# The nine caliper constraints, in emission order. Measurements that run to
# points outside the deformed area (ears, sternum) are represented by the
# absolute-position entries instead of distances.
_CONSTRAINT_TABLE = [
    ("mouth_span", "relative_distance", ("mouth_corner_L", "mouth_corner_R")),
    ("nose_length", "relative_distance", ("nose_bridge", "nose_tip")),
    ("chin_position", "absolute_position", ("chin",)),
    ("nose_tip_position", "absolute_position", ("nose_tip",)),
    ("chin_to_brow_L", "relative_distance", ("chin", "brow_mid_L")),
    ("chin_to_brow_R", "relative_distance", ("chin", "brow_mid_R")),
    ("mouth_to_nostril_L", "relative_distance", ("mouth_corner_L", "nostril_L")),
    ("mouth_to_nostril_R", "relative_distance", ("mouth_corner_R", "nostril_R")),
    ("inner_eye_span", "relative_distance", ("inner_eye_L", "inner_eye_R")),
]


def build_lanteri_constraints(lm: LandmarkSet, positions: np.ndarray) -> list[LanteriConstraint]:
    """Emit the nine caliper constraints for the landmarks present.

    ``positions`` are the (undeformed) mesh vertex positions the reference
    points and distances are captured from. Missing landmarks skip their
    constraint with a warning; the order of the result is fixed.
    """
    positions = np.asarray(positions, dtype=np.float64)
    out: list[LanteriConstraint] = []
    for name, kind, needed in _CONSTRAINT_TABLE:
        if not lm.has_all(needed):
            warnings.warn(f"landmarks missing for constraint {name}: {needed}")
            continue
        idx = tuple(lm[n] for n in needed)
        pts = positions[list(idx)]
        if len(idx) == 2:
            d = float(np.linalg.norm(pts[0] - pts[1]))
            if d == 0.0:
                raise ValueError(f"constraint {name}: coincident landmark pair")
            out.append(LanteriConstraint(kind, idx, pts, d, name=name))
        else:
            out.append(LanteriConstraint(kind, idx, pts, None, name=name))
    return out


@dataclass
class MeasureReport:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for v in (self.a, self.b, self.c, self.d):
            if v < 0:
                raise ValueError("measures are unsigned")

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)

    def to_json_dict(self):
        return {"A": self.a, "B": self.b, "C": self.c, "D": self.d}

    @classmethod
    def from_json_dict(cls, d):
        return cls(float(d["A"]), float(d["B"]), float(d["C"]), float(d["D"]))


def _point_plane_distance(p, q1, q2, q3):
    n = np.cross(q2 - q1, q3 - q1)
    nn = np.linalg.norm(n)
    if nn < 1e-12 * max(np.linalg.norm(q2 - q1), 1e-300):
        raise ValueError("collinear plane-defining landmarks")
    return abs(float(np.dot(p - q1, n / nn)))


def eye_socket_measures(lm: LandmarkSet, positions: np.ndarray) -> MeasureReport:
    """Scale-invariant eye-socket depth measures A-D.

    A: distance of the inner-eye-corner midpoint to the plane through the
    two brow midpoints and the chin tip, over the ear-base span. B uses
    the outer corners. C/D swap the plane for (nose bridge, mouth
    corners).
    """
    positions = np.asarray(positions, dtype=np.float64)

    def p(name):
        if name not in lm:
            raise ValueError(f"missing landmark {name}")
        return positions[lm[name]]

    ear_span = float(np.linalg.norm(p("ear_base_L") - p("ear_base_R")))
    if ear_span == 0:
        raise ValueError("ear-base span is zero")
    mid_inner = 0.5 * (p("inner_eye_L") + p("inner_eye_R"))
    mid_outer = 0.5 * (p("outer_eye_L") + p("outer_eye_R"))
    brow_plane = (p("brow_mid_L"), p("brow_mid_R"), p("chin"))
    nose_plane = (p("nose_bridge"), p("mouth_corner_L"), p("mouth_corner_R"))
    return MeasureReport(
        a=_point_plane_distance(mid_inner, *brow_plane) / ear_span,
        b=_point_plane_distance(mid_outer, *brow_plane) / ear_span,
        c=_point_plane_distance(mid_inner, *nose_plane) / ear_span,
        d=_point_plane_distance(mid_outer, *nose_plane) / ear_span,
    )


@dataclass
class ComparisonTable:
    """Mean/median aggregation of two measure groups with % increase."""

    mean_human: tuple
    mean_sculpt: tuple
    mean_increase: tuple
    median_human: tuple
    median_sculpt: tuple
    median_increase: tuple

    def rows(self):
        return [
            ("mean", "human") + self.mean_human,
            ("mean", "sculpt") + self.mean_sculpt,
            ("mean", "% increase") + self.mean_increase,
            ("median", "human") + self.median_human,
            ("median", "sculpt") + self.median_sculpt,
            ("median", "% increase") + self.median_increase,
        ]

    def as_csv(self) -> str:
        lines = ["aggregate,group,A,B,C,D"]
        for row in self.rows():
            lines.append(",".join(str(x) if isinstance(x, str) else f"{x:.6g}" for x in row))
        return "\n".join(lines) + "\n"

    def as_text(self) -> str:
        lines = [f"{'':8s}{'':12s}" + "".join(f"{m:>10s}" for m in MEASURES)]
        for row in self.rows():
            head = f"{row[0]:8s}{row[1]:12s}"
            lines.append(head + "".join(f"{x:10.3f}" for x in row[2:]))
        return "\n".join(lines) + "\n"


def aggregate_measures(human: list[MeasureReport], sculpt: list[MeasureReport]) -> ComparisonTable:
    """Mean and median of each measure per group plus percent increase
    (100 * (sculpt - human) / human)."""
    if not human or not sculpt:
        raise ValueError("both groups must be nonempty")

    def agg(group, fn):
        cols = list(zip(*[r.as_tuple() for r in group]))
        return tuple(fn(c) for c in cols)

    mh, ms = agg(human, mean), agg(sculpt, mean)
    dh, ds = agg(human, median), agg(sculpt, median)

    def pct(h, s):
        return tuple(100.0 * (sv - hv) / hv for hv, sv in zip(h, s))

    return ComparisonTable(mh, ms, pct(mh, ms), dh, ds, pct(dh, ds))
