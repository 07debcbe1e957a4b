"""OBJ and PLY loading/saving. Positions and triangles only: normals,
colors and texture coordinates are ignored on input and never written."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mesh import Mesh, MeshParseError, RegionLabeling

_PLY_SCALARS = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def load_mesh(path, validate: bool = True) -> Mesh:
    """Load an OBJ or PLY file into a validated ``Mesh``.

    Raises ``MeshParseError`` on malformed files and
    ``MeshValidationError`` (with the defect list) on structurally
    invalid meshes.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        verts, tris = _read_obj(path)
    elif suffix == ".ply":
        verts, tris = _read_ply(path)
    else:
        raise MeshParseError(f"unsupported mesh format: {path.name}")
    return Mesh(verts, tris, validate=validate)


def save_mesh(m: Mesh, path, binary: bool = True) -> None:
    """Write positions + triangles as OBJ or PLY (binary little-endian by
    default for .ply)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        _write_obj(m, path)
    elif suffix == ".ply":
        _write_ply(m, path, binary=binary)
    else:
        raise MeshParseError(f"unsupported mesh format: {path.name}")


# ---------------------------------------------------------------------------
# OBJ


def _read_obj(path: Path):
    verts = []
    tris = []
    with open(path, "r", errors="replace") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line[0] == "#":
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshParseError(f"{path.name}:{lineno}: short vertex record")
                try:
                    verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError as exc:
                    raise MeshParseError(f"{path.name}:{lineno}: bad vertex: {exc}") from None
            elif tag == "f":
                if len(parts) != 4:
                    raise MeshParseError(
                        f"{path.name}:{lineno}: only triangle faces are supported"
                    )
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise MeshParseError(f"{path.name}:{lineno}: bad face index {tok!r}") from None
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                tris.append(idx)
            # other records (vn, vt, o, g, s, usemtl, ...) are ignored
    if not verts:
        raise MeshParseError(f"{path.name}: no vertices")
    return np.asarray(verts, dtype=np.float64), np.asarray(tris, dtype=np.int64).reshape(-1, 3)


def _write_obj(m: Mesh, path: Path):
    with open(path, "w") as fh:
        for x, y, z in m.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in m.triangles + 1:
            fh.write(f"f {a} {b} {c}\n")


# ---------------------------------------------------------------------------
# PLY


def _read_ply(path: Path):
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"ply":
            raise MeshParseError(f"{path.name}: not a PLY file")
        fmt = None
        elements = []  # (name, count, [(prop_name, dtype | ('list', cdtype, idtype))])
        while True:
            raw = fh.readline()
            if not raw:
                raise MeshParseError(f"{path.name}: unterminated header")
            line = raw.decode("ascii", errors="replace").strip()
            if not line or line.startswith("comment") or line.startswith("obj_info"):
                continue
            parts = line.split()
            if parts[0] == "format":
                fmt = parts[1]
                if fmt not in ("ascii", "binary_little_endian"):
                    raise MeshParseError(f"{path.name}: unsupported format {fmt}")
            elif parts[0] == "element":
                elements.append((parts[1], int(parts[2]), []))
            elif parts[0] == "property":
                if not elements:
                    raise MeshParseError(f"{path.name}: property before element")
                if parts[1] == "list":
                    elements[-1][2].append((parts[4], ("list", parts[2], parts[3])))
                else:
                    elements[-1][2].append((parts[2], parts[1]))
            elif parts[0] == "end_header":
                break
            else:
                raise MeshParseError(f"{path.name}: bad header line {line!r}")
        if fmt is None:
            raise MeshParseError(f"{path.name}: missing format line")

        verts = None
        tris = None
        for name, count, props in elements:
            if fmt == "ascii":
                data = _read_ply_ascii_element(fh, path, count, props)
            else:
                data = _read_ply_binary_element(fh, path, count, props)
            if name == "vertex":
                try:
                    verts = np.stack([data["x"], data["y"], data["z"]], axis=1).astype(np.float64)
                except KeyError:
                    raise MeshParseError(f"{path.name}: vertex element lacks x/y/z") from None
            elif name == "face":
                key = "vertex_indices" if "vertex_indices" in data else "vertex_index"
                if key not in data:
                    raise MeshParseError(f"{path.name}: face element lacks vertex indices")
                tris = data[key]
    if verts is None:
        raise MeshParseError(f"{path.name}: no vertex element")
    if tris is None:
        tris = np.zeros((0, 3), dtype=np.int64)
    return verts, np.asarray(tris, dtype=np.int64)


def _read_ply_ascii_element(fh, path, count, props):
    out: dict = {p[0]: [] for p in props}
    for _ in range(count):
        line = fh.readline().decode("ascii", errors="replace").split()
        pos = 0
        for pname, ptype in props:
            if isinstance(ptype, tuple):
                n = int(line[pos]); pos += 1
                if n != 3:
                    raise MeshParseError(f"{path.name}: non-triangle face (n={n})")
                out[pname].append([int(line[pos]), int(line[pos + 1]), int(line[pos + 2])])
                pos += 3
            else:
                out[pname].append(float(line[pos])); pos += 1
    return {k: np.asarray(v) for k, v in out.items()}


def _read_ply_binary_element(fh, path, count, props):
    fields = []
    for pname, ptype in props:
        if isinstance(ptype, tuple):
            _, cdtype, idtype = ptype
            fields.append((pname + "__n", "<" + _PLY_SCALARS[cdtype]))
            fields.append((pname, "<" + _PLY_SCALARS[idtype], (3,)))
        else:
            fields.append((pname, "<" + _PLY_SCALARS[ptype]))
    dt = np.dtype(fields)
    buf = fh.read(dt.itemsize * count)
    if len(buf) != dt.itemsize * count:
        raise MeshParseError(f"{path.name}: truncated binary payload")
    rec = np.frombuffer(buf, dtype=dt)
    out = {}
    for pname, ptype in props:
        if isinstance(ptype, tuple):
            if not (rec[pname + "__n"] == 3).all():
                raise MeshParseError(f"{path.name}: non-triangle face in binary PLY")
            out[pname] = rec[pname].astype(np.int64)
        else:
            out[pname] = rec[pname].astype(np.float64)
    return out


def _write_ply(m: Mesh, path: Path, binary: bool):
    n, k = m.n_vertices, m.n_triangles
    header = [
        "ply",
        "format binary_little_endian 1.0" if binary else "format ascii 1.0",
        f"element vertex {n}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {k}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    if binary:
        with open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            fh.write(np.ascontiguousarray(m.vertices, dtype="<f8").tobytes())
            face_dt = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
            rec = np.empty(k, dtype=face_dt)
            rec["n"] = 3
            rec["idx"] = m.triangles
            fh.write(rec.tobytes())
    else:
        with open(path, "w") as fh:
            fh.write("\n".join(header) + "\n")
            for x, y, z in m.vertices:
                fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
            for a, b, c in m.triangles:
                fh.write(f"3 {a} {b} {c}\n")


# ---------------------------------------------------------------------------
# region label sidecars


def load_labels(path) -> RegionLabeling:
    with open(path) as fh:
        return RegionLabeling.from_json_dict(json.load(fh))


def save_labels(labels: RegionLabeling, path) -> None:
    with open(path, "w") as fh:
        json.dump(labels.to_json_dict(), fh)
        fh.write("\n")
