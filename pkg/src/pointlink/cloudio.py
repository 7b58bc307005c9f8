"""Point-cloud file formats: ASCII PLY (x y z [nx ny nz]) and a flat binary
container (magic, N, flags header; little-endian float64 triplets)."""

from __future__ import annotations

import struct

import numpy as np

from .geometry import PointCloud

_BIN_MAGIC = b"PCF1"
_FLAG_NORMALS = 1


def write_ply(path, cloud: PointCloud):
    has_normals = cloud.normals is not None
    props = ["x", "y", "z"] + (["nx", "ny", "nz"] if has_normals else [])
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(cloud)}\n")
        for p in props:
            fh.write(f"property double {p}\n")
        fh.write("end_header\n")
        rows = cloud.points if not has_normals else np.hstack([cloud.points, cloud.normals])
        for row in rows:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_ply(path) -> PointCloud:
    with open(path) as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise ValueError(f"{path}: not a PLY file")
        n_vertex = None
        props = []
        in_vertex = False
        for line in fh:
            tokens = line.split()
            if not tokens:
                continue
            if tokens[0] == "element":
                in_vertex = tokens[1] == "vertex"
                if in_vertex:
                    n_vertex = int(tokens[2])
            elif tokens[0] == "property" and in_vertex:
                props.append(tokens[2])
            elif tokens[0] == "end_header":
                break
        if n_vertex is None:
            raise ValueError(f"{path}: no vertex element")
        data = np.loadtxt(fh, dtype=np.float64, max_rows=n_vertex, ndmin=2)
    cols = {name: i for i, name in enumerate(props)}
    for req in ("x", "y", "z"):
        if req not in cols:
            raise ValueError(f"{path}: missing property {req}")
    pts = data[:, [cols["x"], cols["y"], cols["z"]]]
    normals = None
    if all(n in cols for n in ("nx", "ny", "nz")):
        normals = data[:, [cols["nx"], cols["ny"], cols["nz"]]]
    return PointCloud(points=pts, normals=normals)


def write_cloud_binary(path, cloud: PointCloud):
    flags = _FLAG_NORMALS if cloud.normals is not None else 0
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<QQ", len(cloud), flags))
        fh.write(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())
        if cloud.normals is not None:
            fh.write(np.ascontiguousarray(cloud.normals, dtype="<f8").tobytes())


def read_cloud_binary(path) -> PointCloud:
    with open(path, "rb") as fh:
        if fh.read(4) != _BIN_MAGIC:
            raise ValueError(f"{path}: not a binary cloud file")
        n, flags = struct.unpack("<QQ", fh.read(16))
        body = np.frombuffer(fh.read(), dtype="<f8")
    pts = body[: n * 3].reshape(n, 3).astype(np.float64)
    normals = None
    if flags & _FLAG_NORMALS:
        normals = body[n * 3: n * 6].reshape(n, 3).astype(np.float64)
    return PointCloud(points=pts, normals=normals)


def load_cloud(path) -> PointCloud:
    """Dispatch on extension: .ply is ASCII PLY, anything else the binary
    container."""
    path = str(path)
    return read_ply(path) if path.endswith(".ply") else read_cloud_binary(path)
