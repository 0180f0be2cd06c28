"""ASCII PLY point-cloud ingestion and export.

Only the vertex element is interpreted; float properties x, y, z are
required and any other properties are ignored on read.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import MalformedPly
from .geometry import PointCloud


def read_ply(path) -> PointCloud:
    """Parse an ASCII PLY file into a PointCloud (no object ids)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MalformedPly("missing 'ply' magic line")

    vertex_count = None
    properties: list[str] = []
    in_vertex_element = False
    fmt_ok = False
    header_end = None
    for i, raw in enumerate(lines[1:], start=1):
        line = raw.strip()
        if line.startswith("format"):
            if "ascii" not in line:
                raise MalformedPly("only ASCII PLY is supported")
            fmt_ok = True
        elif line.startswith("element"):
            parts = line.split()
            in_vertex_element = len(parts) >= 3 and parts[1] == "vertex"
            if in_vertex_element:
                vertex_count = int(parts[2])
        elif line.startswith("property") and in_vertex_element:
            properties.append(line.split()[-1])
        elif line == "end_header":
            header_end = i + 1
            break
    if not fmt_ok or header_end is None:
        raise MalformedPly("incomplete PLY header")
    if vertex_count is None:
        raise MalformedPly("no vertex element declared")
    try:
        ix, iy, iz = (properties.index(n) for n in ("x", "y", "z"))
    except ValueError:
        raise MalformedPly("vertex element must carry x, y, z properties")

    data = lines[header_end:header_end + vertex_count]
    if len(data) < vertex_count:
        raise MalformedPly("fewer vertex rows than declared")
    pts = np.empty((vertex_count, 3))
    for row, line in enumerate(data):
        parts = line.split()
        if len(parts) < len(properties):
            raise MalformedPly(f"vertex row {row} is short")
        pts[row] = (float(parts[ix]), float(parts[iy]), float(parts[iz]))
    return PointCloud(pts)


def write_ply(cloud: PointCloud, path) -> None:
    """Write a cloud as ASCII PLY; object ids become an int property."""
    header = ["ply", "format ascii 1.0",
              f"element vertex {len(cloud)}",
              "property float x", "property float y", "property float z"]
    if cloud.object_ids is not None:
        header.append("property int object_id")
    header.append("end_header")

    rows = []
    for i, p in enumerate(cloud.points):
        row = f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}"
        if cloud.object_ids is not None:
            row += f" {int(cloud.object_ids[i])}"
        rows.append(row)
    Path(path).write_text("\n".join(header + rows) + "\n")
