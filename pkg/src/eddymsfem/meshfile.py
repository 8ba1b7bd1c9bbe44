"""Plain-text mesh files.

Layout (whitespace separated, ``#`` starts a comment)::

    vertices 4
    0 0
    1 0
    1 1
    0 1
    triangles 2
    0 1 2 conductor
    0 2 3 conductor
    boundary 1          # optional; untagged boundary edges become "outer"
    0 1 symmetry

Refinement history is not stored: a mesh read from file starts a new forest.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, EddyMsfemError
from .mesh import Mesh2D

SECTIONS = ("vertices", "triangles", "boundary")


def _tokens(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_mesh(text, source="<mesh>"):
    lines = list(_tokens(text))
    data = {"vertices": [], "triangles": [], "boundary": []}
    seen = set()
    i = 0
    while i < len(lines):
        lineno, tok = lines[i]
        if tok[0] not in SECTIONS or len(tok) != 2:
            raise ConfigurationError(f"{source}: expected a section header "
                                     f"'vertices|triangles|boundary N'", line=lineno)
        name = tok[0]
        if name in seen:
            raise ConfigurationError(f"{source}: duplicate section {name!r}", line=lineno)
        seen.add(name)
        try:
            count = int(tok[1])
        except ValueError:
            raise ConfigurationError(f"{source}: bad count {tok[1]!r}", line=lineno) from None
        width = {"vertices": 2, "triangles": 4, "boundary": 3}[name]
        rows = lines[i + 1:i + 1 + count]
        if len(rows) < count:
            raise ConfigurationError(f"{source}: section {name!r} ends early", line=lineno)
        for rl, row in rows:
            if len(row) != width:
                raise ConfigurationError(f"{source}: expected {width} fields in {name!r}",
                                         line=rl)
            try:
                if name == "vertices":
                    data[name].append((float(row[0]), float(row[1])))
                elif name == "triangles":
                    data[name].append((int(row[0]), int(row[1]), int(row[2]), row[3], rl))
                else:
                    data[name].append((int(row[0]), int(row[1]), row[2], rl))
            except ValueError:
                raise ConfigurationError(f"{source}: malformed number in {name!r}",
                                         line=rl) from None
        i += 1 + count
    for name in ("vertices", "triangles"):
        if name not in seen:
            raise ConfigurationError(f"{source}: missing section {name!r}")

    nv = len(data["vertices"])
    for row in data["triangles"]:
        if not all(0 <= v < nv for v in row[:3]):
            raise ConfigurationError(f"{source}: vertex index out of range", line=row[4])
    boundary = {}
    for a, b, tag, rl in data["boundary"]:
        if not (0 <= a < nv and 0 <= b < nv):
            raise ConfigurationError(f"{source}: vertex index out of range", line=rl)
        boundary[(min(a, b), max(a, b))] = tag
    tris = [r[:3] for r in data["triangles"]]
    regions = [r[3] for r in data["triangles"]]
    try:
        return Mesh2D(np.array(data["vertices"]), np.array(tris, dtype=np.int64), regions,
                      boundary or None)
    except EddyMsfemError as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc


def read_mesh(path):
    with open(path, encoding="utf-8") as fh:
        return parse_mesh(fh.read(), source=str(path))


def format_mesh(mesh: Mesh2D):
    out = [f"vertices {mesh.n_vertices}"]
    out += [f"{x!r} {y!r}" for x, y in mesh.points.tolist()]
    out.append(f"triangles {mesh.n_triangles}")
    out += [f"{a} {b} {c} {tag}" for (a, b, c), tag in zip(mesh.triangles.tolist(), mesh.regions)]
    items = sorted(mesh.boundary.items())
    out.append(f"boundary {len(items)}")
    out += [f"{a} {b} {tag}" for (a, b), tag in items]
    return "\n".join(out) + "\n"


def write_mesh(path, mesh: Mesh2D):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_mesh(mesh))
