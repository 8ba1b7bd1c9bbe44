"""Legacy ASCII VTK export of meshes with cell and point data."""

from __future__ import annotations

import numpy as np

from .mesh import REGION_TAGS, Mesh2D

VTK_TRIANGLE = 5


def _fmt(x):
    return repr(float(x))


def _data_block(kind, n, data):
    if not data:
        return []
    out = [f"{kind} {n}"]
    for name, arr in data.items():
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            raise ValueError(f"field {name!r} is complex; split into real and imaginary parts")
        if arr.shape[0] != n:
            raise ValueError(f"field {name!r} has {arr.shape[0]} entries, expected {n}")
        if arr.ndim == 1:
            kind_ = "int" if arr.dtype.kind in "iub" else "double"
            out.append(f"SCALARS {name} {kind_} 1")
            out.append("LOOKUP_TABLE default")
            out += [str(int(v)) if kind_ == "int" else _fmt(v) for v in arr]
        else:
            vec = np.zeros((n, 3))
            vec[:, :arr.shape[1]] = arr
            out.append(f"VECTORS {name} double")
            out += [" ".join(_fmt(v) for v in row) for row in vec]
    return out


def format_vtk(mesh: Mesh2D, cell_data=None, point_data=None, title="eddymsfem"):
    cell_data = dict(cell_data or {})
    cell_data.setdefault("region", np.array([REGION_TAGS.index(r) for r in mesh.regions]))
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0.0" for x, y in mesh.points]
    m = mesh.n_triangles
    lines.append(f"CELLS {m} {4 * m}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {m}")
    lines += [str(VTK_TRIANGLE)] * m
    lines += _data_block("CELL_DATA", m, cell_data)
    lines += _data_block("POINT_DATA", mesh.n_vertices, point_data or {})
    return "\n".join(lines) + "\n"


def write_vtk(path, mesh, cell_data=None, point_data=None, title="eddymsfem"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_vtk(mesh, cell_data, point_data, title))


def solution_fields(solution, indicators=None, error_sq=None):
    """Cell and point data dictionaries for a solved state.

    Edge-space fields are sampled at triangle centroids (zero off the
    conductor); Phi0 is sampled at the vertices.
    """
    mesh = solution.mesh
    cond = np.flatnonzero(mesh.conductor_mask)
    bary = np.full((len(cond), 3), 1.0 / 3.0)
    t2 = np.zeros((mesh.n_triangles, 2), dtype=complex)
    curl = np.zeros(mesh.n_triangles, dtype=complex)
    t2[cond], curl[cond] = solution.t2_space.evaluate(solution.t2, cond, bary)
    cell = {"T2_re": t2.real, "T2_im": t2.imag, "curlT2_re": curl.real, "curlT2_im": curl.imag}
    if indicators is not None:
        cell["eta_sq"] = indicators.eta_sq
    if error_sq is not None:
        cell["error_sq"] = np.asarray(error_sq)
    # vertex values: evaluate in the first triangle touching each vertex
    first = np.full(mesh.n_vertices, -1, dtype=np.int64)
    slot = np.zeros(mesh.n_vertices, dtype=np.int64)
    for k in (2, 1, 0):
        first[mesh.triangles[:, k]] = np.arange(mesh.n_triangles)
        slot[mesh.triangles[:, k]] = k
    vb = np.zeros((mesh.n_vertices, 3))
    vb[np.arange(mesh.n_vertices), slot] = 1.0
    phi0, _ = solution.phi0_space.evaluate(solution.phi0, first, vb)
    return cell, {"Phi0_re": phi0.real, "Phi0_im": phi0.imag}
