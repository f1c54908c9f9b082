"""Legacy ASCII VTK output for triangle-mesh fields.

Fields of any polynomial degree are written as point data at the mesh
vertices (the vertex restriction of the Lagrange coefficient vector), which
every VTK viewer can render without cell-type gymnastics.
"""

from __future__ import annotations

import numpy as np

from .discretization import DofMap
from .mesh import TriMesh

VTK_TRIANGLE = 5


def vertex_values(dofmap: DofMap, coeffs: np.ndarray) -> np.ndarray:
    """Restrict a Lagrange coefficient vector to the mesh vertices.

    Scalar fields return (nv,); vector fields return (nv, 2).
    """
    nv = dofmap.mesh.num_vertices
    coeffs = np.asarray(coeffs, dtype=float)
    if dofmap.kind == "vector":
        return np.column_stack([coeffs[:nv], coeffs[dofmap.nscalar : dofmap.nscalar + nv]])
    return coeffs[:nv]


def write_vtk(path, mesh: TriMesh, name: str, values: np.ndarray, title: str | None = None):
    """Write one vertex field as a legacy ASCII VTK 2.0 unstructured grid.

    ``values`` is (nv,) for a scalar field or (nv, 2) for a vector field
    (padded with a zero z-component).
    """
    values = np.asarray(values, dtype=float)
    nv = mesh.num_vertices
    nt = mesh.num_triangles
    if values.shape[0] != nv:
        raise ValueError(f"expected {nv} vertex values, got {values.shape[0]}")
    lines = [
        "# vtk DataFile Version 2.0",
        title or f"{name} field",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    lines += [f"{x:.10g} {y:.10g} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += [str(VTK_TRIANGLE)] * nt
    lines.append(f"POINT_DATA {nv}")
    if values.ndim == 2:
        lines.append(f"VECTORS {name} double")
        lines += [f"{vx:.10g} {vy:.10g} 0" for vx, vy in values]
    else:
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [f"{v:.10g}" for v in values]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def validate_vtk(path) -> dict:
    """Parse a legacy ASCII VTK file and verify its structure.

    Returns a summary dict; raises ValueError on any malformation.
    """
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "# vtk DataFile Version 2.0":
        raise ValueError("missing VTK 2.0 header")
    if len(lines) < 5 or lines[2] != "ASCII":
        raise ValueError("not an ASCII VTK file")
    if lines[3] != "DATASET UNSTRUCTURED_GRID":
        raise ValueError("not an unstructured grid")
    tok = lines[4].split()
    if tok[:1] != ["POINTS"] or tok[2] != "double":
        raise ValueError("malformed POINTS header")
    npts = int(tok[1])
    row = 5
    pts = np.array([[float(v) for v in lines[row + i].split()] for i in range(npts)])
    if pts.shape != (npts, 3):
        raise ValueError("wrong POINTS block shape")
    row += npts
    tok = lines[row].split()
    if tok[0] != "CELLS":
        raise ValueError("missing CELLS header")
    ncell, sz = int(tok[1]), int(tok[2])
    if sz != 4 * ncell:
        raise ValueError("triangle CELLS size list mismatch")
    row += 1
    conn = np.array([[int(v) for v in lines[row + i].split()] for i in range(ncell)])
    if conn.shape != (ncell, 4) or not np.all(conn[:, 0] == 3):
        raise ValueError("non-triangle connectivity")
    if conn[:, 1:].min() < 0 or conn[:, 1:].max() >= npts:
        raise ValueError("connectivity indexes out of range")
    row += ncell
    tok = lines[row].split()
    if tok[0] != "CELL_TYPES" or int(tok[1]) != ncell:
        raise ValueError("missing CELL_TYPES header")
    row += 1
    types = np.array([int(lines[row + i]) for i in range(ncell)])
    if not np.all(types == VTK_TRIANGLE):
        raise ValueError("non-triangle cell types")
    row += ncell
    tok = lines[row].split()
    if tok[0] != "POINT_DATA" or int(tok[1]) != npts:
        raise ValueError("missing POINT_DATA header")
    row += 1
    tok = lines[row].split()
    if tok[0] == "SCALARS":
        if lines[row + 1].split()[0] != "LOOKUP_TABLE":
            raise ValueError("SCALARS without LOOKUP_TABLE")
        data = np.array([float(lines[row + 2 + i]) for i in range(npts)])
        kind = "scalar"
    elif tok[0] == "VECTORS":
        data = np.array([[float(v) for v in lines[row + 1 + i].split()] for i in range(npts)])
        if data.shape != (npts, 3):
            raise ValueError("wrong VECTORS block shape")
        kind = "vector"
    else:
        raise ValueError(f"unsupported point-data kind {tok[0]}")
    if not np.all(np.isfinite(data)):
        raise ValueError("non-finite field values")
    return {"points": npts, "cells": ncell, "kind": kind, "name": tok[1], "data": data}
