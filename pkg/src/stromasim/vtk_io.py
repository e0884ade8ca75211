"""Legacy-VTK (ASCII) and CSV emission.

The writer targets the version 3.0 legacy unstructured-grid format, which
loads in standard viewers: hexahedra as cell type 12, truss elements as
line cells (type 3), nodal vectors as POINT_DATA and per-cell scalars
(damage, truss kind) as CELL_DATA.
"""

import csv

import numpy as np

from .geometry import Mesh
from .unitcell import TrussSet

__all__ = ["write_unstructured_grid", "write_mesh_vtk", "write_curve_csv",
           "write_profile_csv"]


def write_unstructured_grid(path, points, cells, cell_types,
                            point_vectors=None, cell_scalars=None,
                            title="stromasim output"):
    """Write a legacy ASCII unstructured grid.

    cells: list of connectivity index lists; cell_types: matching VTK type
    ids.  point_vectors / cell_scalars are dicts name -> array.
    """
    points = np.asarray(points, dtype=float)
    if len(cells) != len(cell_types):
        raise ValueError("cells and cell_types must have equal length")
    with open(path, "w", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(points)} double\n")
        for p in points:
            fh.write(f"{p[0]:.10g} {p[1]:.10g} {p[2]:.10g}\n")
        size = sum(len(c) + 1 for c in cells)
        fh.write(f"CELLS {len(cells)} {size}\n")
        for c in cells:
            fh.write(" ".join(str(int(i)) for i in (len(c), *c)) + "\n")
        fh.write(f"CELL_TYPES {len(cells)}\n")
        for t in cell_types:
            fh.write(f"{int(t)}\n")
        if point_vectors:
            fh.write(f"POINT_DATA {len(points)}\n")
            for name, vec in point_vectors.items():
                vec = np.asarray(vec, dtype=float).reshape(-1, 3)
                if len(vec) != len(points):
                    raise ValueError(
                        f"point vector '{name}' length mismatch")
                fh.write(f"VECTORS {name} double\n")
                for v in vec:
                    fh.write(f"{v[0]:.10g} {v[1]:.10g} {v[2]:.10g}\n")
        if cell_scalars:
            fh.write(f"CELL_DATA {len(cells)}\n")
            for name, val in cell_scalars.items():
                val = np.asarray(val, dtype=float).ravel()
                if len(val) != len(cells):
                    raise ValueError(
                        f"cell scalar '{name}' length mismatch")
                fh.write(f"SCALARS {name} double 1\n")
                fh.write("LOOKUP_TABLE default\n")
                for v in val:
                    fh.write(f"{v:.10g}\n")


def write_mesh_vtk(path, mesh: Mesh, trussset: TrussSet = None,
                   displacement=None, hex_damage=None, truss_damage=None,
                   title="stromasim cornea"):
    """Write the corneal solid (and optionally its trusswork) to one file.

    Hexahedra come first, then truss line cells.  Cell scalars: `damage`
    (zero-filled where not given) and `truss_kind` (-1 on hexes).
    """
    cells = [list(h) for h in mesh.hexes]
    types = [12] * mesh.n_hex
    kind = [-1.0] * mesh.n_hex
    damage = list(np.zeros(mesh.n_hex) if hex_damage is None
                  else np.asarray(hex_damage, dtype=float))
    if trussset is not None:
        for i, (a, b) in enumerate(zip(trussset.node_a, trussset.node_b)):
            cells.append([int(a), int(b)])
            types.append(3)
            kind.append(float(trussset.kind[i]))
        if truss_damage is None:
            damage += [0.0] * trussset.n_trusses
        else:
            damage += list(np.asarray(truss_damage, dtype=float))
    vectors = None
    if displacement is not None:
        vectors = {"displacement": displacement}
    write_unstructured_grid(path, mesh.nodes, cells, types,
                            point_vectors=vectors,
                            cell_scalars={"damage": damage,
                                          "truss_kind": kind},
                            title=title)


def write_curve_csv(path, rows, header=("step", "iop_mmHg", "apex_disp_mm",
                                        "residual")):
    """RFC-4180 CSV with one row per load step."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v
                        for v in row])


def write_profile_csv(path, profile):
    """Meridian profile CSV: coordinate, surfaces, thickness."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["coord_mm", "anterior_x", "anterior_y", "anterior_z",
                    "posterior_x", "posterior_y", "posterior_z",
                    "thickness_mm"])
        for i in range(len(profile.coord)):
            row = ([profile.coord[i]] + list(profile.anterior[i])
                   + list(profile.posterior[i]) + [profile.thickness[i]])
            w.writerow([f"{v:.12g}" for v in row])
