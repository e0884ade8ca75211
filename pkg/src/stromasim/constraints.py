"""Linear displacement constraints: u_full = C q.

Master degrees of freedom are a subset of nodal displacements plus, for the
orthogonality-preserving limbus condition, two tilt parameters per limbus
node column.  C has at most one nonzero per (row, master) pair here, so the
reduced lumped mass diag(C^T M C) is exact.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .geometry import Mesh

__all__ = ["LimbusMode", "Constraints", "apply_limbus_bc", "fix_dofs"]


class LimbusMode(Enum):
    ORTHOGONALITY_PRESERVING = "orthogonality_preserving"
    FIXED_ALL = "fixed_all"
    PINNED_MIDSURFACE = "pinned_midsurface"


@dataclass
class Constraints:
    c: sp.csr_matrix          # (n_dof_full, n_master)
    n_dof_full: int
    n_master: int
    fixed_dofs: np.ndarray    # fully prescribed (zero) dofs

    def full_disp(self, q):
        return self.c @ q

    def reduce_vec(self, r_full):
        return self.c.T @ r_full

    def reduce_mat(self, k_full):
        return (self.c.T @ k_full @ self.c).tocsc()

    def reduce_lumped_mass(self, m_full):
        csq = self.c.multiply(self.c)
        return np.asarray(csq.T @ m_full).ravel()


def _build_selection(n_dof, free_mask, extra_rows=None, extra_cols=None,
                     extra_vals=None, n_extra_masters=0):
    free = np.where(free_mask)[0]
    rows = list(free)
    cols = list(range(free.size))
    vals = [1.0] * free.size
    if extra_rows is not None:
        rows += list(extra_rows)
        cols += [free.size + c for c in extra_cols]
        vals += list(extra_vals)
    c = sp.coo_matrix((vals, (rows, cols)),
                      shape=(n_dof, free.size + n_extra_masters)).tocsr()
    fixed = np.where(~free_mask)[0]
    return Constraints(c=c, n_dof_full=n_dof, n_master=c.shape[1],
                       fixed_dofs=fixed)


def fix_dofs(n_dof, fixed) -> Constraints:
    """Constraint set that zeroes the listed global dofs (e.g. a 3-2-1
    rigid-body elimination) and keeps every other dof as a master."""
    free = np.ones(n_dof, dtype=bool)
    free[np.asarray(fixed, dtype=int)] = False
    return _build_selection(n_dof, free)


def apply_limbus_bc(mesh: Mesh, mode: LimbusMode) -> Constraints:
    """Build the limbus boundary-condition constraint set.

    FIXED_ALL clamps every limbus-column node.  PINNED_MIDSURFACE clamps
    only the two node rings adjacent to the mid-thickness interface.
    ORTHOGONALITY_PRESERVING lets each through-thickness column tilt
    rigidly about its (fixed) mid-thickness point: with straight vertical
    reference columns the nodal displacement is s * w, where s is the
    signed distance from the column midpoint and w an in-plane tilt vector
    (two masters per column).  Columns remain exactly collinear.
    """
    n_dof = 3 * mesh.n_nodes
    n_l = mesh.n_l
    free = np.ones(n_dof, dtype=bool)

    if mode is LimbusMode.FIXED_ALL:
        for col in mesh.limbus_columns:
            for nid in col:
                free[3 * nid:3 * nid + 3] = False
        return _build_selection(n_dof, free)

    if mode is LimbusMode.PINNED_MIDSURFACE:
        mid = ((n_l - 1) // 2, (n_l + 1) // 2)  # rings flanking the interface
        for col in mesh.limbus_columns:
            for t in mid:
                nid = col[t]
                free[3 * nid:3 * nid + 3] = False
        return _build_selection(n_dof, free)

    if mode is LimbusMode.ORTHOGONALITY_PRESERVING:
        rows, cols, vals = [], [], []
        n_extra = 0
        for ci, col in enumerate(mesh.limbus_columns):
            z = mesh.nodes[col, 2]
            z_mid = 0.5 * (z[0] + z[-1])
            s = z - z_mid
            m1, m2 = 2 * ci, 2 * ci + 1  # tilt masters (x and y)
            for nid, si in zip(col, s):
                free[3 * nid:3 * nid + 3] = False
                rows += [3 * nid, 3 * nid + 1]
                cols += [m1, m2]
                vals += [si, si]
            n_extra = 2 * (ci + 1)
        return _build_selection(n_dof, free, extra_rows=rows, extra_cols=cols,
                                extra_vals=vals, n_extra_masters=n_extra)

    raise ValueError(f"unknown limbus mode {mode!r}")
