"""Global assembly of the coupled truss/continuum cornea system.

A ``CorneaSystem`` owns the mesh, the (optional) trusswork, per-element and
per-truss material parameters (already damage-scaled), the posterior
pressure facets, and the boundary-condition constraints.  It evaluates the
global internal force array, the sparse tangent, and the follower external
load; the solvers operate on the reduced (master) space.
"""

import numpy as np
import scipy.sparse as sp

from .constraints import Constraints
from .elements import (hex_precompute, hex_internal_forces, hex_fd_tangent,
                       hex_lumped_mass, pressure_nodal_forces,
                       pressure_fd_tangent, truss_forces_batch,
                       truss_tangent_blocks)
from .geometry import Mesh
from .materials import (MatrixParams, collagen_law, crosslink_law,
                        mr_energy_stress_from_c)
from .unitcell import TrussKind, TrussSet

__all__ = ["CorneaSystem"]


class CorneaSystem:
    """Assembled nonlinear system T(u) - F(u; iop) = 0.

    Parameters are per-element/per-truss arrays so that damage fields can
    scale them locally.  ``material`` selects the continuum constitution:
    a MatrixParams (Mooney-Rivlin, default) or any callable
    material(c, j, elem_slice) -> (energy, S).
    """

    def __init__(self, mesh: Mesh, trussset: TrussSet = None,
                 matrix_params: MatrixParams = None,
                 constraints: Constraints = None,
                 collagen_k1=None, collagen_k2=None,
                 crosslink_eps=None, crosslink_a=None,
                 mu1=None, mu2=None, k_bulk=None,
                 material_fn=None,
                 collagen_in_compression=True):
        self.mesh = mesh
        self.trussset = trussset
        self.constraints = constraints
        self.collagen_in_compression = collagen_in_compression

        self.pre = hex_precompute(mesh.nodes[mesh.hexes])
        n_e = mesh.n_hex

        mp = matrix_params if matrix_params is not None else MatrixParams()
        self.mu1 = np.full((n_e, 1), mp.mu1) if mu1 is None else np.asarray(mu1).reshape(n_e, 1)
        self.mu2 = np.full((n_e, 1), mp.mu2) if mu2 is None else np.asarray(mu2).reshape(n_e, 1)
        self.k_bulk = np.full((n_e, 1), mp.k_bulk) if k_bulk is None else np.asarray(k_bulk).reshape(n_e, 1)
        self.material_fn = material_fn

        if trussset is not None:
            kind = trussset.kind
            self.i_coll = np.where(kind == int(TrussKind.COLLAGEN))[0]
            self.i_cross = np.where(kind != int(TrussKind.COLLAGEN))[0]
            n_t = trussset.n_trusses
            self.k1 = np.full(n_t, 1.8) if collagen_k1 is None else np.asarray(collagen_k1)
            self.k2 = np.full(n_t, 4000.0) if collagen_k2 is None else np.asarray(collagen_k2)
            self.eps = np.full(n_t, 0.01) if crosslink_eps is None else np.asarray(crosslink_eps)
            self.a_lj = np.full(n_t, 6.0) if crosslink_a is None else np.asarray(crosslink_a)

        # facet coordinates are gathered per evaluation; dof maps are fixed
        self._hex_dofs = (3 * mesh.hexes[:, :, None] + np.arange(3)).reshape(n_e, 24)
        self._facet_dofs = (3 * mesh.posterior_facets[:, :, None]
                            + np.arange(3)).reshape(-1, 12)
        if trussset is not None:
            pair = np.stack([trussset.node_a, trussset.node_b], axis=1)
            self._truss_dofs = (3 * pair[:, :, None] + np.arange(3)).reshape(-1, 6)

    # -- continuum material ------------------------------------------------

    def _material(self, c, j):
        if self.material_fn is not None:
            return self.material_fn(c, j)
        return mr_energy_stress_from_c(c, j, self.mu1, self.mu2, self.k_bulk)

    # -- truss constitutive dispatch ---------------------------------------

    def _truss_stress(self, lam):
        """(psi, P, stiffness) arrays over all trusses at stretches lam."""
        p = np.zeros_like(lam)
        stiff = np.zeros_like(lam)
        psi = np.zeros_like(lam)
        ic, ix = self.i_coll, self.i_cross
        if ic.size:
            psi_c, p_c, s_c = collagen_law(lam[ic], self.k1[ic], self.k2[ic])
            if not self.collagen_in_compression:
                slack = lam[ic] < 1.0
                p_c = np.where(slack, 0.0, p_c)
                s_c = np.where(slack, 0.0, s_c)
                psi_c = np.where(slack, 0.0, psi_c)
            psi[ic], p[ic], stiff[ic] = psi_c, p_c, s_c
        if ix.size:
            psi[ix], p[ix], stiff[ix] = crosslink_law(
                lam[ix], self.eps[ix], self.a_lj[ix])
        return psi, p, stiff

    # -- global arrays -----------------------------------------------------

    def current_coords(self, u_full):
        return self.mesh.nodes + u_full.reshape(-1, 3)

    def internal_forces(self, u_full, with_gauss_j=False):
        """Global internal force array T(u); optionally per-Gauss J."""
        x = self.current_coords(u_full)
        t = np.zeros(3 * self.mesh.n_nodes)

        forces, j, _ = hex_internal_forces(x[self.mesh.hexes], self.pre,
                                           self._material)
        np.add.at(t, self._hex_dofs.ravel(), forces.reshape(-1, 24).ravel())

        if self.trussset is not None:
            ts = self.trussset
            xa, xb = x[ts.node_a], x[ts.node_b]
            t_b, lam, l, n, p, stiff = truss_forces_batch(
                xa, xb, ts.ref_length, ts.ref_area,
                lambda la: self._truss_stress(la))
            block = np.concatenate([-t_b, t_b], axis=1)  # (n_t, 6)
            np.add.at(t, self._truss_dofs.ravel(), block.ravel())
        return (t, j) if with_gauss_j else t

    def internal_tangent(self, u_full):
        """Sparse global tangent of T(u) (hex part by central FD)."""
        x = self.current_coords(u_full)
        k_hex = hex_fd_tangent(x[self.mesh.hexes], self.pre, self._material)
        rows = np.repeat(self._hex_dofs, 24, axis=1).ravel()
        cols = np.tile(self._hex_dofs, (1, 24)).ravel()
        data = [k_hex.ravel()]
        rr = [rows]
        cc = [cols]

        if self.trussset is not None:
            ts = self.trussset
            xa, xb = x[ts.node_a], x[ts.node_b]
            _, lam, l, n, p, stiff = truss_forces_batch(
                xa, xb, ts.ref_length, ts.ref_area,
                lambda la: self._truss_stress(la))
            k_aa = truss_tangent_blocks(l, n, ts.ref_length, ts.ref_area, p, stiff)
            k_t = np.empty((ts.n_trusses, 6, 6))
            k_t[:, :3, :3] = k_aa
            k_t[:, 3:, 3:] = k_aa
            k_t[:, :3, 3:] = -k_aa
            k_t[:, 3:, :3] = -k_aa
            rr.append(np.repeat(self._truss_dofs, 6, axis=1).ravel())
            cc.append(np.tile(self._truss_dofs, (1, 6)).ravel())
            data.append(k_t.ravel())

        n_dof = 3 * self.mesh.n_nodes
        return sp.coo_matrix((np.concatenate(data),
                              (np.concatenate(rr), np.concatenate(cc))),
                             shape=(n_dof, n_dof)).tocsr()

    def external_forces(self, u_full, iop):
        """Follower pressure load recomputed from the deformed posterior
        facets; iop in MPa."""
        f = np.zeros(3 * self.mesh.n_nodes)
        if iop == 0.0:
            return f
        x = self.current_coords(u_full)
        forces = pressure_nodal_forces(x[self.mesh.posterior_facets], iop)
        np.add.at(f, self._facet_dofs.ravel(), forces.reshape(-1, 12).ravel())
        return f

    def external_tangent(self, u_full, iop):
        n_dof = 3 * self.mesh.n_nodes
        if iop == 0.0:
            return sp.csr_matrix((n_dof, n_dof))
        x = self.current_coords(u_full)
        k_f = pressure_fd_tangent(x[self.mesh.posterior_facets], iop)
        rows = np.repeat(self._facet_dofs, 12, axis=1).ravel()
        cols = np.tile(self._facet_dofs, (1, 12)).ravel()
        return sp.coo_matrix((k_f.ravel(), (rows, cols)),
                             shape=(n_dof, n_dof)).tocsr()

    def assemble(self, u_full, with_tangent=False):
        """Convenience assembly: internal forces and (optionally) the
        global internal tangent."""
        t = self.internal_forces(u_full)
        if not with_tangent:
            return t, None
        return t, self.internal_tangent(u_full)

    # -- fictitious mass for dynamic relaxation ----------------------------

    def fictitious_mass(self, u_full, dt, safety=4.0):
        """Per-dof fictitious masses covering the explicit stability (CFL)
        bound of every element.

        Hexes use the constrained (P-wave) modulus K + 4 mu / 3 as the
        average elastic modulus; trusses fold their current axial stiffness
        A(lambda) A / L, half to each node.  ``safety`` scales all masses.
        """
        mesh = self.mesh
        mu = (self.mu1 + self.mu2).ravel()
        e_mod = self.k_bulk.ravel() + 4.0 * mu / 3.0
        rho = e_mod * dt**2 / self.pre.h_char**2
        node_m = hex_lumped_mass(mesh.nodes[mesh.hexes], rho)  # (n_e, 8)
        m = np.zeros(mesh.n_nodes)
        np.add.at(m, mesh.hexes.ravel(), node_m.ravel())

        if self.trussset is not None:
            ts = self.trussset
            x = self.current_coords(u_full)
            l = np.linalg.norm(x[ts.node_b] - x[ts.node_a], axis=1)
            lam = l / ts.ref_length
            _, _, stiff = self._truss_stress(lam)
            k_ax = np.abs(stiff) * ts.ref_area / ts.ref_length
            m_t = 0.5 * k_ax * dt**2
            np.add.at(m, ts.node_a, m_t)
            np.add.at(m, ts.node_b, m_t)

        return safety * np.repeat(m, 3)
