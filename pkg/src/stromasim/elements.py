"""Finite elements: total-Lagrangian truss, trilinear hexahedron for the
matrix, lumped fictitious mass, and deformation-dependent pressure facets.

All evaluations exist in two flavours: a single-element API mirroring the
textbook expressions, and batched routines (leading n_e axis) used by the
global assembly.  Units are mm / MPa / N.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import _GAUSS8, _HEX_NAT, _shape_gradients
from .materials import MatrixParams, mr_energy_stress_from_c

__all__ = [
    "TrussElementEval",
    "HexElementEval",
    "truss_eval",
    "truss_forces_batch",
    "truss_tangent_blocks",
    "HexPrecomp",
    "hex_precompute",
    "hex_internal_forces",
    "hex_fd_tangent",
    "hex_eval",
    "hex_lumped_mass",
    "pressure_nodal_forces",
    "pressure_fd_tangent",
]


# ---------------------------------------------------------------------------
# truss element
# ---------------------------------------------------------------------------

@dataclass
class TrussElementEval:
    t_a: np.ndarray
    t_b: np.ndarray
    k_aa: np.ndarray
    k_ab: np.ndarray
    k_ba: np.ndarray
    k_bb: np.ndarray
    length: float
    n: np.ndarray
    alpha: float
    beta: float


def truss_eval(coords_ref, coords_cur, law, area) -> TrussElementEval:
    """Internal forces and tangent blocks of one large-deformation truss.

    T_b = P(lambda) A n with n the deformed unit direction; the tangent is
    K_aa = K_bb = (alpha - beta) n (x) n + beta I, K_ab = K_ba = -K_aa, with
    alpha = A(lambda) A / L and beta = P(lambda) A / l.  ``law`` is a
    CollagenParams or CrosslinkParams carrier (dispatch on stress law).
    """
    from .materials import (CollagenParams, CrosslinkParams,
                            collagen_response, crosslink_response)

    xa_ref, xb_ref = np.asarray(coords_ref, dtype=float)
    xa, xb = np.asarray(coords_cur, dtype=float)
    big_l = np.linalg.norm(xb_ref - xa_ref)
    if big_l <= 0.0:
        raise ValueError("reference truss length must be positive")
    l = np.linalg.norm(xb - xa)
    if l <= 0.0:
        raise ValueError("current truss nodes coincide: direction undefined")
    n = (xb - xa) / l
    lam = l / big_l

    if isinstance(law, CollagenParams):
        resp = collagen_response(lam, law)
    elif isinstance(law, CrosslinkParams):
        resp = crosslink_response(lam, law)
    else:
        raise TypeError(f"unsupported truss law {type(law).__name__}")

    t_b = float(resp.p) * area * n
    alpha = float(resp.stiff) * area / big_l
    beta = float(resp.p) * area / l
    k_aa = (alpha - beta) * np.outer(n, n) + beta * np.eye(3)
    return TrussElementEval(t_a=-t_b, t_b=t_b, k_aa=k_aa, k_ab=-k_aa,
                            k_ba=-k_aa, k_bb=k_aa, length=float(l), n=n,
                            alpha=float(alpha), beta=float(beta))


def truss_forces_batch(xa, xb, big_l, area, stress_fn):
    """Nodal forces of a batch of trusses.

    stress_fn(lam) -> (psi, P, stiffness) arrays.  Returns (t_b, lam, l, n,
    p, stiff); t_a = -t_b.
    """
    d = xb - xa
    l = np.linalg.norm(d, axis=1)
    if np.any(l <= 0.0):
        raise ValueError("current truss nodes coincide: direction undefined")
    n = d / l[:, None]
    lam = l / big_l
    _, p, stiff = stress_fn(lam)
    t_b = (p * area)[:, None] * n
    return t_b, lam, l, n, p, stiff


def truss_tangent_blocks(l, n, big_l, area, p, stiff):
    """K_aa blocks (n_t, 3, 3) for a batch of trusses."""
    alpha = stiff * area / big_l
    beta = p * area / l
    nn = np.einsum("ti,tj->tij", n, n)
    return (alpha - beta)[:, None, None] * nn + beta[:, None, None] * np.eye(3)


# ---------------------------------------------------------------------------
# hexahedral element
# ---------------------------------------------------------------------------

@dataclass
class HexPrecomp:
    """Reference-configuration quantities at the 2x2x2 Gauss points."""

    grad_n: np.ndarray   # (n_e, 8, 8, 3)  dN_a/dX at each Gauss point
    wdet: np.ndarray     # (n_e, 8)        quadrature weight x det J0
    volume: np.ndarray   # (n_e,)
    h_char: np.ndarray   # (n_e,) characteristic element size (min edge)


_EDGE_PAIRS = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4),
               (0, 4), (1, 5), (2, 6), (3, 7)]


def hex_precompute(ref_coords) -> HexPrecomp:
    """Precompute shape-function gradients and weights; ref_coords is
    (n_e, 8, 3) (a single (8, 3) element is promoted)."""
    xe = np.asarray(ref_coords, dtype=float)
    if xe.ndim == 2:
        xe = xe[None]
    g0 = _shape_gradients(_GAUSS8)  # (8, 8, 3) in natural coords
    jac = np.einsum("eai,gaj->egij", xe, g0)
    detj = np.linalg.det(jac)
    if np.any(detj <= 0.0):
        bad = int(np.argwhere(np.any(detj <= 0.0, axis=1))[0, 0])
        raise ValueError(f"non-positive reference Jacobian in element {bad}")
    inv = np.linalg.inv(jac)
    grad = np.einsum("gaj,egji->egai", g0, inv)
    edges = np.stack([np.linalg.norm(xe[:, b] - xe[:, a], axis=1)
                      for a, b in _EDGE_PAIRS], axis=1)
    return HexPrecomp(grad_n=grad, wdet=detj, volume=detj.sum(axis=1),
                      h_char=edges.min(axis=1))


def hex_internal_forces(cur_coords, pre: HexPrecomp, material):
    """Internal nodal forces of a batch of hexahedra.

    material(c, j) -> (energy density, second PK stress) with c of shape
    (n_e, 8, 3, 3).  Returns (forces (n_e, 8, 3), j (n_e, 8), energy
    (n_e,)).  Raises on an inverted Gauss point.
    """
    xe = np.asarray(cur_coords, dtype=float)
    if xe.ndim == 2:
        xe = xe[None]
    f = np.einsum("eai,egaj->egij", xe, pre.grad_n)
    j = np.linalg.det(f)
    if np.any(j <= 0.0):
        bad = int(np.argwhere(np.any(j <= 0.0, axis=1))[0, 0])
        raise ValueError(f"inverted element {bad}: det F <= 0 at a Gauss point")
    c = np.einsum("egki,egkj->egij", f, f)
    psi, s = material(c, j)
    p = np.einsum("egik,egkj->egij", f, s)  # first PK stress
    forces = np.einsum("egij,egaj,eg->eai", p, pre.grad_n, pre.wdet)
    energy = np.einsum("eg,eg->e", psi, pre.wdet)
    return forces, j, energy


def hex_fd_tangent(cur_coords, pre: HexPrecomp, material, rel_step=1e-7):
    """Element tangents (n_e, 24, 24) by central differencing of the
    internal-force vector; step is rel_step x characteristic size."""
    xe = np.asarray(cur_coords, dtype=float)
    if xe.ndim == 2:
        xe = xe[None]
    n_e = xe.shape[0]
    h = rel_step * pre.h_char  # (n_e,)
    k = np.empty((n_e, 24, 24))
    for a in range(8):
        for i in range(3):
            dof = 3 * a + i
            xp = xe.copy()
            xp[:, a, i] += h
            fp, _, _ = hex_internal_forces(xp, pre, material)
            xm = xe.copy()
            xm[:, a, i] -= h
            fm, _, _ = hex_internal_forces(xm, pre, material)
            k[:, :, dof] = ((fp - fm) / (2.0 * h)[:, None, None]).reshape(n_e, 24)
    return k


@dataclass
class HexElementEval:
    forces: np.ndarray    # (24,)
    tangent: np.ndarray   # (24, 24)
    j_gauss: np.ndarray   # (8,)
    energy: float


def hex_eval(ref_coords, cur_coords, p: MatrixParams, tangent=True) -> HexElementEval:
    """Evaluate one Mooney-Rivlin hexahedron (forces, FD tangent, per-Gauss
    J, energy)."""
    pre = hex_precompute(ref_coords)

    def material(c, j):
        return mr_energy_stress_from_c(c, j, p.mu1, p.mu2, p.k_bulk)

    forces, j, energy = hex_internal_forces(cur_coords, pre, material)
    k = hex_fd_tangent(cur_coords, pre, material)[0] if tangent else None
    return HexElementEval(forces=forces[0].reshape(24), tangent=k,
                          j_gauss=j[0], energy=float(energy[0]))


def hex_lumped_mass(ref_coords, rho):
    """Row-lumped nodal masses of a hexahedron: rho int N_a dV.

    ref_coords may be (8, 3) or (n_e, 8, 3); rho scalar or (n_e,).  Total
    per element equals rho x reference volume (partition of unity).
    """
    xe = np.asarray(ref_coords, dtype=float)
    single = xe.ndim == 2
    pre = hex_precompute(xe)
    # N_a at the Gauss points
    n_at_g = np.empty((8, 8))
    for a, (xa, ya, za) in enumerate(_HEX_NAT):
        n_at_g[:, a] = ((1 + xa * _GAUSS8[:, 0]) * (1 + ya * _GAUSS8[:, 1])
                        * (1 + za * _GAUSS8[:, 2]) / 8.0)
    masses = np.asarray(rho)[..., None] * np.einsum("ga,eg->ea", n_at_g, pre.wdet)
    return masses[0] if single else masses


# ---------------------------------------------------------------------------
# follower pressure on bilinear facets
# ---------------------------------------------------------------------------

_GQ = 1.0 / np.sqrt(3.0)
_QUAD_GP = np.array([[-_GQ, -_GQ], [_GQ, -_GQ], [_GQ, _GQ], [-_GQ, _GQ]])
_QUAD_NAT = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)

_QN = np.empty((4, 4))      # N_a at the 2x2 Gauss points
_QD = np.empty((4, 4, 2))   # dN_a/d(xi, eta)
for _g, (_xi, _eta) in enumerate(_QUAD_GP):
    for _a, (_xa, _ya) in enumerate(_QUAD_NAT):
        _QN[_g, _a] = (1 + _xa * _xi) * (1 + _ya * _eta) / 4.0
        _QD[_g, _a, 0] = _xa * (1 + _ya * _eta) / 4.0
        _QD[_g, _a, 1] = (1 + _xa * _xi) * _ya / 4.0


def pressure_nodal_forces(facet_cur, iop):
    """Equivalent nodal forces of a uniform pressure on bilinear facets.

    facet_cur: (4, 3) or (n_f, 4, 3) deformed facet coordinates, ordered so
    the bilinear normal x_,xi x x_,eta points in the push direction
    (anterior-ward for posterior facets).  Returns forces of the same
    leading shape, (..., 4, 3).
    """
    if iop < 0.0:
        raise ValueError("pressure must be non-negative")
    x = np.asarray(facet_cur, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    t = np.einsum("fai,gad->fgid", x, _QD)  # (n_f, 4gp, 3, 2)
    normal = np.cross(t[..., 0], t[..., 1])  # area-weighted, (n_f, 4, 3)
    if np.any(np.linalg.norm(normal, axis=-1) <= 0.0):
        raise ValueError("degenerate pressure facet (zero area)")
    forces = iop * np.einsum("ga,fgi->fai", _QN, normal)
    return forces[0] if single else forces


def pressure_fd_tangent(facet_cur, iop, step=1e-7):
    """d(facet forces)/d(facet coordinates), (n_f, 12, 12), by central FD."""
    x = np.asarray(facet_cur, dtype=float)
    if x.ndim == 2:
        x = x[None]
    n_f = x.shape[0]
    k = np.empty((n_f, 12, 12))
    for a in range(4):
        for i in range(3):
            dof = 3 * a + i
            xp = x.copy()
            xp[:, a, i] += step
            xm = x.copy()
            xm[:, a, i] -= step
            df = (pressure_nodal_forces(xp, iop)
                  - pressure_nodal_forces(xm, iop)) / (2.0 * step)
            k[:, :, dof] = df.reshape(n_f, 12)
    return k
