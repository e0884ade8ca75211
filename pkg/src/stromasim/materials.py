"""Constitutive laws: 1D collagen and crosslink trusses, the decoupled
Mooney-Rivlin matrix, and damage scaling.

All 1D laws return energy density psi, scalar first Piola-Kirchhoff stress
P = d psi / d lambda, and stiffness A = dP / d lambda, in MPa.  The laws
are evaluated as written for lambda < 1 (collagen carries compression,
crosslinks push back repulsively); a tension-only collagen switch is
available on the truss system for sensitivity studies.
"""

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "CollagenParams",
    "CrosslinkParams",
    "MatrixParams",
    "TrussResponse",
    "collagen_response",
    "collagen_law",
    "crosslink_response",
    "crosslink_law",
    "mr_energy_stress_from_c",
    "crosslink_peak_stretch",
    "matrix_energy_stress",
    "matrix_second_pk",
    "apply_damage",
    "table2_collagen",
    "table2_crosslink",
    "table2_matrix",
]


@dataclass(frozen=True)
class CollagenParams:
    """Exponentially stiffening fibril law: k1 in MPa, k2 dimensionless."""

    k1: float = 1.8
    k2: float = 4000.0

    def __post_init__(self):
        # zero prefactor is allowed so that full damage (d = 1) stays valid
        if self.k1 < 0:
            raise ValueError("k1 must be non-negative")
        if self.k2 < 0:
            raise ValueError("k2 must be non-negative")


@dataclass(frozen=True)
class CrosslinkParams:
    """Lennard-Jones crosslink law: well depth eps in MPa, exponent a."""

    eps: float = 0.01
    a: float = 6.0

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if self.a <= 0:
            raise ValueError("a must be positive")


@dataclass(frozen=True)
class MatrixParams:
    """Mooney-Rivlin shear moduli (MPa) and penalty bulk coefficient K."""

    mu1: float = 0.0015
    mu2: float = -0.0014
    k_bulk: float = 5.0

    def __post_init__(self):
        if self.mu1 + self.mu2 < 0:
            raise ValueError("total shear modulus mu1 + mu2 must be non-negative")
        if self.k_bulk <= 0:
            raise ValueError("k_bulk must be positive")


def table2_collagen():
    return CollagenParams()


def table2_crosslink():
    return CrosslinkParams()


def table2_matrix():
    return MatrixParams()


@dataclass(frozen=True)
class TrussResponse:
    psi: np.ndarray
    p: np.ndarray
    stiff: np.ndarray


def _check_stretch(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0.0):
        raise ValueError("stretch must be positive")
    return lam


def collagen_law(lam, k1, k2):
    """Vectorized collagen law: (psi, P, stiffness) at stretch lam.

    Accepts array-valued parameters (used for per-truss damage scaling).
    """
    e = lam - 1.0
    expo = np.exp(k2 * e**2)
    psi = np.where(k2 > 0.0,
                   k1 / (2.0 * np.where(k2 > 0.0, k2, 1.0)) * (expo - 1.0),
                   0.5 * k1 * e**2)
    stress = k1 * e * expo
    stiff = k1 * (1.0 + 2.0 * k2 * e**2) * expo
    return psi, stress, stiff


def collagen_response(lam, p: CollagenParams) -> TrussResponse:
    """Collagen fibril response at stretch lam.

    psi = k1/(2 k2) [exp(k2 (lam-1)^2) - 1]; for k2 -> 0 the stress reduces
    to the linear law k1 (lam - 1).
    """
    lam = _check_stretch(lam)
    psi, stress, stiff = collagen_law(lam, p.k1, p.k2)
    return TrussResponse(psi=psi, p=stress, stiff=stiff)


def crosslink_response(lam, p: CrosslinkParams) -> TrussResponse:
    """Proteoglycan crosslink (Lennard-Jones) response at stretch lam.

    psi = eps lam^-a (lam^-a - 2): minimum -eps at lam = 1, repulsive for
    lam < 1, peak stress at lam* = (2(a+1)/(a+2))^(1/a) with subsequent
    decay of the interaction force.
    """
    lam = _check_stretch(lam)
    psi, stress, stiff = crosslink_law(lam, p.eps, p.a)
    return TrussResponse(psi=psi, p=stress, stiff=stiff)


def crosslink_law(lam, eps, a):
    """Vectorized Lennard-Jones crosslink law: (psi, P, stiffness).

    The stiffness is the exact derivative dP/dlambda,
    2 a eps lam^(-2a-2) [(2a+1) - (a+1) lam^a], so that the energetic
    conjugacy psi -> P -> stiffness holds to machine precision.
    """
    la = lam**(-a)
    psi = eps * la * (la - 2.0)
    stress = 2.0 * a * eps * lam**(-(a + 1.0)) * (1.0 - la)
    stiff = 2.0 * eps * a * lam**(-2.0 * (a + 1.0)) * (
        (2.0 * a + 1.0) - (a + 1.0) * lam**a)
    return psi, stress, stiff


def crosslink_peak_stretch(p: CrosslinkParams) -> float:
    """Stretch at which the crosslink stress peaks (zero of dP/dlambda):
    ((2a+1)/(a+1))^(1/a)."""
    return ((2.0 * p.a + 1.0) / (p.a + 1.0))**(1.0 / p.a)


def _invariants(c):
    i1 = np.trace(c, axis1=-2, axis2=-1)
    c2 = c @ c
    i2 = 0.5 * (i1**2 - np.trace(c2, axis1=-2, axis2=-1))
    return i1, i2


def matrix_energy_stress(f, p: MatrixParams):
    """Energy density and second Piola-Kirchhoff stress of the matrix.

    Decoupled volumetric-deviatoric Mooney-Rivlin:
    Psi = K/4 (J^2 - 1 - 2 ln J) + mu1/2 (I1bar - 3) + mu2/2 (I2bar - 3),
    S = 2 dPsi/dC.  Accepts a single 3x3 deformation gradient or a batch
    (..., 3, 3).  Raises on J <= 0 (inverted state).
    """
    f = np.asarray(f, dtype=float)
    j = np.linalg.det(f)
    if np.any(j <= 0.0):
        raise ValueError("inverted element: det F <= 0")
    c = np.swapaxes(f, -1, -2) @ f
    energy, s = mr_energy_stress_from_c(c, j, p.mu1, p.mu2, p.k_bulk)
    return energy, s


def mr_energy_stress_from_c(c, j, mu1, mu2, k):
    """Mooney-Rivlin energy and S = 2 dPsi/dC from C and J = sqrt(det C).

    The moduli may be scalars or arrays broadcastable over the batch shape
    of c (pass per-element damaged parameters as shape (n_e, 1) when c is
    (n_e, n_gp, 3, 3)).
    """
    i1, i2 = _invariants(c)
    jm23 = j**(-2.0 / 3.0)
    jm43 = jm23**2
    i1b = jm23 * i1
    i2b = jm43 * i2

    energy = (0.25 * k * (j**2 - 1.0 - 2.0 * np.log(j))
              + 0.5 * mu1 * (i1b - 3.0) + 0.5 * mu2 * (i2b - 3.0))

    cinv = np.linalg.inv(c)
    eye = np.broadcast_to(np.eye(3), c.shape)

    def ex(q):
        return np.asarray(q)[..., None, None]

    s = (ex(mu1) * ex(jm23) * (eye - ex(i1) / 3.0 * cinv)
         + ex(mu2) * ex(jm43) * (ex(i1) * eye - c - 2.0 / 3.0 * ex(i2) * cinv)
         + 0.5 * ex(k) * ex(j**2 - 1.0) * cinv)
    return energy, s


def matrix_second_pk(c, p: MatrixParams):
    """S = 2 dPsi/dC directly from the right Cauchy-Green tensor."""
    detc = np.linalg.det(c)
    if np.any(detc <= 0.0):
        raise ValueError("inverted element: det C <= 0")
    return mr_energy_stress_from_c(c, np.sqrt(detc), p.mu1, p.mu2, p.k_bulk)


def apply_damage(params, d: float):
    """Scale the stiffness-like parameters of a law by (1 - d).

    Prefactors (k1, eps, mu1, mu2, and the variance-model fibril stiffness)
    scale linearly; exponents and the penalty bulk coefficient K are left
    untouched.  d must lie in [0, 1].
    """
    if not 0.0 <= d <= 1.0:
        raise ValueError("damage must lie in [0, 1]")
    s = 1.0 - d
    if isinstance(params, CollagenParams):
        return replace(params, k1=s * params.k1)
    if isinstance(params, CrosslinkParams):
        return replace(params, eps=s * params.eps)
    if isinstance(params, MatrixParams):
        return replace(params, mu1=s * params.mu1, mu2=s * params.mu2)
    # variance-model fibril family (duck-typed to avoid a circular import)
    if hasattr(params, "k1m"):
        return replace(params, k1m=s * params.k1m)
    raise TypeError(f"cannot apply damage to {type(params).__name__}")
