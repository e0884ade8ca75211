"""Variance-based continuum model: two dispersed collagen fibril families
reinforcing the Mooney-Rivlin matrix.

Each family is characterized by a mean direction a0 and a rotationally
symmetric von Mises orientation density rho(Theta) about it.  The energy
uses the dispersion-averaged fourth pseudo-invariant I4* = H : Cbar and its
variance sigma^2 = Cbar : <A x A> : Cbar - (I4*)^2, where A = a x a and
<.> averages over the unit sphere.

The azimuthal integral of the sphere averages is analytic for a
rotationally symmetric density, so H and the fourth-order average Q are
assembled in closed form from the polar moments m2 = <cos^2 Theta> and
m4 = <cos^4 Theta>.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .materials import MatrixParams, mr_energy_stress_from_c

__all__ = ["FibrilFamily", "VarianceEval", "kappa_from_vonmises",
           "vonmises_b_from_kappa", "theta_moments", "structure_tensors",
           "family_tensors", "variance_eval", "variance_energy_stress",
           "variance_material_fn", "default_families"]


@dataclass(frozen=True)
class FibrilFamily:
    """One dispersed fibril family: stiffness k1m (MPa), rigidity k2m,
    unit mean direction a0, and dispersion given either as the coefficient
    kappa in (0, 1/3] or the von Mises concentration b >= 0."""

    k1m: float = 0.2
    k2m: float = 510.0
    a0: tuple = (1.0, 0.0, 0.0)
    kappa: float = None
    b: float = None

    def __post_init__(self):
        if self.k1m < 0:
            raise ValueError("k1m must be non-negative")
        if self.k2m <= 0:
            raise ValueError("k2m must be positive")
        a0 = np.asarray(self.a0, dtype=float)
        if abs(np.linalg.norm(a0) - 1.0) > 1e-8:
            raise ValueError("a0 must be a unit vector")
        if (self.kappa is None) == (self.b is None):
            raise ValueError("specify exactly one of kappa or b")
        if self.kappa is not None and not 0.0 < self.kappa <= 1.0 / 3.0:
            raise ValueError("kappa must lie in (0, 1/3]")
        if self.b is not None and self.b < 0.0:
            raise ValueError("b must be non-negative")

    @property
    def direction(self):
        return np.asarray(self.a0, dtype=float)

    def concentration(self):
        """The von Mises concentration, inverting kappa if needed."""
        if self.b is not None:
            return self.b
        return vonmises_b_from_kappa(self.kappa)


@dataclass(frozen=True)
class VarianceEval:
    """Per-family evaluation at one deformation state."""

    i4star: float
    sigma2: float
    kstar: float
    psi_aniso: float
    h: np.ndarray
    q: np.ndarray


def _vonmises_norm(b):
    """Normalization so that the sphere average of the density is one:
    (1/2) int_0^pi rho sin(Theta) dTheta = 1."""
    val, _ = quad(lambda t: np.exp(b * np.cos(2.0 * t)) * np.sin(t),
                  0.0, np.pi, epsabs=1e-12, epsrel=1e-12)
    return 2.0 / val


def kappa_from_vonmises(b):
    """Dispersion coefficient kappa = (1/4) int rho(Theta) sin^3 Theta
    dTheta for the normalized von Mises density rho ~ exp(b cos 2 Theta).

    b = 0 (uniform) gives 1/3; kappa decreases monotonically to 0 as the
    distribution concentrates about the mean direction.
    """
    if b < 0:
        raise ValueError("b must be non-negative")
    c = _vonmises_norm(b)
    val, _ = quad(lambda t: np.exp(b * np.cos(2.0 * t)) * np.sin(t)**3,
                  0.0, np.pi, epsabs=1e-12, epsrel=1e-12)
    return 0.25 * c * val


def vonmises_b_from_kappa(kappa):
    """Inverse of kappa_from_vonmises on (0, 1/3]."""
    if not 0.0 < kappa <= 1.0 / 3.0:
        raise ValueError("kappa must lie in (0, 1/3]")
    if kappa >= 1.0 / 3.0 - 1e-12:
        return 0.0
    hi = 1.0
    while kappa_from_vonmises(hi) > kappa:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("kappa too small to invert")
    return brentq(lambda b: kappa_from_vonmises(b) - kappa, 0.0, hi,
                  xtol=1e-12)


# fixed-order Gauss-Legendre nodes on [0, pi], shared by the vectorized
# moment evaluation (order 200 resolves b up to several hundred)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(200)
_GL_T = 0.5 * np.pi * (_GL_X + 1.0)
_GL_WT = 0.5 * np.pi * _GL_W


def theta_moments(b):
    """Polar moments (m2, m4) = (<cos^2>, <cos^4>) of the normalized von
    Mises density, vectorized over b."""
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ValueError("b must be non-negative")
    t = _GL_T
    w = _GL_WT * np.sin(t)
    # subtract the max exponent per b for overflow safety at large b
    ex = b[..., None] * np.cos(2.0 * t)
    ex = np.exp(ex - ex.max(axis=-1, keepdims=True))
    norm = ex @ w
    c2 = np.cos(t)**2
    m2 = (ex @ (w * c2)) / norm
    m4 = (ex @ (w * c2**2)) / norm
    return m2, m4


def _tensors_from_moments(a0, m2, m4):
    """Closed-form H and Q = <a x a x a x a> from the polar moments.

    Decomposing a = cos(Theta) p + sin(Theta) n with p = a0 and n uniform
    in the transverse plane, the azimuthal average leaves
    Q = m4 pppp + (m2-m4)/2 * sym(p p T) + (1-2m2+m4)/8 * sym(T T),
    with T = I - p x p.  m2/m4 may be arrays; the tensors then gain the
    corresponding leading axes.
    """
    p = np.asarray(a0, dtype=float)
    pp = np.multiply.outer(p, p)
    tt = np.eye(3) - pp
    m2 = np.asarray(m2, dtype=float)
    m4 = np.asarray(m4, dtype=float)
    s2 = m2 - m4
    s4 = 1.0 - 2.0 * m2 + m4

    def e2(q):
        return q[..., None, None]

    def e4(q):
        return q[..., None, None, None, None]

    h = e2(0.5 * (1.0 - m2)) * np.eye(3) + e2(0.5 * (3.0 * m2 - 1.0)) * pp

    mixed = (np.einsum("ij,kl->ijkl", pp, tt)
             + np.einsum("kl,ij->ijkl", pp, tt)
             + np.einsum("ik,jl->ijkl", pp, tt)
             + np.einsum("jl,ik->ijkl", pp, tt)
             + np.einsum("il,jk->ijkl", pp, tt)
             + np.einsum("jk,il->ijkl", pp, tt))
    q = (e4(m4) * np.einsum("ij,kl->ijkl", pp, pp)
         + e4(0.5 * s2) * mixed
         + e4(0.125 * s4) * (np.einsum("ij,kl->ijkl", tt, tt)
                             + np.einsum("ik,jl->ijkl", tt, tt)
                             + np.einsum("il,jk->ijkl", tt, tt)))
    return h, q


def family_tensors(a0, b):
    """H and Q for mean direction a0 at von Mises concentration(s) b.

    Scalar b gives (3, 3) and (3, 3, 3, 3); an array of per-element b
    values gives tensors with a leading batch axis.
    """
    scalar = np.isscalar(b) or np.ndim(b) == 0
    m2, m4 = theta_moments(np.atleast_1d(np.asarray(b, dtype=float)))
    h, q = _tensors_from_moments(a0, m2, m4)
    return (h[0], q[0]) if scalar else (h, q)


def structure_tensors(family: FibrilFamily):
    """Second-order H = kappa I + (1-3 kappa) a0 x a0 and the fourth-order
    sphere average Q = <a x a x a x a> of the family.

    H is symmetric with unit trace; Q has full minor and major symmetry and
    contracts back to H over any index pair.
    """
    return family_tensors(family.direction, family.concentration())


def _aniso_terms(cbar, h, q):
    """I4* and sigma^2 from broadcast-compatible H, Q stacks."""
    hb = np.broadcast_to(h, cbar.shape)
    qb = np.broadcast_to(q, cbar.shape + (3, 3))
    i4s = np.einsum("...ij,...ij->...", hb, cbar)
    cqc = np.einsum("...ij,...ijkl,...kl->...", cbar, qb, cbar)
    return i4s, cqc - i4s**2


def _aniso_energy(cbar, h, q, k1m, k2m):
    i4s, sig2 = _aniso_terms(cbar, h, q)
    e = i4s - 1.0
    kstar = k2m + 2.0 * k2m**2 * e**2
    return (k1m / (2.0 * k2m) * np.exp(k2m * e**2) * (1.0 + kstar * sig2),
            i4s, sig2, kstar)


def variance_eval(cbar, family: FibrilFamily) -> VarianceEval:
    """Diagnostic evaluation of one family at one isochoric state."""
    cbar = np.asarray(cbar, dtype=float)
    h, q = structure_tensors(family)
    psi, i4s, sig2, kstar = _aniso_energy(cbar, h, q, family.k1m, family.k2m)
    return VarianceEval(i4star=float(i4s), sigma2=float(sig2),
                        kstar=float(kstar), psi_aniso=float(psi), h=h, q=q)


_FD_DIRS = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]


def _precompute_families(families, k1m_scale=None, b_fields=None):
    """Per-family (H, Q, k1m, k2m) tuples, with optional per-element
    stiffness scaling and per-element dispersion fields.

    Batched H/Q gain an extra singleton axis so they broadcast over the
    Gauss-point axis of a (n_e, n_gp, 3, 3) tensor batch.
    """
    pre = []
    for m, fam in enumerate(families):
        b = fam.concentration() if b_fields is None else np.asarray(b_fields[m])
        h, q = family_tensors(fam.direction, b)
        if h.ndim == 3:
            h, q = h[:, None], q[:, None]
        k1m = fam.k1m if k1m_scale is None else fam.k1m * np.asarray(k1m_scale)
        pre.append((h, q, k1m, fam.k2m))
    return pre


def _energy_stress(c, j, pre, matrix, matrix_scale=None, fd_step=1e-6):
    c = np.asarray(c, dtype=float)
    j = np.asarray(j, dtype=float)
    if np.any(j <= 0.0):
        raise ValueError("inverted element: J <= 0")
    mu1, mu2 = matrix.mu1, matrix.mu2
    if matrix_scale is not None:
        ms = np.asarray(matrix_scale)
        mu1, mu2 = mu1 * ms, mu2 * ms
    energy, s = mr_energy_stress_from_c(c, j, mu1, mu2, matrix.k_bulk)

    def psi_a(cm):
        jm23 = np.linalg.det(cm)**(-1.0 / 3.0)
        cbar = jm23[..., None, None] * cm
        tot = 0.0
        for h, q, k1m, k2m in pre:
            tot = tot + _aniso_energy(cbar, h, q, k1m, k2m)[0]
        return tot

    energy = energy + psi_a(c)

    # S = 2 dPsi/dC; the unsymmetrized gradient of these contractions of a
    # symmetric C is itself symmetric, so S_ij comes from the directional
    # derivative along e_i e_j + e_j e_i (halved on the diagonal)
    for i, k in _FD_DIRS:
        d = np.zeros((3, 3))
        d[i, k] += fd_step
        d[k, i] += fd_step
        g = (psi_a(c + d) - psi_a(c - d)) / (2.0 * fd_step)
        if i == k:
            s[..., i, i] += g
        else:
            s[..., i, k] += g
            s[..., k, i] += g
    return energy, s


def variance_energy_stress(c, j, families, matrix: MatrixParams = None,
                           k1m_scale=None, fd_step=1e-6):
    """Total energy and second Piola-Kirchhoff stress of the variance model.

    c is the right Cauchy-Green tensor, batched (..., 3, 3); j = sqrt(det c).
    The volumetric and isotropic Mooney-Rivlin parts are analytic; the
    anisotropic part is differentiated by central finite differences on the
    six independent components of C (the constant energy offset at Cbar = I
    therefore contributes no stress).  k1m_scale optionally scales each
    family's stiffness with a batch-broadcastable array (damage fields).
    """
    pre = _precompute_families(families, k1m_scale=k1m_scale)
    return _energy_stress(c, j, pre, matrix or MatrixParams(), fd_step=fd_step)


def variance_material_fn(families, matrix: MatrixParams = None,
                         k1m_scale=None, matrix_scale=None, b_fields=None):
    """Callable material(c, j) -> (energy, S) for the assembled system.

    Structure tensors are precomputed once per family.  k1m_scale and
    matrix_scale are optional per-element damage scalings (shape (n_e, 1));
    b_fields optionally gives each family a per-element dispersion array.
    """
    matrix = matrix or MatrixParams()
    pre = _precompute_families(families, k1m_scale=k1m_scale,
                               b_fields=b_fields)

    def fn(c, j):
        return _energy_stress(c, j, pre, matrix, matrix_scale=matrix_scale)
    return fn


def default_families(b_nt=1.0, b_si=1.0, k1m=0.2, k2m=510.0):
    """The two in-plane families along the NT (x) and SI (y) axes."""
    return [FibrilFamily(k1m=k1m, k2m=k2m, a0=(1.0, 0.0, 0.0), b=b_nt),
            FibrilFamily(k1m=k1m, k2m=k2m, a0=(0.0, 1.0, 0.0), b=b_si)]
