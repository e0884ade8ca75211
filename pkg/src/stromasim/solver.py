"""Nonlinear equilibrium solvers: Newton-Raphson and critically damped
dynamic relaxation on the reduced (master) degree-of-freedom space.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import spsolve

__all__ = ["SolveSettings", "SolveResult", "NonConvergenceError",
           "newton_solve", "dynamic_relaxation_solve", "estimate_omega0",
           "fictitious_density"]


@dataclass
class SolveSettings:
    tol: float = 1e-6                 # residual tol, relative to ||F||
    abs_floor: float = 1e-10          # absolute residual floor, N
    max_newton: int = 50
    max_relax: int = 2_000_000
    dt: float = 1e-3                  # pseudo-time step
    velocity_tol: float = 1e-8        # relaxation kinetic stop criterion
    mass_safety: float = 4.0
    follower_tangent: bool = True     # include d(load)/du in Newton

    def __post_init__(self):
        if self.tol <= 0 or self.dt <= 0:
            raise ValueError("tolerances and dt must be positive")


@dataclass
class SolveResult:
    q: np.ndarray
    residuals: list = field(default_factory=list)
    omega0: list = field(default_factory=list)
    iterations: int = 0
    method: str = ""


class NonConvergenceError(RuntimeError):
    pass


def _residual_target(settings, f_norm):
    return settings.tol * max(f_norm, 1.0, settings.abs_floor)


def _residual_at(system, con, q, iop):
    """Reduced residual and load norm at q; inf norm on invalid states
    (inverted elements) so a line search can back away from them."""
    u = con.full_disp(q)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            t = system.internal_forces(u)
            f = system.external_forces(u, iop)
    except (ValueError, FloatingPointError):
        return None, np.inf, 0.0
    r = con.reduce_vec(t - f)
    if not np.all(np.isfinite(r)):
        return None, np.inf, 0.0
    return r, np.linalg.norm(r), np.linalg.norm(con.reduce_vec(f))


def newton_solve(system, iop, q0, settings: SolveSettings = None) -> SolveResult:
    """Newton-Raphson solve of T(u) - F(u; iop) = 0 at fixed load.

    Update q <- q - s K^-1 R on the reduced space, with a backtracking line
    search on s (full steps tolerate a mild residual increase; shortened
    steps must decrease it).  Raises NonConvergenceError after max_newton
    iterations, with a hint toward the relaxation solver when the tangent
    turns singular.
    """
    settings = settings or SolveSettings()
    con = system.constraints
    q = np.array(q0, dtype=float)
    res = SolveResult(q=q, method="newton")

    r, r_norm, f_norm = _residual_at(system, con, q, iop)
    if r is None:
        raise NonConvergenceError("invalid initial state (inverted elements)")

    for it in range(settings.max_newton + 1):
        res.residuals.append(r_norm)
        if r_norm <= _residual_target(settings, f_norm):
            res.q = q
            res.iterations = it
            return res
        if it == settings.max_newton:
            break
        u = con.full_disp(q)
        k = system.internal_tangent(u)
        if settings.follower_tangent and iop != 0.0:
            k = k - system.external_tangent(u, iop)
        k_red = con.reduce_mat(k)
        with np.errstate(all="raise"):
            try:
                dq = spsolve(k_red, r)
            except Exception as exc:
                raise NonConvergenceError(
                    "singular tangent in Newton solve; consider the dynamic "
                    "relaxation solver") from exc
        if not np.all(np.isfinite(dq)):
            raise NonConvergenceError(
                "singular tangent in Newton solve; consider the dynamic "
                "relaxation solver")

        s = 1.0
        accepted = False
        for ls in range(30):
            r_new, rn_new, fn_new = _residual_at(system, con, q - s * dq, iop)
            limit = 2.0 * r_norm if ls == 0 else r_norm
            if r_new is not None and rn_new < limit:
                q = q - s * dq
                r, r_norm, f_norm = r_new, rn_new, fn_new
                accepted = True
                break
            s *= 0.5
        if not accepted:
            raise NonConvergenceError(
                "Newton line search failed to reduce the residual; consider "
                "the dynamic relaxation solver")

    raise NonConvergenceError(
        f"Newton did not converge in {settings.max_newton} iterations "
        f"(last residual {res.residuals[-1]:.3e})")


def estimate_omega0(du, t_k, t_km1, m_fict, previous=0.0):
    """Rayleigh stiffness-mass estimate of the lowest eigenfrequency.

    omega0^2 = max(du . (T_k - T_k-1) / du . M du, 0); returns the previous
    estimate when du vanishes.
    """
    denom = du @ (m_fict * du)
    if denom == 0.0:
        return previous
    num = du @ (t_k - t_km1)
    return np.sqrt(max(num / denom, 0.0))


def fictitious_density(e_mod, h, dt):
    """Element density making the CFL-critical step equal dt:
    rho = E dt^2 / h^2."""
    return e_mod * dt**2 / h**2


def dynamic_relaxation_solve(system, iop, q0,
                             settings: SolveSettings = None) -> SolveResult:
    """Critically damped explicit pseudo-dynamic solve at fixed load.

    Central-difference integration with velocity damping alpha = 2 omega0,
    omega0 re-estimated each iteration from the Rayleigh ratio.  Stops when
    the residual and velocity criteria are both met; raises on divergence
    (residual growing 10x over 10^4 iterations past its best).
    """
    settings = settings or SolveSettings()
    con = system.constraints
    dt = settings.dt
    q = np.array(q0, dtype=float)
    u = con.full_disp(q)
    m = con.reduce_lumped_mass(
        system.fictitious_mass(u, dt, settings.mass_safety))
    if np.any(m <= 0.0):
        raise ValueError("non-positive fictitious mass")

    v = np.zeros_like(q)
    omega0 = 0.0
    t_prev = None
    best = np.inf
    best_iter = 0
    res = SolveResult(q=q, method="relaxation")

    for it in range(settings.max_relax):
        u = con.full_disp(q)
        t = con.reduce_vec(system.internal_forces(u))
        f = con.reduce_vec(system.external_forces(u, iop))
        r = t - f
        r_norm = np.linalg.norm(r)
        f_norm = np.linalg.norm(f)
        if it % 50 == 0 or r_norm <= _residual_target(settings, f_norm):
            res.residuals.append(r_norm)
        if (r_norm <= _residual_target(settings, f_norm)
                and np.linalg.norm(v) * dt <= settings.velocity_tol):
            res.q = q
            res.iterations = it
            return res

        if r_norm < best:
            best = r_norm
            best_iter = it
        elif r_norm > 10.0 * best and it - best_iter > 10_000:
            raise NonConvergenceError(
                "dynamic relaxation diverging; retry with a smaller dt")

        if t_prev is not None:
            du = dt * v
            omega0 = estimate_omega0(du, t, t_prev, m, previous=omega0)
        res.omega0.append(omega0)
        t_prev = t

        c = omega0 * dt  # alpha dt / 2 with alpha = 2 omega0
        accel = -r / m
        v = ((1.0 - c) * v + dt * accel) / (1.0 + c)
        q = q + dt * v

    raise NonConvergenceError(
        f"dynamic relaxation did not converge in {settings.max_relax} "
        f"iterations (last residual {np.linalg.norm(r):.3e})")
