"""Built-in verification suite.

Fast self-contained checks of the numerical kernels: finite-difference
consistency of the 1D laws and element tangents, patch test and frame
invariance of the hexahedron, mesh counts, follower-pressure resultants,
and the dispersed-fibril closed forms against brute-force quadrature.
Each check returns a CheckResult; `run_all` collects the whole suite.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .constraints import LimbusMode
from .elements import (hex_fd_tangent, hex_internal_forces, hex_precompute,
                       pressure_nodal_forces, truss_eval)
from .geometry import MeshSpec, generate_mesh, reference_geometry
from .materials import (CollagenParams, CrosslinkParams, MatrixParams,
                        collagen_law, crosslink_law, crosslink_peak_stretch,
                        matrix_energy_stress, mr_energy_stress_from_c)
from .variance import (FibrilFamily, _aniso_energy, family_tensors,
                       kappa_from_vonmises)

__all__ = ["CheckResult", "run_all", "check_constitutive_fd",
           "check_crosslink_peak", "check_truss_tangent_fd",
           "check_hex_patch_test", "check_hex_tangent_fd",
           "check_hex_rotation_invariance", "check_mesh_counts",
           "check_pressure_resultant", "check_variance_model"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _central(fn, x, h):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def check_constitutive_fd(n=1000, seed=0, tol=1e-6) -> CheckResult:
    """P = dpsi/dlambda and stiffness = dP/dlambda by central differences
    for both 1D laws over random stretches in [0.8, 1.2]."""
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.8, 1.2, size=n)
    h = 1e-6
    worst = 0.0
    for law, args in ((collagen_law, (1.8, 4000.0)),
                      (crosslink_law, (0.01, 6.0))):
        psi, p, stiff = law(lam, *args)
        p_fd = _central(lambda x: law(x, *args)[0], lam, h)
        s_fd = _central(lambda x: law(x, *args)[1], lam, h)
        ep = np.max(np.abs(p - p_fd) / np.maximum(np.abs(p_fd), 1e-12))
        es = np.max(np.abs(stiff - s_fd) / np.maximum(np.abs(s_fd), 1e-10))
        worst = max(worst, ep, es)
    return CheckResult("constitutive laws vs central differences",
                       worst < tol, f"max relative error {worst:.3e}")


def check_crosslink_peak(tol=1e-6) -> CheckResult:
    """The closed-form crosslink peak stretch is the zero of the exact
    stiffness, and the stress there is a local maximum."""
    p = CrosslinkParams()
    lam_star = crosslink_peak_stretch(p)
    root = brentq(lambda x: crosslink_law(x, p.eps, p.a)[2], 1.01, 1.3, xtol=1e-14)
    d = 1e-4
    p_star = crosslink_law(lam_star, p.eps, p.a)[1]
    bracket = max(crosslink_law(lam_star - d, p.eps, p.a)[1],
                  crosslink_law(lam_star + d, p.eps, p.a)[1])
    ok = abs(root - lam_star) < tol and p_star > bracket
    return CheckResult("crosslink stress peak consistency", bool(ok),
                       f"lam* = {lam_star:.7f}, |root - lam*| = "
                       f"{abs(root - lam_star):.2e}")


def check_truss_tangent_fd(n=200, seed=1, tol=1e-6) -> CheckResult:
    """Assembled 6x6 truss tangent vs central differences of the nodal
    forces for random reference/current configurations; K_ab = -K_aa."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    blocks_exact = True
    for i in range(n):
        law = CollagenParams() if i % 2 == 0 else CrosslinkParams()
        ref = rng.uniform(-1.0, 1.0, size=(2, 3))
        while np.linalg.norm(ref[1] - ref[0]) < 0.3:
            ref = rng.uniform(-1.0, 1.0, size=(2, 3))
        cur = ref + rng.uniform(-0.05, 0.05, size=(2, 3))
        area = rng.uniform(0.5, 2.0)
        ev = truss_eval(ref, cur, law, area)
        k = np.block([[ev.k_aa, ev.k_ab], [ev.k_ba, ev.k_bb]])
        blocks_exact &= np.array_equal(ev.k_ab, -ev.k_aa)
        h = 1e-7 * np.linalg.norm(ref[1] - ref[0])
        k_fd = np.empty((6, 6))
        for dof in range(6):
            dx = np.zeros((2, 3))
            dx[dof // 3, dof % 3] = h
            ep = truss_eval(ref, cur + dx, law, area)
            em = truss_eval(ref, cur - dx, law, area)
            k_fd[:, dof] = np.concatenate(
                (ep.t_a - em.t_a, ep.t_b - em.t_b)) / (2.0 * h)
        scale = max(np.linalg.norm(k_fd), 1e-12)
        worst = max(worst, np.linalg.norm(k - k_fd) / scale)
    ok = worst < tol and blocks_exact
    return CheckResult("truss tangent vs finite differences", bool(ok),
                       f"max relative error {worst:.3e}, "
                       f"K_ab = -K_aa exact: {blocks_exact}")


def _patch_mesh(rng):
    """A 2x2x2-element unit-cube patch with jittered interior nodes."""
    g = np.linspace(0.0, 1.0, 3)
    nodes = np.array([[x, y, z] for z in g for y in g for x in g])
    interior = [i for i, p in enumerate(nodes)
                if np.all((p > 1e-9) & (p < 1.0 - 1e-9))]
    nodes[interior] += rng.uniform(-0.08, 0.08, size=(len(interior), 3))
    hexes = []
    for k in range(2):
        for j in range(2):
            for i in range(2):
                n0 = k * 9 + j * 3 + i
                hexes.append([n0, n0 + 1, n0 + 4, n0 + 3,
                              n0 + 9, n0 + 10, n0 + 13, n0 + 12])
    return nodes, np.array(hexes), interior


def check_hex_patch_test(tol=1e-8) -> CheckResult:
    """Affine motion of a distorted element patch: interior nodal residuals
    vanish and J is homogeneous."""
    rng = np.random.default_rng(2)
    nodes, hexes, interior = _patch_mesh(rng)
    f = np.eye(3) + rng.uniform(-0.05, 0.05, size=(3, 3))
    cur = nodes @ f.T
    pre = hex_precompute(nodes[hexes])
    mat = MatrixParams()

    def material(c, j):
        return mr_energy_stress_from_c(c, j, mat.mu1, mat.mu2, mat.k_bulk)

    forces, j_g, _ = hex_internal_forces(cur[hexes], pre, material)
    resid = np.zeros((len(nodes), 3))
    np.add.at(resid, hexes.ravel(), forces.reshape(-1, 3))
    r_int = np.max(np.abs(resid[interior]))
    j_spread = np.max(np.abs(j_g - np.linalg.det(f)))
    ok = r_int < tol and j_spread < tol
    return CheckResult("hexahedron patch test", bool(ok),
                       f"interior residual {r_int:.3e}, "
                       f"J spread {j_spread:.3e}")


def check_hex_tangent_fd(tol=1e-5) -> CheckResult:
    """Element tangent (vectorized differencing) vs an independent plain
    central-difference loop at a different step size."""
    rng = np.random.default_rng(3)
    ref = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float)
    ref += rng.uniform(-0.1, 0.1, size=(8, 3))
    cur = ref + rng.uniform(-0.05, 0.05, size=(8, 3))
    pre = hex_precompute(ref)
    mat = MatrixParams()

    def material(c, j):
        return mr_energy_stress_from_c(c, j, mat.mu1, mat.mu2, mat.k_bulk)

    k = hex_fd_tangent(cur, pre, material)[0]
    h = 1e-5
    k_ref = np.empty((24, 24))
    for dof in range(24):
        dx = np.zeros((8, 3))
        dx[dof // 3, dof % 3] = h
        fp, _, _ = hex_internal_forces((cur + dx)[None], pre, material)
        fm, _, _ = hex_internal_forces((cur - dx)[None], pre, material)
        k_ref[:, dof] = (fp - fm).ravel() / (2.0 * h)
    err = np.linalg.norm(k - k_ref) / max(np.linalg.norm(k_ref), 1e-12)
    return CheckResult("hexahedron tangent vs independent differences",
                       bool(err < tol), f"relative error {err:.3e}")


def check_hex_rotation_invariance(tol=1e-10) -> CheckResult:
    """Strain energy is invariant under superposed rigid rotations."""
    from scipy.spatial.transform import Rotation

    rng = np.random.default_rng(4)
    ref = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float)
    cur = ref + rng.uniform(-0.05, 0.05, size=(8, 3))
    pre = hex_precompute(ref)
    mat = MatrixParams()

    def material(c, j):
        return mr_energy_stress_from_c(c, j, mat.mu1, mat.mu2, mat.k_bulk)

    _, _, e0 = hex_internal_forces(cur[None], pre, material)
    worst = 0.0
    for _ in range(10):
        q = Rotation.random(random_state=rng).as_matrix()
        _, _, e = hex_internal_forces((cur @ q.T)[None], pre, material)
        worst = max(worst, float(np.max(np.abs(e - e0)))
                    / max(float(np.max(np.abs(e0))), 1e-12))
    return CheckResult("hexahedron rotation invariance", bool(worst < tol),
                       f"max relative energy drift {worst:.3e}")


def check_mesh_counts() -> CheckResult:
    """The reference discretisation has 2500 nodes / 1728 hexes and an even
    layer count is rejected."""
    mesh = generate_mesh(reference_geometry(), MeshSpec(24, 3))
    counts_ok = mesh.n_nodes == 2500 and mesh.n_hex == 1728
    try:
        MeshSpec(24, 4)
        rejected = False
    except ValueError:
        rejected = True
    ok = counts_ok and rejected
    return CheckResult("mesh counts and odd-layer invariant", bool(ok),
                       f"{mesh.n_nodes} nodes / {mesh.n_hex} hexes, "
                       f"even n_l rejected: {rejected}")


def check_pressure_resultant(tol=1e-6) -> CheckResult:
    """Follower-pressure nodal forces summed over the posterior surface
    equal the resultant of a dense triangulation of the bilinear facets."""
    mesh = generate_mesh(reference_geometry(), MeshSpec(6, 3))
    facets = mesh.nodes[mesh.posterior_facets]
    iop = 15.0 * 133.322e-6
    resultant = pressure_nodal_forces(facets, iop).sum(axis=(0, 1))

    m = 24
    s = np.linspace(-1.0, 1.0, m + 1)
    si, ti = np.meshgrid(s, s, indexing="ij")
    oracle = np.zeros(3)
    for fc in facets:
        # bilinear interpolation of the facet on an (m+1)^2 grid
        n = 0.25 * np.stack([(1 - si) * (1 - ti), (1 + si) * (1 - ti),
                             (1 + si) * (1 + ti), (1 - si) * (1 + ti)])
        x = np.einsum("aij,ak->ijk", n, fc)
        for a in range(m):
            for b in range(m):
                p00, p10 = x[a, b], x[a + 1, b]
                p01, p11 = x[a, b + 1], x[a + 1, b + 1]
                oracle += 0.5 * np.cross(p10 - p00, p01 - p00)
                oracle += 0.5 * np.cross(p11 - p10, p01 - p10)
    oracle *= iop
    err = np.linalg.norm(resultant - oracle) / np.linalg.norm(oracle)
    return CheckResult("follower pressure resultant vs triangulated oracle",
                       bool(err < tol), f"relative error {err:.3e}")


def _brute_tensors(a0, b, n_theta=400, n_phi=400):
    """Dense spherical quadrature of <a x a> and <a x a x a x a> for the
    von Mises density around a0."""
    t, wt = np.polynomial.legendre.leggauss(n_theta)
    theta = 0.5 * np.pi * (t + 1.0)
    wt = 0.5 * np.pi * wt
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    a0 = np.asarray(a0, dtype=float)
    a0 = a0 / np.linalg.norm(a0)
    e1 = np.array([0.0, 0.0, 1.0]) if abs(a0[2]) < 0.9 else np.array(
        [1.0, 0.0, 0.0])
    e1 = e1 - (e1 @ a0) * a0
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a0, e1)
    dirs = (np.cos(theta)[:, None, None] * a0
            + np.sin(theta)[:, None, None]
            * (np.cos(phi)[None, :, None] * e1
               + np.sin(phi)[None, :, None] * e2))
    rho = np.exp(b * (np.cos(2.0 * theta) - 1.0))
    w = (rho * np.sin(theta) * wt)[:, None]
    norm = w.sum() * len(phi)
    w2 = np.broadcast_to(w / norm, dirs.shape[:2])
    h = np.einsum("tp,tpi,tpj->ij", w2, dirs, dirs)
    q = np.einsum("tp,tpi,tpj,tpk,tpl->ijkl", w2, dirs, dirs, dirs, dirs)
    return h, q


def check_variance_model(tol=1e-6) -> CheckResult:
    """kappa(b=0) = 1/3, trace H = 1, sigma^2 = 0 at identity and in the
    aligned limit, and the closed-form energy matches brute-force spherical
    quadrature on random isochoric states."""
    rng = np.random.default_rng(5)
    msgs = []
    ok = abs(kappa_from_vonmises(0.0) - 1.0 / 3.0) < 1e-8
    msgs.append(f"|kappa(0) - 1/3| = "
                f"{abs(kappa_from_vonmises(0.0) - 1/3):.2e}")

    fam = FibrilFamily(k1m=0.2, k2m=510.0, a0=(1.0, 0.0, 0.0), b=3.0)
    for b in (0.0, 0.7, 3.0, 12.0):
        h, _ = family_tensors((0.0, 1.0, 0.0), b)
        ok &= abs(np.trace(h) - 1.0) < 1e-12

    def sigma2(cbar, h, q):
        i4 = np.einsum("ij,ij->", h, cbar)
        return np.einsum("ij,ijkl,kl->", cbar, q, cbar) - i4**2

    h3, q3 = family_tensors(fam.a0, 3.0)
    ok &= abs(sigma2(np.eye(3), h3, q3)) < 1e-12
    ha, qa = family_tensors(fam.a0, 5e3)  # effectively aligned
    c_rand = np.eye(3) + 0.1 * rng.standard_normal((3, 3))
    c_rand = 0.5 * (c_rand + c_rand.T)
    ok &= abs(sigma2(c_rand, ha, qa)) < 1e-4 * np.linalg.norm(c_rand)**2

    worst = 0.0
    for b in (0.4, 2.0, 8.0):
        hb, qb = _brute_tensors(fam.a0, b)
        hc, qc = family_tensors(fam.a0, b)
        for _ in range(10):
            g = np.eye(3) + 0.08 * rng.standard_normal((3, 3))
            c = g.T @ g
            c = c / np.linalg.det(c)**(1.0 / 3.0)
            e_closed = _aniso_energy(c, hc, qc, fam.k1m, fam.k2m)[0]
            e_brute = _aniso_energy(c, hb, qb, fam.k1m, fam.k2m)[0]
            worst = max(worst, abs(float(e_closed - e_brute))
                        / max(abs(float(e_brute)), 1e-12))
    ok &= worst < tol
    msgs.append(f"max energy error vs brute force {worst:.3e}")
    return CheckResult("dispersed-fibril closed forms", bool(ok),
                       "; ".join(msgs))


def check_matrix_frame_invariance(tol=1e-12) -> CheckResult:
    """Matrix energy invariant under F -> QF; stress symmetric."""
    from scipy.spatial.transform import Rotation

    rng = np.random.default_rng(6)
    mat = MatrixParams()
    worst_e = 0.0
    worst_s = 0.0
    for _ in range(20):
        f = np.eye(3) + 0.1 * rng.standard_normal((3, 3))
        if np.linalg.det(f) <= 0:
            continue
        e0, s = matrix_energy_stress(f, mat)
        worst_s = max(worst_s, float(np.max(np.abs(s - s.T))))
        q = Rotation.random(random_state=rng).as_matrix()
        e1, _ = matrix_energy_stress(q @ f, mat)
        worst_e = max(worst_e, abs(float(e1 - e0)) / max(abs(float(e0)),
                                                         1e-14))
    ok = worst_e < tol and worst_s < tol
    return CheckResult("matrix frame invariance and stress symmetry",
                       bool(ok), f"energy drift {worst_e:.3e}, "
                       f"stress asymmetry {worst_s:.3e}")


def check_limbus_collinearity(tol=1e-8) -> CheckResult:
    """Orthogonality-preserving limbus columns stay collinear in a solved
    state (small mesh, 15 mmHg)."""
    from .scenarios import LoadProgram, run_inflation

    res = run_inflation(spec=MeshSpec(4, 3), load=LoadProgram(0, 15, 5),
                        bc=LimbusMode.ORTHOGONALITY_PRESERVING)
    x = res.mesh.nodes + res.final_displacement().reshape(-1, 3)
    worst = 0.0
    for col in res.mesh.limbus_columns:
        pts = x[col]
        d = pts[-1] - pts[0]
        d /= np.linalg.norm(d)
        rel = pts - pts[0]
        worst = max(worst, float(np.max(np.linalg.norm(
            rel - np.outer(rel @ d, d), axis=1))))
    return CheckResult("limbus column collinearity after solve",
                       bool(worst < tol), f"max deviation {worst:.3e} mm")


def run_all(fast=False):
    """Run the verification suite; returns the list of CheckResults.

    With fast=True the solver-based collinearity check is skipped.
    """
    checks = [
        check_constitutive_fd,
        check_crosslink_peak,
        check_truss_tangent_fd,
        check_hex_patch_test,
        check_hex_tangent_fd,
        check_hex_rotation_invariance,
        check_matrix_frame_invariance,
        check_mesh_counts,
        check_pressure_resultant,
        check_variance_model,
    ]
    if not fast:
        checks.append(check_limbus_collinearity)
    return [c() for c in checks]
