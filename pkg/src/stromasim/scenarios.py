"""The three study scenarios: corneal inflation, single-unit-cell
equibiaxial tension, and keratoconus degeneration, plus result extraction
(apex displacement history, meridian profiles, thickness).

Pressure loads are given in mmHg at the interface; everything internal is
mm-MPa-N (1 mmHg = 133.322e-6 MPa).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import MMHG_TO_MPA
from .constraints import Constraints, LimbusMode, apply_limbus_bc, fix_dofs
from .geometry import (CorneaGeometry, Mesh, MeshSpec, generate_mesh,
                       shape_factors, reference_geometry)
from .materials import (CollagenParams, CrosslinkParams, MatrixParams)
from .solver import (SolveSettings, newton_solve, dynamic_relaxation_solve,
                     NonConvergenceError)
from .system import CorneaSystem
from .unitcell import build_trusswork
from .variance import default_families, variance_material_fn

__all__ = ["LoadProgram", "DamageField", "DispersionProfile",
           "ScenarioResult", "Profile", "UnitCellResult", "build_system",
           "run_inflation", "run_keratoconus", "run_unit_cell_equibiaxial",
           "extract_profile", "single_cell_mesh", "calibrated_families"]


def calibrated_families():
    """Fibril families whose stiffness is calibrated so the dispersed-fibril
    continuum reproduces the coupled model's healthy inflation response
    (anterior apex displacement matched within 0.5% at 15 mmHg on a 16x3
    mesh, orthogonality-preserving limbus support, uniform dispersion
    b = 5)."""
    return default_families(b_nt=5.0, b_si=5.0, k1m=0.68)


@dataclass(frozen=True)
class LoadProgram:
    """Pressure ramp in mmHg, resolved into `steps` equal increments."""

    iop_start: float = 0.0
    iop_end: float = 30.0
    steps: int = 30

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.iop_end < self.iop_start:
            raise ValueError("iop must be monotone over the ramp")

    def iop_values(self):
        """The steps + 1 pressure values in mmHg, including the start."""
        return np.linspace(self.iop_start, self.iop_end, self.steps + 1)


@dataclass(frozen=True)
class DamageField:
    """Radially quadratic scalar damage disk on the corneal plane.

    d(r) = peak * max(0, 1 - (r/radius)^2) around `center` (mm), evaluated
    at element centroids / truss midpoints projected to the (x, y) plane.
    The default center sits 1 mm toward the inferior side.
    """

    center: tuple = (0.0, -1.0)
    radius: float = 1.5
    peak: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("damage radius must be positive")
        if not 0.0 <= self.peak <= 1.0:
            raise ValueError("damage peak must lie in [0, 1]")

    def value(self, xy):
        """Damage at in-plane points xy of shape (..., 2)."""
        xy = np.asarray(xy, dtype=float)
        r2 = ((xy[..., 0] - self.center[0])**2
              + (xy[..., 1] - self.center[1])**2)
        return self.peak * np.maximum(0.0, 1.0 - r2 / self.radius**2)


@dataclass(frozen=True)
class DispersionProfile:
    """Radial interpolation of the von Mises concentration b between the
    corneal centre and the limbus (the in-plane radius r_max)."""

    b_center: float = 5.0
    b_limbus: float = 5.0

    def value(self, r, r_max):
        frac = np.clip(np.asarray(r, dtype=float) / r_max, 0.0, 1.0)
        return self.b_center + (self.b_limbus - self.b_center) * frac


@dataclass
class Profile:
    """Deformed meridian polylines: anterior/posterior coordinates ordered
    monotonically along the meridian, plus pointwise column thickness."""

    meridian: str
    coord: np.ndarray       # in-plane coordinate along the meridian, mm
    anterior: np.ndarray    # (n, 3) deformed anterior coordinates
    posterior: np.ndarray   # (n, 3) deformed posterior coordinates
    thickness: np.ndarray   # (n,) anterior-posterior distance, mm


@dataclass
class ScenarioResult:
    """History of an inflation-type run."""

    iop_mmhg: np.ndarray
    apex_disp: np.ndarray          # z displacement of the anterior apex, mm
    displacements: list            # per-step full nodal displacement arrays
    residuals: list                # per-step final residual norms
    mean_f: float
    mesh: Mesh
    apex_node: int
    gauss_j: np.ndarray = None     # (n_e, 8) det F at the final load
    method: str = "newton"

    def final_displacement(self):
        return self.displacements[-1]


@dataclass
class UnitCellResult:
    """Equibiaxial force-stretch curve of a single unit cell."""

    force: np.ndarray              # applied facet force, N
    stretch: np.ndarray            # mean in-plane stretch
    l_ip: float
    l_op: float
    shape_factor: float


def _hex_centroids_xy(mesh: Mesh):
    return mesh.nodes[mesh.hexes].mean(axis=1)[:, :2]


def _truss_midpoints_xy(mesh: Mesh, ts):
    return 0.5 * (mesh.nodes[ts.node_a, :2] + mesh.nodes[ts.node_b, :2])


def build_system(mesh: Mesh, model="coupled", damage: DamageField = None,
                 collagen: CollagenParams = None,
                 crosslink: CrosslinkParams = None,
                 matrix: MatrixParams = None,
                 bc=LimbusMode.ORTHOGONALITY_PRESERVING,
                 dispersion: DispersionProfile = None,
                 families=None, collagen_in_compression=True,
                 r_max=5.3) -> CorneaSystem:
    """Assemble a cornea system for the chosen constitutive model.

    `coupled` superposes the collagen/crosslink trusswork on the
    Mooney-Rivlin matrix; `variance` uses the dispersed-fibril continuum
    with a radial dispersion profile.  A DamageField scales the stiffness
    prefactors of both models by (1 - d) locally.
    """
    if model not in ("coupled", "variance"):
        raise ValueError(f"unknown model {model!r}")
    collagen = collagen or CollagenParams()
    crosslink = crosslink or CrosslinkParams()
    matrix = matrix or MatrixParams()
    con = apply_limbus_bc(mesh, bc) if isinstance(bc, LimbusMode) else bc

    d_elem = None
    if damage is not None:
        d_elem = damage.value(_hex_centroids_xy(mesh))

    if model == "coupled":
        ts = build_trusswork(mesh, spec=mesh)
        n_t = ts.n_trusses
        k1 = np.full(n_t, collagen.k1)
        eps = np.full(n_t, crosslink.eps)
        mu1 = None
        mu2 = None
        if damage is not None:
            d_t = damage.value(_truss_midpoints_xy(mesh, ts))
            k1 = k1 * (1.0 - d_t)
            eps = eps * (1.0 - d_t)
            mu1 = matrix.mu1 * (1.0 - d_elem)
            mu2 = matrix.mu2 * (1.0 - d_elem)
        return CorneaSystem(
            mesh, trussset=ts, matrix_params=matrix, constraints=con,
            collagen_k1=k1, collagen_k2=np.full(n_t, collagen.k2),
            crosslink_eps=eps, crosslink_a=np.full(n_t, crosslink.a),
            mu1=mu1, mu2=mu2,
            collagen_in_compression=collagen_in_compression)

    dispersion = dispersion or DispersionProfile()
    cen = _hex_centroids_xy(mesh)
    b_elem = dispersion.value(np.linalg.norm(cen, axis=1), r_max)
    fams = families if families is not None else default_families()
    scale = None if damage is None else (1.0 - d_elem)[:, None]
    fn = variance_material_fn(fams, matrix, k1m_scale=scale,
                              matrix_scale=scale,
                              b_fields=[b_elem] * len(fams))
    return CorneaSystem(mesh, trussset=None, matrix_params=matrix,
                        constraints=con, material_fn=fn)


def _anterior_apex_node(mesh: Mesh):
    n1 = mesh.n_m + 1
    start = mesh.n_l * n1 * n1
    xy = mesh.nodes[start:start + n1 * n1, :2]
    return start + int(np.argmin(np.einsum("ni,ni->n", xy, xy)))


def _run_ramp(system: CorneaSystem, mesh: Mesh, load: LoadProgram,
              solver="newton", settings: SolveSettings = None,
              on_step=None):
    settings = settings or SolveSettings()
    solve = {"newton": newton_solve,
             "relaxation": dynamic_relaxation_solve}.get(solver)
    if solve is None:
        raise ValueError(f"unknown solver {solver!r}")
    con = system.constraints
    apex = _anterior_apex_node(mesh)
    q = np.zeros(con.n_master)

    iops = load.iop_values()
    disps = []
    apex_disp = []
    residuals = []
    for step, iop_mmhg in enumerate(iops):
        try:
            res = solve(system, iop_mmhg * MMHG_TO_MPA, q, settings)
        except NonConvergenceError as exc:
            raise NonConvergenceError(
                f"step {step} (IOP {iop_mmhg:g} mmHg): {exc}") from exc
        q = res.q
        u = con.full_disp(q)
        disps.append(u)
        apex_disp.append(u[3 * apex + 2])
        residuals.append(res.residuals[-1])
        if on_step is not None:
            on_step(step, float(iop_mmhg), float(u[3 * apex + 2]),
                    float(res.residuals[-1]), u)

    u_final = disps[-1]
    _, gauss_j = system.internal_forces(u_final, with_gauss_j=True)
    rep = shape_factors(mesh)
    return ScenarioResult(iop_mmhg=iops, apex_disp=np.array(apex_disp),
                          displacements=disps, residuals=residuals,
                          mean_f=rep.mean_f, mesh=mesh, apex_node=apex,
                          gauss_j=gauss_j, method=solver)


def run_inflation(geom: CorneaGeometry = None, spec: MeshSpec = None,
                  load: LoadProgram = None,
                  bc=LimbusMode.ORTHOGONALITY_PRESERVING,
                  solver="newton", settings: SolveSettings = None,
                  mesh: Mesh = None, model="coupled", on_step=None,
                  **material_kwargs) -> ScenarioResult:
    """Inflate the healthy cornea over the load program.

    Either a generated `mesh` or (geom, spec) must be given.  Material
    keyword arguments are forwarded to `build_system`.
    """
    if mesh is None:
        geom = geom or reference_geometry()
        if spec is None:
            raise ValueError("either mesh or spec must be given")
        mesh = generate_mesh(geom, spec)
    system = build_system(mesh, model=model, bc=bc, **material_kwargs)
    return _run_ramp(system, mesh, load or LoadProgram(),
                     solver=solver, settings=settings, on_step=on_step)


def run_keratoconus(geom: CorneaGeometry = None, spec: MeshSpec = None,
                    damage: DamageField = None, load: LoadProgram = None,
                    bc=LimbusMode.ORTHOGONALITY_PRESERVING,
                    model="coupled", solver="newton",
                    settings: SolveSettings = None, mesh: Mesh = None,
                    on_step=None, **material_kwargs) -> ScenarioResult:
    """Inflate a cornea carrying a localized damage field.

    `model` selects the coupled multiscale constitution ("coupled") or the
    dispersed-fibril continuum ("variance").  With damage None or zero the
    run reduces to `run_inflation`.
    """
    if mesh is None:
        geom = geom or reference_geometry()
        if spec is None:
            raise ValueError("either mesh or spec must be given")
        mesh = generate_mesh(geom, spec)
    damage = damage if damage is not None else DamageField()
    system = build_system(mesh, model=model, damage=damage, bc=bc,
                          **material_kwargs)
    return _run_ramp(system, mesh, load or LoadProgram(),
                     solver=solver, settings=settings, on_step=on_step)


def extract_profile(mesh: Mesh, u_full, meridian="SI") -> Profile:
    """Deformed anterior/posterior polylines along the SI (x ~ 0) or NT
    (y ~ 0) meridian plane, with pointwise column thickness."""
    if meridian not in ("SI", "NT"):
        raise ValueError("meridian must be 'SI' or 'NT'")
    n1 = mesh.n_m + 1
    c = mesh.n_m // 2
    x = mesh.nodes + np.asarray(u_full, dtype=float).reshape(-1, 3)
    if meridian == "SI":
        ids = [(c, j) for j in range(n1)]
        axis = 1
    else:
        ids = [(i, c) for i in range(n1)]
        axis = 0
    post = np.array([x[mesh.node_index(i, j, 0)] for i, j in ids])
    ant = np.array([x[mesh.node_index(i, j, mesh.n_l)] for i, j in ids])
    order = np.argsort(ant[:, axis])
    ant, post = ant[order], post[order]
    thickness = np.linalg.norm(ant - post, axis=1)
    return Profile(meridian=meridian, coord=ant[:, axis], anterior=ant,
                   posterior=post, thickness=thickness)


# -- single-unit-cell equibiaxial test ------------------------------------

def single_cell_mesh(l_ip, l_op) -> Mesh:
    """One-box mesh (a single odd-layer unit cell), centred in-plane."""
    if l_ip <= 0 or l_op <= 0:
        raise ValueError("cell dimensions must be positive")
    nodes = np.empty((8, 3))
    for t in range(2):
        for j in range(2):
            for i in range(2):
                nodes[(t * 2 + j) * 2 + i] = ((i - 0.5) * l_ip,
                                              (j - 0.5) * l_ip, t * l_op)

    def nid(i, j, t):
        return (t * 2 + j) * 2 + i

    hexes = np.array([[nid(0, 0, 0), nid(1, 0, 0), nid(1, 1, 0), nid(0, 1, 0),
                       nid(0, 0, 1), nid(1, 0, 1), nid(1, 1, 1), nid(0, 1, 1)]],
                     dtype=np.int64)
    facets = np.array([[nid(0, 0, 0), nid(1, 0, 0), nid(1, 1, 0),
                        nid(0, 1, 0)]], dtype=np.int64)
    columns = [np.array([nid(i, j, 0), nid(i, j, 1)], dtype=np.int64)
               for j in range(2) for i in range(2)]
    return Mesh(nodes=nodes, hexes=hexes, hex_layer=np.array([1]),
                posterior_facets=facets, limbus_columns=columns,
                n_m=1, n_l=1, hex_grid=np.array([[0, 0, 0]]))


class _DeadLoadSystem:
    """Adapter applying a fixed nodal force pattern scaled by the load
    parameter, in place of the follower pressure."""

    def __init__(self, system: CorneaSystem, f_pattern):
        self._system = system
        self._f = np.asarray(f_pattern, dtype=float)
        self.constraints = system.constraints
        self.mesh = system.mesh

    def internal_forces(self, u_full, **kw):
        return self._system.internal_forces(u_full, **kw)

    def internal_tangent(self, u_full):
        return self._system.internal_tangent(u_full)

    def external_forces(self, u_full, factor):
        return factor * self._f

    def external_tangent(self, u_full, factor):
        n = self._f.size
        return sp.csr_matrix((n, n))

    def fictitious_mass(self, u_full, dt, safety=4.0):
        return self._system.fictitious_mass(u_full, dt, safety)


def run_unit_cell_equibiaxial(l_ip, l_op, target_force, steps=20,
                              collagen: CollagenParams = None,
                              crosslink: CrosslinkParams = None,
                              matrix: MatrixParams = None,
                              settings: SolveSettings = None,
                              collagen_in_compression=True,
                              out_of_plane="fixed") -> UnitCellResult:
    """Planar equibiaxial tension of a single unit cell under force control.

    The total force (N) on each of the four lateral facets ramps from 0 to
    target_force, split equally over the facet nodes and directed along the
    outward reference normals.  `out_of_plane` selects the treatment of the
    top/bottom faces: "fixed" (default) holds them at their referential
    height (planar kinematics, the setting that isolates the diagonal-truss
    elongation effect of the shape factor), "free" leaves them traction
    free so the cell thins with the near-incompressible matrix.  Rigid-body
    motion is removed by a 3-2-1 dof elimination.  Returns the force
    history against the mean in-plane stretch.
    """
    if out_of_plane not in ("fixed", "free"):
        raise ValueError("out_of_plane must be 'fixed' or 'free'")
    mesh = single_cell_mesh(l_ip, l_op)
    ts = build_trusswork(mesh, spec=mesh)
    collagen = collagen or CollagenParams()
    crosslink = crosslink or CrosslinkParams()
    n_t = ts.n_trusses

    def nid(i, j, t):
        return (t * 2 + j) * 2 + i

    if out_of_plane == "fixed":
        fixed = [3 * n + 2 for n in range(8)]
        fixed += [3 * nid(0, 0, 0), 3 * nid(0, 0, 0) + 1,
                  3 * nid(1, 0, 0) + 1]
    else:
        # 3-2-1: pin one corner, a second node to the x axis, a third in z
        fixed = [3 * nid(0, 0, 0), 3 * nid(0, 0, 0) + 1, 3 * nid(0, 0, 0) + 2,
                 3 * nid(1, 0, 0) + 1, 3 * nid(1, 0, 0) + 2,
                 3 * nid(0, 1, 0) + 2]
    con = fix_dofs(3 * mesh.n_nodes, fixed)

    system = CorneaSystem(
        mesh, trussset=ts, matrix_params=matrix or MatrixParams(),
        constraints=con,
        collagen_k1=np.full(n_t, collagen.k1),
        collagen_k2=np.full(n_t, collagen.k2),
        crosslink_eps=np.full(n_t, crosslink.eps),
        crosslink_a=np.full(n_t, crosslink.a),
        collagen_in_compression=collagen_in_compression)

    # unit force pattern: +-x on the x faces, +-y on the y faces, F/4 a node
    f = np.zeros(3 * mesh.n_nodes)
    for sign, i in ((-1.0, 0), (1.0, 1)):
        for j in range(2):
            for t in range(2):
                f[3 * nid(i, j, t)] += 0.25 * sign
    for sign, j in ((-1.0, 0), (1.0, 1)):
        for i in range(2):
            for t in range(2):
                f[3 * nid(i, j, t) + 1] += 0.25 * sign
    dead = _DeadLoadSystem(system, f)

    settings = settings or SolveSettings()
    q = np.zeros(con.n_master)
    forces = np.linspace(0.0, target_force, steps + 1)
    stretches = []
    for step, fval in enumerate(forces):
        try:
            res = newton_solve(dead, fval, q, settings)
        except NonConvergenceError as exc:
            raise NonConvergenceError(
                f"step {step} (force {fval:g} N): {exc}") from exc
        q = res.q
        x = mesh.nodes + con.full_disp(q).reshape(-1, 3)
        lx = (x[[nid(1, j, t) for j in range(2) for t in range(2)], 0].mean()
              - x[[nid(0, j, t) for j in range(2) for t in range(2)], 0].mean())
        ly = (x[[nid(i, 1, t) for i in range(2) for t in range(2)], 1].mean()
              - x[[nid(i, 0, t) for i in range(2) for t in range(2)], 1].mean())
        stretches.append(0.5 * (lx + ly) / l_ip)

    return UnitCellResult(force=forces, stretch=np.array(stretches),
                          l_ip=l_ip, l_op=l_op, shape_factor=l_ip / l_op)
