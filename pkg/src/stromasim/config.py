"""Run configuration: YAML schema, defaults, and validation.

The schema is nested; every key has a default (an empty file is a valid
healthy-cornea inflation to 30 mmHg) and unknown keys are rejected by name.
Pressures are mmHg at this boundary only; everything internal is mm-MPa-N.
"""

import copy
from dataclasses import dataclass, field

import yaml

from .constraints import LimbusMode
from .geometry import BiconicSurface, CorneaGeometry, MeshSpec
from .materials import CollagenParams, CrosslinkParams, MatrixParams
from .scenarios import DamageField, DispersionProfile, LoadProgram
from .solver import SolveSettings

__all__ = ["RunConfig", "ConfigError", "parse_config", "config_defaults",
           "config_from_dict", "config_to_dict"]


class ConfigError(ValueError):
    pass


_DEFAULTS = {
    "geometry": {
        "central_thickness": 0.57,
        "apex_elevation": 2.48,
        "in_plane_diameter": 10.60,
        "anterior": {"r_steep": 7.56, "r_flat": 7.41,
                     "q_steep": 1.50, "q_flat": 1.50, "steep_axis_deg": 0.0},
        "posterior": {"r_steep": 6.47, "r_flat": 6.07,
                      "q_steep": 1.00, "q_flat": 1.00, "steep_axis_deg": 0.0},
    },
    "mesh": {"n_m": 24, "n_l": 3},
    "materials": {
        "collagen": {"k1": 1.8, "k2": 4000.0},
        "crosslink": {"eps": 0.01, "a": 6.0},
        "matrix": {"mu1": 0.0015, "mu2": -0.0014, "k_bulk": 5.0},
        "collagen_in_compression": True,
        "variance": {
            "k1m": 0.2,
            "k2m": 510.0,
            "dispersion": {"b_center": 5.0, "b_limbus": 5.0},
        },
    },
    "scenario": {
        "kind": "inflation",
        "model": "coupled",
        "bc": "orthogonality_preserving",
        "load": {"iop_start": 0.0, "iop_end": 30.0, "steps": 30},
        "damage": {"center": [0.0, -1.0], "radius": 1.5, "peak": 1.0},
        "unitcell": {"l_ip": 1.0, "l_op": 1.0, "target_force": 0.3,
                     "steps": 20, "out_of_plane": "fixed"},
    },
    "solver": {
        "method": "newton",
        "tol": 1e-6,
        "max_newton": 50,
        "max_relax": 2_000_000,
        "dt": 1e-3,
        "velocity_tol": 1e-8,
    },
    "output": {"directory": "out", "snapshot_every": 0},
}

_KINDS = ("inflation", "unitcell", "keratoconus")
_MODELS = ("coupled", "variance")
_BCS = {m.value: m for m in LimbusMode}
_METHODS = ("newton", "relaxation")


def config_defaults():
    """A fresh copy of the fully defaulted configuration dictionary."""
    return copy.deepcopy(_DEFAULTS)


def _merge(defaults, user, path=""):
    """Merge a user dict over the defaults, rejecting unknown keys."""
    if not isinstance(user, dict):
        raise ConfigError(f"section '{path or '<root>'}' must be a mapping")
    out = {}
    for key, dval in defaults.items():
        if key not in user:
            out[key] = copy.deepcopy(dval)
            continue
        uval = user[key]
        here = f"{path}.{key}" if path else key
        if isinstance(dval, dict):
            out[key] = _merge(dval, uval, here)
        else:
            out[key] = uval
    for key in user:
        if key not in defaults:
            here = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown configuration key '{here}'")
    return out


@dataclass
class RunConfig:
    """Schema-validated run configuration with typed domain objects."""

    geometry: CorneaGeometry
    mesh: MeshSpec
    collagen: CollagenParams
    crosslink: CrosslinkParams
    matrix: MatrixParams
    collagen_in_compression: bool
    vb_k1m: float
    vb_k2m: float
    dispersion: DispersionProfile
    kind: str
    model: str
    bc: LimbusMode
    load: LoadProgram
    damage: DamageField
    unitcell: dict
    method: str
    settings: SolveSettings
    output_dir: str
    snapshot_every: int
    raw: dict = field(repr=False, default=None)


def _surface(d, name):
    try:
        return BiconicSurface(r_steep=float(d["r_steep"]),
                              r_flat=float(d["r_flat"]),
                              q_steep=float(d["q_steep"]),
                              q_flat=float(d["q_flat"]),
                              steep_axis_deg=float(d["steep_axis_deg"]))
    except ValueError as exc:
        raise ConfigError(f"geometry.{name}: {exc}") from exc


def config_from_dict(data) -> RunConfig:
    """Validate a (possibly partial) configuration dictionary."""
    raw = _merge(_DEFAULTS, data if data else {})

    g = raw["geometry"]
    try:
        geometry = CorneaGeometry(
            anterior=_surface(g["anterior"], "anterior"),
            posterior=_surface(g["posterior"], "posterior"),
            central_thickness=float(g["central_thickness"]),
            apex_elevation=float(g["apex_elevation"]),
            in_plane_diameter=float(g["in_plane_diameter"]))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc

    m = raw["mesh"]
    try:
        mesh = MeshSpec(n_m=int(m["n_m"]), n_l=int(m["n_l"]))
    except ValueError as exc:
        raise ConfigError(f"mesh: {exc}") from exc

    mat = raw["materials"]
    try:
        collagen = CollagenParams(k1=float(mat["collagen"]["k1"]),
                                  k2=float(mat["collagen"]["k2"]))
        crosslink = CrosslinkParams(eps=float(mat["crosslink"]["eps"]),
                                    a=float(mat["crosslink"]["a"]))
        matrix = MatrixParams(mu1=float(mat["matrix"]["mu1"]),
                              mu2=float(mat["matrix"]["mu2"]),
                              k_bulk=float(mat["matrix"]["k_bulk"]))
    except ValueError as exc:
        raise ConfigError(f"materials: {exc}") from exc
    disp = mat["variance"]["dispersion"]
    dispersion = DispersionProfile(b_center=float(disp["b_center"]),
                                   b_limbus=float(disp["b_limbus"]))
    if dispersion.b_center < 0 or dispersion.b_limbus < 0:
        raise ConfigError(
            "materials.variance.dispersion: b must be non-negative")

    s = raw["scenario"]
    if s["kind"] not in _KINDS:
        raise ConfigError(
            f"scenario.kind must be one of {_KINDS}, got {s['kind']!r}")
    if s["model"] not in _MODELS:
        raise ConfigError(
            f"scenario.model must be one of {_MODELS}, got {s['model']!r}")
    if s["bc"] not in _BCS:
        raise ConfigError(
            f"scenario.bc must be one of {sorted(_BCS)}, got {s['bc']!r}")
    try:
        load = LoadProgram(iop_start=float(s["load"]["iop_start"]),
                           iop_end=float(s["load"]["iop_end"]),
                           steps=int(s["load"]["steps"]))
        damage = DamageField(center=tuple(s["damage"]["center"]),
                             radius=float(s["damage"]["radius"]),
                             peak=float(s["damage"]["peak"]))
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc
    uc = dict(s["unitcell"])
    if uc["out_of_plane"] not in ("fixed", "free"):
        raise ConfigError(
            "scenario.unitcell.out_of_plane must be 'fixed' or 'free'")

    sol = raw["solver"]
    if sol["method"] not in _METHODS:
        raise ConfigError(
            f"solver.method must be one of {_METHODS}, got {sol['method']!r}")
    try:
        settings = SolveSettings(tol=float(sol["tol"]),
                                 max_newton=int(sol["max_newton"]),
                                 max_relax=int(sol["max_relax"]),
                                 dt=float(sol["dt"]),
                                 velocity_tol=float(sol["velocity_tol"]))
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    out = raw["output"]
    snapshot_every = int(out["snapshot_every"])
    if snapshot_every < 0:
        raise ConfigError("output.snapshot_every must be non-negative")

    return RunConfig(geometry=geometry, mesh=mesh, collagen=collagen,
                     crosslink=crosslink, matrix=matrix,
                     collagen_in_compression=bool(
                         mat["collagen_in_compression"]),
                     vb_k1m=float(mat["variance"]["k1m"]),
                     vb_k2m=float(mat["variance"]["k2m"]),
                     dispersion=dispersion, kind=s["kind"], model=s["model"],
                     bc=_BCS[s["bc"]], load=load, damage=damage, unitcell=uc,
                     method=sol["method"], settings=settings,
                     output_dir=str(out["directory"]),
                     snapshot_every=snapshot_every, raw=raw)


def parse_config(path) -> RunConfig:
    """Read and validate a YAML configuration file.

    An empty file yields the full defaults.  A manifest file emitted by a
    previous run (with its resolved configuration under a top-level
    'config' key) is accepted as well, so results can be reproduced from
    the manifest alone.
    """
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    if data is None:
        data = {}
    if isinstance(data, dict) and "config" in data and "geometry" not in data:
        data = data["config"]
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    """The resolved configuration as a plain dictionary (manifest echo)."""
    return copy.deepcopy(cfg.raw)
