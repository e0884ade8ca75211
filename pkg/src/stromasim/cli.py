"""Command-line interface: run orchestration and file emission.

Subcommands: mesh, inflate, unitcell, keratoconus, sweep, check.  All
numerical inputs come from a YAML configuration file (see docs/config.md);
flags mirror config keys and override the file.  Every run directory gets
a plain-text manifest (resolved config echo, code version, wall clock,
per-step convergence) whether the run succeeds or fails; outputs are
written with a `.partial` suffix and renamed only on success.
"""

import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from pathlib import Path

import click
import yaml

from . import __version__
from .config import ConfigError, RunConfig, config_from_dict, parse_config
from .geometry import generate_mesh, shape_factors
from .scenarios import (extract_profile, run_inflation, run_keratoconus,
                        run_unit_cell_equibiaxial)
from .solver import NonConvergenceError
from .unitcell import build_trusswork
from .variance import default_families
from .vtk_io import write_curve_csv, write_mesh_vtk, write_profile_csv

__all__ = ["main"]


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------

def _apply_dotted(tree, dotted, value):
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override through non-mapping '{k}'")
    node[keys[-1]] = value


def _load_config(config_path, sets=(), **flag_overrides) -> RunConfig:
    """File (or defaults) + `--set dotted.key=value` + explicit flags."""
    if config_path:
        with open(config_path) as fh:
            data = yaml.safe_load(fh) or {}
        if isinstance(data, dict) and "config" in data and \
                "geometry" not in data:
            data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError(f"{config_path} must contain a mapping")
    else:
        data = {}
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects dotted.key=value, got {item!r}")
        dotted, _, raw = item.partition("=")
        _apply_dotted(data, dotted.strip(), yaml.safe_load(raw))
    for dotted, value in flag_overrides.items():
        if value is not None:
            _apply_dotted(data, dotted, value)
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

class RunDir:
    """Output directory with .partial bookkeeping.

    Files are created under their final name plus `.partial`; `finalize`
    strips the suffix.  On failure the partials stay behind as evidence of
    how far the run got.
    """

    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._partials = []

    def partial(self, name) -> Path:
        p = self.dir / (name + ".partial")
        self._partials.append(p)
        return p

    def path(self, name) -> Path:
        return self.dir / name

    def finalize(self):
        for p in self._partials:
            if p.exists():
                p.replace(p.with_suffix(""))
        self._partials = []


def _write_manifest(rundir: RunDir, command, cfg: RunConfig, status,
                    t0, steps, error=None):
    manifest = {
        "command": command,
        "version": __version__,
        "status": status,
        "wall_clock_s": round(time.time() - t0, 3),
        "steps": steps,
        "config": cfg.raw,
    }
    if error:
        manifest["error"] = str(error)
    with open(rundir.path("manifest.yaml"), "w") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=False)


def _material_kwargs(cfg: RunConfig):
    if cfg.model == "variance":
        return {"matrix": cfg.matrix, "dispersion": cfg.dispersion,
                "families": default_families(k1m=cfg.vb_k1m,
                                             k2m=cfg.vb_k2m)}
    return {"collagen": cfg.collagen, "crosslink": cfg.crosslink,
            "matrix": cfg.matrix,
            "collagen_in_compression": cfg.collagen_in_compression}


def _snapshot(rundir: RunDir, name, mesh, ts, u, damage):
    hex_d = truss_d = None
    if damage is not None:
        hex_d = damage.value(mesh.nodes[mesh.hexes].mean(axis=1)[:, :2])
        mid = 0.5 * (mesh.nodes[ts.node_a, :2] + mesh.nodes[ts.node_b, :2])
        truss_d = damage.value(mid)
    write_mesh_vtk(rundir.partial(name), mesh, trussset=ts, displacement=u,
                   hex_damage=hex_d, truss_damage=truss_d)


def _run_pressure_scenario(cfg: RunConfig, rundir: RunDir, kind):
    """Inflation or keratoconus ramp with streamed outputs.

    Returns the per-step convergence summary for the manifest.
    """
    mesh = generate_mesh(cfg.geometry, cfg.mesh)
    ts = build_trusswork(mesh, spec=mesh)
    damage = cfg.damage if kind == "keratoconus" else None
    steps_log = []

    curve = open(rundir.partial("curve.csv"), "w", newline="")
    curve.write("step,iop_mmHg,apex_disp_mm,residual\n")

    def on_step(step, iop, apex, resid, u):
        curve.write(f"{step},{iop:.12g},{apex:.12g},{resid:.12g}\n")
        curve.flush()
        steps_log.append({"step": step, "iop_mmHg": float(iop),
                          "apex_disp_mm": float(apex),
                          "residual": float(resid)})
        if cfg.snapshot_every and step % cfg.snapshot_every == 0:
            _snapshot(rundir, f"step_{step:04d}.vtk", mesh, ts, u, damage)

    runner = run_keratoconus if kind == "keratoconus" else run_inflation
    kwargs = _material_kwargs(cfg)
    if kind == "keratoconus":
        kwargs["damage"] = cfg.damage
    try:
        res = runner(mesh=mesh, load=cfg.load, bc=cfg.bc, model=cfg.model,
                     solver=cfg.method, settings=cfg.settings,
                     on_step=on_step, **kwargs)
    finally:
        curve.close()

    u = res.final_displacement()
    for meridian in ("SI", "NT"):
        write_profile_csv(rundir.partial(f"profile_{meridian}.csv"),
                          extract_profile(mesh, u, meridian))
    _snapshot(rundir, "state.vtk", mesh, ts, u, damage)
    click.echo(f"{kind}: {cfg.load.steps} steps to {cfg.load.iop_end:g} "
               f"mmHg, apex displacement {res.apex_disp[-1]:.5f} mm, "
               f"mean shape factor {res.mean_f:.4f}")
    return steps_log


def _run_unitcell(cfg: RunConfig, rundir: RunDir):
    uc = cfg.unitcell
    curve = open(rundir.partial("unitcell_curve.csv"), "w", newline="")
    curve.write("step,force_N,stretch\n")
    try:
        res = run_unit_cell_equibiaxial(
            l_ip=float(uc["l_ip"]), l_op=float(uc["l_op"]),
            target_force=float(uc["target_force"]), steps=int(uc["steps"]),
            collagen=cfg.collagen, crosslink=cfg.crosslink,
            matrix=cfg.matrix, settings=cfg.settings,
            collagen_in_compression=cfg.collagen_in_compression,
            out_of_plane=uc["out_of_plane"])
        for i, (f, lam) in enumerate(zip(res.force, res.stretch)):
            curve.write(f"{i},{f:.12g},{lam:.12g}\n")
    finally:
        curve.close()
    click.echo(f"unitcell: f = {res.shape_factor:g}, final stretch "
               f"{res.stretch[-1]:.6f} at {res.force[-1]:g} N")
    return [{"step": i, "force_N": float(f), "stretch": float(s)}
            for i, (f, s) in enumerate(zip(res.force, res.stretch))]


def _execute(cfg: RunConfig, out_dir, command):
    """Run one scenario into out_dir with manifest and .partial handling."""
    rundir = RunDir(out_dir)
    t0 = time.time()
    steps = []
    try:
        if command in ("inflate", "keratoconus"):
            steps = _run_pressure_scenario(
                cfg, rundir, "keratoconus" if command == "keratoconus"
                else "inflation")
        elif command == "unitcell":
            steps = _run_unitcell(cfg, rundir)
        else:
            raise ValueError(f"unknown scenario command {command!r}")
    except Exception as exc:
        _write_manifest(rundir, command, cfg, "failed", t0, steps, error=exc)
        raise
    rundir.finalize()
    _write_manifest(rundir, command, cfg, "ok", t0, steps)


def _fail(exc):
    click.echo(f"error: {exc}", err=True)
    raise SystemExit(1)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

_CONFIG_OPTS = [
    click.option("--config", "config_path", type=click.Path(exists=True),
                 default=None, help="YAML configuration file."),
    click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
                 help="Override any config key by dotted path, e.g. "
                      "--set solver.tol=1e-7."),
    click.option("--out", "out_dir", default=None,
                 help="Output directory (overrides output.directory)."),
    click.option("--nm", type=int, default=None,
                 help="Meridian divisions N_M."),
    click.option("--nl", type=int, default=None,
                 help="Layers N_L (odd)."),
]


def _with_config_opts(fn):
    for opt in reversed(_CONFIG_OPTS):
        fn = opt(fn)
    return fn


def _common_cfg(config_path, sets, out_dir, nm, nl, **extra):
    try:
        return _load_config(config_path, sets,
                            **{"output.directory": out_dir,
                               "mesh.n_m": nm, "mesh.n_l": nl, **extra})
    except (ConfigError, OSError) as exc:
        _fail(exc)


@click.group()
@click.version_option(__version__, prog_name="stromasim")
def main():
    """Multiscale truss/continuum finite-element simulator of the cornea."""


@main.command()
@_with_config_opts
def mesh(config_path, sets, out_dir, nm, nl):
    """Generate the mesh and trusswork and export them as legacy VTK."""
    cfg = _common_cfg(config_path, sets, out_dir, nm, nl)
    rundir = RunDir(cfg.output_dir)
    t0 = time.time()
    try:
        m = generate_mesh(cfg.geometry, cfg.mesh)
        ts = build_trusswork(m, spec=m)
        rep = shape_factors(m)
        write_mesh_vtk(rundir.partial("mesh.vtk"), m, trussset=ts)
    except Exception as exc:
        _write_manifest(rundir, "mesh", cfg, "failed", t0, [], error=exc)
        _fail(exc)
    rundir.finalize()
    _write_manifest(rundir, "mesh", cfg, "ok", t0, [])
    click.echo(f"{m.n_nodes} nodes / {m.n_hex} hexes")
    click.echo(f"{ts.n_trusses} trusses, mean shape factor "
               f"{rep.mean_f:.4f}")


def _scenario_command(name, help_text, kind_value):
    @main.command(name=name, help=help_text)
    @_with_config_opts
    @click.option("--model", type=click.Choice(["coupled", "variance"]),
                  default=None, help="Constitutive model.")
    @click.option("--iop-start", type=float, default=None)
    @click.option("--iop-end", type=float, default=None)
    @click.option("--steps", type=int, default=None)
    @click.option("--method", type=click.Choice(["newton", "relaxation"]),
                  default=None, help="Equilibrium solver.")
    @click.option("--snapshot-every", type=int, default=None,
                  help="Write a VTK snapshot every N steps (0 = final only).")
    def _cmd(config_path, sets, out_dir, nm, nl, model, iop_start, iop_end,
             steps, method, snapshot_every):
        cfg = _common_cfg(config_path, sets, out_dir, nm, nl,
                          **{"scenario.model": model,
                             "scenario.load.iop_start": iop_start,
                             "scenario.load.iop_end": iop_end,
                             "scenario.load.steps": steps,
                             "solver.method": method,
                             "output.snapshot_every": snapshot_every})
        try:
            _execute(cfg, cfg.output_dir, name)
        except NonConvergenceError as exc:
            _fail(f"solver did not converge: {exc}")
        except (ConfigError, ValueError, OSError) as exc:
            _fail(exc)

    return _cmd


inflate = _scenario_command(
    "inflate", "Inflate the healthy cornea over the pressure ramp.",
    "inflation")
keratoconus = _scenario_command(
    "keratoconus", "Inflate a cornea with a localized damage field.",
    "keratoconus")


@main.command()
@_with_config_opts
@click.option("--l-ip", type=float, default=None,
              help="In-plane cell dimension, mm.")
@click.option("--l-op", type=float, default=None,
              help="Out-of-plane cell dimension, mm.")
@click.option("--target-force", type=float, default=None,
              help="Final facet force, N.")
def unitcell(config_path, sets, out_dir, nm, nl, l_ip, l_op, target_force):
    """Equibiaxial force-stretch curve of a single unit cell."""
    cfg = _common_cfg(config_path, sets, out_dir, nm, nl,
                      **{"scenario.unitcell.l_ip": l_ip,
                         "scenario.unitcell.l_op": l_op,
                         "scenario.unitcell.target_force": target_force})
    try:
        _execute(cfg, cfg.output_dir, "unitcell")
    except NonConvergenceError as exc:
        _fail(f"solver did not converge: {exc}")
    except (ConfigError, ValueError, OSError) as exc:
        _fail(exc)


def _sweep_point(args):
    """Worker: one sweep point in its own process."""
    raw, out_dir, command = args
    try:
        cfg = config_from_dict(raw)
        _execute(cfg, out_dir, command)
        return out_dir, None
    except Exception as exc:  # report, don't kill the pool
        return out_dir, f"{type(exc).__name__}: {exc}"


@main.command()
@_with_config_opts
@click.option("--param", "params", multiple=True, required=True,
              metavar="KEY=V1,V2,...",
              help="Sweep a dotted config key over comma-separated values; "
                   "repeat for a cartesian grid.")
def sweep(config_path, sets, out_dir, nm, nl, params):
    """Run a parameter grid of the configured scenario, one directory and
    curve per grid point.  STROMA_SIM_THREADS caps worker processes."""
    cfg = _common_cfg(config_path, sets, out_dir, nm, nl)
    command = {"inflation": "inflate", "keratoconus": "keratoconus",
               "unitcell": "unitcell"}[cfg.kind]

    axes = []
    for item in params:
        if "=" not in item:
            _fail(f"--param expects dotted.key=v1,v2,..., got {item!r}")
        dotted, _, raw_vals = item.partition("=")
        values = [yaml.safe_load(v) for v in raw_vals.split(",")]
        axes.append((dotted.strip(), values))

    jobs = []
    base = Path(cfg.output_dir)
    for idx, combo in enumerate(product(*(vals for _, vals in axes))):
        raw = yaml.safe_load(yaml.safe_dump(cfg.raw))  # deep copy
        for (dotted, _), value in zip(axes, combo):
            _apply_dotted(raw, dotted, value)
        try:
            config_from_dict(raw)  # validate before spawning workers
        except ConfigError as exc:
            _fail(f"sweep point {idx} ({combo}): {exc}")
        jobs.append((raw, str(base / f"point_{idx:03d}"), command))

    env_cap = os.environ.get("STROMA_SIM_THREADS")
    workers = min(len(jobs), int(env_cap) if env_cap else os.cpu_count())
    workers = max(1, workers)
    click.echo(f"sweep: {len(jobs)} points, {workers} worker(s)")
    if workers == 1:
        results = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))

    base.mkdir(parents=True, exist_ok=True)
    summary = [{"directory": d, "status": "ok" if err is None else "failed",
                **({"error": err} if err else {})} for d, err in results]
    with open(base / "sweep_manifest.yaml", "w") as fh:
        yaml.safe_dump({"version": __version__, "axes": dict(axes),
                        "points": summary}, fh, sort_keys=False)
    failed = [d for d, err in results if err is not None]
    for d, err in results:
        click.echo(f"  {d}: {'ok' if err is None else err}")
    if failed:
        _fail(f"{len(failed)} of {len(jobs)} sweep points failed")


@main.command()
@click.option("--fast", is_flag=True,
              help="Skip the solver-based collinearity check.")
def check(fast):
    """Run the built-in verification suite and report pass/fail."""
    from .verification import run_all

    try:
        results = run_all(fast=fast)
    except Exception as exc:
        traceback.print_exc()
        _fail(f"verification suite crashed: {exc}")
    width = max(len(r.name) for r in results)
    ok = True
    for r in results:
        ok &= r.passed
        click.echo(f"[{'PASS' if r.passed else 'FAIL'}] "
                   f"{r.name:<{width}}  {r.detail}")
    if not ok:
        _fail("verification suite reported failures")
    click.echo(f"all {len(results)} checks passed")


if __name__ == "__main__":
    main()
