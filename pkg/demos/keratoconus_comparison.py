"""Keratoconus degeneration: coupled multiscale vs dispersed-fibril model.

Applies the default inferior damage disk and inflates to 15 mmHg with
both constitutive models:

* coupled  - explicit collagen/crosslink trusswork in a Mooney-Rivlin
  matrix, damage scaling the truss and matrix stress prefactors;
* variance - dispersed-fibril continuum (fibril families with von Mises
  orientation dispersion entering through the mean and variance of the
  fiber stretch invariant), calibrated so its healthy response matches
  the coupled model.

Reports bulge location, thinning, the damaged-vs-healthy displacement
increase, and the model gap at the damaged apex, plus (with --sweep) the
sensitivity of that gap to the damage radius.

Run:  python3 demos/keratoconus_comparison.py [--nm 16] [--sweep]
"""

import argparse
from pathlib import Path

import numpy as np

from stromasim.geometry import MeshSpec
from stromasim.scenarios import (DamageField, LoadProgram,
                                 calibrated_families, extract_profile,
                                 run_inflation, run_keratoconus)
from stromasim.unitcell import build_trusswork
from stromasim.vtk_io import write_mesh_vtk


def bulge_and_thinning(res, damage):
    """Location of the largest anterior z-displacement and of the minimum
    column thickness, from the SI meridian profile."""
    mesh = res.mesh
    u = res.final_displacement().reshape(-1, 3)
    n1 = mesh.n_m + 1
    ant = mesh.n_l * n1 * n1
    xy = mesh.nodes[ant:ant + n1 * n1, :2]
    uz = u[ant:ant + n1 * n1, 2]
    bulge_xy = xy[np.argmax(uz)]
    prof = extract_profile(mesh, res.final_displacement(), "SI")
    thin_at = prof.coord[np.argmin(prof.thickness)]
    return bulge_xy, float(np.max(uz)), float(thin_at), \
        float(np.min(prof.thickness))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nm", type=int, default=16)
    ap.add_argument("--sweep", action="store_true",
                    help="also sweep the damage radius (adds ~10 min)")
    args = ap.parse_args()
    spec = MeshSpec(args.nm, 3)
    load = LoadProgram(0.0, 15.0, 10)
    damage = DamageField()
    fams = calibrated_families()
    out = Path(__file__).parent / "out_keratoconus"
    out.mkdir(exist_ok=True)

    healthy = run_inflation(spec=spec, load=load)
    cm = run_keratoconus(spec=spec, load=load, damage=damage)
    vb = run_keratoconus(spec=spec, load=load, damage=damage,
                         model="variance", families=fams)

    bulge_xy, bulge, thin_at, thin = bulge_and_thinning(cm, damage)
    print(f"healthy apex displacement at 15 mmHg: "
          f"{healthy.apex_disp[-1]:.5f} mm")
    print(f"coupled damaged:                      {cm.apex_disp[-1]:.5f} mm "
          f"(+{(cm.apex_disp[-1]/healthy.apex_disp[-1]-1)*100:.1f}%)")
    print(f"variance damaged:                     {vb.apex_disp[-1]:.5f} mm")
    gap = (cm.apex_disp[-1] - vb.apex_disp[-1]) / vb.apex_disp[-1] * 100
    print(f"coupled exceeds variance by {gap:.2f}% at the apex")
    print(f"bulge peak at (x, y) = ({bulge_xy[0]:+.3f}, {bulge_xy[1]:+.3f})"
          f" mm, {bulge:.4f} mm forward (inferior offset resolved for "
          f"--nm >= 16)")
    print(f"minimum thickness {thin:.4f} mm at SI coordinate "
          f"{thin_at:+.3f} mm (localized thinning)")

    ts = build_trusswork(cm.mesh, spec=cm.mesh)
    d_hex = damage.value(cm.mesh.nodes[cm.mesh.hexes].mean(axis=1)[:, :2])
    d_tr = damage.value(0.5 * (cm.mesh.nodes[ts.node_a, :2]
                               + cm.mesh.nodes[ts.node_b, :2]))
    write_mesh_vtk(out / "coupled_damaged.vtk", cm.mesh, trussset=ts,
                   displacement=cm.final_displacement(), hex_damage=d_hex,
                   truss_damage=d_tr)
    print(f"wrote {out}/coupled_damaged.vtk")

    if args.sweep:
        print("\ndamage-radius sensitivity of the model gap (apex, 15 mmHg)")
        print(f"{'radius mm':>10} {'coupled':>9} {'variance':>9} {'gap %':>7}")
        for radius in (1.0, 1.5, 2.5, 3.5):
            dmg = DamageField(radius=radius)
            c = run_keratoconus(spec=spec, load=load, damage=dmg)
            v = run_keratoconus(spec=spec, load=load, damage=dmg,
                                model="variance", families=fams)
            g = (c.apex_disp[-1] - v.apex_disp[-1]) / v.apex_disp[-1] * 100
            print(f"{radius:10.1f} {c.apex_disp[-1]:9.5f} "
                  f"{v.apex_disp[-1]:9.5f} {g:7.2f}")
        print("the gap shrinks (and eventually flips) as the damage disk "
              "grows:\nwith wide damage the dispersed model loses in-plane "
              "support over a\nlarger area and softens faster than the "
              "explicit trusswork.")


if __name__ == "__main__":
    main()
