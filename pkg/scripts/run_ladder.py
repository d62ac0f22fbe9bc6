#!/usr/bin/env python3
"""Resonance widths on an h-ladder, with the free and fixed-action fits.

    python scripts/run_ladder.py                       # 1D reference ladder
    python scripts/run_ladder.py --radial              # 2D radial reduction
    python scripts/run_ladder.py --hs 0.02,0.0175,0.015,0.0125,0.01 --nodes 16000 --route green
"""

import argparse
import os

import numpy as np

from resonia.acceptance import _fixed_S_diagnostic
from resonia.potential import gauss_well, island_boundary
from resonia.resonance import well_action
from resonia.width import asymptotic_fit, run_ladder


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hs", default="0.05,0.04,0.035,0.03,0.025")
    ap.add_argument("--nodes", type=int, default=8000)
    ap.add_argument("--radial", action="store_true")
    ap.add_argument("--route", choices=("eig", "green"), default="eig",
                    help="which Im rho feeds the fit (green keeps relative accuracy at tiny widths)")
    a = ap.parse_args()
    hs = [float(v) for v in a.hs.split(",")]
    spec1 = gauss_well().with_well()
    S, rb = well_action(spec1), island_boundary(spec1).radius
    spec = gauss_well(dim=2).with_well() if a.radial else spec1
    workers = int(os.environ.get("RESONIA_THREADS", "2"))
    rep = run_ladder(spec, hs, S, rb, n_gamma=int(a.radial), radial=a.radial, workers=workers, nodes=a.nodes)
    key = "im_rho_eig" if a.route == "eig" else "im_rho_green"
    print(f"{'h':>8} {'Re rho':>16} {'Im rho (eig)':>14} {'Im rho (Green)':>14} {'f(h)':>10}")
    im = []
    for r in rep.records:
        f = -r[key] * np.exp(2 * S / r["h"])
        im.append(r[key])
        print(f"{r['h']:8.4f} {r['re_rho']:16.12f} {r['im_rho_eig']:14.6e} {r['im_rho_green']:14.6e} {f:10.4f}")
    if len(hs) >= 4:
        fit = asymptotic_fit(hs, im)
        print(f"free fit:  S_fit={fit.S_fit:.6f} (S={S:.6f}, {abs(fit.S_fit / S - 1):.2%})  "
              f"p_fit={fit.p_fit:.4f}  f0_fit={fit.f0_fit:.4g}")
        d = _fixed_S_diagnostic(hs, im, S)
        print(f"fixed-S fit (p ln h + c + f1 h): p={d['p']:.4f}  f0={d['f0']:.4g}  f1={d['f1']:.4g}")


if __name__ == "__main__":
    main()
