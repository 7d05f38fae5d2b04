#!/usr/bin/env python3
"""Refinement ladders for the compatibility identities.

Prints the zero-curvature and duality residuals at three resolutions with
their pooled convergence orders.

Usage: python3 scripts/convergence_study.py
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from conftest import higher_patch, hm_patch, pooled_order  # noqa: E402

from hmlab import dynamics as dy  # noqa: E402
from hmlab import fields as fl  # noqa: E402
from hmlab import lax as lx  # noqa: E402

SIZES = (32, 48, 72)


def ladder(label, errs, ratio=1.5):
    order = pooled_order(errs, ratio)
    cells = "  ".join(f"{e:.3e}" for e in errs)
    print(f"{label:<44s} {cells}  order {order:.2f}")
    return order


def main():
    print(f"{'residual ladder (N = ' + ', '.join(map(str, SIZES)) + ')':<44s}")
    ladder("zero curvature, magnet pair",
           [lx.zero_curvature_residual(hm_patch(n)[1], "hm", 0.8)
            for n in SIZES])
    ladder("zero curvature, order-2 dual pair",
           [lx.zero_curvature_residual(higher_patch(n)[1], "dual", 0.8)
            for n in SIZES])
    ladder("zero curvature, proxy pair (redundancy)",
           [lx.zero_curvature_residual(higher_patch(n)[1], "comm", 0.8)
            for n in SIZES])

    errs = []
    for n in SIZES:
        _, patch = hm_patch(n)
        xs, ts = patch.x_spec, patch.t_spec
        sig = {k: fl.diff(patch.data[k], xs, axis=1) for k in fl.SPIN_FIELDS}
        dsig = {k: fl.diff(sig[k], xs, axis=1) for k in fl.SPIN_FIELDS}
        worst = 0.0
        for j in range(0, xs.n_points, 5):
            line = fl.DualGrid(ts, 1.0, patch.data["S+"][:, j],
                               patch.data["S-"][:, j], patch.data["Sz"][:, j],
                               sig["S+"][:, j], sig["S-"][:, j],
                               sig["Sz"][:, j])
            rhs = dy.dual_space_rhs(line, "real")
            target = np.stack([sig["S+"][:, j], sig["S-"][:, j],
                               sig["Sz"][:, j], dsig["S+"][:, j],
                               dsig["S-"][:, j], dsig["Sz"][:, j]])
            worst = max(worst, np.max(np.abs((rhs - target)[:, 2:-2])))
        errs.append(worst)
    ladder("equal-space equations on magnet patches", errs)


if __name__ == "__main__":
    main()
