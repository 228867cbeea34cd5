"""Maxwell strata of the uniform-cost sphere as a function of the radius.

Solves the second-order SE(2) map from e on [-4, 4]^2 (h = 0.1, 64
orientations), then prints for a range of radii the number of M2 nodes, the
largest probed multiplicity and the size of the θ = 0 M3 proxy. The M3 proxy
should switch on near the critical radius printed at the top.

    python scripts/maxwell_stages.py [--out stages.csv]
"""

import argparse
import csv
import math

import numpy as np

from srtrack.elliptic import solve_rtilde
from srtrack.maxwell import maxwell_m2, stage_report, uniform_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--ntheta", type=int, default=64)
    ap.add_argument("--order", type=int, default=2)
    ap.add_argument("--probes", type=int, default=2)
    ap.add_argument("--out", default=None, help="optional CSV of the stage table")
    a = ap.parse_args()

    rt = solve_rtilde()
    print(f"critical radius Rtilde = {rt.Rtilde:.6f} = {rt.ratio_pi:.5f} pi")
    W = uniform_solve(4.0, a.h, a.ntheta, order=a.order)
    m2 = maxwell_m2(W)
    print(f"M2 nodes: {len(m2)}, smallest radius {m2.radii.min() / math.pi:.4f} pi")
    radii = np.arange(0.4, 1.31, 0.05) * math.pi
    rows = stage_report(W, radii, probes=a.probes)
    print(" R/pi   M2   nu   M3")
    for r in rows:
        print(f"{r.radius / math.pi:5.2f} {r.m2_count:4d} {r.max_nu:4d} {r.m3_count:4d}")
    if a.out:
        with open(a.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0].to_dict()))
            w.writeheader()
            for r in rows:
                w.writerow(r.to_dict())


if __name__ == "__main__":
    main()
