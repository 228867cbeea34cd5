"""Wall time of the two-seed SE(2) solve against the single-seed projective solve.

Runs the benchmark on the S-curve phantom cost at several image sizes and
prints the time ratio and the folded discrepancy.

    python scripts/bench_speedup.py [--sizes 64 96 128] [--repeats 2]
"""

import argparse

from srtrack.cost import CostParams, image_to_cost
from srtrack.eikonal import bench_pt_vs_se2
from srtrack.fields import unfold_to_se2
from srtrack.geometry import MetricParams
from srtrack.phantoms import phantom


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 96, 128])
    ap.add_argument("--ntheta", type=int, default=32, help="orientations over [0, pi)")
    ap.add_argument("--repeats", type=int, default=2)
    a = ap.parse_args()
    print(" size   SE(2) s    PT s   ratio  iters  discrepancy")
    for n in a.sizes:
        cost = unfold_to_se2(image_to_cost(phantom("scurve", n), CostParams(ntheta=a.ntheta)))
        c = n / 2
        rec = bench_pt_vs_se2(cost, MetricParams(0.01, 0.1, cost), seed=(c, c, 0.0), repeats=a.repeats)
        print(f"{n:5d} {rec.se2_time:9.2f} {rec.pt_time:7.2f} {rec.ratio:7.3f} "
              f"{rec.se2_iterations:3d}/{rec.pt_iterations:<3d} {rec.discrepancy:11.2e}")


if __name__ == "__main__":
    main()
