"""Do the qualitative conclusions survive a change of the relaxation eps?

For eps in {0.2, 0.1, 0.05} this reruns
  * the S-curve orientation-assignment comparison (cusp counts per assignment);
  * the uniform-cost M2 onset radius and the M3 proxy at 1.2 pi, on a grid
    coarser than the acceptance grid (h = 0.15) to keep the run short.

    python scripts/eps_stability.py
"""

import math
import time

from srtrack.cost import CostParams, image_to_cost
from srtrack.fields import unfold_to_se2
from srtrack.geometry import MetricParams
from srtrack.maxwell import m3_proxy, maxwell_m2, uniform_solve
from srtrack.phantoms import phantom, scurve_points
from srtrack.tracker import compare_modes


def endpoints(size=64):
    pts = scurve_points(size)
    n = len(pts)
    a, b = int(0.03 * n), int(0.97 * n)

    def ori(i, j):
        d = pts[j] - pts[i]
        return math.atan2(d[1], d[0])

    return (*pts[a], ori(a, a + 20)), (*pts[b], ori(b - 20, b))


def main():
    cost = unfold_to_se2(image_to_cost(phantom("scurve", 64), CostParams()))
    print(" eps   SE(2) cusps     PT cusps   M2 onset/pi   M3@1.2pi   time")
    for eps in (0.2, 0.1, 0.05):
        t0 = time.perf_counter()
        res = compare_modes(cost, MetricParams(0.01, eps), endpoints())
        W = uniform_solve(4.05, 0.15, 48, eps=eps, order=2)
        onset = maxwell_m2(W).radii.min() / math.pi
        m3 = len(m3_proxy(W, 1.2 * math.pi))
        print(f"{eps:4.2f}   {str(res.se2_cusps):14s} {res.pt_cusps:4d}      {onset:8.3f}     {m3:6d}"
              f"   {time.perf_counter() - t0:5.1f}s", flush=True)


if __name__ == "__main__":
    main()
