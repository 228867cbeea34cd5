"""Tracking consistency under grid refinement, with a curve-shortening oracle.

For each grid the uniform-cost PT map from e is solved, 20 random starts are
backtracked, and three numbers are reported per start:

* (L - W) / W, the tracked length against the map value;
* (W - d) / d, where d is the length of the tracked curve after direct
  minimisation of its discretised metric length with fixed endpoints.

d is an upper bound of the true distance, so a positive (W - d) / d shows
that W overestimates the distance by at least that much. The gap shrinks
slowly with h, which is what limits |L - W| / W on coarse grids.

    python scripts/tracking_refinement.py [--fine] [--no-oracle]
"""

import argparse
import math
import time

import numpy as np
from scipy.optimize import minimize

from srtrack.eikonal import EikonalProblem, Mode, solve
from srtrack.fields import GridSpec, ScalarField3
from srtrack.geometry import MetricParams
from srtrack.tracker import backtrack

XI, EPS = 1.0, 0.1
METRIC = MetricParams(XI, EPS)


def _pieces(P):
    d = np.diff(P, axis=0)
    th = 0.5 * (P[1:, 2] + P[:-1, 2])
    c, s = np.cos(th), np.sin(th)
    return d, c, s, d[:, 0] * c + d[:, 1] * s, -d[:, 0] * s + d[:, 1] * c


def polyline_length(P):
    d, _, _, a1, a3 = _pieces(P)
    return float(np.sum(np.sqrt(XI**2 * a1**2 + d[:, 2] ** 2 + (XI / EPS) ** 2 * a3**2 + 1e-30)))


def _length_grad(P):
    d, c, s, a1, a3 = _pieces(P)
    k3 = (XI / EPS) ** 2
    L = np.sqrt(XI**2 * a1**2 + d[:, 2] ** 2 + k3 * a3**2 + 1e-30)
    gdx = (XI**2 * a1 * c - k3 * a3 * s) / L
    gdy = (XI**2 * a1 * s + k3 * a3 * c) / L
    gdt = d[:, 2] / L
    gth = (XI**2 - k3) * a1 * a3 / L
    G = np.zeros_like(P)
    G[1:, 0] += gdx
    G[:-1, 0] -= gdx
    G[1:, 1] += gdy
    G[:-1, 1] -= gdy
    G[1:, 2] += gdt + 0.5 * gth
    G[:-1, 2] += -gdt + 0.5 * gth
    return G


def shorten(P0, n=200):
    """Minimise the polyline metric length with both endpoints held fixed."""
    s = np.linspace(0, len(P0) - 1, n)
    P = np.stack([np.interp(s, np.arange(len(P0)), P0[:, k]) for k in range(3)], 1)
    a, b = P[0].copy(), P[-1].copy()

    def f(z):
        Q = np.vstack([a, z.reshape(-1, 3), b])
        return polyline_length(Q), _length_grad(Q)[1:-1].ravel()

    r = minimize(f, P[1:-1].ravel(), jac=True, method="L-BFGS-B",
                 options=dict(maxiter=20000, maxfun=100000, ftol=1e-15, gtol=1e-10))
    return float(r.fun)


def starts(W, count=20, seed=1):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        q = (rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5), rng.uniform(0, math.pi))
        if 0.5 < W.sample(q) < 2.8:
            out.append(q)
    return out


def study(n, h, nt, order, oracle):
    spec = GridSpec.centered(n, h, nt, math.pi)
    t0 = time.perf_counter()
    W, _ = solve(EikonalProblem(ScalarField3.constant(spec, 1.0), METRIC, [(0, 0, 0)], Mode.PT), order=order)
    t_solve = time.perf_counter() - t0
    errs, gaps = [], []
    for q in starts(W):
        w = W.sample(q)
        c = backtrack(W, METRIC, q)
        errs.append((c.total_length - w) / w)
        if oracle:
            th = np.unwrap(c.theta, period=math.pi)
            P = np.stack([c.x, c.y, th], 1)
            P[-1] = (0.0, 0.0, round(P[-1, 2] / math.pi) * math.pi)
            d = shorten(P)
            gaps.append((w - d) / d)
    e = np.abs(errs)
    line = (f"{n:4d} x {n:4d} x {nt:4d}  h={h:<5} order {order}  solve {t_solve:6.1f}s  "
            f"|L-W|/W: max {e.max():.3f} mean {e.mean():.3f} within 2%: {int(np.sum(e <= 0.02)):2d}/20")
    if oracle:
        g = np.array(gaps)
        line += f"  (W-d)/d: min {g.min():+.3f} mean {g.mean():+.3f} max {g.max():+.3f}"
    print(line, flush=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--fine", action="store_true", help="also run the 128-node grids (slow)")
    ap.add_argument("--no-oracle", action="store_true", help="skip the curve-shortening oracle")
    a = ap.parse_args()
    grids = [(64, 0.1, 32, 1), (64, 0.1, 32, 2), (64, 0.1, 64, 2)]
    if a.fine:
        grids += [(128, 0.05, 64, 2), (128, 0.05, 128, 2)]
    for g in grids:
        study(*g, oracle=not a.no_oracle)


if __name__ == "__main__":
    main()
