"""Numerical probes of SR spheres and Maxwell strata for uniform cost.

Everything here reads a converged distance map from the identity e and never
modifies it. The closed-form strata of the exact SR problem are not used;
M2 is detected by the antipodal equality W(g) = W(g ⊙ (0, 0, π)), M3 through
the θ = 0 slice of the projective sphere, and multiplicity by clustering
backtracked minimizers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from srtrack.eikonal import EikonalProblem, Mode, solve
from srtrack.errors import DomainError, InconclusiveError, StalledError
from srtrack.fields import FieldKind, GridSpec, ScalarField3, fold_to_projective
from srtrack.geometry import MetricParams, ProjectivePoint
from srtrack.tracker import GeodesicCurve, backtrack, detect_cusps

UNIT_METRIC = MetricParams(xi=1.0, eps=0.1, cost=1.0)


@dataclass
class SphereSample:
    radius: float
    points: list
    band: float
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class MaxwellStratumEstimate:
    stratum: str
    points: list
    radii: np.ndarray
    radius_range: tuple = (0.0, math.inf)

    def __len__(self) -> int:
        return len(self.points)

    def filter(self, lo: float, hi: float) -> "MaxwellStratumEstimate":
        keep = (self.radii >= lo) & (self.radii <= hi)
        return MaxwellStratumEstimate(self.stratum, [p for p, k in zip(self.points, keep) if k],
                                      self.radii[keep], (lo, hi))

    def write_csv(self, path) -> None:
        write_points_csv(path, self.points, self.radii)


def write_points_csv(path, points, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "theta", "W"])
        for p, v in zip(points, values):
            w.writerow([f"{c:.17g}" for c in (*p.as_tuple(), v)])


def uniform_solve(half_width: float = 4.0, h: float = 0.1, ntheta: int = 64, eps: float = 0.1,
                  order: int = 2, tol: float | None = None) -> ScalarField3:
    """SE(2) distance map from e for C = 1, ξ = 1 on a square centred at the origin."""
    n = 2 * int(round(half_width / h)) + 1
    spec = GridSpec.centered(n, h, ntheta)
    prob = EikonalProblem(ScalarField3.constant(spec, 1.0), MetricParams(1.0, eps), [(0, 0, 0)], Mode.SE2)
    W, _ = solve(prob, tol=tol, order=order)
    return W


def _points(spec: GridSpec, idx: np.ndarray) -> list:
    k, j, i = idx
    xs, ys, th = spec.xs, spec.ys, spec.thetas
    return [ProjectivePoint(float(xs[b]), float(ys[a]), float(th[c])) for c, a, b in zip(k, j, i)]


def extract_sphere(W: ScalarField3, R: float, band: float | None = None) -> SphereSample:
    """All nodes with |W - R| <= band (default 1.5 h)."""
    if band is None:
        band = 1.5 * W.spec.h_max
    d = W.data
    mask = np.isfinite(d) & (np.abs(d - R) <= band)
    idx = np.nonzero(mask)
    return SphereSample(float(R), _points(W.spec, idx), float(band), d[idx])


def _antipodal(W: ScalarField3) -> np.ndarray:
    s = W.spec
    if s.is_projective:
        raise DomainError("M2 detection needs a 2pi-periodic SE(2) map")
    if s.ntheta % 2:
        raise DomainError("ntheta must be even")
    return np.roll(W.data, -s.ntheta // 2, axis=0)


def maxwell_m2(W_se2: ScalarField3, tol: float | None = None) -> MaxwellStratumEstimate:
    """Nodes where W(g) and W(g ⊙ (0, 0, π)) agree within ``tol`` (default h).

    Each node is reported once, as the projective point of g, with the mean of
    the two values as radius.
    """
    if tol is None:
        tol = W_se2.spec.h_max
    d = W_se2.data
    a = _antipodal(W_se2)
    half = W_se2.spec.ntheta // 2
    mask = np.isfinite(d) & np.isfinite(a) & (np.abs(d - a) <= tol)
    mask[half:] = False  # g and its antipode project to the same point
    idx = np.nonzero(mask)
    radii = 0.5 * (d[idx] + a[idx])
    return MaxwellStratumEstimate("M2", _points(W_se2.spec, idx), radii)


def m3_proxy(W_se2: ScalarField3, R: float, tol: float | None = None,
             band: float | None = None) -> list:
    """Projective sphere points on θ = 0 with (x, y) ≠ 0 whose two lifts are equidistant.

    The θ = π plane of SE(2) is identified with θ = 0 in the quotient, so
    equality there marks a Maxwell point of the projective problem off M2's
    generic locus.
    """
    s = W_se2.spec
    h = s.h_max
    tol = h if tol is None else tol
    band = 1.5 * h if band is None else band
    w0 = W_se2.data[0]
    wp = W_se2.data[s.ntheta // 2]
    wpt = np.minimum(w0, wp)
    X, Y = np.meshgrid(s.xs, s.ys)
    off_axis = (np.abs(X) > 0.5 * s.hx) | (np.abs(Y) > 0.5 * s.hy)
    mask = (np.isfinite(wpt) & off_axis & (np.abs(wpt - R) <= band)
            & (np.abs(w0 - wp) <= tol))
    j, i = np.nonzero(mask)
    return [ProjectivePoint(float(s.xs[b]), float(s.ys[a]), 0.0) for a, b in zip(j, i)]


def _resample(c: GeodesicCurve, n: int) -> np.ndarray:
    t = np.asarray(c.t, dtype=float)
    span = t[-1] - t[0]
    s = (t - t[0]) / span if span > 0 else np.linspace(0, 1, len(t))
    u = np.linspace(0.0, 1.0, n)
    return np.stack([np.interp(u, s, a) for a in (c.x, c.y, c.theta)], axis=1)


def _curve_distance(a: np.ndarray, b: np.ndarray, cell: np.ndarray, period: float) -> float:
    d = np.abs(a - b)
    d[:, 2] = np.mod(d[:, 2], period)
    d[:, 2] = np.minimum(d[:, 2], period - d[:, 2])
    return float(np.max(np.sqrt(((d / cell) ** 2).sum(axis=1))))


def multiplicity_probe(W: ScalarField3, q, n_perturb: int = 16, cluster_tol: float = 4.0,
                       metric: MetricParams = UNIT_METRIC, seed: int = 0,
                       n_resample: int = 64) -> int:
    """Lower-bound estimate of the number of distinct minimizers reaching ``q``.

    Backtracks from ``n_perturb`` points displaced by up to one cell along each
    axis, keeps curves whose length is within 3h of the shortest, and counts
    single-linkage clusters at maximal pointwise distance ``cluster_tol`` (in
    cells, after resampling by normalised length).
    """
    s = W.spec
    if n_perturb < 1:
        raise DomainError("n_perturb must be positive")
    q = np.asarray(q.as_tuple() if hasattr(q, "as_tuple") else q, dtype=float)
    cell = np.array([s.hx, s.hy, s.htheta])
    rng = np.random.default_rng(seed)
    curves = []
    for _ in range(n_perturb):
        p = q + rng.uniform(-1.0, 1.0, 3) * cell
        if not s.contains(p[0], p[1]):
            continue
        try:
            curves.append(backtrack(W, metric, p))
        except (StalledError, DomainError):
            continue
    if not curves:
        raise InconclusiveError("probe inconclusive: every backtrack stalled")
    lengths = np.array([c.total_length for c in curves])
    keep = [c for c, L in zip(curves, lengths) if L <= lengths.min() + 3 * s.h_max]
    if len(keep) == 1:
        return 1
    pts = [_resample(c, n_resample) for c in keep]
    n = len(pts)
    condensed = [_curve_distance(pts[a], pts[b], cell, s.theta_period)
                 for a in range(n) for b in range(a + 1, n)]
    labels = fcluster(linkage(np.array(condensed), method="single"), cluster_tol, criterion="distance")
    return int(labels.max())


@dataclass
class StageRow:
    radius: float
    m2_present: bool
    m2_count: int
    max_nu: int
    m3_present: bool
    m3_count: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def stage_report(W_se2: ScalarField3, radii, probes: int = 3, band: float | None = None,
                 tol: float | None = None, seed: int = 0) -> list[StageRow]:
    """Stratum presence per radius: M2, the θ = 0 M3 proxy and the largest probed ν.

    ν is probed on the projective fold of ``W_se2`` at up to ``probes`` M2
    points of each sphere (1 when M2 is absent there).
    """
    s = W_se2.spec
    band = 1.5 * s.h_max if band is None else band
    m2 = maxwell_m2(W_se2, tol)
    W_pt = fold_to_projective(W_se2)
    rows = []
    for R in radii:
        sel = m2.filter(R - band, R + band)
        nu = 1
        if len(sel):
            order = np.argsort(np.abs(sel.radii - R), kind="stable")
            pick = order[np.linspace(0, len(order) - 1, min(probes, len(order))).astype(int)]
            for n in pick:
                try:
                    nu = max(nu, multiplicity_probe(W_pt, sel.points[n], seed=seed))
                except InconclusiveError:
                    pass
        m3 = m3_proxy(W_se2, R, tol, band)
        rows.append(StageRow(float(R), bool(len(sel)), len(sel), nu, bool(m3), len(m3)))
    return rows


def reachable_union(pred_R: Callable[[float, float, float], bool], q) -> bool:
    """Cuspless reachability in the projective bundle from the SE(2) set given by ``pred_R``."""
    if isinstance(q, ProjectivePoint):
        x, y, th = q.as_tuple()
    else:
        x, y, th = (float(v) for v in q)
    return bool(pred_R(x, y, th) or pred_R(x, y, th + math.pi)
                or pred_R(-x, y, -th) or pred_R(-x, y, -th + math.pi)
                or (x == 0 and y == 0))


class MinimizerReachable:
    """Default membership test for the forward-cuspless SE(2) set.

    (x, y, θ) is accepted when the minimizer from e, tracked on the SE(2)
    map, has forward spatial control u1 > 0 with no sign switch. This only
    sees minimizers, so it under-approximates the set.
    """

    def __init__(self, W_se2: ScalarField3, metric: MetricParams = UNIT_METRIC):
        if W_se2.spec.is_projective or W_se2.kind is not FieldKind.VALUE:
            raise DomainError("needs an SE(2) distance map")
        self.W = W_se2
        self.metric = metric

    def __call__(self, x: float, y: float, theta: float) -> bool:
        s = self.W.spec
        if not s.contains(x, y) or (x == 0 and y == 0):
            return False
        try:
            c = backtrack(self.W, self.metric, (x, y, theta))
        except (StalledError, DomainError):
            return False
        if len(c) < 3:
            return False
        fwd = c.reversed()
        if detect_cusps(fwd).count:
            return False
        return bool(np.median(fwd.u1) > 0)
