"""Geodesic backtracking on a distance map and cusp analysis of the result."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from srtrack.errors import DomainError, StalledError
from srtrack.fields import FieldKind, ScalarField3, cartesian_derivatives, interp3
from srtrack.geometry import MetricParams

DEFAULT_STEP = 0.4  # in grid cells
SEED_RADIUS = 1.5  # in grid cells
PATIENCE_CELLS = 10.0  # distance travelled without lowering W before giving up
SEED_PLATEAU = 0.02  # a stall with W below this fraction of W(start) counts as arrival
LENGTH_DELTA = 0.02


@dataclass
class GeodesicCurve:
    """Samples ordered along the backtracking, i.e. from the start point to the seed.

    ``t`` is cumulative metric length from the start; ``u1``/``u2`` are the
    frame coefficients of d(x, y, θ)/dt.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    total_length: float
    stalled: bool = False
    mode: str = ""

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self) -> list[tuple[float, ...]]:
        return list(zip(self.t, self.x, self.y, self.theta, self.u1, self.u2))

    @classmethod
    def from_positions(cls, t, x, y, theta, total_length: float | None = None, **kw) -> "GeodesicCurve":
        t, x, y, theta = (np.asarray(a, dtype=np.float64) for a in (t, x, y, theta))
        if len(t) >= 2:
            dx = np.gradient(x, t)
            dy = np.gradient(y, t)
            dth = np.gradient(theta, t)
        else:
            dx = dy = dth = np.zeros_like(t)
        u1 = dx * np.cos(theta) + dy * np.sin(theta)
        if total_length is None:
            total_length = float(t[-1] - t[0]) if len(t) else 0.0
        return cls(t, x, y, theta, u1, dth, total_length, **kw)

    def reversed(self) -> "GeodesicCurve":
        t = self.t[-1] - self.t[::-1]
        return GeodesicCurve(t, self.x[::-1].copy(), self.y[::-1].copy(), self.theta[::-1].copy(),
                             -self.u1[::-1], -self.u2[::-1], self.total_length, self.stalled, self.mode)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "theta", "u1", "u2"])
            for row in self.samples:
                w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def read_csv(cls, path) -> "GeodesicCurve":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t, x, y, th, u1, u2 = rows.T
        return cls(t, x, y, th, u1, u2, float(t[-1] - t[0]))


@dataclass
class CuspReport:
    cusp_times: list = field(default_factory=list)
    degenerate: bool = False

    @property
    def count(self) -> int:
        return len(self.cusp_times)


class _DescentField:
    """Interpolated normalised descent direction -G^{-1} dW on a sampled W.

    ``gradient="upwind"`` rebuilds -G^{-1} dW at every node from the solver's
    own one-sided differences (``scheme`` selects the stencil) and
    interpolates that vector field; ``"central"`` raises interpolated central
    differences of W instead.
    """

    def __init__(self, W: ScalarField3, metric: MetricParams, gradient: str = "upwind",
                 scheme: str = "selling"):
        self.W = W
        self.spec = W.spec
        self.metric = metric
        if isinstance(metric.cost, ScalarField3):
            cost = metric.cost
            if cost.spec.shape[1:] != self.spec.shape[1:]:
                raise DomainError("cost and distance map have different spatial grids")
            self.cost_field = cost
        else:
            self.cost_field = None
        s = self.spec
        self.cell = np.array([s.hx, s.hy, s.htheta])
        if gradient == "central":
            wx, wy, wt = cartesian_derivatives(W)
            self.grads = [np.nan_to_num(g, nan=0.0, posinf=0.0, neginf=0.0) for g in (wx, wy, wt)]
            self.flow = None
        elif gradient == "upwind":
            self.grads = None
            self.flow = self._upwind_flow(scheme)
        else:
            raise DomainError(f"unknown gradient mode {gradient!r}")

    def _upwind_flow(self, scheme: str):
        from srtrack import _kernels
        from srtrack.eikonal import Scheme, selling_stencils

        s = self.spec
        if self.cost_field is not None:
            if self.cost_field.spec.shape != s.shape:
                raise DomainError("cost and distance map have different grids")
            C = self.cost_field.data
        else:
            C = np.full(s.shape, float(self.metric.cost))
        W = np.ascontiguousarray(self.W.data)
        xi, eps = self.metric.xi, self.metric.eps
        if Scheme(scheme) is Scheme.SELLING:
            offs, rho, at = selling_stencils(s, xi, eps)
            F = _kernels.upwind_flow_selling(W, C, offs, rho, at, s.hx, s.hy, s.htheta)
        else:
            th = s.thetas
            F = _kernels.upwind_flow_frame(W, C, np.cos(th), np.sin(th), min(s.hx, s.hy), s.hx, s.hy,
                                           s.htheta, 1.0 / xi**2, 1.0, eps**2 / xi**2)
        return [np.ascontiguousarray(F[..., n]) for n in range(3)]

    def cost(self, p) -> float:
        if self.cost_field is None:
            return float(self.metric.cost)
        return float(interp3(self.cost_field.data, self.cost_field.spec, [p[0]], [p[1]], [p[2]])[0])

    def value(self, p) -> float:
        return float(interp3(self.W.data, self.spec, [p[0]], [p[1]], [p[2]])[0])

    def _raise(self, p, gx, gy, gt) -> np.ndarray:
        c, s = math.cos(p[2]), math.sin(p[2])
        a1w = c * gx + s * gy
        a3w = -s * gx + c * gy
        C2 = self.cost(p) ** 2
        xi2 = self.metric.xi ** 2
        g1 = a1w / (xi2 * C2)
        g2 = gt / C2
        g3 = self.metric.eps**2 * a3w / (xi2 * C2)
        return np.array([g1 * c - g3 * s, g1 * s + g3 * c, g2])

    def gradient(self, p) -> np.ndarray:
        """Cartesian components of the ascent direction G^{-1} dW at ``p``."""
        if self.flow is not None:
            return -np.array([float(interp3(f, self.spec, [p[0]], [p[1]], [p[2]])[0]) for f in self.flow])
        gx, gy, gt = (float(interp3(g, self.spec, [p[0]], [p[1]], [p[2]])[0]) for g in self.grads)
        return self._raise(p, gx, gy, gt)

    def direction(self, p):
        v = -self.gradient(p)
        n = float(np.linalg.norm(v / self.cell))
        if not n > 1e-12:
            return None
        return v / n

    def length(self, a, b) -> float:
        """Metric length of the straight coordinate segment a -> b (midpoint rule)."""
        d = b - a
        mid = 0.5 * (a + b)
        c, s = math.cos(mid[2]), math.sin(mid[2])
        a1 = d[0] * c + d[1] * s
        a3 = -d[0] * s + d[1] * c
        xi, eps = self.metric.xi, self.metric.eps
        q = xi**2 * a1**2 + d[2] ** 2
        if eps > 0:
            q += (xi / eps) ** 2 * a3**2
        return self.cost(mid) * math.sqrt(q)


def _seed_nodes(W: ScalarField3) -> np.ndarray:
    k, j, i = np.nonzero(W.data == 0.0)
    s = W.spec
    return np.stack([s.x_min + i * s.hx, s.y_min + j * s.hy, k * s.htheta], axis=1)


def _cell_distance_to_seeds(p, seeds, spec) -> float:
    d = np.abs(seeds - p[None, :])
    d[:, 2] = np.mod(d[:, 2], spec.theta_period)
    d[:, 2] = np.minimum(d[:, 2], spec.theta_period - d[:, 2])
    d /= np.array([spec.hx, spec.hy, spec.htheta])
    return float(np.min(np.sqrt((d**2).sum(axis=1))))


def backtrack(W: ScalarField3, metric: MetricParams, start, step: float = DEFAULT_STEP,
              stop_radius: float = 0.0, seed_radius: float = SEED_RADIUS,
              max_steps: int | None = None, strict: bool = True, gradient: str = "upwind",
              scheme: str = "selling") -> GeodesicCurve:
    """Integrate the normalised descent field -G^{-1} dW with RK4 from ``start``.

    ``step`` is measured in grid cells. Integration stops once W drops below
    ``stop_radius`` or the curve comes within ``seed_radius`` cells of a seed;
    the nearest seed is then appended and the remaining distance W at the last
    sample is added to the length. θ is kept continuous (unwrapped).

    Integration steps are taken unconditionally, but a step is only kept as a
    sample when the interpolated W falls below every earlier sample, so W is
    strictly decreasing along the result. Lengths are measured between kept
    samples. Travelling ``PATIENCE_CELLS`` without a new minimum is a stall,
    unless W has already dropped below ``SEED_PLATEAU`` W(start); the curve is
    then closed at the seed as if it had arrived.
    """
    if W.kind is not FieldKind.VALUE:
        raise DomainError("backtracking needs a value field")
    field_ = _DescentField(W, metric, gradient, scheme)
    spec = W.spec
    p = np.array(start, dtype=np.float64)
    if not spec.contains(p[0], p[1]):
        raise DomainError(f"start {tuple(start)} outside the grid")
    seeds = _seed_nodes(W)
    if len(seeds) == 0:
        raise DomainError("distance map has no seed (no exact zero)")
    w = field_.value(p)
    if not np.isfinite(w):
        raise DomainError("start is not reachable (W = inf)")
    if max_steps is None:
        max_steps = int(20 * (spec.nx + spec.ny + spec.ntheta) / step)
    pts = [p.copy()]
    vals = [w]
    lens = [0.0]
    stalled = False
    reason = ""
    patience = int(math.ceil(PATIENCE_CELLS / step))
    last = p.copy()  # last retained sample
    idle = 0
    for _ in range(max_steps):
        if w < stop_radius or _cell_distance_to_seeds(p, seeds, spec) < seed_radius:
            break
        q = _rk4(field_, p, step)
        if q is None:
            stalled, reason = True, "gradient vanished"
            break
        q[0] = min(max(q[0], spec.x_min), spec.x_max)
        q[1] = min(max(q[1], spec.y_min), spec.y_max)
        p = q
        wq = field_.value(q)
        if wq < w:
            lens.append(lens[-1] + field_.length(last, q))
            last, w = q.copy(), wq
            pts.append(last)
            vals.append(w)
            idle = 0
        else:
            idle += 1
            if idle > patience:
                stalled, reason = True, "W did not decrease"
                break
    else:
        stalled, reason = True, "step budget exhausted"
    if stalled and reason != "gradient vanished" and w <= SEED_PLATEAU * vals[0]:
        # stuck on the flat, grid-scale basin around a point seed: close the curve there
        stalled = False
    p = last
    total = lens[-1]
    arr = np.array(pts)
    mode = "pt" if spec.is_projective else "se2"
    if stalled:
        curve = GeodesicCurve.from_positions(np.array(lens), arr[:, 0], arr[:, 1], arr[:, 2], total,
                                             stalled=True, mode=mode)
    else:
        # close the curve at the nearest seed, on the θ-lift closest to the current θ
        total += w
        d = np.abs(seeds[:, :2] - p[None, :2]).sum(axis=1)
        sd = seeds[np.argmin(d)].copy()
        per = spec.theta_period
        sd[2] = p[2] + ((sd[2] - p[2] + per / 2) % per - per / 2)
        if len(pts) == 1:
            arr = np.vstack([arr, sd])
            curve = GeodesicCurve.from_positions(np.array([0.0, total]), arr[:, 0], arr[:, 1],
                                                 arr[:, 2], total, mode=mode)
        else:
            curve = GeodesicCurve.from_positions(np.array(lens), arr[:, 0], arr[:, 1], arr[:, 2],
                                                 total, mode=mode)
            if np.any(sd != p):
                # the closing leg is a chord, not a descent step: reuse the last controls
                curve = GeodesicCurve(np.append(curve.t, total), np.append(curve.x, sd[0]),
                                      np.append(curve.y, sd[1]), np.append(curve.theta, sd[2]),
                                      np.append(curve.u1, curve.u1[-1]), np.append(curve.u2, curve.u2[-1]),
                                      total, mode=mode)
    if stalled and strict:
        raise StalledError(f"stalled ({reason}); likely a Maxwell point or seed plateau", curve)
    return curve


def _rk4(field_: _DescentField, p: np.ndarray, h: float):
    k1 = field_.direction(p)
    if k1 is None:
        return None
    k2 = field_.direction(p + 0.5 * h * k1)
    if k2 is None:
        return None
    k3 = field_.direction(p + 0.5 * h * k2)
    if k3 is None:
        return None
    k4 = field_.direction(p + h * k3)
    if k4 is None:
        return None
    return p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def default_zero_band(u1: np.ndarray) -> float:
    med = float(np.median(np.abs(u1))) if len(u1) else 0.0
    return max(0.05 * med, 1e-12)


def detect_cusps(c: GeodesicCurve, zero_band: float | None = None) -> CuspReport:
    """Sign switches of the spatial control u1.

    Samples with |u1| <= ``zero_band`` count as zero; a cusp is a change
    between strictly positive and strictly negative samples, located by
    linear interpolation between the two bracketing samples.
    """
    if len(c) < 3:
        raise DomainError("cusp detection needs at least 3 samples")
    u = np.asarray(c.u1)
    band = default_zero_band(u) if zero_band is None else zero_band
    sign = np.where(u > band, 1, np.where(u < -band, -1, 0))
    times = []
    last = None
    for idx in np.nonzero(sign)[0]:
        if last is not None and sign[idx] != sign[last]:
            t0, t1 = c.t[last], c.t[idx]
            u0, u1 = u[last], u[idx]
            times.append(float(t0 + (t1 - t0) * u0 / (u0 - u1)))
        last = idx
    zero = sign == 0
    longest = run = 0
    for z in zero:
        run = run + 1 if z else 0
        longest = max(longest, run)
    return CuspReport(times, bool(longest > 0.2 * len(u)))


@dataclass
class ModeComparison:
    """Four SE(2) orientation assignments against one projective track.

    ``se2_lengths[a]``/``se2_cusps[a]`` belong to assignment ``a`` = (start
    lift, end lift), each lift being 0 for θ as given and 1 for θ + π.
    """

    assignments: list
    se2_lengths: list
    se2_cusps: list
    pt_length: float
    pt_cusps: int
    tolerance: float
    se2_curves: list = field(default_factory=list, repr=False)
    pt_curve: GeodesicCurve | None = field(default=None, repr=False)

    @property
    def consistent(self) -> bool:
        return abs(self.pt_length - min(self.se2_lengths)) <= self.tolerance

    def to_dict(self) -> dict:
        return {"assignments": [list(a) for a in self.assignments], "se2_lengths": self.se2_lengths,
                "se2_cusps": self.se2_cusps, "pt_length": self.pt_length, "pt_cusps": self.pt_cusps,
                "tolerance": self.tolerance, "consistent": self.consistent}


def compare_modes(cost_2pi: ScalarField3, metric: MetricParams, endpoints, tol: float | None = None,
                  order: int = 1) -> ModeComparison:
    """Track p1 -> p0 in SE(2) for all antipodal assignments and once in PT.

    Two SE(2) solves (seed p0 and seed p0 ⊙ (0,0,π)) each serve both lifts of
    p1. The PT solve uses the folded cost. The metric's own cost entry is
    replaced by the matching cost field for each tracking.
    """
    from srtrack.eikonal import EikonalProblem, Mode, quotient_tolerance, solve
    from srtrack.fields import fold_to_projective

    (x0, y0, t0), (x1, y1, t1) = (tuple(map(float, p)) for p in endpoints)
    cost_pt = fold_to_projective(cost_2pi)
    m_se2 = MetricParams(metric.xi, metric.eps, cost_2pi)
    m_pt = MetricParams(metric.xi, metric.eps, cost_pt)
    assignments, lengths, cusps, curves = [], [], [], []
    for a in (0, 1):
        seed = (x0, y0, t0 + a * math.pi)
        W, _ = solve(EikonalProblem(cost_2pi, m_se2, [seed], Mode.SE2), tol, order=order)
        for b in (0, 1):
            c = backtrack(W, m_se2, (x1, y1, t1 + b * math.pi))
            assignments.append((a, b))
            lengths.append(c.total_length)
            cusps.append(detect_cusps(c).count)
            curves.append(c)
    W_pt, _ = solve(EikonalProblem(cost_pt, m_pt, [(x0, y0, t0)], Mode.PT), tol, order=order)
    c_pt = backtrack(W_pt, m_pt, (x1, y1, t1))
    return ModeComparison(assignments, lengths, cusps, c_pt.total_length, detect_cusps(c_pt).count,
                          quotient_tolerance(cost_2pi.spec, metric, cost_2pi), curves, c_pt)
