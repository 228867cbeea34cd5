"""Distance maps for the data-driven (ε-relaxed) sub-Riemannian metric.

The eikonal equation solved at every non-seed node is

    (A1 W)^2 / ξ^2 + (A2 W)^2 + ε^2 (A3 W)^2 / ξ^2 = C^2

with a monotone upwind discretisation iterated by Gauss-Seidel sweeps in all
8 axis orderings until the sup-norm change per cycle falls below ``tol``.
Two stencils are available (see ``_kernels``): the default adaptive stencil
decomposes the dual metric of each θ-slab into grid offsets, and the
frame-aligned one interpolates along ±A1, ±A3. On a π-periodic grid the
periodic θ axis itself enforces W(x, y, π) = W(x, y, 0).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from srtrack import _kernels
from srtrack.errors import DomainError, NotConvergedError
from srtrack.fields import FieldKind, GridSpec, ScalarField3, fold_to_projective
from srtrack.geometry import MetricParams

log = logging.getLogger(__name__)


class Mode(str, Enum):
    SE2 = "se2"
    PT = "pt"


class Scheme(str, Enum):
    FRAME = "frame"
    SELLING = "selling"


@dataclass
class EikonalProblem:
    cost: ScalarField3
    metric: MetricParams
    seeds: list
    mode: Mode = Mode.PT
    scheme: Scheme = Scheme.SELLING

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.scheme = Scheme(self.scheme)
        if self.cost.kind is not FieldKind.COST:
            raise DomainError("eikonal problem needs a cost field")
        if not np.all(self.cost.data > 0):
            raise DomainError("non-positive cost sample")
        if self.mode is Mode.PT and not self.cost.spec.is_projective:
            raise DomainError("PT mode needs a pi-periodic cost field")
        if self.mode is Mode.SE2 and self.cost.spec.is_projective:
            raise DomainError("SE2 mode needs a 2pi-periodic cost field")
        if not self.seeds:
            raise DomainError("at least one seed is required")
        self.seed_nodes = sorted({self.cost.spec.nearest_node(tuple(s)) for s in self.seeds})

    @property
    def spec(self) -> GridSpec:
        return self.cost.spec

    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.spec.shape, dtype=np.bool_)
        for k, j, i in self.seed_nodes:
            mask[k, j, i] = True
        return mask

    def kernel_args(self):
        s = self.spec
        th = s.thetas
        xi, eps = self.metric.xi, self.metric.eps
        if self.scheme is Scheme.SELLING:
            return selling_stencils(s, xi, eps)
        return (np.cos(th), np.sin(th), min(s.hx, s.hy), s.hx, s.hy, s.htheta,
                1.0 / xi**2, 1.0, eps**2 / xi**2)

    def kernels(self):
        if self.scheme is Scheme.SELLING:
            return (_kernels.sweep_cycle_selling, _kernels.jacobi_step_selling,
                    _kernels.hamiltonian_selling)
        return (_kernels.sweep_cycle, _kernels.jacobi_step, _kernels.hamiltonian)


def selling_stencils(spec: GridSpec, xi: float, eps: float):
    """Per-slab offsets and weights of the spatial dual metric, in index units.

    The dual metric (cost factored out) is (n n^T + ε² n⊥ n⊥^T) / ξ² in space
    and 1 along θ, with n = (cos θ, sin θ).
    """
    nt = spec.ntheta
    offs = np.zeros((nt, 3, 2), dtype=np.int64)
    rho = np.zeros((nt, 3))
    S = np.diag([1.0 / spec.hx, 1.0 / spec.hy])
    for k, th in enumerate(spec.thetas):
        n = np.array([math.cos(th), math.sin(th)])
        p = np.array([-n[1], n[0]])
        D = (np.outer(n, n) + eps**2 * np.outer(p, p)) / xi**2
        rho[k], offs[k] = _kernels.selling_2d(S @ D @ S)
    return offs, rho, 1.0 / spec.htheta**2


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    wall_time: float
    converged: bool = True
    changes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "final_residual": self.final_residual,
                "wall_time": self.wall_time, "converged": self.converged}


def default_tol(spec: GridSpec) -> float:
    return 1e-8 * spec.diameter


def solve(prob: EikonalProblem, tol: float | None = None, max_iter: int = 200,
          parallel: bool = False, strict: bool = True, order: int = 1) -> tuple[ScalarField3, SolveReport]:
    """Compute the distance map of ``prob``.

    ``final_residual`` in the report is the sup-norm change of the last cycle.
    With ``strict`` a non-converged run raises :class:`NotConvergedError`
    carrying the partial field and the report.

    ``order=2`` (adaptive stencil only) follows the monotone first-order solve
    with Gauss-Seidel cycles of the second-order one-sided scheme. That phase is
    not monotone, so values may rise as well as fall.
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    if order == 2 and prob.scheme is not Scheme.SELLING:
        raise DomainError("order 2 needs the selling scheme")
    if tol is None:
        tol = default_tol(prob.spec)
    if not tol > 0:
        raise DomainError("tol must be positive")
    if prob.metric.eps <= 0:
        raise DomainError("the solver needs eps > 0")
    W = np.full(prob.spec.shape, np.inf)
    frozen = prob.frozen_mask()
    W[frozen] = 0.0
    C = prob.cost.data
    args = prob.kernel_args()
    sweep, jacobi, _ = prob.kernels()
    changes = []
    t0 = time.perf_counter()
    it = 0
    change = np.inf
    if parallel:
        buf = np.empty_like(W)
    while it < max_iter:
        if parallel:
            change = jacobi(W, buf, C, frozen, *args)
            W, buf = buf, W
        else:
            change = sweep(W, C, frozen, *args)
        it += 1
        changes.append(float(change))
        if change < tol:
            break
    if order == 2 and change < tol:
        first = it
        while it < first + max_iter:
            change = _kernels.sweep_cycle_o2(W, C, frozen, *args)
            it += 1
            changes.append(float(change))
            if change < tol:
                break
    wall = time.perf_counter() - t0
    converged = bool(change < tol)
    report = SolveReport(it, float(change), wall, converged, changes)
    out = ScalarField3(prob.spec, W, FieldKind.VALUE)
    log.debug("eikonal solve: %d cycles, change %.3g, %.2fs", it, change, wall)
    if not converged and strict:
        raise NotConvergedError(f"not converged after {it} cycles (change {change:.3g} > tol {tol:.3g})",
                                out, report)
    return out, report


def residual(W: ScalarField3, prob: EikonalProblem) -> ScalarField3:
    """Per-node relative residual of the upwind Hamiltonian; NaN at unreached nodes."""
    if W.spec != prob.spec:
        raise DomainError("W is not defined on the problem grid")
    ham = prob.kernels()[2]
    r = ham(np.ascontiguousarray(W.data), prob.cost.data, prob.frozen_mask(), *prob.kernel_args())
    return ScalarField3(prob.spec, r, FieldKind.SCORE)


def residual_stats(W: ScalarField3, prob: EikonalProblem) -> dict:
    r = residual(W, prob).data
    off = ~prob.frozen_mask() & np.isfinite(r)
    vals = r[off]
    return {"median": float(np.median(vals)), "max": float(np.max(vals)), "mean": float(np.mean(vals))}


@dataclass
class BenchRecord:
    se2_time: float
    pt_time: float
    se2_iterations: int
    pt_iterations: int
    discrepancy: float
    tolerance: float

    @property
    def ratio(self) -> float:
        return self.pt_time / self.se2_time

    def to_dict(self) -> dict:
        return {"se2_time": self.se2_time, "pt_time": self.pt_time, "ratio": self.ratio,
                "se2_iterations": self.se2_iterations, "pt_iterations": self.pt_iterations,
                "discrepancy": self.discrepancy, "tolerance": self.tolerance}


def quotient_tolerance(spec: GridSpec, metric: MetricParams, cost: ScalarField3) -> float:
    """3 h max(C) max(ξ, 1): the allowed gap between PT and folded SE(2) maps."""
    return 3.0 * spec.h_max * float(np.max(cost.data)) * max(metric.xi, 1.0)


def bench_pt_vs_se2(cost_2pi: ScalarField3, metric: MetricParams, tol: float | None = None,
                    seed=(0.0, 0.0, 0.0), max_iter: int = 200, repeats: int = 1) -> BenchRecord:
    """Time a two-seed SE(2) solve against the single-seed PT solve on the folded grid.

    With ``repeats`` > 1 each solve is run that many times and the fastest
    wall time is kept, which damps scheduler noise on shared machines.
    """
    if repeats < 1:
        raise DomainError("repeats must be positive")
    cost_pt = fold_to_projective(cost_2pi)
    x, y, th = seed
    se2 = EikonalProblem(cost_2pi, metric, [(x, y, th), (x, y, th + math.pi)], Mode.SE2)
    pt = EikonalProblem(cost_pt, metric, [(x, y, th)], Mode.PT)
    _warmup()
    t_se2 = t_pt = math.inf
    for _ in range(repeats):
        W_se2, rep_se2 = solve(se2, tol, max_iter)
        W_pt, rep_pt = solve(pt, tol, max_iter)
        t_se2 = min(t_se2, rep_se2.wall_time)
        t_pt = min(t_pt, rep_pt.wall_time)
    folded = fold_to_projective(W_se2)
    fin = np.isfinite(folded.data) & np.isfinite(W_pt.data)
    disc = float(np.max(np.abs(folded.data[fin] - W_pt.data[fin]))) if fin.any() else 0.0
    return BenchRecord(t_se2, t_pt, rep_se2.iterations, rep_pt.iterations,
                       disc, quotient_tolerance(cost_2pi.spec, metric, cost_2pi))


_warm = False


def _warmup():
    """Trigger JIT compilation outside any timed region."""
    global _warm
    if _warm:
        return
    spec = GridSpec(5, 5, 4, -2, 2, -2, 2)
    for scheme in Scheme:
        prob = EikonalProblem(ScalarField3.constant(spec, 1.0), MetricParams(1.0, 0.1), [(0, 0, 0)],
                              Mode.SE2, scheme)
        solve(prob, tol=1e-3, max_iter=2, strict=False, order=2 if scheme is Scheme.SELLING else 1)
    _warm = True
