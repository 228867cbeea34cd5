import math

import numpy as np
import pytest

from srtrack.eikonal import (
    EikonalProblem,
    Mode,
    Scheme,
    bench_pt_vs_se2,
    default_tol,
    quotient_tolerance,
    residual,
    residual_stats,
    selling_stencils,
    solve,
)
from srtrack.errors import DomainError, NotConvergedError
from srtrack.fields import FieldKind, GridSpec, ScalarField3, fold_to_projective
from srtrack.geometry import MetricParams

UNIT = MetricParams(1.0, 0.1)


def uniform(n=21, h=0.1, nt=16, period=2 * math.pi):
    return ScalarField3.constant(GridSpec.centered(n, h, nt, period), 1.0)


def test_seed_is_zero_and_values_nonnegative():
    rng = np.random.default_rng(0)
    spec = GridSpec.centered(17, 0.2, 8, math.pi)
    cost = ScalarField3(spec, rng.uniform(0.5, 2.0, spec.shape), "cost", 0.5)
    W, rep = solve(EikonalProblem(cost, UNIT, [(0.4, -0.2, 0.5)], Mode.PT))
    k, j, i = spec.nearest_node((0.4, -0.2, 0.5))
    assert W.data[k, j, i] == 0.0
    assert np.all(W.data >= 0) and np.isfinite(W.data).all()
    assert np.count_nonzero(W.data == 0) == 1
    assert rep.converged and rep.final_residual < default_tol(spec)


def test_monotone_iterations():
    prob = EikonalProblem(uniform(), UNIT, [(0, 0, 0)], Mode.SE2)
    prev = None
    for m in range(1, 5):
        W, _ = solve(prob, max_iter=m, strict=False)
        if prev is not None:
            assert np.all(W.data <= prev)
        prev = W.data


def test_not_converged_carries_partial_field():
    prob = EikonalProblem(uniform(), UNIT, [(0, 0, 0)], Mode.SE2)
    with pytest.raises(NotConvergedError, match="not converged") as ei:
        solve(prob, max_iter=1)
    assert ei.value.field is not None and ei.value.report.iterations == 1


def test_problem_validation():
    spec = GridSpec.centered(9, 0.1, 8)
    with pytest.raises(DomainError):
        EikonalProblem(ScalarField3.constant(spec, 1.0), UNIT, [(0, 0, 0)], Mode.PT)
    with pytest.raises(DomainError):
        EikonalProblem(ScalarField3.constant(spec, 1.0, "score"), UNIT, [(0, 0, 0)], Mode.SE2)
    with pytest.raises(DomainError):
        EikonalProblem(ScalarField3.constant(spec, 1.0), UNIT, [], Mode.SE2)
    prob = EikonalProblem(ScalarField3.constant(spec, 1.0), MetricParams(1.0, 0.0), [(0, 0, 0)], Mode.SE2)
    with pytest.raises(DomainError):
        solve(prob)
    prob = EikonalProblem(ScalarField3.constant(spec, 1.0), UNIT, [(0, 0, 0)], Mode.SE2)
    with pytest.raises(DomainError):
        solve(prob, tol=0.0)


def test_residual_of_zero_field_is_one():
    prob = EikonalProblem(uniform(), UNIT, [(0, 0, 0)], Mode.SE2)
    r = residual(ScalarField3(prob.spec, np.zeros(prob.spec.shape)), prob).data
    off = ~prob.frozen_mask()
    assert np.allclose(r[off], 1.0)
    assert np.all(r[~off] == 0)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_converged_residual_below_tol(scheme):
    prob = EikonalProblem(uniform(), UNIT, [(0, 0, 0)], Mode.SE2, scheme)
    tol = 1e-8
    W, _ = solve(prob, tol=tol)
    st = residual_stats(W, prob)
    assert st["max"] <= 10 * tol


def test_straight_line_distance():
    # along x with xi = 1 the exact distance is |x|
    prob = EikonalProblem(uniform(41, 0.1, 16), UNIT, [(0, 0, 0)], Mode.SE2)
    W, _ = solve(prob)
    xs = W.spec.xs
    row = W.data[0, 20, 20:]
    assert np.allclose(row, xs[20:], atol=1e-9)


def test_quotient_identity_small():
    cost = uniform(21, 0.1, 16)
    se2, _ = solve(EikonalProblem(cost, UNIT, [(0, 0, 0)], Mode.SE2))
    pt, _ = solve(EikonalProblem(fold_to_projective(cost), UNIT, [(0, 0, 0)], Mode.PT))
    diff = np.max(np.abs(fold_to_projective(se2).data - pt.data))
    assert diff <= quotient_tolerance(cost.spec, UNIT, cost)


def test_pure_rotation_from_above(small_uniform_pt):
    _, W, _ = small_uniform_pt
    s = W.spec
    th = s.thetas
    exact = np.minimum(th, math.pi - th)
    col = W.data[:, 16, 16]
    assert np.all(col >= exact - 1e-12)
    assert np.all(col - exact <= 3 * s.htheta)


def test_parallel_matches_sequential():
    prob = EikonalProblem(uniform(15, 0.2, 8), UNIT, [(0, 0, 0)], Mode.SE2)
    a, _ = solve(prob, tol=1e-12)
    b, rb = solve(prob, tol=1e-12, parallel=True, max_iter=2000)
    assert np.allclose(a.data, b.data, atol=1e-9)
    c, _ = solve(prob, tol=1e-12, parallel=True, max_iter=2000)
    assert np.array_equal(b.data, c.data)


def test_sequential_bit_identical():
    prob = EikonalProblem(uniform(), UNIT, [(0.1, 0.2, 1.0)], Mode.SE2)
    assert np.array_equal(solve(prob)[0].data, solve(prob)[0].data)


def test_order_two_requires_selling():
    prob = EikonalProblem(uniform(), UNIT, [(0, 0, 0)], Mode.SE2, Scheme.FRAME)
    with pytest.raises(DomainError):
        solve(prob, order=2)


def test_order_two_stays_close_to_first_order():
    cost = uniform(21, 0.1, 32, math.pi)
    prob = EikonalProblem(cost, UNIT, [(0, 0, 0)], Mode.PT)
    W1, _ = solve(prob)
    W2, rep = solve(prob, order=2)
    assert rep.converged and rep.iterations > 1
    assert np.max(np.abs(W1.data - W2.data)) <= 2 * cost.spec.h_max
    th = cost.spec.thetas
    assert np.allclose(W2.data[:, 10, 10], np.minimum(th, math.pi - th), atol=1e-12)


def test_selling_stencil_reproduces_tensor():
    spec = GridSpec.centered(5, 0.5, 8)
    offs, rho, at = selling_stencils(spec, 0.7, 0.1)
    S = np.diag([1 / spec.hx, 1 / spec.hy])
    for k, th in enumerate(spec.thetas):
        n = np.array([math.cos(th), math.sin(th)])
        p = np.array([-n[1], n[0]])
        D = S @ ((np.outer(n, n) + 0.01 * np.outer(p, p)) / 0.49) @ S
        rebuilt = sum(r * np.outer(e, e) for r, e in zip(rho[k], offs[k]))
        assert np.allclose(rebuilt, D, rtol=1e-10)
        assert np.all(rho[k] >= 0)
    assert at == pytest.approx(1 / spec.htheta**2)


def test_bench_record():
    cost = ScalarField3.constant(GridSpec.centered(15, 0.2, 16), 1.0)
    rec = bench_pt_vs_se2(cost, UNIT, repeats=2)
    assert rec.discrepancy <= rec.tolerance
    assert rec.se2_time > 0 and rec.pt_time > 0
    assert set(rec.to_dict()) >= {"ratio", "discrepancy", "se2_iterations", "pt_iterations"}
    with pytest.raises(DomainError):
        bench_pt_vs_se2(cost, UNIT, repeats=0)


def test_value_kind():
    W, _ = solve(EikonalProblem(uniform(), UNIT, [(0, 0, 0)], Mode.SE2))
    assert W.kind is FieldKind.VALUE
