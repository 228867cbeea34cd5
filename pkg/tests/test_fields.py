import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srtrack.errors import (
    DomainError,
    FieldFormatError,
    IncompatibleGridsError,
    NotProjectiveCompatibleError,
    OutOfDomainError,
)
from srtrack.fields import (
    FieldKind,
    GridSpec,
    ScalarField3,
    fold_to_projective,
    frame_derivatives,
    parse_srf1,
    pointwise_min,
    read_srf1,
    unfold_to_se2,
    write_srf1,
)

SPEC = GridSpec(9, 7, 8, -1.0, 1.0, 0.0, 3.0)


def rand_field(rng, spec=SPEC, kind="value"):
    return ScalarField3(spec, rng.uniform(0, 5, spec.shape), kind)


def test_grid_invariants():
    assert np.allclose(SPEC.thetas, np.arange(8) * 2 * math.pi / 8)
    for bad in [dict(nx=2), dict(ntheta=3), dict(x_max=-1.0), dict(theta_period=1.0)]:
        kw = dict(nx=9, ny=7, ntheta=8, x_min=-1.0, x_max=1.0, y_min=0.0, y_max=3.0)
        kw.update(bad)
        with pytest.raises(DomainError):
            GridSpec(**kw)


def test_layout_is_x_fastest(rng):
    f = rand_field(rng)
    raw = f.data.tobytes()
    assert struct.unpack_from("<d", raw, 8)[0] == f.data[0, 0, 1]


def test_sample_exact_at_nodes(rng):
    f = rand_field(rng)
    for k, j, i in [(0, 0, 0), (3, 2, 5), (7, 6, 8)]:
        assert f.sample(SPEC.node_coords(k, j, i)) == pytest.approx(f.data[k, j, i], abs=1e-14)


@given(st.floats(-1, 1), st.floats(0, 3), st.floats(-10, 10))
def test_constant_field_samples_constant(x, y, t):
    f = ScalarField3.constant(SPEC, 2.5)
    assert f.sample((x, y, t)) == pytest.approx(2.5)


def test_sample_wraps_theta(rng):
    f = rand_field(rng)
    h = SPEC.htheta
    x, y = SPEC.xs[3], SPEC.ys[2]
    expect = 0.5 * (f.data[-1, 2, 3] + f.data[0, 2, 3])
    assert f.sample((x, y, SPEC.theta_period - h / 2)) == pytest.approx(expect)
    assert f.sample((x, y, -h / 2)) == pytest.approx(expect)


def test_sample_out_of_domain():
    with pytest.raises(OutOfDomainError, match="out of domain"):
        ScalarField3.constant(SPEC, 1.0).sample((5.0, 0.0, 0.0))


def test_frame_derivatives_linear_field():
    f = ScalarField3.from_function(SPEC, lambda x, y, t: x + 0 * t, "score")
    for k in range(SPEC.ntheta):
        a1, a2, a3 = frame_derivatives(f, (k, 3, 4))
        th = SPEC.thetas[k]
        assert (a1, a2, a3) == pytest.approx((math.cos(th), 0.0, -math.sin(th)), abs=1e-12)


def test_frame_derivative_in_theta_away_from_seam():
    f = ScalarField3.from_function(SPEC, lambda x, y, t: t + 0 * x)
    assert frame_derivatives(f, (3, 3, 3))[1] == pytest.approx(1.0)


def test_frame_derivatives_second_order():
    errs = []
    hs = []
    for n in (11, 21, 41, 81):
        spec = GridSpec(n, n, 8, -1.0, 1.0, -1.0, 1.0)
        f = ScalarField3.from_function(spec, lambda x, y, t: np.sin(x) * np.cos(y) + 0 * t, "score")
        k, j, i = 1, n // 2 + n // 4, n // 4
        x, y, _ = spec.node_coords(k, j, i)
        th = spec.thetas[k]
        fx, fy = math.cos(x) * math.cos(y), -math.sin(x) * math.sin(y)
        exact = np.array([math.cos(th) * fx + math.sin(th) * fy, -math.sin(th) * fx + math.cos(th) * fy])
        got = np.array(frame_derivatives(f, (k, j, i)))[[0, 2]]
        errs.append(np.max(np.abs(got - exact)))
        hs.append(spec.hx)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


def test_pointwise_min(rng):
    f, g = rand_field(rng), rand_field(rng)
    inf = ScalarField3(SPEC, np.full(SPEC.shape, np.inf))
    assert np.array_equal(pointwise_min(f, f).data, f.data)
    assert np.array_equal(pointwise_min(f, inf).data, f.data)
    assert np.array_equal(pointwise_min(f, g).data, pointwise_min(g, f).data)
    h = rand_field(rng)
    assert np.array_equal(pointwise_min(pointwise_min(f, g), h).data, pointwise_min(f, pointwise_min(g, h)).data)


def test_pointwise_min_enumerated():
    spec = GridSpec(3, 3, 4, 0, 1, 0, 1)
    a = np.arange(36, dtype=float).reshape(spec.shape)
    b = 35 - a
    out = pointwise_min(ScalarField3(spec, a), ScalarField3(spec, b)).data
    for idx in np.ndindex(spec.shape):
        assert out[idx] == min(a[idx], b[idx])


def test_pointwise_min_rejects_other_grid(rng):
    other = GridSpec(9, 7, 8, -1.0, 1.0, 0.0, 4.0)
    with pytest.raises(IncompatibleGridsError, match="incompatible grids"):
        pointwise_min(rand_field(rng), rand_field(rng, other))


def test_fold_cost_is_first_half(rng):
    half = rng.uniform(1, 2, (4, 7, 9))
    f = ScalarField3(SPEC, np.concatenate([half, half]), "cost", 1.0)
    g = fold_to_projective(f)
    assert g.spec.theta_period == pytest.approx(math.pi) and g.spec.ntheta == 4
    assert np.array_equal(g.data, half)


def test_fold_rejects_asymmetric_cost(rng):
    f = ScalarField3(SPEC, rng.uniform(1, 2, SPEC.shape), "cost", 1.0)
    with pytest.raises(NotProjectiveCompatibleError, match="not projective-compatible"):
        fold_to_projective(f)


def test_fold_value_takes_min():
    f = ScalarField3.from_function(SPEC, lambda x, y, t: np.where(t < math.pi, t, 2 * math.pi - t) + 0 * x)
    g = fold_to_projective(f)
    th = g.spec.thetas[:, None, None]
    assert np.allclose(g.data, np.minimum(th, math.pi - th) + 0 * g.data)


def test_fold_unfold_idempotent(rng):
    g = fold_to_projective(rand_field(rng))
    assert np.array_equal(fold_to_projective(unfold_to_se2(g)).data, g.data)


def test_value_field_rejects_negative():
    with pytest.raises(DomainError):
        ScalarField3(SPEC, -np.ones(SPEC.shape))


def test_srf1_round_trip(tmp_path, rng):
    d = rand_field(rng).data.copy()
    d[0, 0, 0] = np.inf
    f = ScalarField3(SPEC, d)
    p = tmp_path / "f.srf"
    write_srf1(f, p)
    g = read_srf1(p)
    assert g.spec == f.spec and g.kind is FieldKind.VALUE
    assert np.array_equal(g.data, f.data)
    assert p.read_bytes()[:4] == b"SRF1"


def test_srf1_rejects_bad_input(tmp_path, rng):
    p = tmp_path / "f.srf"
    write_srf1(rand_field(rng), p)
    buf = p.read_bytes()
    with pytest.raises(FieldFormatError, match="magic"):
        parse_srf1(b"XXXX" + buf[4:])
    with pytest.raises(FieldFormatError, match="truncated"):
        parse_srf1(buf[:-8])
    with pytest.raises(FieldFormatError, match="truncated"):
        parse_srf1(buf[:10])
