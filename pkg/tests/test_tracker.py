import math

import numpy as np
import pytest

from srtrack.eikonal import EikonalProblem, Mode, solve
from srtrack.errors import DomainError
from srtrack.fields import GridSpec, ScalarField3
from srtrack.geometry import MetricParams
from srtrack.tracker import GeodesicCurve, backtrack, compare_modes, detect_cusps

UNIT = MetricParams(1.0, 0.1)


@pytest.fixture(scope="module")
def se2_map():
    spec = GridSpec.centered(41, 0.2, 32)
    W, _ = solve(EikonalProblem(ScalarField3.constant(spec, 1.0), UNIT, [(0, 0, 0)], Mode.SE2))
    return W


def test_cos_control_has_three_cusps():
    t = np.linspace(0, 3 * math.pi, 601)
    c = GeodesicCurve(t, t, 0 * t, 0 * t, np.cos(t), 0 * t, float(t[-1]))
    rep = detect_cusps(c, zero_band=1e-9)
    assert rep.count == 3
    assert np.allclose(rep.cusp_times, [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2], atol=1e-3)
    assert not rep.degenerate


def test_straight_curve_has_no_cusp():
    t = np.linspace(0, 1, 50)
    c = GeodesicCurve.from_positions(t, t, 0 * t, 0 * t)
    assert detect_cusps(c).count == 0


def test_pure_rotation_is_degenerate():
    t = np.linspace(0, 1, 50)
    c = GeodesicCurve.from_positions(t, 0 * t, 0 * t, t)
    rep = detect_cusps(c)
    assert rep.count == 0 and rep.degenerate


def test_reversal_flips_controls():
    t = np.linspace(0, 2, 20)
    c = GeodesicCurve.from_positions(t, t, t**2, 0 * t + 0.3)
    r = c.reversed()
    assert r.x[0] == c.x[-1] and np.allclose(r.u1, -c.u1[::-1])
    assert r.t[0] == 0 and r.t[-1] == pytest.approx(2)


def test_csv_round_trip(tmp_path):
    t = np.linspace(0, 1, 7)
    c = GeodesicCurve.from_positions(t, t, t, t)
    c.write_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "t,x,y,theta,u1,u2"
    d = GeodesicCurve.read_csv(tmp_path / "c.csv")
    assert np.array_equal(d.x, c.x) and np.array_equal(d.u1, c.u1)


def test_straight_track(se2_map):
    c = backtrack(se2_map, UNIT, (3.0, 0.0, 0.0))
    assert np.max(np.abs(c.y)) <= 2 * se2_map.spec.hy
    assert detect_cusps(c).count == 0
    assert c.total_length == pytest.approx(3.0, rel=0.02)
    assert (c.x[-1], c.y[-1]) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_start_next_to_seed(se2_map):
    c = backtrack(se2_map, UNIT, (0.2, 0.0, 0.0))
    assert 1 <= len(c) <= 3
    assert c.total_length == pytest.approx(0.2, rel=0.02)


def test_w_decreases_and_length_close(se2_map):
    for start in [(2.0, 1.0, 0.5), (-1.5, 2.0, 2.0), (1.0, -2.5, 5.5)]:
        c = backtrack(se2_map, UNIT, start)
        w = np.array([se2_map.sample((x, y, t)) for x, y, t in zip(c.x, c.y, c.theta)])
        assert np.all(np.diff(w[:-1]) < 0)
        w0 = se2_map.sample(start)
        assert abs(c.total_length - w0) / w0 < 0.1


def test_pt_track_crosses_seam():
    spec = GridSpec.centered(41, 0.2, 16, math.pi)
    W, _ = solve(EikonalProblem(ScalarField3.constant(spec, 1.0), UNIT, [(0, 0, 0)], Mode.PT))
    c = backtrack(W, UNIT, (0.0, 0.0, math.pi - 0.4))
    # the shortest rotation goes up through pi, so theta is unwrapped past the seam
    assert c.theta.max() - c.theta.min() == pytest.approx(0.4, abs=2 * spec.htheta)
    assert np.all(np.abs(np.diff(c.theta)) < 0.5)


def test_backtrack_errors(se2_map):
    with pytest.raises(DomainError):
        backtrack(se2_map, UNIT, (50.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        backtrack(ScalarField3(se2_map.spec, se2_map.data + 1.0), UNIT, (1.0, 0.0, 0.0))


def test_compare_modes_uniform():
    spec = GridSpec.centered(31, 0.2, 32)
    cost = ScalarField3.constant(spec, 1.0)
    res = compare_modes(cost, UNIT, ((0.0, 0.0, 0.0), (2.0, 0.6, 3.3)))
    assert len(res.se2_lengths) == 4
    assert res.consistent
    best = int(np.argmin(res.se2_lengths))
    assert res.pt_cusps <= res.se2_cusps[best]
    assert res.to_dict()["consistent"] is True
