import math

import numpy as np
import pytest

from srtrack.errors import DomainError
from srtrack.fields import fold_to_projective
from srtrack.geometry import ProjectivePoint
from srtrack.maxwell import (
    MinimizerReachable,
    extract_sphere,
    m3_proxy,
    maxwell_m2,
    multiplicity_probe,
    reachable_union,
    stage_report,
    uniform_solve,
    write_points_csv,
)


@pytest.fixture(scope="module")
def W():
    return uniform_solve(half_width=3.0, h=0.2, ntheta=32)


def test_sphere_edge_cases(W):
    s0 = extract_sphere(W, 0.0, band=0.0)
    assert len(s0) == 1 and s0.points[0].as_tuple() == (0.0, 0.0, 0.0)
    assert len(extract_sphere(W, 100.0)) == 0


def test_sphere_respects_euclidean_lower_bound(W):
    s = extract_sphere(W, 1.0)
    assert len(s) > 0
    for p, v in zip(s.points, s.values):
        assert v >= math.hypot(p.x, p.y) - 1e-9


def test_vertical_rotation_is_m2(W):
    k = W.spec.ntheta // 4
    j = i = W.spec.nx // 2
    assert abs(W.data[k, j, i] - W.data[3 * k, j, i]) <= W.spec.h_max
    m2 = maxwell_m2(W)
    hits = [r for p, r in zip(m2.points, m2.radii) if (p.x, p.y) == (0.0, 0.0)
            and p.theta == pytest.approx(math.pi / 2)]
    assert hits and hits[0] == pytest.approx(math.pi / 2, abs=2 * W.spec.h_max)


def test_no_early_m2(W):
    m2 = maxwell_m2(W)
    assert m2.radii.min() >= math.pi / 2 - 5 * W.spec.h_max


def test_m2_needs_se2_map(W):
    with pytest.raises(DomainError):
        maxwell_m2(fold_to_projective(W))


def test_generic_point_single_minimizer(W):
    Wp = fold_to_projective(W)
    assert multiplicity_probe(Wp, (1.5, 0.3, 0.2)) == 1


def test_m3_proxy_is_on_theta_zero(W):
    pts = m3_proxy(W, 1.2 * math.pi)
    assert all(p.theta == 0.0 and (p.x, p.y) != (0.0, 0.0) for p in pts)


def test_stage_report_rows(W):
    rows = stage_report(W, [0.4 * math.pi], probes=1)
    assert len(rows) == 1 and not rows[0].m2_present and rows[0].max_nu == 1
    assert set(rows[0].to_dict()) == {"radius", "m2_present", "m2_count", "max_nu", "m3_present", "m3_count"}


def test_reachable_union_clauses():
    assert reachable_union(lambda x, y, t: False, (0, 0, 1.3))
    assert not reachable_union(lambda x, y, t: False, (1, 0, 0))
    assert reachable_union(lambda x, y, t: x > 0, (-1, 0, 0))
    assert reachable_union(lambda x, y, t: False, ProjectivePoint(0, 0, 0.5))
    seen = []
    reachable_union(lambda x, y, t: seen.append((x, y, t)) or False, (1, 2, 0.5))
    assert seen == [(1, 2, 0.5), (1, 2, 0.5 + math.pi), (-1, 2, -0.5), (-1, 2, -0.5 + math.pi)]


def test_minimizer_reachable(W):
    pred = MinimizerReachable(W)
    assert pred(1.5, 0.0, 0.0)
    assert not pred(-1.5, 0.0, 0.0)  # reached by a backward straight line
    assert not pred(0.0, 0.0, 0.0)
    assert not pred(30.0, 0.0, 0.0)
    assert reachable_union(pred, (-1.5, 0.0, 0.0))


def test_points_csv(tmp_path):
    write_points_csv(tmp_path / "p.csv", [ProjectivePoint(0.1, 0.2, 0.3)], [1 / 3])
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "x,y,theta,W"
    assert lines[1].split(",")[-1] == f"{1 / 3:.17g}"
