"""Command-line front end.

Each subcommand reads and writes files (SRF1 fields, PGM images, CSV curves,
JSON reports), so stages can be run and checked one at a time::

    srtrack phantom --kind scurve --size 64 --out img.pgm
    srtrack cost --image img.pgm --out cost.srf
    srtrack solve --cost cost.srf --mode pt --seed "10.8,28.5,-1.15" --out dist.srf
    srtrack track --dist dist.srf --cost cost.srf --start "52.2,34.5,-1.15" --out curve

Exit status: 0 on success, 1 on domain or file errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from srtrack import io
from srtrack.errors import DomainError, IncompatibleGridsError

log = logging.getLogger("srtrack")

_NUM = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*(\*?\s*pi)?\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_number(text: str) -> float:
    """A float, optionally written as a multiple of pi: ``1.2pi``, ``pi/2``, ``-0.5*pi``."""
    t = text.strip().lower().replace("π", "pi")
    if t in ("-pi", "+pi"):
        t = t[0] + "1pi"
    m = _NUM.match(t)
    if not m or (m.group(1) is None and m.group(2) is None):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    v = float(m.group(1)) if m.group(1) is not None else 1.0
    if m.group(2):
        v *= math.pi
    if m.group(3):
        v /= float(m.group(3))
    return v


def parse_point(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected 'x,y,theta', got {text!r}")
    return tuple(parse_number(p) for p in parts)


def parse_list(text: str) -> list[float]:
    vals = [parse_number(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


# -- shared helpers ----------------------------------------------------------

def _read_field(path):
    from srtrack.fields import read_srf1

    return read_srf1(path)


def _with_period(f, projective: bool):
    """Return ``f`` on the requested θ period, folding or unfolding as needed."""
    from srtrack.fields import fold_to_projective, unfold_to_se2

    if f.spec.is_projective == projective:
        return f
    return fold_to_projective(f) if projective else unfold_to_se2(f)


def _set_threads(n: int | None) -> bool:
    if n is None:
        return False
    import numba

    if n > numba.config.NUMBA_NUM_THREADS:
        raise DomainError(f"--threads {n} exceeds the {numba.config.NUMBA_NUM_THREADS} available")
    numba.set_num_threads(n)
    return True


def _emit_json(obj, path) -> None:
    if path is None:
        sys.stdout.write(io.dumps(obj))
    else:
        io.write_json(path, obj)


def _metric_args(p: argparse.ArgumentParser, xi: float = 0.01) -> None:
    p.add_argument("--xi", type=parse_number, default=xi, help="stiffness xi (spatial/angular balance)")
    p.add_argument("--eps", type=parse_number, default=0.1, help="lateral relaxation eps")


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=parse_number, default=None,
                   help="stopping tolerance on the sup-norm change (default 1e-8 x grid diameter)")
    p.add_argument("--max-iter", type=_positive_int, default=200, help="maximum sweep cycles")
    p.add_argument("--order", type=int, choices=(1, 2), default=1, help="accuracy order of the solver")
    p.add_argument("--scheme", choices=("selling", "frame"), default="selling", help="stencil family")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="run the parallel Jacobi iteration on N threads (sequential if omitted)")


# -- subcommands -----------------------------------------------------------

def cmd_phantom(a) -> int:
    from srtrack.cost import save_pgm
    from srtrack.phantoms import phantom

    img = phantom(a.kind, a.size, a.angle, a.width, a.amplitude, a.crossing_angle)
    Path(a.out).write_bytes(save_pgm(img, a.maxval))
    log.info("wrote %s (%dx%d)", a.out, img.width, img.height)
    return 0


def cmd_cost(a) -> int:
    from srtrack.cost import CostParams, cost_map, load_pgm, orientation_lift, vesselness
    from srtrack.fields import write_srf1

    prm = CostParams(a.lam, a.p, a.ntheta, a.sigma_long, a.sigma_short, a.sigma_a3, a.c_min)
    img = load_pgm(Path(a.image).read_bytes())
    V = vesselness(orientation_lift(img, prm), prm.sigma_a3)
    C = cost_map(V, prm)
    write_srf1(C, a.out)
    if a.score:
        write_srf1(V, a.score)
    log.info("cost range [%.4g, %.4g]", C.data.min(), C.data.max())
    return 0


def cmd_solve(a) -> int:
    from srtrack.eikonal import EikonalProblem, Mode, residual_stats, solve
    from srtrack.fields import write_srf1
    from srtrack.geometry import MetricParams

    if not a.seed:
        raise DomainError("at least one --seed is required")
    MetricParams(a.xi, a.eps)
    if a.tol is not None and not a.tol > 0:
        raise DomainError("tol must be positive")
    parallel = _set_threads(a.threads)
    mode = Mode(a.mode)
    cost = _with_period(_read_field(a.cost), mode is Mode.PT)
    prob = EikonalProblem(cost, MetricParams(a.xi, a.eps, cost), list(a.seed), mode, a.scheme)
    W, rep = solve(prob, a.tol, a.max_iter, parallel=parallel, order=a.order)
    write_srf1(W, a.out)
    log.info("%d cycles, %.3fs", rep.iterations, rep.wall_time)
    if a.report:
        out = {"mode": mode.value, "scheme": prob.scheme.value, "order": a.order, "xi": a.xi, "eps": a.eps,
               "seeds": [list(s) for s in a.seed], "tol": a.tol, **rep.to_dict(),
               "residual": residual_stats(W, prob)}
        io.write_json(a.report, out)
    return 0


def cmd_track(a) -> int:
    from srtrack.geometry import MetricParams
    from srtrack.tracker import CuspReport, backtrack, detect_cusps

    MetricParams(a.xi, a.eps)
    W = _read_field(a.dist)
    cost = _with_period(_read_field(a.cost), W.spec.is_projective)
    if cost.spec != W.spec:
        raise IncompatibleGridsError("cost and distance map live on different grids")
    metric = MetricParams(a.xi, a.eps, cost)
    c = backtrack(W, metric, a.start, step=a.step)
    c.mode = "pt" if W.spec.is_projective else "se2"
    cusps = detect_cusps(c) if len(c) >= 3 else CuspReport()
    stem = Path(a.out)
    c.write_csv(stem.with_name(stem.name + ".csv"))
    io.write_json(stem.with_name(stem.name + ".json"),
                  {"length": c.total_length, "cusp_times": [float(t) for t in cusps.cusp_times],
                   "degenerate": cusps.degenerate, "mode": c.mode})
    log.info("length %.6g, %d samples, %d cusps", c.total_length, len(c), cusps.count)
    return 0


def cmd_compare(a) -> int:
    from srtrack.geometry import MetricParams
    from srtrack.tracker import compare_modes

    metric = MetricParams(a.xi, a.eps)
    cost = _with_period(_read_field(a.cost), False)
    res = compare_modes(cost, metric, (a.p0, a.p1), a.tol, order=a.order)
    if a.curves:
        stem = Path(a.curves)
        for (s, e), c in zip(res.assignments, res.se2_curves):
            c.write_csv(stem.with_name(f"{stem.name}_se2_{s}{e}.csv"))
        res.pt_curve.write_csv(stem.with_name(f"{stem.name}_pt.csv"))
    _emit_json({"p0": list(a.p0), "p1": list(a.p1), "xi": a.xi, "eps": a.eps, **res.to_dict()}, a.out)
    return 0


def cmd_maxwell(a) -> int:
    from srtrack.fields import FieldKind, write_srf1
    from srtrack.maxwell import m3_proxy, maxwell_m2, stage_report, uniform_solve, write_points_csv

    if a.dist:
        W = _read_field(a.dist)
        if W.spec.is_projective or W.kind is not FieldKind.VALUE:
            raise DomainError(f"{a.dist}: needs a 2pi-periodic distance map")
    else:
        W = uniform_solve(a.half_width, a.h, a.ntheta, a.eps, order=a.order)
        if a.save_dist:
            write_srf1(W, a.save_dist)
    rows = stage_report(W, a.radii, probes=a.probes, tol=a.tol, seed=a.rng_seed)
    m2 = maxwell_m2(W, a.tol)
    out = {"grid": {"nx": W.spec.nx, "ny": W.spec.ny, "ntheta": W.spec.ntheta, "h": W.spec.h_max},
           "m2_total": len(m2), "m2_min_radius": float(m2.radii.min()) if len(m2) else None,
           "stages": [r.to_dict() for r in rows]}
    if a.points_dir:
        d = Path(a.points_dir)
        d.mkdir(parents=True, exist_ok=True)
        band = 1.5 * W.spec.h_max
        for R in a.radii:
            tag = f"{R / math.pi:.4g}pi"
            m2.filter(R - band, R + band).write_csv(d / f"m2_{tag}.csv")
            pts = m3_proxy(W, R, a.tol)
            vals = [W.sample(p.as_tuple()) for p in pts]
            write_points_csv(d / f"m3_{tag}.csv", pts, vals)
    _emit_json(out, a.out)
    return 0


def cmd_rtilde(a) -> int:
    from srtrack.elliptic import solve_rtilde

    sol = solve_rtilde()
    if a.json:
        sys.stdout.write(io.dumps(sol.to_dict()))
    else:
        for k, v in sol.to_dict().items():
            print(f"{k} = {io.fmt_float(v)}")
    return 0


def cmd_bench(a) -> int:
    from srtrack.eikonal import bench_pt_vs_se2
    from srtrack.geometry import MetricParams

    metric = MetricParams(a.xi, a.eps)
    cost = _with_period(_read_field(a.cost), False)
    seed = a.seed
    if seed is None:
        s = cost.spec
        seed = (0.5 * (s.x_min + s.x_max), 0.5 * (s.y_min + s.y_max), 0.0)
    rec = bench_pt_vs_se2(cost, MetricParams(a.xi, a.eps, cost), a.tol, seed, a.max_iter, a.repeats)
    _emit_json({"seed": list(seed), "xi": metric.xi, "eps": metric.eps, "repeats": a.repeats,
                **rec.to_dict()}, a.out)
    return 0


# -- parser ------------------------------------------------------------------

class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="srtrack", description="Sub-Riemannian vessel tracking on SE(2) "
                                 "and its projective quotient.", formatter_class=_Formatter)
    ap.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_, description=help_, formatter_class=_Formatter)
        p.set_defaults(func=fn)
        return p

    p = add("phantom", cmd_phantom, "write a synthetic vessel image as PGM")
    p.add_argument("--kind", choices=("line", "scurve", "crossing"), default="scurve", help="ridge layout")
    p.add_argument("--size", type=int, default=64, help="image side in pixels (>= 32)")
    p.add_argument("--angle", type=parse_number, default=0.0, help="ridge angle for line/crossing")
    p.add_argument("--width", type=parse_number, default=1.5, help="ridge Gaussian width in pixels")
    p.add_argument("--amplitude", type=parse_number, default=0.25, help="S-curve amplitude (fraction of size)")
    p.add_argument("--crossing-angle", type=parse_number, default=math.pi / 2,
                   help="angle between the two crossing ridges")
    p.add_argument("--maxval", type=int, default=255, help="PGM maximum grey value")
    p.add_argument("--out", required=True, help="output PGM path")

    p = add("cost", cmd_cost, "build a pi-periodic cost field from a PGM image")
    p.add_argument("--image", required=True, help="input PGM (P2 or P5)")
    p.add_argument("--ntheta", type=int, default=32, help="orientations over [0, pi)")
    p.add_argument("--lambda", dest="lam", type=parse_number, default=100.0, help="cost contrast lambda")
    p.add_argument("--p", type=parse_number, default=3.0, help="vesselness exponent p")
    p.add_argument("--sigma-long", type=parse_number, default=3.0, help="filter scale along the ridge")
    p.add_argument("--sigma-short", type=parse_number, default=1.0, help="filter scale across the ridge")
    p.add_argument("--sigma-a3", type=parse_number, default=2.0, help="scale of the lateral second derivative")
    p.add_argument("--c-min", type=parse_number, default=1e-3, help="cost floor")
    p.add_argument("--out", required=True, help="output SRF1 cost field")
    p.add_argument("--score", default=None, help="optionally also write the vesselness field here")

    p = add("solve", cmd_solve, "compute a distance map from one or more seeds")
    p.add_argument("--cost", required=True, help="SRF1 cost field (pi- or 2pi-periodic)")
    p.add_argument("--mode", choices=("se2", "pt"), default="pt", help="group (se2) or projective (pt) solve")
    _metric_args(p)
    p.add_argument("--seed", type=parse_point, action="append", default=None,
                   help="seed point 'x,y,theta' (repeatable)")
    _solver_args(p)
    p.add_argument("--out", required=True, help="output SRF1 distance map")
    p.add_argument("--report", default=None, help="optional JSON solve report")

    p = add("track", cmd_track, "backtrack a geodesic from a start point to the seed")
    p.add_argument("--dist", required=True, help="SRF1 distance map")
    p.add_argument("--cost", required=True, help="SRF1 cost field used for the solve")
    p.add_argument("--start", type=parse_point, required=True, help="start point 'x,y,theta'")
    _metric_args(p)
    p.add_argument("--step", type=parse_number, default=0.4, help="integration step in grid cells")
    p.add_argument("--out", required=True, help="output stem; writes STEM.csv and STEM.json")

    p = add("compare", cmd_compare, "compare SE(2) antipodal assignments against the projective track")
    p.add_argument("--cost", required=True, help="SRF1 cost field")
    p.add_argument("--p0", type=parse_point, required=True, help="seed 'x,y,theta'")
    p.add_argument("--p1", type=parse_point, required=True, help="tip 'x,y,theta'")
    _metric_args(p)
    p.add_argument("--tol", type=parse_number, default=None, help="solver tolerance")
    p.add_argument("--order", type=int, choices=(1, 2), default=1, help="accuracy order of the solver")
    p.add_argument("--curves", default=None, help="optional stem for the five curve CSVs")
    p.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")

    p = add("maxwell", cmd_maxwell, "probe Maxwell strata of the uniform-cost sphere from the identity")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dist", default=None, help="2pi-periodic SRF1 distance map from the identity")
    src.add_argument("--uniform", action="store_true", help="solve the uniform-cost map instead")
    p.add_argument("--radii", type=parse_list, default=parse_list("0.4pi,0.75pi,1.2pi"),
                   help="comma-separated sphere radii")
    p.add_argument("--half-width", type=parse_number, default=4.0, help="half side of the --uniform domain")
    p.add_argument("--h", type=parse_number, default=0.1, help="spatial spacing for --uniform")
    p.add_argument("--ntheta", type=int, default=64, help="orientations over [0, 2pi) for --uniform")
    p.add_argument("--eps", type=parse_number, default=0.1, help="lateral relaxation for --uniform")
    p.add_argument("--order", type=int, choices=(1, 2), default=2, help="solver order for --uniform")
    p.add_argument("--save-dist", default=None, help="write the --uniform map to this SRF1 path")
    p.add_argument("--tol", type=parse_number, default=None, help="equality tolerance (default h)")
    p.add_argument("--probes", type=int, default=3, help="multiplicity probes per radius")
    p.add_argument("--rng-seed", type=int, default=0, help="seed of the probe perturbations")
    p.add_argument("--points-dir", default=None, help="write per-radius x,y,theta,W point CSVs here")
    p.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")

    p = add("rtilde", cmd_rtilde, "solve for the critical radius of the sphere")
    p.add_argument("--json", action="store_true", help="print JSON instead of key = value lines")

    p = add("bench", cmd_bench, "time the two-seed SE(2) solve against the projective solve")
    p.add_argument("--cost", required=True, help="SRF1 cost field")
    _metric_args(p)
    p.add_argument("--seed", type=parse_point, default=None, help="seed 'x,y,theta' (default grid centre)")
    p.add_argument("--tol", type=parse_number, default=None, help="solver tolerance")
    p.add_argument("--max-iter", type=_positive_int, default=200, help="maximum sweep cycles")
    p.add_argument("--repeats", type=_positive_int, default=1, help="timed repetitions (fastest kept)")
    p.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"srtrack: error: no such file: {e.filename}", file=sys.stderr)
    except (DomainError, OSError, ValueError) as e:
        print(f"srtrack: error: {e}", file=sys.stderr)
    return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
