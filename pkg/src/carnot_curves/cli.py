"""``carnot-curves`` command line.

Exit codes: 0 success, 2 I/O or parse error, 3 admissibility or
precondition failure, 4 verification failure.  Failures print a JSON object
on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import engel, lusin
from .curves import PiecewiseCurve
from .hgroup import (
    HorizontalCurve,
    HorizontalPath,
    HPoint,
    SampledCurve,
    horizontal_scale,
    horizontality_residual,
)
from .io import (
    DocumentError,
    atomic_write,
    dumps,
    load_curve,
    sampled_to_csv,
    table_to_csv,
    to_document,
)
from .planar import InadmissibleProblem

EXIT_OK, EXIT_IO, EXIT_ADMISSIBILITY, EXIT_VERIFICATION = 0, 2, 3, 4


class CommandError(Exception):
    def __init__(self, code, kind, message, **extra):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def _report(report, path=None):
    if path:
        atomic_write(path, dumps(report))
    else:
        sys.stdout.write(dumps(report))


def _load(path):
    try:
        return load_curve(path)
    except OSError as exc:
        raise CommandError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror or exc}") from exc
    except (DocumentError, ValueError) as exc:
        raise CommandError(EXIT_IO, "parse", f"{path}: {exc}") from exc


def _parse_point(text, size=None):
    try:
        vals = [float(x) for x in text.split(",")] if text else []
    except ValueError as exc:
        raise CommandError(EXIT_IO, "parse", f"bad point {text!r}") from exc
    if size is not None and vals and len(vals) != size:
        raise CommandError(EXIT_IO, "parse", f"point needs {size} coordinates, got {len(vals)}")
    return vals


def _curve_output(curve, args):
    if args.format == "csv":
        t = np.linspace(*curve.interval, args.resolution)
        pts = curve.position(t)
        der = curve.derivative(t)
        return sampled_to_csv(SampledCurve(t, pts, der))
    return dumps(to_document(curve))


def cmd_lift(args):
    planar = [_load(p) for p in args.inputs]
    for path, c in zip(args.inputs, planar):
        if not isinstance(c, PiecewiseCurve):
            raise CommandError(EXIT_IO, "parse", f"{path} is not a planar piecewise curve")
    n = len(planar)
    start = _parse_point(args.start, 2 * n + 1) or [0.0] * (2 * n + 1)
    try:
        piece = HorizontalCurve(planar, HPoint(start))
    except ValueError as exc:
        raise CommandError(EXIT_ADMISSIBILITY, "precondition", str(exc)) from exc
    path = HorizontalPath([piece])
    _emit(_curve_output(path, args), args.out)
    a, b = path.interval
    report = {
        "command": "lift",
        "interval": [a, b],
        "vertical_displacement": float(path.position(b)[-1] - path.position(a)[-1]),
        "cross_integrals": [c.total_cross() for c in planar],
    }
    _report(report, args.report)
    return EXIT_OK


def cmd_lusin(args):
    gamma = _load(args.input)
    if not isinstance(gamma, SampledCurve):
        raise CommandError(EXIT_IO, "parse", f"{args.input} is not a sampled Heisenberg curve")
    try:
        ks = lusin.select_K(gamma, args.epsilon, horiz_tol=args.horiz_tol)
        Gamma = lusin.assemble(ks)
    except (lusin.KSelectionError, lusin.AdmissibilityError, InadmissibleProblem) as exc:
        raise CommandError(EXIT_ADMISSIBILITY, "admissibility", str(exc)) from exc
    report = lusin.verify(Gamma, gamma, ks, tol=args.tol)
    report = {"command": "lusin", "epsilon": args.epsilon, "tol": args.tol, **report}
    failures = []
    if not report["disagreement_measure"] < args.epsilon:
        failures.append("disagreement_measure")
    if report["max_horiz_residual"] > args.tol:
        failures.append("max_horiz_residual")
    if report["max_c1_jump"] > args.tol:
        failures.append("max_c1_jump")
    report["passed"] = not failures
    report["failures"] = failures
    _emit(_curve_output(Gamma, args), args.out)
    _report(report, args.report)
    return EXIT_VERIFICATION if failures else EXIT_OK


def _counterexample_spec(args):
    if args.spec:
        spec = _load(args.spec)
        if not isinstance(spec, engel.CounterexampleSpec):
            raise CommandError(EXIT_IO, "parse", f"{args.spec} is not a counterexample document")
        return spec
    try:
        return engel.CounterexampleSpec.from_budget(args.epsilon, args.count, args.K, args.profile)
    except ValueError as exc:
        raise CommandError(EXIT_ADMISSIBILITY, "precondition", str(exc)) from exc


def cmd_engel_spiral(args):
    try:
        word = engel.make_spiral(args.delta, args.K)
    except ValueError as exc:
        raise CommandError(
            EXIT_ADMISSIBILITY, "precondition", str(exc), max_displacement=engel.K_MAX * args.delta**6
        ) from exc
    end, _ = engel.apply_word(np.zeros(4), word)
    target = np.array([0.0, 0.0, 0.0, -args.K * args.delta**6])
    err = float(np.max(np.abs(end - target)))
    _emit(dumps(to_document(word)), args.out)
    report = {
        "command": "engel spiral",
        "delta": args.delta,
        "K": args.K,
        "K_max": engel.K_MAX,
        "endpoint": end.tolist(),
        "target": target.tolist(),
        "endpoint_error": err,
        "speed": word.speed,
        "passed": bool(err <= args.tol and word.speed <= args.delta * (1 + 1e-12)),
    }
    _report(report, args.report)
    return EXIT_OK if report["passed"] else EXIT_VERIFICATION


def cmd_engel_counterexample(args):
    spec = _counterexample_spec(args)
    gamma = engel.build_counterexample(spec)
    jumps = []
    for q, e, drop in zip(gamma.q, gamma.eps, gamma.drop):
        d = gamma.position(np.array([q + e]))[0] - gamma.position(np.array([q]))[0]
        jumps.append(float(np.max(np.abs(d - np.array([0.0, 0.0, 0.0, -drop])))))
    grid = (np.arange(args.resolution) + 0.5) / args.resolution
    off = grid[~gamma.in_S(grid)]
    height = gamma.position(off)[:, 3]
    _emit(dumps(to_document(spec)), args.out)
    report = {
        "command": "engel counterexample",
        "profile": None if args.spec else args.profile,
        "K": spec.K,
        "spirals": len(spec.pairs),
        "total_width": spec.total_width,
        "max_displacement_error": max(jumps),
        "off_spiral_height_nonincreasing": bool(np.all(np.diff(height) <= 0)),
        "passed": bool(spec.total_width < args.epsilon and max(jumps) <= args.tol),
    }
    _report(report, args.report)
    return EXIT_OK if report["passed"] else EXIT_VERIFICATION


def _engel_curve(obj):
    if isinstance(obj, engel.ControlWord):
        return engel.WordCurve(obj)
    if isinstance(obj, engel.CounterexampleSpec):
        return engel.build_counterexample(obj)
    raise CommandError(EXIT_IO, "parse", "expected an Engel word or counterexample document")


def cmd_engel_obstruct(args):
    curve = _engel_curve(_load(args.input))
    t0 = args.t0 if args.t0 is not None else curve.interval[0]
    delta = args.delta if args.delta is not None else curve.interval[1] - t0
    try:
        ok = engel.obstruction_check(curve, t0, delta, tol=args.tol, samples=args.resolution)
    except engel.ObstructionHypothesisError as exc:
        raise CommandError(EXIT_ADMISSIBILITY, "hypothesis", str(exc)) from exc
    _report({"command": "engel obstruct", "t0": t0, "delta": delta, "passed": ok}, args.report or args.out)
    return EXIT_OK if ok else EXIT_VERIFICATION


def cmd_engel_agreement(args):
    spec = _counterexample_spec(args)
    gamma = engel.build_counterexample(spec)
    if args.against == "line":
        members = [(engel.ShiftedLine(0.0, 0.0), 0.0)]
    else:
        members = engel.comparison_corpus(gamma, args.size, args.seed)
    rows = []
    for k, (curve, t0) in enumerate(members):
        m = engel.agreement_measure(gamma, curve, args.match_tol, args.resolution)
        rows.append({"index": k, "t0": t0, "measure": m})
    worst = max(r["measure"] for r in rows)
    report = {
        "command": "engel agreement",
        "seed": args.seed,
        "against": args.against,
        "profile": None if args.spec else args.profile,
        "epsilon": args.epsilon,
        "match_tol": args.match_tol,
        "resolution": args.resolution,
        "min_site": float(gamma.q.min()),
        "max_measure": worst,
        "members": rows,
        "passed": bool(worst < args.epsilon),
    }
    _report(report, args.report or args.out)
    return EXIT_OK if report["passed"] else EXIT_VERIFICATION


def _plot_columns(obj, resolution):
    if isinstance(obj, SampledCurve):
        t = np.linspace(obj.times[0], obj.times[-1], resolution)
        d = obj.derivatives
        if d is None:
            d = np.gradient(obj.points, obj.times, axis=0, edge_order=2)
        pts = np.column_stack([np.interp(t, obj.times, obj.points[:, k]) for k in range(obj.points.shape[1])])
        der = np.column_stack([np.interp(t, obj.times, d[:, k]) for k in range(d.shape[1])])
        return t, pts, der, horizontality_residual(pts, der) / horizontal_scale(pts, der)
    if isinstance(obj, HorizontalPath):
        t = np.linspace(*obj.interval, resolution)
        pts, der = obj.position(t), obj.derivative(t)
        return t, pts, der, horizontality_residual(pts, der) / horizontal_scale(pts, der)
    if isinstance(obj, PiecewiseCurve):
        t = np.linspace(*obj.interval, resolution)
        return t, obj.position(t), obj.derivative(t), np.zeros(resolution)
    curve = _engel_curve(obj)
    t = np.linspace(*curve.interval, resolution)
    pts, der = curve.position(t), curve.derivative(t)
    x1 = pts[:, 0]
    res = np.maximum(np.abs(der[:, 2] - x1 * der[:, 1]), np.abs(der[:, 3] - 0.5 * x1 * x1 * der[:, 1]))
    return t, pts, der, res


def cmd_plotdata(args):
    t, pts, der, res = _plot_columns(_load(args.input), args.resolution)
    width = pts.shape[1]
    header = ["t"] + [f"c{k}" for k in range(1, width + 1)] + [f"d{k}" for k in range(1, width + 1)] + ["residual"]
    rows = np.column_stack([t, pts, der, res])
    if args.format == "json":
        text = dumps({"columns": header, "rows": rows.tolist()})
    else:
        text = table_to_csv(header, rows)
    _emit(text, args.out)
    return EXIT_OK


def _resolution(text):
    value = int(text)
    if value < 10:
        raise argparse.ArgumentTypeError("resolution must be at least 10")
    return value


def _epsilon(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("epsilon must lie in (0, 1)")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="carnot-curves", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, resolution=1001, tol=1e-8, fmt=True):
        p.add_argument("--out", default=None, help="output path (stdout when omitted)")
        p.add_argument("--report", default=None, help="report path (stdout when omitted)")
        p.add_argument("--tol", type=float, default=tol)
        p.add_argument("--resolution", type=_resolution, default=resolution)
        p.add_argument("--seed", type=int, default=0)
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("lift", help="horizontal lift of planar curves")
    p.add_argument("inputs", nargs="+", help="one planar curve document per (x_i, y_i) pair")
    p.add_argument("--start", default="", help="start point as comma-separated coordinates")
    common(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("lusin", help="C^1 horizontal approximation of a sampled curve")
    p.add_argument("input")
    p.add_argument("--epsilon", type=_epsilon, default=0.1)
    p.add_argument("--horiz-tol", type=float, default=None, help="sample horizontality tolerance")
    common(p)
    p.set_defaults(func=cmd_lusin)

    p = sub.add_parser("engel", help="Engel-group constructions and checks")
    esub = p.add_subparsers(dest="engel_command", required=True)

    q = esub.add_parser("spiral")
    q.add_argument("--delta", type=float, default=0.1)
    q.add_argument("--K", type=float, default=engel.K_MAX / 2)
    common(q, tol=1e-12, fmt=False)
    q.set_defaults(func=cmd_engel_spiral)

    def spec_args(q):
        q.add_argument("--spec", default=None, help="counterexample document; built from the budget otherwise")
        q.add_argument("--epsilon", type=_epsilon, default=0.1)
        q.add_argument("--count", type=int, default=20)
        q.add_argument("--K", type=float, default=engel.K_MAX / 2)
        q.add_argument("--profile", choices=("geometric", "uniform"), default="geometric")

    q = esub.add_parser("counterexample")
    spec_args(q)
    common(q, resolution=100_000, tol=1e-15, fmt=False)
    q.set_defaults(func=cmd_engel_counterexample)

    q = esub.add_parser("obstruct")
    q.add_argument("input", help="Engel word or counterexample document")
    q.add_argument("--t0", type=float, default=None)
    q.add_argument("--delta", type=float, default=None)
    common(q, resolution=2001, tol=1e-12, fmt=False)
    q.set_defaults(func=cmd_engel_obstruct)

    q = esub.add_parser("agreement")
    spec_args(q)
    q.add_argument("--against", choices=("corpus", "line"), default="corpus")
    q.add_argument("--size", type=int, default=50)
    q.add_argument("--match-tol", type=float, default=1e-9)
    common(q, resolution=100_000, fmt=False)
    q.set_defaults(func=cmd_engel_agreement)

    p = sub.add_parser("plotdata", help="table of positions, derivatives and residuals")
    p.add_argument("input")
    common(p)
    p.set_defaults(format="csv")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        body = {"error": exc.kind, "message": str(exc), "exit_code": exc.code, **exc.extra}
        sys.stderr.write(json.dumps(body) + "\n")
        return exc.code
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "io", "message": str(exc), "exit_code": EXIT_IO}) + "\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
