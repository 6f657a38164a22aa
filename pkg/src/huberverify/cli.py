"""Command-line front end.

Thin adapters around the library: load delimited inputs, dispatch, and emit
JSON/CSV with stable formatting (floats carry 17 significant digits so that
re-reading and re-emitting reproduces the bytes).  Exit codes: 0 success,
2 validation error, 3 degenerate statistics, 4 I/O error.  Set HV_LOG to a
logging level name for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import distributions
from .functionals import (BracketingError, HuberParams, expectile,
                          huber_functional, quantile)
from .scoring import (ConvexSpec, Quadratic, absolute_error,
                      consistent_expectile_score, consistent_huber_fn,
                      consistent_quantile_score, elementary_huber_fn,
                      huber_loss_fn, squared_error)
from .simulation import CompetitorSet, EnvironmentConfig, switching_experiment
from .verification import (DegenerateTestError, ForecastDataset,
                           dominance_check, dm_test, mean_score,
                           murphy_diagram, skill_score)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# stable serialization: floats at 17 significant digits
# ---------------------------------------------------------------------------

def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def dumps_stable(obj, indent: int = 0) -> str:
    pad = "  " * indent
    child = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{child}{json.dumps(str(k))}: {dumps_stable(v, indent + 1)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{child}{dumps_stable(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return format_number(obj)


def write_text(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def emit_json(obj, path: str | None):
    write_text(dumps_stable(obj) + "\n", path)


def csv_text(rows) -> str:
    lines = []
    for row in rows:
        cells = [cell if isinstance(cell, str) else format_number(cell)
                 for cell in row]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# shared flag handling
# ---------------------------------------------------------------------------

def _load_json_arg(text: str) -> dict:
    """Inline JSON object, or a path to a JSON file."""
    stripped = text.strip()
    if stripped.startswith("{"):
        return json.loads(stripped)
    with open(text) as fh:
        return json.load(fh)


def _convex_spec(args) -> ConvexSpec:
    if getattr(args, "phi", None):
        return ConvexSpec.from_dict(_load_json_arg(args.phi))
    return Quadratic()


def _huber_params(args) -> HuberParams:
    return HuberParams(args.alpha, args.a, args.b)


def _distribution(args) -> distributions.Distribution:
    if args.dist:
        return distributions.from_spec(_load_json_arg(args.dist))
    if not args.input:
        raise ValueError("provide --input (sample or CDF file) or --dist")
    if args.input_kind == "cdf":
        return distributions.load_cdf_file(args.input)
    return distributions.load_sample_file(args.input)


def _dataset(args) -> ForecastDataset:
    if not args.input:
        raise ValueError("--input CSV is required")
    return ForecastDataset.from_csv(args.input)


def _score_fn(args):
    kind = args.score
    if kind == "squared":
        return squared_error
    if kind == "absolute":
        return absolute_error
    if kind == "huber":
        return huber_loss_fn(_huber_params(args))
    if kind == "consistent-huber":
        return consistent_huber_fn(_convex_spec(args), _huber_params(args))
    if kind == "quantile":
        spec = _convex_spec(args)
        return lambda x, y: consistent_quantile_score(spec, args.alpha, x, y)
    if kind == "expectile":
        spec = _convex_spec(args)
        return lambda x, y: consistent_expectile_score(spec, args.alpha, x, y)
    if kind == "elementary":
        if args.theta is None:
            raise ValueError("--theta is required for the elementary score")
        return elementary_huber_fn(args.alpha, args.a, args.b, args.theta)
    raise ValueError(f"unknown score kind {kind!r}")


def _score_echo(args) -> dict:
    echo = {"kind": args.score}
    if args.score in ("huber", "consistent-huber", "elementary"):
        echo.update({"alpha": args.alpha, "a": args.a, "b": args.b})
    if args.score in ("quantile", "expectile"):
        echo["alpha"] = args.alpha
    if args.score == "elementary":
        echo["theta"] = args.theta
    if args.score in ("consistent-huber", "quantile", "expectile"):
        echo["phi"] = _convex_spec(args).to_dict()
    return echo


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_functional(args) -> int:
    dist = _distribution(args)
    if args.kind == "huber":
        interval = huber_functional(dist, _huber_params(args))
    elif args.kind == "quantile":
        interval = quantile(dist, args.alpha)
    else:
        value = expectile(dist, args.alpha)
        emit_json({"lo": value, "hi": value, "midpoint": value}, args.output)
        return 0
    emit_json({"lo": interval.lo, "hi": interval.hi,
               "midpoint": interval.midpoint}, args.output)
    return 0


def cmd_score(args) -> int:
    ds = _dataset(args)
    fn = _score_fn(args)
    result = {
        "score": _score_echo(args),
        "mean_scores": {name: mean_score(ds, name, fn) for name in ds.sources},
    }
    if args.reference:
        result["skill_scores"] = {
            name: skill_score(ds, name, args.reference, fn)
            for name in ds.sources if name != args.reference}
    emit_json(result, args.output)
    return 0


def cmd_murphy(args) -> int:
    ds = _dataset(args)
    params = _huber_params(args)
    curve = murphy_diagram(ds, params)
    names = list(curve.scores)
    rows = [["theta", "side", *names]]
    for theta, side, values in curve.rows():
        rows.append([theta, side, *values])
    write_text(csv_text(rows), args.output)
    summary = {
        "alpha": params.alpha, "a": params.a, "b": params.b,
        "sources": names,
        "cases": ds.n,
        "grid_size": int(curve.thetas.size),
        "areas": {name: curve.area(name) for name in names},
        "dominance": {},
    }
    for a_name in names:
        for b_name in names:
            if a_name != b_name:
                verdict = dominance_check(ds, a_name, b_name, params)
                summary["dominance"][f"{a_name}>={b_name}"] = verdict.dominates
    if args.plot:
        from .plots import murphy_figure, save_figure
        save_figure(murphy_figure(curve), args.plot)
        summary["plot"] = args.plot
    emit_json(summary, args.summary_output)
    return 0


def cmd_dm_test(args) -> int:
    ds = _dataset(args)
    names = list(ds.sources)
    pair = args.sources or names[:2]
    if len(pair) != 2:
        raise ValueError("dm-test needs exactly two forecast sources")
    result = dm_test(ds, pair[0], pair[1], _score_fn(args),
                     sidedness=args.sidedness, significance=args.significance)
    payload = {"source_a": pair[0], "source_b": pair[1],
               "score": _score_echo(args), **result.to_dict()}
    emit_json(payload, args.output)
    return 0


def cmd_dominance(args) -> int:
    ds = _dataset(args)
    names = list(ds.sources)
    pair = args.sources or names[:2]
    if len(pair) != 2:
        raise ValueError("dominance needs exactly two forecast sources")
    params = _huber_params(args)
    verdict = dominance_check(ds, pair[0], pair[1], params)
    emit_json({"source_a": pair[0], "source_b": pair[1],
               "alpha": params.alpha, "a": params.a, "b": params.b,
               **verdict.to_dict()}, args.output)
    return 0


def cmd_simulate(args) -> int:
    cfg = EnvironmentConfig(contamination_rate=args.contamination,
                            spike_floor=not args.literal_spike)
    competitors = CompetitorSet(clone_ideal=args.clone_ideal)
    report = switching_experiment(
        cfg, reps=args.reps, days=args.days, significance=args.significance,
        seed=args.seed, competitors=competitors, threads=args.threads)
    emit_json(report.to_dict(), args.output)
    if args.output_csv:
        write_text(csv_text(report.table_rows()), args.output_csv)
    if args.plot:
        from .plots import save_figure, switching_figure
        save_figure(switching_figure(report), args.plot)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_params(sub, alpha=0.5, a=1.0, b=None):
    sub.add_argument("--alpha", type=float, default=alpha,
                     help="asymmetry level in (0,1)")
    sub.add_argument("--a", type=float, default=a, help="lower cap width")
    sub.add_argument("--b", type=float, default=b if b is not None else a,
                     help="upper cap width (defaults to --a)")


def _add_score_flags(sub):
    sub.add_argument("--score", default="huber",
                     choices=["huber", "squared", "absolute", "consistent-huber",
                              "quantile", "expectile", "elementary"],
                     help="scoring function family")
    sub.add_argument("--phi", help="convex spec as inline JSON or a file path")
    sub.add_argument("--theta", type=float,
                     help="decision threshold for the elementary score")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="huberverify",
        description="Huber functionals, consistent scores, Murphy diagrams "
                    "and robust forecast verification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("functional", help="Huber functional/quantile/expectile "
                                          "of a distribution")
    p.add_argument("--input", help="one-column sample file or two-column CDF CSV")
    p.add_argument("--input-kind", choices=["sample", "cdf"], default="sample")
    p.add_argument("--dist", help="parametric distribution as inline JSON or path")
    p.add_argument("--kind", choices=["huber", "quantile", "expectile"],
                   default="huber")
    _add_params(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_functional)

    p = sub.add_parser("score", help="mean scores per forecast source")
    p.add_argument("--input", required=True, help="CSV with a y column")
    _add_params(p)
    _add_score_flags(p)
    p.add_argument("--reference", help="also emit skill scores against this source")
    p.add_argument("--output")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("murphy", help="Murphy diagram on the dominance grid")
    p.add_argument("--input", required=True)
    _add_params(p)
    p.add_argument("--output", help="curve CSV destination (default stdout)")
    p.add_argument("--summary-output", help="summary JSON destination "
                                            "(default stdout)")
    p.add_argument("--plot", help="render the diagram to this image file")
    p.set_defaults(func=cmd_murphy)

    p = sub.add_parser("dm-test", help="equal-predictive-performance test")
    p.add_argument("--input", required=True)
    p.add_argument("--sources", nargs=2, metavar=("A", "B"))
    _add_params(p)
    _add_score_flags(p)
    p.add_argument("--sidedness", choices=["one", "two"], default="two")
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--output")
    p.set_defaults(func=cmd_dm_test)

    p = sub.add_parser("dominance", help="empirical dominance between two sources")
    p.add_argument("--input", required=True)
    p.add_argument("--sources", nargs=2, metavar=("A", "B"))
    _add_params(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_dominance)

    p = sub.add_parser("simulate", help="contamination switching study")
    p.add_argument("--reps", type=int, default=400)
    p.add_argument("--days", type=int, default=730)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--contamination", type=float, default=0.05)
    p.add_argument("--literal-spike", action="store_true",
                   help="spikes scale*Exp(rate) instead of scale + Exp(rate)")
    p.add_argument("--clone-ideal", action="store_true",
                   help="replace every competitor with the ideal quote")
    p.add_argument("--output", help="report JSON destination (default stdout)")
    p.add_argument("--output-csv", help="rejection-rate table CSV destination")
    p.add_argument("--plot", help="render the rejection-rate figure here")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("HV_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DegenerateTestError as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KeyError, BracketingError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
