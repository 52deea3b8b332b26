"""Command-line interface.

Subcommands::

    meanchange calibrate --alpha A --mu0 M --var0 V --eta E
    meanchange lfd --p0 beta:4,16 --eta 0.21
    meanchange simulate --p0 beta:4,16 --p1 beta:4.5,16 --eta 0.21 --alpha 0.1 0.03 0.01
    meanchange monitor cases.csv --value-col cases --population 1e6 --smooth 3 \
        --window 120 150 --eta-multiple 3.3 --alpha 0.01

Every subcommand accepts ``--output csv|json``. Exit status is 0 on
success, 1 on usage errors and 2 on data or numerical errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .calibration import calibrate
from .distributions import BetaDistribution, BoundedDistribution, EmpiricalDistribution
from .exceptions import MeanChangeError
from .lfd import MeanChangeParams, kl_small_delta, lambda_star_small_delta, solve_lambda_star
from .monitoring import MonitorConfig, ingest_csv, monitor
from .simulation import DETECTOR_KINDS, OC_HEADER, oc_sweep

log = logging.getLogger("meanchange")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)


def _jsonable(v):
    if isinstance(v, float):
        return float(format(v, ".6g"))
    return v


def parse_distribution(text: str) -> BoundedDistribution:
    """``beta:A,B`` or ``csv:PATH[:COLUMN]`` (empirical law of a data column)."""
    kind, _, rest = text.partition(":")
    if kind == "beta":
        try:
            a, b = (float(v) for v in rest.split(","))
        except ValueError:
            raise UsageError(f"expected beta:A,B, got {text!r}") from None
        return BetaDistribution(a, b)
    if kind == "csv":
        path, _, col = rest.partition(":")
        records, _ = ingest_csv(path, col or 1)
        return EmpiricalDistribution([r.value for r in records])
    raise UsageError(f"unknown distribution {text!r}; use beta:A,B or csv:PATH[:COLUMN]")


def _emit_table(header, rows, output, out, extra=None):
    if output == "json":
        payload = [{k: _jsonable(v) for k, v in zip(header, row)} for row in rows]
        if extra is not None:
            payload = {**{k: _jsonable(v) for k, v in extra.items()}, "rows": payload}
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join(fmt(v) for v in row) + "\n")


def cmd_calibrate(args, out):
    cal = calibrate(args.alpha, MeanChangeParams(args.mu0, args.var0, args.eta))
    d = cal.as_dict()
    _emit_table(list(d), [list(d.values())], args.output, out)


def cmd_lfd(args, out):
    p0 = parse_distribution(args.p0)
    lfd = solve_lambda_star(p0, args.eta)
    params = MeanChangeParams.from_distribution(p0, args.eta)
    d = {
        "mu0": p0.mean,
        "var0": p0.var,
        "eta": lfd.eta,
        "lambda_star": lfd.lam,
        "kappa": lfd.kappa,
        "kl": lfd.kl,
        "lambda_small_delta": lambda_star_small_delta(params),
        "kl_small_delta": kl_small_delta(params),
    }
    _emit_table(list(d), [list(d.values())], args.output, out)


def cmd_simulate(args, out):
    table = oc_sweep(
        parse_distribution(args.p0),
        parse_distribution(args.p1),
        args.alpha,
        args.detectors,
        eta=args.eta,
        trials=args.trials,
        wadd_cap=args.wadd_cap,
        mtfa_cap=args.mtfa_cap,
        seed=args.seed,
        n_jobs=args.jobs,
    )
    for r in table.rows:
        if r.error:
            log.warning("alpha=%s %s: %s", fmt(r.alpha), r.detector, r.error)
        elif r.mtfa_lower_bound:
            log.info("alpha=%s %s: mtfa is a lower bound (%.1f%% censored)",
                     fmt(r.alpha), r.detector, 100 * r.censored_frac)
    _emit_table(OC_HEADER, [r.values() for r in table.rows], args.output, out)


def cmd_monitor(args, out):
    records, _ = ingest_csv(args.input, args.value_col, date_col=args.date_col)
    config = MonitorConfig(
        window=tuple(args.window),
        alpha=args.alpha,
        eta=args.eta,
        eta_multiple=args.eta_multiple,
        smooth=args.smooth,
        population=args.population,
        clip=args.clip,
        refined=args.refined,
    )
    rep = monitor([r.value for r in records], config, labels=[r.t for r in records])
    summary = {"mu0": rep.mu0, "var0": rep.var0, "eta": rep.eta, "threshold": rep.threshold,
               "first_alarm": rep.first_alarm}
    rows = [(t, float(x), float(s), rep.threshold, bool(a))
            for t, x, s, a in zip(rep.labels, rep.x, rep.statistic, rep.alarmed)]
    if args.output == "csv":
        log.info("mu0=%s var0=%s eta=%s threshold=%s first_alarm=%s",
                 *(fmt(v) for v in summary.values()))
    _emit_table(("t", "x", "statistic", "threshold", "alarmed"), rows, args.output, out,
                extra=summary if args.output == "json" else None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="meanchange", description="Quickest detection of a mean increase in [0, 1] data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--output", choices=("csv", "json"), default="csv")
        p.set_defaults(func=func)
        return p

    p = add("calibrate", cmd_calibrate, "thresholds for a false-alarm target")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--mu0", type=float, required=True)
    p.add_argument("--var0", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)

    p = add("lfd", cmd_lfd, "least-favourable tilt of a pre-change law")
    p.add_argument("--p0", required=True, help="beta:A,B or csv:PATH[:COLUMN]")
    p.add_argument("--eta", type=float, required=True)

    p = add("simulate", cmd_simulate, "Monte Carlo delay / false-alarm sweep")
    p.add_argument("--p0", default="beta:4,16")
    p.add_argument("--p1", default="beta:4.5,16")
    p.add_argument("--eta", type=float, default=0.21)
    p.add_argument("--alpha", type=float, nargs="+", default=[0.1, 0.03, 0.01])
    p.add_argument("--detectors", nargs="+", choices=DETECTOR_KINDS, default=list(DETECTOR_KINDS))
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--wadd-cap", type=int, default=10 ** 5)
    p.add_argument("--mtfa-cap", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)

    p = add("monitor", cmd_monitor, "run the mean-change test over a CSV series")
    p.add_argument("input")
    p.add_argument("--value-col", default="1", help="column name or 0-based index (default 1)")
    p.add_argument("--date-col", default=None)
    p.add_argument("--population", type=float, default=None, help="divide raw values by this")
    p.add_argument("--smooth", type=int, default=1, help="moving-average width")
    p.add_argument("--window", type=int, nargs=2, required=True, metavar=("START", "END"),
                   help="pre-change window [START, END) in smoothed-series positions")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--eta", type=float)
    g.add_argument("--eta-multiple", type=float)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--refined", action="store_true", help="use the refined threshold")
    p.add_argument("--clip", action="store_true", help="clip values to [0, 1] instead of rejecting")
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args, out)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except (MeanChangeError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
