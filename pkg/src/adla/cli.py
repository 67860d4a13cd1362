"""Command-line front end: ``adla simulate | assess | threshold | qq``.

Exit status: 0 success, 1 usage error, 2 data or format error, 3 leakage
detected (``assess --fail-on-leak``). Machine-readable output goes to
stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from adla import __version__
from adla.assess import (assess_pair, default_grid, detection_curve, traces_to_detection,
                         write_curve_csv, write_stats_csv)
from adla.plotting import statistics_svg
from adla.simulate import ConfigError, generate_pair, preset, scenario_catalog
from adla.stats import qq_fit, qq_points
from adla.threshold import CANONICAL_ALPHA, DEFAULT_J_MAX, METHODS, derive_thresholds, report_text
from adla.trace_io import (TraceError, TracePair, TraceSet, is_csv, load_trace_set,
                           save_trace_set, write_csv)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_LEAK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _probability(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return value


def _grid(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated trace counts, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="adla",
        description="Leakage assessment with Welch's t-test (TVLA) and the "
                    "two-sample Anderson-Darling test (ADLA).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    threads_help = "worker threads (default: $ADLA_THREADS or 1); results do not depend on it"

    p = sub.add_parser("simulate", help="generate a synthetic fixed-vs-fixed trace pair",
                       description="Generate a synthetic fixed-vs-fixed trace pair from a named scenario.")
    p.add_argument("--scenario", required=True, choices=sorted(scenario_catalog()),
                   help="scenario preset")
    p.add_argument("--traces", type=_positive_int, default=1000, help="traces per condition (default: 1000)")
    p.add_argument("--samples", type=_positive_int, default=None,
                   help="time samples per trace (default: the preset's)")
    p.add_argument("--seed", type=_non_negative_int, default=0, help="random seed (default: 0)")
    p.add_argument("--out-a", required=True, type=Path, help="output file for condition A (.csv for text)")
    p.add_argument("--out-b", required=True, type=Path, help="output file for condition B (.csv for text)")
    p.add_argument("--dtype", choices=("real32", "real64"), default="real64",
                   help="binary sample type (default: real64)")
    p.add_argument("--threads", type=_positive_int, default=None, help=threads_help)

    p = sub.add_parser("assess", help="run TVLA and ADLA on every time sample",
                       description="Run TVLA and ADLA on every time sample of two trace sets.")
    p.add_argument("--set-a", required=True, type=Path, help="trace set for condition A")
    p.add_argument("--set-b", required=True, type=Path, help="trace set for condition B")
    p.add_argument("--alpha", type=_probability, default=CANONICAL_ALPHA,
                   help=f"significance level (default: {CANONICAL_ALPHA:g})")
    p.add_argument("--csv", type=Path, help="write per-sample statistics as CSV")
    p.add_argument("--json", type=Path, help="write the full report as JSON")
    p.add_argument("--svg", type=Path, help="write the two normalized-statistic panels as SVG")
    p.add_argument("--max-per-sample", type=_non_negative_int, default=None,
                   help="omit per-sample entries from the JSON report above this many samples")
    p.add_argument("--fail-on-leak", action="store_true", help="exit with status 3 if any leak is detected")
    p.add_argument("--grid", type=_grid, default=None,
                   help="comma-separated trace counts for a detection curve")
    p.add_argument("--curve", type=Path,
                   help="write the detection curve as CSV (default grid: 20 even steps)")
    p.add_argument("--threads", type=_positive_int, default=None, help=threads_help)

    p = sub.add_parser("threshold", help="derive the TVLA and ADLA thresholds",
                       description="Derive tau_t and tau_A for a significance level.")
    p.add_argument("--alpha", type=float, default=CANONICAL_ALPHA,
                   help=f"significance level in (0, 0.5) (default: {CANONICAL_ALPHA:g})")
    p.add_argument("--mc-check", type=_positive_int, default=None, metavar="DRAWS",
                   help="cross-check tau_A against this many Monte Carlo draws (alpha >= 1e-4)")
    p.add_argument("--mc-seed", type=_non_negative_int, default=0, help="Monte Carlo seed (default: 0)")
    p.add_argument("--j-max", type=_positive_int, default=DEFAULT_J_MAX,
                   help=f"series truncation for Monte Carlo draws (default: {DEFAULT_J_MAX})")
    p.add_argument("--method", choices=METHODS, default="pearson_fit",
                   help="how tau_A is obtained (default: pearson_fit)")
    p.add_argument("--format", choices=("text", "json"), default="text", help="output format (default: text)")
    p.add_argument("--threads", type=_positive_int, default=None, help=threads_help)

    p = sub.add_parser("qq", help="normal Q-Q points for one time sample",
                       description="Write normal Q-Q points (theoretical, empirical) for one time sample.")
    p.add_argument("--set", required=True, type=Path, help="trace set")
    p.add_argument("--sample-index", required=True, type=_non_negative_int, help="time sample (column) index")
    p.add_argument("--out", type=Path, default=None, help="output CSV (default: stdout)")
    return parser


def _save(trace_set, path):
    if is_csv(path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_csv(trace_set, fh)
    else:
        save_trace_set(trace_set, path)


def cmd_simulate(args):
    changes = {"n_traces": args.traces, "seed": args.seed}
    if args.samples is not None:
        changes["n_samples"] = args.samples
    try:
        config = preset(args.scenario, **changes)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    pair = generate_pair(config, threads=args.threads)
    for ts, path in ((pair.set_a, args.out_a), (pair.set_b, args.out_b)):
        if args.dtype == "real32" and not is_csv(path):
            ts = TraceSet(ts.samples.astype("float32"), ts.label)
        _save(ts, path)
    print(f"wrote {config.n_traces}x{config.n_samples} traces to {args.out_a} and {args.out_b}",
          file=sys.stderr)
    return EXIT_OK


def cmd_assess(args):
    pair = TracePair(load_trace_set(args.set_a), load_trace_set(args.set_b))
    try:
        thresholds = derive_thresholds(args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = assess_pair(pair, thresholds, threads=args.threads)

    summary = report.to_dict(max_per_sample=0)
    del summary["per_sample"]
    if args.grid is not None or args.curve is not None:
        grid = args.grid if args.grid is not None else default_grid(pair.n_traces)
        try:
            curve = detection_curve(pair, thresholds, grid, threads=args.threads)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.curve is not None:
            with open(args.curve, "w", newline="", encoding="utf-8") as fh:
                write_curve_csv(curve, fh)
        tvla_n, adla_n = traces_to_detection(curve)
        summary["detection_curve"] = [list(p) for p in curve]
        summary["traces_to_detection"] = {"tvla": tvla_n, "adla": adla_n}

    if args.csv is not None:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            write_stats_csv(report, fh)
    if args.json is not None:
        args.json.write_text(report.to_json(args.max_per_sample), encoding="utf-8")
    if args.svg is not None:
        args.svg.write_text(statistics_svg(report), encoding="utf-8")

    print(json.dumps(summary, indent=2))
    print(f"TVLA leaks: {len(report.tvla_leaks)}, ADLA leaks: {len(report.adla_leaks)}, "
          f"degenerate: {len(report.degenerate_samples)}", file=sys.stderr)
    if args.fail_on_leak and report.detected:
        return EXIT_LEAK
    return EXIT_OK


def cmd_threshold(args):
    try:
        spec = derive_thresholds(args.alpha, args.mc_check, method=args.method,
                                 j_max=args.j_max, seed=args.mc_seed, threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        print(json.dumps(spec.to_dict(), indent=2))
    else:
        sys.stdout.write(report_text(spec))
    if args.mc_check and args.alpha < 1e-4:
        print("note: Monte Carlo check skipped, alpha is below 1e-4", file=sys.stderr)
    return EXIT_OK


def cmd_qq(args):
    ts = load_trace_set(args.set)
    if args.sample_index >= ts.n_samples:
        raise UsageError(f"sample index {args.sample_index} out of range (set has {ts.n_samples} samples)")
    points = qq_points(ts.samples[:, args.sample_index])
    fit = qq_fit(points)
    lines = ["theoretical,empirical"]
    lines += [f"{t!r},{float(e)!r}" for t, e in zip(points.theoretical.tolist(), points.empirical)]
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")
    print(f"slope {fit.slope:.6g}, intercept {fit.intercept:.6g}, 1 - r^2 {fit.departure:.6g}",
          file=sys.stderr)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "assess": cmd_assess, "threshold": cmd_threshold, "qq": cmd_qq}


def run(args) -> int:
    """Execute a parsed invocation and map failures to exit codes."""
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"adla {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TraceError, OSError, ValueError) as exc:
        print(f"adla {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
