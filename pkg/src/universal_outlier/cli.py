"""Command-line interface.

Exit codes: 0 on success, 1 for usage or input errors, 2 for runtime
failures (including a GLRT budget refusal).

The output directory for relative paths defaults to the current directory
and can be changed with the ``UNIVERSAL_OUTLIER_OUTPUT_DIR`` environment
variable.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ._validation import BudgetExceededError, DegenerateMedianError, InputError
from .detectors import DEFAULT_SUBSET_BUDGET, DETECTORS, run_detector
from .exponents import bernoulli_grid, default_grid, mean_exponent_grid, optimal_exponent
from .harness import (
    DEFAULT_SEED,
    ConfigError,
    ExperimentConfig,
    load_config,
    render_plot,
    run_experiment,
    write_csv,
)
from .probability import Distribution, SequenceBatch

OUTPUT_DIR_ENV = "UNIVERSAL_OUTLIER_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _prob_list(text: str, name: str) -> Distribution:
    try:
        values = [float(v) for v in text.split(",")]
        return Distribution(values)
    except ValueError as exc:
        raise UsageError(f"--{name}: {exc}") from exc


def _distributions(args, required=True):
    explicit = args.pi is not None or args.mu is not None
    bern = args.theta_pi is not None or args.theta_mu is not None
    if explicit and bern:
        raise UsageError("give either --pi/--mu or --theta-pi/--theta-mu, not both")
    if explicit:
        if args.pi is None or args.mu is None:
            raise UsageError("--pi and --mu must be given together")
        return _prob_list(args.pi, "pi"), _prob_list(args.mu, "mu")
    if bern:
        if args.theta_pi is None or args.theta_mu is None:
            raise UsageError("--theta-pi and --theta-mu must be given together")
        try:
            return Distribution.bernoulli(args.theta_pi), Distribution.bernoulli(args.theta_mu)
        except InputError as exc:
            raise UsageError(str(exc)) from exc
    if required:
        raise UsageError("give --pi/--mu or --theta-pi/--theta-mu")
    return None, None


def _add_dist_args(p):
    p.add_argument("--pi", help="typical distribution, comma-separated probabilities")
    p.add_argument("--mu", help="outlier distribution, comma-separated probabilities")
    p.add_argument("--theta-pi", type=float, help="Bernoulli success probability of pi")
    p.add_argument("--theta-mu", type=float, help="Bernoulli success probability of mu")


def _output_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def read_batch(path) -> SequenceBatch:
    """Parse the plain-text batch format.

    First line ``M n K``, then ``M`` lines of ``n`` space-separated symbols,
    then an optional ``outliers: i j k`` line.
    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read batch file: {exc}") from exc
    numbered = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered:
        raise UsageError(f"{path}: empty batch file")
    lineno, head = numbered[0]
    try:
        m, n, k = (int(v) for v in head.split())
    except ValueError:
        raise UsageError(f"{path}:{lineno}: header must be 'M n |Y|'") from None
    rows, outliers = [], []
    for lineno, text in numbered[1:]:
        if text.startswith("outliers:"):
            if len(rows) != m:
                raise UsageError(f"{path}:{lineno}: outliers line before all {m} rows")
            try:
                outliers = [int(v) for v in text[len("outliers:"):].split()]
            except ValueError:
                raise UsageError(f"{path}:{lineno}: outlier indices must be integers") from None
            continue
        if len(rows) == m:
            raise UsageError(f"{path}:{lineno}: more than M={m} rows")
        try:
            row = [int(v) for v in text.split()]
        except ValueError:
            raise UsageError(f"{path}:{lineno}: symbols must be integers") from None
        if len(row) != n:
            raise UsageError(f"{path}:{lineno}: expected {n} symbols, got {len(row)}")
        if any(v < 0 or v >= k for v in row):
            raise UsageError(f"{path}:{lineno}: symbol out of range for |Y|={k}")
        rows.append(row)
    if len(rows) != m:
        raise UsageError(f"{path}: expected {m} rows, got {len(rows)}")
    try:
        return SequenceBatch(rows, outliers, k)
    except InputError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def write_batch(batch: SequenceBatch, path) -> None:
    lines = [f"{batch.m} {batch.n} {batch.alphabet_size}"]
    lines += [" ".join(str(v) for v in row) for row in batch.data.tolist()]
    if batch.outlier_indices:
        lines.append("outliers: " + " ".join(str(i) for i in sorted(batch.outlier_indices)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------- commands


def cmd_exponent(args) -> int:
    pi, mu = _distributions(args)
    if pi == mu:
        raise UsageError("π ≠ μ required (pi and mu are identical)")
    print(f"optimal_exponent_2B = {optimal_exponent(pi, mu):.12g}")
    if args.c is not None:
        if not 0 <= args.c <= 1:
            raise UsageError("--c must lie in [0, 1]")
        if pi.alphabet_size == 2:
            grid, res = bernoulli_grid(step=args.grid_step), args.grid_step
        else:
            grid, res = default_grid(pi.alphabet_size)
        result = mean_exponent_grid(pi, mu, args.c, grid, resolution=res)
        q1, q2 = result.argmin_pair
        print(f"mean_exponent_grid = {result.value:.12g}")
        print(f"grid_resolution = {result.grid_resolution:.12g}")
        print("argmin_q1 = " + ",".join(f"{v:.12g}" for v in q1.probs))
        print("argmin_q2 = " + ",".join(f"{v:.12g}" for v in q2.probs))
    return EXIT_OK


def cmd_detect(args) -> int:
    batch = read_batch(args.input)
    t = args.t if args.t is not None else batch.t
    if not t:
        raise UsageError("--t is required when the batch has no outliers line")
    pi = mu = None
    if args.test == "ml":
        pi, mu = _distributions(args)
    else:
        _distributions(args, required=False)
    try:
        decision = run_detector(args.test, batch, t, rho=args.rho,
                                subset_budget=args.subset_budget, pi=pi, mu=mu)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except DegenerateMedianError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(" ".join(str(i) for i in decision.indices))
    return EXIT_OK


def _run_and_write(cfg: ExperimentConfig, plot: bool) -> int:
    out = _output_path(cfg.output)
    svg = _output_path(cfg.plot) if cfg.plot else out.with_suffix(".svg")
    print(f"seed = {cfg.seed}")
    result = run_experiment(cfg)
    write_csv(result, out)
    print(f"csv = {out}")
    if plot:
        render_plot(result, svg)
        print(f"svg = {svg}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers is not None:
            cfg.workers = args.workers
            cfg.validate()
        if args.output is not None:
            # the plot follows an overridden CSV path
            cfg.output, cfg.plot = args.output, None
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    return _run_and_write(cfg, not args.no_plot)


def cmd_bound(args) -> int:
    pi, mu = _distributions(args)
    data = {
        "kind": "bound-check",
        "distribution": {"kind": "explicit", "pi": pi.probs.tolist(), "mu": mu.probs.tolist()},
        "m": args.m, "n": args.n, "t": args.t,
        "eps": [float(e) for e in args.eps.split(",")],
        "runs": args.trials, "seed": args.seed, "output": args.output,
        "workers": args.workers,
    }
    try:
        cfg = ExperimentConfig.from_dict(data)
    except (ConfigError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return _run_and_write(cfg, not args.no_plot)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="universal-outlier",
                     description="Universal outlier hypothesis testing toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("exponent", help="optimal and mean-test grid exponents")
    _add_dist_args(p)
    p.add_argument("--c", type=float, help="outlier proportion for the mean-test exponent")
    p.add_argument("--grid-step", type=float, default=0.005,
                   help="Bernoulli grid spacing (grid starts at 0.001)")
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("detect", help="run a detector on a batch file")
    p.add_argument("--input", required=True)
    p.add_argument("--test", required=True, choices=DETECTORS)
    p.add_argument("--t", type=int)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--subset-budget", type=int, default=DEFAULT_SUBSET_BUDGET)
    _add_dist_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("experiment", help="run an experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bound", help="check the Hoeffding bounds by simulation")
    _add_dist_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", required=True, help="comma-separated eps values")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", default="bound_check.csv")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
