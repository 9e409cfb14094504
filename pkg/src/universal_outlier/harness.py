"""Seeded Monte Carlo experiments: batch generation, sweeps, CSV and SVG output.

Every random draw comes from a generator derived from ``(seed, sweep index,
trial index)`` via :class:`numpy.random.SeedSequence`, so results do not depend
on the number of worker threads or on the order in which trials finish.

The error metric is the exact-set error: a trial counts as an error whenever
the declared outlier set differs from the ground truth. Outlier rows are placed
uniformly at random in each batch; since every detector is permutation
equivariant this leaves the error probability unchanged.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ._validation import DegenerateMedianError, InputError
from .detectors import DEFAULT_SUBSET_BUDGET, DETECTORS, run_detector
from .estimators import mean_estimate, median_estimate
from .exponents import (
    bernoulli_grid,
    hoeffding_mean_bound,
    hoeffding_median_bound,
    mean_exponent_grid,
    optimal_exponent,
)
from .probability import Distribution, SequenceBatch, in_linf_ball, sample_sequence

logger = logging.getLogger(__name__)

CSV_HEADER = ("experiment", "sweep_param", "sweep_value", "detector",
              "avg_error", "trials", "failures", "extra")
KINDS = ("fig2", "fig3", "bound-check", "custom")
FIG2_C_VALUES = tuple(round(0.05 * k, 2) for k in range(12))
FIG3_C_VALUES = tuple(round(0.05 + 0.01 * k, 2) for k in range(46))
DEFAULT_SEED = 20240601


class ConfigError(InputError):
    """Invalid experiment configuration."""


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=keys)))


def outlier_count(c: float, m: int) -> int:
    """``floor(c m)`` without floating-point undershoot (0.29 * 100 -> 29)."""
    return math.floor(round(c * m, 9))


def generate_batch(pi, mu, m: int, t: int, n: int, rng) -> SequenceBatch:
    """Draw ``t`` rows from ``mu`` and ``m - t`` rows from ``pi`` at random positions."""
    pi = pi if isinstance(pi, Distribution) else Distribution(pi)
    mu = mu if isinstance(mu, Distribution) else Distribution(mu)
    if pi.alphabet_size != mu.alphabet_size:
        raise InputError("pi and mu must share the alphabet")
    if t < 0 or 2 * t >= m:
        raise InputError(f"need 0 <= t < m/2, got t={t}, m={m}")
    if n < 1:
        raise InputError("n must be positive")
    rng = np.random.default_rng(rng)
    outliers = np.sort(rng.permutation(m)[:t])
    is_outlier = np.zeros(m, dtype=bool)
    is_outlier[outliers] = True
    data = np.empty((m, n), dtype=np.int64)
    if t:
        data[is_outlier] = sample_sequence(mu, t * n, rng).reshape(t, n)
    data[~is_outlier] = sample_sequence(pi, (m - t) * n, rng).reshape(m - t, n)
    return SequenceBatch(data, outliers.tolist(), pi.alphabet_size)


def random_categorical(alphabet_size: int, rng) -> Distribution:
    """Uniform(0, 1) weights normalised to one; redrawn in the measure-zero case of a zero."""
    if alphabet_size < 2:
        raise InputError("alphabet_size must be at least 2")
    rng = np.random.default_rng(rng)
    while True:
        u = rng.random(alphabet_size)
        if np.all(u > 0):
            return Distribution(u / u.sum())


# --------------------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment.

    ``distribution`` is one of::

        {"kind": "explicit", "pi": [...], "mu": [...]}
        {"kind": "bernoulli", "theta_pi": 0.3, "theta_mu": 0.8}
        {"kind": "bernoulli", "theta_pairs": [{"theta_mu": 0.8, "theta_pi": 0.3}, ...]}
        {"kind": "random-categorical"}

    Bernoulli parameters are success probabilities of symbol 1. For random
    categorical laws, ``pair_scope`` picks whether each trial (``"trial"``)
    or each sweep point (``"point"``) draws its own ``(pi, mu)``.
    """

    kind: str
    distribution: dict
    alphabet_size: int | None = None
    m: int | None = None
    n: int | None = None
    c_values: list | None = None
    t: int | None = None
    rho: float = 0.5
    detectors: list = field(default_factory=lambda: ["mean", "median1", "median2"])
    runs: int = 1
    seed: int = DEFAULT_SEED
    output: str = "results.csv"
    plot: str | None = None
    grid_start: float = 0.001
    grid_step: float = 0.005
    grid_stop: float = 0.996
    eps: list | None = None
    subset_budget: int = DEFAULT_SUBSET_BUDGET
    workers: int = 1
    error_metric: str = "exact"
    pair_scope: str = "trial"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        missing = [k for k in ("kind", "distribution") if k not in data]
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(missing)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # -- derived views -------------------------------------------------------

    def distribution_pairs(self) -> list[tuple[Distribution, Distribution, str]]:
        """``(pi, mu, label)`` triples for explicit and Bernoulli specs."""
        spec = self.distribution
        kind = spec.get("kind")
        if kind == "explicit":
            pi, mu = Distribution(spec["pi"]), Distribution(spec["mu"])
            return [(pi, mu, "explicit")]
        if kind == "bernoulli":
            pairs = spec.get("theta_pairs")
            if pairs is None:
                pairs = [{"theta_mu": spec["theta_mu"], "theta_pi": spec["theta_pi"]}]
            out = []
            for p in pairs:
                tm, tp = float(p["theta_mu"]), float(p["theta_pi"])
                out.append((Distribution.bernoulli(tp), Distribution.bernoulli(tm),
                            f"theta_mu={tm:g} theta_pi={tp:g}"))
            return out
        raise ConfigError(f"distribution kind {kind!r} has no fixed pair")

    def sweep(self) -> list[tuple[float | None, int]]:
        """``(c, t)`` per sweep point; ``c`` is None when ``t`` was given directly."""
        if self.c_values is not None:
            return [(float(c), outlier_count(float(c), self.m)) for c in self.c_values]
        return [(None, int(self.t))]

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self._validate_distribution()
        if self.runs < 1 and self.kind != "fig2":
            raise ConfigError("runs must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.error_metric not in ("exact", "hamming"):
            raise ConfigError("error_metric must be 'exact' or 'hamming'")
        if self.pair_scope not in ("trial", "point"):
            raise ConfigError("pair_scope must be 'trial' or 'point'")
        if self.kind == "fig2":
            if self.distribution.get("kind") != "bernoulli":
                raise ConfigError("fig2 needs a Bernoulli distribution spec")
            if self.c_values is None:
                self.c_values = list(FIG2_C_VALUES)
            if any(not 0 <= c <= 1 for c in self.c_values):
                raise ConfigError("c values must lie in [0, 1]")
            return
        for name in ("m", "n"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if (self.c_values is None) == (self.t is None):
            raise ConfigError("give exactly one of c_values and t")
        if self.c_values is not None and any(not 0 <= c <= 1 for c in self.c_values):
            raise ConfigError("c values must lie in [0, 1]")
        if self.t is not None:
            lo = 0 if self.kind in ("custom", "bound-check") else 1
            if not lo <= self.t or 2 * self.t >= self.m:
                raise ConfigError(f"need {lo} <= t < M/2, got t={self.t}, M={self.m}")
        if not 0 < self.rho < 1:
            raise ConfigError("rho must lie in (0, 1)")
        if self.kind == "bound-check":
            if self.c_values is not None and len(self.c_values) != 1:
                raise ConfigError("bound-check takes a single c value (or t)")
            if not self.eps or any(e <= 0 for e in self.eps):
                raise ConfigError("bound-check needs a non-empty list of positive eps")
            return
        bad = [d for d in self.detectors if d not in DETECTORS]
        if bad or not self.detectors:
            raise ConfigError(f"unknown detectors {bad}; choose from {list(DETECTORS)}")

    def _validate_distribution(self) -> None:
        spec = self.distribution
        if not isinstance(spec, dict):
            raise ConfigError("distribution must be an object")
        allowed = {
            "explicit": {"kind", "pi", "mu"},
            "bernoulli": {"kind", "theta_pi", "theta_mu", "theta_pairs"},
            "random-categorical": {"kind"},
        }
        kind = spec.get("kind")
        if kind not in allowed:
            raise ConfigError(f"distribution kind must be one of {sorted(allowed)}")
        unknown = sorted(set(spec) - allowed[kind])
        if unknown:
            raise ConfigError(f"unknown distribution keys: {', '.join(unknown)}")
        if kind == "random-categorical":
            if self.alphabet_size is None or self.alphabet_size < 2:
                raise ConfigError("random-categorical needs alphabet_size >= 2")
            return
        if kind == "bernoulli":
            has_pair = "theta_pi" in spec or "theta_mu" in spec
            if has_pair == ("theta_pairs" in spec):
                raise ConfigError("give either theta_pi/theta_mu or theta_pairs")
            for p in spec.get("theta_pairs", []):
                if not isinstance(p, dict) or set(p) != {"theta_mu", "theta_pi"}:
                    raise ConfigError("each theta pair needs exactly theta_mu and theta_pi")
        try:
            pairs = self.distribution_pairs()
        except (KeyError, InputError) as exc:
            raise ConfigError(f"invalid distribution spec: {exc}") from exc
        for pi, mu, label in pairs:
            if pi == mu:
                raise ConfigError(f"pi != mu required ({label})")
            if self.alphabet_size is None:
                self.alphabet_size = pi.alphabet_size
            elif pi.alphabet_size != self.alphabet_size or mu.alphabet_size != self.alphabet_size:
                raise ConfigError("distribution does not match alphabet_size")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return ExperimentConfig.from_dict(data)


# --------------------------------------------------------------------------- results


@dataclass
class ResultRow:
    experiment: str
    sweep_param: str
    sweep_value: float | None
    detector: str
    avg_error: float | None
    trials: int
    failures: int
    extra: str = ""
    wall_time: float = 0.0


@dataclass
class ExperimentResult:
    config: ExperimentConfig | None
    rows: list[ResultRow] = field(default_factory=list)

    def by_detector(self) -> dict[str, list[ResultRow]]:
        out: dict[str, list[ResultRow]] = {}
        for row in self.rows:
            out.setdefault(row.detector, []).append(row)
        return out

    def value(self, detector: str, sweep_value: float) -> float | None:
        for row in self.rows:
            if row.detector == detector and row.sweep_value is not None \
                    and math.isclose(row.sweep_value, sweep_value, abs_tol=1e-12):
                return row.avg_error
        raise KeyError((detector, sweep_value))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


# --------------------------------------------------------------------------- trials


@dataclass
class TrialOutcome:
    error: float | None
    failure: str | None = None


def run_trial(batch: SequenceBatch, detectors, params: dict) -> dict[str, TrialOutcome]:
    """Run each detector on one batch and compare against the ground truth.

    ``params`` holds ``t`` and optionally ``rho``, ``subset_budget``, ``pi``,
    ``mu`` and ``error_metric``. A detector that raises is recorded as a
    failure with the exception text; the other detectors still run.
    """
    t = params["t"]
    truth = batch.outlier_indices
    metric = params.get("error_metric", "exact")
    out = {}
    for name in detectors:
        try:
            decision = run_detector(
                name, batch, t,
                rho=params.get("rho", 0.5),
                subset_budget=params.get("subset_budget", DEFAULT_SUBSET_BUDGET),
                pi=params.get("pi"), mu=params.get("mu"),
            )
        except (DegenerateMedianError, InputError, RuntimeError) as exc:
            out[name] = TrialOutcome(None, f"{type(exc).__name__}: {exc}")
            continue
        if len(decision) != t:
            raise AssertionError(f"{name} returned {len(decision)} indices, expected {t}")
        chosen = decision.as_set()
        if metric == "exact":
            err = float(chosen != truth)
        else:
            err = len(truth - chosen) / max(len(truth), 1)
        out[name] = TrialOutcome(err)
    return out


def _map_trials(fn, count: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _aggregate(outcomes: list[dict[str, TrialOutcome]], name: str) -> tuple[float | None, int, int]:
    errors = [o[name].error for o in outcomes if o[name].failure is None]
    failures = len(outcomes) - len(errors)
    avg = math.fsum(errors) / len(errors) if errors else None
    return avg, len(errors), failures


def _sweep_rows(cfg: ExperimentConfig, experiment: str, draw_pair) -> list[ResultRow]:
    """One row per (sweep point, detector); ``draw_pair(s, rng)`` yields ``(pi, mu)``."""
    rows = []
    sweep_param = "c" if cfg.c_values is not None else "t"
    for s, (c, t) in enumerate(cfg.sweep()):
        sweep_value = c if c is not None else t
        if t < (0 if experiment == "custom" else 1) or 2 * t >= cfg.m:
            note = f"inadmissible: T={t} violates 1 <= T < M/2 with M={cfg.m}"
            logger.info("sweep point %s=%s skipped (%s)", sweep_param, sweep_value, note)
            rows.extend(ResultRow(experiment, sweep_param, sweep_value, d, None, 0, 0, note)
                        for d in cfg.detectors)
            continue

        def one(trial, s=s, t=t):
            rng = trial_rng(cfg.seed, s, trial)
            pi, mu = draw_pair(s, rng)
            batch = generate_batch(pi, mu, cfg.m, t, cfg.n, rng)
            params = {"t": t, "rho": cfg.rho, "subset_budget": cfg.subset_budget,
                      "pi": pi, "mu": mu, "error_metric": cfg.error_metric}
            return run_trial(batch, cfg.detectors, params)

        start = time.perf_counter()
        outcomes = _map_trials(one, cfg.runs, cfg.workers)
        elapsed = time.perf_counter() - start
        for d in cfg.detectors:
            avg, trials, failures = _aggregate(outcomes, d)
            reasons = sorted({o[d].failure.split(":")[0] for o in outcomes if o[d].failure})
            extra = f"T={t};metric={cfg.error_metric}"
            if reasons:
                extra += ";failed=" + "|".join(reasons)
            rows.append(ResultRow(experiment, sweep_param, sweep_value, d, avg, trials,
                                  failures, extra, elapsed))
    return rows


def _random_pair(alphabet_size: int, rng) -> tuple[Distribution, Distribution]:
    while True:
        pi = random_categorical(alphabet_size, rng)
        mu = random_categorical(alphabet_size, rng)
        if pi != mu:
            return pi, mu


def _pair_source(config: ExperimentConfig):
    """``draw_pair(s, trial_rng)`` for the configured distribution spec and pair scope."""
    if config.distribution["kind"] != "random-categorical":
        pi, mu, _ = config.distribution_pairs()[0]
        return lambda s, rng: (pi, mu)
    k = config.alphabet_size
    if config.pair_scope == "trial":
        return lambda s, rng: _random_pair(k, rng)
    return lambda s, rng: _random_pair(k, trial_rng(config.seed, s))


# --------------------------------------------------------------------------- experiments


def run_experiment_fig2(config: ExperimentConfig) -> ExperimentResult:
    """Grid-evaluated mean-test exponent versus outlier proportion, per Bernoulli pair."""
    if config.kind != "fig2" or config.alphabet_size != 2:
        raise ConfigError("fig2 runs need a binary Bernoulli config")
    grid = bernoulli_grid(config.grid_start, config.grid_step, config.grid_stop)
    result = ExperimentResult(config)
    for pi, mu, label in config.distribution_pairs():
        two_b = optimal_exponent(pi, mu)
        for c in config.c_values:
            start = time.perf_counter()
            res = mean_exponent_grid(pi, mu, c, grid, resolution=config.grid_step)
            q1, q2 = (float(q.probs[1]) for q in res.argmin_pair)
            extra = (f"alpha_mean={_fmt(res.value)};two_b={_fmt(two_b)};"
                     f"theta_q1={_fmt(q1)};theta_q2={_fmt(q2)}")
            result.rows.append(ResultRow("fig2", "c", float(c), f"mean-exponent {label}",
                                         None, 0, 0, extra, time.perf_counter() - start))
    return result


def run_experiment_fig3(config: ExperimentConfig) -> ExperimentResult:
    """Average error of the detectors versus outlier proportion with random categorical laws.

    Each sweep point gets fresh laws. With ``pair_scope="trial"`` every trial
    draws its own pair, so the average also runs over the choice of laws;
    ``"point"`` shares one pair among all trials of a sweep point.
    """
    if config.kind != "fig3":
        raise ConfigError("not a fig3 config")
    return ExperimentResult(config, _sweep_rows(config, "fig3", _pair_source(config)))


def run_custom(config: ExperimentConfig) -> ExperimentResult:
    return ExperimentResult(config, _sweep_rows(config, "custom", _pair_source(config)))


def run_bound_check(config: ExperimentConfig) -> ExperimentResult:
    """Empirical frequency of the mean and median estimates leaving the eps-ball.

    Each row carries the matching analytic bound in ``extra``; a mean-estimate
    row whose bound precondition ``eps M >= T`` fails is flagged ``vacuous=1``.
    All eps values are evaluated on the same simulated batches.
    """
    if config.kind != "bound-check":
        raise ConfigError("not a bound-check config")
    if config.distribution["kind"] == "random-categorical":
        pi, mu = _random_pair(config.alphabet_size, trial_rng(config.seed, 0))
    else:
        pi, mu, _ = config.distribution_pairs()[0]
    _, t = config.sweep()[0]
    if 2 * t >= config.m:
        raise ConfigError(f"need T < M/2, got T={t}, M={config.m}")
    eps = [float(e) for e in config.eps]

    def one(trial):
        batch = generate_batch(pi, mu, config.m, t, config.n, trial_rng(config.seed, 0, trial))
        types = batch.type_matrix()
        mean = mean_estimate(types)
        try:
            median = median_estimate(types)
        except DegenerateMedianError:
            median = None
        return ([not in_linf_ball(mean, pi, e) for e in eps],
                None if median is None else [not in_linf_ball(median, pi, e) for e in eps])

    start = time.perf_counter()
    outcomes = _map_trials(one, config.runs, config.workers)
    elapsed = time.perf_counter() - start
    k, m, n = config.alphabet_size, config.m, config.n
    rows = []
    for i, e in enumerate(eps):
        ok = [o[1][i] for o in outcomes if o[1] is not None]
        median_freq = sum(ok) / len(ok) if ok else None
        median_bound = hoeffding_median_bound(k, m, t, n, e)
        rows.append(ResultRow("bound-check", "eps", e, "median-estimate", median_freq, len(ok),
                              len(outcomes) - len(ok),
                              f"bound={_fmt(median_bound)};T={t};n={n}", elapsed))
        mean_freq = sum(o[0][i] for o in outcomes) / len(outcomes)
        mb = hoeffding_mean_bound(k, m, t, e)
        rows.append(ResultRow("bound-check", "eps", e, "mean-estimate", mean_freq, len(outcomes), 0,
                              f"bound={_fmt(mb.value)};vacuous={int(mb.vacuous)};T={t};n={n}",
                              elapsed))
    return ExperimentResult(config, rows)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    runner = {
        "fig2": run_experiment_fig2,
        "fig3": run_experiment_fig3,
        "bound-check": run_bound_check,
        "custom": run_custom,
    }[config.kind]
    return runner(config)


def parse_extra(extra: str) -> dict[str, str]:
    """Split an ``extra`` cell of the form ``key=value;key=value``."""
    out = {}
    for part in extra.split(";"):
        if "=" in part:
            key, value = part.split("=", 1)
            out[key] = value
    return out


# --------------------------------------------------------------------------- output


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def _atomic_write(path: Path, writer) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    try:
        directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer(fh)
        os.chmod(tmp, 0o666 & ~_umask())  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        if isinstance(exc, OSError):
            raise OSError(f"cannot write {path}: {exc}") from exc
        raise


def write_csv(result: ExperimentResult, path) -> Path:
    """Write result rows as UTF-8 CSV with LF line endings and 12 significant digits."""
    def writer(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in result.rows:
            w.writerow([r.experiment, r.sweep_param, _fmt(r.sweep_value), r.detector,
                        _fmt(r.avg_error), r.trials, r.failures, r.extra])
    _atomic_write(Path(path), writer)
    return Path(path)


def read_csv(path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def render_plot(result: ExperimentResult, path) -> Path:
    """Render one series per detector (or Bernoulli pair) as an SVG file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "universal-outlier"
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    kind = result.rows[0].experiment if result.rows else (result.config.kind if result.config else "")
    for name, rows in result.by_detector().items():
        if kind == "fig2":
            pts = [(r.sweep_value, float(parse_extra(r.extra)["alpha_mean"])) for r in rows]
            two_b = float(parse_extra(rows[0].extra)["two_b"])
            line, = ax.plot(*zip(*pts), marker="o", ms=3, label=name)
            ax.axhline(two_b, ls="--", lw=0.8, color=line.get_color())
        else:
            pts = [(r.sweep_value, r.avg_error) for r in rows if r.avg_error is not None]
            if pts:
                ax.plot(*zip(*pts), marker="o", ms=3, label=name)
    sweep = result.rows[0].sweep_param if result.rows else ""
    ax.set_xlabel({"c": "outlier proportion c", "eps": "eps", "t": "T"}.get(sweep, sweep))
    ax.set_ylabel({"fig2": "error exponent [bits]",
                   "bound-check": "P(estimate outside ball)"}.get(kind, "average error probability"))
    if result.rows:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()

    def writer(fh):
        fig.savefig(fh, format="svg", metadata={"Date": None})

    try:
        _atomic_write(Path(path), writer)
    finally:
        plt.close(fig)
    return Path(path)
