"""Seeded Monte Carlo experiments comparing the decoder with the genie and the CRB.

Each trial is a pure function of ``(config, trial_index)``: the matrix,
signal and noise come from seeds derived from ``master_seed`` and the trial
index, so reports do not depend on how trials are scheduled.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds
from .decoder import DEFAULT_MAX_SUBSETS, SELECTION_RULES, DecoderConfig, genie_estimate, is_jointly_typical, joint_typicality_decode
from .errors import BudgetError, ConfigError
from .model import AMPLITUDE_RULES, derive_seed, gen_gaussian_matrix, gen_sparse_signal, measure

OUTPUT_FORMATS = ("json", "csv")

# stream ids within a trial
_MATRIX, _SIGNAL, _NOISE = 0, 1, 2


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    m: int
    l: int  # noqa: E741
    sigma2: float
    mu: float
    amplitude_rule: str = "constant"
    zeta: float | None = None
    delta: float | None = None
    trials: int = 100
    master_seed: int = 0
    selection_rule: str = "min_deviation"
    output_format: str = "json"
    parallelism: int = 1
    matrix_seed: int | None = None
    max_subsets: int = DEFAULT_MAX_SUBSETS
    kappa: float = 1.0
    epsilon: float | None = None

    def __post_init__(self):
        if not (1 <= self.l < self.m and self.l <= self.n):
            raise ConfigError(f"need 1 <= l < m and l <= n, got n={self.n}, m={self.m}, l={self.l}")
        if self.sigma2 < 0 or not self.mu > 0:
            raise ConfigError("sigma2 must be >= 0 and mu > 0")
        if self.amplitude_rule not in AMPLITUDE_RULES:
            raise ConfigError(f"unknown amplitude rule {self.amplitude_rule!r}")
        if self.selection_rule not in SELECTION_RULES:
            raise ConfigError(f"unknown selection rule {self.selection_rule!r}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.trials < 1 or self.parallelism < 1:
            raise ConfigError("trials and parallelism must be >= 1")
        self.decoder_config(self.mu)  # validates delta/zeta
        total = math.comb(self.m, self.l)
        if total > self.max_subsets:
            raise BudgetError(f"C({self.m}, {self.l}) = {total} exceeds the subset budget {self.max_subsets}")

    @property
    def alpha(self) -> float:
        return self.l / self.n

    @property
    def beta(self) -> float:
        return self.m / self.l

    def decoder_config(self, mu: float) -> DecoderConfig:
        return DecoderConfig(
            delta=self.delta,
            zeta=self.zeta,
            mu=mu,
            selection_rule=self.selection_rule,
            max_subsets=self.max_subsets,
        )

    def slack(self) -> tuple[float, float]:
        """``(delta, delta_prime)`` at the nominal ``mu``."""
        if self.delta is not None:
            dp = self.delta * self.n / (self.n - self.l) if self.n > self.l else math.inf
            return self.delta, dp
        return bounds.delta_from_zeta(self.zeta if self.zeta is not None else 0.8, self.mu, self.n, self.l)

    def echo(self) -> dict:
        """Config fields that define the experiment; parallelism is left out."""
        d = dataclasses.asdict(self)
        d.pop("parallelism")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    decoder_sq_err: float
    gae_sq_err: float
    support_recovered: bool
    e0: bool
    deviation: float
    crb_value: float
    true_support_typical: bool
    typical_count: int

    @property
    def abs_gap(self) -> float:
        return abs(self.decoder_sq_err - self.crb_value)


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialRecord:
    s = config.master_seed
    t = int(trial_index)
    mseed = config.matrix_seed if config.matrix_seed is not None else derive_seed(s, t, _MATRIX)
    A = gen_gaussian_matrix(config.n, config.m, mseed)
    x = gen_sparse_signal(config.m, config.l, config.mu, config.amplitude_rule, derive_seed(s, t, _SIGNAL))
    inst = measure(A, x, config.sigma2, derive_seed(s, t, _NOISE))
    y = inst.observation

    dcfg = config.decoder_config(x.mu)
    res = joint_typicality_decode(A, y, config.l, config.sigma2, dcfg)
    delta = dcfg.resolve_delta(config.n, config.l)
    x_gae = genie_estimate(A, x.support, y)
    return TrialRecord(
        trial_index=t,
        decoder_sq_err=float(np.sum((res.estimate - x.values) ** 2)),
        gae_sq_err=float(np.sum((x_gae - x.values) ** 2)),
        support_recovered=res.chosen_support == x.support,
        e0=res.e0,
        deviation=res.deviation,
        crb_value=bounds.crb_gae(A, x.support, config.sigma2),
        true_support_typical=is_jointly_typical(A, x.support, y, config.sigma2, delta),
        typical_count=res.typical_count,
    )


def _mean_se(v) -> tuple[float, float]:
    v = np.asarray(v, dtype=float)
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(np.mean(v)), se


def _freq_se(flags) -> tuple[float, float]:
    p = float(np.mean(np.asarray(flags, dtype=float)))
    return p, math.sqrt(p * (1.0 - p) / len(flags))


def bound_values(config: ExperimentConfig) -> dict:
    """Analytical bounds evaluated at the config (None where a formula does not apply)."""
    n, m, l, s2, mu = config.n, config.m, config.l, config.sigma2, config.mu  # noqa: E741
    delta, dp = config.slack()
    mu2 = mu * mu
    alpha, beta = config.alpha, config.beta
    eps = config.epsilon if config.epsilon is not None else math.sqrt(2.0 * alpha)

    def attempt(fn, *args):
        try:
            return fn(*args)
        except (ValueError, ZeroDivisionError, OverflowError):
            return None

    c0 = (n - l) / (4.0 * l)
    f_ends = attempt(bounds.f_endpoints, l, beta, c0, mu2, dp, s2) if beta > 1 else None
    eig = attempt(bounds.eig_deviation_bound, m, alpha, beta, eps)
    return {
        "delta": delta,
        "delta_prime": dp,
        "epsilon": eps,
        "miss_typicality": attempt(bounds.miss_typicality_bound, n, l, s2, delta),
        "false_typicality_one_missed": attempt(bounds.false_typicality_bound, n, l, mu2, s2, dp),
        "false_typicality_all_missed": attempt(bounds.false_typicality_bound, n, l, l * mu2, s2, dp),
        "eig_deviation_one_sided": eig,
        "eig_deviation_two_sided": None if eig is None else 2.0 * eig,
        "union_bound_constant": attempt(bounds.union_bound_constant, l * mu2, alpha, s2),
        "c0": c0,
        "f_at_1_over_l": None if f_ends is None else f_ends[0],
        "f_at_1": None if f_ends is None else f_ends[1],
    }


def regime_report(config: ExperimentConfig) -> bounds.RegimeReport:
    delta, dp = config.slack()
    zeta = config.zeta if config.delta is None else dp / config.mu**2
    if zeta is None:
        zeta = 0.8
    params = bounds.RegimeParams(
        n=config.n, m=config.m, l=config.l, sigma2=config.sigma2, mu=config.mu,
        kappa=config.kappa, zeta=zeta, epsilon=config.epsilon,
    )
    return bounds.validate_regime(params, config.l * config.mu**2)


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    trials: int
    alpha: float
    beta: float
    empirical_mse_decoder: float
    empirical_mse_gae: float
    mean_crb: float
    gap: float
    median_abs_gap: float
    freq_e0: float
    freq_miss_typicality: float
    freq_support_recovered: float
    standard_errors: dict
    bound_values: dict
    regime: dict
    records: list[TrialRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentReport:
        d = dict(d)
        d["records"] = [TrialRecord(**r) for r in d["records"]]
        return cls(**d)


def summarize(config: ExperimentConfig, records: list[TrialRecord]) -> ExperimentReport:
    dec, dec_se = _mean_se([r.decoder_sq_err for r in records])
    gae, gae_se = _mean_se([r.gae_sq_err for r in records])
    crb, crb_se = _mean_se([r.crb_value for r in records])
    e0, e0_se = _freq_se([r.e0 for r in records])
    miss, miss_se = _freq_se([not r.true_support_typical for r in records])
    hit, hit_se = _freq_se([r.support_recovered for r in records])
    return ExperimentReport(
        config=config.echo(),
        trials=len(records),
        alpha=config.alpha,
        beta=config.beta,
        empirical_mse_decoder=dec,
        empirical_mse_gae=gae,
        mean_crb=crb,
        gap=abs(dec - crb),
        median_abs_gap=float(np.median([r.abs_gap for r in records])),
        freq_e0=e0,
        freq_miss_typicality=miss,
        freq_support_recovered=hit,
        standard_errors={
            "mse_decoder": dec_se,
            "mse_gae": gae_se,
            "mean_crb": crb_se,
            "freq_e0": e0_se,
            "freq_miss_typicality": miss_se,
            "freq_support_recovered": hit_se,
        },
        bound_values=bound_values(config),
        regime=regime_report(config).to_dict(),
        records=list(records),
    )


def run_experiment(config: ExperimentConfig, parallelism: int | None = None) -> ExperimentReport:
    """Run ``config.trials`` trials and aggregate them; the result is independent of parallelism."""
    workers = parallelism or config.parallelism
    idx = range(config.trials)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(lambda t: run_trial(config, t), idx))
    else:
        records = [run_trial(config, t) for t in idx]
    return summarize(config, records)


# -- serialisation ------------------------------------------------------------

CSV_COLUMNS = (
    "row_type", "trial_index", "decoder_sq_err", "gae_sq_err", "crb_value", "gap",
    "support_recovered", "e0", "true_support_typical", "deviation", "typical_count",
)


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True)


def report_to_csv(report: ExperimentReport) -> str:
    """One row per trial and a final summary row of column means.

    In the summary row ``gap`` is ``|mean decoder error - mean CRB|`` and the
    boolean columns hold frequencies.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.records:
        w.writerow([
            "trial", r.trial_index, repr(r.decoder_sq_err), repr(r.gae_sq_err), repr(r.crb_value),
            repr(r.abs_gap), int(r.support_recovered), int(r.e0), int(r.true_support_typical),
            repr(r.deviation), r.typical_count,
        ])
    recs = report.records
    w.writerow([
        "summary", "", repr(report.empirical_mse_decoder), repr(report.empirical_mse_gae),
        repr(report.mean_crb), repr(report.gap), repr(report.freq_support_recovered),
        repr(report.freq_e0), repr(1.0 - report.freq_miss_typicality),
        repr(float(np.mean([r.deviation for r in recs]))),
        repr(float(np.mean([r.typical_count for r in recs]))),
    ])
    return buf.getvalue()


def emit_report(report: ExperimentReport, fmt: str = "json", destination=None) -> str:
    """Serialise ``report`` as JSON or CSV; write it to ``destination`` if given."""
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    if destination is not None:
        if hasattr(destination, "write"):
            destination.write(text)
        else:
            Path(destination).write_text(text)
    return text


def load_report(source) -> ExperimentReport:
    """Inverse of the JSON form of :func:`emit_report` (path or JSON text)."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text()
    return ExperimentReport.from_dict(json.loads(text))


# -- size sweeps --------------------------------------------------------------


def run_shape_sweep(base: ExperimentConfig, shapes) -> list[ExperimentReport]:
    """One report per ``(n, m, l)`` shape, all from ``base.master_seed``.

    Every shape is validated (including the subset budget) before any trial
    runs.
    """
    configs = [dataclasses.replace(base, n=int(n), m=int(m), l=int(l)) for n, m, l in shapes]  # noqa: E741
    return [run_experiment(c) for c in configs]


def run_gap_sweep(base: ExperimentConfig, scale_factors) -> list[ExperimentReport]:
    """Scale ``(n, m, l)`` jointly by each factor, keeping ``alpha`` and ``beta`` fixed."""
    shapes = [(base.n * s, base.m * s, base.l * s) for s in scale_factors]
    return run_shape_sweep(base, shapes)


GAP_TABLE_COLUMNS = (
    "n", "m", "l", "alpha", "beta", "trials", "median_abs_gap", "gap",
    "empirical_mse_decoder", "mean_crb", "freq_support_recovered", "freq_e0",
)


def gap_table(reports) -> list[dict]:
    rows = []
    for r in reports:
        c = r.config
        rows.append({
            "n": c["n"], "m": c["m"], "l": c["l"], "alpha": r.alpha, "beta": r.beta,
            "trials": r.trials, "median_abs_gap": r.median_abs_gap, "gap": r.gap,
            "empirical_mse_decoder": r.empirical_mse_decoder, "mean_crb": r.mean_crb,
            "freq_support_recovered": r.freq_support_recovered, "freq_e0": r.freq_e0,
        })
    return rows


def gap_table_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=GAP_TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(gap_table(reports))
    return buf.getvalue()
