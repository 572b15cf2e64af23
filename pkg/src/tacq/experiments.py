"""Monte Carlo sweeps around the threshold ``p0(n) = log2(n) / n`` and
long-leaf statistics of random labeled trees."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .bounds import certified_lower_bound, long_leaves
from .cutoff import ParamSet
from .embedding import PipelineReport, pipeline_tree, witness_pipeline
from .game import greedy_at
from .graph import Graph, derive_rng, sample_gnp, sample_random_tree

__all__ = [
    "SWEEP_HEADER",
    "TREESTATS_HEADER",
    "SweepConfig",
    "SweepRow",
    "TreeStats",
    "threshold_p",
    "trial_rng",
    "run_sweep",
    "format_sweep",
    "run_tree_stats",
    "format_tree_stats",
]

SWEEP_HEADER = "n,p,multiplier,trials,witness_rate,certified_ge2_rate,mean_residual_bound,mean_runtime_ms"
TREESTATS_HEADER = "n,trials,mean_fraction,variance,target,abs_error,bound_fraction,frac_at_least_bound"


def threshold_p(n: int) -> float:
    return math.log2(n) / n


def trial_rng(base_seed: int, n: int, multiplier: float, trial: int) -> np.random.Generator:
    return derive_rng(base_seed, n, round(multiplier * 1e6), trial)


@dataclass(frozen=True)
class SweepConfig:
    """Sizes, threshold multipliers and trials for :func:`run_sweep`.

    ``params`` holds ParamSet fields other than ``n``.  With ``greedy`` the
    residual bound of a trial is also capped by :func:`greedy_at`.  Wall
    clock times are only recorded when ``timing`` is set, so that output
    stays a function of the config.
    """

    n_list: tuple[int, ...] = (1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16)
    multipliers: tuple[float, ...] = (0.6, 0.8, 1.0, 1.2, 1.4)
    trials: int = 30
    base_seed: int = 0
    params: dict = field(default_factory=dict)
    greedy: bool = True
    timing: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.n_list or any(n < 2 for n in self.n_list):
            raise ValueError("sizes must be >= 2")
        if not self.multipliers or any(not m > 0 for m in self.multipliers):
            raise ValueError("multipliers must be positive")
        if not 0 <= self.base_seed < 1 << 64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")
        for m in self.multipliers:
            for n in self.n_list:
                if m * threshold_p(n) > 1:
                    raise ValueError(f"multiplier {m} gives p > 1 at n={n}")


@dataclass(frozen=True)
class SweepRow:
    n: int
    p: float
    multiplier: float
    trials: int
    witness_rate: float
    certified_ge2_rate: float
    mean_residual_bound: float
    mean_runtime_ms: float

    def csv(self) -> str:
        vals = (self.n, self.p, self.multiplier, self.trials, self.witness_rate,
                self.certified_ge2_rate, self.mean_residual_bound, self.mean_runtime_ms)
        return ",".join(_num(v) for v in vals)


def _num(x) -> str:
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


TrialHook = Callable[[int, float, int, Graph, PipelineReport, int], None]


def run_sweep(cfg: SweepConfig, on_trial: TrialHook | None = None, **pipeline_kw) -> list[SweepRow]:
    """One row per ``(n, multiplier)`` cell, in that order.

    Each trial samples G(n, p) from its own seed stream, runs the witness
    pipeline and the certified lower bound.  ``on_trial(n, mult, trial, g,
    report, certified)`` sees every trial; ``pipeline_kw`` is passed on to
    :func:`witness_pipeline`.
    """
    rows = []
    for n in cfg.n_list:
        params = ParamSet(n=n, **cfg.params)
        tree = pipeline_tree(params)
        for mult in cfg.multipliers:
            p = mult * threshold_p(n)
            wit = ge2 = 0
            bounds, times = [], []
            for trial in range(cfg.trials):
                rng = trial_rng(cfg.base_seed, n, mult, trial)
                t0 = time.perf_counter()
                g = sample_gnp(n, p, rng)
                cert = certified_lower_bound(g)
                rep = witness_pipeline(n, p, params, rng, g=g, tree=tree, **pipeline_kw)
                bound = rep.residual_size if rep.residual_size is not None else n
                if cfg.greedy and bound > 1:
                    bound = min(bound, greedy_at(g).upper_bound)
                times.append((time.perf_counter() - t0) * 1000)
                wit += rep.outcome == "witness"
                ge2 += cert >= 2
                bounds.append(bound)
                if on_trial is not None:
                    on_trial(n, mult, trial, g, rep, cert)
            rows.append(SweepRow(
                n, p, mult, cfg.trials, wit / cfg.trials, ge2 / cfg.trials,
                sum(bounds) / cfg.trials,
                statistics.fmean(times) if cfg.timing else math.nan,
            ))
    return rows


def format_sweep(rows: Iterable[SweepRow]) -> str:
    return "\n".join([SWEEP_HEADER] + [r.csv() for r in rows]) + "\n"


@dataclass(frozen=True)
class TreeStats:
    n: int
    trials: int
    fractions: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def mean(self) -> float:
        return statistics.fmean(self.fractions)

    @property
    def variance(self) -> float:
        return statistics.variance(self.fractions) if self.trials > 1 else 0.0

    @property
    def target(self) -> float:
        return math.exp(-3)

    @property
    def bound(self) -> float:
        """Guaranteed count ``n / (3 e^3)``."""
        return self.n / (3 * math.e**3)

    @property
    def frac_at_least_bound(self) -> float:
        return sum(c >= self.bound for c in self.counts) / self.trials

    def csv(self) -> str:
        vals = (self.n, self.trials, self.mean, self.variance, self.target,
                abs(self.mean - self.target), self.bound / self.n, self.frac_at_least_bound)
        return ",".join(_num(v) for v in vals)


def run_tree_stats(n: int, trials: int, base_seed: int = 0) -> TreeStats:
    """Long-leaf counts of ``trials`` uniform labeled trees on ``n`` vertices."""
    if n < 6:
        raise ValueError("n must be >= 6")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    counts = []
    for trial in range(trials):
        t = sample_random_tree(n, derive_rng(base_seed, n, trial))
        counts.append(len(long_leaves(t)))
    return TreeStats(n, trials, tuple(c / n for c in counts), tuple(counts))


def format_tree_stats(stats: Iterable[TreeStats]) -> str:
    return "\n".join([TREESTATS_HEADER] + [s.csv() for s in stats]) + "\n"
