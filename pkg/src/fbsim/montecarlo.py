"""Seeded Monte Carlo engine: trial-parallel block simulation and B sweeps."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelModelConfig, draw_block
from .numerics import RngStream
from .quantization import CqiQuantizerSpec, QuantizerSpec
from .schemes import pu2rc_block, rbf_block, subf_block, zf_block

SCHEMES = ("zf", "rbf", "pu2rc", "subf")


class FeedbackBudgetError(ValueError):
    """B grid or budget leaves no feasible user count."""


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    nt: int
    snr_db: float
    tfb: int
    trials: int = 10_000
    seed: int = 0
    quantizer: str = "rvq_statistical"
    cqi_kind: str = "norm2"
    selection: str = "greedy"
    cqi_bits: int | None = None  # feedback-budget accounting for the CQI scalar
    beta: float | None = None  # None: perfect receiver CSI
    r: float = 1.0
    relaxed_user_grid: bool = False  # allow non-divisor B with floor(tfb/B) users
    b_values: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def snr(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def users_for(self, b: int) -> int:
        per_user = b + (self.cqi_bits or 0)
        users = self.tfb // per_user
        if users < 1:
            raise FeedbackBudgetError(f"budget {self.tfb} too small for {per_user} bits/user")
        if not self.relaxed_user_grid and self.tfb % per_user != 0:
            raise FeedbackBudgetError(
                f"B={b} (+{self.cqi_bits or 0} CQI bits) does not divide tfb={self.tfb}; "
                f"feasible values: {feasible_b_values(self)}"
            )
        return users

    def channel_config(self, users: int) -> ChannelModelConfig:
        return ChannelModelConfig(
            nt=self.nt,
            num_users=users,
            snr=self.snr,
            beta=self.beta or 0.0,
            r=self.r,
            perfect_rx_csi=self.beta is None,
        )


@dataclass(frozen=True)
class RateEstimate:
    mean: float
    std_error: float
    trials: int
    b: int
    users: int


def feasible_b_values(cfg: ExperimentConfig) -> list[int]:
    """Integer B grid: log2(nt) <= B <= tfb/nt, integer user count unless relaxed."""
    per_extra = cfg.cqi_bits or 0
    lo = max(1, math.ceil(math.log2(cfg.nt)))
    hi = cfg.tfb // cfg.nt
    out = []
    for b in range(lo, hi + 1):
        if not cfg.relaxed_user_grid and cfg.tfb % (b + per_extra) != 0:
            continue
        if cfg.scheme == "pu2rc" and (2**b) % cfg.nt != 0:
            continue
        if cfg.tfb // (b + per_extra) >= 1:
            out.append(b)
    return out


def _worker_count() -> int:
    env = os.environ.get("FBSIM_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_trial(cfg: ExperimentConfig, b: int, stream: RngStream) -> float:
    """Simulate one coherence block and return its sum rate."""
    rng = stream.generator()
    users = cfg.users_for(b)
    realization = draw_block(cfg.channel_config(users), rng)
    if cfg.scheme == "zf":
        qspec = QuantizerSpec(kind=cfg.quantizer, bits=b, nt=cfg.nt)
        cqi_q = None
        if cfg.cqi_bits:
            # E[norm2 CQI] = nt; E[expected-SINR CQI] ~ (snr/nt)*E||h||^2 = snr
            mean_cqi = cfg.nt if cfg.cqi_kind == "norm2" else cfg.snr
            cqi_q = CqiQuantizerSpec.around_mean(cfg.cqi_bits, mean_cqi)
        out = zf_block(realization, qspec, cfg.cqi_kind, cfg.snr, cfg.nt,
                       selection=cfg.selection, rng=rng, cqi_quantizer=cqi_q)
    elif cfg.scheme == "rbf":
        out = rbf_block(realization, cfg.snr, cfg.nt, rng)
    elif cfg.scheme == "pu2rc":
        out = pu2rc_block(realization, b, cfg.snr, cfg.nt, rng)
    else:
        qspec = QuantizerSpec(kind=cfg.quantizer, bits=b, nt=cfg.nt)
        out = subf_block(realization, qspec, cfg.snr, rng)
    return out.sum_rate


def run_point(cfg: ExperimentConfig, b: int, stream_offset: int = 0) -> RateEstimate:
    """Monte Carlo estimate at one B value, with one RNG stream per trial.

    Trial t uses stream (seed, stream_offset + t), so aggregates are identical
    for any worker count or execution order.
    """
    users = cfg.users_for(b)
    results = np.empty(cfg.trials)

    def run_range(lo: int, hi: int):
        for t in range(lo, hi):
            results[t] = run_trial(cfg, b, RngStream(cfg.seed, stream_offset + t))

    workers = _worker_count()
    if workers == 1 or cfg.trials < 4:
        run_range(0, cfg.trials)
    else:
        bounds = np.linspace(0, cfg.trials, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_range, bounds[i], bounds[i + 1]) for i in range(workers)]
            for f in futures:
                f.result()
    mean = float(results.mean())
    se = float(results.std(ddof=1) / math.sqrt(cfg.trials)) if cfg.trials > 1 else 0.0
    return RateEstimate(mean=mean, std_error=se, trials=cfg.trials, b=b, users=users)


def sweep_b(cfg: ExperimentConfig, common_streams: bool = False) -> list[RateEstimate]:
    """run_point across cfg.b_values (or the full feasible grid).

    With common_streams the same trial streams are reused at every B (common
    random numbers); otherwise each B gets a disjoint stream range.
    """
    b_values = list(cfg.b_values) or feasible_b_values(cfg)
    if not b_values:
        raise FeedbackBudgetError("no feasible B values for this configuration")
    out = []
    for i, b in enumerate(b_values):
        offset = 0 if common_streams else i * cfg.trials
        out.append(run_point(cfg, b, stream_offset=offset))
    return out


def find_bopt_empirical(
    cfg: ExperimentConfig, common_streams: bool = False
) -> tuple[int, RateEstimate, float]:
    """Empirical argmax over the B sweep.

    Returns (b_opt, its estimate, runner-up gap in pooled std-error units);
    ties go to the smaller B.
    """
    estimates = sweep_b(cfg, common_streams=common_streams)
    best = max(estimates, key=lambda e: (e.mean, -e.b))
    others = [e for e in estimates if e.b != best.b]
    if others:
        runner = max(others, key=lambda e: e.mean)
        pooled = math.hypot(best.std_error, runner.std_error)
        gap = (best.mean - runner.mean) / pooled if pooled > 0 else math.inf
    else:
        gap = math.inf
    return best.b, best, gap
