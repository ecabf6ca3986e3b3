"""Per-block channel generation with receiver training error and feedback delay."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import complex_gaussian


@dataclass(frozen=True)
class ChannelModelConfig:
    """Fading/feedback-loop model for one coherence block.

    beta is the number of downlink pilots per antenna; perfect_rx_csi=True
    bypasses receiver estimation entirely (the beta -> infinity limit).
    r is the temporal correlation between the fed-back channel and the channel
    during data transmission (r=1: no delay). With mmse_exact the estimate and
    the estimation error are drawn orthogonal, as MMSE estimation implies.
    """

    nt: int
    num_users: int
    snr: float
    beta: float = 0.0
    r: float = 1.0
    perfect_rx_csi: bool = True
    mmse_exact: bool = True

    def __post_init__(self):
        if self.nt < 1 or self.num_users < 1:
            raise ValueError("nt and num_users must be >= 1")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must be in [0, 1], got {self.r}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.snr <= 0.0:
            raise ValueError(f"snr must be > 0, got {self.snr}")

    @property
    def estimation_error_var(self) -> float:
        if self.perfect_rx_csi:
            return 0.0
        return 1.0 / (1.0 + self.beta * self.snr)


@dataclass(frozen=True)
class ChannelRealization:
    """True channels, receiver estimates, and post-delay channels; all (num_users, nt)."""

    h: np.ndarray
    h_est: np.ndarray
    h_delayed: np.ndarray


def draw_block(cfg: ChannelModelConfig, rng: np.random.Generator) -> ChannelRealization:
    """One coherence block of i.i.d. Rayleigh channels under cfg's training/delay model."""
    shape = (cfg.num_users, cfg.nt)
    sigma2 = cfg.estimation_error_var
    if sigma2 == 0.0:
        h = complex_gaussian(rng, shape)
        h_est = h
    elif cfg.mmse_exact:
        # MMSE: estimate and error orthogonal, variances (1 - sigma2) and sigma2.
        h_est = math.sqrt(1.0 - sigma2) * complex_gaussian(rng, shape)
        h = h_est + math.sqrt(sigma2) * complex_gaussian(rng, shape)
    else:
        h = complex_gaussian(rng, shape)
        h_est = h - math.sqrt(sigma2) * complex_gaussian(rng, shape)
    if cfg.r == 1.0:
        h_delayed = h
    else:
        h_delayed = cfg.r * h + math.sqrt(1.0 - cfg.r**2) * complex_gaussian(rng, shape)
    return ChannelRealization(h=h, h_est=h_est, h_delayed=h_delayed)
