"""Closed-form sum rate approximations and feedback bit-allocation optimizers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .numerics import lambert_w_m1

LN2 = math.log(2.0)


class InfeasibleRegimeError(ValueError):
    """The Lambert W argument left its real branch; parameters are outside the regime."""


def phi_from_training_delay(r: float, beta: float, snr: float) -> float:
    """Combined training-plus-delay interference coefficient."""
    return 1.0 - r**2 + 1.0 / (1.0 + beta * snr)


@dataclass(frozen=True)
class AnalyticParams:
    snr: float
    nt: int
    tfb: float
    b: float
    phi: float = 0.0

    @classmethod
    def with_training_delay(cls, snr, nt, tfb, b, r, beta) -> "AnalyticParams":
        return cls(snr=snr, nt=nt, tfb=tfb, b=b, phi=phi_from_training_delay(r, beta, snr))

    def __post_init__(self):
        if self.b < math.log2(self.nt):
            raise ValueError(f"b must be >= log2(nt)={math.log2(self.nt):.3f}")
        if self.tfb < self.b:
            raise ValueError("tfb must be >= b")
        if self.phi < 0.0:
            raise ValueError("phi must be >= 0")


def zf_loss_bound(snr: float, nt: int, b: float) -> float:
    """Sum rate penalty of quantized CSI without user selection."""
    if b < 0:
        raise ValueError("b must be >= 0")
    return nt * math.log2(1.0 + snr * 2.0 ** (-b / (nt - 1)))


def _diversity_log(tfb: float, nt: int, b: float) -> float:
    ratio = tfb * nt / b
    if ratio <= 1.0:
        raise ValueError(f"tfb*nt/b must exceed 1, got {ratio}")
    return math.log(ratio)


def zf_rate_approx(p: AnalyticParams) -> float:
    """Closed-form ZF sum rate approximation (natural log inside, rate in bps/Hz).

    With phi > 0 this is the training/delay variant, whose extra interference
    term phi*nt/(nt-1)*snr sits alongside the quantization interference.
    """
    s, nt = p.snr, p.nt
    div = _diversity_log(p.tfb, nt, p.b)
    sig = (s / nt) * div
    interf = (s / nt) * 2.0 ** (-p.b / (nt - 1)) * div
    denom = 1.0 + p.phi * nt / (nt - 1) * s + interf
    return nt * math.log2(1.0 + sig / denom)


def zf_rate_linear_regime(nt: int, b: float) -> float:
    """Crude small-B slope diagnostic: rate ~ nt/(nt-1) * B."""
    return nt * b / (nt - 1)


def zf_penalty_approx(p: AnalyticParams) -> float:
    """Multi-user interference penalty relative to perfect CSI at equal user count."""
    s, nt = p.snr, p.nt
    div = _diversity_log(p.tfb, nt, p.b)
    return nt * math.log2(1.0 + (s / nt) * 2.0 ** (-p.b / (nt - 1)) * div)


def _bopt_residual(b: float, snr: float, nt: int, tfb: float) -> float:
    div = math.log(tfb * nt / b)
    return (snr / nt) * 2.0 ** (-b / (nt - 1)) * (b * LN2 / (nt - 1)) * div**2 - 1.0


class FixedPointResult(NamedTuple):
    b: float
    at_boundary: bool
    residual: float


def zf_bopt_fixed_point(snr: float, nt: int, tfb: float) -> FixedPointResult:
    """Continuous rate-maximizing B for ZF, by bisection of the stationarity condition."""
    if snr <= 0:
        raise ValueError("snr must be > 0")
    lo, hi = math.log2(nt), tfb / nt
    if not lo < hi:
        raise ValueError("tfb too small for the feasible B interval")
    flo, fhi = _bopt_residual(lo, snr, nt, tfb), _bopt_residual(hi, snr, nt, tfb)
    if flo * fhi > 0:
        b = lo if abs(flo) < abs(fhi) else hi
        return FixedPointResult(b=b, at_boundary=True, residual=_bopt_residual(b, snr, nt, tfb))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = _bopt_residual(mid, snr, nt, tfb)
        if abs(fmid) <= 1e-10 or hi - lo < 1e-13 * max(1.0, hi):
            break
        if flo * fmid <= 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return FixedPointResult(b=mid, at_boundary=False, residual=fmid)


def zf_bopt_lambert(snr: float, nt: int, tfb: float, tol: float = 1e-6,
                    max_iter: int = 500) -> float:
    """Lambert W form of the ZF B optimizer, iterating on its self-referential log term."""
    b = max((nt - 1) * math.log2(snr / nt), math.log2(nt), 1.0)
    prev_delta = 0.0
    for _ in range(max_iter):
        l_term = math.log(tfb * nt / b) ** 2
        arg = -nt / (snr * l_term)
        if arg < -1.0 / math.e:
            raise InfeasibleRegimeError(
                f"Lambert W argument {arg:.4f} below -1/e at B={b:.3f}"
            )
        b_new = -(nt - 1) / LN2 * lambert_w_m1(arg)
        delta = b_new - b
        if delta * prev_delta < 0:
            b_new = 0.5 * (b + b_new)  # damp oscillation
            delta = b_new - b
        if abs(delta) <= tol:
            return b_new
        b, prev_delta = b_new, delta
    return b


def rbf_matching_budget(t_zf: float, nt: int, snr: float, b_opt: float) -> tuple[float, float]:
    """Users and total feedback bits RBF needs to match optimized ZF at budget t_zf."""
    if b_opt <= 0:
        raise ValueError("b_opt must be > 0")
    ratio = t_zf * nt / b_opt
    k = ratio * (1.0 + (snr / nt) * math.log(ratio)) ** (nt - 1)
    return k, k * math.log2(nt)


def subf_rate_approx(snr: float, nt: int, tfb: float, b: float, form: str = "simplified") -> float:
    """Single-user beamforming rate approximation.

    form="full" keeps the (1 - 2^{-B/(nt-1)}) structure; form="simplified"
    drops the small 2^{-B/(nt-1)} log(B) term, which is the version the B
    optimizer differentiates.
    """
    div = _diversity_log(tfb, nt, b)
    q = 2.0 ** (-b / (nt - 1))
    if form == "full":
        inner = 1.0 + snr * (1.0 + (1.0 - q) * div)
    elif form == "simplified":
        inner = 1.0 + snr * (div - q * math.log(tfb * nt))
    else:
        raise ValueError(f"unknown form {form!r}")
    if inner <= 0.0:
        raise ValueError("rate approximation argument is nonpositive for these parameters")
    return math.log2(inner)


def subf_bopt(nt: int, tfb: float, snr: float | None = None) -> float:
    """Closed-form B optimizer for single-user beamforming; independent of SNR."""
    del snr  # the optimizer does not depend on it
    log_term = math.log(tfb * nt)
    arg = -1.0 / log_term
    if arg < -1.0 / math.e:
        raise InfeasibleRegimeError(f"log(tfb*nt)={log_term:.3f} must be >= e")
    b = -(nt - 1) / LN2 * lambert_w_m1(arg)
    return min(max(b, 1.0), float(tfb))


@dataclass(frozen=True)
class BoptScalingReport:
    exact: float
    loglog_tfb: float
    nt_term: float
    snr_term: float


def bopt_scaling_report(snr: float, nt: int, tfb: float) -> BoptScalingReport:
    """Side-by-side view of the exact optimizer and its leading-order scalings."""
    exact = zf_bopt_fixed_point(snr, nt, tfb).b
    return BoptScalingReport(
        exact=exact,
        loglog_tfb=math.log(math.log(tfb)),
        nt_term=(nt - 1) * math.log2(snr),
        snr_term=(nt - 1) * math.log2(snr / nt),
    )
