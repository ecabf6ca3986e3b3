"""Beamforming/selection schemes and their realized per-block sum rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .numerics import SingularSetError, haar_orthonormal_sets, zf_directions
from .quantization import (
    CqiQuantizerSpec,
    QuantizerSpec,
    build_orthosets_codebook,
    quantize_cqi,
    quantize_directions,
)

CQI_KINDS = ("norm2", "expected_sinr", "rbf_sinr", "subf_snr")


@dataclass(frozen=True)
class FeedbackReport:
    user_id: int
    direction: np.ndarray
    sin2_error: float
    cqi: float
    cqi_kind: str


@dataclass(frozen=True)
class TransmissionPlan:
    selected: list[int]
    beamformers: np.ndarray  # (n, nt), unit-norm rows
    power_per_user: float


@dataclass(frozen=True)
class BlockOutcome:
    plan: TransmissionPlan
    realized_rates: np.ndarray
    sum_rate: float
    extra: dict = field(default_factory=dict)


def zf_realized_sinr(h_true, own_bf, other_bfs, snr: float, n: int) -> float:
    """Post-selection SINR under equal power SNR/n with residual interference."""
    s = snr / n
    sig = s * abs(np.vdot(h_true, own_bf)) ** 2
    interf = s * sum(abs(np.vdot(h_true, bf)) ** 2 for bf in other_bfs)
    return sig / (1.0 + interf)


def _estimated_rates_batched(gram, cand_sets, gains, scale_num, size):
    """Estimated ZF sum rate for each candidate user set.

    For unit-norm quantized channels the post-ZF gain of user k in set S is
    1 / [(G_S)^{-1}]_{kk} with G_S the Gram matrix, so only small-matrix
    inverses are needed per candidate.
    """
    idx = np.asarray(cand_sets)
    sub = gram[idx[:, :, None], idx[:, None, :]]
    rates = np.full(len(cand_sets), -np.inf)
    try:
        inv_diag = np.diagonal(np.linalg.inv(sub), axis1=-2, axis2=-1).real
        ok = np.all(inv_diag > 0, axis=-1)
    except np.linalg.LinAlgError:
        inv_diag = np.empty((len(cand_sets), size))
        ok = np.zeros(len(cand_sets), dtype=bool)
        for i, g in enumerate(sub):
            try:
                d = np.diagonal(np.linalg.inv(g)).real
            except np.linalg.LinAlgError:
                continue
            if np.all(d > 0):
                inv_diag[i] = d
                ok[i] = True
    with np.errstate(all="ignore"):
        proj = 1.0 / inv_diag
        sinr = (scale_num / size) * gains[idx] * proj
        r = np.sum(np.log2(1.0 + sinr), axis=-1)
    good = ok & np.isfinite(r)
    rates[good] = r[good]
    return rates


def _cqi_scale(cqi_kind: str, snr: float, nt: int) -> float:
    # norm2 CQI is an effective channel gain (estimated SINR uses power snr/|S|);
    # expected-SINR CQI already folds in power snr/nt, so rescale by nt/|S|.
    if cqi_kind == "norm2":
        return snr
    if cqi_kind == "expected_sinr":
        return float(nt)
    raise ValueError(f"unsupported CQI kind for ZF selection: {cqi_kind!r}")


def zf_greedy_select(reports: list[FeedbackReport], snr: float, nt: int) -> TransmissionPlan:
    """Greedy user selection on quantized channels, maximizing estimated sum rate."""
    if not reports:
        raise ValueError("need at least one feedback report")
    dirs = np.array([r.direction for r in reports])
    cqi = np.array([r.cqi for r in reports])
    gram = dirs @ dirs.conj().T
    scale_num = _cqi_scale(reports[0].cqi_kind, snr, nt)

    selected = [int(np.argmax(cqi))]
    best_rate = math.log2(1.0 + scale_num * cqi[selected[0]])
    while len(selected) < min(nt, len(reports)):
        cands = [k for k in range(len(reports)) if k not in selected]
        cand_sets = [selected + [c] for c in cands]
        rates = _estimated_rates_batched(gram, cand_sets, cqi, scale_num, len(selected) + 1)
        i = int(np.argmax(rates))
        if not (rates[i] > best_rate):
            break
        selected.append(cands[i])
        best_rate = float(rates[i])
    return _plan_from_selection(reports, dirs, selected, snr)


def zf_simplified_select(reports: list[FeedbackReport], snr: float, nt: int) -> TransmissionPlan:
    """Low-complexity selection: try only the top-j users by CQI, j = 1..nt."""
    if not reports:
        raise ValueError("need at least one feedback report")
    dirs = np.array([r.direction for r in reports])
    cqi = np.array([r.cqi for r in reports])
    gram = dirs @ dirs.conj().T
    scale_num = _cqi_scale(reports[0].cqi_kind, snr, nt)
    order = np.argsort(-cqi, kind="stable")

    best_rate, best_set = -np.inf, [int(order[0])]
    for j in range(1, min(nt, len(reports)) + 1):
        s = [int(k) for k in order[:j]]
        rate = _estimated_rates_batched(gram, [s], cqi, scale_num, j)[0]
        if rate > best_rate:
            best_rate, best_set = float(rate), s
    return _plan_from_selection(reports, dirs, best_set, snr)


def _plan_from_selection(reports, dirs, selected, snr) -> TransmissionPlan:
    n = len(selected)
    try:
        bfs = zf_directions(dirs[selected])
    except SingularSetError:
        # degenerate feedback; serve the best single user
        selected = selected[:1]
        n = 1
        bfs = zf_directions(dirs[selected])
    return TransmissionPlan(
        selected=[reports[k].user_id for k in selected],
        beamformers=bfs,
        power_per_user=snr / n,
    )


def estimated_plan_rate(reports: list[FeedbackReport], plan: TransmissionPlan, snr: float, nt: int) -> float:
    """Estimated sum rate of a plan, from the reports it was built on."""
    by_id = {r.user_id: r for r in reports}
    sel = [by_id[u] for u in plan.selected]
    n = len(sel)
    scale = _cqi_scale(sel[0].cqi_kind, snr, nt)
    total = 0.0
    for r, bf in zip(sel, plan.beamformers):
        proj = abs(np.vdot(r.direction, bf)) ** 2
        total += math.log2(1.0 + (scale / n) * r.cqi * proj)
    return total


def _realized_zf_rates(h_true_sel: np.ndarray, bfs: np.ndarray, snr: float) -> np.ndarray:
    n = len(bfs)
    p = np.abs(h_true_sel.conj() @ bfs.T) ** 2  # p[k, j] = |h_k^H v_j|^2
    s = snr / n
    sig = s * np.diagonal(p)
    interf = s * (p.sum(axis=1) - np.diagonal(p))
    return np.log2(1.0 + sig / (1.0 + interf))


def zf_block(
    realization: ChannelRealization,
    quantizer: QuantizerSpec,
    cqi_kind: str,
    snr: float,
    nt: int,
    selection: str = "greedy",
    rng: np.random.Generator | None = None,
    cqi_quantizer: CqiQuantizerSpec | None = None,
) -> BlockOutcome:
    """ZF downlink block: quantize estimates, select users, transmit on h_delayed."""
    h_est = realization.h_est
    dirs, sin2 = quantize_directions(h_est, quantizer, rng)
    norms2 = np.linalg.norm(h_est, axis=1) ** 2
    if cqi_kind == "norm2":
        cqi = norms2
    elif cqi_kind == "expected_sinr":
        cos2 = 1.0 - sin2
        cqi = norms2 * cos2 / (nt / snr + norms2 * sin2)
    else:
        raise ValueError(f"unsupported CQI kind for ZF: {cqi_kind!r}")
    if cqi_quantizer is not None:
        cqi = np.array([quantize_cqi(v, cqi_quantizer) for v in cqi])
    reports = [
        FeedbackReport(user_id=k, direction=dirs[k], sin2_error=float(sin2[k]),
                       cqi=float(cqi[k]), cqi_kind=cqi_kind)
        for k in range(len(h_est))
    ]
    if selection == "greedy":
        plan = zf_greedy_select(reports, snr, nt)
    elif selection == "simplified":
        plan = zf_simplified_select(reports, snr, nt)
    else:
        raise ValueError(f"unknown selection {selection!r}")
    rates = _realized_zf_rates(realization.h_delayed[plan.selected], plan.beamformers, snr)
    return BlockOutcome(plan=plan, realized_rates=rates, sum_rate=float(rates.sum()))


def _orthoset_sinrs(h: np.ndarray, codebook: np.ndarray, snr: float, nt: int):
    """Per-user, per-set, per-beam SINRs (users, sets, nt) plus |h^H w|^2."""
    beams = np.swapaxes(codebook, 1, 2).reshape(-1, nt)  # (sets*nt, nt), beam rows
    p = np.abs(h.conj() @ beams.T) ** 2
    p = p.reshape(len(h), len(codebook), nt)
    row = p.sum(axis=2, keepdims=True)
    sinr = p / (nt / snr + (row - p))
    return sinr, p


def _orthoset_block(realization: ChannelRealization, codebook: np.ndarray,
                    snr: float, nt: int) -> BlockOutcome:
    """Shared RBF/PU2RC core: per-set RBF selection, then the best-scoring set."""
    sinr_fb, p = _orthoset_sinrs(realization.h_est, codebook, snr, nt)
    n_users, n_sets = p.shape[0], p.shape[1]
    flat = p.reshape(n_users, -1)
    best = np.argmax(flat, axis=1)  # quantization rule: max |h^H w|^2
    best_set, best_beam = np.unravel_index(best, (n_sets, nt))
    fb = sinr_fb[np.arange(n_users), best_set, best_beam]

    # Per (set, beam): scheduled user = argmax fed-back SINR (lowest index on ties).
    sched_user = np.full((n_sets, nt), -1)
    sched_sinr = np.zeros((n_sets, nt))
    for k in range(n_users):
        s, m = best_set[k], best_beam[k]
        if fb[k] > sched_sinr[s, m]:
            sched_sinr[s, m] = fb[k]
            sched_user[s, m] = k
    scores = np.log2(1.0 + sched_sinr).sum(axis=1)
    s_star = int(np.argmax(scores))

    users = [int(u) for u in sched_user[s_star] if u >= 0]
    beams_tx = [m for m in range(nt) if sched_user[s_star, m] >= 0]
    if users:
        sinr_tx, _ = _orthoset_sinrs(realization.h_delayed[users], codebook[s_star : s_star + 1], snr, nt)
        rates = np.log2(1.0 + sinr_tx[np.arange(len(users)), 0, beams_tx])
        bfs = codebook[s_star][:, beams_tx].T
    else:
        rates = np.zeros(0)
        bfs = np.zeros((0, nt), dtype=complex)
    plan = TransmissionPlan(selected=users, beamformers=bfs, power_per_user=snr / nt)
    return BlockOutcome(
        plan=plan,
        realized_rates=rates,
        sum_rate=float(rates.sum()),
        extra={"set_index": s_star, "num_scheduled": len(users)},
    )


def rbf_block(realization: ChannelRealization, snr: float, nt: int,
              rng: np.random.Generator) -> BlockOutcome:
    """Random beamforming: one Haar beam set, best-SINR user per beam."""
    codebook = haar_orthonormal_sets(rng, nt, 1)
    return _orthoset_block(realization, codebook, snr, nt)


def pu2rc_block(realization: ChannelRealization, bits: int, snr: float, nt: int,
                rng: np.random.Generator) -> BlockOutcome:
    """PU2RC: common codebook of 2^B/nt orthonormal sets, best set transmitted."""
    codebook = build_orthosets_codebook(bits, nt, rng)
    return _orthoset_block(realization, codebook, snr, nt)


def subf_block(realization: ChannelRealization, quantizer: QuantizerSpec, snr: float,
               rng: np.random.Generator | None = None) -> BlockOutcome:
    """Single-user beamforming along the quantized direction of the best-SNR user."""
    h_est = realization.h_est
    dirs, _ = quantize_directions(h_est, quantizer, rng)
    reported = snr * np.abs(np.sum(h_est.conj() * dirs, axis=1)) ** 2
    k = int(np.argmax(reported))
    bf = dirs[k]
    realized = snr * abs(np.vdot(realization.h_delayed[k], bf)) ** 2
    rate = math.log2(1.0 + realized)
    plan = TransmissionPlan(selected=[k], beamformers=bf[None, :], power_per_user=snr)
    return BlockOutcome(plan=plan, realized_rates=np.array([rate]), sum_rate=rate)
