"""Shared test helpers: independent oracles and the acceptance report hook."""

import math

import numpy as np

# One line per end-to-end criterion, filled in by test_acceptance.py and echoed
# at the end of the run so the verdicts are visible even when output is captured.
ACCEPTANCE_REPORT = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_REPORT):
            terminalreporter.write_line(line)


def lambert_w_m1_bisect(x: float) -> float:
    """Independent branch -1 Lambert W oracle by plain bisection on [-700, -1]."""
    if not (-1.0 / math.e <= x < 0.0):
        raise ValueError("out of domain")

    def f(w):
        return w * math.exp(w) - x

    lo, hi = -700.0, -1.0
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def explicit_rvq_sin2_batch(rng: np.random.Generator, bits: int, nt: int, count: int) -> np.ndarray:
    """Vectorized oracle for explicit codebook-scan quantization error.

    For each sample draws a fresh 2^B-codeword isotropic codebook and a random
    channel direction, returning 1 - max |<u, c>|^2.
    """
    n_codes = 2**bits
    out = np.empty(count)
    chunk = max(1, (1 << 22) // (n_codes * nt))
    done = 0
    while done < count:
        c = min(chunk, count - done)
        g = (rng.standard_normal((c, nt)) + 1j * rng.standard_normal((c, nt)))
        u = g / np.linalg.norm(g, axis=1, keepdims=True)
        cb = rng.standard_normal((c, n_codes, nt)) + 1j * rng.standard_normal((c, n_codes, nt))
        cb /= np.linalg.norm(cb, axis=2, keepdims=True)
        cos2 = np.abs(np.einsum("ck,cnk->cn", u.conj(), cb)) ** 2
        out[done : done + c] = 1.0 - cos2.max(axis=1)
        done += c
    return out
