"""Block complexity ``p(n)`` and entropy estimates ``h_est(n) = ln p(n) / n``.

Factors of length ``n`` are encoded exactly as base-``|alphabet|`` integers
(``uint64`` while ``|alphabet|^n <= 2^64``), so counts are collision-free; longer
factors fall back to byte strings.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import parallel_map, thread_count
from .systems import PointGenerator
from .words import FiniteWord, factor_count

DEFAULT_THRESHOLD = 0.02


def h_estimate(p: int, n: int, alphabet: int = 2) -> float:
    # via log2 so that complete factor sets give ln|alphabet| exactly
    if p <= 1:
        return 0.0
    return math.log2(p) / n * math.log(2)


def _unique_count(codes: np.ndarray, threads: int) -> int:
    if threads == 1 or codes.size < 1 << 18:
        return int(np.unique(codes).size)
    # codes already index overlapping windows, so plain chunks cover every factor
    bounds = np.linspace(0, codes.size, threads + 1).astype(int)
    parts = parallel_map(lambda ab: np.unique(codes[ab[0]:ab[1]]),
                         list(zip(bounds[:-1], bounds[1:])), threads)
    return int(np.unique(np.concatenate(parts)).size)


def factor_counts(t: np.ndarray, alphabet: int, n_max: int, threads: int = 1) -> list[int]:
    """``[p(1), ..., p(n_max)]`` for the word ``t`` with incrementally built codes."""
    L = t.size
    out = []
    code = np.zeros(L, dtype=np.uint64)
    base = np.uint64(alphabet)
    exact_limit = 0
    while alphabet ** (exact_limit + 1) <= 2 ** 64:
        exact_limit += 1
    for n in range(1, n_max + 1):
        if n <= exact_limit:
            count = L - n + 1
            code = code[:count] * base + t[n - 1:n - 1 + count].astype(np.uint64)
            out.append(_unique_count(code, threads))
        else:
            out.append(factor_count(FiniteWord._wrap(t, alphabet), n))
    return out


@dataclass
class ComplexityCurve:
    prefix_length: int
    alphabet: int
    counts: list[int]
    half_counts: list[int]

    @property
    def n_max(self) -> int:
        return len(self.counts)

    def p(self, n: int) -> int:
        return self.counts[n - 1]

    def h_est(self, n: int) -> float:
        return h_estimate(self.p(n), n, self.alphabet)

    @property
    def saturated(self) -> list[bool]:
        """Whether ``p(n)`` was already reached on the first half of the prefix."""
        return [a == b for a, b in zip(self.half_counts, self.counts)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("n", "p_n", "h_est"))
        for n in range(1, self.n_max + 1):
            w.writerow((n, self.p(n), repr(self.h_est(n))))
        return buf.getvalue()


def complexity_curve(g: PointGenerator | FiniteWord, L: int, n_max: int,
                     threads: Optional[int] = None) -> ComplexityCurve:
    """Exact factor counts ``p(1..n_max)`` of the length-``L`` prefix of ``g``."""
    if not 1 <= n_max <= L:
        raise ValueError(f"need 1 <= n_max <= L, got n_max={n_max}, L={L}")
    if isinstance(g, FiniteWord):
        if len(g) < L:
            raise ValueError(f"word of length {len(g)} shorter than L={L}")
        t, alphabet = g.symbols[:L], g.alphabet
    else:
        t, alphabet = g.window(0, L), g.alphabet
    th = thread_count(threads)
    counts = factor_counts(t, alphabet, n_max, th)
    half = L // 2
    half_max = min(n_max, half)
    half_counts = factor_counts(t[:half], alphabet, half_max, th) if half_max else []
    half_counts += [0] * (n_max - len(half_counts))
    return ComplexityCurve(L, alphabet, counts, half_counts)


def entropy_report(curve: ComplexityCurve, threshold: float = DEFAULT_THRESHOLD) -> dict:
    """``h_est(n_max)``, the slope of ``ln p(n)`` over the last quartile of ``n``,
    and the zero-entropy-consistent flag ``h_est(n_max) < threshold``."""
    n_max = curve.n_max
    lo = max(1, n_max - max(n_max // 4, 1))
    ns = np.arange(lo, n_max + 1)
    logs = np.log(np.array([curve.p(n) for n in ns], dtype=float))
    slope = float(np.polyfit(ns, logs, 1)[0]) if ns.size >= 2 else 0.0
    h = curve.h_est(n_max)
    return {
        "prefix_length": curve.prefix_length,
        "n_max": n_max,
        "p_n_max": curve.p(n_max),
        "h_est": h,
        "log_alphabet": math.log(curve.alphabet),
        "slope_last_quartile": slope,
        "quartile_range": [int(lo), int(n_max)],
        "threshold": threshold,
        "zero_entropy_consistent": h < threshold,
        "saturated": curve.saturated[-1],
    }
