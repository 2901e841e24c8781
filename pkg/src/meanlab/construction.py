"""Block-recursive subshift with a mean-equicontinuous transitive point.

Starting from ``A_1 = 11`` the blocks grow by

    A_{m+1} = A_m 0^{k_m} B_m 0^{k_m} A_m,    B_m = y_1 ... y_m,

where ``y`` is a point of the base minimal subshift starting with 1.  The
point ``x = lim A_m 0^inf`` and its orbit closure are the objects of study.
Lengths obey ``|A_{m+1}| = 2|A_m| + 2k_m + m``; none of the blocks needs to
be materialized to read windows of ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .systems import PointGenerator, ResolutionError, generator_from_descriptor, thue_morse
from .words import FiniteWord, Run, concat, occurrence_array

DEFAULT_BUDGET = 10 ** 8


class ScheduleError(ValueError):
    pass


class BudgetError(ValueError):
    pass


class ClaimPreconditionError(ValueError):
    pass


def default_base() -> PointGenerator:
    """Thue-Morse shifted by one: ``1101 0011 0010 1101 ...`` (starts with 1)."""
    return thue_morse().shift(1)


@dataclass(frozen=True)
class Schedule:
    base: PointGenerator
    gaps: tuple[int, ...]
    decay: Optional[Fraction] = None

    @property
    def levels(self) -> int:
        return len(self.gaps)

    def k(self, m: int) -> int:
        return self.gaps[m - 1]

    @property
    def lengths(self) -> list[int]:
        """``[|A_1|, ..., |A_{levels+1}|]``."""
        out = [2]
        for m, k in enumerate(self.gaps, start=1):
            out.append(2 * out[-1] + 2 * k + m)
        return out

    def block_length(self, m: int) -> int:
        return self.lengths[m - 1]

    def period(self, m: int) -> int:
        # length of A_m 0^{k_m} B_m 0^{k_m}
        return self.block_length(m) + 2 * self.k(m) + m

    def ratio(self, m: int) -> Fraction:
        return Fraction(self.block_length(m) + m, self.period(m))

    def b_word(self, m: int) -> np.ndarray:
        return self.base.window(0, m)

    def to_dict(self) -> dict:
        d = {"base": self.base.describe(), "gaps": list(self.gaps), "levels": self.levels}
        if self.decay is not None:
            d["decay"] = str(self.decay)
        return d


def schedule_from_dict(d: dict) -> Schedule:
    base = generator_from_descriptor(d["base"]) if "base" in d else default_base()
    decay = Fraction(d["decay"]) if d.get("decay") is not None else None
    if d.get("gaps"):
        gaps = tuple(int(k) for k in d["gaps"])
        if "levels" in d and int(d["levels"]) != len(gaps):
            raise ScheduleError("levels does not match number of gaps")
        return Schedule(base, gaps, decay)
    return synthesize_schedule(base, int(d["levels"]), decay=decay, budget=d.get("budget", DEFAULT_BUDGET))


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    constraint: str  # "gap", "pair", "decrease", "decay"
    p: int
    q: int
    lhs: Fraction
    rhs: Fraction
    passed: bool

    def describe(self) -> str:
        op = "<" if self.constraint in ("decrease", "decay") else ">"
        where = f"m={self.q}" if self.p == self.q else f"p={self.p},q={self.q}"
        return f"{self.constraint}[{where}]: {self.lhs} {op} {self.rhs} -> {'pass' if self.passed else 'FAIL'}"


@dataclass
class ValidationReport:
    checks: list[Check]
    levels: int

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def extendable_to_level(self) -> int:
        """Largest Q such that every constraint involving levels <= Q passes."""
        bad = [c.q for c in self.failures]
        return (min(bad) - 1) if bad else self.levels

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "levels": self.levels,
            "extendable_to_level": self.extendable_to_level,
            "checks": [
                {"constraint": c.constraint, "p": c.p, "q": c.q, "lhs": str(c.lhs),
                 "rhs": str(c.rhs), "pass": c.passed}
                for c in self.checks
            ],
        }


def validate_schedule(s: Schedule) -> ValidationReport:
    """Check, with exact arithmetic, the three gap constraints (plus the optional
    geometric decay of the ratio when the schedule declares one)."""
    checks = []
    A = s.lengths
    for m in range(1, s.levels + 1):
        k = s.k(m)
        checks.append(Check("gap", m, m, Fraction(k), Fraction(3 * A[m - 1]), k > 3 * A[m - 1]))
    for q in range(2, s.levels + 1):
        for p in range(1, q):
            lhs = Fraction(s.k(q), s.period(p))
            rhs = Fraction(q, p)
            checks.append(Check("pair", p, q, lhs, rhs, lhs > rhs))
    for m in range(2, s.levels + 1):
        lhs, rhs = s.ratio(m), s.ratio(m - 1)
        checks.append(Check("decrease", m - 1, m, lhs, rhs, lhs < rhs))
        if s.decay is not None:
            checks.append(Check("decay", m - 1, m, lhs, rhs * s.decay, lhs < rhs * s.decay))
    return ValidationReport(checks, s.levels)


def _least_above(x: Fraction) -> int:
    """Least integer strictly greater than ``x``."""
    return math.floor(x) + 1


def gap_thresholds(lengths: Sequence[int], gaps: Sequence[int], m: int,
                   decay: Optional[Fraction] = None) -> dict[str, int]:
    """Least admissible ``k_m`` per constraint family, given ``k_1..k_{m-1}``."""
    A_m = lengths[m - 1]
    out = {"gap": 3 * A_m + 1}
    periods = [lengths[p - 1] + 2 * gaps[p - 1] + p for p in range(1, m)]
    if m > 1:
        out["pair"] = max(_least_above(Fraction(m * per, p)) for p, per in enumerate(periods, start=1))
        c = Fraction(lengths[m - 2] + m - 1, periods[-1])
        out["decrease"] = _least_above((A_m + m) * (1 - c) / (2 * c))
        if decay is not None:
            c = c * decay
            out["decay"] = _least_above((A_m + m) * (1 - c) / (2 * c))
    return out


def synthesize_schedule(base: PointGenerator, levels: int, decay: Optional[Fraction] = None,
                        budget: Optional[int] = DEFAULT_BUDGET) -> Schedule:
    """Greedy-minimal gaps: each ``k_m`` is the least integer meeting every constraint.

    With ``decay`` set, the ratio must also shrink by that factor per level,
    which forces ``(|A_m|+m)/(|A_m|+2k_m+m) -> 0``.  ``budget`` caps
    ``|A_levels|`` (pass ``None`` for structural-only use).
    """
    if levels < 1:
        raise ScheduleError("levels must be >= 1")
    if base.symbol_at(0) != 1:
        raise ScheduleError("base point must start with symbol 1")
    if decay is not None and not 0 < decay <= 1:
        raise ScheduleError("decay must lie in (0, 1]")
    lengths, gaps = [2], []
    for m in range(1, levels + 1):
        if budget is not None and lengths[-1] > budget:
            raise BudgetError(f"|A_{m}| = {lengths[-1]} exceeds budget {budget}")
        k = max(gap_thresholds(lengths, gaps, m, decay).values())
        gaps.append(k)
        lengths.append(2 * lengths[-1] + 2 * k + m)
    s = Schedule(base, tuple(gaps), decay)
    report = validate_schedule(s)
    if not report.ok:  # pragma: no cover - thresholds are exact
        raise ScheduleError(f"synthesized schedule fails: {report.failures[0].describe()}")
    return s


# -- blocks and the transitive point ------------------------------------------

@dataclass(frozen=True)
class ConstructionPrefix:
    level: int
    word: FiniteWord
    segments: tuple[tuple[str, int, int], ...] = field(default=())
    """Canonical decomposition ``(kind, start, length)``, kind in A/Z/B."""


def _fill(s: Schedule, out: np.ndarray, m: int, offset: int, lo: int, hi: int) -> None:
    """Write the part of ``A_m`` (placed at ``offset``) meeting ``[lo, hi)`` into
    ``out`` (indexed from ``lo``).  ``out`` must be zero-initialised."""
    A = s.lengths
    end = offset + A[m - 1]
    if end <= lo or offset >= hi:
        return
    if m == 1:
        a, b = max(lo, offset), min(hi, end)
        out[a - lo:b - lo] = 1
        return
    prev = A[m - 2]
    k = s.k(m - 1)
    _fill(s, out, m - 1, offset, lo, hi)
    bstart = offset + prev + k
    a, b = max(lo, bstart), min(hi, bstart + m - 1)
    if a < b:
        out[a - lo:b - lo] = s.b_word(m - 1)[a - bstart:b - bstart]
    _fill(s, out, m - 1, bstart + m - 1 + k, lo, hi)


def build_block(s: Schedule, n: int, budget: int = DEFAULT_BUDGET) -> ConstructionPrefix:
    if not 1 <= n <= s.levels + 1:
        raise ScheduleError(f"level {n} outside 1..{s.levels + 1}")
    L = s.block_length(n)
    if L > budget:
        raise BudgetError(f"|A_{n}| = {L} exceeds budget {budget}")
    if n == 1:
        return ConstructionPrefix(1, FiniteWord("11"), (("A", 0, 2),))
    out = np.zeros(L, dtype=np.uint8)
    _fill(s, out, n, 0, 0, L)
    prev, k = s.block_length(n - 1), s.k(n - 1)
    segs = (("A", 0, prev), ("Z", prev, k), ("B", prev + k, n - 1),
            ("Z", prev + k + n - 1, k), ("A", prev + 2 * k + n - 1, prev))
    return ConstructionPrefix(n, FiniteWord._wrap(out, 2), segs)


def block_by_concat(s: Schedule, n: int) -> FiniteWord:
    """``A_n`` via literal concatenation of the recursion (reference path)."""
    a = FiniteWord("11")
    for m in range(1, n):
        k = s.k(m)
        a = concat([a, Run(0, k), FiniteWord(s.b_word(m)), Run(0, k), a])
    return a


class Theorem4Point(PointGenerator):
    """``x = lim A_n 0^inf`` read structurally.

    ``A_{L+1}`` (``L = levels``) is fixed by ``k_1..k_L`` and is a prefix of the
    limit point; any admissible continuation follows it with
    ``k_{L+1} > 3|A_{L+1}|`` zeros.  The resolution is therefore
    ``4|A_{L+1}| + 1``.
    """

    def __init__(self, s: Schedule):
        self.schedule = s
        self.top = s.levels + 1
        self.resolution = 4 * s.block_length(self.top) + 1

    def _window(self, start, length):
        out = np.zeros(length, dtype=np.uint8)
        _fill(self.schedule, out, self.top, 0, start, start + length)
        return out

    def block_positions(self, n: int) -> Iterator[int]:
        """Start positions of the canonical copies of ``A_n`` in ``A_{levels+1}``, ascending."""
        s = self.schedule

        def rec(m: int, offset: int) -> Iterator[int]:
            if m == n:
                yield offset
                return
            yield from rec(m - 1, offset)
            yield from rec(m - 1, offset + s.period(m - 1))

        if not 1 <= n <= self.top:
            raise ScheduleError(f"level {n} outside 1..{self.top}")
        return rec(self.top, 0)

    def prefix_occurrences(self, m, count, scan_length=None):
        s = self.schedule
        if scan_length is not None and scan_length <= 10 ** 7 and scan_length <= self.resolution:
            return super().prefix_occurrences(m, count, scan_length)
        level = next((n for n in range(1, self.top + 1) if s.block_length(n) >= m), None)
        if level is None:
            raise ResolutionError(f"prefix length {m} exceeds |A_{self.top}|")
        out = []
        for j in self.block_positions(level):
            if len(out) >= count:
                break
            out.append(j)
        return out

    def describe(self):
        return {"kind": "theorem4", **self.schedule.to_dict()}


def theorem4_point(s: Schedule) -> Theorem4Point:
    return Theorem4Point(s)


def first_absent_level(s: Schedule, scan_length: int = 10 ** 4,
                       base: Optional[PointGenerator] = None) -> Optional[int]:
    """Least ``n`` whose block ``A_n`` does not occur in the base prefix of length
    ``scan_length`` -- evidence, not proof, that ``A_n`` never occurs in ``y``."""
    y = (base or s.base).window(0, scan_length)
    for n in range(1, s.levels + 1):
        L = s.block_length(n)
        if L > scan_length:
            return n
        a = build_block(s, n).word.symbols
        if occurrence_array(a, y).size == 0:
            return n
    return None


def proof_resolution(epsilon: Fraction) -> int:
    """Least ``K`` with ``1/(K+1) < epsilon/5``: agreement on ``K`` symbols
    forces distance below ``epsilon/5``."""
    return math.floor(5 / Fraction(epsilon))


def proof_level(s: Schedule, epsilon: Fraction, scan_length: int = 10 ** 4) -> Optional[int]:
    """Least ``n >= first_absent_level`` with ``2K(|A_n|+n)/(|A_n|+2k_n+n) < epsilon/4``."""
    epsilon = Fraction(epsilon)
    K = proof_resolution(epsilon)
    start = first_absent_level(s, scan_length)
    if start is None:
        return None
    for n in range(start, s.levels + 1):
        if 2 * K * s.ratio(n) < epsilon / 4:
            return n
    return None


# -- the two counting claims --------------------------------------------------

@dataclass
class ClaimReport:
    claim: int
    n: int
    m: Optional[int]
    checked: int
    violations: list[tuple]
    tightest: tuple
    rows: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _csv_row(n, m, i, j, lhs, rhs: Fraction, ok) -> dict:
    return {"level_n": n, "level_m": "" if m is None else m, "i": i, "j": "" if j is None else j,
            "lhs": lhs, "rhs_num": rhs.numerator, "rhs_den": rhs.denominator, "pass": ok}


def check_claim1(s: Schedule, n: int, m: int, budget: int = DEFAULT_BUDGET) -> ClaimReport:
    """Ones in every prefix ``W[1..i]`` of ``W = A_n 0^{k_m} B_m 0^{k_m}`` are at most
    ``max(1, i/(|A_n|+2k_n+n)) * (|A_n|+n)``.  ``i`` is a 1-based prefix length."""
    if not 1 <= n <= m <= s.levels:
        raise ValueError(f"need 1 <= n <= m <= {s.levels}")
    a = build_block(s, n, budget).word
    k = s.k(m)
    W = concat([a, Run(0, k), FiniteWord(s.b_word(m)), Run(0, k)]).symbols
    c = np.cumsum(W, dtype=np.int64)
    i = np.arange(1, W.size + 1, dtype=np.int64)
    D = s.period(n)
    cap = len(a) + n
    lhs = c * D
    rhs = np.maximum(i, D) * cap
    bad = np.flatnonzero(lhs > rhs)
    # tightest ratio lhs/rhs, exact
    score = lhs / rhs
    t = int(np.argmax(score))
    for cand in np.flatnonzero(score >= score[t] * (1 - 1e-12)):
        if int(lhs[cand]) * int(rhs[t]) > int(lhs[t]) * int(rhs[cand]):
            t = int(cand)

    def bound(ii):
        return max(Fraction(1), Fraction(ii, D)) * cap

    viol = [(int(i[b]), int(c[b]), bound(int(i[b]))) for b in bad]
    tight = (int(i[t]), int(c[t]), bound(int(i[t])))
    rows = [_csv_row(n, m, ii, None, lh, rh, False) for ii, lh, rh in viol]
    rows.append(_csv_row(n, m, tight[0], None, tight[1], tight[2], not viol))
    return ClaimReport(1, n, m, int(W.size), viol, tight, rows)


def check_claim2(s: Schedule, n: int, x: PointGenerator, L: int,
                 base_scan: int = 10 ** 4) -> ClaimReport:
    """For every occurrence ``i`` of ``A_n`` in ``x[0:L]`` and every ``j`` with
    ``i + |A_n| < j <= L``: ``ones(x[i:j]) <= ((j-i)/(|A_n|+2k_n+n) + 1)(|A_n|+n)``."""
    first = first_absent_level(s, base_scan)
    if first is None or n < first:
        raise ClaimPreconditionError(
            f"level {n} is below the first level absent from the base ({first})")
    a = build_block(s, n).word.symbols
    text = x.window(0, L)
    occ = occurrence_array(a, text)
    c = np.zeros(L + 1, dtype=np.int64)
    np.cumsum(text, out=c[1:])
    An = a.size
    D = s.period(n)
    cap = An + n
    viol, rows = [], []
    checked = 0
    best = None
    for i in occ.tolist():
        j = np.arange(i + An + 1, L + 1, dtype=np.int64)
        if j.size == 0:
            continue
        checked += j.size
        ones = c[j] - c[i]
        lhs = ones * D
        rhs = (j - i + D) * cap
        bad = np.flatnonzero(lhs > rhs).tolist()
        for b in bad:
            jj = int(j[b])
            viol.append((i, jj, int(ones[b]), Fraction(jj - i + D, D) * cap))
        t = int(np.argmax(lhs / rhs))
        tight = (i, int(j[t]), int(ones[t]), Fraction(int(j[t]) - i + D, D) * cap)
        rows.append(_csv_row(n, None, i, tight[1], tight[2], tight[3], not bad))
        if best is None or tight[2] * best[3] > best[2] * tight[3]:
            best = tight
    for v in viol:
        rows.append(_csv_row(n, None, v[0], v[1], v[2], v[3], False))
    return ClaimReport(2, n, None, checked, viol, best or (), rows)
