"""Window statistics for subsets of the nonnegative integers.

Every estimate is an exact :class:`~fractions.Fraction` computed from integer
window counts.  Limits are replaced by finite-horizon surrogates:

* upper/lower density take the max/min of ``#(F & [0, n)) / n`` over the back
  half ``n in [ceil(N/2), N]``;
* Banach densities take the max/min over all windows inside ``[0, N)`` of
  length at least ``W``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

UNBOUNDED = "unbounded-within-horizon"


class HorizonError(ValueError):
    pass


class IndexSet:
    """A subset of ``[0, horizon)`` stored as a dense membership mask."""

    def __init__(self, mask: np.ndarray, name: str = "custom"):
        mask = np.asarray(mask, dtype=bool).copy()
        mask.flags.writeable = False
        self.mask = mask
        self.name = name

    @property
    def horizon(self) -> int:
        return int(self.mask.size)

    @classmethod
    def from_sorted(cls, elements: Iterable[int], horizon: int, name: str = "list") -> "IndexSet":
        arr = np.asarray(list(elements), dtype=np.int64)
        if arr.size:
            if np.any(np.diff(arr) <= 0):
                raise ValueError("elements must be sorted and duplicate-free")
            if arr[0] < 0 or arr[-1] >= horizon:
                raise HorizonError(f"elements must lie in [0, {horizon})")
        mask = np.zeros(horizon, dtype=bool)
        mask[arr] = True
        return cls(mask, name)

    @classmethod
    def from_predicate(cls, pred: Callable, horizon: int, name: str = "predicate") -> "IndexSet":
        n = np.arange(horizon, dtype=np.int64)
        try:
            mask = np.asarray(pred(n), dtype=bool)
            if mask.shape != n.shape:
                raise TypeError
        except (TypeError, ValueError):
            mask = np.fromiter((bool(pred(int(i))) for i in range(horizon)), bool, horizon)
        return cls(mask, name)

    def elements(self, limit: Optional[int] = None) -> np.ndarray:
        m = self.mask if limit is None else self.mask[:limit]
        return np.flatnonzero(m)

    def complement(self) -> "IndexSet":
        return IndexSet(~self.mask, f"complement({self.name})")

    def __contains__(self, n: int) -> bool:
        return 0 <= n < self.horizon and bool(self.mask[n])

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __repr__(self) -> str:
        return f"IndexSet({self.name}, horizon={self.horizon}, size={len(self)})"


def _bursts(n: np.ndarray) -> np.ndarray:
    # n in [2^k, 2^k + k) with k = floor(log2 n)
    out = np.zeros(n.shape, dtype=bool)
    pos = n >= 1
    k = np.zeros(n.shape, dtype=np.int64)
    k[pos] = np.floor(np.log2(n[pos])).astype(np.int64)
    # guard against float rounding at exact powers
    k[pos & ((np.int64(1) << k) > n)] -= 1
    k[pos & ((np.int64(1) << (k + 1)) <= n)] += 1
    out[pos] = n[pos] - (np.int64(1) << k[pos]) < k[pos]
    return out


def builtin_predicate(spec: str) -> Callable[[np.ndarray], np.ndarray]:
    """Resolve CLI predicate names: ``even``, ``odd``, ``multiples:K``, ``bursts``,
    ``empty``, ``all``, ``squares``."""
    name, _, arg = spec.partition(":")
    if name == "even":
        return lambda n: n % 2 == 0
    if name == "odd":
        return lambda n: n % 2 == 1
    if name == "multiples":
        k = int(arg)
        return lambda n: n % k == 0
    if name == "bursts":
        return _bursts
    if name == "empty":
        return lambda n: np.zeros(np.shape(n), dtype=bool)
    if name == "all":
        return lambda n: np.ones(np.shape(n), dtype=bool)
    if name == "squares":
        return lambda n: np.floor(np.sqrt(n)).astype(np.int64) ** 2 == n
    raise ValueError(f"unknown predicate {spec!r}")


def load_index_set(path: str | Path, horizon: Optional[int] = None) -> IndexSet:
    """Read one integer per line; a ``# horizon H`` line declares the horizon."""
    elems = []
    declared = None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0].rstrip(":") == "horizon":
                declared = int(parts[1])
            continue
        elems.append(int(line))
    h = horizon or declared or ((max(elems) + 1) if elems else 1)
    return IndexSet.from_sorted(elems, h, name=Path(path).name)


def save_index_set(F: IndexSet, path: str | Path) -> None:
    lines = [f"# horizon {F.horizon}"] + [str(int(e)) for e in F.elements()]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class DensityEstimate:
    value: Fraction
    kind: str
    horizon: int
    window_floor: Optional[int] = None
    witness: tuple = field(default=(), compare=False)

    def __post_init__(self):
        assert 0 <= self.value <= 1

    def __float__(self) -> float:
        return float(self.value)


def _prefix_counts(F: IndexSet, N: int) -> np.ndarray:
    if N > F.horizon:
        raise HorizonError(f"N={N} exceeds horizon {F.horizon}")
    P = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(F.mask[:N], out=P[1:])
    return P


def _extreme_ratio(num: np.ndarray, den: np.ndarray, largest: bool) -> tuple[Fraction, int]:
    """Exact max (or min) of num/den over aligned positive arrays."""
    ratio = num / den
    idx = int(np.argmax(ratio) if largest else np.argmin(ratio))
    while True:
        a, b = int(num[idx]), int(den[idx])
        cross = num * b - den * a
        bad = np.flatnonzero(cross > 0 if largest else cross < 0)
        if bad.size == 0:
            return Fraction(a, b), idx
        idx = int(bad[np.argmax(cross[bad])] if largest else bad[np.argmin(cross[bad])])


def upper_density(F: IndexSet, N: int) -> DensityEstimate:
    if N < 1:
        raise ValueError("N must be positive")
    P = _prefix_counts(F, N)
    n = np.arange(-(-N // 2), N + 1, dtype=np.int64)
    n = n[n >= 1]
    val, i = _extreme_ratio(P[n], n, largest=True)
    return DensityEstimate(val, "upper", N, witness=(int(n[i]),))


def lower_density(F: IndexSet, N: int) -> DensityEstimate:
    if N < 1:
        raise ValueError("N must be positive")
    P = _prefix_counts(F, N)
    n = np.arange(-(-N // 2), N + 1, dtype=np.int64)
    n = n[n >= 1]
    val, i = _extreme_ratio(P[n], n, largest=False)
    return DensityEstimate(val, "lower", N, witness=(int(n[i]),))


def max_window_ratio(P: np.ndarray, W: int) -> tuple[Fraction, int, int]:
    """Exact max of ``(P[j]-P[i])/(j-i)`` over ``j - i >= W``.

    Dinkelbach iteration: each round is one linear pass of integer
    arithmetic; the ratio strictly increases until no window beats it.
    Returns ``(value, start, length)``.
    """
    N = P.size - 1
    if not 1 <= W <= N:
        raise ValueError(f"window floor {W} must lie in [1, {N}]")
    a, b, start = int(P[N] - P[0]), N, 0
    t = np.arange(N + 1, dtype=np.int64)
    while True:
        G = P * b - t * a
        run_min = np.minimum.accumulate(G[: N - W + 1])
        arg_min = _running_argmin(G[: N - W + 1])
        gain = G[W:] - run_min
        j = int(np.argmax(gain))
        if gain[j] <= 0:
            return Fraction(a, b), start, b
        jj = j + W
        i = int(arg_min[j])
        a, b, start = int(P[jj] - P[i]), jj - i, i
        if a == b:
            return Fraction(1), start, b


def _running_argmin(G: np.ndarray) -> np.ndarray:
    run = np.minimum.accumulate(G)
    is_new = np.empty(G.size, dtype=bool)
    is_new[0] = True
    is_new[1:] = G[1:] <= run[:-1]
    idx = np.where(is_new & (G == run), np.arange(G.size), 0)
    return np.maximum.accumulate(idx)


def banach_upper_density(F: IndexSet, N: int, W: int) -> DensityEstimate:
    if W > N:
        raise ValueError(f"window floor W={W} exceeds N={N}")
    P = _prefix_counts(F, N)
    val, s, L = max_window_ratio(P, W)
    return DensityEstimate(val, "banach-upper", N, W, witness=(s, L))


def banach_lower_density(F: IndexSet, N: int, W: int) -> DensityEstimate:
    if W > N:
        raise ValueError(f"window floor W={W} exceeds N={N}")
    P = _prefix_counts(F, N)
    Pc = np.arange(N + 1, dtype=np.int64) - P
    val, s, L = max_window_ratio(Pc, W)
    return DensityEstimate(1 - val, "banach-lower", N, W, witness=(s, L))


@dataclass(frozen=True)
class GapEstimate:
    """Largest gap of ``F & [0, N)``; ``value`` is :data:`UNBOUNDED` when empty.

    ``unbounded_suspect`` flags the case where the trailing stretch after the
    last element is the strict maximum, i.e. the gap still grows with N.
    """

    value: object
    horizon: int
    unbounded_suspect: bool

    @property
    def bounded(self) -> bool:
        return self.value != UNBOUNDED and not self.unbounded_suspect


def syndetic_gap(F: IndexSet, N: int) -> GapEstimate:
    if N > F.horizon:
        raise HorizonError(f"N={N} exceeds horizon {F.horizon}")
    e = F.elements(N)
    if e.size == 0:
        return GapEstimate(UNBOUNDED, N, True)
    interior = int(np.diff(e).max()) if e.size > 1 else 0
    leading = int(e[0])
    trailing = N - 1 - int(e[-1])
    gap = max(interior, leading, trailing)
    return GapEstimate(gap, N, trailing > max(interior, leading))


def subset_sums(ps: Iterable[int]) -> list[int]:
    sums = [0]
    for p in ps:
        sums = sums + [s + p for s in sums]
    return sorted(set(sums[1:]))


def is_ip_witness(F: IndexSet, ps: Iterable[int]) -> bool:
    return all(s in F for s in subset_sums(ps))


def ip_witness(F: IndexSet, k: int, bound: int) -> Optional[tuple[int, ...]]:
    """Search ``p_1 < ... < p_k <= bound`` whose nonempty subset sums all lie in F.

    Depth-first, smallest candidates first; each level filters every candidate
    at once against the current subset-sum set.
    """
    if not 1 <= k <= 5:
        raise ValueError("k must lie in 1..5")
    H = F.horizon
    mask = F.mask
    cand_all = np.arange(1, min(bound, H - 1) + 1, dtype=np.int64)

    def extend(chosen: list[int], sums: list[int]) -> Optional[tuple[int, ...]]:
        if len(chosen) == k:
            return tuple(chosen)
        lo = chosen[-1] + 1 if chosen else 1
        cand = cand_all[cand_all >= lo]
        ok = mask[cand]
        for s in sums:
            shifted = cand + s
            inside = shifted < H
            ok &= inside
            ok[inside] &= mask[shifted[inside]]
        for p in cand[ok]:
            p = int(p)
            found = extend(chosen + [p], sums + [p] + [s + p for s in sums])
            if found:
                return found
        return None

    found = extend([], [])
    if found is not None:
        assert is_ip_witness(F, found)
    return found


def density_report(F: IndexSet, N: int, W: int) -> dict:
    up, lo = upper_density(F, N), lower_density(F, N)
    bu, bl = banach_upper_density(F, N, W), banach_lower_density(F, N, W)
    gap = syndetic_gap(F, N)
    return {
        "set": F.name,
        "horizon": N,
        "window_floor": W,
        "surrogate": "upper/lower: extremum over n in [ceil(N/2), N]; banach: windows of length >= W in [0, N)",
        "upper": str(up.value),
        "lower": str(lo.value),
        "banach_upper": str(bu.value),
        "banach_lower": str(bl.value),
        "banach_upper_window": {"start": bu.witness[0], "length": bu.witness[1]},
        "syndetic_gap": gap.value,
        "unbounded_suspect": gap.unbounded_suspect,
    }
