"""Point generators, the shift metric, and the tent-map stick space."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from decimal import Decimal, getcontext
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .words import FiniteWord, occurrence_array

UNLIMITED = 1 << 62
FIXED_BITS = 128

Number = Union[Fraction, float]


class ResolutionError(ValueError):
    """Requested index lies beyond what a generator can produce."""


class DescriptorError(ValueError):
    pass


# -- point generators ---------------------------------------------------------

class PointGenerator:
    """A deterministic one-sided sequence; subclasses implement ``_window``."""

    alphabet = 2
    resolution = UNLIMITED

    def _window(self, start: int, length: int) -> np.ndarray:
        raise NotImplementedError

    def window(self, start: int, length: int) -> np.ndarray:
        if start < 0 or length < 0:
            raise ValueError("negative window")
        if start + length > self.resolution:
            raise ResolutionError(
                f"window [{start}, {start + length}) exceeds resolution {self.resolution}"
            )
        return self._window(start, length)

    def symbol_at(self, i: int) -> int:
        return int(self.window(i, 1)[0])

    def prefix(self, length: int) -> FiniteWord:
        return FiniteWord._wrap(self.window(0, length), self.alphabet)

    def shift(self, k: int = 1) -> "PointGenerator":
        if k == 0:
            return self
        return Shifted(self, k)

    def prefix_occurrences(self, m: int, count: int, scan_length: Optional[int] = None) -> list[int]:
        """Start positions ``j`` with ``x[j:j+m] == x[:m]``, at most ``count`` of them."""
        scan = scan_length or min(self.resolution, max(16 * m * count, 1 << 16))
        text = self.window(0, min(scan, self.resolution))
        occ = occurrence_array(text[:m], text)
        return occ[:count].tolist()

    def describe(self) -> dict:
        raise NotImplementedError

    @property
    def key(self) -> str:
        import json
        return json.dumps(self.describe(), sort_keys=True)


class Shifted(PointGenerator):
    def __init__(self, inner: PointGenerator, k: int):
        if k < 0:
            raise ValueError("one-sided shift requires k >= 0")
        if isinstance(inner, Shifted):
            inner, k = inner.inner, inner.k + k
        self.inner = inner
        self.k = k
        self.alphabet = inner.alphabet
        self.resolution = inner.resolution - k if inner.resolution < UNLIMITED else UNLIMITED

    def _window(self, start, length):
        return self.inner.window(start + self.k, length)

    def describe(self):
        return {"kind": "shifted", "by": self.k, "of": self.inner.describe()}


class ExplicitPrefix(PointGenerator):
    def __init__(self, word: FiniteWord):
        self.word = word
        self.alphabet = word.alphabet
        self.resolution = len(word)

    def _window(self, start, length):
        return self.word.symbols[start:start + length]

    def describe(self):
        return {"kind": "explicit", "word": str(self.word)}


class EventuallyPeriodic(PointGenerator):
    def __init__(self, preperiod: FiniteWord | str, period: FiniteWord | str, alphabet: int = 2):
        pre = preperiod if isinstance(preperiod, FiniteWord) else FiniteWord(preperiod, alphabet)
        per = period if isinstance(period, FiniteWord) else FiniteWord(period, alphabet)
        if len(per) == 0:
            raise ValueError("period word must be nonempty")
        self.pre, self.per = pre, per
        self.alphabet = max(pre.alphabet, per.alphabet)

    def _window(self, start, length):
        idx = np.arange(start, start + length, dtype=np.int64)
        out = np.empty(length, dtype=np.uint8)
        lp = len(self.pre)
        head = idx < lp
        out[head] = self.pre.symbols[idx[head]]
        out[~head] = self.per.symbols[(idx[~head] - lp) % len(self.per)]
        return out

    def describe(self):
        return {"kind": "eventually-periodic", "preperiod": str(self.pre), "period": str(self.per)}


class SubstitutionFixedPoint(PointGenerator):
    """Fixed point ``lim s^n(seed)`` of a prolongable substitution."""

    def __init__(self, rules: Mapping[int, Sequence[int] | str], seed: int = 0):
        self.rules = {int(a): np.asarray(FiniteWord(w, 256).symbols if isinstance(w, str) else w,
                                         dtype=np.uint8)
                      for a, w in rules.items()}
        self.seed = int(seed)
        self.alphabet = max(max(self.rules) + 1, max(int(u.max()) for u in self.rules.values()) + 1)
        img = self.rules[self.seed]
        if img.size < 2 or img[0] != self.seed:
            raise ValueError("substitution must be prolongable on the seed symbol")
        self._cache = np.array([self.seed], dtype=np.uint8)
        self._lock = threading.Lock()

    def _apply(self, w: np.ndarray) -> np.ndarray:
        lens = np.zeros(256, dtype=np.int64)
        for a, u in self.rules.items():
            lens[a] = u.size
        wl = lens[w]
        starts = np.concatenate(([0], np.cumsum(wl)[:-1]))
        out = np.empty(int(wl.sum()), dtype=np.uint8)
        for a, u in self.rules.items():
            sel = starts[w == a]
            for t, sym in enumerate(u):
                out[sel + t] = sym
        return out

    def _ensure(self, n: int) -> np.ndarray:
        cache = self._cache
        if cache.size >= n:
            return cache
        with self._lock:
            cache = self._cache
            while cache.size < n:
                cache = self._apply(cache)
            cache.flags.writeable = False
            self._cache = cache
        return cache

    def _window(self, start, length):
        return self._ensure(start + length)[start:start + length]

    def describe(self):
        return {
            "kind": "substitution",
            "rules": {str(a): "".join(map(str, u.tolist())) for a, u in sorted(self.rules.items())},
            "seed": self.seed,
        }


def thue_morse() -> SubstitutionFixedPoint:
    return SubstitutionFixedPoint({0: "01", 1: "10"}, 0)


def _parse_real(text: str) -> tuple[int, int, bool]:
    """Return ``(num, den, exact)`` for a rotation number or phase."""
    text = str(text).strip()
    named = {"golden": "(sqrt5-1)/2", "silver": "sqrt2-1"}
    text = named.get(text, text)
    getcontext().prec = 80
    if text == "(sqrt5-1)/2":
        val = (Decimal(5).sqrt() - 1) / 2
    elif text == "sqrt2-1":
        val = Decimal(2).sqrt() - 1
    elif "/" in text:
        f = Fraction(text)
        return f.numerator, f.denominator, True
    else:
        val = Decimal(text)
        f = Fraction(val)
        if f.denominator < (1 << 31):
            return f.numerator, f.denominator, True
    D = 1 << FIXED_BITS
    return int(val * D), D, False


class Sturmian(PointGenerator):
    """Coding of rotation by ``alpha``: symbol 0 on ``[0, 1-alpha)``, 1 on ``[1-alpha, 1)``.

    Rational ``alpha`` is exact; anything else is held as a 128-bit fixed point.
    """

    def __init__(self, alpha: str | Fraction = "golden", phase: str | Fraction = "0"):
        an, ad, aexact = _parse_real(str(alpha))
        pn, pd, pexact = _parse_real(str(phase))
        D = ad * pd // math.gcd(ad, pd)
        self._a = an * (D // ad)
        self._x0 = (pn * (D // pd)) % D
        self._D = D
        if not 0 < self._a < D:
            raise ValueError("rotation number must lie in (0, 1)")
        self.exact = aexact and pexact
        self.alpha_text, self.phase_text = str(alpha), str(phase)

    def _window(self, start, length):
        a, D, x0 = self._a, self._D, self._x0
        if D * 2 < (1 << 62) and (start + length) * a < (1 << 62):
            i = np.arange(start, start + length, dtype=np.int64)
            ph = (x0 + i * a) % D
            return (ph >= D - a).astype(np.uint8)
        base = (x0 + start * a) % D
        out = np.empty(length, dtype=np.uint8)
        ph = base
        thr = D - a
        for t in range(length):
            out[t] = ph >= thr
            ph += a
            if ph >= D:
                ph -= D
        return out

    def describe(self):
        return {"kind": "sturmian", "alpha": self.alpha_text, "phase": self.phase_text}


def generator_from_descriptor(d: Mapping) -> PointGenerator:
    """Build a generator from a JSON-style descriptor (see docs/systems.md)."""
    if isinstance(d, str):
        d = {"kind": d}
    kind = d.get("kind")
    if kind == "eventually-periodic":
        return EventuallyPeriodic(d.get("preperiod", ""), d["period"], d.get("alphabet", 2))
    if kind == "substitution":
        g = SubstitutionFixedPoint({int(a): w for a, w in d["rules"].items()}, d.get("seed", 0))
        return g.shift(int(d.get("shift", 0)))
    if kind == "thue-morse":
        return thue_morse().shift(int(d.get("shift", 0)))
    if kind == "sturmian":
        return Sturmian(d.get("alpha", "golden"), d.get("phase", "0"))
    if kind == "explicit":
        if "file" in d:
            from .words import read_word
            return ExplicitPrefix(read_word(d["file"]))
        return ExplicitPrefix(FiniteWord(d["word"], d.get("alphabet", 2)))
    if kind == "shifted":
        return generator_from_descriptor(d["of"]).shift(int(d["by"]))
    if kind == "theorem4":
        from .construction import schedule_from_dict, theorem4_point
        return theorem4_point(schedule_from_dict(d))
    raise DescriptorError(f"unknown generator kind {kind!r}")


# -- the shift metric ---------------------------------------------------------

def shift_distance(x: PointGenerator, y: PointGenerator, K: int) -> tuple[Fraction, Fraction]:
    """``d(x, y) = 1/i`` with ``i`` the first differing 1-based position.

    Returns ``(value, error_bound)``: exact when a difference shows up within
    the first ``K`` symbols, else ``(0, 1/(K+1))``.
    """
    if x is y:
        return Fraction(0), Fraction(0)
    a, b = x.window(0, K), y.window(0, K)
    diff = np.flatnonzero(a != b)
    if diff.size:
        return Fraction(1, int(diff[0]) + 1), Fraction(0)
    return Fraction(0), Fraction(1, K + 1)


def first_difference(a: np.ndarray, b: np.ndarray, N: int, K: int) -> np.ndarray:
    """For each ``t < N`` the 1-based index of the first disagreement of the
    tails ``a[t:]``, ``b[t:]`` if it lies within ``K`` symbols, else 0."""
    diff = np.flatnonzero(a[:N + K] != b[:N + K])
    t = np.arange(N, dtype=np.int64)
    if diff.size == 0:
        return np.zeros(N, dtype=np.int64)
    k = np.searchsorted(diff, t)
    nxt = np.where(k < diff.size, diff[np.minimum(k, diff.size - 1)], np.iinfo(np.int64).max // 2)
    idx = nxt - t + 1
    idx[idx > K] = 0
    return idx


class MetricSystem:
    """Abstract ``(X, d, T)``.  ``prepare`` turns points into orbit data consumed
    by ``pair_steps``; scans call it once per sample."""

    kind = "abstract"
    diameter: Number = 1

    def distance(self, p, q, K: int = 64):
        raise NotImplementedError

    def transform(self, p):
        raise NotImplementedError

    def prepare(self, points: Sequence, length: int) -> list:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind}


class ShiftSystem(MetricSystem):
    kind = "symbolic"
    diameter = Fraction(1)

    def __init__(self, alphabet: int = 2):
        self.alphabet = alphabet

    def distance(self, p: PointGenerator, q: PointGenerator, K: int = 64):
        return shift_distance(p, q, K)

    def transform(self, p: PointGenerator) -> PointGenerator:
        return p.shift(1)

    def prepare(self, points, length):
        return [p.window(0, length) for p in points]


# -- the tent-map stick space -------------------------------------------------

def tent(x: Number) -> Number:
    return 1 - abs(1 - 2 * x)


@dataclass(frozen=True)
class TentStickPoint:
    """``branch == 0`` is the baseline ``[0,1] x {0}``; ``branch == k`` is the
    stick ``{-1/k} x [0, 1/k]`` with ``coordinate`` the height."""

    branch: int
    coordinate: Number

    def __post_init__(self):
        if self.branch < 0:
            raise ValueError("branch must be 0 (baseline) or a positive stick index")
        top = 1 if self.branch == 0 else Fraction(1, self.branch)
        if not 0 <= self.coordinate <= top:
            raise ValueError(f"coordinate {self.coordinate} outside [0, {top}]")

    @property
    def scale(self) -> int:
        return max(self.branch, 1)

    @property
    def normalized(self) -> Number:
        return self.coordinate * self.scale

    def embed(self) -> tuple[Number, Number]:
        if self.branch == 0:
            return self.coordinate, 0
        return -Fraction(1, self.branch), self.coordinate

    @classmethod
    def parse(cls, text: str) -> "TentStickPoint":
        """``baseline:0.3`` or ``stick:5:0.06`` (decimals are read exactly)."""
        parts = text.split(":")
        if parts[0] == "baseline" and len(parts) == 2:
            return cls(0, Fraction(parts[1]))
        if parts[0] == "stick" and len(parts) == 3:
            return cls(int(parts[1]), Fraction(parts[2]))
        raise DescriptorError(f"cannot parse tent point {text!r}")

    def __str__(self):
        c = self.coordinate
        if self.branch == 0:
            return f"baseline:{c}"
        return f"stick:{self.branch}:{c}"


def tent_step(p: TentStickPoint) -> TentStickPoint:
    if p.branch == 0:
        return TentStickPoint(0, tent(p.coordinate))
    k = p.branch
    return TentStickPoint(k, tent(k * p.coordinate) / k)


def euclidean_distance(p: TentStickPoint, q: TentStickPoint) -> float:
    (a, b), (c, d) = p.embed(), q.embed()
    return math.hypot(float(a - c), float(b - d))


@dataclass
class TentOrbit:
    """Orbit of a stick-space point on the normalized coordinate ``k * h``.

    ``mode == "exact-lattice"``: ``values`` are numerators over ``den``;
    ``mode == "float"``: ``values`` are float64 normalized coordinates.
    """

    branch: int
    values: np.ndarray
    den: int
    mode: str


def tent_lattice_orbits(num: np.ndarray, den: int, length: int) -> np.ndarray:
    """Exact tent orbits of ``num/den``: ``u -> 2u`` if ``2u <= den`` else ``2den - 2u``."""
    num = np.asarray(num, dtype=np.int64)
    out = np.empty((length, num.size), dtype=np.int64)
    u = num.copy()
    for t in range(length):
        out[t] = u
        u2 = 2 * u
        u = np.where(u2 <= den, u2, 2 * den - u2)
    return out


FLOAT_ORBIT_CAP = 100_000
LATTICE_LIMIT = 1 << 60


class TentStickSystem(MetricSystem):
    kind = "tent-stick"
    diameter = math.sqrt(5)

    def __init__(self, k_max: int = 64):
        self.k_max = k_max

    def _check(self, p: TentStickPoint):
        if p.branch > self.k_max:
            raise ValueError(f"stick {p.branch} beyond k_max={self.k_max}")

    def distance(self, p, q, K=None):
        return euclidean_distance(p, q)

    def transform(self, p):
        self._check(p)
        return tent_step(p)

    def prepare(self, points, length):
        for p in points:
            self._check(p)
        coords = [p.normalized for p in points]
        if all(isinstance(c, (Fraction, int)) for c in coords):
            den = 1
            for c in coords:
                den = den * Fraction(c).denominator // math.gcd(den, Fraction(c).denominator)
            if den < LATTICE_LIMIT:
                nums = np.array([int(Fraction(c) * den) for c in coords], dtype=np.int64)
                orb = tent_lattice_orbits(nums, den, length)
                return [TentOrbit(p.branch, orb[:, i], den, "exact-lattice") for i, p in enumerate(points)]
        if length > FLOAT_ORBIT_CAP:
            raise ResolutionError(f"float tent orbits are capped at {FLOAT_ORBIT_CAP} steps")
        u = np.array([float(c) for c in coords])
        out = np.empty((length, u.size))
        for t in range(length):
            out[t] = u
            u = 1 - np.abs(1 - 2 * u)
        return [TentOrbit(p.branch, out[:, i], 1, "float") for i, p in enumerate(points)]

    def describe(self):
        return {"kind": "tent-stick", "k_max": self.k_max}


def system_from_descriptor(d: Mapping) -> tuple[MetricSystem, object]:
    """Return ``(system, base point)`` for a system descriptor."""
    if d.get("kind") == "tent-stick":
        sys_ = TentStickSystem(int(d.get("k_max", 64)))
        point = TentStickPoint.parse(d.get("point", "baseline:0.3"))
        return sys_, point
    g = generator_from_descriptor(d)
    return ShiftSystem(g.alphabet), g
