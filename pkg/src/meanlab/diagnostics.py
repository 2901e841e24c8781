"""Birkhoff mean-distance profiles and finite-horizon scans.

Asymptotic statements are replaced by explicit surrogates and every report
carries its truncation parameters:

* ``limsup_n f_n``             -> max of ``f_n`` over ``n in [N0, N]``;
* ``limsup_{M-N->inf}`` means  -> max over windows in ``[0, N)`` of length >= W.

Verdicts are three-valued.  ``consistent`` needs the full sample budget and an
upper bracket below the threshold; ``inconsistent`` needs an exact witness
(a pair and a window); everything else is ``inconclusive``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .density import IndexSet, banach_upper_density
from .systems import (
    ExplicitPrefix, MetricSystem, PointGenerator, ShiftSystem, TentOrbit, TentStickPoint,
    TentStickSystem, first_difference,
)
from .words import FiniteWord, occurrence_array

CONSISTENT, INCONSISTENT, INCONCLUSIVE = "consistent", "inconsistent", "inconclusive"


class SamplerExhausted(RuntimeError):
    pass


class MalformedCover(ValueError):
    pass


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


def thread_count(threads: Optional[int] = None) -> int:
    if threads:
        return max(1, int(threads))
    return max(1, int(os.environ.get("MEANLAB_THREADS", "1")))


def parallel_map(fn: Callable, items: Sequence, threads: Optional[int] = None) -> list:
    """Order-preserving map; results do not depend on the worker count."""
    n = thread_count(threads)
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# -- profiles -----------------------------------------------------------------

@dataclass
class BirkhoffProfile:
    """Per-step distances ``d(T^i x, T^i y)`` for ``i < horizon`` and their means.

    ``steps`` are exact (or lower-bound) values in float64; ``unresolved``
    marks steps where the symbolic metric was cut off at ``resolution``: the
    true distance there lies in ``[0, slack]``.
    """

    horizon: int
    resolution: Optional[int]
    steps: np.ndarray
    unresolved: np.ndarray
    slack: Fraction
    mode: str
    diameter: float
    index: Optional[np.ndarray] = None   # symbolic: 1-based first-difference index, 0 if none
    num: Optional[np.ndarray] = None     # lattice: integer numerators over ``den``
    den: int = 1
    _cum: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def cumulative(self) -> np.ndarray:
        if self._cum is None:
            self._cum = np.concatenate(([0.0], np.cumsum(self.steps)))
        return self._cum

    @property
    def values(self) -> np.ndarray:
        """``f_n`` for ``n = 1..horizon`` (float view)."""
        return self.cumulative[1:] / np.arange(1, self.horizon + 1)

    @property
    def per_term_error(self) -> Fraction:
        return self.slack

    @property
    def cumulative_error_bound(self) -> Fraction:
        return self.slack * int(self.unresolved.sum())

    def exact_sum(self, a: int, b: int) -> Fraction:
        if self.mode == "exact-symbolic":
            seg = self.index[a:b]
            seg = seg[seg > 0]
            if seg.size == 0:
                return Fraction(0)
            counts = np.bincount(seg)
            L = math.lcm(*range(1, int(seg.max()) + 1))
            total = sum(int(c) * (L // i) for i, c in enumerate(counts) if c and i)
            return Fraction(total, L)
        if self.mode == "exact-lattice":
            seg = self.num[a:b]
            hi, lo = seg >> 30, seg & ((1 << 30) - 1)   # split so int64 sums cannot overflow
            return Fraction((int(hi.sum()) << 30) + int(lo.sum()), self.den)
        return Fraction(float(self.steps[a:b].sum()))

    def upper_sum(self, a: int, b: int) -> Fraction:
        return self.exact_sum(a, b) + self.slack * int(self.unresolved[a:b].sum())

    def mean(self, a: int, b: int, upper: bool = False) -> Fraction:
        s = self.upper_sum(a, b) if upper else self.exact_sum(a, b)
        return s / (b - a)

    def exact_value(self, n: int) -> Fraction:
        return self.mean(0, n)


def _symbolic_profile(a: np.ndarray, b: np.ndarray, N: int, K: int, identical: bool,
                      diameter) -> BirkhoffProfile:
    if a.size < N + K or b.size < N + K:
        raise ValueError("prepared windows shorter than horizon + resolution")
    idx = first_difference(a, b, N, K)
    steps = np.zeros(N)
    hit = idx > 0
    steps[hit] = 1.0 / idx[hit]
    unresolved = ~hit
    slack = Fraction(0) if identical else Fraction(1, K + 1)
    if identical:
        unresolved = np.zeros(N, dtype=bool)
    return BirkhoffProfile(N, K, steps, unresolved, slack, "exact-symbolic", float(diameter), index=idx)


def _tent_profile(a: TentOrbit, b: TentOrbit, N: int, diameter) -> BirkhoffProfile:
    none = np.zeros(N, dtype=bool)
    if a.branch == b.branch and a.mode == b.mode == "exact-lattice" and a.den == b.den:
        num = np.abs(a.values[:N] - b.values[:N])
        den = a.den * max(a.branch, 1)
        return BirkhoffProfile(N, None, num / den, none, Fraction(0), "exact-lattice",
                               float(diameter), num=num, den=den)
    pa = _embed(a, N)
    pb = _embed(b, N)
    steps = np.hypot(pa[0] - pb[0], pa[1] - pb[1])
    return BirkhoffProfile(N, None, steps, none, Fraction(0), "float", float(diameter))


def _embed(o: TentOrbit, N: int) -> tuple[np.ndarray, np.ndarray]:
    s = o.values[:N].astype(float) / o.den
    if o.branch == 0:
        return s, np.zeros(N)
    return np.full(N, -1.0 / o.branch), s / o.branch


def pair_profile(sys: MetricSystem, pa, pb, N: int, K: Optional[int], identical: bool = False) -> BirkhoffProfile:
    if isinstance(sys, ShiftSystem):
        return _symbolic_profile(pa, pb, N, K, identical, sys.diameter)
    if isinstance(sys, TentStickSystem):
        return _tent_profile(pa, pb, N, sys.diameter)
    raise TypeError(f"unsupported system {sys!r}")


def _prep_length(sys: MetricSystem, N: int, K: Optional[int]) -> int:
    return N + (K or 0) if isinstance(sys, ShiftSystem) else N


def birkhoff_profile(sys: MetricSystem, x, y, N: int, K: Optional[int] = None) -> BirkhoffProfile:
    """Profile ``f_n = (1/n) sum_{i<n} d(T^i x, T^i y)`` for ``n = 1..N``."""
    if isinstance(sys, ShiftSystem) and not K:
        raise ValueError("symbolic profiles need a resolution K")
    pa, pb = sys.prepare([x, y], _prep_length(sys, N, K))
    return pair_profile(sys, pa, pb, N, K, identical=x is y)


def _band_extreme(profile: BirkhoffProfile, N0: int, largest: bool, upper: bool) -> tuple[Fraction, int]:
    N = profile.horizon
    if not 1 <= N0 <= N:
        raise ValueError(f"tail start {N0} outside [1, {N}]")
    n = np.arange(N0, N + 1)
    cum = profile.cumulative[n]
    if upper:
        cum = cum + float(profile.slack) * np.cumsum(profile.unresolved)[n - 1]
    vals = cum / n
    target = vals.max() if largest else vals.min()
    tol = 1e-9 * max(1.0, abs(target))
    band = np.flatnonzero(np.abs(vals - target) <= tol)
    if band.size > 32:
        band = band[:16].tolist() + band[-16:].tolist()
    best, arg = None, None
    for b in band:
        nn = int(n[b])
        v = profile.mean(0, nn, upper=upper)
        if best is None or (v > best if largest else v < best):
            best, arg = v, nn
    return best, arg


def tail_limsup(profile: BirkhoffProfile, N0: int) -> Fraction:
    """Max of ``f_n`` over ``n in [N0, horizon]`` (exact)."""
    return _band_extreme(profile, N0, True, False)[0]


def tail_bracket(profile: BirkhoffProfile, N0: int) -> dict:
    """Tail max, tail min, and the max of the upper bracket (resolution slack added)."""
    hi, n_hi = _band_extreme(profile, N0, True, False)
    lo, n_lo = _band_extreme(profile, N0, False, False)
    up = hi if profile.slack == 0 else _band_extreme(profile, N0, True, True)[0]
    return {"tail_max": hi, "tail_max_at": n_hi, "tail_min": lo, "tail_min_at": n_lo, "tail_upper": up}


def _max_window_float(steps: np.ndarray, W: int) -> tuple[int, int]:
    N = steps.size
    if not 1 <= W <= N:
        raise ValueError(f"window floor {W} must lie in [1, {N}]")
    P = np.concatenate(([0.0], np.cumsum(steps)))
    t = np.arange(N + 1, dtype=float)
    lam, best = P[N] / N, (0, N)
    for _ in range(200):
        G = P - lam * t
        head = G[: N - W + 1]
        run = np.minimum.accumulate(head)
        is_new = np.empty(head.size, dtype=bool)
        is_new[0] = True
        is_new[1:] = head[1:] <= run[:-1]
        arg = np.maximum.accumulate(np.where(is_new, np.arange(head.size), 0))
        gain = G[W:] - run
        j = int(np.argmax(gain))
        if gain[j] <= 1e-13 * max(1.0, P[N]):
            break
        i, jj = int(arg[j]), j + W
        new = (P[jj] - P[i]) / (jj - i)
        if new <= lam:
            break
        lam, best = new, (i, jj - i)
    return best


@dataclass(frozen=True)
class BanachWindow:
    value: Fraction
    start: int
    length: int
    upper: Fraction


def banach_window(profile: BirkhoffProfile, W: int) -> BanachWindow:
    N = profile.horizon
    s, L = _max_window_float(profile.steps, W)
    value = profile.mean(s, s + L)
    full = profile.mean(0, N)
    if full > value:
        value, s, L = full, 0, N
    if profile.slack:
        up_steps = profile.steps + float(profile.slack) * profile.unresolved
        us, uL = _max_window_float(up_steps, W)
        upper = max(profile.mean(us, us + uL, upper=True), profile.mean(0, N, upper=True), value)
    else:
        upper = value
    return BanachWindow(value, s, L, upper)


def banach_profile(sys: MetricSystem, x, y, N: int, W: int, K: Optional[int] = None) -> Fraction:
    """Max window-mean distance over windows ``[M, M+L) in [0, N)`` with ``L >= W``."""
    return banach_window(birkhoff_profile(sys, x, y, N, K), W).value


def step_profile(steps: Sequence[float] | np.ndarray) -> BirkhoffProfile:
    """Wrap a synthetic per-step distance sequence as a profile."""
    steps = np.asarray(steps, dtype=float)
    N = steps.size
    num = None
    mode = "float"
    if np.all(np.isin(steps, (0.0, 1.0))):
        num, mode = steps.astype(np.int64), "exact-lattice"
    return BirkhoffProfile(N, None, steps, np.zeros(N, dtype=bool), Fraction(0), mode, 1.0, num=num, den=1)


# -- samplers -----------------------------------------------------------------

class Sampler:
    """Produces ``count`` labelled points in ``B(x, radius)``."""

    def sample(self, sys: MetricSystem, x, radius: Fraction, count: int, need: int) -> list[tuple[str, object]]:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


def agreement_length(radius: Fraction) -> int:
    """Prefix length ``m = ceil(1/radius)``; agreeing on it forces ``d < radius``."""
    return math.ceil(1 / Fraction(radius))


class OccurrenceSampler(Sampler):
    """Shifts ``sigma^j x`` at occurrences ``j`` of ``x``'s own prefix word."""

    def __init__(self, scan_length: Optional[int] = None):
        self.scan_length = scan_length

    def sample(self, sys, x: PointGenerator, radius, count, need):
        m = agreement_length(radius)
        pos = x.prefix_occurrences(m, count, self.scan_length)
        if len(pos) < count:
            raise SamplerExhausted(f"only {len(pos)} occurrences of the length-{m} prefix, {count} requested")
        head = x.window(0, m)
        out = []
        for j in pos:
            y = x.shift(j)
            if not np.array_equal(y.window(0, m), head):
                raise AssertionError(f"sampled shift {j} does not match the prefix")
            out.append((f"shift:{j}", y))
        return out

    def describe(self):
        return {"kind": "occurrence", "scan_length": self.scan_length}


class RandomTailSampler(Sampler):
    """Full-shift points agreeing with ``x`` on ``ceil(1/radius)`` symbols, random after."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def sample(self, sys, x, radius, count, need):
        m = agreement_length(radius)
        rng = np.random.default_rng(self.seed)
        head = x.window(0, m)
        out = [("center", x)]
        for s in range(count - 1):
            tail = rng.integers(0, sys.alphabet, size=max(need - m, 0), dtype=np.uint8)
            y = ExplicitPrefix(FiniteWord._wrap(np.concatenate((head, tail)), sys.alphabet))
            out.append((f"tail:{s}", y))
        return out

    def describe(self):
        return {"kind": "random-tail", "seed": self.seed}


PERTURBATION_DENOMINATOR = 2 * 999_999_937


class PerturbationSampler(Sampler):
    """Tent-stick points ``c + v/D`` on the same branch, ``|v/D| < radius``.

    Perturbations sit on a rational lattice so orbits can be iterated exactly.
    """

    def __init__(self, seed: int = 0, denominator: int = PERTURBATION_DENOMINATOR):
        self.seed = seed
        self.denominator = denominator

    def sample(self, sys, x: TentStickPoint, radius, count, need):
        rng = np.random.default_rng(self.seed)
        D = self.denominator
        r = int(Fraction(radius) * D)
        if r < 1:
            raise SamplerExhausted("radius below lattice spacing")
        top = 1 if x.branch == 0 else Fraction(1, x.branch)
        c = Fraction(x.coordinate)
        out = []
        tries = 0
        while len(out) < count:
            tries += 1
            if tries > 20 * count + 100:
                raise SamplerExhausted("could not place perturbations inside the branch")
            v = int(rng.integers(-r + 1, r))
            h = c + Fraction(v, D)
            if v == 0 or not 0 <= h <= top:
                continue
            out.append((f"perturb:{v}/{D}", TentStickPoint(x.branch, h)))
        return out

    def describe(self):
        return {"kind": "perturbation", "seed": self.seed, "denominator": self.denominator}


class IdentitySampler(Sampler):
    def sample(self, sys, x, radius, count, need):
        return [("center", x)] * count


# -- reports ------------------------------------------------------------------

def _num(v):
    if isinstance(v, Fraction):
        return float(v)
    return v


@dataclass
class DiagnosticReport:
    mode: str
    parameters: dict
    rows: list[dict]
    summary: dict
    verdict: str

    CSV_COLUMNS = ("delta", "epsilon", "tail_max", "tail_min", "banach_max", "verdict")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "parameters": self.parameters,
            "summary": self.summary,
            "verdict": self.verdict,
            "rows": self.rows,
        }

    def to_json(self, config: Optional[dict] = None) -> str:
        d = self.to_dict()
        if config is not None:
            d = {"config": config, **d}
        return json.dumps(d, indent=2, sort_keys=True, default=_json_default) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            w.writerow(["" if r.get(c) is None else _num(r.get(c)) for c in self.CSV_COLUMNS])
        return buf.getvalue()


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o) if o.denominator < 10 ** 12 else float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not serializable: {type(o)}")


def _fmt(v: Fraction) -> dict:
    return {"value": float(v), "exact": str(v) if v.denominator < 10 ** 12 else None}


# -- scans --------------------------------------------------------------------

def _pair_stats(sys, prepared, i, j, N, N0, K, W, identical=False) -> dict:
    prof = pair_profile(sys, prepared[i], prepared[j], N, K, identical)
    out = tail_bracket(prof, N0)
    out["mode"] = prof.mode
    if W is not None:
        bw = banach_window(prof, W)
        out.update(banach_max=bw.value, banach_upper=bw.upper, banach_window=(bw.start, bw.length))
    return out


def _prepare_samples(sys, x, radius, N, K, sampler, samples, include_center):
    """Sample, optionally prepend the centre, and prepare all orbits in one batch
    (tent points then share one lattice denominator).  Returns the centre index."""
    need = _prep_length(sys, N, K)
    pts = sampler.sample(sys, x, radius, samples, need)
    if len(pts) < samples:
        raise SamplerExhausted(f"{len(pts)} samples produced, {samples} requested")
    labels = [lab for lab, _ in pts]
    points = [p for _, p in pts]
    centre = next((i for i, (lab, p) in enumerate(pts) if p is x or lab in ("center", "shift:0")), None)
    if include_center and centre is None:
        labels.insert(0, "center")
        points.insert(0, x)
        centre = 0
    return labels, points, sys.prepare(points, need), centre


def _scan_params(**kw) -> dict:
    return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in kw.items()}


def _equi_scan(sys, x, epsilon, delta_grid, N, N0, K, sampler, samples, W, statistic, threads, mode):
    epsilon = as_fraction(epsilon)
    rows, per_delta = [], []
    for delta in [as_fraction(d) for d in delta_grid]:
        labels, points, prepared, _ = _prepare_samples(sys, x, delta, N, K, sampler, samples, True)
        n = len(points)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        stats = parallel_map(
            lambda ij: _pair_stats(sys, prepared, ij[0], ij[1], N, N0, K, W,
                                   identical=points[ij[0]] is points[ij[1]]),
            pairs, threads)
        key, key_up = ("tail_max", "tail_upper") if statistic == "tail" else ("banach_max", "banach_upper")
        best = max(stats, key=lambda s: s[key]) if stats else None
        best_up = max((s[key_up] for s in stats), default=Fraction(0))
        witness = next(((pairs[k], s) for k, s in enumerate(stats) if s[key] >= epsilon), None)
        for (i, j), s in zip(pairs, stats):
            v = CONSISTENT if s[key_up] < epsilon else (INCONSISTENT if s[key] >= epsilon else INCONCLUSIVE)
            rows.append({
                "delta": delta, "epsilon": epsilon, "pair": [labels[i], labels[j]],
                "tail_max": s["tail_max"], "tail_min": s["tail_min"], "tail_upper": s["tail_upper"],
                "banach_max": s.get("banach_max"), "banach_window": s.get("banach_window"),
                "arithmetic": s["mode"], "verdict": v,
            })
        per_delta.append({
            "delta": delta,
            "samples": n,
            "sample_labels": labels,
            "pairs": len(pairs),
            "max": _fmt(best[key]) if best else None,
            "max_upper": _fmt(best_up),
            "below_epsilon": bool(stats) and best_up < epsilon,
            "witness": None if witness is None else {"pair": [labels[witness[0][0]], labels[witness[0][1]]],
                                                     "value": _fmt(witness[1][key])},
        })
    if any(d["below_epsilon"] for d in per_delta):
        verdict = CONSISTENT
    elif per_delta and all(d["witness"] for d in per_delta):
        verdict = INCONSISTENT
    else:
        verdict = INCONCLUSIVE
    params = _scan_params(epsilon=epsilon, delta_grid=[str(as_fraction(d)) for d in delta_grid], horizon=N,
                          tail_start=N0, resolution=K, window_floor=W, samples=samples,
                          statistic=statistic, sampler=sampler.describe(), system=sys.describe())
    max_all = max((d["max"]["value"] for d in per_delta if d["max"]), default=0.0)
    summary = {"per_delta": per_delta, "max_value": max_all}
    return DiagnosticReport(mode, params, rows, summary, verdict)


def mean_equi_scan(sys, x, epsilon, delta_grid, N, N0, K, sampler: Sampler, samples: int = 50,
                   W: Optional[int] = None, threads: Optional[int] = None) -> DiagnosticReport:
    """Is ``x`` in ``E_eps``?  For each ``delta``: max over sampled pairs in
    ``B(x, delta)`` of the tail max of their Birkhoff profile."""
    return _equi_scan(sys, x, epsilon, delta_grid, N, N0, K, sampler, samples, W, "tail", threads, "mean-equi")


def _sens_scan(sys, x, delta, eps_grid, N, N0, K, sampler, samples, W, statistic, threads, mode):
    delta = as_fraction(delta)
    rows, per_eps = [], []
    for eps in [as_fraction(e) for e in eps_grid]:
        labels, points, prepared, c = _prepare_samples(sys, x, eps, N, K, sampler, samples, True)
        idx = [k for k in range(len(points)) if k != c]
        stats = parallel_map(lambda k: _pair_stats(sys, prepared, c, k, N, N0, K, W), idx, threads)
        key = "tail_max" if statistic == "tail" else "banach_max"
        found = [(labels[k], s) for k, s in zip(idx, stats) if s[key] > delta]
        for k, s in zip(idx, stats):
            rows.append({
                "delta": delta, "epsilon": eps, "pair": ["center", labels[k]],
                "tail_max": s["tail_max"], "tail_min": s["tail_min"], "tail_upper": s["tail_upper"],
                "banach_max": s.get("banach_max"), "banach_window": s.get("banach_window"),
                "arithmetic": s["mode"], "verdict": CONSISTENT if s[key] > delta else INCONCLUSIVE,
            })
        best = max((s[key] for s in stats), default=Fraction(0))
        per_eps.append({
            "epsilon": eps, "samples": len(idx), "max": _fmt(best),
            "witnesses": len(found),
            "first_witness": None if not found else {"point": found[0][0], "value": _fmt(found[0][1][key])},
        })
    verdict = CONSISTENT if per_eps and all(e["witnesses"] for e in per_eps) else INCONCLUSIVE
    params = _scan_params(delta=delta, epsilon_grid=[str(as_fraction(e)) for e in eps_grid], horizon=N,
                          tail_start=N0, resolution=K, window_floor=W, samples=samples,
                          statistic=statistic, sampler=sampler.describe(), system=sys.describe())
    summary = {"per_epsilon": per_eps, "max_value": max((e["max"]["value"] for e in per_eps), default=0.0)}
    return DiagnosticReport(mode, params, rows, summary, verdict)


def mean_sens_scan(sys, x, delta, eps_grid, N, N0, K, sampler: Sampler, samples: int = 100,
                   W: Optional[int] = None, threads: Optional[int] = None) -> DiagnosticReport:
    """Mean sensitivity at ``x``: for each ``eps`` look for ``y in B(x, eps)``
    whose tail max exceeds ``delta``."""
    return _sens_scan(sys, x, delta, eps_grid, N, N0, K, sampler, samples, W, "tail", threads, "mean-sens")


def banach_mean_scan(sys, x, mode: str, threshold, grid, N, W, K, sampler: Sampler, samples: int = 50,
                     N0: int = 1, threads: Optional[int] = None) -> DiagnosticReport:
    """Banach variants: ``mode='equi'`` takes ``threshold = eps`` and a delta grid,
    ``mode='sens'`` takes ``threshold = delta`` and an eps grid."""
    if mode == "equi":
        return _equi_scan(sys, x, threshold, grid, N, N0, K, sampler, samples, W, "banach", threads,
                          "banach-mean-equi")
    if mode == "sens":
        return _sens_scan(sys, x, threshold, grid, N, N0, K, sampler, samples, W, "banach", threads,
                          "banach-mean-sens")
    raise ValueError("mode must be 'equi' or 'sens'")


def proximality_scan(sys, x, y, N, K, eps_grid=(Fraction(1, 10),), W: int = 100,
                     threshold=Fraction(1, 20), mode: str = "proximal") -> DiagnosticReport:
    """Closest approach over ``[0, N)`` and, per ``eps``, the Banach upper density
    of the times with ``d >= eps``."""
    prof = birkhoff_profile(sys, x, y, N, K)
    up = prof.steps + float(prof.slack) * prof.unresolved
    t_min = int(np.argmin(up))
    min_upper = prof.mean(t_min, t_min + 1, upper=True)
    min_lower = Fraction(float(prof.steps.min())) if prof.mode == "float" else min(
        prof.mean(t, t + 1) for t in np.flatnonzero(prof.steps == prof.steps.min())[:1].tolist())
    rows, dens = [], []
    for eps in [as_fraction(e) for e in eps_grid]:
        far = prof.steps >= float(eps)
        est = banach_upper_density(IndexSet(far, "far-times"), N, min(W, N))
        dens.append({"epsilon": eps, "banach_upper_density": est.value, "window": est.witness})
        rows.append({"delta": None, "epsilon": eps, "tail_max": None, "tail_min": None,
                     "banach_max": est.value,
                     "verdict": CONSISTENT if est.value < threshold else INCONSISTENT})
    grid = [as_fraction(e) for e in eps_grid]
    if all(min_upper < e for e in grid):
        prox = CONSISTENT
    elif min_lower >= min(grid):
        prox = INCONSISTENT
    else:
        prox = INCONCLUSIVE
    bprox = CONSISTENT if all(d["banach_upper_density"] < threshold for d in dens) else INCONSISTENT
    params = _scan_params(horizon=N, resolution=K, window_floor=W, epsilon_grid=[str(e) for e in grid],
                          density_threshold=as_fraction(threshold), system=sys.describe())
    summary = {"min_distance": _fmt(min_lower), "min_distance_upper": _fmt(min_upper), "min_at": t_min,
               "far_densities": dens, "proximal": prox, "banach_proximal": bprox,
               "arithmetic": prof.mode}
    verdict = prox if mode == "proximal" else bprox
    return DiagnosticReport(mode, params, rows, summary, verdict)


def return_time_set(sys, x: PointGenerator, w, N: int) -> IndexSet:
    """``{n < N : x[n : n+|w|] == w}``."""
    pat = w.symbols if isinstance(w, FiniteWord) else np.asarray(w, dtype=np.uint8)
    text = x.window(0, N + pat.size - 1)
    occ = occurrence_array(pat, text)
    mask = np.zeros(N, dtype=bool)
    mask[occ] = True
    return IndexSet(mask, "return-times")


# -- cyclic covers ------------------------------------------------------------

@dataclass(frozen=True)
class CoverCell:
    diameter: Fraction
    verified_cyclic: bool


@dataclass(frozen=True)
class CoverBound:
    accepted: bool
    bound: Optional[Fraction]
    large_cells: int
    cells: int
    verified: bool
    note: str


def cover_bme_bound(cover: Sequence[CoverCell | tuple], epsilon, diameter_X) -> CoverBound:
    """If fewer than ``eps * n`` cells have diameter ``>= eps``, window-mean
    distances of points sharing a cell stay below ``(1 + 2 diam X) eps``."""
    cells = [c if isinstance(c, CoverCell) else CoverCell(as_fraction(c[0]), bool(c[1])) for c in cover]
    if not cells:
        raise MalformedCover("empty cover")
    eps = as_fraction(epsilon)
    diam = as_fraction(diameter_X)
    n = len(cells)
    large = sum(1 for c in cells if c.diameter >= eps)
    verified = all(c.verified_cyclic for c in cells)
    note = "cyclic condition verified" if verified else "cyclic condition taken on trust"
    if large < eps * n:
        return CoverBound(True, (1 + 2 * diam) * eps, large, n, verified, note)
    return CoverBound(False, None, large, n, verified, f"{large} cells with diameter >= eps, need < {eps * n}")


def rotation_cover(p: int, q: int, half_width: Optional[Fraction] = None) -> list[CoverCell]:
    """Arcs ``U_i`` centred at ``i p / q`` for rotation by ``p/q`` on ``R/Z``, with the
    cyclic inclusion ``R(U_i) <= U_{i+1 mod q}`` checked on arc endpoints."""
    if math.gcd(p, q) != 1:
        raise MalformedCover("p/q must be in lowest terms for a single cycle")
    h = half_width if half_width is not None else Fraction(3, 4 * q)
    if not Fraction(1, 2 * q) < h < Fraction(1, 2):
        raise MalformedCover("arcs must overlap neighbours and stay shorter than half the circle")
    alpha = Fraction(p, q)
    centres = [(i * alpha) % 1 for i in range(q)]
    # circle covered: sorted centres are 1/q apart and each arc reaches past the midpoint
    srt = sorted(centres)
    covers = all((b - a) < 2 * h for a, b in zip(srt, srt[1:] + [srt[0] + 1]))
    cells = []
    for i, c in enumerate(centres):
        lo, hi = (c - h + alpha) % 1, (c + h + alpha) % 1
        nc = centres[(i + 1) % q]
        ok = covers and lo == (nc - h) % 1 and hi == (nc + h) % 1
        cells.append(CoverCell(min(2 * h, Fraction(1, 2)), ok))
    return cells


# -- per-stick sensitivity constants -------------------------------------------

def stick_constants(branches: Sequence[int], N: int, N0: int, radius, samples: int = 100,
                    relative: Fraction = Fraction(3, 10), seed: int = 0,
                    system: Optional[TentStickSystem] = None) -> dict[int, Fraction]:
    """Largest tail mean distance found from ``samples`` perturbations of the point
    at relative height ``relative`` on each branch (0 = baseline)."""
    sys = system or TentStickSystem(max(max(branches), 1))
    out = {}
    for k in branches:
        top = Fraction(1) if k == 0 else Fraction(1, k)
        x = TentStickPoint(k, relative * top)
        rep = mean_sens_scan(sys, x, Fraction(0), [as_fraction(radius)], N, N0, None,
                             PerturbationSampler(seed), samples)
        out[k] = max(r["tail_max"] for r in rep.rows)
    return out
