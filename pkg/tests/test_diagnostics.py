from fractions import Fraction

import numpy as np
import pytest

from meanlab.construction import default_base, synthesize_schedule, theorem4_point
from meanlab.density import builtin_predicate, syndetic_gap
from meanlab.diagnostics import (
    CONSISTENT, INCONCLUSIVE, INCONSISTENT, CoverCell, IdentitySampler, MalformedCover,
    OccurrenceSampler, PerturbationSampler, RandomTailSampler, SamplerExhausted, banach_mean_scan,
    banach_profile, banach_window, birkhoff_profile, cover_bme_bound, mean_equi_scan, mean_sens_scan,
    parallel_map, proximality_scan, return_time_set, rotation_cover, step_profile, tail_bracket,
    tail_limsup,
)
from meanlab.systems import (
    EventuallyPeriodic, ExplicitPrefix, ShiftSystem, Sturmian, TentStickPoint, TentStickSystem, thue_morse,
)
from meanlab.words import FiniteWord

import oracles

S = ShiftSystem()
ZERO = EventuallyPeriodic("", "0")


def test_single_differing_step():
    p = birkhoff_profile(S, ZERO, EventuallyPeriodic("1", "0"), 10 ** 4, 50)
    for n in (1, 2, 7, 10 ** 4):
        assert p.exact_value(n) == Fraction(1, n)
    assert tail_limsup(p, 100) == Fraction(1, 100)
    assert np.allclose(p.values, 1 / np.arange(1, 10 ** 4 + 1))


def test_equal_points_profile_is_zero():
    g = thue_morse()
    p = birkhoff_profile(S, g, g, 1000, 30)
    assert tail_bracket(p, 1)["tail_upper"] == 0
    assert banach_profile(S, g, g, 1000, 10, 30) == 0


def test_alternating_pair_profile_is_one():
    p = birkhoff_profile(S, EventuallyPeriodic("", "01"), EventuallyPeriodic("", "10"), 1000, 10)
    br = tail_bracket(p, 7)
    assert br["tail_max"] == br["tail_min"] == 1


def test_profile_matches_oracle():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2, 400).astype(np.uint8)
    b = a.copy()
    b[rng.integers(0, 400, 25)] ^= 1
    N, K = 300, 60
    p = birkhoff_profile(S, ExplicitPrefix(FiniteWord(a)), ExplicitPrefix(FiniteWord(b)), N, K)
    sa, sb = "".join(map(str, a)), "".join(map(str, b))
    total = Fraction(0)
    for i in range(N):
        total += oracles.shift_distance(sa[i:i + K], sb[i:i + K])
        assert p.exact_value(i + 1) == total / (i + 1)
    unresolved = sum(oracles.shift_distance(sa[i:i + K], sb[i:i + K]) == 0 for i in range(N))
    assert p.cumulative_error_bound == Fraction(unresolved, K + 1)


def test_profile_needs_resolution():
    short = ExplicitPrefix(FiniteWord("0101"))
    with pytest.raises(Exception):
        birkhoff_profile(S, short, short, 10, 5)
    with pytest.raises(ValueError):
        birkhoff_profile(S, ZERO, ZERO, 10, None)


def test_tail_limsup_on_constant_and_monotone_profiles():
    assert tail_limsup(step_profile([0.25] * 100), 10) == Fraction(1, 4)
    with pytest.raises(ValueError):
        tail_limsup(step_profile([1.0] * 10), 11)


def test_banach_vs_cesaro_separation():
    N = 10 ** 6
    steps = builtin_predicate("bursts")(np.arange(N)).astype(float)
    prof = step_profile(steps)
    bw = banach_window(prof, 19)
    assert bw.value == 1 and bw.length >= 19
    assert tail_limsup(prof, N // 2) <= Fraction(1, 100)


def test_banach_window_matches_oracle():
    rng = np.random.default_rng(5)
    for _ in range(10):
        vals = rng.integers(0, 2, 60).astype(float)
        W = int(rng.integers(1, 60))
        got = banach_window(step_profile(vals), W).value
        assert got == oracles.max_window_mean([Fraction(int(v)) for v in vals], W)


def test_lattice_profile_exact_sum_no_overflow():
    sys_ = TentStickSystem()
    a = TentStickPoint(0, Fraction(3, 10))
    b = TentStickPoint(0, Fraction(3, 10) + Fraction(1, 2 * 999_999_937))
    p = birkhoff_profile(sys_, a, b, 5000)
    assert p.mode == "exact-lattice"
    ra = oracles.tent_stick_orbit(0, a.coordinate, 200)
    rb = oracles.tent_stick_orbit(0, b.coordinate, 200)
    assert p.exact_value(200) == sum(abs(x - y) for (x, _), (y, _) in zip(ra, rb)) / 200


def test_cross_branch_profile_is_float_tagged():
    sys_ = TentStickSystem()
    p = birkhoff_profile(sys_, TentStickPoint(0, Fraction(3, 10)), TentStickPoint(2, Fraction(1, 10)), 100)
    assert p.mode == "float"
    assert 0 <= p.values.min() and p.values.max() <= sys_.diameter


def test_mean_equi_on_constant_system():
    rep = mean_equi_scan(S, ZERO, Fraction(1, 5), [Fraction(1, 10)], 1000, 100, 50, OccurrenceSampler(), 20)
    assert rep.verdict == CONSISTENT
    assert rep.summary["per_delta"][0]["samples"] == 20


def test_mean_equi_full_shift_random_tails_separate():
    rep = mean_equi_scan(S, ZERO, Fraction(1, 5), [Fraction(1, 10), Fraction(1, 50)], 2000, 200, 50,
                         RandomTailSampler(7), 10)
    assert rep.verdict == INCONSISTENT
    w = rep.summary["per_delta"][0]["witness"]
    assert w is not None and w["value"]["value"] >= 0.2


def test_mean_equi_theorem4_greedy_level2():
    s = synthesize_schedule(default_base(), 7)   # 2^6 canonical copies of A_2
    x = theorem4_point(s)
    rep = mean_equi_scan(S, x, Fraction(1, 5), [Fraction(1, 19)], 10 ** 4, 10 ** 3, 200, OccurrenceSampler(), 64)
    assert rep.summary["per_delta"][0]["samples"] == 64
    assert rep.verdict == CONSISTENT and rep.summary["max_value"] < 0.2


def test_sampler_exhausted():
    with pytest.raises(SamplerExhausted):
        mean_equi_scan(S, EventuallyPeriodic("1", "0"), Fraction(1, 5), [Fraction(1, 10)], 100, 10, 20,
                       OccurrenceSampler(), 5)


def test_mean_sens_tent_baseline_witness():
    rep = mean_sens_scan(TentStickSystem(), TentStickPoint(0, Fraction(3, 10)), Fraction(1, 10),
                         [Fraction(1, 1000)], 10 ** 4, 10 ** 3, None, PerturbationSampler(0), 100)
    assert rep.verdict == CONSISTENT
    assert rep.summary["per_epsilon"][0]["witnesses"] >= 1
    assert all(r["arithmetic"] == "exact-lattice" for r in rep.rows)


def test_mean_sens_stick_one():
    rep = mean_sens_scan(TentStickSystem(), TentStickPoint(1, Fraction(3, 10)), Fraction(1, 20),
                         [Fraction(1, 1000)], 5000, 500, None, PerturbationSampler(1), 30)
    assert rep.verdict == CONSISTENT


def test_mean_sens_degenerate_sampler_is_inconclusive():
    rep = mean_sens_scan(S, thue_morse(), Fraction(1, 10), [Fraction(1, 10)], 500, 50, 20, IdentitySampler(), 5)
    assert rep.verdict == INCONCLUSIVE


def test_banach_equi_sturmian():
    g = Sturmian("golden")
    rep = banach_mean_scan(S, g, "equi", Fraction(3, 10), [Fraction(1, 20)], 10 ** 5, 10 ** 3, 60,
                           OccurrenceSampler(), 8)
    assert rep.verdict == CONSISTENT


def test_banach_exceeds_cesaro_on_theorem4_pair():
    s = synthesize_schedule(default_base(), 6)
    x = theorem4_point(s)
    y = x.shift(s.block_length(3))          # lands on the 0^{k_3} stretch
    prof = birkhoff_profile(S, x, y, 10 ** 5, 100)
    ces = prof.mean(0, 10 ** 5)
    ban = banach_window(prof, 1000).value
    assert ban > ces


def test_banach_dominates_cesaro_and_degenerate_pair():
    rep = banach_mean_scan(S, ZERO, "equi", Fraction(1, 10), [Fraction(1, 10)], 500, 50, 10,
                           OccurrenceSampler(), 4)
    assert rep.verdict == CONSISTENT and rep.summary["max_value"] == 0


def test_proximality():
    same = proximality_scan(S, ZERO, ZERO, 500, 20)
    assert same.summary["min_distance"]["value"] == 0 and same.verdict == CONSISTENT
    assert all(d["banach_upper_density"] == 0 for d in same.summary["far_densities"])
    far = proximality_scan(S, EventuallyPeriodic("", "01"), EventuallyPeriodic("", "10"), 500, 20)
    assert far.summary["min_distance"]["value"] == 1 and far.verdict == INCONSISTENT
    x = theorem4_point(synthesize_schedule(default_base(), 5))
    near = proximality_scan(S, ZERO, x, 5000, 100)
    assert near.verdict == CONSISTENT


def test_return_times():
    alt = EventuallyPeriodic("", "01")
    assert return_time_set(S, alt, FiniteWord("01"), 100).elements().tolist() == list(range(0, 100, 2))
    assert len(return_time_set(S, alt, FiniteWord("11"), 100)) == 0
    tm = thue_morse()
    R = return_time_set(S, tm, FiniteWord(tm.window(0, 4)), 10 ** 4)
    gap = syndetic_gap(R, 10 ** 4)
    assert len(R) > 0 and gap.bounded and gap.value <= 16


def test_cover_bound():
    small = [CoverCell(Fraction(1, 200), True)] * 100
    b = cover_bme_bound(small, Fraction(1, 10), Fraction(1, 2))
    assert b.accepted and b.bound == Fraction(2, 10)
    big = [CoverCell(Fraction(1, 2), False)] * 10 + [CoverCell(Fraction(0), False)] * 90
    r = cover_bme_bound(big, Fraction(1, 10), Fraction(1, 2))
    assert not r.accepted and r.large_cells == 10 and not r.verified
    with pytest.raises(MalformedCover):
        cover_bme_bound([], Fraction(1, 10), 1)


@pytest.mark.parametrize("p,q", [(1, 5), (3, 10), (7, 20)])
def test_rotation_cover(p, q):
    cells = rotation_cover(p, q)
    assert all(c.verified_cyclic for c in cells)
    b = cover_bme_bound(cells, Fraction(2, q), Fraction(1, 2))
    assert b.accepted and b.verified and b.bound == Fraction(4, q)
    with pytest.raises(MalformedCover):
        rotation_cover(2, 4)


def test_parallel_map_is_order_preserving():
    assert parallel_map(lambda v: v * v, list(range(50)), threads=4) == [v * v for v in range(50)]


def test_reports_are_deterministic_across_threads():
    kw = dict(sys=TentStickSystem(), x=TentStickPoint(0, Fraction(3, 10)), delta=Fraction(1, 10),
              eps_grid=[Fraction(1, 1000)], N=2000, N0=200, K=None, sampler=PerturbationSampler(3), samples=12)
    a = mean_sens_scan(**kw, threads=1)
    b = mean_sens_scan(**kw, threads=4)
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "delta,epsilon,tail_max,tail_min,banach_max,verdict"
