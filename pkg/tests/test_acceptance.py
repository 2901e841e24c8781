"""Acceptance criteria 1-9.

Each test prints one ``criterion N: PASS|FAIL - detail`` line (visible with or
without ``-s``) and then asserts the criterion, so a criterion that does not
hold shows up red rather than being papered over.
"""
import json
import math
import time
from fractions import Fraction

import pytest

import test_invariants
from meanlab import cli
from meanlab.construction import (
    Schedule, check_claim1, check_claim2, default_base, first_absent_level, gap_thresholds,
    proof_level, synthesize_schedule, theorem4_point, validate_schedule,
)
from meanlab.density import IndexSet, banach_upper_density, builtin_predicate, upper_density
from meanlab.diagnostics import (
    CONSISTENT, OccurrenceSampler, PerturbationSampler, mean_equi_scan, mean_sens_scan, stick_constants,
)
from meanlab.entropy import DEFAULT_THRESHOLD, complexity_curve, entropy_report
from meanlab.systems import ShiftSystem, Sturmian, TentStickPoint, TentStickSystem, thue_morse
from meanlab.words import FiniteWord

import oracles


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def greedy6():
    return synthesize_schedule(default_base(), 6)


def test_criterion_1_claim1_exhaustive(verdict, greedy6):
    t = time.perf_counter()
    reports = [check_claim1(greedy6, n, m) for n in range(2, 7) for m in range(n, 7)]
    dt = time.perf_counter() - t
    bad = sum(len(r.violations) for r in reports)
    checked = sum(r.checked for r in reports)
    verdict(1, bad == 0 and dt < 60,
            f"{len(reports)} (n,m) pairs, {checked} prefixes, {bad} violations, {dt:.1f}s")


def test_criterion_2_claim2_exhaustive(verdict, greedy6):
    n = first_absent_level(greedy6)
    L = greedy6.block_length(5)
    t = time.perf_counter()
    rep = check_claim2(greedy6, n, theorem4_point(greedy6), L)
    dt = time.perf_counter() - t
    verdict(2, n == 2 and rep.checked > 0 and rep.ok and dt < 120,
            f"n={n}, L=|A_5|={L}, {rep.checked} (i,j) pairs, {len(rep.violations)} violations, {dt:.1f}s")


def test_criterion_3_schedule_validator(verdict, greedy6):
    gaps = list(greedy6.gaps)
    ok = gaps[:3] == [7, 58, 469] and validate_schedule(greedy6).ok
    ok &= oracles.schedule_failures(gaps) == set() and gaps[:4] == oracles.greedy_gaps(4)
    flips = []
    for m in range(1, 7):
        th = gap_thresholds(greedy6.lengths, gaps[:m - 1], m)
        binding = {name for name, v in th.items() if v == gaps[m - 1]}
        g = gaps.copy()
        g[m - 1] -= 1
        got = {(c.constraint, c.p, c.q) for c in validate_schedule(Schedule(default_base(), tuple(g))).failures}
        at_m = {c for c, _, q in got if q == m}
        # lowering k_m shrinks every later |A_q|; greedy later gaps tight for the
        # "decrease" family then fail it as well (the oracle agrees)
        later_ok = all(c == "decrease" for c, _, q in got if q > m)
        ok &= got == oracles.schedule_failures(g) and at_m == binding and later_ok
        flips.append(f"k_{m}:{'/'.join(sorted(binding))}")
    verdict(3, ok, f"gaps {gaps[:3]}..., valid through level 6, boundary flips {', '.join(flips)}")


def test_criterion_4_density_separation(verdict):
    N = 10 ** 6
    t = time.perf_counter()
    F = IndexSet.from_predicate(builtin_predicate("bursts"), N, "bursts")
    up = upper_density(F, N)
    ban = banach_upper_density(F, N, 19)
    dt = time.perf_counter() - t
    verdict(4, up.value <= Fraction(1, 100) and ban.value == 1 and dt < 10,
            f"upper={up.value} ({float(up.value):.2e}), banach(W=19)={ban.value}, {dt:.2f}s")


def test_criterion_5_theorem4_mean_equicontinuity(verdict):
    eps = Fraction(1, 5)
    s = synthesize_schedule(default_base(), 8, decay=Fraction(1, 200), budget=10 ** 200)
    x = theorem4_point(s)
    n = proof_level(s, eps)
    delta = Fraction(1, s.block_length(n))
    rep = mean_equi_scan(ShiftSystem(), x, eps, [delta], 10 ** 4, 10 ** 3, 200, OccurrenceSampler(), 50)
    samples = rep.summary["per_delta"][0]["samples"]
    mx = rep.summary["max_value"]
    verdict(5, rep.verdict == CONSISTENT and samples >= 50 and mx < eps,
            f"proof level n={n}, delta=1/{s.block_length(n)}, {samples} pairs, "
            f"max tail={float(mx):.4f}, verdict {rep.verdict}")


def test_criterion_6_tent_sensitivity(verdict):
    rep = mean_sens_scan(TentStickSystem(), TentStickPoint(0, Fraction(3, 10)), Fraction(1, 10),
                         [Fraction(1, 1000)], 10 ** 4, 10 ** 3, None, PerturbationSampler(0), 100)
    best = max(r["tail_max"] for r in rep.rows)
    witnesses = rep.summary["per_epsilon"][0]["witnesses"]
    c = stick_constants([1, 5, 25], 10 ** 4, 10 ** 3, Fraction(1, 1000), samples=100)
    positive = all(v > 0 for v in c.values())
    decreasing = c[1] > c[5] > c[25]
    scaled = all(Fraction(1, 3) <= (c[k] / c[1]) / Fraction(1, k) <= 3 for k in (5, 25))
    detail = (f"{witnesses} witnesses > 0.1 (best {float(best):.3f}); sticks "
              + ", ".join(f"c_{k}={float(v):.4f}" for k, v in c.items()))
    verdict(6, witnesses >= 1 and best > Fraction(1, 10) and positive and decreasing and scaled, detail)


def test_criterion_7_entropy(verdict):
    full = complexity_curve(FiniteWord("0001011100"), 10, 3)
    a = full.counts == [2, 4, 8] and all(full.h_est(n) == math.log(2) for n in (1, 2, 3))
    st = complexity_curve(Sturmian("golden"), 10 ** 4, 20)
    b = st.counts == [n + 1 for n in range(1, 21)]
    s = synthesize_schedule(default_base(), 7, decay=Fraction(1, 200), budget=10 ** 80)
    x = theorem4_point(s)
    c_x = entropy_report(complexity_curve(x, 10 ** 6, 24), DEFAULT_THRESHOLD)
    c_tm = entropy_report(complexity_curve(thue_morse(), 10 ** 6, 24), DEFAULT_THRESHOLD)
    c = c_x["zero_entropy_consistent"] and c_tm["zero_entropy_consistent"]
    # h_est(n) = log p(n) / n >= ln 2 / n for any non-constant sequence, so at
    # n = 24 it cannot drop below ln2/24 ~ 0.029; the 0.02 threshold is out of reach
    verdict(7, a and b and c,
            f"7a full shift ln2 exact: {a}; 7b Sturmian p(n)=n+1: {b}; "
            f"7c h_est(24) theorem-4={c_x['h_est']:.4f} (p={c_x['p_n_max']}), "
            f"thue-morse={c_tm['h_est']:.4f} (p={c_tm['p_n_max']}), threshold {DEFAULT_THRESHOLD}, "
            f"floor ln2/24={math.log(2) / 24:.4f}: {c}")


def test_criterion_8_invariant_suites(verdict):
    suites = [name for name in dir(test_invariants) if name.startswith("test_")]
    failed = []
    for name in suites:
        try:
            getattr(test_invariants, name)()
        except Exception as e:  # a hypothesis failure re-raises the falsifying example
            failed.append(f"{name}: {type(e).__name__}")
    verdict(8, not failed, f"{len(suites)} randomized suites, failures: {failed or 'none'}")


def test_criterion_9_reproducibility(verdict, tmp_path):
    cfg = {"command": "diagnose", "mode": "mean-sens", "system": "tent-stick", "delta": "1/10",
           "epsilon": "1/1000", "horizon": 3000, "samples": 20, "seed": 11}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    bodies = []
    for _ in range(2):
        out = tmp_path / "r.json"
        assert cli.main(["diagnose", "--config", str(tmp_path / "c.json"), "--out", str(out),
                         "--csv", str(tmp_path / "r.csv")]) == 0
        bodies.append((out.read_bytes(), (tmp_path / "r.csv").read_bytes()))
    same = bodies[0] == bodies[1]
    verdict(9, same, f"two runs, JSON {len(bodies[0][0])} bytes, CSV {len(bodies[0][1])} bytes, identical: {same}")
