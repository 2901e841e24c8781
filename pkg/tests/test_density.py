import random
from fractions import Fraction

import numpy as np
import pytest

from meanlab.density import (
    UNBOUNDED, HorizonError, IndexSet, banach_lower_density, banach_upper_density, builtin_predicate,
    density_report, ip_witness, is_ip_witness, load_index_set, lower_density, max_window_ratio,
    save_index_set, subset_sums, syndetic_gap, upper_density,
)

import oracles


def predicate_set(name, N):
    return IndexSet.from_predicate(builtin_predicate(name), N, name)


def test_even_numbers():
    F = predicate_set("even", 1000)
    # back half n in [500, 1000]: ceil(n/2)/n peaks at n = 501
    assert upper_density(F, 1000).value == Fraction(251, 501)
    assert lower_density(F, 1000).value == Fraction(1, 2)
    # odd-length window starting on an even number
    assert banach_upper_density(F, 1000, 10).value == Fraction(6, 11)
    assert banach_lower_density(F, 1000, 10).value == Fraction(5, 11)
    assert syndetic_gap(F, 1000).value == 2


def test_empty_and_full():
    E = predicate_set("empty", 100)
    A = predicate_set("all", 100)
    assert upper_density(E, 100).value == 0 == banach_upper_density(E, 100, 5).value
    assert lower_density(A, 100).value == 1 == banach_lower_density(A, 100, 5).value
    assert syndetic_gap(E, 100).value == UNBOUNDED


def test_squares_are_sparse():
    F = predicate_set("squares", 10 ** 4)
    assert set(F.elements(50).tolist()) == {0, 1, 4, 9, 16, 25, 36, 49}
    assert upper_density(F, 10 ** 4).value < Fraction(1, 50)
    gap = syndetic_gap(F, 10 ** 4)
    # trailing stretch 9801 -> 9999 beats the last interior gap 99^2 - 98^2 = 197
    assert gap.value == 198 and gap.unbounded_suspect


def test_bursts_elements():
    F = predicate_set("bursts", 40)
    # [2,3) u [4,6) u [8,11) u [16,20) u [32,37)
    assert F.elements().tolist() == [2, 4, 5, 8, 9, 10, 16, 17, 18, 19, 32, 33, 34, 35, 36]


@pytest.mark.parametrize("seed", range(15))
def test_densities_match_oracle(seed):
    rng = random.Random(seed)
    N = rng.randint(2, 120)
    members = {i for i in range(N) if rng.random() < rng.random()}
    F = IndexSet.from_sorted(sorted(members), N)
    assert upper_density(F, N).value == oracles.upper_density_back_half(members, N)
    W = rng.randint(1, N)
    vals = [Fraction(int(i in members)) for i in range(N)]
    assert banach_upper_density(F, N, W).value == oracles.max_window_mean(vals, W)
    comp = [1 - v for v in vals]
    assert banach_lower_density(F, N, W).value == 1 - oracles.max_window_mean(comp, W)


def test_window_witness_is_genuine():
    F = predicate_set("bursts", 10 ** 5)
    est = banach_upper_density(F, 10 ** 5, 7)
    s, L = est.witness
    assert L >= 7 and Fraction(int(F.mask[s:s + L].sum()), L) == est.value == 1


def test_max_window_ratio_integer_prefix():
    P = np.cumsum([0, 1, 0, 1, 1, 1, 0])
    val, s, L = max_window_ratio(P, 2)
    assert val == 1 and L >= 2 and P[s + L] - P[s] == L
    val, s, L = max_window_ratio(P, 5)
    assert val == Fraction(4, 5) and L == 5


def test_horizon_errors():
    F = predicate_set("even", 10)
    with pytest.raises(HorizonError):
        upper_density(F, 11)
    with pytest.raises(ValueError):
        banach_upper_density(F, 10, 11)
    with pytest.raises(HorizonError):
        IndexSet.from_sorted([3, 10], 10)
    with pytest.raises(ValueError):
        IndexSet.from_sorted([3, 3], 10)
    with pytest.raises(ValueError):
        builtin_predicate("primes")


def test_trailing_gap_flags_unbounded():
    F = IndexSet.from_sorted([0, 2, 4], 50)
    gap = syndetic_gap(F, 50)
    assert gap.value == 45 and gap.unbounded_suspect and not gap.bounded


def test_ip_sets():
    assert subset_sums([1, 2]) == [1, 2, 3]
    assert sorted(subset_sums([3, 5, 11])) == sorted(oracles.subset_sums([3, 5, 11]))
    F = predicate_set("multiples:4", 1000)
    w = ip_witness(F, 3, 100)
    assert w == (4, 8, 12) and is_ip_witness(F, w)
    assert ip_witness(predicate_set("odd", 200), 2, 50) is None   # odd+odd is even
    with pytest.raises(ValueError):
        ip_witness(F, 6, 10)


def test_set_file_round_trip(tmp_path):
    F = predicate_set("bursts", 300)
    save_index_set(F, tmp_path / "f.txt")
    G = load_index_set(tmp_path / "f.txt")
    assert G.horizon == 300 and np.array_equal(F.mask, G.mask)


def test_report_fields():
    rep = density_report(predicate_set("bursts", 10 ** 4), 10 ** 4, 13)
    assert rep["banach_upper"] == "1"
    assert rep["horizon"] == 10 ** 4 and rep["window_floor"] == 13


def test_membership_and_complement():
    F = IndexSet.from_sorted([1, 3], 5)
    assert 3 in F and 2 not in F and 7 not in F
    assert F.complement().elements().tolist() == [0, 2, 4]
    assert len(F) == 2
