import random

import numpy as np
import pytest

from meanlab.words import (
    AlphabetError, FiniteWord, Run, concat, factor_count, factors, from_mlw, from_text, occurrences,
    ones_count, power, read_word, to_mlw, to_text,
)

import oracles


def test_construction_and_views():
    w = FiniteWord("0110")
    assert len(w) == 4 and w.length == 4
    assert str(w) == "0110"
    assert w[1] == 1 and str(w[1:3]) == "11"
    assert w == FiniteWord([0, 1, 1, 0])
    assert hash(w) == hash(FiniteWord("0110"))
    assert w != FiniteWord("0110", alphabet=3)


def test_words_are_immutable():
    w = FiniteWord("01")
    with pytest.raises(ValueError):
        w.symbols[0] = 1


def test_alphabet_errors():
    with pytest.raises(AlphabetError):
        FiniteWord("012")
    with pytest.raises(AlphabetError):
        FiniteWord("0a1")
    with pytest.raises(AlphabetError):
        ones_count(FiniteWord("000", alphabet=1))
    with pytest.raises(AlphabetError):
        concat([FiniteWord("01"), FiniteWord("2", alphabet=3)])
    with pytest.raises(AlphabetError):
        concat([FiniteWord("01"), power(2, 3)])


def test_concat_with_lazy_runs():
    w = concat([FiniteWord("11"), power(0, 3), FiniteWord("1")])
    assert str(w) == "110001"
    assert ones_count(w) == 3
    assert len(concat([power(0, 10 ** 6)])) == 10 ** 6
    assert str(concat([])) == ""
    with pytest.raises(ValueError):
        power(0, -1)


def test_runs():
    assert FiniteWord("1100010").runs() == [(1, 2), (0, 3), (1, 1), (0, 1)]
    assert FiniteWord("").runs() == []


def test_occurrences_examples():
    assert occurrences(FiniteWord("11"), FiniteWord("0111")) == [1, 2]
    assert occurrences(FiniteWord("1111"), FiniteWord("11")) == []
    with pytest.raises(ValueError):
        occurrences(FiniteWord(""), FiniteWord("11"))


@pytest.mark.parametrize("seed", range(20))
def test_occurrences_match_oracle(seed):
    rng = random.Random(seed)
    text = "".join(rng.choice("01") for _ in range(rng.randint(1, 400)))
    m = rng.randint(1, 80)
    start = rng.randint(0, max(0, len(text) - m))
    pat = text[start:start + m] or "1"
    assert occurrences(FiniteWord(pat), FiniteWord(text)) == oracles.occurrences(pat, text)


def test_long_pattern_uses_block_verification():
    rng = np.random.default_rng(1)
    t = rng.integers(0, 2, 5000).astype(np.uint8)
    t[3000:3200] = t[100:300]
    got = occurrences(t[100:300], t)
    assert got == oracles.occurrences("".join(map(str, t[100:300])), "".join(map(str, t)))


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_factors_match_oracle(n):
    text = oracles.thue_morse(300)
    w = FiniteWord(text)
    assert {str(f) for f in factors(w, n)} == oracles.factor_set(text, n)
    assert factor_count(w, n) == len(oracles.factor_set(text, n))


def test_factor_count_long_factors_fall_back_to_bytes():
    text = oracles.thue_morse(400)
    assert factor_count(FiniteWord(text), 70) == len(oracles.factor_set(text, 70))


def test_factor_bounds():
    with pytest.raises(ValueError):
        factor_count(FiniteWord("01"), 3)
    with pytest.raises(ValueError):
        factors(FiniteWord("01"), 0)


def test_text_and_mlw_round_trips(tmp_path):
    w = concat([FiniteWord("11"), power(0, 500), FiniteWord("101")])
    assert from_text(to_text(w)) == w
    blob = to_mlw(w)
    assert blob[:4] == b"MLW1"
    assert len(blob) == 5 + 9 * len(w.runs())
    assert from_mlw(blob) == w
    (tmp_path / "w.mlw").write_bytes(blob)
    (tmp_path / "w.txt").write_text(to_text(w) + "\n")
    assert read_word(tmp_path / "w.mlw") == w == read_word(tmp_path / "w.txt")


def test_mlw_rejects_bad_streams():
    with pytest.raises(ValueError):
        from_mlw(b"XXXX\x02")
    with pytest.raises(ValueError):
        from_mlw(b"MLW1\x02\x01")


def test_run_is_plain_data():
    assert len(Run(1, 4)) == 4
