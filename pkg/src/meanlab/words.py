"""Finite words over small alphabets.

Words are dense ``uint8`` arrays frozen after construction.  Positions are
0-based throughout; reports that quote the 1-based convention convert at the
boundary.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

MAGIC = b"MLW1"


class AlphabetError(ValueError):
    """Raised when a symbol or word does not fit the declared alphabet."""


class FiniteWord:
    """An immutable block ``x_0 x_1 ... x_{n-1}`` over ``{0, ..., alphabet-1}``."""

    __slots__ = ("_data", "alphabet", "_hash")

    def __init__(self, symbols: Union[str, Sequence[int], np.ndarray] = (), alphabet: int = 2):
        if alphabet < 1 or alphabet > 256:
            raise AlphabetError(f"alphabet size {alphabet} outside 1..256")
        if isinstance(symbols, str):
            if symbols and not symbols.isdigit():
                raise AlphabetError(f"non-digit symbol in {symbols[:20]!r}")
            data = np.frombuffer(symbols.encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            data = np.asarray(symbols)
            if data.size and (data.min() < 0 or data.max() > 255):
                raise AlphabetError("symbols must lie in 0..255")
            data = data.astype(np.uint8, copy=True).reshape(-1)
        if data.size and int(data.max()) >= alphabet:
            raise AlphabetError(
                f"symbol {int(data.max())} not in alphabet of size {alphabet}"
            )
        data.flags.writeable = False
        self._data = data
        self.alphabet = alphabet
        self._hash = None

    @classmethod
    def _wrap(cls, data: np.ndarray, alphabet: int) -> "FiniteWord":
        # trusted fast path: caller guarantees dtype and alphabet
        w = cls.__new__(cls)
        if data.flags.writeable:
            data = data.copy()
            data.flags.writeable = False
        w._data = data
        w.alphabet = alphabet
        w._hash = None
        return w

    @property
    def symbols(self) -> np.ndarray:
        return self._data

    @property
    def length(self) -> int:
        return int(self._data.size)

    def __len__(self) -> int:
        return int(self._data.size)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return FiniteWord._wrap(self._data[key], self.alphabet)
        return int(self._data[key])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteWord):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self._data, other._data)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.alphabet, self._data.tobytes()))
        return self._hash

    def __str__(self) -> str:
        return (self._data + ord("0")).tobytes().decode("ascii")

    def __repr__(self) -> str:
        s = str(self)
        if len(s) > 40:
            s = s[:37] + "..."
        return f"FiniteWord({s!r}, len={len(self)})"

    def runs(self) -> list[tuple[int, int]]:
        """Run-length decomposition as ``(symbol, count)`` pairs."""
        d = self._data
        if d.size == 0:
            return []
        edges = np.flatnonzero(np.diff(d)) + 1
        starts = np.concatenate(([0], edges))
        counts = np.diff(np.concatenate((starts, [d.size])))
        return [(int(d[s]), int(c)) for s, c in zip(starts, counts)]


@dataclass(frozen=True)
class Run:
    """A lazily expanded power ``symbol^count`` used as a concat input."""

    symbol: int
    count: int

    def __len__(self) -> int:
        return self.count


def power(symbol: int, count: int) -> Run:
    if count < 0:
        raise ValueError("negative power")
    return Run(symbol, count)


def ones_count(w: FiniteWord) -> int:
    if w.alphabet < 2:
        raise AlphabetError("symbol 1 is not in the alphabet")
    return int(np.count_nonzero(w.symbols == 1))


def concat(ws: Iterable[Union[FiniteWord, Run]], alphabet: int | None = None) -> FiniteWord:
    """Concatenate words and runs; runs are only expanded into the output buffer."""
    parts = list(ws)
    alphabets = {p.alphabet for p in parts if isinstance(p, FiniteWord)}
    if alphabet is not None:
        alphabets.add(alphabet)
    if len(alphabets) > 1:
        raise AlphabetError(f"mixed alphabets {sorted(alphabets)}")
    alpha = alphabets.pop() if alphabets else 2
    for p in parts:
        if isinstance(p, Run) and not 0 <= p.symbol < alpha:
            raise AlphabetError(f"run symbol {p.symbol} not in alphabet of size {alpha}")
    out = np.empty(sum(len(p) for p in parts), dtype=np.uint8)
    pos = 0
    for p in parts:
        n = len(p)
        if isinstance(p, Run):
            out[pos:pos + n] = p.symbol
        else:
            out[pos:pos + n] = p.symbols
        pos += n
    out.flags.writeable = False
    return FiniteWord._wrap(out, alpha)


def _as_array(w) -> np.ndarray:
    return w.symbols if isinstance(w, FiniteWord) else np.asarray(w, dtype=np.uint8)


_CHUNK = 1 << 20
_ANCHOR = 32


def occurrences(pattern, text) -> list[int]:
    """All start positions of ``pattern`` in ``text`` (overlaps included)."""
    p = _as_array(pattern)
    t = _as_array(text)
    m = p.size
    if m < 1:
        raise ValueError("empty pattern")
    if m > t.size:
        return []
    return occurrence_array(p, t).tolist()


def occurrence_array(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    m = p.size
    last = t.size - m + 1
    if last <= 0:
        return np.empty(0, dtype=np.int64)
    a = min(m, _ANCHOR)
    found = []
    for lo in range(0, last, _CHUNK):
        hi = min(last, lo + _CHUNK)
        cand = np.arange(lo, hi, dtype=np.int64)
        for off in range(a):
            cand = cand[t[cand + off] == p[off]]
            if cand.size == 0:
                break
        # verify the remainder in column blocks
        off = a
        while cand.size and off < m:
            step = min(64, m - off)
            cols = np.arange(off, off + step)
            ok = (t[cand[:, None] + cols] == p[cols]).all(axis=1)
            cand = cand[ok]
            off += step
        found.append(cand)
    return np.concatenate(found)


def _window_codes(t: np.ndarray, n: int, alphabet: int) -> np.ndarray:
    count = t.size - n + 1
    code = np.zeros(count, dtype=np.uint64)
    base = np.uint64(alphabet)
    for off in range(n):
        code = code * base + t[off:off + count].astype(np.uint64)
    return code


def _fits_u64(n: int, alphabet: int) -> bool:
    return alphabet ** n <= 2 ** 64


def factor_count(text: FiniteWord, n: int) -> int:
    """Number of distinct length-``n`` factors of ``text``."""
    if n < 1:
        raise ValueError("factor length must be positive")
    if n > len(text):
        raise ValueError(f"factor length {n} exceeds text length {len(text)}")
    t = text.symbols
    if _fits_u64(n, text.alphabet):
        return int(np.unique(_window_codes(t, n, text.alphabet)).size)
    raw = t.tobytes()
    return len({raw[i:i + n] for i in range(t.size - n + 1)})


def factors(text: FiniteWord, n: int) -> set[FiniteWord]:
    """The set of distinct length-``n`` factors of ``text``."""
    if n < 1:
        raise ValueError("factor length must be positive")
    if n > len(text):
        raise ValueError(f"factor length {n} exceeds text length {len(text)}")
    t = text.symbols
    if _fits_u64(n, text.alphabet):
        codes, first = np.unique(_window_codes(t, n, text.alphabet), return_index=True)
        return {FiniteWord._wrap(t[i:i + n], text.alphabet) for i in first}
    raw = t.tobytes()
    seen = {raw[i:i + n] for i in range(t.size - n + 1)}
    return {FiniteWord._wrap(np.frombuffer(b, dtype=np.uint8), text.alphabet) for b in seen}


# -- serialization ----------------------------------------------------------

def to_text(w: FiniteWord) -> str:
    return str(w)


def from_text(s: str, alphabet: int = 2) -> FiniteWord:
    return FiniteWord(s.strip(), alphabet)


def to_mlw(w: FiniteWord) -> bytes:
    """Run-length binary form: magic, alphabet byte, then (u8 symbol, u64 count) pairs."""
    out = [MAGIC, struct.pack("<B", w.alphabet % 256)]
    out.extend(struct.pack("<BQ", s, c) for s, c in w.runs())
    return b"".join(out)


def from_mlw(data: bytes) -> FiniteWord:
    if data[:4] != MAGIC:
        raise ValueError("not an MLW1 stream")
    if len(data) < 5 or (len(data) - 5) % 9:
        raise ValueError("truncated MLW1 stream")
    alphabet = data[4] or 256
    runs = [Run(*struct.unpack_from("<BQ", data, off)) for off in range(5, len(data), 9)]
    return concat(runs, alphabet=alphabet)


def read_word(path: str | Path, alphabet: int = 2) -> FiniteWord:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == MAGIC:
        return from_mlw(raw)
    return from_text(raw.decode("ascii"), alphabet)
