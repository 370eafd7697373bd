"""Alphabets, index-encoded sequences, and exact edit-distance oracles.

Sequences are stored as arrays of alphabet indices. A sequence may carry
a padded suffix (the reserved padding symbol, always the last alphabet
position); ``length`` counts the true symbols only, and every distance
computation ignores the padding.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DataError

CODE_DTYPE = np.int16


class SequenceError(DataError):
    """Invalid symbol, code, or length in a sequence operation."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct symbols; the last one is reserved for padding."""

    symbols: str

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise SequenceError("alphabet needs at least one symbol plus the padding symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise SequenceError(f"alphabet contains duplicate symbols: {self.symbols!r}")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def pad_index(self) -> int:
        return len(self.symbols) - 1

    @property
    def pad_symbol(self) -> str:
        return self.symbols[-1]

    @cached_property
    def _index(self) -> dict[str, int]:
        return {ch: i for i, ch in enumerate(self.symbols)}

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise SequenceError(f"unknown symbol {symbol!r} for alphabet {self.symbols!r}") from None

    def encode(self, text: str) -> "Sequence":
        """Parse a text sequence. The padding symbol is not valid content."""
        codes = np.empty(len(text), dtype=CODE_DTYPE)
        for i, ch in enumerate(text):
            code = self.index(ch)
            if code == self.pad_index:
                raise SequenceError(f"padding symbol {ch!r} not allowed in sequence text")
            codes[i] = code
        return Sequence(codes, len(text))

    def decode(self, seq: "Sequence", with_padding: bool = False) -> str:
        codes = seq.codes if with_padding else seq.codes[: seq.length]
        return "".join(self.symbols[c] for c in codes)


#: Default alphabet: the four bases, the sequencing-failure symbol N, and padding.
DNA = Alphabet("ATGCN-")


@dataclass(frozen=True, eq=False)
class Sequence:
    """Index-encoded symbol sequence; padding codes occupy a contiguous suffix."""

    codes: np.ndarray
    length: int

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=CODE_DTYPE)
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)
        if not 0 <= self.length <= codes.size:
            raise SequenceError(f"length {self.length} out of range for {codes.size} codes")

    @property
    def padded_len(self) -> int:
        return int(self.codes.size)

    def true_codes(self) -> np.ndarray:
        return self.codes[: self.length]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sequence):
            return NotImplemented
        return self.length == other.length and bool(
            np.array_equal(self.true_codes(), other.true_codes())
        )

    def __hash__(self) -> int:
        return hash((self.length, self.true_codes().tobytes()))

    def __repr__(self) -> str:
        return f"Sequence(len={self.length}, padded={self.padded_len})"


def pad(seq: Sequence, target_len: int, alphabet: Alphabet = DNA) -> Sequence:
    """Suffix-pad to ``target_len`` codes; refuses to truncate."""
    if target_len <= 0:
        raise SequenceError(f"target length must be positive, got {target_len}")
    if seq.length > target_len:
        raise SequenceError(
            f"sequence of length {seq.length} does not fit in {target_len}; refusing to truncate"
        )
    codes = np.concatenate(
        [
            seq.true_codes(),
            np.full(target_len - seq.length, alphabet.pad_index, dtype=CODE_DTYPE),
        ]
    )
    return Sequence(codes, seq.length)


def one_hot(seq: Sequence, alphabet: Alphabet = DNA) -> np.ndarray:
    """One-hot encode all codes (padding included) as (alphabet_size, padded_len)."""
    codes = seq.codes
    if codes.size and (codes.min() < 0 or codes.max() >= alphabet.size):
        raise SequenceError(
            f"sequence contains codes outside the {alphabet.size}-symbol alphabet"
        )
    out = np.zeros((alphabet.size, codes.size), dtype=np.float32)
    out[codes, np.arange(codes.size)] = 1.0
    return out


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Exact edit distance over true symbols (padding stripped).

    Row-by-row dynamic program in O(|a|*|b|) time and two rows of memory.
    The horizontal (insertion) dependency within a row is resolved with a
    running minimum, so each row is a handful of vectorized operations.
    """
    x = a.true_codes()
    y = b.true_codes()
    if x.size < y.size:
        x, y = y, x
    m = y.size
    if m == 0:
        return int(x.size)
    offsets = np.arange(1, m + 1, dtype=np.int32)
    prev = np.arange(m + 1, dtype=np.int32)
    cur = np.empty(m + 1, dtype=np.int32)
    for i in range(1, x.size + 1):
        ca = x[i - 1]
        # substitution / match, then deletion
        np.add(prev[:-1], (y != ca).astype(np.int32), out=cur[1:])
        np.minimum(cur[1:], prev[1:] + 1, out=cur[1:])
        # insertion chain: cur[j] = j + min(i, min_{t<=j}(cur[t] - t))
        cur[0] = i
        run = np.minimum.accumulate(cur[1:] - offsets)
        np.minimum(run, i, out=run)
        np.add(run, offsets, out=cur[1:])
        prev, cur = cur, prev
    return int(prev[m])


def levenshtein_banded(a: Sequence, b: Sequence, band: int) -> int | None:
    """Edit distance restricted to a diagonal band.

    Returns the exact distance whenever it is <= ``band``; otherwise
    returns None (overflow). Useful as a fast path for homologous pairs.
    """
    if band < 0:
        raise SequenceError(f"band must be non-negative, got {band}")
    x = a.true_codes()
    y = b.true_codes()
    if abs(int(x.size) - int(y.size)) > band:
        return None
    m = int(y.size)
    big = band + 1  # any cell value > band behaves as overflow
    prev = [j if j <= band else big for j in range(m + 1)]
    for i in range(1, int(x.size) + 1):
        cur = [big] * (m + 1)
        if i <= band:
            cur[0] = i
        lo = max(1, i - band)
        hi = min(m, i + band)
        ci = x[i - 1]
        for j in range(lo, hi + 1):
            best = prev[j - 1] + (1 if ci != y[j - 1] else 0)
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best if best < big else big
        prev = cur
    v = prev[m]
    return int(v) if v <= band else None
