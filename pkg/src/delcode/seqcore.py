"""q-ary words, the differential map psi, and the deletion channels.

Public functions take 1-based positions. ``Word.__getitem__`` is an
ordinary 0-based Python sequence accessor.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .errors import InvalidPatternError, WeightNotDivisibleError

MAX_Q = 256


@dataclass(frozen=True, slots=True)
class Word:
    """An immutable q-ary word; symbols are stored as bytes."""

    q: int
    symbols: bytes

    def __post_init__(self):
        if not 2 <= self.q <= MAX_Q:
            raise ValueError(f"alphabet size must be in [2, {MAX_Q}], got {self.q}")
        sym = self.symbols
        if not isinstance(sym, bytes):
            sym = bytes(sym)
            object.__setattr__(self, "symbols", sym)
        if sym and max(sym) >= self.q:
            raise ValueError(f"symbol {max(sym)} out of range for q={self.q}")

    @classmethod
    def parse(cls, text: str, q: int) -> "Word":
        return cls(q, parse_symbols(text, q))

    @classmethod
    def zeros(cls, q: int, n: int) -> "Word":
        return cls(q, bytes(n))

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return Word(self.q, self.symbols[k])
        return self.symbols[k]

    def __iter__(self):
        return iter(self.symbols)

    def __add__(self, other: "Word") -> "Word":
        if other.q != self.q:
            raise ValueError("cannot concatenate words over different alphabets")
        return Word(self.q, self.symbols + other.symbols)

    def __str__(self) -> str:
        return format_symbols(self.symbols, self.q)

    def __repr__(self) -> str:
        return f"Word(q={self.q}, {str(self)!r})"

    def tolist(self) -> list[int]:
        return list(self.symbols)


# -- text wire format -----------------------------------------------------

def format_symbols(symbols: Iterable[int], q: int) -> str:
    if q > 10:
        return ",".join(str(s) for s in symbols)
    return "".join(str(s) for s in symbols)


def parse_symbols(text: str, q: int) -> bytes:
    text = text.strip()
    if not text:
        return b""
    if q > 10 or "," in text:
        return bytes(int(tok) for tok in text.split(","))
    return bytes(int(ch) for ch in text)


def format_word(x: Word) -> str:
    return format_symbols(x.symbols, x.q)


def read_words(lines: Iterable[str], q: int) -> Iterator[Word]:
    """Parse one word per line, skipping blank lines and ``#`` comments."""
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            yield Word.parse(line, q)


def write_words(words: Iterable[Word]) -> Iterator[str]:
    for w in words:
        yield format_word(w) + "\n"


# -- differential sequence and functionals ---------------------------------

def psi_bytes(sym: bytes, q: int) -> bytes:
    """psi on raw symbols: (x_{i-1} - x_i) mod q with x_0 = x_{n+1} = 0."""
    prev = (0,) + tuple(sym)
    nxt = tuple(sym) + (0,)
    return bytes((a - b) % q for a, b in zip(prev, nxt))


def psi(x: Word) -> Word:
    return Word(x.q, psi_bytes(x.symbols, x.q))


def psi_inverse_bytes(sym: bytes, q: int) -> bytes:
    if sum(sym) % q:
        raise WeightNotDivisibleError(
            f"L1-weight {sum(sym)} is not divisible by q={q}")
    out = bytearray(len(sym) - 1)
    acc = 0
    for i in range(len(sym) - 1, 0, -1):
        acc = (acc + sym[i]) % q
        out[i - 1] = acc
    return bytes(out)


def psi_inverse(y: Word) -> Word:
    """Invert psi: x_i = sum_{k>i} y_k mod q (positions 1-based)."""
    if len(y) == 0:
        raise WeightNotDivisibleError("psi images have length at least 1")
    return Word(y.q, psi_inverse_bytes(y.symbols, y.q))


def vt(y: Word | bytes | Sequence[int]) -> int:
    """Varshamov-Tenengolts moment sum_i i*y_i, 1-based."""
    sym = y.symbols if isinstance(y, Word) else y
    return sum(i * s for i, s in enumerate(sym, 1))


def l1sum(y: Word | bytes | Sequence[int]) -> int:
    sym = y.symbols if isinstance(y, Word) else y
    return sum(sym)


# -- burst deletions --------------------------------------------------------

def apply_burst_deletion(x: Word, i: int, length: int) -> Word:
    """Delete x_[i, i+length-1] (1-based, inclusive)."""
    n = len(x)
    if length < 0 or i < 1 or i + length - 1 > n:
        raise IndexError(f"burst ({i}, {length}) out of range for length {n}")
    return Word(x.q, x.symbols[: i - 1] + x.symbols[i - 1 + length:])


def burst_ball(x: Word, t: int, include_intact: bool = False) -> set[Word]:
    """All words reachable by deleting one substring of length 1..t."""
    if t < 0:
        raise ValueError("t must be non-negative")
    sym, n = x.symbols, len(x)
    out = {Word(x.q, sym)} if include_intact else set()
    for length in range(1, min(t, n) + 1):
        for i in range(n - length + 1):
            out.add(Word(x.q, sym[:i] + sym[i + length:]))
    return out


# -- localized deletions ----------------------------------------------------

@dataclass(frozen=True, slots=True)
class LocalizedPattern:
    """Runs (start, length) of one t-localized-deletion, 1-based starts."""

    runs: tuple[tuple[int, int], ...]
    t: int

    def __post_init__(self):
        runs = tuple((int(a), int(b)) for a, b in self.runs)
        object.__setattr__(self, "runs", runs)
        if not runs:
            raise InvalidPatternError("a pattern needs at least one run")
        if self.t < 3:
            raise InvalidPatternError("localized deletions need t >= 3")
        for start, length in runs:
            if start < 1 or length < 1:
                raise InvalidPatternError(f"bad run ({start}, {length})")
        for (a, la), (b, _) in zip(runs, runs[1:]):
            if b - a <= la:
                raise InvalidPatternError("runs must be increasing and non-adjacent")
        first, (last, last_len) = runs[0][0], runs[-1]
        if last - first > self.t - last_len:
            raise InvalidPatternError("runs do not fit in a window of length t")
        if not 2 <= self.total <= self.t:
            raise InvalidPatternError(f"total deletions {self.total} not in [2, {self.t}]")

    @property
    def total(self) -> int:
        return sum(length for _, length in self.runs)

    @property
    def first(self) -> int:
        return self.runs[0][0]

    def positions(self) -> list[int]:
        return [s + k for s, length in self.runs for k in range(length)]

    def fits(self, n: int) -> bool:
        last, last_len = self.runs[-1]
        return last + last_len - 1 <= n

    @classmethod
    def from_positions(cls, positions: Iterable[int], t: int) -> "LocalizedPattern":
        pos = sorted(set(positions))
        runs: list[list[int]] = []
        for p in pos:
            if runs and runs[-1][0] + runs[-1][1] == p:
                runs[-1][1] += 1
            else:
                runs.append([p, 1])
        return cls(tuple((a, b) for a, b in runs), t)


def apply_localized(x: Word, p: LocalizedPattern) -> Word:
    if not p.fits(len(x)):
        raise InvalidPatternError(f"pattern {p.runs} exceeds word length {len(x)}")
    drop = set(p.positions())
    sym = x.symbols
    return Word(x.q, bytes(s for k, s in enumerate(sym, 1) if k not in drop))


def iter_localized_patterns(n: int, t: int, total: int | None = None) -> Iterator[LocalizedPattern]:
    """Every Definition-valid pattern on a length-n word.

    A pattern is determined by its deleted position set: the first run starts
    at i_1 and every deleted position lies in [i_1, i_1 + t - 1].
    """
    totals = range(2, t + 1) if total is None else (total,)
    for i1 in range(1, n + 1):
        rest = range(i1 + 1, min(n, i1 + t - 1) + 1)
        for tp in totals:
            for others in combinations(rest, tp - 1):
                yield LocalizedPattern.from_positions((i1, *others), t)


def localized_ball(x: Word, t: int) -> set[Word]:
    """D_t^loc(x) together with all single deletions."""
    if t < 3:
        raise ValueError("localized deletions need t >= 3")
    sym, n, q = x.symbols, len(x), x.q
    out = {Word(q, sym[:i] + sym[i + 1:]) for i in range(n)}
    for i1 in range(n):
        rest = range(i1 + 1, min(n, i1 + t))
        for tp in range(2, t + 1):
            for others in combinations(rest, tp - 1):
                drop = {i1, *others}
                out.add(Word(q, bytes(s for k, s in enumerate(sym) if k not in drop)))
    return out


def all_words(q: int, n: int) -> Iterator[Word]:
    """Σ_q^n in lexicographic order."""
    from itertools import product
    for tup in product(range(q), repeat=n):
        yield Word(q, bytes(tup))
