"""Locally balanced and strong-locally-balanced words.

All band comparisons are done in exact integer arithmetic: a rational
eps = u/v is cleared by multiplying every inequality through by 2v.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError
from .seqcore import Word

EXHAUSTIVE_BUDGET = 20_000_000


def as_fraction(value) -> Fraction:
    """Accept Fraction, int, "p/r" strings or decimal strings; floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def p1(q: int, eps) -> Fraction:
    return Fraction(q - 1, 2) - as_fraction(eps)


def p2(q: int, eps) -> Fraction:
    return Fraction(q - 1, 2) + as_fraction(eps)


@dataclass(frozen=True)
class BalanceSpec:
    q: int
    ell: int
    eps: Fraction

    def __post_init__(self):
        eps = as_fraction(self.eps)
        object.__setattr__(self, "eps", eps)
        if self.ell < 1:
            raise ValueError("ell must be at least 1")
        if not 0 < eps < Fraction(self.q - 1, 2):
            raise ValueError(f"eps={eps} outside (0, (q-1)/2)")

    @property
    def p1(self) -> Fraction:
        return p1(self.q, self.eps)

    @property
    def p2(self) -> Fraction:
        return p2(self.q, self.eps)


@dataclass(frozen=True)
class WindowSpec:
    q: int
    m: int
    a: int
    b: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("window length must be positive")
        if not 0 <= self.a <= self.b <= self.m * (self.q - 1):
            raise ValueError(f"interval [{self.a}, {self.b}] outside [0, {self.m * (self.q - 1)}]")

    @classmethod
    def from_eps(cls, q: int, m: int, eps) -> "WindowSpec":
        """Integer form of the closed band [p1(eps) m, p2(eps) m]."""
        lo = math.ceil(p1(q, eps) * m)
        hi = math.floor(p2(q, eps) * m)
        return cls(q, m, max(lo, 0), min(hi, m * (q - 1)))


def _symbols(x) -> np.ndarray:
    sym = x.symbols if isinstance(x, Word) else bytes(x)
    return np.frombuffer(sym, dtype=np.uint8).astype(np.int64)


def is_strong_locally_balanced(x: Word | bytes, spec: BalanceSpec) -> bool:
    """Every substring of length >= ell has weight in [p1 L, p2 L].

    Linear time: with D(k) = 2v*S_k - c*k the lower bound for window (a, b]
    reads D1(b) >= D1(a), so it suffices to compare against a running
    maximum lagging ell positions behind (and a running minimum for the
    upper bound).
    """
    sym = _symbols(x)
    n = len(sym)
    ell = spec.ell
    if n < ell:
        return True
    u, v = spec.eps.numerator, spec.eps.denominator
    q = spec.q
    lo_slope = (q - 1) * v - 2 * u
    hi_slope = (q - 1) * v + 2 * u
    if 2 * v * (q - 1) * (n + 1) + hi_slope * (n + 1) > 2**62:
        return is_strong_locally_balanced_naive(x, spec)
    s = np.concatenate(([0], np.cumsum(sym)))
    k = np.arange(n + 1, dtype=np.int64)
    d1 = 2 * v * s - lo_slope * k
    d2 = 2 * v * s - hi_slope * k
    run_max = np.maximum.accumulate(d1)
    run_min = np.minimum.accumulate(d2)
    if np.any(d1[ell:] < run_max[: n + 1 - ell]):
        return False
    if np.any(d2[ell:] > run_min[: n + 1 - ell]):
        return False
    return True


def is_strong_locally_balanced_naive(x: Word | bytes, spec: BalanceSpec) -> bool:
    """Quadratic reference check, straight from the definition."""
    sym = list(x.symbols if isinstance(x, Word) else x)
    n = len(sym)
    pre = [0]
    for s in sym:
        pre.append(pre[-1] + s)
    lo, hi = spec.p1, spec.p2
    for length in range(spec.ell, n + 1):
        for a in range(n - length + 1):
            w = pre[a + length] - pre[a]
            if not lo * length <= w <= hi * length:
                return False
    return True


def window_sums(x: Word | bytes, m: int) -> np.ndarray:
    sym = _symbols(x)
    s = np.concatenate(([0], np.cumsum(sym)))
    return s[m:] - s[:-m]


def is_window_bounded(x: Word | bytes, spec: WindowSpec) -> bool:
    n = len(x.symbols if isinstance(x, Word) else x)
    if n < spec.m:
        raise ValueError(f"word of length {n} is shorter than the window {spec.m}")
    w = window_sums(x, spec.m)
    return bool(np.all((w >= spec.a) & (w <= spec.b)))


# -- weight classes ----------------------------------------------------------

@lru_cache(maxsize=256)
def weight_distribution(q: int, m: int) -> tuple[int, ...]:
    """Number of length-m q-ary words of each total weight 0..m(q-1)."""
    dist = [1]
    for _ in range(m):
        new = [0] * (len(dist) + q - 1)
        for w, c in enumerate(dist):
            if c:
                for s in range(q):
                    new[w + s] += c
        dist = new
    return tuple(dist)


@lru_cache(maxsize=256)
def _cumulative(q: int, m: int) -> tuple[int, ...]:
    acc = [0]
    for c in weight_distribution(q, m):
        acc.append(acc[-1] + c)
    return tuple(acc)


def _count_range(q: int, m: int, lo: int, hi: int) -> int:
    top = m * (q - 1)
    lo, hi = max(lo, 0), min(hi, top)
    if lo > hi:
        return 0
    cum = _cumulative(q, m)
    return cum[hi + 1] - cum[lo]


def count_weight_bounded(q: int, m: int, interval: tuple[int, int]) -> int:
    """Exact number of length-m words with weight in [a, b]."""
    a, b = interval
    return _count_range(q, m, a, b)


def rank_in_weight_class(word: Word | Sequence[int], q: int, interval: tuple[int, int]) -> int:
    """Lexicographic rank of ``word`` among length-m words with weight in [a, b]."""
    sym = list(word.symbols if isinstance(word, Word) else word)
    m = len(sym)
    a, b = interval
    if not a <= sum(sym) <= b:
        raise ValueError(f"word weight {sum(sym)} outside [{a}, {b}]")
    rank, acc = 0, 0
    for i, s in enumerate(sym):
        rest = m - i - 1
        for c in range(s):
            rank += _count_range(q, rest, a - acc - c, b - acc - c)
        acc += s
    return rank


def unrank_in_weight_class(rank: int, q: int, m: int, interval: tuple[int, int]) -> Word:
    a, b = interval
    total = count_weight_bounded(q, m, interval)
    if not 0 <= rank < total:
        raise ValueError(f"rank {rank} out of range [0, {total})")
    out = bytearray(m)
    acc = 0
    for i in range(m):
        rest = m - i - 1
        for c in range(q):
            block = _count_range(q, rest, a - acc - c, b - acc - c)
            if rank < block:
                out[i] = c
                acc += c
                break
            rank -= block
    return Word(q, bytes(out))


# -- prefix-deviation bounded classes ----------------------------------------

class PrefixBoundedClass:
    """Length-L words whose every prefix has |2*weight - (q-1)*len| <= delta.

    Any substring of such a word then deviates by at most 2*delta, and a
    window straddling two such words by at most 3*delta.  Ranking is
    lexicographic over a DP of completion counts indexed by the running
    deviation.
    """

    def __init__(self, q: int, length: int, delta: int):
        if delta < 0:
            raise ValueError("delta must be non-negative")
        self.q, self.length, self.delta = q, length, delta
        self._table = _completion_table(q, delta, length)

    def _completions(self, remaining: int, dev: int) -> int:
        if abs(dev) > self.delta:
            return 0
        return self._table[remaining][dev + self.delta]

    @property
    def size(self) -> int:
        return self._completions(self.length, 0)

    def contains(self, word: Word | Sequence[int]) -> bool:
        sym = word.symbols if isinstance(word, Word) else word
        if len(sym) != self.length:
            return False
        dev, step = 0, self.q - 1
        for s in sym:
            dev += 2 * s - step
            if abs(dev) > self.delta:
                return False
        return True

    def rank(self, word: Word | Sequence[int]) -> int:
        sym = word.symbols if isinstance(word, Word) else bytes(word)
        if not self.contains(sym):
            raise ValueError("word is not in the class")
        rank, dev, step = 0, 0, self.q - 1
        for i, s in enumerate(sym):
            rest = self.length - i - 1
            for c in range(s):
                rank += self._completions(rest, dev + 2 * c - step)
            dev += 2 * s - step
        return rank

    def unrank(self, rank: int) -> bytes:
        if not 0 <= rank < self.size:
            raise ValueError(f"rank {rank} out of range [0, {self.size})")
        out = bytearray(self.length)
        dev, step = 0, self.q - 1
        for i in range(self.length):
            rest = self.length - i - 1
            for c in range(self.q):
                block = self._completions(rest, dev + 2 * c - step)
                if rank < block:
                    out[i] = c
                    dev += 2 * c - step
                    break
                rank -= block
        return bytes(out)


    # the complement: words of the same length leaving the band somewhere
    @property
    def complement_size(self) -> int:
        return self.q ** self.length - self.size

    def _outside(self, remaining: int, dev: int, escaped: bool) -> int:
        if escaped or abs(dev) > self.delta:
            return self.q ** remaining
        return self.q ** remaining - self._completions(remaining, dev)

    def rank_complement(self, word: Word | Sequence[int]) -> int:
        """Lexicographic rank among length-L words that are not in the class."""
        sym = word.symbols if isinstance(word, Word) else bytes(word)
        if len(sym) != self.length or self.contains(sym):
            raise ValueError("word is not in the complement")
        rank, dev, step, escaped = 0, 0, self.q - 1, False
        for i, s in enumerate(sym):
            rest = self.length - i - 1
            for c in range(s):
                rank += self._outside(rest, dev + 2 * c - step, escaped)
            dev += 2 * s - step
            escaped = escaped or abs(dev) > self.delta
        return rank

    def unrank_complement(self, rank: int) -> bytes:
        if not 0 <= rank < self.complement_size:
            raise ValueError(f"rank {rank} out of range [0, {self.complement_size})")
        out = bytearray(self.length)
        dev, step, escaped = 0, self.q - 1, False
        for i in range(self.length):
            rest = self.length - i - 1
            for c in range(self.q):
                block = self._outside(rest, dev + 2 * c - step, escaped)
                if rank < block:
                    out[i] = c
                    dev += 2 * c - step
                    escaped = escaped or abs(dev) > self.delta
                    break
                rank -= block
        return bytes(out)


def prefix_bounded_fractions(q: int, delta: int, length: int) -> np.ndarray:
    """Float estimate of |class(L)| / q^L for L = 0..length (feasibility scans)."""
    width = 2 * delta + 1
    prob = np.zeros(width)
    prob[delta] = 1.0
    out = np.empty(length + 1)
    out[0] = 1.0
    step = q - 1
    for L in range(1, length + 1):
        new = np.zeros(width)
        for c in range(q):
            shift = 2 * c - step
            if shift >= 0:
                new[shift:] += prob[: width - shift] if shift else prob
            else:
                new[:shift] += prob[-shift:]
        prob = new / q
        out[L] = prob.sum()
    return out


@lru_cache(maxsize=64)
def _completion_table_store(q: int, delta: int) -> list:
    # shared and grown in place by _completion_table
    return [[1] * (2 * delta + 1)]


def _completion_table(q: int, delta: int, length: int) -> list:
    """table[r][d + delta]: completions of length r from running deviation d."""
    table = _completion_table_store(q, delta)
    step = q - 1
    width = 2 * delta + 1
    while len(table) <= length:
        prev = np.array(table[-1], dtype=object)
        row = np.zeros(width, dtype=object)
        for c in range(q):
            shift = 2 * c - step
            # row[d] += prev[d + shift] where both indices are in range
            if shift >= 0:
                row[: width - shift] += prev[shift:]
            else:
                row[-shift:] += prev[: width + shift]
        table.append(row.tolist())
    return table


# -- exhaustive counting -----------------------------------------------------

def iter_word_blocks(q: int, length: int, max_rows: int = 1 << 20) -> Iterator[np.ndarray]:
    """All words of Σ_q^length, lexicographically, as uint8 row blocks."""
    if length == 0:
        yield np.zeros((1, 0), dtype=np.uint8)
        return
    tail = 1
    while tail < length and q ** (tail + 1) <= max_rows:
        tail += 1
    base = np.indices((q,) * tail, dtype=np.uint8).reshape(tail, -1).T
    head = length - tail
    for idx in range(q ** head):
        prefix = np.zeros(head, dtype=np.uint8)
        r = idx
        for k in range(head - 1, -1, -1):
            prefix[k] = r % q
            r //= q
        yield np.hstack([np.broadcast_to(prefix, (base.shape[0], head)), base])


def strong_balanced_mask(words: np.ndarray, q: int, ell: int, eps) -> np.ndarray:
    """Row-wise strong-balance test for a block of words (same rule as above)."""
    eps = as_fraction(eps)
    rows, n = words.shape
    if n < ell:
        return np.ones(rows, dtype=bool)
    u, v = eps.numerator, eps.denominator
    s = np.zeros((rows, n + 1), dtype=np.int64)
    np.cumsum(words, axis=1, out=s[:, 1:])
    k = np.arange(n + 1, dtype=np.int64)
    d1 = 2 * v * s - ((q - 1) * v - 2 * u) * k
    d2 = 2 * v * s - ((q - 1) * v + 2 * u) * k
    mx = np.maximum.accumulate(d1, axis=1)
    mn = np.minimum.accumulate(d2, axis=1)
    ok = np.all(d1[:, ell:] >= mx[:, : n + 1 - ell], axis=1)
    ok &= np.all(d2[:, ell:] <= mn[:, : n + 1 - ell], axis=1)
    return ok


def psi_rows(words: np.ndarray, q: int) -> np.ndarray:
    rows, n = words.shape
    padded = np.zeros((rows, n + 2), dtype=np.int16)
    padded[:, 1: n + 1] = words
    return ((padded[:, :-1] - padded[:, 1:]) % q).astype(np.uint8)


def count_strong_balanced(q: int, n: int, ell: int, eps, *, of_psi: bool = False,
                          budget: int = EXHAUSTIVE_BUDGET) -> int:
    """Exhaustive count of strong-(ell, eps) words, or of x with psi(x) balanced."""
    if q ** n > budget:
        raise BudgetExceededError(f"q^n = {q ** n} exceeds the exhaustive budget {budget}")
    total = 0
    for block in iter_word_blocks(q, n):
        rows = psi_rows(block, q) if of_psi else block
        total += int(np.count_nonzero(strong_balanced_mask(rows, q, ell, eps)))
    return total


def counting_lemma_threshold(q: int, n: int, eps, s: int) -> float:
    eps = as_fraction(eps)
    return float((q - 1) ** 2 / eps ** 2) * math.log(2 * n * math.sqrt(s))


def psi_lemma_threshold(q: int, n: int, eps) -> float:
    eps = as_fraction(eps)
    return float((q - 1) ** 2 / eps ** 2) * math.log(2 * (n + 1) * math.sqrt(q))


def check_counting_lemma(q: int, n: int, ell: int, eps, s: int,
                         budget: int = EXHAUSTIVE_BUDGET) -> dict:
    """Exhaustively test both conclusions of the counting lemma at one point.

    ``holds`` fields are None when the premise on ell fails (nothing claimed).
    """
    eps = as_fraction(eps)
    count = count_strong_balanced(q, n, ell, eps, budget=budget)
    count_psi = count_strong_balanced(q, n, ell, eps, of_psi=True, budget=budget)
    premise = ell >= counting_lemma_threshold(q, n, eps, s)
    premise_psi = ell >= psi_lemma_threshold(q, n, eps)
    bound = Fraction(q ** n) * (1 - Fraction(1, 2 * s))
    bound_psi = Fraction(q ** n, 2)
    return {
        "q": q, "n": n, "ell": ell, "eps": str(eps), "s": s,
        "count": count,
        "bound": str(bound),
        "premise": premise,
        "holds": (count >= bound) if premise else None,
        "count_psi": count_psi,
        "bound_psi": str(bound_psi),
        "premise_psi": premise_psi,
        "holds_psi": (count_psi >= bound_psi) if premise_psi else None,
    }


# -- forbidden windows -------------------------------------------------------

def count_forbidden(q: int, m: int, eps0) -> int:
    """|F(m, eps0)|: length-m words with weight outside [p1 m, p2 m]."""
    spec = WindowSpec.from_eps(q, m, eps0)
    return q ** m - count_weight_bounded(q, m, (spec.a, spec.b))


def count_last_window_bad(q: int, m: int, eps0) -> int:
    """|G(m+1, eps0)|: length-(m+1) words with at least one forbidden length-m window."""
    spec = WindowSpec.from_eps(q, m, eps0)
    dist = weight_distribution(q, m - 1)
    good = 0
    for w, c in enumerate(dist):
        ends = sum(1 for s in range(q) if spec.a <= w + s <= spec.b)
        good += c * ends * ends
    return q ** (m + 1) - good


def counting_lemma_points(q: int, n: int, eps_values, s_values=(1, 2, 3)):
    """(ell, eps, s) with ell <= n at which either premise of the lemma holds."""
    out = []
    for eps in eps_values:
        eps = as_fraction(eps)
        for s in s_values:
            lo = min(counting_lemma_threshold(q, n, eps, s), psi_lemma_threshold(q, n, eps))
            for ell in range(max(1, math.ceil(lo)), n + 1):
                out.append((ell, eps, s))
    return out


def sweep_counting_lemma(q: int, n: int, eps_values=None, s_values=(1, 2, 3),
                         budget: int = EXHAUSTIVE_BUDGET) -> list[dict]:
    """Exhaustive lemma reports at every premise-holding point with ell <= n."""
    if eps_values is None:
        eps_values = [Fraction(k, 200) for k in range(1, 100 * (q - 1))]
    return [check_counting_lemma(q, n, ell, eps, s, budget=budget)
            for ell, eps, s in counting_lemma_points(q, n, eps_values, s_values)]
