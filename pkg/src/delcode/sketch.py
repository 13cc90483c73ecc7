"""Separating sketches for window-confined (t1, t2)-burst-errors.

A (t1, t2)-burst-error replaces a length-t1 substring by an arbitrary
length-t2 word. Two words conflict when one received word is reachable
from both through errors whose windows fit in a common length-P
interval; a sketch must give conflicting words different values. The
reference realization here colors the conflict graph greedily.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Callable, Iterable, Protocol

import numpy as np

from .balance import EXHAUSTIVE_BUDGET
from .errors import AmbiguousDecodeError, BudgetExceededError, NoCandidateError
from .seqcore import Word

_MAGIC = b"DSK1"
_HEADER = struct.Struct("<4sHIIHHI")


def apply_burst_error(x: Word, i: int, t1: int, replacement: Word | bytes) -> Word:
    """Replace x_[i, i+t1-1] (1-based) with ``replacement``."""
    rep = replacement.symbols if isinstance(replacement, Word) else bytes(replacement)
    n = len(x)
    if t1 < 0 or i < 1 or i + t1 - 1 > n:
        raise IndexError(f"window ({i}, {t1}) out of range for length {n}")
    return Word(x.q, x.symbols[: i - 1] + rep + x.symbols[i - 1 + t1:])


# -- word <-> lexicographic index ------------------------------------------

def word_index(x: Word | bytes, q: int | None = None) -> int:
    """Lexicographic rank of a word in Σ_q^n."""
    if isinstance(x, Word):
        q, sym = x.q, x.symbols
    else:
        sym = bytes(x)
    r = 0
    for s in sym:
        r = r * q + s
    return r


def index_word(index: int, q: int, n: int) -> Word:
    out = bytearray(n)
    for k in range(n - 1, -1, -1):
        index, out[k] = divmod(index, q)
    return Word(q, bytes(out))


def rows_to_index(rows: np.ndarray, q: int) -> np.ndarray:
    """Row-wise base-q value of a uint8 matrix (int64)."""
    acc = np.zeros(rows.shape[0], dtype=np.int64)
    for k in range(rows.shape[1]):
        acc = acc * q + rows[:, k]
    return acc


def index_to_rows(index: np.ndarray, q: int, n: int) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64).copy()
    out = np.zeros((index.shape[0], n), dtype=np.uint8)
    for k in range(n - 1, -1, -1):
        out[:, k] = index % q
        index //= q
    return out


# -- providers ---------------------------------------------------------------

class SketchProvider(Protocol):
    def sketch(self, x: Word, t1: int, t2: int) -> int | None: ...


@dataclass
class SketchTable:
    """Sketch values for every word of Σ_q^n (-1 marks words outside the domain)."""

    q: int
    n: int
    P: int
    t1: int
    t2: int
    values: np.ndarray
    colors: int

    @property
    def value_bits(self) -> int:
        return max(self.colors - 1, 0).bit_length()

    def value(self, x: Word) -> int | None:
        if x.q != self.q or len(x) != self.n:
            raise ValueError(f"word {x!r} does not match table (q={self.q}, n={self.n})")
        v = int(self.values[word_index(x)])
        return None if v < 0 else v

    def sketch(self, x: Word, t1: int, t2: int) -> int | None:
        if (t1, t2) != (self.t1, self.t2):
            raise KeyError(f"table built for ({self.t1}, {self.t2}), asked for ({t1}, {t2})")
        return self.value(x)

    def save(self, path: str | Path) -> None:
        head = _HEADER.pack(_MAGIC, self.q, self.n, self.P, self.t1, self.t2, self.colors)
        with open(path, "wb") as fh:
            fh.write(head)
            fh.write(self.values.astype("<i4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "SketchTable":
        raw = Path(path).read_bytes()
        magic, q, n, P, t1, t2, colors = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a sketch table")
        values = np.frombuffer(raw, dtype="<i4", offset=_HEADER.size).astype(np.int32)
        if values.shape[0] != q ** n:
            raise ValueError(f"{path}: expected {q ** n} values, found {values.shape[0]}")
        return cls(q, n, P, t1, t2, values, colors)


class IdentitySketch:
    """The word's own index as its sketch; separates everything, redundancy n log q."""

    def sketch(self, x: Word, t1: int, t2: int) -> int:
        return word_index(x)


class SketchSet:
    """Several tables addressed by their (t1, t2) pair."""

    def __init__(self, tables: Iterable[SketchTable] = ()):
        self.tables = {(tb.t1, tb.t2): tb for tb in tables}

    def add(self, table: SketchTable) -> None:
        self.tables[(table.t1, table.t2)] = table

    def sketch(self, x: Word, t1: int, t2: int) -> int | None:
        return self.tables[(t1, t2)].value(x)


# -- greedy construction -----------------------------------------------------

def _domain_indices(q: int, n: int, domain) -> np.ndarray:
    if domain is None:
        return np.arange(q ** n, dtype=np.int64)
    dom = np.asarray(domain)
    if dom.dtype == bool:
        return np.flatnonzero(dom).astype(np.int64)
    return np.unique(dom.astype(np.int64))


def conflict_graph(q: int, n: int, P: int, t1: int, t2: int, *,
                   domain=None, key=None, budget: int = EXHAUSTIVE_BUDGET) -> tuple[np.ndarray, list[set[int]]]:
    """Nodes (sorted word indices) and adjacency sets of the confusability graph.

    Two words are adjacent when some received word arises from both with
    error starts i, i' satisfying |i - i'| <= P - t1. ``key`` (indexed by
    word index) restricts conflicts to words with equal keys.
    """
    if q ** n > budget:
        raise BudgetExceededError(f"q^n = {q ** n} exceeds the exhaustive budget {budget}")
    if not 0 <= t1 <= n:
        raise ValueError(f"t1={t1} out of range for n={n}")
    nodes = _domain_indices(q, n, domain)
    adj: list[set[int]] = [set() for _ in range(nodes.shape[0])]
    if nodes.shape[0] < 2:
        return nodes, adj
    rows = index_to_rows(nodes, q, n)
    node_key = np.zeros(nodes.shape[0], dtype=np.int64) if key is None else np.asarray(key, dtype=np.int64)[nodes]
    reach = P - t1
    codes, owners, starts = [], [], []
    for i in range(n - t1 + 1):
        head = rows_to_index(rows[:, :i], q)
        tail = rows_to_index(rows[:, i + t1:], q)
        tail_pow = q ** (n - i - t1)
        for w in product(range(q), repeat=t2):
            mid = word_index(bytes(w), q)
            code = (head * q ** t2 + mid) * tail_pow + tail
            codes.append(code)
            owners.append(np.arange(nodes.shape[0]))
            starts.append(np.full(nodes.shape[0], i))
    code = np.concatenate(codes)
    owner = np.concatenate(owners)
    start = np.concatenate(starts)
    kk = node_key[owner]
    order = np.lexsort((owner, code, kk))
    code, owner, start, kk = code[order], owner[order], start[order], kk[order]
    brk = np.flatnonzero((np.diff(code) != 0) | (np.diff(kk) != 0)) + 1
    bounds = np.concatenate(([0], brk, [code.shape[0]]))
    sizes = np.diff(bounds)
    for g in np.flatnonzero(sizes > 1):
        a, b = bounds[g], bounds[g + 1]
        members = list(zip(owner[a:b].tolist(), start[a:b].tolist()))
        for x in range(len(members)):
            u, iu = members[x]
            for y in range(x + 1, len(members)):
                v, iv = members[y]
                if u != v and abs(iu - iv) <= reach:
                    adj[u].add(v)
                    adj[v].add(u)
    return nodes, adj


def greedy_color(adj: list[set[int]]) -> list[int]:
    """Smallest-available color, nodes in the given (lexicographic) order."""
    color = [-1] * len(adj)
    for u, nbrs in enumerate(adj):
        used = {color[v] for v in nbrs if color[v] >= 0}
        c = 0
        while c in used:
            c += 1
        color[u] = c
    return color


def build_greedy_sketch(q: int, n: int, P: int, t1: int, t2: int, *,
                        domain=None, key=None, budget: int = EXHAUSTIVE_BUDGET) -> SketchTable:
    """Greedy coloring of the conflict graph, optionally restricted to a domain.

    With ``key`` given, only words sharing a key value are separated. This is
    enough whenever the decoder filters candidates by that key anyway.
    """
    nodes, adj = conflict_graph(q, n, P, t1, t2, domain=domain, key=key, budget=budget)
    colors = greedy_color(adj)
    values = np.full(q ** n, -1, dtype=np.int32)
    values[nodes] = colors
    return SketchTable(q, n, P, t1, t2, values, max(colors, default=-1) + 1)


def is_separating(table: SketchTable, *, domain=None, key=None) -> bool:
    """Re-derive the conflict graph and check every edge joins different values."""
    nodes, adj = conflict_graph(table.q, table.n, table.P, table.t1, table.t2,
                                domain=domain, key=key)
    vals = table.values[nodes]
    return all(vals[u] != vals[v] for u, nbrs in enumerate(adj) for v in nbrs)


# -- bounded decoding --------------------------------------------------------

def burst_error_preimages(received: Word, n: int, t1: int, window: tuple[int, int]) -> list[Word]:
    """Every length-n word mapping to ``received`` by an error inside ``window``.

    ``window`` is a 1-based inclusive interval of positions in the
    transmitted word that must contain the replaced substring.
    """
    q = received.q
    t2 = len(received) - n + t1
    if t2 < 0:
        raise ValueError("received word too long for the error model")
    lo, hi = window
    lo, hi = max(lo, 1), min(hi, n)
    seen: dict[bytes, None] = {}
    sym = received.symbols
    for i in range(lo, hi - t1 + 2):
        head, tail = sym[: i - 1], sym[i - 1 + t2:]
        for w in product(range(q), repeat=t1):
            seen.setdefault(head + bytes(w) + tail)
    return [Word(q, s) for s in seen]


def decode_bounded(received: Word, window: tuple[int, int], table: SketchProvider | SketchTable,
                   expected: int, extra_filter: Callable[[Word], bool] | None = None,
                   *, n: int | None = None, t1: int | None = None) -> Word:
    """Undo one window-confined (t1, t2)-burst-error using the sketch value."""
    n = table.n if n is None else n
    t1 = table.t1 if t1 is None else t1
    t2 = len(received) - n + t1
    survivors = []
    for cand in burst_error_preimages(received, n, t1, window):
        if table.sketch(cand, t1, t2) != expected:
            continue
        if extra_filter is not None and not extra_filter(cand):
            continue
        survivors.append(cand)
    if not survivors:
        raise NoCandidateError(f"no preimage of {received} in window {window} has sketch {expected}")
    if len(survivors) > 1:
        raise AmbiguousDecodeError(f"{len(survivors)} preimages share sketch {expected}", survivors)
    return survivors[0]
