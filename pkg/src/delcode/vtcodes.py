"""Differential VT codes for single deletions, bursts and localized deletions.

Every code here constrains y = psi(x): a VT residue b mod N, for the burst
and localized codes also an L1-weight residue c*q mod (t+1)q, strong local
balance of y, and one sketch value per deletion count t' in [2, t].
Decoding first pins the error down to a short window using the two
residues, then lets the sketch pick the transmitted word among the
candidates in that window.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb

import numpy as np

from .balance import (EXHAUSTIVE_BUDGET, BalanceSpec, as_fraction, iter_word_blocks,
                      is_strong_locally_balanced, psi_rows, strong_balanced_mask)
from .errors import (AmbiguousDecodeError, BudgetExceededError, NoCandidateError,
                     NotAGoodTripleError)
from .seqcore import Word, l1sum, psi, psi_inverse, vt
from .sketch import (SketchProvider, SketchSet, build_greedy_sketch,
                     burst_error_preimages, index_to_rows)
from .triples import classify

MODES = ("single", "burst", "localized", "binary_le3_lite")


def ell_for(q: int, n: int, eps) -> int:
    """ceil((q-1)^2/eps^2 * ln(2(n+1) sqrt q)), natural log."""
    eps = as_fraction(eps)
    return math.ceil(float((q - 1) ** 2 / eps ** 2) * math.log(2 * (n + 1) * math.sqrt(q)))


def default_modulus(q: int, n: int, t: int, mode: str) -> int:
    if mode == "single":
        return (n + 1) * q
    if mode == "localized":
        return (t * (n + t) - 1) * q
    return (n * q + q - 1) * t


@dataclass(frozen=True)
class CodeParams:
    q: int
    n: int
    t: int
    mode: str
    N: int
    eps: Fraction | None = None
    ell: int | None = None
    P: int | None = None
    b: int | None = None
    c: int | None = None
    a: dict[int, int] = field(default_factory=dict)
    M: Fraction | None = None
    ell_exceeds_M: bool | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "binary_le3_lite" and (self.q, self.t) != (2, 3):
            raise ValueError("binary_le3_lite needs q=2, t=3")
        if self.mode == "localized" and self.t < 3:
            raise ValueError("localized codes need t >= 3")
        floor = default_modulus(self.q, self.n, self.t, self.mode)
        if self.N < floor:
            raise ValueError(f"N={self.N} below the {self.mode} bound {floor}")

    # sketch bookkeeping: (t', t1, t2) per constrained deletion count
    def sketch_slots(self) -> list[tuple[int, int, int]]:
        if self.mode == "single":
            return []
        if self.mode == "localized":
            return [(tp, self.t, self.t - tp) for tp in range(2, self.t + 1)]
        first = 3 if self.mode == "binary_le3_lite" else 2
        return [(tp, tp, 0) for tp in range(first, self.t + 1)]

    @property
    def balance(self) -> BalanceSpec | None:
        if self.eps is None:
            return None
        return BalanceSpec(self.q, self.ell, self.eps)

    @property
    def sum_modulus(self) -> int:
        return (self.t + 1) * self.q

    def with_residues(self, b: int, c: int | None = None, a: dict[int, int] | None = None) -> "CodeParams":
        return replace(self, b=b % self.N, c=c, a=dict(a or {}))

    def residues_set(self) -> bool:
        if self.b is None:
            return False
        if self.mode == "single":
            return True
        return self.c is not None and all(tp in self.a for tp, _, _ in self.sketch_slots())

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "q": self.q, "n": self.n, "t": self.t, "mode": self.mode, "N": self.N,
            "eps": None if self.eps is None else str(self.eps),
            "ell": self.ell, "P": self.P,
            "residues": {
                "b": self.b, "c": self.c,
                "a": {str(k): v for k, v in sorted(self.a.items())},
            },
            "M": None if self.M is None else str(self.M),
            "ell_exceeds_M": self.ell_exceeds_M,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CodeParams":
        res = data.get("residues") or {}
        eps = data.get("eps")
        params = derive_params(data["q"], data["t"], eps, data["n"], data["mode"], N=data.get("N"))
        a = {int(k): int(v) for k, v in (res.get("a") or {}).items()}
        if res.get("b") is None:
            return params
        return params.with_residues(res["b"], res.get("c"), a)


def derive_params(q: int, t: int, eps, n: int, mode: str, N: int | None = None) -> CodeParams:
    """Fill ell, P and the default modulus for a code of length n."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if mode == "single":
        eps = None if eps is None else as_fraction(eps)
        ell = None if eps is None else ell_for(q, n, eps)
        N = default_modulus(q, n, 1, mode) if N is None else N
        return CodeParams(q, n, 1, mode, N, eps, ell, None)
    eps = as_fraction(eps)
    if mode == "localized" and t < 3:
        raise ValueError("localized codes need t >= 3")
    cert = classify(q, t, eps)
    if not cert.is_good:
        raise NotAGoodTripleError(f"({q}, {t}, {eps}) is not a good triple: {cert.reason}")
    ell = ell_for(q, n, eps)
    M = cert.M_loc if mode == "localized" else cert.M
    N = default_modulus(q, n, t, mode) if N is None else N
    return CodeParams(q, n, t, mode, N, eps, ell, ell + t - 1, M=M, ell_exceeds_M=ell > M)


def _require_residues(params: CodeParams) -> None:
    if not params.residues_set():
        raise ValueError("code residues are unset; call with_residues or best_residues first")


# -- membership --------------------------------------------------------------

def member_single(x: Word, params: CodeParams) -> bool:
    _require_residues(params)
    return len(x) == params.n and vt(psi(x)) % params.N == params.b


def _core_member(x: Word, params: CodeParams) -> bool:
    if len(x) != params.n:
        return False
    y = psi(x)
    if vt(y) % params.N != params.b:
        return False
    if l1sum(y) % params.sum_modulus != params.c * params.q:
        return False
    return is_strong_locally_balanced(y, params.balance)


def _sketch_member(x: Word, params: CodeParams, sketch: SketchProvider) -> bool:
    return all(sketch.sketch(x, t1, t2) == params.a[tp] for tp, t1, t2 in params.sketch_slots())


def member_burst(x: Word, params: CodeParams, sketch: SketchProvider) -> bool:
    _require_residues(params)
    return _member_unchecked(x, params, sketch)


def _member_unchecked(x: Word, params: CodeParams, sketch: SketchProvider) -> bool:
    # table lookups are cheap and reject most candidates, so they go first
    return len(x) == params.n and _sketch_member(x, params, sketch) and _core_member(x, params)


member_localized = member_burst


def is_member(x: Word, params: CodeParams, sketch: SketchProvider | None = None) -> bool:
    if params.mode == "single":
        return member_single(x, params)
    return member_burst(x, params, sketch)


def residue_tuple(x: Word, params: CodeParams, sketch: SketchProvider | None = None) -> tuple:
    """The (b, c, a_2, ..., a_t) values x would need to be a codeword."""
    y = psi(x)
    if params.mode == "single":
        return (vt(y) % params.N,)
    c = (l1sum(y) % params.sum_modulus) // params.q
    return (vt(y) % params.N, c) + tuple(sketch.sketch(x, t1, t2) for _, t1, t2 in params.sketch_slots())


# -- decoding ----------------------------------------------------------------

@dataclass
class DecodeTrace:
    t_prime: int
    delta: int | None = None
    delta_sum: int | None = None
    j: int | None = None
    sigma_j: int | None = None
    window: tuple[int, int] | None = None
    span: tuple[int, int] | None = None
    candidates_considered: int = 0

    def to_json(self) -> dict:
        return {
            "t_prime": self.t_prime, "delta": self.delta, "delta_sum": self.delta_sum,
            "j": self.j, "sigma_j": self.sigma_j,
            "window": None if self.window is None else list(self.window),
            "span": None if self.span is None else list(self.span),
            "candidates_considered": self.candidates_considered,
        }


def _single_core(received: Word, q: int, N: int, a: int) -> tuple[Word, DecodeTrace]:
    yp = psi(received).symbols
    n = len(yp)
    delta = (a - vt(yp)) % N
    total = sum(yp)
    dsum = q if delta > total + q else 0
    suffix = 0
    for j in range(n, 0, -1):
        beta = delta - j * dsum - suffix
        alpha = yp[j - 1] + dsum - beta
        if 0 <= beta < q and 0 <= alpha < q:
            y = yp[: j - 1] + bytes((alpha, beta)) + yp[j:]
            x = psi_inverse(Word(q, y))
            # deleting anywhere in the run of x that ends at j gives the same word
            k = j
            while k > 1 and x[k - 2] == x[j - 1]:
                k -= 1
            return x, DecodeTrace(1, delta, dsum, j, beta, (k, j), None, 1)
        suffix += yp[j - 1]
    raise NoCandidateError(f"no admissible position for {received} (delta={delta})")


def decode_single(received: Word, params: CodeParams) -> Word:
    """Recover a codeword of the single-deletion code from one deletion."""
    return decode_single_traced(received, params)[0]


def decode_single_traced(received: Word, params: CodeParams) -> tuple[Word, DecodeTrace]:
    _require_residues(params)
    if len(received) != params.n - 1:
        raise ValueError(f"expected length {params.n - 1}, got {len(received)}")
    return _single_core(received, params.q, params.N, params.b)


def decode_single_batch(rows: np.ndarray, q: int, N: int, a) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized single-deletion decoding of many received words at once.

    ``rows`` holds received words of length n-1, ``a`` is a scalar or one
    residue per row. Returns (decoded rows, success mask).
    """
    rows = np.asarray(rows, dtype=np.uint8)
    m = rows.shape[0]
    yp = psi_rows(rows, q).astype(np.int64)
    n = yp.shape[1]
    idx = np.arange(1, n + 1, dtype=np.int64)
    delta = (np.asarray(a, dtype=np.int64) - yp @ idx) % N
    total = yp.sum(axis=1)
    dsum = np.where(delta > total + q, q, 0)
    suffix = np.zeros((m, n), dtype=np.int64)
    suffix[:, :-1] = np.cumsum(yp[:, ::-1], axis=1)[:, ::-1][:, 1:]
    beta = delta[:, None] - idx[None, :] * dsum[:, None] - suffix
    alpha = yp + dsum[:, None] - beta
    valid = (beta >= 0) & (beta < q) & (alpha >= 0) & (alpha < q)
    ok = valid.any(axis=1)
    jz = n - 1 - np.argmax(valid[:, ::-1], axis=1)
    r = np.arange(m)
    al, be = alpha[r, jz], beta[r, jz]
    y = np.empty((m, n + 1), dtype=np.int64)
    cols = np.arange(n + 1)[None, :]
    right = cols > jz[:, None] + 1
    src = np.clip(cols - right.astype(np.int64), 0, n - 1)
    y[:] = np.take_along_axis(yp, np.broadcast_to(src, (m, n + 1)), axis=1)
    y[cols == jz[:, None]] = al
    y[cols == jz[:, None] + 1] = be
    x = np.cumsum(y[:, :0:-1], axis=1)[:, ::-1] % q
    return x.astype(np.uint8), ok


def _scan(yp: bytes, tp: int, delta: int, dsum: int, lo: int, hi: int) -> tuple[int, int] | None:
    """First j (scanning down from |y'|) with sigma^(j) in [lo, hi]."""
    suffix = 0
    for j in range(len(yp), 0, -1):
        sigma = delta - j * dsum - tp * suffix
        if lo <= sigma <= hi:
            return j, sigma
        suffix += yp[j - 1]
    return None


def _locate(received: Word, params: CodeParams, localized: bool) -> DecodeTrace:
    q, t, n = params.q, params.t, params.n
    tp = n - len(received)
    yp = psi(received).symbols
    delta = (params.b - vt(yp)) % params.N
    dsum = (params.c * q - sum(yp)) % params.sum_modulus
    if localized:
        lo, hi = -(q - 1) * (t - tp) * tp, comb(tp + 1, 2) * (q - 1) + q * t * (tp - 1)
    else:
        lo, hi = 0, comb(tp + 1, 2) * (q - 1)
    found = _scan(yp, tp, delta, dsum, lo, hi)
    if found is None:
        raise NoCandidateError(f"no index j admits sigma in [{lo}, {hi}] (delta={delta}, delta_sum={dsum})")
    j, sigma = found
    return DecodeTrace(tp, delta, dsum, j, sigma, (max(1, j - params.ell + 1), j))


def locate(received: Word, params: CodeParams) -> DecodeTrace:
    """Pin a burst (or localized deletion) of 2..t symbols down to ``trace.span``.

    The span is an interval of transmitted positions guaranteed to contain
    every deleted position whenever the transmitted word is a codeword.
    """
    n, t = params.n, params.t
    localized = params.mode == "localized"
    trace = _locate(received, params, localized)
    if localized:
        lo = max(1, min(trace.j - params.ell + 1 - (t - trace.t_prime), n - params.P + 1))
        trace.span = (lo, min(n, lo + params.P - 1))
    else:
        trace.span = (trace.window[0], trace.j + trace.t_prime - 1)
    return trace


def _finish(candidates: list[Word], params: CodeParams, sketch: SketchProvider,
            trace: DecodeTrace) -> tuple[Word, DecodeTrace]:
    trace.candidates_considered = len(candidates)
    survivors = [c for c in candidates if _member_unchecked(c, params, sketch)]
    if not survivors:
        raise NoCandidateError(f"no codeword among {len(candidates)} candidates")
    if len(survivors) > 1:
        raise AmbiguousDecodeError(f"{len(survivors)} codewords survive; the sketch does not separate them",
                                   survivors)
    return survivors[0], trace


def _trivial_cases(received: Word, params: CodeParams, sketch: SketchProvider):
    tp = params.n - len(received)
    if not 0 <= tp <= params.t:
        raise ValueError(f"received length {len(received)} is not in [n-t, n] = [{params.n - params.t}, {params.n}]")
    if tp == 0:
        if not member_burst(received, params, sketch):
            raise NoCandidateError("intact-length word is not a codeword")
        return received, DecodeTrace(0, candidates_considered=1)
    if tp == 1:
        word, trace = _single_core(received, params.q, params.N, params.b)
        if not member_burst(word, params, sketch):
            raise NoCandidateError(f"single-deletion repair {word} is not a codeword")
        return word, trace
    return None


def decode_burst(received: Word, params: CodeParams, sketch: SketchProvider) -> tuple[Word, DecodeTrace]:
    """Correct one burst of at most t deletions."""
    _require_residues(params)
    done = _trivial_cases(received, params, sketch)
    if done is not None:
        return done
    trace = locate(received, params)
    cands = burst_error_preimages(received, params.n, trace.t_prime, trace.span)
    return _finish(cands, params, sketch, trace)


def decode_localized(received: Word, params: CodeParams, sketch: SketchProvider) -> tuple[Word, DecodeTrace]:
    """Correct one t-localized-deletion.

    Candidates replace a length-(t - t') piece of the received word by every
    length-t word, with the length-t window kept inside one length-P span
    that is guaranteed to contain all deleted positions.
    """
    _require_residues(params)
    done = _trivial_cases(received, params, sketch)
    if done is not None:
        return done
    trace = locate(received, params)
    cands = burst_error_preimages(received, params.n, params.t, trace.span)
    return _finish(cands, params, sketch, trace)


def decode(received: Word, params: CodeParams, sketch: SketchProvider | None = None) -> tuple[Word, DecodeTrace]:
    if params.mode == "single":
        return decode_single_traced(received, params)
    if params.mode == "localized":
        return decode_localized(received, params, sketch)
    return decode_burst(received, params, sketch)


# -- codebooks ---------------------------------------------------------------

@dataclass
class ResidueMap:
    """Per-word VT residue, weight residue and balance flag over all of Σ_q^n."""

    vt_res: np.ndarray
    c_res: np.ndarray
    balanced: np.ndarray

    def class_key(self, t: int) -> np.ndarray:
        return self.vt_res * (t + 1) + self.c_res


def residue_map(params: CodeParams, budget: int = EXHAUSTIVE_BUDGET) -> ResidueMap:
    q, n = params.q, params.n
    if q ** n > budget:
        raise BudgetExceededError(f"q^n = {q ** n} exceeds the exhaustive budget {budget}")
    idx = np.arange(1, n + 2, dtype=np.int64)
    vts, cs, bal = [], [], []
    for block in iter_word_blocks(q, n):
        y = psi_rows(block, q).astype(np.int64)
        vts.append((y @ idx) % params.N)
        cs.append((y.sum(axis=1) % params.sum_modulus) // q)
        if params.eps is None:
            bal.append(np.ones(block.shape[0], dtype=bool))
        else:
            bal.append(strong_balanced_mask(y, q, params.ell, params.eps))
    return ResidueMap(np.concatenate(vts), np.concatenate(cs), np.concatenate(bal))


def enumerate_codebook(params: CodeParams, sketch: SketchProvider | None = None,
                       budget: int = EXHAUSTIVE_BUDGET, rmap: ResidueMap | None = None) -> list[Word]:
    """All codewords, in lexicographic order."""
    _require_residues(params)
    rmap = residue_map(params, budget) if rmap is None else rmap
    ok = rmap.vt_res == params.b
    if params.mode != "single":
        ok &= (rmap.c_res == params.c) & rmap.balanced
    rows = index_to_rows(np.flatnonzero(ok), params.q, params.n)
    words = [Word(params.q, r.tobytes()) for r in rows]
    if params.mode == "single":
        return words
    return [w for w in words if _sketch_member(w, params, sketch)]


@dataclass
class BestCode:
    params: CodeParams
    sketch: SketchSet | None
    codebook: list[Word]
    classes_searched: int

    @property
    def redundancy_bits(self) -> float:
        return self.params.n * math.log2(self.params.q) - math.log2(len(self.codebook))


def best_residues(params: CodeParams, *, max_classes: int | None = None,
                  budget: int = EXHAUSTIVE_BUDGET) -> BestCode:
    """Residues giving the largest codebook, with greedy sketches per class.

    Residue classes (b, c) are visited from largest to smallest; inside a
    class the sketches are colorings restricted to that class, and the most
    popular color tuple wins. The search stops once no remaining class can
    beat the best codebook found, or after ``max_classes`` classes.
    """
    rmap = residue_map(params, budget)
    q, n = params.q, params.n
    if params.mode == "single":
        counts = np.bincount(rmap.vt_res, minlength=params.N)
        b = int(np.argmax(counts))
        p = params.with_residues(b)
        return BestCode(p, None, enumerate_codebook(p, rmap=rmap), 1)
    key = np.where(rmap.balanced, rmap.class_key(params.t), -1)
    sizes = np.bincount(key[key >= 0], minlength=params.N * (params.t + 1))
    order = sorted(np.flatnonzero(sizes), key=lambda k: (-sizes[k], k))
    best: BestCode | None = None
    searched = 0
    for k in order:
        if best is not None and sizes[k] <= len(best.codebook):
            break
        if max_classes is not None and searched >= max_classes:
            break
        searched += 1
        domain = np.flatnonzero(key == k)
        tables = SketchSet(build_greedy_sketch(q, n, params.P, t1, t2, domain=domain, budget=budget)
                           for _, t1, t2 in params.sketch_slots())
        slots = params.sketch_slots()
        colors = np.stack([tables.tables[(t1, t2)].values[domain] for _, t1, t2 in slots], axis=1) \
            if slots else np.zeros((domain.shape[0], 0), dtype=np.int32)
        tally = Counter(map(tuple, colors.tolist()))
        top = max(tally.values())
        pick = min(c for c, v in tally.items() if v == top)
        b, c = divmod(int(k), params.t + 1)
        p = params.with_residues(b, c, {tp: v for (tp, _, _), v in zip(slots, pick)})
        members = domain[np.all(colors == np.array(pick, dtype=np.int32), axis=1)] if slots else domain
        words = [Word(q, r.tobytes()) for r in index_to_rows(members, q, n)]
        if best is None or len(words) > len(best.codebook):
            best = BestCode(p, tables, words, searched)
    if best is None:
        raise NoCandidateError("no word satisfies the balance constraint")
    best.classes_searched = searched
    return best


def redundancy_bits(q: int, n: int, size: int) -> float:
    return n * math.log2(q) - math.log2(size)
