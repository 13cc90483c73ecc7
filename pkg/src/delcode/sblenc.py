"""Two-redundancy encoder into words with strong-locally-balanced psi.

Stage 1 turns u = psi(x') (length n-1) into a length-n word all of whose
length-m windows have weight deviation at most 2*eta1*m. Stage 2 appends
one symbol making the weight divisible by q, and psi^{-1} gives x.

Stage 1 layout. Let dev(w) = 2*weight(w) - (q-1)*|w|. A block is *tame*
when every prefix has |dev| <= delta, and a length-m word is *bad* when it
is not tame. The working word is

    D . R_1 . R_2 ... R_r . z

where D is what remains of the input, each R_k is a tame length-m record
and z (one symbol) is 1 iff at least one record exists. While D contains
a bad length-m window, the leftmost one is cut out of D at offset p and a
record carrying (older-record flag, p, rank of the window among bad
words) is placed just before z. If the loop leaves 0 < |D| < m symbols
behind, D and R_1 are merged into a single tame block of length |D| + m.
Every length-m window then has |dev| <= max(3*delta, 2*delta + q - 1),
which delta is chosen to keep inside the band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .balance import (BalanceSpec, PrefixBoundedClass, WindowSpec, as_fraction,
                      is_strong_locally_balanced, is_window_bounded, prefix_bounded_fractions)
from .errors import InfeasibleParamsError, MalformedCodewordError, WeightNotDivisibleError
from .seqcore import Word, psi, psi_inverse

F = Fraction


@dataclass(frozen=True)
class EncoderParams:
    q: int
    n: int
    eps: Fraction
    eta1: Fraction
    eta2: Fraction
    s: int
    ell: int
    ell1: int
    delta: int

    @property
    def m(self) -> int:
        return self.ell1

    @property
    def k(self) -> int:
        """m - 3 - ceil(log_q n): the payload width used in the feasibility bound."""
        return self.ell1 - 3 - _ceil_log(self.q, self.n)

    @property
    def C(self) -> float:
        """Measured exponent bound: ell / log_q n."""
        return self.ell / math.log(self.n, self.q)

    @property
    def window(self) -> WindowSpec:
        return WindowSpec.from_eps(self.q, self.ell1, self.eta1)

    @property
    def balance(self) -> BalanceSpec:
        return BalanceSpec(self.q, self.ell, self.eps)

    @property
    def stage1_balance(self) -> BalanceSpec:
        return BalanceSpec(self.q, self.ell - 1, self.eta2)

    def check(self) -> None:
        """Raise InfeasibleParamsError unless every construction constraint holds."""
        for problem in _violations(self):
            raise InfeasibleParamsError(problem)

    def to_json(self) -> dict:
        return {
            "schema": 1, "q": self.q, "n": self.n, "eps": str(self.eps),
            "eta1": str(self.eta1), "eta2": str(self.eta2), "s": self.s,
            "ell": self.ell, "ell1": self.ell1, "delta": self.delta,
            "k": self.k, "C": round(self.C, 6),
        }

    @classmethod
    def from_json(cls, data: dict) -> "EncoderParams":
        p = cls(data["q"], data["n"], as_fraction(data["eps"]), as_fraction(data["eta1"]),
                as_fraction(data["eta2"]), data["s"], data["ell"], data["ell1"], data["delta"])
        p.check()
        return p


def _ceil_log(q: int, n: int) -> int:
    k = 0
    while q ** k < n:
        k += 1
    return k


def bridge_eta2(q: int, eta1, s: int) -> Fraction:
    """Smallest eta2 the window-to-strong bridge allows for (eta1, s)."""
    eta1 = as_fraction(eta1)
    return eta1 - eta1 ** 2 / ((q - 1) * s) + F(q - 1, 4 * s)


def tame_delta(q: int, m: int, eta1) -> int:
    """Largest prefix bound keeping every window of the layout inside the band."""
    band = 2 * as_fraction(eta1) * m
    return math.floor(min(band / 3, (band - (q - 1)) / 2))


def _layout_feasible_exact(q: int, n: int, m: int, delta: int) -> bool:
    if delta < 0:
        return False
    cls = PrefixBoundedClass(q, m, delta)
    bad = cls.complement_size
    longest = PrefixBoundedClass(q, 2 * m - 1, delta)
    return cls.size >= 2 * n * bad and n * bad * q ** (m - 1) <= longest.size


def _layout_feasible_float(q: int, n: int, m: int, delta: int) -> bool:
    if delta < 0:
        return False
    frac = prefix_bounded_fractions(q, delta, 2 * m - 1)
    bad = 1.0 - frac[m]
    return frac[m] >= 2 * n * bad * (1 + 1e-9) and frac[2 * m - 1] >= n * bad * (1 + 1e-9)


@lru_cache(maxsize=512)
def smallest_window(q: int, n: int, eta1: Fraction, m_max: int, exact: bool = True) -> int | None:
    """Smallest m >= the lower bound whose record layout fits, or None.

    A float DP brackets the answer; with ``exact`` the result is then
    confirmed (and bumped if needed) with exact integer counts.
    """
    lo = max(2 * q * q - 1, math.ceil(float((q - 1) ** 2 / eta1 ** 2) * math.log(n)))
    if lo > m_max:
        return None

    def ok(m):
        return _layout_feasible_float(q, n, m, tame_delta(q, m, eta1))

    hi = lo
    while not ok(hi):
        if hi >= m_max:
            return None
        hi = min(m_max, 2 * hi)
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    m = lo
    while exact and m <= m_max and not _layout_feasible_exact(q, n, m, tame_delta(q, m, eta1)):
        m += 1
    return m if m <= m_max else None


def _violations(p: EncoderParams) -> list[str]:
    q = p.q
    half = F(q - 1, 2)
    out = []
    if not 0 < p.eta1 < half or not 0 < p.eta2 < p.eps < half:
        out.append("need 0 < eta1 < (q-1)/2 and 0 < eta2 < eps < (q-1)/2")
    if bridge_eta2(q, p.eta1, p.s) > p.eta2:
        out.append("bridge constraint eta1 - eta1^2/((q-1)s) + (q-1)/(4s) <= eta2 fails")
    if (p.eps - p.eta2) * (p.ell - 1) < half - p.eta2:
        out.append("extension constraint (eps - eta2)(ell - 1) >= (q-1)/2 - eta2 fails")
    if p.ell - 1 < p.s * p.ell1:
        out.append("ell - 1 must be at least s * ell1")
    lower = max(2 * q * q - 1, float((q - 1) ** 2 / p.eta1 ** 2) * math.log(p.n))
    if p.ell1 < lower:
        out.append(f"ell1={p.ell1} below max(2q^2-1, (q-1)^2/eta1^2 ln n) = {lower:.2f}")
    if p.ell1 > p.n - 1:
        out.append("window longer than the stage-1 input")
    if p.delta != tame_delta(q, p.ell1, p.eta1) or not _layout_feasible_exact(q, p.n, p.ell1, p.delta):
        out.append("record layout does not fit at this window length")
    if p.k <= 0:
        out.append("k = m - 3 - ceil(log_q n) must be positive")
    return out


@lru_cache(maxsize=128)
def select_params(q: int, n: int, eps) -> EncoderParams:
    """Scan a rational grid of (eta1, s); the smallest feasible ell wins."""
    eps = as_fraction(eps)
    half = F(q - 1, 2)
    if not 0 < eps < half:
        raise InfeasibleParamsError(f"eps={eps} outside (0, (q-1)/2)")
    if n < 2 * q ** 3:
        raise InfeasibleParamsError(f"n={n} is below 2q^3={2 * q ** 3}")
    found = []
    for k in range(1, 40):
        eta1 = half * F(k, 40)
        m = smallest_window(q, n, eta1, n - 1, exact=False)
        if m is None:
            continue
        for s in range(1, 17):
            eta2 = bridge_eta2(q, eta1, s)
            if 0 < eta2 < eps and (eps - eta2) * s * m >= half - eta2:
                found.append((s * m + 1, s, eta1, eta2))
                break
    for _, s, eta1, eta2 in sorted(found):
        m = smallest_window(q, n, eta1, n - 1)
        if m is None:
            continue
        cand = EncoderParams(q, n, eps, eta1, eta2, s, s * m + 1, m, tame_delta(q, m, eta1))
        if not _violations(cand):
            return cand
    raise InfeasibleParamsError(f"no feasible (eta1, eta2, s) for q={q}, n={n}, eps={eps}")


# -- stage 1 -----------------------------------------------------------------

def _first_bad_window(D: bytearray, start: int, m: int, q: int, delta: int) -> int | None:
    """Leftmost offset >= start of a length-m window of D that is not tame."""
    if len(D) - start < m:
        return None
    sym = np.frombuffer(bytes(D[start:]), dtype=np.uint8).astype(np.int64)
    dev = np.concatenate(([0], np.cumsum(2 * sym - (q - 1))))
    windows = sliding_window_view(dev[1:], m)
    base = dev[: windows.shape[0]]
    bad = (windows.max(axis=1) - base > delta) | (base - windows.min(axis=1) > delta)
    hits = np.flatnonzero(bad)
    return None if hits.size == 0 else start + int(hits[0])


def _digits(value: int, q: int, length: int) -> bytes:
    out = bytearray(length)
    for i in range(length - 1, -1, -1):
        value, out[i] = divmod(value, q)
    if value:
        raise ValueError("value does not fit")
    return bytes(out)


def _number(sym: bytes, q: int) -> int:
    v = 0
    for s in sym:
        v = v * q + s
    return v


def encode_stage1(u: Word, params: EncoderParams) -> Word:
    q, n, m, delta = params.q, params.n, params.ell1, params.delta
    if len(u) != n - 1 or u.q != q:
        raise ValueError(f"stage-1 input must be a q={q} word of length {n - 1}")
    tame = PrefixBoundedClass(q, m, delta)
    nbad = tame.complement_size
    D = bytearray(u.symbols)
    cuts: list[tuple[int, bytes]] = []
    start = 0
    while True:
        p = _first_bad_window(D, start, m, q, delta)
        if p is None:
            break
        cuts.append((p, bytes(D[p:p + m])))
        del D[p:p + m]
        start = max(0, p - m + 1)
    if not cuts:
        return Word(q, bytes(D) + b"\x00")
    blocks = []
    for idx, (p, w) in enumerate(cuts):
        flag = 1 if idx else 0
        blocks.append(tame.unrank((flag * n + p) * nbad + tame.rank_complement(w)))
    if len(D) >= m:
        body = bytes(D) + b"".join(blocks)
    else:
        lam = len(D)
        p0, w0 = cuts[0]
        merged = PrefixBoundedClass(q, lam + m, delta)
        value = (p0 * nbad + tame.rank_complement(w0)) * q ** lam + _number(bytes(D), q)
        body = merged.unrank(value) + b"".join(blocks[1:])
    return Word(q, body + b"\x01")


def _stage1_unwind(v: bytes, params: EncoderParams) -> bytes:
    q, n, m, delta = params.q, params.n, params.ell1, params.delta
    tame = PrefixBoundedClass(q, m, delta)
    nbad = tame.complement_size
    z, body = v[-1], v[:-1]
    if z == 0:
        return body
    if z != 1:
        raise MalformedCodewordError(f"control symbol {z} is neither 0 nor 1")
    cuts = []
    more = True
    while more:
        if len(body) < 2 * m:
            lam = len(body) - m
            if lam < 0:
                raise MalformedCodewordError("too short for the announced records")
            merged = PrefixBoundedClass(q, len(body), delta)
            if not merged.contains(body):
                raise MalformedCodewordError("merged tail block is not tame")
            rest, dval = divmod(merged.rank(body), q ** lam)
            p, rb = divmod(rest, nbad)
            if p >= n:
                raise MalformedCodewordError("pointer out of range in merged block")
            cuts.append((p, tame.unrank_complement(rb)))
            body = _digits(dval, q, lam)
            more = False
        else:
            block = body[-m:]
            if not tame.contains(block):
                raise MalformedCodewordError("record block is not tame")
            fp, rb = divmod(tame.rank(block), nbad)
            flag, p = divmod(fp, n)
            if flag > 1:
                raise MalformedCodewordError("record flag out of range")
            cuts.append((p, tame.unrank_complement(rb)))
            body = body[:-m]
            more = flag == 1
    D = bytearray(body)
    for p, w in cuts:
        if p > len(D):
            raise MalformedCodewordError("pointer beyond the data segment")
        D[p:p] = w
    return bytes(D)


def decode_stage1(v: Word, params: EncoderParams) -> Word:
    """Invert encode_stage1; anything it could not have produced is rejected."""
    if len(v) != params.n or v.q != params.q:
        raise MalformedCodewordError(f"stage-1 codewords have length {params.n}")
    try:
        u = Word(params.q, _stage1_unwind(v.symbols, params))
    except ValueError as exc:
        raise MalformedCodewordError(str(exc)) from exc
    if len(u) != params.n - 1 or encode_stage1(u, params) != v:
        raise MalformedCodewordError("word is not in the image of the stage-1 encoder")
    return u


# -- stage 2 and the full encoder -------------------------------------------

def encode_stage2(y_prime: Word, params: EncoderParams | None = None) -> Word:
    """Append a = (q - Sum(y')) mod q so the weight becomes divisible by q."""
    q = y_prime.q
    a = (q - sum(y_prime.symbols)) % q
    return Word(q, y_prime.symbols + bytes((a,)))


def encode(data: Word, params: EncoderParams) -> Word:
    """Length n-2 input to a length-n word whose psi is strong-(ell, eps)-balanced."""
    if len(data) != params.n - 2 or data.q != params.q:
        raise ValueError(f"input must be a q={params.q} word of length {params.n - 2}")
    y = encode_stage2(encode_stage1(psi(data), params), params)
    return psi_inverse(y)


def decode(x: Word, params: EncoderParams) -> Word:
    if len(x) != params.n or x.q != params.q:
        raise MalformedCodewordError(f"codewords have length {params.n}")
    y = psi(x)
    u = decode_stage1(y[:-1], params)
    try:
        return psi_inverse(u)
    except WeightNotDivisibleError as exc:
        raise MalformedCodewordError("stage-1 payload is not a differential sequence") from exc


def verify_codeword(x: Word, params: EncoderParams) -> bool:
    """psi(x) strong-(ell, eps)-balanced with weight divisible by q."""
    y = psi(x)
    return sum(y.symbols) % params.q == 0 and is_strong_locally_balanced(y, params.balance)


def verify_stage1(v: Word, params: EncoderParams) -> bool:
    return is_window_bounded(v, params.window)
