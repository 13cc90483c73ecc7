"""Good-triple classification and the localization constants M and M'.

Everything is exact-rational; the defining interval I_{t'} is open, so a
value of eps sitting exactly on a bound is *not* good.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .balance import as_fraction
from .errors import NotAGoodTripleError

F = Fraction


@dataclass(frozen=True)
class GoodTripleCert:
    q: int
    t: int
    eps: Fraction
    is_good: bool
    reason: str = ""
    s_table: dict[int, int] = field(default_factory=dict)
    M: Fraction | None = None
    M_loc: Fraction | None = None

    @property
    def delta(self) -> int:
        return self.t % 2

    @property
    def t1(self) -> int:
        """Largest odd value <= t (t - 1 + delta)."""
        return self.t - 1 + self.delta

    @property
    def t2(self) -> int:
        """Largest even value <= t (t - delta)."""
        return self.t - self.delta

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "t": self.t,
            "eps": str(self.eps),
            "is_good": self.is_good,
            "reason": self.reason,
            "t1": self.t1,
            "t2": self.t2,
            "s_table": {str(k): v for k, v in sorted(self.s_table.items())},
            "M": None if self.M is None else str(self.M),
            "M_float": None if self.M is None else float(self.M),
            "M_loc": None if self.M_loc is None else str(self.M_loc),
            "M_loc_float": None if self.M_loc is None else float(self.M_loc),
        }


def interval_bounds(q: int, tp: int, eps: Fraction) -> tuple[Fraction, Fraction]:
    """Endpoints of the open interval I_{t'}."""
    lo = F(tp, 2) - (1 - 2 * eps) * tp / (2 * q)
    hi = F(tp, 2) + 1 - (1 + 2 * eps) * tp / (2 * q)
    return lo, hi


def _range_reason(q: int, t: int, eps: Fraction) -> str:
    if q < 2 or t < 2:
        return "q and t must be at least 2"
    if not 0 < eps < min(F(q, 2 * t), F(1, 2)):
        return "eps outside (0, min{q/(2t), 1/2})"
    return ""


def _s_value(q: int, tp: int) -> int:
    return math.ceil(tp / 2) if tp <= q else tp // 2


def _with_constants(cert: GoodTripleCert) -> GoodTripleCert:
    if not cert.is_good:
        return cert
    m = compute_M(cert)
    m_loc = compute_M_loc(cert) if cert.t >= 3 else None
    return GoodTripleCert(cert.q, cert.t, cert.eps, True, cert.reason,
                          cert.s_table, m, m_loc)


def classify(q: int, t: int, eps) -> GoodTripleCert:
    """Decide goodness from the closed-form conditions (i)/(ii)."""
    eps = as_fraction(eps)
    reason = _range_reason(q, t, eps)
    if reason:
        return GoodTripleCert(q, t, eps, False, reason)
    delta = t % 2
    t1, t2 = t - 1 + delta, t - delta
    if q > t:
        good = eps < min(F(q, 2 * t1) - F(1, 2), F(q, 2 * t), F(1, 2))
        reason = "" if good else "case q > t: eps >= q/(2 t1) - 1/2"
    elif q % 2:
        good, reason = False, "t >= q requires q even"
    elif t == q:
        good = eps < F(1, 2 * (q - 1))
        reason = "" if good else "case t = q: eps >= 1/(2(q-1))"
    elif t < 2 * q:
        good = eps < min(F(q, 2 * t), F(q, t2) - F(1, 2), F(1, 2 * (q + 1)))
        reason = "" if good else "case q < t < 2q: eps too large"
    else:
        good, reason = False, "t >= 2q"
    if not good:
        return GoodTripleCert(q, t, eps, False, reason)
    s_table = {tp: _s_value(q, tp) for tp in range(2, t + 1)}
    return _with_constants(GoodTripleCert(q, t, eps, True, "", s_table))


def classify_bruteforce(q: int, t: int, eps) -> GoodTripleCert:
    """Decide goodness by testing every integer of [1, t'] against I_{t'}."""
    eps = as_fraction(eps)
    reason = _range_reason(q, t, eps)
    if reason:
        return GoodTripleCert(q, t, eps, False, reason)
    s_table = {}
    for tp in range(2, t + 1):
        lo, hi = interval_bounds(q, tp, eps)
        inside = [s for s in range(1, tp + 1) if lo < s < hi]
        if len(inside) != 1:
            if not inside:
                return GoodTripleCert(q, t, eps, False, f"I_{tp} contains no integer")
            raise AssertionError(f"I_{tp} contains {len(inside)} integers")
        s_table[tp] = inside[0]
    return _with_constants(GoodTripleCert(q, t, eps, True, "", s_table))


def _require_good(cert: GoodTripleCert) -> None:
    if not cert.is_good:
        raise NotAGoodTripleError(f"({cert.q}, {cert.t}, {cert.eps}) is not a good triple: {cert.reason}")


def burst_terms(cert: GoodTripleCert, tp: int) -> tuple[Fraction, Fraction]:
    """(f(t'), g(t')) whose maximum over t' defines M."""
    q, eps, s = cert.q, cert.eps, cert.s_table[tp]
    num = F(tp * (tp + 1) * (q - 1))
    f = num / (2 * s * q - tp * (q - 1 + 2 * eps))
    g = num / (tp * (q - 1 - 2 * eps) - 2 * (s - 1) * q)
    return f, g


def localized_terms(cert: GoodTripleCert, tp: int) -> tuple[Fraction, Fraction]:
    """(f(t'), g(t')) whose maximum over t' defines M'."""
    q, t, eps, s = cert.q, cert.t, cert.eps, cert.s_table[tp]
    h = F((q + 1) * tp * tp + ((4 * q - 2) * t + q - 1) * tp - 2 * q * t)
    f = h / (2 * s * q - (q - 1 + 2 * eps) * tp)
    g = h / ((q - 1 - 2 * eps) * tp - 2 * (s - 1) * q)
    return f, g


def compute_M_direct(cert: GoodTripleCert) -> Fraction:
    _require_good(cert)
    return max(max(burst_terms(cert, tp)) for tp in range(2, cert.t + 1))


def compute_M(cert: GoodTripleCert) -> Fraction:
    """Closed form of M for a good triple."""
    _require_good(cert)
    q, t, eps = cert.q, cert.t, cert.eps
    t1, t2 = cert.t1, cert.t2
    if q > t:
        return max(F((t2 + 1) * (q - 1)) / (1 - 2 * eps),
                   F(t1 * (t1 + 1) * (q - 1)) / (q - (1 + 2 * eps) * t1))
    if t == q == 2:
        return F(3) / (1 - 2 * eps)
    if t == q:
        return F(q ** 3 - 2 * q ** 2 + q) / (1 - 2 * eps * (q - 1))
    if q == 2 and t == 3:
        return F(12) / (1 - 6 * eps)
    base = F((q * q - 1) * (q + 2)) / (1 - 2 * eps * (q + 1))
    if t2 <= q:
        return base
    # For even t' > q the g-term grows like 1/(2q - (1+2eps)t') and can
    # overtake the odd q+1 term once t2 approaches 2q (first at q = 8).
    g_t2 = F((q - 1) * t2 * (t2 + 1)) / (2 * q - (1 + 2 * eps) * t2)
    return max(base, g_t2)


def compute_M_lemma(cert: GoodTripleCert) -> Fraction:
    """The published closed form for M, kept for comparison with compute_M.

    It omits the even-t' g-term and undershoots M for q >= 8, t >= 2q - 2.
    """
    _require_good(cert)
    q, t, eps = cert.q, cert.t, cert.eps
    if q > t or t == q or (q == 2 and t == 3):
        return compute_M(cert)
    return F((q * q - 1) * (q + 2)) / (1 - 2 * eps * (q + 1))


def compute_M_loc_direct(cert: GoodTripleCert) -> Fraction:
    _require_good(cert)
    if cert.t < 3:
        raise ValueError("M' is defined for t >= 3")
    return max(max(localized_terms(cert, tp)) for tp in range(2, cert.t + 1))


def compute_M_loc(cert: GoodTripleCert) -> Fraction:
    """Closed form of M' (t >= 3)."""
    _require_good(cert)
    if cert.t < 3:
        raise ValueError("M' is defined for t >= 3")
    q, t = cert.q, cert.t
    f_t2 = localized_terms(cert, cert.t2)[0]
    g_t1 = localized_terms(cert, cert.t1)[1]
    if q >= t:
        return max(f_t2, g_t1)
    return max(f_t2, g_t1, localized_terms(cert, q + 1)[0])
