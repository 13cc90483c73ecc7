import math
from collections import Counter
from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delcode import BudgetExceededError
from delcode.balance import (BalanceSpec, PrefixBoundedClass, WindowSpec, check_counting_lemma,
                             count_forbidden, count_last_window_bad, count_strong_balanced,
                             count_weight_bounded, is_strong_locally_balanced,
                             is_strong_locally_balanced_naive, is_window_bounded, iter_word_blocks,
                             p1, p2, prefix_bounded_fractions, rank_in_weight_class,
                             strong_balanced_mask, unrank_in_weight_class, weight_distribution)
from delcode.sblenc import bridge_eta2
from delcode.seqcore import Word


def W(text, q=2):
    return Word.parse(text, q)


def test_band_endpoints():
    assert p1(2, F(1, 4)) == F(1, 4) and p2(2, F(1, 4)) == F(3, 4)
    assert p1(3, F(1, 2)) == F(1, 2) and p2(3, F(1, 2)) == F(3, 2)


def test_spec_validation():
    with pytest.raises(ValueError):
        BalanceSpec(2, 4, F(1, 2))
    with pytest.raises(ValueError):
        BalanceSpec(2, 0, F(1, 4))
    with pytest.raises(ValueError):
        WindowSpec(2, 4, 3, 5)


class TestPredicates:
    def test_example_word(self):
        x = W("110111")
        assert not is_strong_locally_balanced(x, BalanceSpec(2, 4, F(1, 4)))
        assert is_window_bounded(x, WindowSpec(2, 4, 1, 3))

    def test_short_word_is_balanced(self):
        assert is_strong_locally_balanced(W("111"), BalanceSpec(2, 4, F(1, 4)))

    def test_alternating(self):
        assert is_strong_locally_balanced(W("01" * 10), BalanceSpec(2, 2, F(1, 4)))

    def test_window_bounded_examples(self):
        assert not is_window_bounded(W("000000"), WindowSpec(2, 4, 1, 3))
        assert is_window_bounded(W("0101"), WindowSpec(2, 4, 2, 2))

    @settings(max_examples=300)
    @given(st.integers(2, 4), st.lists(st.integers(0, 3), max_size=30), st.integers(1, 12),
           st.integers(1, 39))
    def test_fast_check_matches_definition(self, q, raw, ell, k):
        eps = F(k, 40) * F(q - 1, 2)
        x = Word(q, bytes(s % q for s in raw))
        spec = BalanceSpec(q, ell, eps)
        assert is_strong_locally_balanced(x, spec) == is_strong_locally_balanced_naive(x, spec)

    @pytest.mark.parametrize("q,n,ell,eps", [(2, 10, 3, F(1, 5)), (3, 7, 2, F(1, 3)), (2, 12, 5, F(9, 20))])
    def test_mask_matches_scalar(self, q, n, ell, eps):
        spec = BalanceSpec(q, ell, eps)
        for block in iter_word_blocks(q, n):
            mask = strong_balanced_mask(block, q, ell, eps)
            for row, ok in zip(block[::37], mask[::37]):
                assert ok == is_strong_locally_balanced(row.tobytes(), spec)

    @given(st.lists(st.integers(0, 2), min_size=8, max_size=24), st.integers(2, 6), st.integers(1, 19))
    def test_strong_implies_window_bounded(self, raw, ell, k):
        q, eps = 3, F(k, 20)
        x = Word(q, bytes(raw))
        if is_strong_locally_balanced(x, BalanceSpec(q, ell, eps)):
            for m in range(ell, len(x) + 1):
                assert is_window_bounded(x, WindowSpec.from_eps(q, m, eps))


class TestWeightClasses:
    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_counts_match_enumeration(self, q):
        for m in range(0, 9 if q < 4 else 8):
            hist = Counter(sum(s) for s in product(range(q), repeat=m))
            top = m * (q - 1)
            assert list(weight_distribution(q, m)) == [hist[w] for w in range(top + 1)]
            for a in range(top + 1):
                for b in range(a, top + 1):
                    assert count_weight_bounded(q, m, (a, b)) == sum(hist[w] for w in range(a, b + 1))

    def test_examples(self):
        assert count_weight_bounded(2, 4, (1, 3)) == 14
        assert count_weight_bounded(3, 5, (0, 10)) == 3 ** 5
        assert count_weight_bounded(3, 2, (2, 2)) == 3
        assert rank_in_weight_class(W("0001"), 2, (1, 3)) == 0
        assert unrank_in_weight_class(13, 2, 4, (1, 3)) == W("1110")

    @pytest.mark.parametrize("q,m,iv", [(2, 6, (2, 4)), (3, 4, (3, 5)), (4, 3, (0, 9))])
    def test_rank_is_lexicographic_bijection(self, q, m, iv):
        members = [Word(q, bytes(s)) for s in product(range(q), repeat=m) if iv[0] <= sum(s) <= iv[1]]
        for r, w in enumerate(members):
            assert rank_in_weight_class(w, q, iv) == r
            assert unrank_in_weight_class(r, q, m, iv) == w

    def test_rank_errors(self):
        with pytest.raises(ValueError):
            rank_in_weight_class(W("0000"), 2, (1, 3))
        with pytest.raises(ValueError):
            unrank_in_weight_class(14, 2, 4, (1, 3))

    @given(st.integers(2, 5), st.data())
    def test_round_trip_random_members(self, q, data):
        m = data.draw(st.integers(1, 40))
        word = data.draw(st.lists(st.integers(0, q - 1), min_size=m, max_size=m))
        w = sum(word)
        iv = (max(0, w - 3), w + 2)
        r = rank_in_weight_class(word, q, iv)
        assert unrank_in_weight_class(r, q, m, iv).tolist() == word


class TestPrefixBounded:
    @pytest.mark.parametrize("q,L,delta", [(2, 8, 2), (3, 6, 3), (4, 5, 4), (2, 7, 0)])
    def test_exhaustive_rank_and_complement(self, q, L, delta):
        cls = PrefixBoundedClass(q, L, delta)
        inside, outside = [], []
        for s in product(range(q), repeat=L):
            devs = np.cumsum([2 * v - (q - 1) for v in s])
            (inside if np.all(np.abs(devs) <= delta) else outside).append(bytes(s))
        assert cls.size == len(inside) and cls.complement_size == len(outside)
        for r, w in enumerate(inside):
            assert cls.contains(w) and cls.rank(w) == r and cls.unrank(r) == w
        for r, w in enumerate(outside):
            assert not cls.contains(w) and cls.rank_complement(w) == r and cls.unrank_complement(r) == w

    def test_fractions_match_counts(self):
        fr = prefix_bounded_fractions(3, 4, 20)
        for L in (0, 5, 20):
            assert fr[L] == pytest.approx(PrefixBoundedClass(3, L, 4).size / 3 ** L, rel=1e-12)


def _window_bounded_mask(block, m, a, b):
    s = np.zeros((block.shape[0], block.shape[1] + 1), dtype=np.int64)
    np.cumsum(block, axis=1, out=s[:, 1:])
    w = s[:, m:] - s[:, :-m]
    return np.all((w >= a) & (w <= b), axis=1)


@pytest.mark.parametrize("q,n", [(2, 12), (3, 9)])
def test_bridge_exhaustive(q, n):
    """Window-bounded at ell1 with eta1 implies strong balance at s*ell1 with eta2."""
    checked = 0
    for ell1 in (2, 3, 4):
        for s in (1, 2, 3):
            if s * ell1 > n:
                continue
            for k in range(1, 10):
                eta1 = F(q - 1, 2) * F(k, 10)
                eta2 = bridge_eta2(q, eta1, s)
                if not eta2 < F(q - 1, 2):
                    continue
                lo, hi = math.ceil(p1(q, eta1) * ell1), math.floor(p2(q, eta1) * ell1)
                if lo > hi:
                    continue
                for block in iter_word_blocks(q, n):
                    src = _window_bounded_mask(block.astype(np.int64), ell1, lo, hi)
                    dst = strong_balanced_mask(block[src], q, s * ell1, eta2)
                    assert dst.all()
                    checked += int(src.sum())
    assert checked > 0


@pytest.mark.parametrize("q,n", [(2, 9), (3, 6)])
def test_extension_exhaustive(q, n):
    """One extra symbol at either end keeps strong balance at the wider window."""
    half = F(q - 1, 2)
    for m in range(2, n + 1):
        for k in range(1, 8):
            eps1 = half * F(k, 8)
            eps2 = eps1 + (half - eps1) / m
            if eps2 >= half:
                continue
            for block in iter_word_blocks(q, n - 1):
                base = block[strong_balanced_mask(block, q, m - 1, eps1)]
                for sym in range(q):
                    col = np.full((base.shape[0], 1), sym, dtype=base.dtype)
                    assert strong_balanced_mask(np.hstack([base, col]), q, m, eps2).all()
                    assert strong_balanced_mask(np.hstack([col, base]), q, m, eps2).all()


class TestCountingLemma:
    def test_vacuous_window(self):
        assert count_strong_balanced(2, 8, 9, F(1, 10)) == 2 ** 8

    def test_formula_window(self):
        eps = F(9, 20)
        ell = math.ceil(float(1 / eps ** 2) * math.log(2 * 12 * math.sqrt(2)))
        rep = check_counting_lemma(2, 12, ell, eps, 2)
        assert rep["premise"] and rep["holds"] and rep["count"] == 2 ** 12

    def test_ternary(self):
        rep = check_counting_lemma(3, 8, 8, F(99, 100), 1)
        assert rep["premise"] is False and rep["holds"] is None
        assert rep["count"] <= 3 ** 8

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            count_strong_balanced(3, 20, 4, F(1, 2))


def test_proposition_window_count():
    """At least q^(m-1) length-m words sit inside the band once m is large enough."""
    for q in (2, 3, 4):
        for k in range(4, 20):
            eps0 = F(q - 1, 2) * F(k, 20)
            c = float((q - 1) ** 2 / eps0 ** 2)
            for m in range(2, 120):
                if m >= max(2 * q / (q - 1), c * math.log(m)):
                    ws = WindowSpec.from_eps(q, m, eps0)
                    assert count_weight_bounded(q, m, (ws.a, ws.b)) >= q ** (m - 1)


def test_proposition_forbidden_count():
    """|F(m, eps0)| <= q^(m - 3 - ceil(log_q n)) across the admissible m range."""
    for q in (2, 3, 4):
        for n in (2 * q ** 3, 1000, 10 ** 4):
            logn = math.ceil(math.log(n, q) - 1e-12)
            for k in range(6, 20):
                eps0 = F(q - 1, 2) * F(k, 20)
                lo = math.ceil(float((q - 1) ** 2 / eps0 ** 2) * math.log(n))
                for m in range(lo, lo + 10):
                    assert count_forbidden(q, m, eps0) <= q ** (m - 3 - logn)


def test_proposition_last_window():
    for q in (2, 3):
        for k in range(6, 20):
            eps0 = F(q - 1, 2) * F(k, 20)
            c = float((q - 1) ** 2 / eps0 ** 2)
            for m in range(3, 80):
                if m >= max(2 * q * q - 1, c * math.log(m - 2) + 2):
                    assert count_last_window_bad(q, m, eps0) <= q ** (m - 3)
