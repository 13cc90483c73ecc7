"""Acceptance criteria, one test each, reported as PASS/FAIL lines in the summary."""
import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from delcode import sblenc
from delcode.balance import iter_word_blocks, psi_rows, sweep_counting_lemma
from delcode.report import plot_redundancy, redundancy_curve, write_csv
from delcode.seqcore import (Word, apply_burst_deletion, apply_localized, burst_ball,
                             iter_localized_patterns, localized_ball, psi, vt)
from delcode.triples import (classify, classify_bruteforce, compute_M, compute_M_direct,
                             compute_M_loc, compute_M_loc_direct)
from delcode.vtcodes import best_residues, decode, decode_burst, decode_single_batch, derive_params

BURST_CONFIGS = [(2, 2, F(9, 20)), (2, 3, F(1, 10)), (3, 2, F(1, 4))]
ENCODER_EPS = {2: F(9, 20), 3: F(9, 10), 4: F(7, 5)}


def _sweep(best, t, localized):
    """Ball intersections, decode failures and trace violations over every error."""
    p, sk, book = best.params, best.sketch, best.codebook
    n = p.n
    owner, clashes = {}, 0
    for x in book:
        for r in (localized_ball(x, t) if localized else burst_ball(x, t)):
            if owner.setdefault(r, x) != x:
                clashes += 1
    fails = bad_trace = decodes = 0
    for x in book:
        if localized:
            errs = [(pt.positions(), apply_localized(x, pt)) for pt in iter_localized_patterns(n, t)]
            errs += [([i], apply_burst_deletion(x, i, 1)) for i in range(1, n + 1)]
        else:
            errs = [(list(range(i, i + L)), apply_burst_deletion(x, i, L))
                    for L in range(1, t + 1) for i in range(1, n - L + 2)]
        for pos, r in errs:
            decodes += 1
            try:
                got, tr = decode(r, p, sk)
            except Exception:
                fails += 1
                continue
            fails += got != x
            if not 0 <= tr.delta < p.N:
                bad_trace += 1
            elif localized and len(pos) > 1:
                bad_trace += not (tr.span[0] <= pos[0] and pos[-1] <= tr.span[1])
            else:
                bad_trace += not (tr.window[0] <= pos[0] <= tr.window[1])
    return clashes, fails, bad_trace, decodes


@pytest.mark.criterion("Worked-example fidelity")
def test_worked_example(record_property):
    start = time.perf_counter()
    x = Word.parse("0200", 3)
    received = apply_burst_deletion(x, 2, 2)
    p = derive_params(3, 2, F(1, 4), 4, "burst").with_residues(vt(psi(x)), 1, {2: 0})

    class Separates:
        def sketch(self, w, t1, t2):
            return 0 if w == x else 1
    got, tr = decode_burst(received, p, Separates())
    elapsed = time.perf_counter() - start
    record_property("detail", f"delta={tr.delta} delta_sum={tr.delta_sum} sigma_j={tr.sigma_j} j={tr.j} "
                              f"decoded={got}")
    assert str(received) == "00" and p.N == 28
    assert (tr.delta, tr.delta_sum, tr.sigma_j, tr.j) == (8, 3, 2, 2)
    assert got == x and elapsed < 1


@pytest.mark.criterion("Negative control")
def test_negative_control(record_property):
    x, z = Word.parse("0200", 3), Word.parse("0110", 3)
    common = burst_ball(x, 2) & burst_ball(z, 2)
    record_property("detail", f"VT={vt(psi(x))},{vt(psi(z))} shared={sorted(map(str, common))}")
    assert vt(psi(x)) == vt(psi(z)) == 8
    assert common


@pytest.mark.criterion("Single-deletion code, exhaustive")
def test_single_deletion_exhaustive(record_property):
    start = time.perf_counter()
    total = fails = 0
    for q in (2, 3, 4):
        for n in range(6, 11):
            N = (n + 1) * q
            idx = np.arange(1, n + 2, dtype=np.int64)
            for block in iter_word_blocks(q, n):
                # every word is a codeword for exactly one residue a, so this covers all a
                a = (psi_rows(block, q).astype(np.int64) @ idx) % N
                for i in range(n):
                    received = np.delete(block, i, axis=1)
                    xs, ok = decode_single_batch(received, q, N, a)
                    fails += int(np.count_nonzero(~ok | np.any(xs != block, axis=1)))
                    total += block.shape[0]
    elapsed = time.perf_counter() - start
    record_property("detail", f"{total} decodes, {fails} failures")
    assert fails == 0 and elapsed <= 60


@pytest.mark.criterion("Burst code, exhaustive")
def test_burst_exhaustive(record_property):
    start = time.perf_counter()
    rows = []
    totals = [0, 0, 0, 0]
    for q, t, eps in BURST_CONFIGS:
        for n in range(t + 2, 15):
            best = best_residues(derive_params(q, t, eps, n, "burst"))
            res = _sweep(best, t, localized=False)
            totals = [a + b for a, b in zip(totals, res)]
            rows.append((q, t, n, len(best.codebook)) + res)
    elapsed = time.perf_counter() - start
    record_property("detail", f"{len(rows)} codes, {totals[3]} decodes, intersections={totals[0]} "
                              f"failures={totals[1]} trace violations={totals[2]}")
    bad = [r for r in rows if any(r[4:7])]
    assert not bad, bad
    assert elapsed <= 600


@pytest.mark.criterion("Localized code, exhaustive")
def test_localized_exhaustive(record_property):
    start = time.perf_counter()
    rows = []
    for n in range(5, 15):
        best = best_residues(derive_params(2, 3, F(1, 10), n, "localized"))
        rows.append((n, len(best.codebook)) + _sweep(best, 3, localized=True))
    elapsed = time.perf_counter() - start
    decodes = sum(r[5] for r in rows)
    record_property("detail", f"n=5..14, {decodes} decodes, intersections={sum(r[2] for r in rows)} "
                              f"failures={sum(r[3] for r in rows)} trace violations={sum(r[4] for r in rows)}")
    assert not [r for r in rows if any(r[2:5])]
    assert elapsed <= 900


@pytest.mark.criterion("Good-triple/M/M' oracles")
def test_triple_oracles(record_property):
    start = time.perf_counter()
    points = good = mismatches = 0
    for q in range(2, 9):
        for t in range(2, 2 * q):
            for k in range(1, 500):
                eps = F(k, 1000)
                a, b = classify(q, t, eps), classify_bruteforce(q, t, eps)
                points += 1
                if a.is_good != b.is_good or a.s_table != b.s_table:
                    mismatches += 1
                    continue
                if not a.is_good:
                    continue
                good += 1
                mismatches += compute_M(a) != compute_M_direct(a)
                if t >= 3:
                    mismatches += compute_M_loc(a) != compute_M_loc_direct(a)
    elapsed = time.perf_counter() - start
    record_property("detail", f"{points} grid points, {good} good, {mismatches} mismatches")
    assert mismatches == 0 and elapsed <= 60


@pytest.mark.criterion("Counting lemma at feasible sizes")
def test_counting_lemma(record_property):
    reports = [r for q in (2, 3) for n in range(2, 15) for r in sweep_counting_lemma(q, n)]
    violations = sum(r["holds"] is False or r["holds_psi"] is False for r in reports)
    checked = sum(r["holds"] is not None for r in reports) + sum(r["holds_psi"] is not None for r in reports)
    record_property("detail", f"{checked} premise-holding checks (ell <= n), {violations} violations")
    assert checked > 0 and violations == 0


@pytest.mark.criterion("Encoder round trips")
def test_encoder(record_property):
    notes = []
    for q in (2, 3, 4):
        for n in (1000, 10000):
            p = sblenc.select_params(q, n, ENCODER_EPS[q])
            rng = random.Random(1000 * q + n)
            enc_time = 0.0
            for _ in range(1000):
                u = Word(q, bytes(rng.randrange(q) for _ in range(n - 2)))
                t0 = time.perf_counter()
                x = sblenc.encode(u, p)
                ok = sblenc.verify_codeword(x, p)
                enc_time += time.perf_counter() - t0
                assert ok, (q, n)
                assert len(x) - len(u) == 2 and sum(psi(x)) % q == 0
                assert sblenc.decode(x, p) == u
            notes.append(f"q={q} n={n} ell={p.ell} {enc_time:.1f}s")
            if n == 10000:
                assert enc_time <= 60
    record_property("detail", "; ".join(notes))


@pytest.mark.criterion("Redundancy curve")
def test_redundancy_curve(record_property, tmp_path_factory):
    rows = redundancy_curve(2, 2, F(9, 20), range(8, 15))
    out = tmp_path_factory.mktemp("redundancy")
    write_csv(rows, out / "redundancy.csv")
    plot_redundancy(rows, out / "redundancy.png")
    gaps = [r["redundancy_bits"] - math.log2(r["n"]) for r in rows]
    record_property("detail", " ".join(f"n={r['n']}:{r['redundancy_bits']:.2f}b" for r in rows)
                    + f" max|gap|={max(map(abs, gaps)):.2f}")
    assert all(abs(g) <= 8 for g in gaps)
