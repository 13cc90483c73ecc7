"""Command-line entry point: ``delcode <command> ...``.

Exit codes: 0 success, 2 invariant violation or failed decode, 3 budget
exceeded, 4 I/O problem. JSON reports carry ``"schema": 1``.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import sblenc
from .balance import EXHAUSTIVE_BUDGET, as_fraction, sweep_counting_lemma
from .errors import BudgetExceededError, DecodeError, DelcodeError
from .report import plot_redundancy, redundancy_curve, write_csv
from .seqcore import (LocalizedPattern, Word, apply_burst_deletion, apply_localized,
                      burst_ball, format_word, localized_ball, psi, read_words)
from .sketch import SketchSet, SketchTable, build_greedy_sketch
from .triples import (classify, classify_bruteforce, compute_M, compute_M_direct,
                      compute_M_loc, compute_M_loc_direct)
from .vtcodes import (CodeParams, best_residues, decode, derive_params, enumerate_codebook,
                      residue_map)

EXIT_OK, EXIT_INVARIANT, EXIT_BUDGET, EXIT_IO = 0, 2, 3, 4
GENERATOR = "python-random-mt19937"


class InvariantViolation(Exception):
    pass


def _emit(obj, out=None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _threads() -> int:
    # exhaustive jobs run in-process; the variable is read for reporting only
    try:
        return max(1, int(os.environ.get("DELCODE_THREADS", "1")))
    except ValueError:
        return 1


# -- code files: params JSON plus one binary sketch table per constraint ----

def save_code(params: CodeParams, sketch: SketchSet | None, path: str | Path) -> None:
    path = Path(path)
    data = params.to_json()
    data["sketch_files"] = []
    data["sketch_bits"] = {}
    if sketch is not None:
        for (t1, t2), table in sorted(sketch.tables.items()):
            name = f"{path.stem}.sketch-{t1}-{t2}.bin"
            table.save(path.parent / name)
            data["sketch_files"].append(name)
            data["sketch_bits"][f"{t1},{t2}"] = table.value_bits
    _emit(data, path)


def load_code(path: str | Path) -> tuple[CodeParams, SketchSet | None]:
    path = Path(path)
    data = json.loads(path.read_text())
    params = CodeParams.from_json(data)
    files = data.get("sketch_files") or []
    sketch = SketchSet(SketchTable.load(path.parent / f) for f in files) if files else None
    return params, sketch


def _class_sketches(params: CodeParams, budget: int) -> SketchSet:
    """Greedy tables for the residue class (b, c) of ``params``."""
    rmap = residue_map(params, budget)
    domain = np.flatnonzero((rmap.vt_res == params.b) & (rmap.c_res == params.c) & rmap.balanced)
    return SketchSet(build_greedy_sketch(params.q, params.n, params.P, t1, t2, domain=domain, budget=budget)
                     for _, t1, t2 in params.sketch_slots())


# -- commands ----------------------------------------------------------------

def cmd_params(args) -> int:
    eps = as_fraction(args.eps)
    cert = classify(args.q, args.t, eps)
    report = {"schema": 1, "certificate": cert.to_json()}
    if args.n is None:
        _emit(report, args.out)
        return EXIT_OK
    params = derive_params(args.q, args.t, eps, args.n, args.mode, N=args.N)
    if args.codeword:
        x = Word.parse(args.codeword, args.q)
        if len(x) != args.n:
            raise ValueError(f"codeword length {len(x)} differs from n={args.n}")
        y = psi(x)
        if params.mode == "single":
            params = params.with_residues(sum(i * s for i, s in enumerate(y, 1)))
            sketch = None
        else:
            b = sum(i * s for i, s in enumerate(y, 1))
            c = (sum(y) % params.sum_modulus) // params.q
            params = params.with_residues(b, c, {tp: 0 for tp, _, _ in params.sketch_slots()})
            sketch = _class_sketches(params, args.budget)
            params = params.with_residues(params.b, c, {tp: sketch.sketch(x, t1, t2)
                                                        for tp, t1, t2 in params.sketch_slots()})
        size = None
    else:
        best = best_residues(params, max_classes=args.max_classes, budget=args.budget)
        params, sketch, size = best.params, best.sketch, len(best.codebook)
    code_path = args.out or "code.json"
    save_code(params, sketch, code_path)
    report["code"] = params.to_json()
    report["code_file"] = str(code_path)
    report["codebook_size"] = size
    print(json.dumps(report, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_encode(args) -> int:
    params, sketch = load_code(args.params)
    book = enumerate_codebook(params, sketch, budget=args.budget)
    for k in args.index:
        if not 0 <= k < len(book):
            raise InvariantViolation(f"index {k} outside codebook of size {len(book)}")
        print(format_word(book[k]))
    return EXIT_OK


def _input_lines(path):
    if path in (None, "-"):
        return sys.stdin.read().splitlines()
    return Path(path).read_text().splitlines()


def cmd_decode(args) -> int:
    params, sketch = load_code(args.params)
    if args.mode != params.mode and not (args.mode == "burst" and params.mode == "binary_le3_lite"):
        raise ValueError(f"--mode {args.mode} does not match the code's mode {params.mode}")
    words = [Word.parse(w, params.q) for w in args.words] if args.words else \
        list(read_words(_input_lines(args.input), params.q))
    status = EXIT_OK
    for r in words:
        entry = {"schema": 1, "received": format_word(r)}
        try:
            x, trace = decode(r, params, sketch)
            entry.update(decoded=format_word(x), trace=trace.to_json())
        except DecodeError as exc:
            entry.update(decoded=None, error=f"{type(exc).__name__}: {exc}")
            status = EXIT_INVARIANT
        print(json.dumps(entry, sort_keys=True))
    return status


def _random_pattern(rng: random.Random, n: int, t: int) -> LocalizedPattern:
    while True:
        i1 = rng.randint(1, n)
        rest = list(range(i1 + 1, min(n, i1 + t - 1) + 1))
        if not rest:
            continue
        k = rng.randint(1, min(len(rest), t - 1))
        return LocalizedPattern.from_positions([i1, *rng.sample(rest, k)], t)


def cmd_corrupt(args) -> int:
    rng = random.Random(args.seed)
    for x in read_words(_input_lines(args.input), args.q):
        n = len(x)
        if args.burst is not None:
            length = rng.randint(1, min(args.burst, n))
            i = rng.randint(1, n - length + 1)
            y = apply_burst_deletion(x, i, length)
            err = {"kind": "burst", "start": i, "length": length}
        else:
            if rng.random() < 1 / (args.localized + 1):
                i = rng.randint(1, n)
                y = apply_burst_deletion(x, i, 1)
                err = {"kind": "single", "start": i, "length": 1}
            else:
                pat = _random_pattern(rng, n, args.localized)
                y = apply_localized(x, pat)
                err = {"kind": "localized", "runs": [list(r) for r in pat.runs]}
        print(json.dumps({"schema": 1, "generator": GENERATOR, "seed": args.seed,
                          "input": format_word(x), "output": format_word(y), "error": err},
                         sort_keys=True))
    return EXIT_OK


def verify_code(params: CodeParams, sketch, codebook: list[Word]) -> dict:
    """Ball disjointness by hash join, and decode every codeword x every error."""
    owner: dict[Word, Word] = {}
    clashes = 0
    loc = params.mode == "localized"
    for x in codebook:
        ball = localized_ball(x, params.t) if loc else burst_ball(x, params.t)
        for r in ball:
            prev = owner.setdefault(r, x)
            if prev != x:
                clashes += 1
    failures = checked = 0
    for x in codebook:
        for r in (localized_ball(x, params.t) if loc else burst_ball(x, params.t)):
            checked += 1
            try:
                ok = decode(r, params, sketch)[0] == x
            except DecodeError:
                ok = False
            failures += not ok
    m = len(codebook)
    return {"codebook_size": m, "pairs": m * (m - 1) // 2, "intersections": clashes,
            "disjoint": clashes == 0, "decoded": checked, "decode_failures": failures}


def cmd_verify_codebook(args) -> int:
    params = derive_params(args.q, args.t, as_fraction(args.eps), args.n, args.mode)
    best = best_residues(params, max_classes=args.max_classes, budget=args.budget)
    report = {"schema": 1, "code": best.params.to_json(), "threads": _threads()}
    report.update(verify_code(best.params, best.sketch, best.codebook))
    _emit(report, args.out)
    return EXIT_OK if report["disjoint"] and report["decode_failures"] == 0 else EXIT_INVARIANT


def cmd_measure_redundancy(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = redundancy_curve(args.q, args.t, as_fraction(args.eps), range(args.n_min, args.n_max + 1),
                            args.mode, args.max_classes)
    stem = f"redundancy_q{args.q}_t{args.t}_{args.mode}"
    write_csv(rows, out / f"{stem}.csv")
    plot_redundancy(rows, out / f"{stem}.png")
    _emit({"schema": 1, "csv": str(out / f"{stem}.csv"), "figure": str(out / f"{stem}.png"),
           "rows": rows})
    return EXIT_OK


def cmd_check_lemmas(args) -> int:
    grid = good = 0
    mismatches = []
    for q in range(2, args.q_max + 1):
        for t in range(2, 2 * q):
            for k in range(1, 500):
                eps = Fraction(k, 1000)
                a, b = classify(q, t, eps), classify_bruteforce(q, t, eps)
                grid += 1
                if a.is_good != b.is_good or (a.is_good and a.s_table != b.s_table):
                    mismatches.append(["classify", q, t, str(eps)])
                    continue
                if not a.is_good:
                    continue
                good += 1
                if compute_M(a) != compute_M_direct(a):
                    mismatches.append(["M", q, t, str(eps)])
                if t >= 3 and compute_M_loc(a) != compute_M_loc_direct(a):
                    mismatches.append(["M_loc", q, t, str(eps)])
    counting = []
    for q in (2, 3):
        for n in range(2, args.n_max + 1):
            counting.extend(sweep_counting_lemma(q, n))
    violations = sum(r["holds"] is False or r["holds_psi"] is False for r in counting)
    report = {"schema": 1, "grid_points": grid, "good_points": good,
              "triple_mismatches": mismatches, "counting": counting,
              "counting_violations": violations}
    _emit(report, args.out)
    return EXIT_OK if not mismatches and not violations else EXIT_INVARIANT


def _sbl_params(args) -> sblenc.EncoderParams:
    if args.params:
        return sblenc.EncoderParams.from_json(json.loads(Path(args.params).read_text()))
    return sblenc.select_params(args.q, args.n, as_fraction(args.eps))


def cmd_sbl_encode(args) -> int:
    p = _sbl_params(args)
    width = p.n - 2
    out = []
    for w in read_words(_input_lines(args.input), p.q):
        if args.blocks:
            out.append(f"# length={len(w)}")
            pad = (-len(w)) % width
            sym = w.symbols + bytes(pad)
            chunks = [Word(p.q, sym[i:i + width]) for i in range(0, len(sym), width)]
        else:
            chunks = [w]
        out.extend(format_word(sblenc.encode(c, p)) for c in chunks)
    _write_lines(out, args.output)
    return EXIT_OK


def cmd_sbl_decode(args) -> int:
    p = _sbl_params(args)
    out = []
    pending: list[bytes] = []
    length = None
    for line in _input_lines(args.input):
        line = line.strip()
        if line.startswith("# length="):
            if length is not None:
                out.append(format_word(Word(p.q, b"".join(pending)[:length])))
            length, pending = int(line.split("=", 1)[1]), []
            continue
        if not line or line.startswith("#"):
            continue
        data = sblenc.decode(Word.parse(line, p.q), p)
        if length is None:
            out.append(format_word(data))
        else:
            pending.append(data.symbols)
    if length is not None:
        out.append(format_word(Word(p.q, b"".join(pending)[:length])))
    _write_lines(out, args.output)
    return EXIT_OK


def _write_lines(lines, path) -> None:
    text = "".join(line + "\n" for line in lines)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_sbl_params(args) -> int:
    p = sblenc.select_params(args.q, args.n, as_fraction(args.eps))
    _emit(p.to_json(), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="delcode", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def code_args(p, with_n=True):
        p.add_argument("--q", type=int, required=True)
        p.add_argument("--t", type=int, default=2)
        p.add_argument("--eps", required=True, help="exact rational, e.g. 1/10")
        if with_n:
            p.add_argument("--n", type=int, required=True)
        p.add_argument("--mode", choices=["single", "burst", "localized", "binary_le3_lite"], default="burst")
        p.add_argument("--max-classes", type=int, default=None)
        p.add_argument("--budget", type=int, default=EXHAUSTIVE_BUDGET, help="max q^n for exhaustive jobs")

    p = sub.add_parser("params", help="good-triple certificate; with --n also build a code file")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--mode", choices=["single", "burst", "localized", "binary_le3_lite"], default="burst")
    p.add_argument("--codeword", help="take residues from this word instead of searching")
    p.add_argument("--max-classes", type=int, default=None)
    p.add_argument("--budget", type=int, default=EXHAUSTIVE_BUDGET)
    p.add_argument("--out")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("encode", help="print codewords by codebook index")
    p.add_argument("--params", required=True)
    p.add_argument("--index", type=int, nargs="+", default=[0])
    p.add_argument("--budget", type=int, default=EXHAUSTIVE_BUDGET)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode received words, one JSON line each")
    p.add_argument("--mode", choices=["single", "burst", "localized", "binary_le3_lite"], required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--input")
    p.add_argument("words", nargs="*")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("corrupt", help="apply one random error per word")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--burst", type=int)
    g.add_argument("--localized", type=int)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input")
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("verify-codebook", help="exhaustive disjointness and decoding check")
    code_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_codebook)

    p = sub.add_parser("measure-redundancy", help="CSV and PNG of redundancy against n")
    code_args(p, with_n=False)
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--out-dir", default="report")
    p.set_defaults(func=cmd_measure_redundancy)

    p = sub.add_parser("check-lemmas", help="good-triple grid and counting-lemma oracles")
    p.add_argument("--q-max", type=int, default=8)
    p.add_argument("--n-max", type=int, default=14)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_lemmas)

    for name, func in (("sbl-encode", cmd_sbl_encode), ("sbl-decode", cmd_sbl_decode)):
        p = sub.add_parser(name, help="balanced-differential encoder" if name == "sbl-encode" else "its inverse")
        p.add_argument("--params", help="encoder params JSON (else selected from --q/--n/--eps)")
        p.add_argument("--q", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--eps")
        p.add_argument("--blocks", action="store_true", help="split long inputs into length n-2 blocks")
        p.add_argument("--input")
        p.add_argument("--output")
        p.set_defaults(func=func)

    p = sub.add_parser("sbl-params", help="select encoder parameters")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sbl_params)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"delcode: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (OSError, json.JSONDecodeError) as exc:
        print(f"delcode: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvariantViolation, DelcodeError, ValueError) as exc:
        print(f"delcode: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
