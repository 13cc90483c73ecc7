import json

from delcode.cli import load_code, main
from delcode.seqcore import all_words, format_word
from delcode.vtcodes import is_member


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_params_certificate(capsys):
    code, out, _ = run(capsys, "params", "--q", "2", "--t", "3", "--eps", "1/10")
    rep = json.loads(out)
    assert code == 0 and rep["schema"] == 1
    assert rep["certificate"]["is_good"] is True and rep["certificate"]["M"] == "30"


def test_worked_example_decode(capsys, tmp_path):
    code_file = tmp_path / "code.json"
    code, _, _ = run(capsys, "params", "--q", "3", "--t", "2", "--eps", "1/4", "--n", "4",
                     "--codeword", "0200", "--out", str(code_file))
    assert code == 0
    code, out, _ = run(capsys, "decode", "--mode", "burst", "--params", str(code_file), "00")
    line = json.loads(out)
    assert code == 0 and line["decoded"] == "0200"
    tr = line["trace"]
    assert (tr["delta"], tr["delta_sum"], tr["j"], tr["sigma_j"]) == (8, 3, 2, 2)


def test_encode_corrupt_decode_pipeline(capsys, tmp_path):
    code_file = tmp_path / "best.json"
    assert run(capsys, "params", "--q", "2", "--t", "2", "--eps", "9/20", "--n", "9",
               "--out", str(code_file))[0] == 0
    _, out, _ = run(capsys, "encode", "--params", str(code_file), "--index", "0", "1", "2")
    words = out.split()
    src = tmp_path / "words.txt"
    src.write_text(out)
    _, corrupted, _ = run(capsys, "corrupt", "--burst", "2", "--q", "2", "--seed", "4", "--input", str(src))
    lines = [json.loads(x) for x in corrupted.splitlines()]
    assert all(x["generator"] == "python-random-mt19937" for x in lines)
    received = [x["output"] for x in lines]
    code, out, _ = run(capsys, "decode", "--mode", "burst", "--params", str(code_file), *received)
    assert code == 0
    assert [json.loads(x)["decoded"] for x in out.splitlines()] == words


def test_corrupt_is_deterministic(capsys, tmp_path):
    src = tmp_path / "w.txt"
    src.write_text("0110100111\n1111000010\n")
    first = run(capsys, "corrupt", "--localized", "3", "--q", "2", "--seed", "9", "--input", str(src))[1]
    second = run(capsys, "corrupt", "--localized", "3", "--q", "2", "--seed", "9", "--input", str(src))[1]
    assert first == second and first


def test_verify_codebook(capsys):
    code, out, _ = run(capsys, "verify-codebook", "--q", "2", "--t", "2", "--eps", "9/20", "--n", "12")
    rep = json.loads(out)
    assert code == 0 and rep["disjoint"] is True and rep["decode_failures"] == 0
    assert rep["pairs"] == rep["codebook_size"] * (rep["codebook_size"] - 1) // 2


def test_measure_redundancy_writes_csv_and_png(capsys, tmp_path):
    code, out, _ = run(capsys, "measure-redundancy", "--q", "2", "--t", "2", "--eps", "9/20",
                       "--n-min", "6", "--n-max", "8", "--out-dir", str(tmp_path))
    rep = json.loads(out)
    assert code == 0
    csv_text = open(rep["csv"]).read().splitlines()
    assert csv_text[0].startswith("q,t,mode") and len(csv_text) == 4
    assert open(rep["figure"], "rb").read(8) == b"\x89PNG\r\n\x1a\n"


def test_sbl_block_round_trip(capsys, tmp_path):
    src, enc, dec = tmp_path / "in.txt", tmp_path / "enc.txt", tmp_path / "dec.txt"
    src.write_text("0" * 1500 + "\n")
    common = ["--q", "2", "--n", "1000", "--eps", "9/20"]
    assert main(["sbl-encode", *common, "--blocks", "--input", str(src), "--output", str(enc)]) == 0
    assert main(["sbl-decode", *common, "--input", str(enc), "--output", str(dec)]) == 0
    assert dec.read_text() == src.read_text()


def test_sbl_params_file(capsys, tmp_path):
    pfile = tmp_path / "enc.json"
    assert main(["sbl-params", "--q", "3", "--n", "1000", "--eps", "9/10", "--out", str(pfile)]) == 0
    src, enc = tmp_path / "in.txt", tmp_path / "enc.txt"
    src.write_text("1" * 998 + "\n")
    assert main(["sbl-encode", "--params", str(pfile), "--input", str(src), "--output", str(enc)]) == 0
    assert len(enc.read_text().strip()) == 1000


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "decode", "--mode", "burst", "--params", str(tmp_path / "none.json"), "00")[0] == 4
    assert run(capsys, "verify-codebook", "--q", "3", "--t", "2", "--eps", "1/4", "--n", "12",
               "--budget", "1000")[0] == 3
    bad = tmp_path / "bad.txt"
    bad.write_text("0" * 1000 + "\n")
    assert main(["sbl-decode", "--q", "2", "--n", "1000", "--eps", "9/20", "--input", str(bad)]) == 2


def test_decode_failure_is_invariant_violation(capsys, tmp_path):
    code_file = tmp_path / "code.json"
    run(capsys, "params", "--q", "2", "--t", "2", "--eps", "9/20", "--n", "8", "--out", str(code_file))
    params, sketch = load_code(code_file)
    stranger = next(w for w in all_words(2, 8) if not is_member(w, params, sketch))
    code, out, _ = run(capsys, "decode", "--mode", "burst", "--params", str(code_file), format_word(stranger))
    assert code == 2 and json.loads(out)["decoded"] is None


def test_check_lemmas(capsys):
    code, out, _ = run(capsys, "check-lemmas", "--q-max", "4", "--n-max", "10")
    rep = json.loads(out)
    assert code == 0 and rep["triple_mismatches"] == [] and rep["counting_violations"] == 0
