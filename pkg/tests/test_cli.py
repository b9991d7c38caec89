import json

import pytest

from geocut.cli import _flatten, main, thread_count
from geocut.core import GridConfig, apply_stream, read_stream

STREAM = "\n".join(
    ["+ %d %d" % (20 + a, 20 + b) for a in range(3) for b in range(3)]
    + ["+ 3 60", "+ 60 3", "+ 60 60"]) + "\n"


@pytest.fixture
def stream_file(tmp_path):
    path = tmp_path / "stream.txt"
    path.write_text(STREAM)
    return str(path)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_writes_a_valid_stream(tmp_path, capsys):
    out_path = tmp_path / "gen.txt"
    code, out, _ = run_cli(["gen", "--delta-side", "64", "--dim", "2",
                            "--n", "20", "--clusters", "2", "--seed", "3",
                            "--output", str(out_path)], capsys)
    assert code == 0
    ups = read_stream(out_path.read_text().splitlines(), GridConfig(64, 2))
    assert len(apply_stream(ups)) == 20
    # report goes to stdout, stream to the file
    assert json.loads(out)["command"] == "gen"


def test_estimate_reports_are_byte_identical(stream_file, tmp_path, capsys):
    args = ["estimate", "--input", stream_file, "--delta-side", "64",
            "--dim", "2", "--samples", "4", "--seed", "11"]
    paths = []
    for name in ("a.json", "b.json"):
        p = tmp_path / name
        assert main(args + ["--output", str(p)]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    report = json.loads(paths[0].read_text())
    assert report["status"] in ("ok", "failed")
    assert len(report["copies"]) == 8
    assert report["diagnostics"]["counter_words"] > 0


def test_sample_is_deterministic_and_well_formed(stream_file, capsys):
    args = ["sample", "--input", stream_file, "--delta-side", "64",
            "--dim", "2", "--seed", "5"]
    code, out1, _ = run_cli(args, capsys)
    assert code == 0
    code, out2, _ = run_cli(args, capsys)
    assert out1 == out2
    report = json.loads(out1)
    assert report["profile"]["k"] >= 1
    assert sum(report["profile"]["r"]) == pytest.approx(1.0)


def test_csv_output(stream_file, capsys):
    code, out, _ = run_cli(["sample", "--input", stream_file, "--delta-side",
                            "64", "--dim", "2", "--seed", "5", "--format",
                            "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "key,value"
    keys = [l.split(",", 1)[0] for l in lines[1:]]
    assert keys == sorted(keys)
    assert "p_star" in keys


def test_flatten_nests_keys():
    flat = _flatten({"a": {"b": [1, 2]}, "c": 3})
    assert flat == {"a.b.0": 1, "a.b.1": 2, "c": 3}


def test_malformed_input_yields_error_object(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("+ 99 1\n")
    code, out, err = run_cli(["estimate", "--input", str(bad),
                              "--delta-side", "64", "--dim", "2"], capsys)
    assert code == 2
    assert "error" in json.loads(err)
    code, _, err = run_cli(["estimate", "--input", str(tmp_path / "nope"),
                            "--delta-side", "64", "--dim", "2"], capsys)
    assert code == 2
    assert "error" in json.loads(err)


def test_thread_count_env(monkeypatch):
    monkeypatch.delenv("GEOCUT_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("GEOCUT_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("GEOCUT_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.setenv("GEOCUT_THREADS", "0")
    with pytest.raises(ValueError):
        thread_count()


def test_verify_tree_suite(capsys):
    code, out, _ = run_cli(["verify", "--suite", "tree", "--delta-side", "16",
                            "--dim", "2", "--trials", "5", "--seed", "1"],
                           capsys)
    assert code == 0
    report = json.loads(out)
    assert report["max_relative_error"] <= 1e-9
    assert report["non_contraction"]


def test_jl_subcommand(tmp_path, capsys):
    pts = tmp_path / "pts.txt"
    lines = ["+ " + " ".join("%0.3f" % ((i * 7 + j * 3) % 11 + 0.5)
                             for j in range(12)) for i in range(8)]
    pts.write_text("\n".join(lines) + "\n")
    code, out, _ = run_cli(["jl", "--input", str(pts), "--epsilon", "0.4",
                            "--trials", "5", "--seed", "2"], capsys)
    assert code == 0
    report = json.loads(out)
    assert 0.0 <= report["preserved_fraction"] <= 1.0
    assert report["target_dim"] >= 1
