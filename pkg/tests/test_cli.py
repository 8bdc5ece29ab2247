import json

import jsonschema
import networkx as nx
import pytest

from linkcomm.cli import main
from linkcomm.membership import RESULT_SCHEMA


@pytest.fixture
def karate_file(tmp_path):
    g = nx.karate_club_graph()
    path = tmp_path / "karate.txt"
    path.write_text("".join(f"{u} {v}\n" for u, v in g.edges()))
    return path


@pytest.fixture
def clubs_file(tmp_path):
    g = nx.karate_club_graph()
    path = tmp_path / "clubs.txt"
    path.write_text("".join(f"{v} {0 if d['club'] == 'Mr. Hi' else 1}\n" for v, d in g.nodes(data=True)))
    return path


def test_detect_writes_valid_document(karate_file, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["detect", str(karate_file), "-K", "2", "--restarts", "20", "--seed", "1", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, RESULT_SCHEMA)
    assert doc["K"] == 2 and doc["mode"] == "overlap"
    assert any(len(v["communities"]) == 2 for v in doc["vertices"])
    assert len(doc["edges"]) == 78
    err = capsys.readouterr().err
    assert "log-likelihood" in err and "iterations" in err and "seconds" in err


def test_deterministic_runs_are_byte_identical(karate_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path, threads in ((a, "1"), (b, "3")):
        assert main(["detect", str(karate_file), "-K", "2", "--restarts", "4", "--seed", "7",
                     "--deterministic", "--threads", threads, "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["seconds"] is None


def test_env_seed(karate_file, tmp_path, monkeypatch):
    monkeypatch.setenv("LINKCOMM_SEED", "5")
    monkeypatch.setenv("LINKCOMM_THREADS", "2")
    out = tmp_path / "r.json"
    assert main(["detect", str(karate_file), "-K", "2", "--restarts", "2", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["seed"] == 5


def test_naive_and_pruned_modes(karate_file, tmp_path):
    out = tmp_path / "r.json"
    assert main(["detect", str(karate_file), "-K", "2", "--restarts", "3", "--naive", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["naive"] is True
    assert main(["detect", str(karate_file), "-K", "2", "--restarts", "3", "--delta", "0.001",
                 "-o", str(out)]) == 0
    assert main(["detect", str(karate_file), "-K", "2", "--naive", "--delta", "0", "-o", str(out)]) == 2
    assert json.loads(out.read_text())["config"]["delta"] == 0.001


@pytest.mark.parametrize("argv", [
    ["detect", "missing.txt", "-K", "2"],
    ["detect", "{karate}", "-K", "0"],
    ["detect", "{karate}", "-K", "2", "--restarts", "0"],
    ["detect", "{karate}", "-K", "2", "--delta", "-1"],
    ["detect", "{karate}"],
    ["bench", "--axis", "sideways"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, karate_file, capsys):
    argv = [a.replace("{karate}", str(karate_file)) for a in argv]
    assert main(argv) == 2


def test_malformed_input_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n0 1 2 3\n")
    assert main(["detect", str(bad), "-K", "2"]) == 2
    assert "line 2" in capsys.readouterr().err


def test_degenerate_fit_exit_1(karate_file, tmp_path, capsys):
    # aggressive pruning strands edges whose ends share no live colour
    out = tmp_path / "r.json"
    assert main(["detect", str(karate_file), "-K", "6", "--delta", "0.9", "--restarts", "3", "--seed", "1",
                 "-o", str(out)]) == 1
    doc = json.loads(out.read_text())
    assert doc["degenerate"] is True
    jsonschema.validate(doc, RESULT_SCHEMA)
    assert "zero rate" in capsys.readouterr().err


def test_nonoverlap_outputs(karate_file, tmp_path):
    out, part = tmp_path / "n.json", tmp_path / "p.txt"
    assert main(["nonoverlap", str(karate_file), "-K", "2", "--seed", "0", "-o", str(out),
                 "--partition", str(part)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, RESULT_SCHEMA)
    assert doc["mode"] == "nonoverlap"
    assert all(len(v["communities"]) == 1 for v in doc["vertices"])
    lines = part.read_text().split("\n")
    assert len([l for l in lines if l]) == 34


def test_nonoverlap_single_block_and_no_refine(karate_file, tmp_path):
    out = tmp_path / "n.json"
    assert main(["nonoverlap", str(karate_file), "-K", "1", "--restarts", "1", "-o", str(out)]) == 0
    assert {tuple(v["communities"]) for v in json.loads(out.read_text())["vertices"]} == {(0,)}
    assert main(["nonoverlap", str(karate_file), "-K", "2", "--no-refine", "--general", "--restarts", "2",
                 "-o", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["refine"] is False


def test_score_self_and_truth(karate_file, clubs_file, tmp_path, capsys):
    out = tmp_path / "r.json"
    main(["detect", str(karate_file), "-K", "2", "--restarts", "5", "--seed", "0", "-o", str(out)])
    capsys.readouterr()
    assert main(["score", str(out), str(out)]) == 0
    got = dict(l.split("\t") for l in capsys.readouterr().out.strip().split("\n"))
    assert got["fraction_correct"] == got["jaccard"] == got["variant_nmi"] == "1.000000"
    assert main(["score", str(clubs_file), str(out)]) == 0
    got = dict(l.split("\t") for l in capsys.readouterr().out.strip().split("\n"))
    assert 0 <= float(got["variant_nmi"]) <= 1


def test_score_disjoint_overlaps(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    a.write_text("1 0 1\n2 0\n3 1\n")
    b.write_text("1 0\n2 0 1\n3 1\n")
    assert main(["score", str(a), str(b)]) == 0
    got = dict(l.split("\t") for l in capsys.readouterr().out.strip().split("\n"))
    assert got["jaccard"] == "0.000000"


def test_score_lfr_partition(tmp_path, capsys):
    lfr = tmp_path / "community.dat"
    lfr.write_text("1 1\n2 1\n3 2\n4 2\n")
    net = tmp_path / "network.dat"
    net.write_text("1 2\n2 1\n3 4\n4 3\n2 3\n3 2\n1 3\n3 1\n")
    doc = tmp_path / "n.json"
    assert main(["nonoverlap", str(net), "-K", "2", "--symmetrize", "--restarts", "2", "-o", str(doc)]) == 0
    capsys.readouterr()
    assert main(["score", str(lfr), str(doc)]) == 0
    got = dict(l.split("\t") for l in capsys.readouterr().out.strip().split("\n"))
    assert 0 <= float(got["variant_nmi"]) <= 1


def test_bench_smoke(tmp_path):
    out = tmp_path / "t.tsv"
    assert main(["bench", "--axis", "degree", "--grid", "5,15", "--reps", "1", "--restarts", "3",
                 "-n", "1000", "-z", "50", "--seed", "0", "-o", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0].startswith("degree\t") and len(lines) == 3


def test_convert(tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("# arcs\na b\nb a\nc d\n")
    out = tmp_path / "out.txt"
    assert main(["convert", str(src), "--symmetrize", "--largest-component", "--relabel", "-o", str(out)]) == 0
    assert out.read_text() == "0 1\n"
