from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from entropy_embed import cli
from entropy_embed.errors import DivergenceError
from entropy_embed.graph import format_edge_list, write_snapshot
from entropy_embed.output import read_embedding, write_embedding

from conftest import two_cliques


@pytest.fixture
def triangle(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("# triangle with a tail\n1 2\n2 3\n3 1\n3 9\n")
    return path


def test_basic_run(tmp_path, triangle, capsys):
    out = tmp_path / "emb.tsv"
    assert cli.run(["--input", str(triangle), "--dim", "2", "--seed", "1", "--out", str(out), "--threads", "1"]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 5
    rows = [line.split("\t") for line in lines[1:]]
    assert [r[0] for r in rows] == ["1", "2", "3", "9"]
    assert all(len(r) == 3 for r in rows)
    assert "rounds" in capsys.readouterr().out


def test_metrics_report(tmp_path, capsys):
    g = two_cliques()
    path = tmp_path / "g.txt"
    path.write_text(format_edge_list(g))
    assert cli.run(["-i", str(path), "--metrics", "-t", "1"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    report = json.loads(out[-1])
    assert report["pe"] <= 0.10
    assert report["h_basic"] == pytest.approx(0.998, abs=1e-3)
    assert any(line.startswith("distance overlap") for line in out)


def test_ground_truth_ssq(tmp_path, capsys):
    path = tmp_path / "g.txt"
    path.write_text("0 1\n1 2\n2 3\n3 0\n")
    truth = tmp_path / "truth.tsv"
    write_embedding(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), truth)
    assert cli.run(["-i", str(path), "--ground-truth", str(truth), "-t", "1"]) == 0
    assert "ssq vs ground truth" in capsys.readouterr().out


def test_ground_truth_missing_vertex(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 1\n1 2\n")
    truth = tmp_path / "truth.tsv"
    write_embedding(np.zeros((2, 2)), truth)
    assert cli.run(["-i", str(path), "--ground-truth", str(truth), "-t", "1"]) == 2


def test_svg_and_histogram_outputs(tmp_path, triangle):
    svg, hist, labels = tmp_path / "g.svg", tmp_path / "h.csv", tmp_path / "classes.txt"
    labels.write_text("1 a\n9 b\n")
    argv = ["-i", str(triangle), "--svg", str(svg), "--labels", str(labels), "--dump-histogram", str(hist), "-t", "1"]
    assert cli.run(argv) == 0
    assert svg.read_text().count("<line") == 4
    assert hist.read_text().splitlines()[0] == "bin_mid,edge_count,nonedge_count"


def test_snapshot_input(tmp_path, triangle):
    from entropy_embed.graph import load_edge_list

    snap = tmp_path / "g.gemp"
    write_snapshot(load_edge_list(triangle), snap)
    out = tmp_path / "emb.tsv"
    assert cli.run(["-i", str(snap), "--out", str(out), "-t", "1"]) == 0
    ids, coords = read_embedding(out)
    assert ids.tolist() == [0, 1, 2, 3] and coords.shape == (4, 2)


@pytest.mark.parametrize(
    "argv",
    [
        ["--svg", "x.svg", "--dim", "128"],
        ["--dim", "0"],
        ["--lanes", "0"],
        ["--threads", "0"],
        ["--hash-bits", "40"],
        ["--bogus"],
        ["--dim", "two"],
    ],
)
def test_usage_errors(triangle, argv, capsys):
    assert cli.run(["--input", str(triangle), *argv]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("entropy-embed: usage error")


def test_missing_input_argument(capsys):
    assert cli.run([]) == 1


@pytest.mark.parametrize("content", [None, "0 1\nfoo bar\n", "", "5 5\n"])
def test_data_errors(tmp_path, content, capsys):
    path = tmp_path / "g.txt"
    if content is not None:
        path.write_text(content)
    assert cli.run(["-i", str(path), "-t", "1"]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "data error" in err[0]


def test_divergence_exit_code(triangle, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise DivergenceError(4)

    monkeypatch.setattr(cli, "embed", boom)
    assert cli.run(["-i", str(triangle)]) == 3
    assert "4" in capsys.readouterr().err


def test_threads_from_environment(triangle, monkeypatch):
    seen = {}
    real = cli.embed

    def spy(g, d, cfg, seed):
        seen["workers"] = cfg.workers
        return real(g, d, cfg, seed)

    monkeypatch.setattr(cli, "embed", spy)
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.run(["-i", str(triangle)]) == 0
    assert seen["workers"] == 3
    assert cli.run(["-i", str(triangle), "--threads", "2"]) == 0
    assert seen["workers"] == 2
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    assert cli.run(["-i", str(triangle)]) == 1


def test_repeated_runs_are_byte_identical(tmp_path):
    g = two_cliques()
    path = tmp_path / "g.txt"
    path.write_text(format_edge_list(g))
    outs = []
    for k in range(3):
        out = tmp_path / f"e{k}.tsv"
        svg = tmp_path / f"e{k}.svg"
        assert cli.run(["-i", str(path), "--seed", "7", "-t", "2", "--out", str(out), "--svg", str(svg)]) == 0
        outs.append((out.read_bytes(), svg.read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_module_entry_point(triangle, tmp_path):
    out = tmp_path / "emb.tsv"
    proc = subprocess.run(
        [sys.executable, "-m", "entropy_embed", "-i", str(triangle), "-o", str(out), "-t", "1"],
        capture_output=True, text=True, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.text(alphabet="0123456789 \n#-x.\t", max_size=80))
def test_cli_survives_arbitrary_input(tmp_path, text):
    path = tmp_path / "fuzz.txt"
    path.write_text(text)
    assert cli.run(["-i", str(path), "--iters", "3", "-t", "1"]) in (0, 2)
