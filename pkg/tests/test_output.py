from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from entropy_embed.graph import Graph, load_edge_list
from entropy_embed.output import emit_svg, read_embedding, read_vertex_classes, write_embedding

SVG = "{http://www.w3.org/2000/svg}"


def test_tsv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    emb = rng.normal(size=(30, 3)) * 10 ** rng.uniform(-4, 4, size=(30, 1))
    path = tmp_path / "emb.tsv"
    write_embedding(emb, path)
    ids, coords = read_embedding(path)
    assert ids.tolist() == list(range(30))
    np.testing.assert_allclose(coords, emb, rtol=5e-6)
    lines = path.read_text().splitlines()
    assert lines[0] == "#id\td0\td1\td2"
    assert len(lines) == 31


def test_rows_sorted_by_original_id(tmp_path):
    g = load_edge_list("40 7\n7 19\n")
    emb = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    path = tmp_path / "emb.tsv"
    write_embedding(emb, path, g.labels)
    ids, coords = read_embedding(path)
    assert ids.tolist() == [7, 19, 40]
    np.testing.assert_array_equal(coords, emb[[1, 2, 0]])


def test_six_significant_digits(tmp_path):
    path = tmp_path / "emb.tsv"
    write_embedding(np.array([[1.23456789, -0.000123456789]]), path)
    assert path.read_text().splitlines()[1] == "0\t1.23457\t-0.000123457"


def test_label_count_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_embedding(np.zeros((3, 2)), tmp_path / "x.tsv", labels=[1, 2])


def test_read_embedding_rejects_ragged(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("#id\td0\td1\n0\t1\t2\n1\t3\n")
    with pytest.raises(ValueError):
        read_embedding(path)
    path.write_text("0\tx\n")
    with pytest.raises(ValueError, match="line 1"):
        read_embedding(path)


def _svg_tree(path):
    return ET.parse(path).getroot()


def test_triangle_svg(tmp_path):
    g = load_edge_list("0 1\n1 2\n2 0\n")
    emb = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]])
    path = tmp_path / "t.svg"
    emit_svg(g, emb, path)
    root = _svg_tree(path)
    assert root.tag == SVG + "svg"
    assert len(root.findall(f".//{SVG}line")) == 3
    assert len(root.findall(f".//{SVG}circle")) == 3
    x0, y0, w, h = map(float, root.get("viewBox").split())
    assert x0 == pytest.approx(-0.05) and w == pytest.approx(1.1)
    assert y0 == pytest.approx(-0.05) and h == pytest.approx(0.9)


def test_svg_opacity_scales_with_edges(tmp_path):
    n = 400
    v = np.arange(n)
    g = Graph(n, v, (v + 1) % n)
    path = tmp_path / "ring.svg"
    emit_svg(g, np.random.default_rng(0).random((n, 2)), path)
    group = _svg_tree(path).find(f"{SVG}g")
    assert float(group.get("stroke-opacity")) == pytest.approx(0.05)


def test_svg_is_deterministic(tmp_path):
    g = load_edge_list("0 1\n1 2\n2 3\n3 0\n")
    emb = np.random.default_rng(1).random((4, 2))
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_svg(g, emb, a)
    emit_svg(g, emb, b)
    assert a.read_bytes() == b.read_bytes()


def test_svg_classes_and_ids(tmp_path):
    g = load_edge_list("10 20\n20 30\n")
    labels = tmp_path / "classes.txt"
    labels.write_text("# id class\n10 a\n20 b\n")
    classes = read_vertex_classes(labels)
    assert classes == {10: "a", 20: "b"}
    path = tmp_path / "c.svg"
    emit_svg(g, np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 1.0]]), path, classes, show_ids=True)
    root = _svg_tree(path)
    fills = [c.get("fill") for c in root.iter(SVG + "circle")]
    assert len(set(fills)) == 3  # two classes plus the unclassed default
    assert [t.text for t in root.iter(SVG + "text")] == ["10", "20", "30"]


def test_svg_degenerate_layout(tmp_path):
    g = load_edge_list("0 1\n")
    path = tmp_path / "p.svg"
    emit_svg(g, np.zeros((2, 2)), path)
    _, _, w, h = map(float, _svg_tree(path).get("viewBox").split())
    assert w > 0 and h > 0


def test_svg_needs_two_dimensions(tmp_path):
    g = load_edge_list("0 1\n")
    with pytest.raises(ValueError):
        emit_svg(g, np.zeros((2, 3)), tmp_path / "x.svg")


def test_bad_class_file(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("1\n")
    with pytest.raises(ValueError, match="line 1"):
        read_vertex_classes(path)
