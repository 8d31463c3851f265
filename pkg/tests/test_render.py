import re
from dataclasses import replace

import pytest

from wmmtree.estimate import wmm_estimate
from wmmtree.render import RenderSpec, render_tree
from wmmtree.tree import build_tree, parse_edge_table, single_node_tree

from conftest import EXAMPLE_TABLE

NODE_RE = re.compile(r'^\t"([^"\\]|\\.)*" \[label="([^"\\]|\\.)*"\];$')
EDGE_RE = re.compile(r'^\t"[^"]*" -> "[^"]*"( \[label="[^"]*"\])?;$')


@pytest.fixture(scope="module")
def report():
    tree = build_tree(parse_edge_table(EXAMPLE_TABLE))
    return wmm_estimate(tree, 300, seed=1)


def dot_lines(text):
    lines = text.splitlines()
    assert lines[0] == "digraph tree {" and lines[-1] == "}"
    return lines[1:-1]


def test_draw_dot_is_well_formed(example_tree):
    body = dot_lines(render_tree(example_tree, RenderSpec()))
    nodes = [l for l in body if NODE_RE.match(l)]
    edges = [l for l in body if EDGE_RE.match(l)]
    assert len(nodes) == 6
    assert len(edges) == 5
    assert len(body) == 1 + 6 + 5


def test_draw_probs(example_tree):
    text = render_tree(example_tree, RenderSpec(show_probs=True))
    assert '"Z" -> "A" [label="0.36"];' in text
    assert '"Z" -> "B" [label="0.49"];' in text
    assert '"A" -> "D" [label="0.90"];' in text


def test_draw_desc(example_tree):
    text = render_tree(example_tree, RenderSpec(format="ascii", show_desc=True))
    assert "First grandchild" in text
    assert text.splitlines()[0] == "Z"


def test_count_mode(example_tree, report):
    text = render_tree(example_tree, RenderSpec("count", "ascii"), report)
    lines = text.splitlines()
    assert lines[0] == f"Z [{report.rounded_estimate}]"
    assert any(l.endswith("B [500] (p=" + f"{report.edge_means()[('Z', 'B')]:.2f})")
               for l in lines)
    assert any("D [50]" in l for l in lines)


def test_count_and_est_differ_only_at_informative_leaves(example_tree, report):
    count = render_tree(example_tree, RenderSpec("count"), report).splitlines()
    est = render_tree(example_tree, RenderSpec("est"), report).splitlines()
    changed = [a for a, b in zip(count, est) if a != b]
    assert len(count) == len(est)
    assert sorted(re.match(r'\t"(\w+)"', l).group(1) for l in changed) == ["B", "D"]
    means = report.leaf_means()
    assert f'"B\\n{means["B"]:.0f}"' in "\n".join(est)


def test_single_node_ascii():
    assert render_tree(single_node_tree("Z"), RenderSpec(format="ascii")) == "Z\n"


def test_report_required(example_tree):
    with pytest.raises(ValueError, match="report"):
        render_tree(example_tree, RenderSpec("est"))


def test_bad_spec():
    with pytest.raises(ValueError):
        RenderSpec(mode="pie")
    with pytest.raises(ValueError):
        RenderSpec(format="svg")


def test_quoting(example_tree):
    records = dict(example_tree.records)
    records["A"] = replace(records["A"], description='say "hi"')
    tree = type(example_tree)(example_tree.root, example_tree.children, records)
    text = render_tree(tree, RenderSpec(show_desc=True))
    assert '[label="say \\"hi\\""]' in text
