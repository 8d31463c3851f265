"""DOT and ASCII renderings of population trees, before and after estimation.

``draw`` shows the tree with survey ratios on edges; ``count`` and ``est``
need an estimate report and put the rounded root estimate in the root, the
mean sampled probability on each sampled edge, and in each informative leaf
either its count (``count``) or its mean path estimate (``est``).
"""

from __future__ import annotations

from dataclasses import dataclass

from .tree import PopTree

MODES = ("draw", "count", "est")
FORMATS = ("dot", "ascii")


@dataclass(frozen=True)
class RenderSpec:
    mode: str = "draw"
    format: str = "dot"
    show_probs: bool = False
    show_desc: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown render mode {self.mode!r}; choose from {MODES}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}; choose from {FORMATS}")


def _node_name(tree, node, show_desc):
    if show_desc:
        rec = tree.records.get(node)
        if rec is not None and rec.description:
            return rec.description
    return node


def _annotations(tree: PopTree, spec: RenderSpec, report):
    """Per-node value text and per-edge label text."""
    values: dict[str, str] = {}
    edge_labels: dict[tuple[str, str], str] = {}
    if spec.mode == "draw":
        if spec.show_probs:
            for e in tree.edges:
                ratio = tree.record(e).ratio
                if ratio is not None:
                    edge_labels[e] = f"{ratio:.2f}"
        return values, edge_labels

    if report is None:
        raise ValueError(f"render mode {spec.mode!r} needs an estimate report")
    values[tree.root] = str(int(report.rounded_estimate))
    leaf_means = report.leaf_means()
    for leaf in tree.informative_leaves:
        if leaf not in leaf_means:
            continue
        if spec.mode == "count":
            values[leaf] = str(tree.count(leaf))
        else:
            values[leaf] = f"{leaf_means[leaf]:.0f}"
    for e, mean in report.edge_means().items():
        edge_labels[e] = f"{mean:.2f}"
    return values, edge_labels


def _dot_quote(text):
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _to_dot(tree, spec, values, edge_labels):
    lines = ["digraph tree {", "\tnode [shape=ellipse];"]
    for node in tree.nodes:
        label = _dot_quote(_node_name(tree, node, spec.show_desc))
        if node in values:
            label = label[:-1] + "\\n" + _dot_quote(values[node])[1:]
        lines.append(f"\t{_dot_quote(node)} [label={label}];")
    for e in tree.edges:
        attrs = f" [label={_dot_quote(edge_labels[e])}]" if e in edge_labels else ""
        lines.append(f"\t{_dot_quote(e[0])} -> {_dot_quote(e[1])}{attrs};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _to_ascii(tree, spec, values, edge_labels):
    def text(node):
        out = _node_name(tree, node, spec.show_desc)
        if node in values:
            out += f" [{values[node]}]"
        parent = tree.parent_of(node)
        if parent is not None and (parent, node) in edge_labels:
            out += f" (p={edge_labels[(parent, node)]})"
        return out

    lines = [text(tree.root)]

    def walk(node, prefix):
        kids = tree.children.get(node, ())
        for i, child in enumerate(kids):
            last = i == len(kids) - 1
            lines.append(prefix + ("└── " if last else "├── ") + text(child))
            walk(child, prefix + ("    " if last else "│   "))

    walk(tree.root, "")
    return "\n".join(lines) + "\n"


def render_tree(tree: PopTree, spec: RenderSpec, report=None) -> str:
    """Render ``tree``; ``report`` is an EstimateReport or a loaded report."""
    values, edge_labels = _annotations(tree, spec, report)
    if spec.format == "dot":
        return _to_dot(tree, spec, values, edge_labels)
    return _to_ascii(tree, spec, values, edge_labels)
