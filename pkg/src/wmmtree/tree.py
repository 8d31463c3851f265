"""Edge-table ingestion, tree construction and informative-path discovery.

The input is a comma-delimited table with one directed edge per row::

    from,to,Estimate,Total,Count,Population,Description
    Z,A,4,11,NA,FALSE,First child of the root

``Estimate``/``Total`` are survey successes and sample size for the edge,
``Count`` is a known marginal count of the ``to`` node (leaves only) and
``Population`` marks evidence that should be used as an exact ratio rather
than sampled.  Missing values are written ``NA`` or left empty.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, TextIO

from .errors import TreeDataError

REQUIRED_COLUMNS = ("from", "to")
EVIDENCE_COLUMNS = ("Estimate", "Total", "Count")
OPTIONAL_COLUMNS = ("Population", "Description")

NA_VALUES = frozenset({"", "NA"})
_TRUE = frozenset({"TRUE", "T", "1"})
_FALSE = frozenset({"FALSE", "F", "0"})

Edge = tuple[str, str]


@dataclass(frozen=True)
class EdgeRecord:
    """One row of the edge table."""

    parent: str
    child: str
    estimate: int | None = None
    total: int | None = None
    count: int | None = None
    population: bool = False
    description: str | None = None
    row: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.total is not None and self.total <= 0:
            raise TreeDataError("Total must be positive", self.row)
        if self.estimate is not None:
            if self.total is None:
                raise TreeDataError("Estimate given without Total", self.row)
            if self.estimate < 0:
                raise TreeDataError("Estimate must be nonnegative", self.row)
            if self.estimate > self.total:
                raise TreeDataError(
                    f"Estimate {self.estimate} exceeds Total {self.total}", self.row
                )
        if self.count is not None and self.count < 0:
            raise TreeDataError("Count must be nonnegative", self.row)
        if self.population and self.estimate is None:
            raise TreeDataError(
                "Population=TRUE requires Estimate and Total", self.row
            )

    @property
    def edge(self) -> Edge:
        return (self.parent, self.child)

    @property
    def informed(self) -> bool:
        """True when the edge carries a branch-probability estimate."""
        return self.estimate is not None and self.total is not None

    @property
    def ratio(self) -> float | None:
        if not self.informed:
            return None
        return self.estimate / self.total


def _parse_int(text, column, row):
    if text in NA_VALUES:
        return None
    try:
        return int(text)
    except ValueError:
        raise TreeDataError(f"{column} must be an integer, got {text!r}", row) from None


def _parse_bool(text, column, row):
    if text in NA_VALUES:
        return False
    upper = text.upper()
    if upper in _TRUE:
        return True
    if upper in _FALSE:
        return False
    raise TreeDataError(f"{column} must be TRUE or FALSE, got {text!r}", row)


def _check_header(header):
    header = [h.strip() for h in header]
    if header[:2] != list(REQUIRED_COLUMNS):
        raise TreeDataError(
            f"header must start with 'from,to', got {','.join(header)!r}"
        )
    rest = header[2:]
    if rest and rest[:3] != list(EVIDENCE_COLUMNS):
        raise TreeDataError(
            "columns after 'from,to' must be 'Estimate,Total,Count'"
        )
    extra = rest[3:]
    allowed = [c for c in OPTIONAL_COLUMNS if c in extra]
    if extra != allowed:
        raise TreeDataError(
            f"unexpected columns {','.join(extra)!r}; "
            "optional columns are Population then Description"
        )
    return header


def parse_edge_table(source: TextIO | Iterable[str] | str) -> list[EdgeRecord]:
    """Parse an edge table from a stream, an iterable of lines, or a string.

    Raises TreeDataError naming the offending data row.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = None
    records = []
    row_no = 0
    for fields in reader:
        if not fields or all(not f.strip() for f in fields):
            continue
        if header is None:
            fields[0] = fields[0].lstrip("﻿")
            header = _check_header(fields)
            continue
        row_no += 1
        if len(fields) != len(header):
            raise TreeDataError(
                f"expected {len(header)} fields, found {len(fields)}", row_no
            )
        values = dict(zip(header, (f.strip() for f in fields)))
        parent, child = values["from"], values["to"]
        if parent in NA_VALUES or child in NA_VALUES:
            raise TreeDataError("'from' and 'to' must be nonempty", row_no)
        description = values.get("Description")
        records.append(
            EdgeRecord(
                parent=parent,
                child=child,
                estimate=_parse_int(values.get("Estimate", ""), "Estimate", row_no),
                total=_parse_int(values.get("Total", ""), "Total", row_no),
                count=_parse_int(values.get("Count", ""), "Count", row_no),
                population=_parse_bool(
                    values.get("Population", ""), "Population", row_no
                ),
                description=None if description in NA_VALUES else description,
                row=row_no,
            )
        )
    if header is None:
        raise TreeDataError("empty edge table (no header row)")
    return records


def read_edge_table(path: str | Path) -> list[EdgeRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_edge_table(fh)


@dataclass(frozen=True)
class RootPath:
    """Root-to-leaf edge sequence together with the leaf's marginal count."""

    leaf: str
    edges: tuple[Edge, ...]
    count: int | None

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class PopTree:
    """A validated rooted tree of population nodes.

    ``children`` maps every internal node to its children in input order and
    ``records`` maps every non-root node to the record of its incoming edge.
    Use :func:`build_tree` rather than constructing this directly.
    """

    root: str
    children: Mapping[str, tuple[str, ...]]
    records: Mapping[str, EdgeRecord]

    @cached_property
    def nodes(self) -> tuple[str, ...]:
        """All nodes in breadth-first order (children in input order)."""
        order = []
        queue = deque([self.root])
        while queue:
            node = queue.popleft()
            order.append(node)
            queue.extend(self.children.get(node, ()))
        return tuple(order)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        return tuple((self.records[n].parent, n) for n in self.nodes[1:])

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if not self.children.get(n))

    @cached_property
    def parents(self) -> tuple[str, ...]:
        """Internal nodes in breadth-first order."""
        return tuple(n for n in self.nodes if self.children.get(n))

    @cached_property
    def informative_leaves(self) -> tuple[str, ...]:
        found = informative_leaves(self)
        return tuple(leaf for leaf in self.leaves if leaf in found)

    def parent_of(self, node: str) -> str | None:
        rec = self.records.get(node)
        return rec.parent if rec is not None else None

    def record(self, edge: Edge) -> EdgeRecord:
        rec = self.records.get(edge[1])
        if rec is None or rec.parent != edge[0]:
            raise KeyError(edge)
        return rec

    def count(self, node: str) -> int | None:
        rec = self.records.get(node)
        return rec.count if rec is not None else None

    def depth(self, node: str) -> int:
        d = 0
        while node != self.root:
            node = self.records[node].parent
            d += 1
        return d

    def with_evidence(self, edge: Edge, estimate, total, population=None) -> PopTree:
        """Return a copy of the tree with the evidence on ``edge`` replaced."""
        rec = self.record(edge)
        changes = {"estimate": estimate, "total": total}
        if population is not None:
            changes["population"] = population
        elif estimate is None:
            changes["population"] = False
        records = dict(self.records)
        records[edge[1]] = replace(rec, **changes)
        return PopTree(self.root, self.children, records)


def build_tree(records: Iterable[EdgeRecord]) -> PopTree:
    """Validate edge records and assemble the rooted tree."""
    records = list(records)
    if not records:
        raise TreeDataError("edge table has no rows")

    seen_pairs = set()
    incoming: dict[str, EdgeRecord] = {}
    children: dict[str, list[str]] = {}
    order: list[str] = []
    for rec in records:
        if rec.edge in seen_pairs:
            raise TreeDataError(
                f"duplicate edge {rec.parent}->{rec.child}", rec.row
            )
        seen_pairs.add(rec.edge)
        if rec.child in incoming:
            other = incoming[rec.child].parent
            raise TreeDataError(
                f"node {rec.child} has multiple parents ({other}, {rec.parent})",
                rec.row,
            )
        incoming[rec.child] = rec
        children.setdefault(rec.parent, []).append(rec.child)
        for node in rec.edge:
            if node not in order:
                order.append(node)

    roots = [n for n in order if n not in incoming]
    if not roots:
        raise TreeDataError("no root node: every node has a parent (cycle)")
    if len(roots) > 1:
        raise TreeDataError(
            f"multiple roots / disconnected: {', '.join(roots)}"
        )

    tree = PopTree(
        root=roots[0],
        children={p: tuple(c) for p, c in children.items()},
        records=incoming,
    )
    unreached = [n for n in order if n not in set(tree.nodes)]
    if unreached:
        raise TreeDataError(
            f"cycle detected among nodes: {', '.join(unreached)}"
        )
    for node in tree.nodes[1:]:
        rec = incoming[node]
        if rec.count is not None and tree.children.get(node):
            raise TreeDataError(
                f"Count given for internal node {node}; counts are allowed "
                "on leaves only",
                rec.row,
            )
    return tree


def informative_leaves(tree: PopTree) -> set[str]:
    """Leaves with a known count whose every root-path edge has an estimate."""
    found = set()
    for leaf in tree.leaves:
        if leaf == tree.root or tree.count(leaf) is None:
            continue
        if all(tree.record(e).informed for e in path_to_leaf(tree, leaf).edges):
            found.add(leaf)
    return found


def path_to_leaf(tree: PopTree, leaf: str) -> RootPath:
    if leaf not in tree.leaves or leaf == tree.root:
        raise TreeDataError(f"{leaf!r} is not a leaf of the tree")
    edges = []
    node = leaf
    while node != tree.root:
        parent = tree.records[node].parent
        edges.append((parent, node))
        node = parent
    return RootPath(leaf=leaf, edges=tuple(reversed(edges)), count=tree.count(leaf))


def single_node_tree(root: str) -> PopTree:
    """A tree with a root and no edges (useful for rendering only)."""
    return PopTree(root=root, children={}, records={})
