"""JAGS model text for a population tree.

Naming: a sibling group is a tuple named by concatenating its child labels
(``ABC``), member ``k`` is ``ABC[k]``; the branch probability below node
``X`` is ``pX`` and its prior parameters ``pX.params``.  Groups of two use a
Beta/Binomial pair; larger groups a Dirichlet split into sequential
binomials.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import CodegenError
from ..tree import PopTree

ROOT_PRIORS = ("lognormal", "uniform")

LABEL_RE = re.compile(r"[A-Za-z][A-Za-z0-9.]*\Z")

PREAMBLE = (
    "# This JAGS model was created using 'makeJAGStree' in the 'JAGStree' "
    "package in R.\n"
    "# The root may have lognormal or discretized uniform prior.\n"
    "# Branching and leaf prior distributions are assumed Dirichlet and "
    "Multinomial, \n"
    "# respectively. \n"
)

# every emitted statement line ends in a space; blank lines hold one tab
_BLANK = "\t\n"


@dataclass(frozen=True)
class JagsModelText:
    preamble: str
    data_chunk: str
    model_chunk: str

    @property
    def text(self) -> str:
        return self.preamble + _BLANK + self.data_chunk + _BLANK + self.model_chunk

    def __str__(self):
        return self.text


def sibling_tuple_name(labels) -> str:
    labels = list(labels)
    if not labels:
        raise ValueError("a sibling group needs at least one member")
    return "".join(labels)


def member_ref(labels, index: int) -> str:
    """Reference to the ``index``-th (1-based) member of a sibling tuple."""
    return f"{sibling_tuple_name(labels)}[{index}]"


def _line(text, depth=1):
    return "\t" * depth + text + " \n"


def _node_ref(tree: PopTree, node: str) -> str:
    if node == tree.root:
        return node
    parent = tree.records[node].parent
    siblings = tree.children[parent]
    return member_ref(siblings, siblings.index(node) + 1)


def _check_tree(tree: PopTree):
    for node in tree.nodes:
        if not LABEL_RE.match(node):
            raise CodegenError(
                f"node label {node!r} is not a valid model identifier "
                "(a letter followed by letters, digits or periods)"
            )
    for parent in tree.parents:
        if len(tree.children[parent]) == 1:
            raise CodegenError(
                f"node {parent} has a single child; no branching "
                "distribution is defined for one-member groups"
            )


def _data_chunk(tree):
    lines = ["data { \n"]
    for parent in tree.parents:
        n = len(tree.children[parent])
        args = ", ".join(f"p{parent}{i}" for i in range(1, n + 1))
        lines.append(_line(f"p{parent}.params <- c({args});"))
    lines.append("} \n")
    return "".join(lines)


def _root_prior(root, prior):
    if prior == "lognormal":
        dist = "dlnorm(mu, tau)"
    elif prior == "uniform":
        dist = "dunif(Lz, Uz)"
    else:
        raise CodegenError(f"unknown root prior {prior!r}; choose from {ROOT_PRIORS}")
    return [_line(f"{root}.cont ~ {dist};"), _line(f"{root} <- round({root}.cont);")]


def _binary_group(x, tup, ref):
    p = f"p{x}"
    return [
        _line(f"{p} ~ dbeta({p}.params[1], {p}.params[2]);"),
        _line(f"{tup}[1] ~ dbinom({p}, {ref});"),
        _line(f"{tup}[2] <- {ref} - {tup}[1];"),
    ]


def _multi_group(x, tup, ref, n):
    p = f"p{x}"
    b = f"{x}.bin"
    return [
        _line(f"{p} ~ ddirch({p}.params);"),
        _line(f"{b}[1] <- {ref};"),
        _line(f"{p}.bin[1] <- {p}[1];"),
        _line(f"for (i in 2:{n}){{"),
        _line(f"{b}[i] <- {b}[i-1] - {tup}[i-1]", 2),
        _line(f"{p}.bin[i] <- {p}[i]/(sum({p}[i:{n}]))", 2),
        _line("}"),
        _line(f"for (i in 1:{n - 1}){{"),
        _line(f"{tup}[i] ~ dbinom({p}.bin[i], {b}[i])", 2),
        _line("}"),
        _line(f"{tup}[{n}] <- {b}[1] - sum({tup}[1:{n - 1}]);"),
    ]


def _model_chunk(tree, prior):
    lines = ["model { \n"]
    lines += _root_prior(tree.root, prior)
    for parent in tree.parents:
        kids = tree.children[parent]
        tup = sibling_tuple_name(kids)
        ref = _node_ref(tree, parent)
        if len(kids) == 2:
            lines += _binary_group(parent, tup, ref)
        else:
            lines += _multi_group(parent, tup, ref, len(kids))
        lines.append(_BLANK)
    lines.append("} \n")
    return "".join(lines)


def generate_model(tree: PopTree, root_prior: str = "lognormal") -> JagsModelText:
    """Emit the model script; groups appear in breadth-first parent order."""
    _check_tree(tree)
    model = _model_chunk(tree, root_prior)
    return JagsModelText(PREAMBLE, _data_chunk(tree), model)
