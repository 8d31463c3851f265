"""Recursive-descent parser for the subset of JAGS emitted by the generator.

Grammar (``;`` after a statement is optional)::

    program   := [ "data" block ] "model" block EOF
    block     := "{" stmt* "}"
    stmt      := for | ref ( "<-" expr | "~" call ) [";"]
    for       := "for" "(" IDENT "in" expr ":" expr ")" block
    ref       := IDENT [ "[" expr "]" ]
    expr      := term ( ("+" | "-") term )*
    term      := unary ( ("*" | "/") unary )*
    unary     := "-" unary | atom
    atom      := NUMBER | "(" expr ")" | IDENT "(" args ")"
               | IDENT [ "[" expr [ ":" expr ] "]" ]

Besides syntax, :func:`parse_generated_model` unrolls loops and checks that
no node is defined twice and that every index stays within the extent of
the vector it addresses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ModelSyntaxError

DISTRIBUTIONS = {"dlnorm": 2, "dunif": 2, "ddirch": 1, "dbeta": 2, "dbinom": 2}
FUNCTIONS = {"round": 1, "sum": 1, "c": None}
KEYWORDS = {"data", "model", "for", "in"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9._]*)
  | (?P<op><-|[~(){}\[\],:+\-*/;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ModelSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "ident" and m.group() in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- syntax tree -------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Range:
    lo: object
    hi: object


@dataclass(frozen=True)
class Index:
    name: str
    index: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Assign:
    target: object
    op: str
    expr: object
    line: int
    col: int


@dataclass(frozen=True)
class ForLoop:
    var: str
    lo: object
    hi: object
    body: tuple
    line: int
    col: int


@dataclass(frozen=True)
class Program:
    data: tuple
    model: tuple


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise ModelSyntaxError(f"{message}, found {found!r}", tok.line, tok.col)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("op", "keyword"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.error(f"expected {text!r}")

    def ident(self):
        tok = self.tok
        if tok.kind != "ident":
            self.error("expected an identifier")
        self.i += 1
        return tok.text

    def program(self):
        if self.tok.text not in ("data", "model"):
            self.error("expected data or model block")
        data = ()
        if self.accept("data"):
            data = self.block()
        if not self.accept("model"):
            self.error("expected model block")
        model = self.block()
        if self.tok.kind != "eof":
            self.error("unexpected text after model block")
        return Program(data, model)

    def block(self):
        self.expect("{")
        body = []
        while not self.accept("}"):
            if self.tok.kind == "eof":
                self.error("expected '}'")
            body.append(self.statement())
        return tuple(body)

    def statement(self):
        tok = self.tok
        if self.accept("for"):
            self.expect("(")
            var = self.ident()
            self.expect("in")
            lo = self.expr()
            self.expect(":")
            hi = self.expr()
            self.expect(")")
            return ForLoop(var, lo, hi, self.block(), tok.line, tok.col)
        name = self.ident()
        target = Name(name)
        if self.accept("["):
            target = Index(name, self.expr())
            self.expect("]")
        if self.accept("<-"):
            stmt = Assign(target, "<-", self.expr(), tok.line, tok.col)
        elif self.accept("~"):
            dist_tok = self.tok
            expr = self.atom()
            if not isinstance(expr, Call):
                self.error("expected a distribution after '~'", dist_tok)
            stmt = Assign(target, "~", expr, tok.line, tok.col)
        else:
            self.error("expected '<-' or '~'")
        self.accept(";")
        return stmt

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Num(float(tok.text))
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        name = self.ident()
        if self.accept("("):
            where = (tok.line, tok.col)
            args = []
            if not self.accept(")"):
                args.append(self.expr())
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
            return Call(name, tuple(args), *where)
        if self.accept("["):
            idx = self.expr()
            if self.accept(":"):
                idx = Range(idx, self.expr())
            self.expect("]")
            return Index(name, idx)
        return Name(name)


def parse_program(text: str) -> Program:
    return _Parser(text).program()


# -- semantic pass -------------------------------------------------------------


def unparse(node) -> str:
    if isinstance(node, Num):
        v = node.value
        return str(int(v)) if v == int(v) else repr(v)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Range):
        return f"{unparse(node.lo)}:{unparse(node.hi)}"
    if isinstance(node, Index):
        return f"{node.name}[{unparse(node.index)}]"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(unparse(a) for a in node.args)})"
    if isinstance(node, BinOp):
        return f"{unparse(node.left)} {node.op} {unparse(node.right)}"
    if isinstance(node, Neg):
        return f"-{unparse(node.operand)}"
    raise TypeError(node)


def _element(name, k):
    return name if k is None else f"{name}[{k}]"


@dataclass
class ParseSummary:
    """Symbol tables of an accepted model.

    ``sampled`` and ``deterministic`` hold concrete node names with loop
    indices expanded (``ABC[2]``).  ``conservation`` maps each sibling tuple
    whose last member is defined as a residual to the reference of the
    population its members sum to.
    """

    declared: set[str] = field(default_factory=set)
    sampled: set[str] = field(default_factory=set)
    deterministic: set[str] = field(default_factory=set)
    loops: list[tuple[str, int, int]] = field(default_factory=list)
    free: set[str] = field(default_factory=set)
    vector_lengths: dict[str, int] = field(default_factory=dict)
    distributions: dict[str, str] = field(default_factory=dict)
    conservation: dict[str, str] = field(default_factory=dict)

    def node_symbols(self) -> set[str]:
        """Stochastic and deterministic nodes minus auxiliary ``.cont``/``.bin``."""
        out = set()
        for sym in self.sampled | self.deterministic:
            base = sym.split("[", 1)[0]
            if base.endswith(".cont") or base.endswith(".bin"):
                continue
            out.add(sym)
        return out

    def count_distribution(self, dist: str) -> int:
        return sum(1 for d in self.distributions.values() if d == dist)


class _Analyzer:
    def __init__(self):
        self.summary = ParseSummary()
        self.defs = {}  # element -> (op, rhs)
        self.arrays = {}  # name -> set of defined indices
        self.refs = []  # (name, index, line, col)

    def error(self, message, stmt):
        raise ModelSyntaxError(message, stmt.line, stmt.col)

    def eval_int(self, node, env, stmt):
        if isinstance(node, Num):
            if node.value != int(node.value):
                self.error(f"index {node.value} is not an integer", stmt)
            return int(node.value)
        if isinstance(node, Name) and node.name in env:
            return env[node.name]
        if isinstance(node, BinOp) and node.op in "+-*":
            a = self.eval_int(node.left, env, stmt)
            b = self.eval_int(node.right, env, stmt)
            return a + b if node.op == "+" else a - b if node.op == "-" else a * b
        if isinstance(node, Neg):
            return -self.eval_int(node.operand, env, stmt)
        self.error(f"index expression {unparse(node)!r} is not constant", stmt)

    def resolve(self, target, env, stmt):
        if isinstance(target, Name):
            return target.name, None
        k = self.eval_int(target.index, env, stmt)
        if k < 1:
            self.error(f"index {k} of {target.name} is below 1", stmt)
        return target.name, k

    def collect(self, node, env, stmt, allow_dist=False):
        if isinstance(node, Num):
            return
        if isinstance(node, Name):
            if node.name not in env:
                self.refs.append((node.name, None, stmt))
            return
        if isinstance(node, Index):
            if isinstance(node.index, Range):
                lo = self.eval_int(node.index.lo, env, stmt)
                hi = self.eval_int(node.index.hi, env, stmt)
                if lo > hi:
                    self.error(f"empty range {lo}:{hi} on {node.name}", stmt)
                for k in range(lo, hi + 1):
                    self.refs.append((node.name, k, stmt))
            else:
                self.refs.append((node.name, self.eval_int(node.index, env, stmt), stmt))
            return
        if isinstance(node, Call):
            if node.func in DISTRIBUTIONS:
                if not allow_dist:
                    self.error(f"distribution {node.func} outside a '~' statement", node)
                arity = DISTRIBUTIONS[node.func]
            elif node.func in FUNCTIONS:
                arity = FUNCTIONS[node.func]
            else:
                self.error(f"unsupported function or distribution {node.func!r}", node)
            if arity is not None and len(node.args) != arity:
                self.error(
                    f"{node.func} takes {arity} argument(s), got {len(node.args)}", node
                )
            if node.func == "c" and not node.args:
                self.error("c() needs at least one argument", stmt)
            for arg in node.args:
                self.collect(arg, env, stmt)
            return
        if isinstance(node, BinOp):
            self.collect(node.left, env, stmt)
            self.collect(node.right, env, stmt)
            return
        if isinstance(node, Neg):
            self.collect(node.operand, env, stmt)
            return
        raise TypeError(node)

    def define(self, name, k, op, rhs, stmt):
        elem = _element(name, k)
        if elem in self.defs:
            kind = "stochastic" if op == "~" else "deterministic"
            self.error(f"{kind} symbol {elem} redeclared", stmt)
        if k is None and name in self.arrays or k is not None and name in self.defs:
            self.error(f"{name} used both as a scalar and as a vector", stmt)
        self.defs[elem] = (op, rhs)
        if k is not None:
            self.arrays.setdefault(name, set()).add(k)
        if op == "~":
            self.summary.sampled.add(elem)
            self.summary.distributions[elem] = rhs.func
        else:
            self.summary.deterministic.add(elem)

    def data_block(self, stmts):
        for stmt in stmts:
            if not isinstance(stmt, Assign) or stmt.op != "<-":
                line = getattr(stmt, "line", None)
                raise ModelSyntaxError(
                    "only deterministic assignments are allowed in the data block",
                    line, getattr(stmt, "col", None),
                )
            name, k = self.resolve(stmt.target, {}, stmt)
            elem = _element(name, k)
            if elem in self.summary.declared:
                self.error(f"data symbol {elem} redeclared", stmt)
            self.collect(stmt.expr, {}, stmt)
            self.summary.declared.add(elem)
            if isinstance(stmt.expr, Call) and stmt.expr.func == "c":
                self.summary.vector_lengths[elem] = len(stmt.expr.args)

    def model_block(self, stmts, env):
        for stmt in stmts:
            if isinstance(stmt, ForLoop):
                if stmt.var in env:
                    self.error(f"loop variable {stmt.var} shadows an outer loop", stmt)
                lo = self.eval_int(stmt.lo, env, stmt)
                hi = self.eval_int(stmt.hi, env, stmt)
                self.summary.loops.append((stmt.var, lo, hi))
                for value in range(lo, hi + 1):
                    self.model_block(stmt.body, {**env, stmt.var: value})
                continue
            name, k = self.resolve(stmt.target, env, stmt)
            if stmt.op == "~":
                self.collect(stmt.expr, env, stmt, allow_dist=True)
                if stmt.expr.func == "ddirch" and k is None:
                    arg = stmt.expr.args[0]
                    if isinstance(arg, Name):
                        size = self.summary.vector_lengths.get(arg.name)
                        if size is not None:
                            self.summary.vector_lengths[name] = size
            else:
                if isinstance(stmt.expr, Call) and stmt.expr.func in DISTRIBUTIONS:
                    self.error(f"distribution {stmt.expr.func} needs '~'", stmt)
                self.collect(stmt.expr, env, stmt)
            self.define(name, k, stmt.op, stmt.expr, stmt)

    def check_refs(self):
        lengths = self.summary.vector_lengths
        for name, k, stmt in self.refs:
            if k is None:
                if name not in self.defs and name not in self.arrays \
                        and name not in self.summary.declared:
                    self.summary.free.add(name)
                continue
            if name in lengths:
                if not 1 <= k <= lengths[name]:
                    self.error(
                        f"index {k} out of bounds for {name} (1..{lengths[name]})",
                        stmt,
                    )
            elif name in self.arrays:
                if k not in self.arrays[name]:
                    top = max(self.arrays[name])
                    self.error(
                        f"index {k} out of bounds for {name} "
                        f"(defined indices 1..{top})",
                        stmt,
                    )
            elif name in self.defs:
                self.error(f"scalar {name} indexed as a vector", stmt)
            else:
                self.summary.free.add(name)

    def conservation(self):
        for name, idx in self.arrays.items():
            n = max(idx)
            if idx != set(range(1, n + 1)) or n < 2:
                continue
            op, rhs = self.defs[_element(name, n)]
            members = [self.defs[_element(name, k)] for k in range(1, n)]
            if op != "<-" or any(m[0] != "~" or m[1].func != "dbinom" for m in members):
                continue
            if not (isinstance(rhs, BinOp) and rhs.op == "-"):
                continue
            left, right = rhs.left, rhs.right
            if n == 2 and right == Index(name, Num(1.0)):
                self.summary.conservation[name] = unparse(left)
            elif (
                isinstance(right, Call)
                and right.func == "sum"
                and right.args[0] == Index(name, Range(Num(1.0), Num(float(n - 1))))
                and isinstance(left, Index)
                and left.index == Num(1.0)
            ):
                start = self.defs.get(_element(left.name, 1))
                if start is not None and start[0] == "<-":
                    self.summary.conservation[name] = unparse(start[1])


def parse_generated_model(text: str) -> ParseSummary:
    """Parse and check model text; raise ModelSyntaxError with line:col."""
    program = parse_program(text)
    analyzer = _Analyzer()
    analyzer.data_block(program.data)
    analyzer.model_block(program.model, {})
    analyzer.check_refs()
    analyzer.conservation()
    return analyzer.summary
