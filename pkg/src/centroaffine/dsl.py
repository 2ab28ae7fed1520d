"""
Text format for parametrized hypersurfaces.

A surface file is a list of ``key=value`` statements separated by newlines
or ``;``. ``#`` starts a comment that runs to the end of the line.

    name=shifted paraboloid
    n=2
    x1=u1
    x2=u2
    x3=1 + (u1^2 + u2^2)/2
    guard=2 - u1^2 - u2^2     # optional, chart valid where guard > 0

Expressions use ``+ - * /``, unary minus, parentheses, ``^`` with a real
literal exponent (right associative, so ``u1^2^3`` is ``u1^8``), the
functions ``sqrt ln exp sin cos`` and the chart variables ``u1 .. un``.
The full grammar is in ``docs/grammar.md``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from . import jets
from .errors import DomainError, ParseError, SingularJetError

FUNCTIONS = ("sqrt", "ln", "exp", "sin", "cos")


# --------------------------------------------------------------------------
# expression tree


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero-based; printed as u{index+1}


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^ ; for ^ the right child is a Const
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class SurfaceSpec:
    name: str
    nvars: int
    components: tuple
    domain_guard: Optional[Node] = None

    def __post_init__(self):
        if self.nvars < 1:
            raise ValueError("nvars must be >= 1")
        if len(self.components) != self.nvars + 1:
            raise ValueError(
                f"expected {self.nvars + 1} components, got {len(self.components)}"
            )

    @property
    def n(self):
        return self.nvars

    def evaluate(self, args):
        """Evaluate every component on ``args`` (floats or TaylorJets)."""
        return [evaluate(c, args) for c in self.components]

    def guard_ok(self, point):
        if self.domain_guard is None:
            return True
        try:
            return evaluate(self.domain_guard, [float(p) for p in point]) > 0
        except DomainError:
            return False

    def to_text(self):
        lines = [f"name={self.name}", f"n={self.nvars}"]
        lines += [f"x{k + 1}={to_text(c)}" for k, c in enumerate(self.components)]
        if self.domain_guard is not None:
            lines.append(f"guard={to_text(self.domain_guard)}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_number(x):
    text = repr(float(x))
    if text in ("inf", "-inf", "nan"):
        raise ValueError(f"cannot print non-finite constant {x!r}")
    return text


def to_text(node, parent_prec=0):
    """Render an expression so that parsing the text gives back the same tree."""
    if isinstance(node, Const):
        if node.value < 0:
            # parser never produces negative literals outside exponents
            return f"({_fmt_number(node.value)})"
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return f"u{node.index + 1}"
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    if isinstance(node, Neg):
        text = "-" + to_text(node.operand, 3)
        return f"({text})" if parent_prec > 1 else text
    if node.op == "^":
        base = to_text(node.left, 4)
        r = node.right.value
        exp_text = _fmt_number(r) if r >= 0 else f"({_fmt_number(r)})"
        text = f"{base}^{exp_text}"
        return f"({text})" if parent_prec > 3 else text
    prec = _PREC[node.op]
    left = to_text(node.left, prec)
    right = to_text(node.right, prec + 1)
    text = f"{left} {node.op} {right}"
    return f"({text})" if prec < parent_prec else text


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


class _Tokens:
    def __init__(self, text, line, col0):
        self.items = []
        self.line = line
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ParseError(f"unexpected character {text[bad]!r}", line, col0 + bad)
            kind = m.lastgroup
            start = m.start(kind)
            self.items.append((kind, m.group(kind), col0 + start))
            pos = m.end()
        self.end_col = col0 + len(text)
        self.i = 0

    def peek(self):
        return self.items[self.i] if self.i < len(self.items) else (None, None, self.end_col)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        what = "end of expression" if tok[0] is None else repr(tok[1])
        return ParseError(f"{message} (at {what})", self.line, tok[2])


class _Parser:
    def __init__(self, text, nvars, line=1, col0=1):
        self.toks = _Tokens(text, line, col0)
        self.nvars = nvars

    def parse(self):
        node = self.expr()
        if self.toks.peek()[0] is not None:
            raise self.toks.error("unexpected token")
        return node

    def expr(self):
        node = self.term()
        while self.toks.peek()[1] in ("+", "-") and self.toks.peek()[0] == "op":
            op = self.toks.next()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.toks.peek()[1] in ("*", "/") and self.toks.peek()[0] == "op":
            op = self.toks.next()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.toks.peek()
        if kind == "op" and val == "-":
            self.toks.next()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.toks.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.toks.peek()[1] == "^":
            self.toks.next()
            return BinOp("^", base, Const(self.exponent()))
        return base

    def exponent(self):
        kind, val, _ = self.toks.peek()
        sign = 1.0
        if kind == "op" and val in ("-", "+"):
            self.toks.next()
            sign = -1.0 if val == "-" else 1.0
            kind, val, _ = self.toks.peek()
        if kind == "num":
            self.toks.next()
            r = float(val)
        elif kind == "op" and val == "(":
            self.toks.next()
            r = self.exponent()
            if self.toks.next()[1] != ")":
                raise self.toks.error("expected ')' after exponent")
        else:
            raise self.toks.error("exponent must be a real literal")
        if self.toks.peek()[1] == "^":
            tok = self.toks.next()
            e = self.exponent()
            if r < 0 and not float(e).is_integer():
                raise self.toks.error("non-integer power of a negative exponent literal", tok)
            try:
                r = r ** e
            except (OverflowError, ZeroDivisionError):
                raise self.toks.error("exponent literal out of range", tok) from None
        return sign * r

    def atom(self):
        tok = self.toks.next()
        kind, val, col = tok
        if kind == "num":
            return Const(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                if self.toks.peek()[1] != "(":
                    raise self.toks.error(f"expected '(' after {val}")
                self.toks.next()
                arg = self.expr()
                if self.toks.next()[1] != ")":
                    raise self.toks.error("expected ')'")
                return Call(val, arg)
            m = re.fullmatch(r"u([1-9]\d*)", val)
            if m and int(m.group(1)) <= self.nvars:
                return Var(int(m.group(1)) - 1)
            raise ParseError(f"unknown identifier {val!r}", self.toks.line, col)
        if kind == "op" and val == "(":
            node = self.expr()
            if self.toks.next()[1] != ")":
                raise self.toks.error("expected ')'")
            return node
        raise self.toks.error("expected a number, variable, function or '('", tok)


def parse_expr(text, nvars, line=1, col0=1):
    return _Parser(text, nvars, line, col0).parse()


def _statements(text):
    """Yield (key, value, line, value_column) for every statement."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        col = 0
        for part in line.split(";"):
            start = col
            col += len(part) + 1
            if not part.strip():
                continue
            if "=" not in part:
                lead = len(part) - len(part.lstrip())
                raise ParseError("expected key=value", lineno, start + lead + 1)
            key, value = part.split("=", 1)
            yield key.strip(), value, lineno, start + len(key) + 2


def parse_surface(text):
    """Parse a surface definition into a :class:`SurfaceSpec`."""
    stmts = list(_statements(text))
    seen = {}
    for key, value, line, col in stmts:
        if key in seen:
            raise ParseError(f"duplicate key {key!r}", line, 1)
        seen[key] = (value, line, col)

    if "n" not in seen:
        raise ParseError("missing n=<int>")
    nval, nline, ncol = seen["n"]
    try:
        nvars = int(nval.strip())
    except ValueError:
        raise ParseError(f"n must be an integer, got {nval.strip()!r}", nline, ncol) from None
    if nvars < 1:
        raise ParseError("n must be >= 1", nline, ncol)

    name = seen["name"][0].strip() if "name" in seen else "surface"
    components = {}
    guard = None
    for key, (value, line, col) in seen.items():
        if key in ("n", "name"):
            continue
        if key == "guard":
            guard = parse_expr(value, nvars, line, col)
            continue
        m = re.fullmatch(r"x([1-9]\d*)", key)
        if not m:
            raise ParseError(f"unknown key {key!r}", line, 1)
        k = int(m.group(1))
        if k > nvars + 1:
            raise ParseError(
                f"component x{k} exceeds ambient dimension {nvars + 1}", line, 1
            )
        components[k] = parse_expr(value, nvars, line, col)

    missing = [k for k in range(1, nvars + 2) if k not in components]
    if missing:
        raise ParseError(
            f"component-count mismatch: n={nvars} needs x1..x{nvars + 1}, "
            f"missing {', '.join(f'x{k}' for k in missing)}"
        )
    return SurfaceSpec(name, nvars, tuple(components[k] for k in range(1, nvars + 2)), guard)


def load_surface(path):
    with open(path, encoding="utf-8") as fh:
        return parse_surface(fh.read())


# --------------------------------------------------------------------------
# evaluation


def evaluate(node, args):
    """Evaluate ``node`` with ``args[i]`` bound to ``u{i+1}``.

    ``args`` may hold floats or :class:`~centroaffine.jets.TaylorJet` values;
    domain violations raise :class:`DomainError` naming the failing subexpression.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return args[node.index]
    if isinstance(node, Neg):
        return -evaluate(node.operand, args)
    if isinstance(node, Call):
        x = evaluate(node.arg, args)
        try:
            return jets.ELEMENTARY[node.fn](x)
        except DomainError as exc:
            if exc.expr is None:
                raise DomainError(str(exc), to_text(node)) from None
            raise
    a = evaluate(node.left, args)
    if node.op == "^":
        try:
            return jets.power(a, node.right.value)
        except (DomainError, SingularJetError, ZeroDivisionError) as exc:
            raise DomainError(str(exc), to_text(node)) from None
    b = evaluate(node.right, args)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    try:
        return a / b
    except (SingularJetError, ZeroDivisionError) as exc:
        raise DomainError(f"division by zero ({exc})", to_text(node)) from None


def eval_expr_jet(node, point, nvars=None):
    """Order-4 jet of ``node`` at ``point``."""
    nvars = len(point) if nvars is None else nvars
    if len(point) != nvars:
        raise ValueError(f"point has {len(point)} coordinates, expected {nvars}")
    seeds = [jets.seed_variable(i, float(p), nvars) for i, p in enumerate(point)]
    out = evaluate(node, seeds)
    if not isinstance(out, jets.TaylorJet):
        out = jets.TaylorJet.const(out, nvars)
    return out
