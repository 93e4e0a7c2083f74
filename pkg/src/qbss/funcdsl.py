"""A small expression language for user-supplied test functions f(x).

Grammar (``^`` binds tightest and is right-associative, then unary minus,
then ``* /``, then ``+ -``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | VAR | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Evaluation works on floats and numpy arrays alike.  Poles, square roots of
negatives and overflow raise :class:`FuncEvalError` instead of producing
non-finite values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

FUNCTIONS = {
    "sin": (1, 1), "cos": (1, 1), "exp": (1, 1), "abs": (1, 1), "sqrt": (1, 1),
    "min": (2, None), "max": (2, None),
}


class FuncSyntaxError(ValueError):
    def __init__(self, message: str, column: int, source: str):
        super().__init__(f"column {column}: {message}")
        self.column = column
        self.source = source


class FuncEvalError(ArithmeticError):
    def __init__(self, message: str, span: tuple[int, int], source: str, x=None):
        snippet = source[span[0]:span[1]]
        at = "" if x is None else f" at x={x:g}"
        super().__init__(f"{message} in '{snippet}'{at}")
        self.span = span
        self.snippet = snippet
        self.x = x


# -- AST ------------------------------------------------------------------
# spans are 0-based [start, end) offsets into the source and are ignored by ==

@dataclass(frozen=True)
class Num:
    value: float
    span: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Var:
    name: str = "x"
    span: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    span: tuple[int, int] = field(default=(0, 0), compare=False)


Node = Union[Num, Var, Neg, BinOp, Call]


def Add(a, b): return BinOp("+", a, b)
def Sub(a, b): return BinOp("-", a, b)
def Mul(a, b): return BinOp("*", a, b)
def Div(a, b): return BinOp("/", a, b)
def Pow(a, b): return BinOp("^", a, b)


# -- lexer ----------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Tok]:
    toks, pos = [], 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if not m:
            raise FuncSyntaxError(f"unexpected character {source[pos]!r}", pos + 1, source)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


class _Parser:
    def __init__(self, source: str, variable: str):
        self.source = source
        self.variable = variable
        self.toks = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise FuncSyntaxError(message, tok.pos + 1, self.source)

    def take(self, text: str) -> _Tok:
        if self.tok.kind != "op" or self.tok.text != text:
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            self.error(f"expected {text!r}, found {found}")
        tok = self.tok
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            right = self.term()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            right = self.unary()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            start = self.tok.pos
            self.i += 1
            operand = self.unary()
            return Neg(operand, (start, operand.span[1]))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            exponent = self.unary()
            return BinOp("^", base, exponent, (base.span[0], exponent.span[1]))
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text), (tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "name":
            self.i += 1
            if tok.text == self.variable:
                return Var(tok.text, (tok.pos, tok.pos + len(tok.text)))
            if tok.text not in FUNCTIONS:
                self.error(f"unknown identifier {tok.text!r}", tok)
            self.take("(")
            args = [self.expr()]
            while self.tok.kind == "op" and self.tok.text == ",":
                self.i += 1
                args.append(self.expr())
            close = self.take(")")
            lo, hi = FUNCTIONS[tok.text]
            if len(args) < lo or (hi is not None and len(args) > hi):
                want = str(lo) if hi == lo else f"at least {lo}"
                self.error(f"{tok.text}() takes {want} argument(s), got {len(args)}", tok)
            return Call(tok.text, tuple(args), (tok.pos, close.pos + 1))
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            inner = self.expr()
            close = self.take(")")
            # parentheses leave no node; widen the span so diagnostics show them
            return _respan(inner, (tok.pos, close.pos + 1))
        if tok.kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {tok.text!r}")


def _respan(node: Node, span: tuple[int, int]) -> Node:
    return type(node)(*[getattr(node, f) for f in node.__dataclass_fields__ if f != "span"], span)


# -- evaluation -----------------------------------------------------------

_UNARY = {"abs": np.abs, "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}


def _eval(node: Node, x, source: str):
    def fail(message, mask):
        mask = np.asarray(mask)
        if mask.any():
            if mask.ndim:
                where = float(np.broadcast_to(np.asarray(x, dtype=float), mask.shape)[mask][0])
            else:
                where = float(x) if np.ndim(x) == 0 else None
            raise FuncEvalError(message, node.span, source, where)

    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval(node.operand, x, source)
    if isinstance(node, BinOp):
        a = _eval(node.left, x, source)
        b = _eval(node.right, x, source)
        with np.errstate(all="ignore"):
            if node.op == "+":
                out = np.add(a, b)
            elif node.op == "-":
                out = np.subtract(a, b)
            elif node.op == "*":
                out = np.multiply(a, b)
            elif node.op == "/":
                fail("division by zero", np.equal(b, 0))
                out = np.divide(a, b)
            else:
                a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
                fail("non-integer power of a negative number",
                     (a_arr < 0) & (b_arr != np.round(b_arr)))
                fail("zero raised to a negative power", (a_arr == 0) & (b_arr < 0))
                out = np.power(a_arr, b_arr)
    else:
        args = [_eval(a, x, source) for a in node.args]
        with np.errstate(all="ignore"):
            if node.name == "min":
                out = args[0]
                for a in args[1:]:
                    out = np.minimum(out, a)
            elif node.name == "max":
                out = args[0]
                for a in args[1:]:
                    out = np.maximum(out, a)
            else:
                if node.name == "sqrt":
                    fail("square root of a negative number", np.less(args[0], 0))
                out = _UNARY[node.name](args[0])
    fail("non-finite result", ~np.isfinite(out))
    return out


@dataclass(frozen=True)
class FuncExpr:
    """Parsed expression; callable on floats and numpy arrays."""

    ast: Node
    source: str
    variable: str = "x"

    def __call__(self, x):
        out = _eval(self.ast, x, self.source)
        if np.ndim(x) == 0:
            return float(out)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy()

    def __str__(self):
        return self.source


def parse(source: str, variable: str = "x") -> FuncExpr:
    if not source or not source.strip():
        raise FuncSyntaxError("empty expression", 1, source or "")
    return FuncExpr(_Parser(source, variable).parse(), source, variable)


def eval(expr: FuncExpr, x: float) -> float:  # noqa: A001 - mirrors the DSL operation name
    return expr(x)


def unparse(node: Node) -> str:
    """Fully parenthesized source text that reparses to an equal AST."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{unparse(node.operand)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    return f"{node.name}({', '.join(unparse(a) for a in node.args)})"


BUILTINS = {
    "const1": "1",
    "ident": "x",
    "square": "x^2",
    "sat": "x/(1+x)",
    "sinx": "sin(x)",
    "absshift": "abs(x-1)",
}


def builtin(name: str) -> FuncExpr:
    return parse(BUILTINS[name])


def resolve(text: str, variable: str = "x") -> FuncExpr:
    """A registry name or an expression."""
    if variable == "x" and text in BUILTINS:
        return builtin(text)
    return parse(text, variable)
