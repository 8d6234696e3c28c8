"""Parser and evaluator for closed-form phase-space symbols.

Grammar (whitespace insensitive, standard precedence, left associative):

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' INT)?          # nonnegative integer exponents only
    atom    := NUMBER | 'i' | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are x1..xn and xi1..xin; for n=1 the aliases x and xi work too.
Functions: exp, sin, cos, sqrt, and gauss(a) = exp(-a*(|x|^2 + |xi|^2))
where a must be a constant subexpression.  The imaginary unit is ``i``.

Parse errors carry the byte offset and the set of expected tokens.  The full
grammar is documented in docs/dsl.md.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


class SymbolParseError(ValueError):
    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(expected)
        exp = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"parse error at offset {offset}: {message}{exp}")


class UnknownIdentifierError(SymbolParseError):
    def __init__(self, name: str, offset: int):
        self.name = name
        ValueError.__init__(self, f"unknown identifier {name!r} at offset {offset}")
        self.offset = offset
        self.expected = ()


class SymbolEvalError(ArithmeticError):
    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    kind: str   # "x" or "xi"
    index: int  # 0-based mode


@dataclass(frozen=True)
class BinOp:
    op: str     # + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str   # exp sin cos sqrt gauss
    arg: "Node"


Node = Union[Num, Var, BinOp, Neg, Pow, Call]

FUNCTIONS = ("exp", "sin", "cos", "sqrt", "gauss")


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_CHARS = "+-*/^(),"


@dataclass(frozen=True)
class _Tok:
    kind: str   # op, number, ident, end
    text: str
    offset: int


def _lex(src: str) -> list[_Tok]:
    toks = []
    i, L = 0, len(src)
    while i < L:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _TOKEN_CHARS:
            toks.append(_Tok("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_dot = False
            while j < L and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                seen_dot = seen_dot or src[j] == "."
                j += 1
            if j < L and src[j] in "eE":
                k = j + 1
                if k < L and src[k] in "+-":
                    k += 1
                if k < L and src[k].isdigit():
                    while k < L and src[k].isdigit():
                        k += 1
                    j = k
            text = src[i:j]
            if text == ".":
                raise SymbolParseError("stray '.'", i, ("number",))
            toks.append(_Tok("number", text, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < L and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Tok("ident", src[i:j], i))
            i = j
            continue
        raise SymbolParseError(f"unexpected character {ch!r}", i, ())
    toks.append(_Tok("end", "", L))
    return toks


# ---------------------------------------------------------------------------
# Parser (recursive descent)

_ATOM_EXPECTED = ("number", "identifier", "'('", "'-'")


class _Parser:
    def __init__(self, src: str, n: int):
        self.src = src
        self.n = n
        self.toks = _lex(src)
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.kind == "op" and t.text == text:
            return self.next()
        raise SymbolParseError(
            f"got {t.text!r}" if t.kind != "end" else "unexpected end of input",
            t.offset,
            (f"'{text}'",),
        )

    def parse(self) -> Node:
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise SymbolParseError(f"trailing input {t.text!r}", t.offset, ("end of input",))
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.next()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            self.next()
            e = self.peek()
            if e.kind != "number" or not e.text.isdigit():
                raise SymbolParseError(
                    f"got {e.text!r}" if e.kind != "end" else "unexpected end of input",
                    e.offset,
                    ("nonnegative integer exponent",),
                )
            self.next()
            return Pow(base, int(e.text))
        return base

    def atom(self) -> Node:
        t = self.peek()
        if t.kind == "number":
            self.next()
            return Num(complex(float(t.text)))
        if t.kind == "op" and t.text == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "ident":
            self.next()
            name = t.text
            if name == "i":
                return Num(1j)
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if name == "gauss" and _free_vars(arg):
                    raise SymbolParseError(
                        "gauss() needs a constant argument", t.offset, ("constant",)
                    )
                return Call(name, arg)
            var = self._var(name)
            if var is None:
                raise UnknownIdentifierError(name, t.offset)
            return var
        raise SymbolParseError(
            f"got {t.text!r}" if t.kind != "end" else "unexpected end of input",
            t.offset,
            _ATOM_EXPECTED,
        )

    def _var(self, name: str) -> Var | None:
        if self.n == 1 and name == "x":
            return Var("x", 0)
        if self.n == 1 and name == "xi":
            return Var("xi", 0)
        for kind in ("xi", "x"):  # check "xi" first: "xi1" starts with "x"
            if name.startswith(kind) and name[len(kind):].isdigit():
                idx = int(name[len(kind):])
                if 1 <= idx <= self.n:
                    return Var(kind, idx - 1)
        return None


def _free_vars(node: Node) -> set[tuple[str, int]]:
    if isinstance(node, Var):
        return {(node.kind, node.index)}
    if isinstance(node, BinOp):
        return _free_vars(node.left) | _free_vars(node.right)
    if isinstance(node, Neg):
        return _free_vars(node.arg)
    if isinstance(node, Pow):
        return _free_vars(node.base)
    if isinstance(node, Call):
        return _free_vars(node.arg)
    return set()


# ---------------------------------------------------------------------------
# Public wrapper

@dataclass(frozen=True)
class SymbolExpr:
    """A parsed symbol F(x, xi) on R^{2n}."""

    root: Node
    n: int
    source: str

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return evaluate_many(self, pts)


def parse(src: str, n: int = 1) -> SymbolExpr:
    """Parse a symbol expression for mode count n."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    return SymbolExpr(_Parser(src, n).parse(), n, src)


def _eval(node: Node, x: np.ndarray, xi: np.ndarray, pts_for_err) -> np.ndarray:
    if isinstance(node, Num):
        return np.broadcast_to(np.asarray(node.value), x.shape[:-1]).copy()
    if isinstance(node, Var):
        return (x if node.kind == "x" else xi)[..., node.index].astype(complex)
    if isinstance(node, Neg):
        return -_eval(node.arg, x, xi, pts_for_err)
    if isinstance(node, Pow):
        return _eval(node.base, x, xi, pts_for_err) ** node.exponent
    if isinstance(node, BinOp):
        a = _eval(node.left, x, xi, pts_for_err)
        b = _eval(node.right, x, xi, pts_for_err)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        zero = b == 0
        if np.any(zero):
            idx = int(np.argmax(zero))
            raise SymbolEvalError(
                f"division by zero at point {pts_for_err[idx]}",
                point=pts_for_err[idx],
            )
        return a / b
    if isinstance(node, Call):
        a = _eval(node.arg, x, xi, pts_for_err)
        if node.func == "exp":
            return np.exp(a)
        if node.func == "sin":
            return np.sin(a)
        if node.func == "cos":
            return np.cos(a)
        if node.func == "sqrt":
            return np.sqrt(a)
        # gauss(a) with constant a
        r2 = np.sum(x * x, axis=-1) + np.sum(xi * xi, axis=-1)
        return np.exp(-a * r2)
    raise TypeError(f"unknown node {node!r}")


def evaluate_many(expr: SymbolExpr, pts: np.ndarray) -> np.ndarray:
    """Evaluate on an array of points with shape (..., 2n)."""
    pts = np.asarray(pts, dtype=float)
    n = expr.n
    if pts.shape[-1] != 2 * n:
        raise ValueError(f"points must have {2*n} columns for n={n}")
    x, xi = pts[..., :n], pts[..., n:]
    flat = pts.reshape(-1, 2 * n)
    out = _eval(expr.root, x, xi, flat)
    return np.asarray(out, dtype=complex)


def evaluate(expr: SymbolExpr, X) -> complex:
    """Evaluate at a single PhasePoint (or coordinate vector)."""
    vec = X.vec if hasattr(X, "vec") else np.asarray(X, dtype=float)
    return complex(evaluate_many(expr, vec[None, :])[0])


def to_source(expr: SymbolExpr) -> str:
    """Print the AST back to parseable source (round-trips through parse)."""
    return _print(expr.root, 0)


# precedence levels: 0 add, 1 mul, 2 unary, 3 power, 4 atom
def _print(node: Node, parent_level: int) -> str:
    if isinstance(node, Num):
        v = node.value
        if v == 1j:
            s, level = "i", 4
        elif v.imag == 0:
            s = _fmt_real(v.real)
            level = 2 if v.real < 0 else 4
        else:
            s, level = f"({_fmt_real(v.real)}+{_fmt_real(v.imag)}*i)", 4
        return f"({s})" if level < parent_level else s
    if isinstance(node, Var):
        return f"{node.kind}{node.index + 1}"
    if isinstance(node, Neg):
        s = "-" + _print(node.arg, 2)
        return f"({s})" if parent_level > 2 else s
    if isinstance(node, Pow):
        s = f"{_print(node.base, 4)}^{node.exponent}"
        return f"({s})" if parent_level > 3 else s
    if isinstance(node, Call):
        return f"{node.func}({_print(node.arg, 0)})"
    if isinstance(node, BinOp):
        if node.op in "+-":
            level = 1
            s = f"{_print(node.left, 1)}{node.op}{_print(node.right, 2)}"
            return f"({s})" if parent_level > 1 else s
        level = 2
        s = f"{_print(node.left, 2)}{node.op}{_print(node.right, 3)}"
        return f"({s})" if parent_level > 2 else s
    raise TypeError(f"unknown node {node!r}")


def _fmt_real(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)
