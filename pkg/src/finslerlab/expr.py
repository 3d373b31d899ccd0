"""Coefficient-function expressions: AST, parser, printer, evaluator.

Grammar (whitespace insignificant)::

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | base ('^' exponent)?
    base     := number | ident | func '(' expr ')' | '(' expr ')'
    func     := 'sqrt' | 'exp' | 'sin' | 'cos'
    ident    := ('x' | 'y') digit+
    exponent := integer | '(' ['-'] integer ['/' integer] ')'

Identifiers are 1-based: ``x1..xn`` are position coordinates and ``y1..yn``
direction components.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Union

FUNCTIONS = ("sqrt", "exp", "sin", "cos")


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class IndexOutOfRangeError(ExprError):
    def __init__(self, name: str, n: int, offset: int | None = None):
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"identifier {name!r} out of range for n={n}{where}")
        self.name = name
        self.n = n
        self.offset = offset


class DomainError(ArithmeticError):
    """Evaluation left the domain of an operation (pole, negative sqrt, ...)."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in subexpression {to_source(subexpr)!r}")
        self.subexpr = subexpr


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "y"
    index: int  # 1-based

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: Fraction


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


Expr = Union[Num, Var, BinOp, Pow, Neg, Func]


def children(e: Expr) -> tuple:
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, (Pow,)):
        return (e.base,)
    if isinstance(e, (Neg, Func)):
        return (e.arg,)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def variables(e: Expr) -> set[Var]:
    return {node for node in walk(e) if isinstance(node, Var)}


def max_index(e: Expr) -> int:
    return max((v.index for v in variables(e)), default=0)


def depends_on(e: Expr, kind: str) -> bool:
    return any(v.kind == kind for v in variables(e))


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)
_IDENT_RE = re.compile(r"([xy])(\d+)\Z")


@dataclass
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, n: int | None):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.n = n

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "end":
            raise ExprSyntaxError(f"expected {text!r}", self.tok.offset)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected token {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            left = BinOp(op, left, self.factor())
        return left

    def factor(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.factor())
        base = self.base()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def _integer(self) -> int:
        tok = self.tok
        if tok.kind != "number" or not tok.text.isdigit():
            raise ExprSyntaxError("expected integer exponent", tok.offset)
        self.advance()
        return int(tok.text)

    def exponent(self) -> Fraction:
        if self.tok.kind == "op" and self.tok.text == "(":
            self.advance()
            sign = 1
            if self.tok.kind == "op" and self.tok.text == "-":
                self.advance()
                sign = -1
            num = self._integer()
            den = 1
            if self.tok.kind == "op" and self.tok.text == "/":
                self.advance()
                den = self._integer()
                if den == 0:
                    raise ExprSyntaxError("zero denominator in exponent", self.tokens[self.pos - 1].offset)
            self.expect(")")
            return Fraction(sign * num, den)
        return Fraction(self._integer())

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(tok.text, arg)
            m = _IDENT_RE.match(tok.text)
            if m is None:
                raise UnknownIdentifierError(tok.text, tok.offset)
            index = int(m.group(2))
            if index < 1 or (self.n is not None and index > self.n):
                raise IndexOutOfRangeError(tok.text, self.n if self.n is not None else 0, tok.offset)
            return Var(m.group(1), index)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "end":
            raise ExprSyntaxError("unexpected end of input", tok.offset)
        raise ExprSyntaxError(f"unexpected token {tok.text!r}", tok.offset)


def parse_expr(source: str, n: int | None = None) -> Expr:
    """Parse ``source`` into an AST, checking identifier indices against ``n``."""
    return _Parser(source, n).parse()


# --------------------------------------------------------------------------
# Printer
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_num(v: float) -> str:
    return repr(float(v))


def _fmt_exponent(q: Fraction) -> str:
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    if q.denominator == 1:
        return f"({q.numerator})"
    return f"({q.numerator}/{q.denominator})"


def to_source(e: Expr) -> str:
    """Render ``e`` so that ``parse_expr(to_source(e)) == e``."""
    return _show(e, 0)


def _is_atom(e: Expr) -> bool:
    return isinstance(e, (Num, Var, Func))


def _show(e: Expr, ctx: int) -> str:
    # ctx: 0 = expr, 1 = right operand of +/-, 2 = operand of * /, 3 = factor
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({_show(e.arg, 0)})"
    if isinstance(e, Pow):
        base = _show(e.base, 0)
        if not _is_atom(e.base):
            base = f"({base})"
        return f"{base}^{_fmt_exponent(e.exponent)}"
    if isinstance(e, Neg):
        s = "-" + _show(e.arg, 3)
        return f"({s})" if ctx == 4 else s
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left = _show(e.left, p)
        right = _show(e.right, p + 1)
        if _needs_parens(e.left, p, right_side=False):
            left = f"({left})"
        if _needs_parens(e.right, p, right_side=True):
            right = f"({right})"
        return f"{left} {e.op} {right}" if p == 1 else f"{left}{e.op}{right}"
    raise TypeError(f"not an expression node: {e!r}")


def _needs_parens(child: Expr, parent_prec: int, right_side: bool) -> bool:
    if isinstance(child, BinOp):
        cp = _PREC[child.op]
        return cp < parent_prec or (right_side and cp == parent_prec)
    return False


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def evaluate(e: Expr, x, y, lib=math) -> float:
    """Evaluate at a point with plain floats (``lib=math``) or ``mpmath``.

    Raises DomainError on division by zero, sqrt of a negative number, or a
    non-integer power of a non-positive base.
    """
    memo: dict = {}

    def ev(node: Expr):
        if node in memo:
            return memo[node]
        if isinstance(node, Num):
            val = lib.mpf(node.value) if lib is not math else node.value
        elif isinstance(node, Var):
            val = (x if node.kind == "x" else y)[node.index - 1]
        elif isinstance(node, Neg):
            val = -ev(node.arg)
        elif isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                val = a + b
            elif node.op == "-":
                val = a - b
            elif node.op == "*":
                val = a * b
            else:
                if b == 0:
                    raise DomainError("division by zero", node)
                val = a / b
        elif isinstance(node, Pow):
            a = ev(node.base)
            q = node.exponent
            if q.denominator == 1:
                if a == 0 and q < 0:
                    raise DomainError("negative power of zero", node)
                val = a ** int(q)
            else:
                if a < 0 or (a == 0 and q < 0):
                    raise DomainError("fractional power of non-positive base", node)
                val = a ** (lib.mpf(q.numerator) / q.denominator if lib is not math else float(q))
        elif isinstance(node, Func):
            a = ev(node.arg)
            if node.name == "sqrt":
                if a < 0:
                    raise DomainError("sqrt of negative argument", node)
                val = lib.sqrt(a)
            else:
                val = getattr(lib, node.name)(a)
        else:
            raise TypeError(f"not an expression node: {node!r}")
        memo[node] = val
        return val

    return ev(e)


def compile_expr(e: Expr) -> Callable:
    """Return ``f(x, y) -> float`` evaluating ``e`` with plain floats."""
    return lambda x, y: evaluate(e, x, y)


# --------------------------------------------------------------------------
# Construction helpers
# --------------------------------------------------------------------------


def num(v: float) -> Num:
    return Num(float(v))


def is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


def add(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return BinOp("+", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if is_zero(a) or is_zero(b):
        return Num(0.0)
    if isinstance(a, Num) and a.value == 1.0:
        return b
    if isinstance(b, Num) and b.value == 1.0:
        return a
    return BinOp("*", a, b)


def total(terms) -> Expr:
    out: Expr = Num(0.0)
    for t in terms:
        out = add(out, t)
    return out
