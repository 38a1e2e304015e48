"""Small expression language for time-dependent rates.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | 't' | 'pi' | NAME '(' expr (',' expr)* ')' | '(' expr ')'

``-t^2`` is ``-(t^2)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .errors import ValidationError


class ExprSyntaxError(ValidationError):
    def __init__(self, msg, offset):
        self.offset = offset
        super().__init__(f"{msg} at byte offset {offset}")


class ExprEvalError(ValidationError, ArithmeticError):
    pass


FUNCTIONS = {
    "exp": (1, math.exp),
    "sin": (1, math.sin),
    "cos": (1, math.cos),
    "tan": (1, math.tan),
    "sinh": (1, math.sinh),
    "cosh": (1, math.cosh),
    "tanh": (1, math.tanh),
    "sqrt": (1, math.sqrt),
    "abs": (1, abs),
    "min": (2, min),
    "max": (2, max),
}
CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "t"


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))")


def _tokenize(src: str):
    data = src.encode("utf-8")
    # offsets reported in bytes; map char index -> byte index
    byte_at = [len(src[:i].encode("utf-8")) for i in range(len(src) + 1)]
    pos = 0
    tokens = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            if src[pos:].strip() == "":
                break
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", byte_at[bad])
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), byte_at[m.start(kind)]))
        pos = m.end()
    tokens.append(("end", "", len(data)))
    return tokens


class _Parser:
    def __init__(self, src):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, off = self.take()
        if val != text or kind != "op":
            raise ExprSyntaxError(f"expected {text!r}, found {val or 'end of input'!r}", off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            value = float(val)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"literal {val!r} is out of range", off)
            return Num(value)
        if kind == "name":
            if val == "t":
                return Var()
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                arity = FUNCTIONS[val][0]
                self.expect("(")
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != arity:
                    raise ExprSyntaxError(f"{val} takes {arity} argument(s), got {len(args)}", off)
                return Call(val, tuple(args))
            raise ExprSyntaxError(f"unknown identifier {val!r}", off)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", off)


def parse_rate_expr(src: str) -> Node:
    if not isinstance(src, str):
        raise ValidationError(f"expression must be a string, got {type(src).__name__}")
    return _Parser(src).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_source(node: Node) -> str:
    """Print an expression so that parsing it gives back the same tree."""
    def wrap(child, min_prec):
        s = to_source(child)
        return f"({s})" if _prec(child) < min_prec else s

    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        return "-" + wrap(node.arg, _PREC["neg"])
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    p = _PREC[node.op]
    if node.op == "^":
        return f"{wrap(node.left, p + 1)}^{wrap(node.right, _PREC['neg'])}"
    return f"{wrap(node.left, p)} {node.op} {wrap(node.right, p + 1)}"


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    if isinstance(node, Num) and (node.value < 0 or math.copysign(1, node.value) < 0):
        return _PREC["neg"]
    return 5


def evaluate(node: Node, t: float) -> float:
    try:
        val = _eval(node, float(t))
    except (ZeroDivisionError, ValueError) as exc:
        raise ExprEvalError(f"evaluation failed at t={t!r}: {exc}") from None
    except OverflowError:
        raise ExprEvalError(f"overflow at t={t!r}") from None
    if isinstance(val, complex) or not math.isfinite(val):
        raise ExprEvalError(f"non-real or non-finite value at t={t!r}")
    return val


def _eval(node, t):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, t)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.name][1]
        return float(fn(*(_eval(a, t) for a in node.args)))
    a = _eval(node.left, t)
    b = _eval(node.right, t)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    if a < 0 and not float(b).is_integer():
        raise ValueError("fractional power of a negative number")
    if a == 0 and b < 0:
        raise ZeroDivisionError("zero to a negative power")
    return a ** b


class RateExpr:
    """A parsed rate expression, callable on a time value."""

    def __init__(self, src: str | float | int):
        if isinstance(src, (int, float)) and not isinstance(src, bool):
            src = repr(float(src))
        self.source = src
        self.tree = parse_rate_expr(src)

    def __call__(self, t: float = 0.0) -> float:
        return evaluate(self.tree, t)

    def __repr__(self):
        return f"RateExpr({self.source!r})"
