"""A small arithmetic expression language for declaring nonlinear plants.

Grammar (EBNF)::

    expr   = term , { ("+" | "-") , term } ;
    term   = unary , { ("*" | "/") , unary } ;
    unary  = "-" , unary | power ;
    power  = atom , [ "^" , unary ] ;
    atom   = number | state | param | "exp" , "(" , expr , ")" | "(" , expr , ")" ;
    state  = "x" , digit , { digit } ;          (* x1 .. xn *)

``^`` is right associative and binds tighter than unary minus, so
``-x1^2`` is ``-(x1^2)`` and ``2^3^2`` is ``2^9``. ``exp`` is the only
function.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "UnboundNameError",
    "Num",
    "Var",
    "Param",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "evaluate",
    "to_string",
    "substitute",
    "compile_expr",
]


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name, offset=None):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r}")


class UnboundNameError(ExprError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"no value bound for {name!r}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero-based


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Param, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)
_STATE = re.compile(r"x([1-9]\d*)")
FUNCTIONS = {"exp": np.exp}


def _tokenize(text):
    toks = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text, n, params):
        self.toks = _tokenize(text)
        self.i = 0
        self.n = n
        self.params = params

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value or kind == "eof":
            raise ExprSyntaxError(f"expected {value!r}", off)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            m = _STATE.fullmatch(val)
            if m and int(m.group(1)) <= self.n:
                return Var(int(m.group(1)) - 1)
            if val in self.params:
                return Param(val)
            raise UnknownIdentifierError(val, off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "eof" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", off)


def parse(text, n, param_names=()):
    """Parse ``text`` over states ``x1..xn`` and the given parameter names."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(text, n, frozenset(param_names))
    node = p.expr()
    kind, val, off = p.peek()
    if kind != "eof":
        raise ExprSyntaxError(f"unexpected {val!r}", off)
    return node


_BINOPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def evaluate(e, x, params=None):
    """Evaluate in IEEE double precision.

    Division by zero and overflow give ``inf``/``nan`` rather than raising.
    ``x`` may also be an ``(n, m)`` array to evaluate ``m`` points at once.
    """
    params = params or {}
    with np.errstate(all="ignore"):
        return _eval(e, x, params)


def _eval(e, x, params):
    if isinstance(e, Num):
        return np.float64(e.value)
    if isinstance(e, Var):
        return np.asarray(x, dtype=float)[e.index]
    if isinstance(e, Param):
        try:
            return np.float64(params[e.name])
        except KeyError:
            raise UnboundNameError(e.name) from None
    if isinstance(e, Neg):
        return -_eval(e.arg, x, params)
    if isinstance(e, BinOp):
        return _BINOPS[e.op](_eval(e.left, x, params), _eval(e.right, x, params))
    if isinstance(e, Call):
        return FUNCTIONS[e.func](_eval(e.arg, x, params))
    raise TypeError(f"not an expression node: {e!r}")


def compile_expr(e, params=None):
    """Bind parameters and return ``f(x) -> float``."""
    params = dict(params or {})
    _check_bound(e, params)
    return lambda x: float(evaluate(e, x, params))


def _check_bound(e, params):
    if isinstance(e, Param):
        if e.name not in params:
            raise UnboundNameError(e.name)
    elif isinstance(e, Neg | Call):
        _check_bound(e.arg, params)
    elif isinstance(e, BinOp):
        _check_bound(e.left, params)
        _check_bound(e.right, params)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg) or (isinstance(e, Num) and (e.value < 0 or str(e.value).startswith("-"))):
        return _NEG_PREC
    return _ATOM_PREC


def _wrap(e, need):
    s = to_string(e)
    return f"({s})" if need else s


def to_string(e):
    """Print with the minimum parentheses the grammar needs."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _prec(e.arg) < _NEG_PREC)
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        if e.op == "^":
            left = _wrap(e.left, _prec(e.left) <= p)
            right = _wrap(e.right, _prec(e.right) < _NEG_PREC)
            return f"{left}^{right}"
        left = _wrap(e.left, _prec(e.left) < p)
        right = _wrap(e.right, _prec(e.right) <= p)
        return f"{left} {e.op} {right}" if p == 1 else f"{left}*{right}" if e.op == "*" else f"{left}/{right}"
    raise TypeError(f"not an expression node: {e!r}")


def substitute(e, states):
    """Replace state variable ``x_{i+1}`` by ``states[i]`` (composition)."""
    if isinstance(e, Var):
        return states[e.index]
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, states))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, states))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, states), substitute(e.right, states))
    return e
