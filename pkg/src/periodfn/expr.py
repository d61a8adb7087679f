"""Polynomial expressions: parsing, printing, evaluation, differentiation.

Grammar (lowest to highest precedence)::

    sum     := product (('+' | '-') product)*
    product := unary ('*' unary)*
    unary   := '-' unary | power
    power   := atom ('^' int)?
    atom    := number | name | '(' sum ')'

so ``-x^2`` is ``-(x^2)`` and exponents must be non-negative integer literals.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprSyntaxError, NonIntegerExponent

ALIASES = ("x", "y", "z", "w")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^()]))")


def _tokenize(text):
    text = text.replace("−", "-")
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            off = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[off]!r}", off)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, dim):
        self.toks = _tokenize(text)
        self.i = 0
        self.dim = dim

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value:
            raise ExprSyntaxError(f"expected {value!r}", off)

    def parse(self):
        node = self.sum()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off)
        return node

    def sum(self):
        node = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.product()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def product(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            node = Mul(node, self.unary())
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
            kind, val, off = self.take()
            if kind != "num":
                raise ExprSyntaxError("exponent must be an integer literal", off)
            if not val.isdigit():
                raise NonIntegerExponent(f"non-integer exponent {val!r}", off)
            return Pow(base, int(val))
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            return Var(self.var_index(val, off))
        if val == "(":
            node = self.sum()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", off)

    def var_index(self, name, off):
        m = re.fullmatch(r"x(\d+)", name)
        if m and int(m.group(1)) >= 1:
            idx = int(m.group(1)) - 1
        elif name in ALIASES and (self.dim is None or self.dim <= 4):
            idx = ALIASES.index(name)
        else:
            raise ExprSyntaxError(f"unknown variable {name!r}", off)
        if self.dim is not None and idx >= self.dim:
            raise ExprSyntaxError(f"variable {name!r} exceeds dimension {self.dim}", off)
        return idx


def parse_expr(text, dim=None):
    """Parse ``text`` into an expression tree over variables ``x1..xn``
    (aliases ``x, y, z, w`` when ``n <= 4``)."""
    return _Parser(text, dim).parse()


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(node):
    """Print with minimal parentheses; ``parse_expr(to_text(e)) == e``."""
    return _print(node, 0)


# binding strength: sum 1, product 2, unary 3, power 4, atom 5
def _print(node, ctx):
    if isinstance(node, Num):
        s, prec = _fmt_num(node.value), 5
    elif isinstance(node, Var):
        s, prec = f"x{node.index + 1}", 5
    elif isinstance(node, Neg):
        s, prec = "-" + _print(node.arg, 3), 3
    elif isinstance(node, (Add, Sub)):
        op = " + " if isinstance(node, Add) else " - "
        s, prec = _print(node.left, 1) + op + _print(node.right, 2), 1
    elif isinstance(node, Mul):
        s, prec = _print(node.left, 2) + "*" + _print(node.right, 3), 2
    elif isinstance(node, Pow):
        s, prec = _print(node.base, 5) + "^" + str(node.exp), 4
    else:
        raise TypeError(f"not an expression node: {node!r}")
    return f"({s})" if prec < ctx else s


def evaluate(node, X):
    """Evaluate at points ``X`` of shape ``(..., n)``."""
    X = np.asarray(X, dtype=float)
    return np.broadcast_to(_eval(node, X), X.shape[:-1]).astype(float)


def _eval(node, X):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return X[..., node.index]
    if isinstance(node, Neg):
        return -_eval(node.arg, X)
    if isinstance(node, Add):
        return _eval(node.left, X) + _eval(node.right, X)
    if isinstance(node, Sub):
        return _eval(node.left, X) - _eval(node.right, X)
    if isinstance(node, Mul):
        return _eval(node.left, X) * _eval(node.right, X)
    if isinstance(node, Pow):
        return _eval(node.base, X) ** node.exp
    raise TypeError(f"not an expression node: {node!r}")


def simplify(node):
    """Fold constants and drop neutral elements."""
    if isinstance(node, (Num, Var)):
        return node
    if isinstance(node, Neg):
        a = simplify(node.arg)
        if isinstance(a, Num):
            return Num(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(node, Pow):
        b = simplify(node.base)
        if node.exp == 0:
            return Num(1.0)
        if node.exp == 1:
            return b
        if isinstance(b, Num):
            return Num(b.value ** node.exp)
        return Pow(b, node.exp)
    a, b = simplify(node.left), simplify(node.right)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(_eval(type(node)(a, b), np.zeros(0)))
    if isinstance(node, Add):
        if a == Num(0.0):
            return b
        if b == Num(0.0):
            return a
        return Add(a, b)
    if isinstance(node, Sub):
        if b == Num(0.0):
            return a
        if a == Num(0.0):
            return simplify(Neg(b))
        return Sub(a, b)
    if a == Num(0.0) or b == Num(0.0):
        return Num(0.0)
    if a == Num(1.0):
        return b
    if b == Num(1.0):
        return a
    return Mul(a, b)


def diff(node, index):
    """Symbolic partial derivative with respect to variable ``index``."""
    return simplify(_diff(node, index))


def _diff(node, i):
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.index == i else 0.0)
    if isinstance(node, Neg):
        return Neg(_diff(node.arg, i))
    if isinstance(node, Add):
        return Add(_diff(node.left, i), _diff(node.right, i))
    if isinstance(node, Sub):
        return Sub(_diff(node.left, i), _diff(node.right, i))
    if isinstance(node, Mul):
        return Add(Mul(_diff(node.left, i), node.right),
                   Mul(node.left, _diff(node.right, i)))
    if isinstance(node, Pow):
        if node.exp == 0:
            return Num(0.0)
        return Mul(Mul(Num(float(node.exp)), Pow(node.base, node.exp - 1)),
                   _diff(node.base, i))
    raise TypeError(f"not an expression node: {node!r}")


def max_variable(node):
    """Largest variable index used, or -1."""
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Num):
        return -1
    if isinstance(node, Neg):
        return max_variable(node.arg)
    if isinstance(node, Pow):
        return max_variable(node.base)
    return max(max_variable(node.left), max_variable(node.right))


class PolynomialField:
    """Vector field with one expression per component."""

    def __init__(self, components, dim=None):
        nodes = [parse_expr(c, dim) if isinstance(c, str) else c for c in components]
        self.dim = dim if dim is not None else len(nodes)
        if len(nodes) != self.dim:
            raise ValueError("need one component per dimension")
        if any(max_variable(e) >= self.dim for e in nodes):
            raise ValueError("expression uses a variable beyond the dimension")
        self.components = tuple(nodes)
        self.partials = tuple(tuple(diff(e, j) for j in range(self.dim))
                              for e in self.components)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return np.stack([evaluate(e, X) for e in self.components], axis=-1)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([[float(evaluate(d, x)) for d in row] for row in self.partials])
