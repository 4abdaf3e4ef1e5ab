"""Tiny expression grammar for jump-matrix entries.

Covers rational functions of z, exp, and complex constants in a+bi form:

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | power
    power  := atom ('^' signed-integer)?
    atom   := number | number 'i' | 'i' | 'z' | 'exp' '(' expr ')' | '(' expr ')'

Parsing yields a vectorized evaluator; no Python eval is involved.
"""

from __future__ import annotations

import re

import numpy as np

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]+)"
    r"|(?P<op>[()+\-*/^]))"
)


class ExpressionError(ValueError):
    pass


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExpressionError(f"bad character at {text[pos:pos+8]!r}")
        pos = m.end()
        if m.lastgroup == "num":
            out.append(("num", float(m.group("num"))))
        elif m.lastgroup == "name":
            out.append(("name", m.group("name")))
        else:
            out.append(("op", m.group("op")))
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def take(self, kind=None, value=None):
        t = self.toks[self.k]
        if kind and t[0] != kind or value is not None and t[1] != value:
            raise ExpressionError(f"expected {value or kind}, got {t[1]!r}")
        self.k += 1
        return t

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = (lambda f, g, o: (lambda z: f(z) + g(z) if o == "+" else f(z) - g(z)))(node, rhs, op)
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            rhs = self.factor()
            if op == "*":
                node = (lambda f, g: lambda z: f(z) * g(z))(node, rhs)
            else:
                node = (lambda f, g: lambda z: f(z) / g(z))(node, rhs)
        return node

    def factor(self):
        if self.peek() == ("op", "-"):
            self.take()
            f = self.factor()
            return lambda z: -f(z)
        if self.peek() == ("op", "+"):
            self.take()
            return self.factor()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            sign = 1
            if self.peek() == ("op", "-"):
                self.take()
                sign = -1
            t = self.take("num")
            k = t[1]
            if k != int(k):
                raise ExpressionError("exponents must be integers")
            k = sign * int(k)
            return (lambda f, kk: lambda z: f(z) ** kk)(base, k)
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            if self.peek() == ("name", "i"):
                self.take()
                return lambda z, c=complex(0, val): np.full_like(np.asarray(z, dtype=complex), c) \
                    if np.ndim(z) else c
            return lambda z, c=complex(val): np.full_like(np.asarray(z, dtype=complex), c) \
                if np.ndim(z) else c
        if kind == "name":
            self.take()
            if val == "z":
                return lambda z: np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
            if val == "i":
                return lambda z: np.full_like(np.asarray(z, dtype=complex), 1j) \
                    if np.ndim(z) else 1j
            if val == "exp":
                self.take("op", "(")
                inner = self.expr()
                self.take("op", ")")
                return lambda z: np.exp(inner(z))
            raise ExpressionError(f"unknown name {val!r} (only z, i, exp)")
        if (kind, val) == ("op", "("):
            self.take()
            inner = self.expr()
            self.take("op", ")")
            return inner
        raise ExpressionError(f"unexpected token {val!r}")


def parse_expression(text):
    """Compile an expression string into a vectorized callable of z."""
    p = _Parser(_tokenize(text))
    fn = p.expr()
    p.take("end")
    return fn


def parse_complex(text):
    """Complex constant in a+bi form (also plain reals, 'i', 'inf')."""
    s = text.strip()
    if s.lower() in ("inf", "infinity"):
        return None
    fn = parse_expression(s)
    val = fn(0.0)
    return complex(val)


def format_complex(value):
    """a+bi form with round-trip-exact doubles."""
    if value is None:
        return "inf"
    v = complex(value)
    re = np.format_float_scientific(v.real, precision=16)
    im = np.format_float_scientific(abs(v.imag), precision=16)
    sign = "+" if v.imag >= 0 else "-"
    return f"{re}{sign}{im}i"
