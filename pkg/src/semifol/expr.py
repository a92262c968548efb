"""Expression language for slope fields and companion formulas.

Grammar (EBNF):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := number | 'i' | 'x' | 'y' | func '(' expr ')' | '(' expr ')' | '-' base
    func   := conj | re | im | sqrt | exp | log

Numbers are decimal with optional exponent.  sqrt and log use the principal
branch with the cut on the negative real axis; evaluating exactly on the cut
(or at 0) is a domain error.  Curve-system right-hand sides may additionally
use the slope variable 's' (pass extra_vars=('s',) to parse).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParseError

FUNCS = ("conj", "re", "im", "sqrt", "exp", "log")


@dataclass(frozen=True)
class Expr:
    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: complex


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    arg: Expr
    exponent: int


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr


# ---------------------------------------------------------------------------
# parsing

_NUM_START = "0123456789"


class _Parser:
    def __init__(self, text, extra_vars):
        self.text = text
        self.pos = 0
        self.vars = ("x", "y") + tuple(extra_vars)

    def error(self, message):
        raise ParseError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\n":
            self.pos += 1

    def peek(self):
        self.skip_ws()
        if self.pos >= len(self.text):
            return ""
        return self.text[self.pos]

    def expect(self, ch):
        if self.peek() != ch:
            self.error(f"expected '{ch}'")
        self.pos += 1

    def parse(self):
        e = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("unexpected trailing input")
        return e

    def expr(self):
        e = self.term()
        while True:
            c = self.peek()
            if c == "+":
                self.pos += 1
                e = Add(e, self.term())
            elif c == "-":
                self.pos += 1
                e = Sub(e, self.term())
            else:
                return e

    def term(self):
        e = self.factor()
        while True:
            c = self.peek()
            if c == "*":
                self.pos += 1
                e = Mul(e, self.factor())
            elif c == "/":
                self.pos += 1
                e = Div(e, self.factor())
            else:
                return e

    def factor(self):
        e = self.base()
        if self.peek() == "^":
            self.pos += 1
            e = Pow(e, self.integer())
        return e

    def integer(self):
        self.skip_ws()
        start = self.pos
        if self.peek() == "-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start or self.text[start:self.pos] == "-":
            self.error("expected integer exponent")
        return int(self.text[start:self.pos])

    def base(self):
        c = self.peek()
        if c == "":
            self.error("unexpected end of input")
        if c == "-":
            self.pos += 1
            return Neg(self.base())
        if c == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if c in _NUM_START:
            return Const(self.number())
        if c.isalpha():
            name = self.identifier()
            if name == "i":
                return Const(1j)
            if name in self.vars:
                return Var(name)
            if name in FUNCS:
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Func(name, e)
            self.pos -= len(name)
            self.error(f"unknown identifier '{name}'")
        self.error(f"unexpected character '{c}'")

    def identifier(self):
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum()
                                             or self.text[self.pos] == "_"):
            self.pos += 1
        return self.text[start:self.pos]

    def number(self):
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.pos += 1
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
        if self.pos < len(self.text) and self.text[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos].isdigit():
                while self.pos < len(self.text) and self.text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark
        return complex(float(self.text[start:self.pos]))


def parse(text, extra_vars=()):
    """Parse a formula string into an Expr.

    Raises ParseError with the byte offset of the first offending character.
    """
    return _Parser(text, extra_vars).parse()


# ---------------------------------------------------------------------------
# printing (round-trips through parse up to whitespace)

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4,
         Const: 5, Var: 5, Func: 5}


def _fmt_const(v):
    v = complex(v)
    if v == 1j:
        return "i", 5
    if v.imag == 0.0:
        r = v.real
        if r == int(r) and abs(r) < 1e15:
            s = str(int(abs(r)))
        else:
            s = format(abs(r), ".17g")
        return (s, 5) if r >= 0 else ("-" + s, 3)
    # generic complex constant: print as re + im*i
    re, im = v.real, v.imag
    return f"({format(re, '.17g')}+{format(im, '.17g')}*i)", 5


def to_text(e):
    s, _ = _to_text(e)
    return s


def _paren(child, parent_prec, strict=False):
    s, p = _to_text(child)
    if p < parent_prec or (strict and p == parent_prec):
        return "(" + s + ")"
    return s


def _to_text(e):
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name, 5
    if isinstance(e, Neg):
        return "-" + _paren(e.arg, 3), 3
    if isinstance(e, Add):
        return _paren(e.left, 1) + "+" + _paren(e.right, 1, strict=True), 1
    if isinstance(e, Sub):
        return _paren(e.left, 1) + "-" + _paren(e.right, 1, strict=True), 1
    if isinstance(e, Mul):
        return _paren(e.left, 2) + "*" + _paren(e.right, 2, strict=True), 2
    if isinstance(e, Div):
        return _paren(e.left, 2) + "/" + _paren(e.right, 2, strict=True), 2
    if isinstance(e, Pow):
        return _paren(e.arg, 4, strict=True) + "^" + str(e.exponent), 4
    if isinstance(e, Func):
        return e.name + "(" + to_text(e.arg) + ")", 5
    raise TypeError(f"not an Expr: {e!r}")


# ---------------------------------------------------------------------------
# structural helpers

def variables(e):
    """Set of variable names occurring in e."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Neg, Pow, Func)):
        return variables(e.arg)
    return variables(e.left) | variables(e.right)


def is_holomorphic_in(e, names=("x", "y")):
    """True when no conj/re/im node encloses an occurrence of the variables."""
    if isinstance(e, Func) and e.name in ("conj", "re", "im"):
        return not (variables(e.arg) & set(names))
    if isinstance(e, (Const, Var)):
        return True
    if isinstance(e, (Neg, Pow, Func)):
        return is_holomorphic_in(e.arg, names)
    return is_holomorphic_in(e.left, names) and is_holomorphic_in(e.right, names)


def substitute(e, mapping):
    """Replace variables by expressions (mapping: name -> Expr)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.arg, mapping), e.exponent)
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, mapping))
    cls = type(e)
    return cls(substitute(e.left, mapping), substitute(e.right, mapping))


# ---------------------------------------------------------------------------
# tape compilation
#
# A tape is a linear program over slots; instruction k writes slot k.  Pow is
# lowered to square-and-multiply (negative exponents via 1/pow).  Identical
# subtrees share a slot.

OP_CONST = 0
OP_VARX = 1
OP_VARY = 2
OP_VARS = 3
OP_ADD = 4
OP_SUB = 5
OP_MUL = 6
OP_DIV = 7
OP_NEG = 8
OP_CONJ = 9
OP_RE = 10
OP_IM = 11
OP_SQRT = 12
OP_EXP = 13
OP_LOG = 14

_FUNC_OPS = {"conj": OP_CONJ, "re": OP_RE, "im": OP_IM,
             "sqrt": OP_SQRT, "exp": OP_EXP, "log": OP_LOG}


class Tape:
    """Compiled form of an Expr, shared by both evaluation backends."""

    __slots__ = ("ops", "arg1", "arg2", "consts", "nodes", "has_s", "source",
                 "_cache")

    def __init__(self, ops, arg1, arg2, consts, nodes, has_s, source):
        self._cache = None  # backend-private compiled form
        self.ops = np.asarray(ops, dtype=np.int32)
        self.arg1 = np.asarray(arg1, dtype=np.int32)
        self.arg2 = np.asarray(arg2, dtype=np.int32)
        self.consts = np.asarray(consts, dtype=np.complex128)
        self.nodes = nodes          # slot -> originating Expr (error reports)
        self.has_s = has_s
        self.source = source

    def __len__(self):
        return len(self.ops)


def compile_expr(e):
    ops, arg1, arg2, consts, nodes = [], [], [], [], []
    memo = {}

    def emit(op, a, b, c, node):
        ops.append(op)
        arg1.append(a)
        arg2.append(b)
        consts.append(c)
        nodes.append(node)
        return len(ops) - 1

    def rec(n):
        key = n
        if key in memo:
            return memo[key]
        if isinstance(n, Const):
            slot = emit(OP_CONST, -1, -1, complex(n.value), n)
        elif isinstance(n, Var):
            op = {"x": OP_VARX, "y": OP_VARY}.get(n.name, OP_VARS)
            slot = emit(op, -1, -1, 0j, n)
        elif isinstance(n, Neg):
            slot = emit(OP_NEG, rec(n.arg), -1, 0j, n)
        elif isinstance(n, (Add, Sub, Mul, Div)):
            op = {Add: OP_ADD, Sub: OP_SUB, Mul: OP_MUL, Div: OP_DIV}[type(n)]
            slot = emit(op, rec(n.left), rec(n.right), 0j, n)
        elif isinstance(n, Func):
            slot = emit(_FUNC_OPS[n.name], rec(n.arg), -1, 0j, n)
        elif isinstance(n, Pow):
            slot = _pow(rec(n.arg), n.exponent, n)
        else:
            raise TypeError(f"not an Expr: {n!r}")
        memo[key] = slot
        return slot

    def _pow(base_slot, k, node):
        if k == 0:
            return emit(OP_CONST, -1, -1, 1 + 0j, node)
        if k < 0:
            one = emit(OP_CONST, -1, -1, 1 + 0j, node)
            return emit(OP_DIV, one, _pow(base_slot, -k, node), 0j, node)
        result = None
        sq = base_slot
        while k:
            if k & 1:
                result = sq if result is None else emit(OP_MUL, result, sq, 0j, node)
            k >>= 1
            if k:
                sq = emit(OP_MUL, sq, sq, 0j, node)
        return result

    rec(e)
    return Tape(ops, arg1, arg2, consts, nodes, "s" in variables(e), e)
