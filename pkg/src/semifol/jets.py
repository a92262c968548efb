"""Points, order-2 Wirtinger jets, and the finite-difference jet oracle.

A WirtingerJet holds the value of a smooth function C^2 -> C together with all
Wirtinger partials in (x, xbar, y, ybar) up to total order 2 (15 coefficients,
stored as derivative values in the order of _tables.MULTIS).
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import _tables as T
from . import backend
from .errors import DomainError
from .expr import compile_expr

_REAL_DIRS = 4  # x1, x2, y1, y2

# Wirtinger directions as complex combinations of the real directions:
# d/dx = (d/dx1 - i d/dx2)/2 and so on.
_W = np.array([
    [0.5, -0.5j, 0.0, 0.0],
    [0.5, 0.5j, 0.0, 0.0],
    [0.0, 0.0, 0.5, -0.5j],
    [0.0, 0.0, 0.5, 0.5j],
], dtype=np.complex128)


@dataclass(frozen=True)
class CPoint:
    """A point of C^2 in the fixed holomorphic coordinates (x, y)."""

    x: complex
    y: complex

    def __post_init__(self):
        if not (cmath.isfinite(complex(self.x)) and cmath.isfinite(complex(self.y))):
            raise ValueError(f"CPoint coordinates must be finite: {self.x}, {self.y}")

    def __iter__(self):
        return iter((self.x, self.y))

    def as_reals(self):
        x, y = complex(self.x), complex(self.y)
        return (x.real, x.imag, y.real, y.imag)


@dataclass(frozen=True)
class WirtingerJet:
    """Derivative values d[i,j,k,l] for i+j+k+l <= 2 of a function at a point."""

    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (T.NJET,):
            raise ValueError(f"expected {T.NJET} coefficients, got {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def value(self):
        return complex(self.coeffs[0])

    def d(self, i, j, k, l):
        """Partial derivative value for the multi-index (i, j, k, l)."""
        return complex(self.coeffs[T.IDX[(i, j, k, l)]])

    def conjugate(self):
        return WirtingerJet(np.conj(self.coeffs)[list(T.CONJ_PERM)])

    def derivative(self, direction):
        """Jet of a first Wirtinger derivative, valid up to total order 1.

        direction: 0 = x, 1 = xbar, 2 = y, 3 = ybar.  Order-2 coefficients of
        the result would need order-3 data and are set to 0.
        """
        out = np.zeros(T.NJET, dtype=np.complex128)
        shift = T.SHIFT[direction]
        for m in range(T.NJET):
            if shift[m] >= 0:
                out[m] = self.coeffs[shift[m]]
        return WirtingerJet(out)

    # truncated jet arithmetic (order-2 coefficients of quotients of
    # derivative jets are only meaningful when the operands carry them)
    def _bin(self, other, fn):
        other = other.coeffs if isinstance(other, WirtingerJet) else _const_jet(other)
        return WirtingerJet(fn(self.coeffs[None, :], other[None, :])[0])

    def __add__(self, other):
        o = other.coeffs if isinstance(other, WirtingerJet) else _const_jet(other)
        return WirtingerJet(self.coeffs + o)

    def __sub__(self, other):
        o = other.coeffs if isinstance(other, WirtingerJet) else _const_jet(other)
        return WirtingerJet(self.coeffs - o)

    def __neg__(self):
        return WirtingerJet(-self.coeffs)

    def __mul__(self, other):
        from ._kernels_py import _jet_mul
        return self._bin(other, _jet_mul)

    def __truediv__(self, other):
        from ._kernels_py import _jet_compose, _jet_mul
        o = other.coeffs if isinstance(other, WirtingerJet) else _const_jet(other)
        w = o[0]
        if w == 0:
            raise DomainError("division by zero in jet arithmetic")
        inv = _jet_compose(o[None, :], 1.0 / w, -1.0 / w**2, 2.0 / w**3)[0]
        return WirtingerJet(_jet_mul(self.coeffs[None, :], inv[None, :])[0])


def _const_jet(c):
    out = np.zeros(T.NJET, dtype=np.complex128)
    out[0] = complex(c)
    return out


_TAPE_CACHE = {}


def tape_of(e):
    t = _TAPE_CACHE.get(e)
    if t is None:
        t = compile_expr(e)
        _TAPE_CACHE[e] = t
    return t


def eval_jet(e, p):
    """Order-2 Wirtinger jet of the expression e at the point p.

    Applies the exact chain/product/quotient rules; conj swaps the index pairs
    (i <-> j, k <-> l); re and im are the standard combinations of the
    identity and conj.  Raises DomainError carrying the offending
    subexpression on division by zero or log/sqrt on the branch cut.
    """
    tape = tape_of(e) if not hasattr(e, "ops") else e
    coeffs, err = backend.eval_jet_scalar(tape, complex(p.x), complex(p.y))
    if err >= 0:
        raise DomainError("domain error", subexpr=tape.nodes[err], point=(p.x, p.y))
    return WirtingerJet(coeffs)


def eval_value(e, p, s=None):
    """Plain value of the expression at p (supports the slope variable s)."""
    tape = tape_of(e) if not hasattr(e, "ops") else e
    v, err = backend.eval_value_scalar(tape, complex(p.x), complex(p.y),
                                       None if s is None else complex(s))
    if err >= 0:
        raise DomainError("domain error", subexpr=tape.nodes[err], point=(p.x, p.y))
    return complex(v)


def _real_to_wirtinger(value, grad, hess):
    """Convert real-direction derivatives to the 15 Wirtinger coefficients."""
    out = np.zeros(T.NJET, dtype=np.complex128)
    out[0] = value
    for w, e in enumerate(T.E):
        out[T.IDX[e]] = _W[w] @ grad
    for i, m in enumerate(T.MULTIS):
        if sum(m) != 2:
            continue
        dirs = []
        for r, mult in enumerate(m):
            dirs.extend([r] * mult)
        w1, w2 = dirs
        out[i] = _W[w1] @ hess @ _W[w2]
    return out


def fd_jet(f, p, h=1e-4, richardson=False):
    """Central-difference Wirtinger jet of a black-box evaluator f: C^2 -> C.

    All order-<=2 partials are approximated on 4-real-variable stencils with
    error O(h^2) for C^4 functions.  Richardson extrapolation (one h -> h/2
    refinement, error O(h^4)) is off by default.  Raises DomainError if any
    stencil point fails.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if richardson:
        c1 = fd_jet(f, p, h, richardson=False).coeffs
        c2 = fd_jet(f, p, h / 2, richardson=False).coeffs
        return WirtingerJet((4.0 * c2 - c1) / 3.0)

    base = np.array(p.as_reals(), dtype=float)

    def ev(offsets):
        q = base.copy()
        for r, s in offsets:
            q[r] += s * h
        try:
            return complex(f(complex(q[0], q[1]), complex(q[2], q[3])))
        except DomainError:
            raise
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise DomainError(f"stencil evaluation failed: {exc}", point=tuple(q))

    f0 = ev(())
    grad = np.zeros(_REAL_DIRS, dtype=np.complex128)
    hess = np.zeros((_REAL_DIRS, _REAL_DIRS), dtype=np.complex128)
    plus = np.zeros(_REAL_DIRS, dtype=np.complex128)
    minus = np.zeros(_REAL_DIRS, dtype=np.complex128)
    for r in range(_REAL_DIRS):
        plus[r] = ev(((r, +1),))
        minus[r] = ev(((r, -1),))
        grad[r] = (plus[r] - minus[r]) / (2 * h)
        hess[r, r] = (plus[r] - 2 * f0 + minus[r]) / (h * h)
    for r in range(_REAL_DIRS):
        for s in range(r + 1, _REAL_DIRS):
            fpp = ev(((r, +1), (s, +1)))
            fpm = ev(((r, +1), (s, -1)))
            fmp = ev(((r, -1), (s, +1)))
            fmm = ev(((r, -1), (s, -1)))
            hess[r, s] = hess[s, r] = (fpp - fpm - fmp + fmm) / (4 * h * h)
    return WirtingerJet(_real_to_wirtinger(f0, grad, hess))


def expr_evaluator(e):
    """Wrap an Expr as a plain (x, y) -> complex callable (for fd_jet)."""
    tape = tape_of(e)

    def f(x, y):
        v, err = backend.eval_value_scalar(tape, x, y)
        if err >= 0:
            raise DomainError("domain error", subexpr=tape.nodes[err], point=(x, y))
        return v

    return f


def jets_at(e, xs, ys):
    """Batched jets; returns (coeff array (n, 15), err array)."""
    tape = tape_of(e) if not hasattr(e, "ops") else e
    return backend.eval_jets(tape, np.asarray(xs, dtype=np.complex128),
                             np.asarray(ys, dtype=np.complex128))


def values_at(e, xs, ys, ss=None):
    """Batched values; returns (value array, err array)."""
    tape = tape_of(e) if not hasattr(e, "ops") else e
    return backend.eval_values(tape, np.asarray(xs, dtype=np.complex128),
                               np.asarray(ys, dtype=np.complex128),
                               None if ss is None else np.asarray(ss, dtype=np.complex128))
