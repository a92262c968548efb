"""Slope fields and the pointwise residuals of their defining identities.

A semiholomorphic foliation transverse to the vertical fibration is the kernel
of the (1,0)-form dy - lambda dx.  Everything checkable about it at a point is
derived from the order-2 Wirtinger jet of lambda:

* integrability_residual: |d lambda/d xbar + conj(lambda) d lambda/d ybar|,
  zero exactly when the line field integrates to a foliation by holomorphic
  curves;
* bott: the pair a = d lambda/dy, b = d lambda/d ybar; b dx is the
  antiholomorphic part of Bott's connection and |b|^2 the induced leaf metric;
* structural_residual: the coupled first-order system tying a and b along
  antiholomorphic leaf directions;
* curvature_residual: |K + 4| for the leaf metric, K computed by
  finite-differencing log|b| along the traced leaf;
* pullback law under holomorphic coordinate changes, singular-locus scans and
  winding-number zero counting of b along leaf loops.
"""

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import backend
from .errors import (DegenerateMetricError, DegeneratePullbackError,
                     DomainError, NearZeroContourError)
from .expr import Expr, Var, compile_expr, is_holomorphic_in, parse, substitute
from .jets import CPoint, WirtingerJet, eval_jet

# |b| below this counts as a degenerate metric (avoids log 0)
DEGENERATE_METRIC_TOL = 1e-10

# |lambda| above this counts as singular in scans (line field turns vertical)
OVERFLOW_THRESHOLD = 1e12


def _as_expr(e):
    return parse(e) if isinstance(e, str) else e


@dataclass(frozen=True)
class SlopeField:
    """A foliation presented by its slope lambda(x, y), with a domain guard.

    A point is admissible when the guard expression (if any) evaluates with
    real part > 0.  The integrability invariant is enforced by a validation
    pass (validate_integrability), not by construction.
    """

    slope: Expr
    domain_guard: Expr | None = None
    label: str = ""

    def __init__(self, slope, domain_guard=None, label=""):
        object.__setattr__(self, "slope", _as_expr(slope))
        object.__setattr__(self, "domain_guard",
                           None if domain_guard is None else _as_expr(domain_guard))
        object.__setattr__(self, "label", label)

    @cached_property
    def _tape(self):
        return compile_expr(self.slope)

    @cached_property
    def _guard_tape(self):
        return None if self.domain_guard is None else compile_expr(self.domain_guard)

    def is_admissible(self, p):
        if self._guard_tape is None:
            return True
        v, err = backend.eval_value_scalar(self._guard_tape, complex(p.x), complex(p.y))
        return err < 0 and v.real > 0

    def value(self, p):
        """lambda at p; raises DomainError outside the domain."""
        v, err = backend.eval_value_scalar(self._tape, complex(p.x), complex(p.y))
        if err >= 0:
            raise DomainError("slope evaluation failed",
                              subexpr=self._tape.nodes[err], point=(p.x, p.y))
        return complex(v)

    def value_at(self, x, y):
        v, err = backend.eval_value_scalar(self._tape, complex(x), complex(y))
        if err >= 0:
            raise DomainError("slope evaluation failed",
                              subexpr=self._tape.nodes[err], point=(x, y))
        return complex(v)

    def jet(self, p):
        coeffs, err = backend.eval_jet_scalar(self._tape, complex(p.x), complex(p.y))
        if err >= 0:
            raise DomainError("slope jet evaluation failed",
                              subexpr=self._tape.nodes[err], point=(p.x, p.y))
        return WirtingerJet(coeffs)

    def jet_at(self, x, y):
        return self.jet(CPoint(x, y))

    def values(self, xs, ys):
        """Batched values; returns (values, err) without raising."""
        return backend.eval_values(self._tape, np.asarray(xs, dtype=np.complex128),
                                   np.asarray(ys, dtype=np.complex128))

    def jets(self, xs, ys):
        """Batched jets; returns (coeff array (n, 15), err) without raising."""
        return backend.eval_jets(self._tape, np.asarray(xs, dtype=np.complex128),
                                 np.asarray(ys, dtype=np.complex128))


@dataclass(frozen=True)
class BottData:
    """Bott term of the slope at a point: a = dl/dy, b = dl/dybar, |b|^2."""

    a: complex
    b: complex
    metric_density: float

    @classmethod
    def from_jet(cls, jet):
        b = jet.d(0, 0, 0, 1)
        return cls(a=jet.d(0, 0, 1, 0), b=b, metric_density=abs(b) ** 2)


def integrability_residual(F, p):
    """|dl/dxbar + conj(lambda) dl/dybar| at p; 0 for an integrable line field."""
    jet = F.jet(p)
    return abs(jet.d(0, 1, 0, 0) + jet.value.conjugate() * jet.d(0, 0, 0, 1))


def bott(F, p):
    """Bott data (a, b, |b|^2) of the slope field at p."""
    return BottData.from_jet(F.jet(p))


def structural_residual(F, p):
    """Residual of the coupled system for (a, b) along leaf-antiholomorphic
    directions: |dbar_F a + conj(b) b| + |dbar_F b + conj(a) b| with
    dbar_F = d/dxbar + conj(lambda) d/dybar, from order-2 jet coefficients."""
    jet = F.jet(p)
    lam_bar = jet.value.conjugate()
    a = jet.d(0, 0, 1, 0)
    b = jet.d(0, 0, 0, 1)
    dbar_a = jet.d(0, 1, 1, 0) + lam_bar * jet.d(0, 0, 1, 1)
    dbar_b = jet.d(0, 1, 0, 1) + lam_bar * jet.d(0, 0, 0, 2)
    return abs(dbar_a + b.conjugate() * b) + abs(dbar_b + a.conjugate() * b)


def curvature_residual(F, p, h=1e-3, trace_tol=1e-12):
    """|K + 4| for the leaf metric |b|^2 at p.

    K = -4 * Lap_leaf(log|b|) / |b|^2, with the leafwise Laplacian d ddbar
    realized by tracing the leaf through p to the four stencil points
    x +- h, x +- ih and central-differencing log|b| along the leaf.
    """
    from .holonomy import transport

    b0 = bott(F, p).b
    if abs(b0) < DEGENERATE_METRIC_TOL:
        raise DegenerateMetricError(f"|b| = {abs(b0):.3e} at the stencil center")
    total = 0.0
    for dx in (h, -h, 1j * h, -1j * h):
        x1 = p.x + dx
        y1 = transport(F, p.x, x1, p.y, trace_tol)
        b1 = bott(F, CPoint(x1, y1)).b
        if abs(b1) < DEGENERATE_METRIC_TOL:
            raise DegenerateMetricError(f"|b| = {abs(b1):.3e} at stencil point {x1}")
        total += math.log(abs(b1))
    lap = (total - 4.0 * math.log(abs(b0))) / (4.0 * h * h)
    curvature = -4.0 * lap / abs(b0) ** 2
    return abs(curvature + 4.0)


def pullback_metric_residual(F, Phi, p, degenerate_tol=1e-12):
    """Deviation from the pullback law of the Bott term under a holomorphic
    coordinate change Phi = (X, Y).

    Computes the pulled-back slope lt = -(Y_x - (l o Phi) X_x)/(Y_y - (l o Phi) X_y),
    its Bott term bt at p, and returns | |bt| - |b o Phi| * |X_x + lt X_y| |.
    Only moduli are compared: the phase of the Bott form is gauge-dependent.
    """
    X, Y = (_as_expr(Phi[0]), _as_expr(Phi[1]))
    if not (is_holomorphic_in(X) and is_holomorphic_in(Y)):
        raise ValueError("pullback map must be holomorphic (no conj/re/im)")
    jX = eval_jet(X, p)
    jY = eval_jet(Y, p)
    q = CPoint(jX.value, jY.value)

    # exact order-2 jet of lambda o Phi via tree substitution
    mu_expr = substitute(F.slope, {"x": X, "y": Y})
    mu = eval_jet(mu_expr, p)

    Xx, Xy = jX.derivative(0), jX.derivative(2)
    Yx, Yy = jY.derivative(0), jY.derivative(2)
    A = Yx - mu * Xx
    B = Yy - mu * Xy
    if abs(B.value) < degenerate_tol:
        raise DegeneratePullbackError(
            f"|Y_y - (lambda o Phi) X_y| = {abs(B.value):.3e} at {p}")
    lam_t = -A / B
    b_t = lam_t.d(0, 0, 0, 1)
    b_q = bott(F, q).b
    factor = Xx.value + lam_t.value * Xy.value
    return abs(abs(b_t) - abs(b_q) * abs(factor))


def singular_scan(F, box, n):
    """Sample the singular locus of the slope chart on a grid.

    box: (re x min, re x max, im x min, im x max, re y min, re y max,
    im y min, im y max).  Returns the grid points where lambda evaluation
    fails or |lambda| exceeds the overflow threshold, sorted lexicographically.
    Failures are the output, not errors.
    """
    if n < 2:
        raise ValueError("grid size must be at least 2")
    axes = [np.linspace(box[2 * i], box[2 * i + 1], n) for i in range(4)]
    rx, ix, ry, iy = np.meshgrid(*axes, indexing="ij")
    xs = (rx + 1j * ix).ravel()
    ys = (ry + 1j * iy).ravel()
    vals, err = F.values(xs, ys)
    singular = (err >= 0) | (np.abs(vals) > OVERFLOW_THRESHOLD)
    points = sorted(
        (xs[i].real, xs[i].imag, ys[i].real, ys[i].imag)
        for i in np.nonzero(singular)[0]
    )
    return [CPoint(complex(a, b), complex(c, d)) for a, b, c, d in points]


def zero_count_winding(F, leaf, loop=None, samples=2048):
    """Winding number of b(x, y(x)) around 0 along a closed leaf loop.

    For real-analytic foliations this counts the zeros of b enclosed by the
    loop, with multiplicity (isolated zeros of b have vanishing
    antiholomorphic derivative, so b winds like a holomorphic function).
    """
    path = loop if loop is not None else leaf.path
    if not path.is_closed():
        raise ValueError("winding requires a closed x-path")
    ts = np.linspace(0.0, 1.0, samples, endpoint=True)
    xs = np.array([path.x(t) for t in ts])
    ys = np.array([leaf.y_at(t) for t in ts])
    jets, err = F.jets(xs, ys)
    if (err >= 0).any():
        i = int(np.nonzero(err >= 0)[0][0])
        raise DomainError("slope jet failed on the contour", point=(xs[i], ys[i]))
    from ._tables import D_YBAR
    bs = jets[:, D_YBAR]
    if np.min(np.abs(bs)) < DEGENERATE_METRIC_TOL:
        raise NearZeroContourError(
            f"min |b| = {np.min(np.abs(bs)):.3e} on the contour")
    angles = np.unwrap(np.angle(bs))
    return int(round((angles[-1] - angles[0]) / (2 * math.pi)))


def validate_integrability(F, points, tol):
    """Max integrability residual over sample points; the SlopeField
    invariant is enforced by this pass rather than at construction."""
    worst = 0.0
    for p in points:
        worst = max(worst, integrability_residual(F, p))
    if worst > tol:
        raise ValueError(f"integrability residual {worst:.3e} exceeds {tol:.1e} "
                         f"for field '{F.label}'")
    return worst


def sample_admissible(F, box, count, rng, max_tries=200):
    """Deterministic rejection sampler: admissible points of the box at which
    the slope jet also evaluates.  rng: numpy Generator."""
    out = []
    lo = np.array([box[0], box[2], box[4], box[6]])
    hi = np.array([box[1], box[3], box[5], box[7]])
    for _ in range(max_tries):
        if len(out) >= count:
            break
        m = max(count - len(out), 16)
        u = rng.uniform(lo, hi, size=(m, 4))
        xs = u[:, 0] + 1j * u[:, 1]
        ys = u[:, 2] + 1j * u[:, 3]
        _, err = F.jets(xs, ys)
        ok = err < 0
        if F._guard_tape is not None:
            gv, gerr = backend.eval_values(F._guard_tape, xs, ys)
            ok &= (gerr < 0) & (gv.real > 0)
        for i in np.nonzero(ok)[0]:
            if len(out) >= count:
                break
            out.append(CPoint(complex(xs[i]), complex(ys[i])))
    if len(out) < count:
        raise ValueError(f"could not draw {count} admissible points in {box}")
    return out


def residual_record(p, residual, kind):
    """JSON-ready record for residual reports."""
    x, y = complex(p.x), complex(p.y)
    return {"point": [x.real, x.imag, y.real, y.imag],
            "residual": float(residual), "kind": kind}
