"""Leaf tracing as a complex ODE, holonomy transport and linear parts.

Following a leaf of the foliation over an x-path x(t) means solving

    dy/dt = lambda(x(t), y) * x'(t),

treating (y, ybar) as a coupled real pair; Runge-Kutta arithmetic on the
complex value realizes exactly that.  The holonomy transport phi_x between
transversals is the endpoint map.  Its linear part at a leaf,
phi_x(y) ~ u(x) y + v(x) ybar, is co-integrated through the variational
system

    du/dt = (a u + b conj(v)) x'(t),
    dv/dt = (a v + b conj(u)) x'(t),    u(0) = 1, v(0) = 0,

obtained by differentiating the leaf ODE with respect to the initial data
(y0, y0bar) and using d ybar/d y0 = conj(d y/d y0bar); a and b are the Bott
data of the slope along the traced leaf.

The integrator is an embedded Dormand-Prince 5(4) pair with PI step-size
control (absolute tolerance = relative tolerance = tol) and the classical
4th-order dense output polynomial.
"""

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._tables import D_Y, D_YBAR
from .errors import (BoundaryError, DomainError, NewtonError,
                     NonInvertibleMotionError, SingularLocusError, TraceError)
from .expr import Expr, compile_expr, is_holomorphic_in, parse
from .jets import CPoint


def _as_expr(e):
    return parse(e) if isinstance(e, str) else e

# ---------------------------------------------------------------------------
# x-paths

class XPath:
    """Piecewise-smooth map t in [0,1] -> x(t) in C."""

    def pieces(self):
        raise NotImplementedError

    def x(self, t):
        raise NotImplementedError

    def dx(self, t):
        raise NotImplementedError

    def length_scale(self):
        raise NotImplementedError

    def is_closed(self, tol=1e-12):
        return abs(self.x(0.0) - self.x(1.0)) <= tol * max(1.0, self.length_scale())


@dataclass(frozen=True)
class Segment(XPath):
    x0: complex
    x1: complex

    def pieces(self):
        return [(0.0, 1.0)]

    def x(self, t):
        return self.x0 + t * (self.x1 - self.x0)

    def dx(self, t):
        return self.x1 - self.x0

    def length_scale(self):
        return abs(self.x1 - self.x0)


@dataclass(frozen=True)
class Arc(XPath):
    center: complex
    radius: float
    theta0: float
    theta1: float

    def pieces(self):
        return [(0.0, 1.0)]

    def _theta(self, t):
        return self.theta0 + t * (self.theta1 - self.theta0)

    def x(self, t):
        return self.center + self.radius * cmath.exp(1j * self._theta(t))

    def dx(self, t):
        dth = self.theta1 - self.theta0
        return 1j * self.radius * dth * cmath.exp(1j * self._theta(t))

    def length_scale(self):
        return abs(self.radius * (self.theta1 - self.theta0))


@dataclass(frozen=True)
class Polyline(XPath):
    points: tuple

    def __init__(self, points):
        pts = tuple(complex(p) for p in points)
        if len(pts) < 2:
            raise ValueError("polyline needs at least two points")
        object.__setattr__(self, "points", pts)

    def _k(self):
        return len(self.points) - 1

    def pieces(self):
        k = self._k()
        return [(j / k, (j + 1) / k) for j in range(k)]

    def _segment(self, t):
        k = self._k()
        j = min(int(t * k), k - 1)
        return j, t * k - j

    def x(self, t):
        j, s = self._segment(t)
        return self.points[j] + s * (self.points[j + 1] - self.points[j])

    def dx(self, t):
        j, _ = self._segment(t)
        return self._k() * (self.points[j + 1] - self.points[j])

    def length_scale(self):
        return sum(abs(b - a) for a, b in zip(self.points, self.points[1:]))


def circle(center, radius, turns=1.0):
    """Closed circular loop (a full Arc)."""
    return Arc(complex(center), float(radius), 0.0, 2.0 * math.pi * turns)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E7 = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
_D = (-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
      -10690763975 / 1880347072, 701980252875 / 199316789632,
      -1453857185 / 822651844, 69997945 / 29380423)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_PI_ALPHA = 0.17
_PI_BETA = 0.04
_MAX_STEPS = 100_000
_HMIN = 1e-13


@dataclass
class _DenseStep:
    t0: float
    h: float
    r: tuple  # five rcont vectors


def _interp(step, t):
    s = (t - step.t0) / step.h
    r1, r2, r3, r4, r5 = step.r
    return r1 + s * (r2 + (1.0 - s) * (r3 + s * (r4 + (1.0 - s) * r5)))


def _interp_deriv(step, t):
    s = (t - step.t0) / step.h
    r1, r2, r3, r4, r5 = step.r
    q = r3 + s * (r4 + (1.0 - s) * r5)
    dq = r4 + (1.0 - 2.0 * s) * r5
    return (r2 + (1.0 - 2.0 * s) * q + s * (1.0 - s) * dq) / step.h


class LeafTrace:
    """A numerically integrated leaf segment with dense output.

    samples: accepted (t, y(t)) pairs; u, v present when the variational
    linear parts were co-integrated (u(0) = 1, v(0) = 0).
    """

    def __init__(self, path, ts, states, steps, tol, achieved, with_linear):
        self.path = path
        self.ts = np.asarray(ts)
        self._states = np.asarray(states)
        self._steps = steps
        self.tol = tol
        self.tolerance_achieved = achieved
        self.with_linear = with_linear

    @property
    def samples(self):
        return [(float(t), complex(s[0])) for t, s in zip(self.ts, self._states)]

    @property
    def linear_parts(self):
        if not self.with_linear:
            return None
        return [(float(t), complex(s[1]), complex(s[2]))
                for t, s in zip(self.ts, self._states)]

    @property
    def endpoint(self):
        return complex(self._states[-1][0])

    def _state_at(self, t):
        if not self._steps:
            return self._states[0]
        if t <= self._steps[0].t0:
            return self._states[0]
        last = self._steps[-1]
        if t >= last.t0 + last.h:
            return self._states[-1]
        lo, hi = 0, len(self._steps) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._steps[mid].t0 <= t:
                lo = mid
            else:
                hi = mid - 1
        return _interp(self._steps[lo], t)

    def state_deriv_at(self, t):
        if not self._steps:
            return np.zeros_like(self._states[0])
        idx = 0
        for i, st in enumerate(self._steps):
            if st.t0 <= t <= st.t0 + st.h:
                idx = i
                break
        else:
            idx = len(self._steps) - 1
        return _interp_deriv(self._steps[idx], t)

    def y_at(self, t):
        return complex(self._state_at(t)[0])

    def u_at(self, t):
        if not self.with_linear:
            raise ValueError("trace carries no linear parts")
        return complex(self._state_at(t)[1])

    def v_at(self, t):
        if not self.with_linear:
            raise ValueError("trace carries no linear parts")
        return complex(self._state_at(t)[2])

    def to_csv(self, fp):
        cols = "t,re x,im x,re y,im y"
        if self.with_linear:
            cols += ",re u,im u,re v,im v"
        fp.write(cols + "\n")
        for t, s in zip(self.ts, self._states):
            x = self.path.x(float(t))
            row = [float(t), x.real, x.imag, s[0].real, s[0].imag]
            if self.with_linear:
                row += [s[1].real, s[1].imag, s[2].real, s[2].imag]
            fp.write(",".join(format(v, ".17g") for v in row) + "\n")


def _rms(err, sc):
    return math.sqrt(float(np.mean((np.abs(err) / sc) ** 2)))


def _integrate(rhs, t0, t1, y0, tol):
    """DOPRI5 with PI control from t0 to t1 (t1 > t0); returns
    (ts, states, dense steps, max accepted error norm)."""
    y = np.array(y0, dtype=np.complex128)
    t = t0
    ts = [t0]
    states = [y.copy()]
    steps = []
    span = t1 - t0
    scale0 = max(1.0, float(np.max(np.abs(y))))

    try:
        f0 = rhs(t, y)
    except DomainError:
        raise SingularLocusError("singular locus reached at the path start")
    d1 = float(np.max(np.abs(f0))) + 1e-16
    h = min(span, max(1e-6, 0.01 * scale0 / d1))

    err_prev = 1.0
    k1 = f0
    nsteps = 0
    worst = 0.0
    while t < t1:
        if nsteps > _MAX_STEPS:
            raise TraceError(f"step budget exceeded ({_MAX_STEPS})")
        nsteps += 1
        h = min(h, t1 - t)
        if h < _HMIN * max(1.0, span):
            raise SingularLocusError(
                f"singular locus reached: step size underflow at t = {t:.6g}")
        try:
            k = [k1]
            for i in range(1, 7):
                yi = y + h * sum(aij * kj for aij, kj in zip(_A[i], k))
                k.append(rhs(t + _C[i] * h, yi))
        except DomainError:
            h *= 0.3
            continue
        y1 = y + h * sum(aij * kj for aij, kj in zip(_A[6], k[:6]))
        # k[6] was evaluated at y from the 6-stage combination, which equals y1
        err_vec = h * sum(e * kj for e, kj in zip(_E7, k))
        sc = tol + tol * np.maximum(np.abs(y), np.abs(y1))
        err = _rms(err_vec, sc)
        if not math.isfinite(err):
            h *= 0.3
            continue
        if err <= 1.0:
            dy = y1 - y
            r1 = y.copy()
            r2 = dy
            r3 = h * k[0] - dy
            r4 = dy - h * k[6] - r3
            r5 = h * sum(d * kj for d, kj in zip(_D, k))
            steps.append(_DenseStep(t, h, (r1, r2, r3, r4, r5)))
            t += h
            y = y1
            ts.append(t)
            states.append(y.copy())
            k1 = k[6]  # FSAL
            worst = max(worst, err)
            fac = _SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA if err > 0 else _MAX_FACTOR
            h *= min(_MAX_FACTOR, max(_MIN_FACTOR, fac))
            err_prev = max(err, 1e-4)
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
    return ts, states, steps, worst


def _trace(F, y0, path, tol, with_linear):
    if tol <= 0:
        raise ValueError("tol must be positive")
    p0 = CPoint(path.x(0.0), y0)
    if not F.is_admissible(p0):
        raise DomainError("trace start point is not admissible", point=(p0.x, p0.y))

    if with_linear:
        def rhs(t, state):
            x = path.x(t)
            xp = path.dx(t)
            jet, err = _jet_raw(F, x, state[0])
            if err >= 0:
                raise DomainError("slope jet failed", point=(x, state[0]))
            lam = jet[0]
            a = jet[D_Y]
            b = jet[D_YBAR]
            u, v = state[1], state[2]
            return np.array([
                lam * xp,
                (a * u + b * v.conjugate()) * xp,
                (a * v + b * u.conjugate()) * xp,
            ])
        state0 = [complex(y0), 1.0 + 0j, 0j]
    else:
        def rhs(t, state):
            x = path.x(t)
            return np.array([F.value_at(x, state[0]) * path.dx(t)])
        state0 = [complex(y0)]

    if path.length_scale() == 0.0:
        F.value(p0)  # still signal domain errors for a degenerate path
        return LeafTrace(path, [0.0], [np.array(state0)], [], tol, 0.0, with_linear)

    all_ts, all_states, all_steps = [], [], []
    worst = 0.0
    state = state0
    for (ta, tb) in path.pieces():
        ts, states, steps, w = _integrate(rhs, ta, tb, state, tol)
        worst = max(worst, w)
        if all_ts:
            ts = ts[1:]
            states = states[1:]
        all_ts.extend(ts)
        all_states.extend(states)
        all_steps.extend(steps)
        state = all_states[-1]
    return LeafTrace(path, all_ts, all_states, all_steps, tol, worst * tol,
                     with_linear)


def _jet_raw(F, x, y):
    from . import backend
    return backend.eval_jet_scalar(F._tape, complex(x), complex(y))


def trace_leaf(F, y0, path, tol=1e-10):
    """Trace the leaf of F through (path(0), y0) along the x-path.

    Adaptive embedded Runge-Kutta 5(4) on dy/dt = lambda(x(t), y) x'(t);
    local error per step <= tol; dense output by 4th-order interpolation.
    Raises SingularLocusError on step-size underflow.
    """
    return _trace(F, y0, path, tol, with_linear=False)


def linear_parts(F, y0, path, tol=1e-10):
    """Trace with the variational linear parts (u, v) co-integrated."""
    return _trace(F, y0, path, tol, with_linear=True)


def transport(F, x0, x1, y0, tol=1e-10):
    """Holonomy transport of y0 from the fiber over x0 to the fiber over x1
    along the leaves (straight segment in x)."""
    if x0 == x1:
        return complex(y0)
    return trace_leaf(F, y0, Segment(complex(x0), complex(x1)), tol).endpoint


def b_from_linear_parts(u, v, up, vp, boundary_tol=1e-10):
    """Bott term on the traced leaf from the holonomy linear parts:
    (u v' - u' v) / (|u|^2 - |v|^2)."""
    den = abs(u) ** 2 - abs(v) ** 2
    if abs(den) < boundary_tol:
        raise BoundaryError(f"|u|^2 - |v|^2 = {den:.3e}")
    return (u * vp - up * v) / den


def boundary_indicator(u, v):
    """|u|^2 - |v|^2; its sign change locates the leaf boundary."""
    return abs(u) ** 2 - abs(v) ** 2


def linear_parts_with_derivatives(F, y0, base_x, x, tol=1e-10, delta=None):
    """(u, v, u', v') at x for the leaf through (base_x, y0).

    u and v are holomorphic in x, so u', v' are obtained by complex
    differentiation of the dense output with a 4-point stencil of step
    1e-4 * path scale (independent of the variational right-hand side).
    """
    if delta is None:
        delta = 1e-4 * max(1.0, abs(x - base_x))

    def uv(target):
        tr = linear_parts(F, y0, Segment(complex(base_x), complex(target)), tol)
        return tr.u_at(1.0), tr.v_at(1.0)

    u0, v0 = uv(x)
    up_r, vp_r = uv(x + delta)
    um_r, vm_r = uv(x - delta)
    up_i, vp_i = uv(x + 1j * delta)
    um_i, vm_i = uv(x - 1j * delta)
    du = 0.5 * ((up_r - um_r) / (2 * delta) + (up_i - um_i) / (2j * delta))
    dv = 0.5 * ((vp_r - vm_r) / (2 * delta) + (vp_i - vm_i) / (2j * delta))
    return u0, v0, du, dv


_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(7)


def geodesic_length(F, trace, quad_tol=1e-10, max_depth=40):
    """Length of the traced leaf segment in the Bott metric:
    integral of |b(x(t), y(t))| |x'(t)| dt, by adaptive Gauss quadrature over
    the dense output (subdivision until the refinement correction is below
    quad_tol per unit parameter length)."""
    if not trace._steps:
        return 0.0
    path = trace.path

    def g7(a, b):
        ts = a + (_GAUSS_NODES + 1.0) * ((b - a) / 2.0)
        xs = np.array([path.x(float(t)) for t in ts])
        ys = np.array([trace.y_at(float(t)) for t in ts])
        jets, err = F.jets(xs, ys)
        if (err >= 0).any():
            raise DomainError("slope jet failed during quadrature")
        dens = np.abs(jets[:, D_YBAR])
        speed = np.array([abs(path.dx(float(t))) for t in ts])
        return float(np.sum(_GAUSS_WEIGHTS * dens * speed)) * (b - a) / 2.0

    # seed intervals at integrator step boundaries (integrand kinks nowhere,
    # but the dense polynomial changes there)
    seeds = [(s.t0, s.t0 + s.h) for s in trace._steps]
    total = 0.0
    for a0, b0 in seeds:
        stack = [(a0, b0, g7(a0, b0), 0)]
        while stack:
            a, b, whole, depth = stack.pop()
            m = 0.5 * (a + b)
            left, right = g7(a, m), g7(m, b)
            if abs(whole - left - right) <= quad_tol * max(b - a, 1e-6) or depth >= max_depth:
                total += left + right
            else:
                stack.append((a, m, left, depth + 1))
                stack.append((m, b, right, depth + 1))
    return total


# ---------------------------------------------------------------------------
# holomorphic motions

@dataclass(frozen=True)
class MotionMap:
    """A family of transversal germs phi_x(y), holomorphic in x.

    phi is an expression in (x, y) in which conj(y) may occur but x must stay
    outside every conj/re/im; phi(base_x, y) = y.
    """

    phi: Expr
    base_x: complex

    def __init__(self, phi, base_x):
        phi = _as_expr(phi)
        if not is_holomorphic_in(phi, ("x",)):
            raise ValueError("motion must be holomorphic in x (no conj/re/im around x)")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "base_x", complex(base_x))
        for k in range(9):
            y = 0.0 if k == 8 else 0.3 * cmath.exp(2j * math.pi * k / 8)
            v = self._value(self.base_x, y)
            if abs(v - y) > 1e-9:
                raise ValueError(f"phi(base_x, {y}) = {v} != {y}: not a motion base")

    @cached_property
    def _tape(self):
        return compile_expr(self.phi)

    def _value(self, x, y):
        from . import backend
        v, err = backend.eval_value_scalar(self._tape, complex(x), complex(y))
        if err >= 0:
            raise DomainError("motion evaluation failed", point=(x, y))
        return complex(v)

    def _jet(self, x, y):
        from . import backend
        coeffs, err = backend.eval_jet_scalar(self._tape, complex(x), complex(y))
        if err >= 0:
            raise DomainError("motion jet failed", point=(x, y))
        return coeffs


def motion_to_slope(m, p, tol=1e-12, max_iter=50):
    """Slope of the foliation swept by the motion: lambda(x, y) =
    dphi/dx (x, phi_x^{-1}(y)).

    phi_x^{-1}(y) is found by damped Newton on the 2-real-dimensional system
    (Jacobian from Wirtinger jets; invertibility iff |dphi/dy|^2 >
    |dphi/dybar|^2)."""
    x, y = complex(p.x), complex(p.y)
    y0 = y  # initial guess: identity motion
    jet = m._jet(x, y0)
    G = jet[0] - y
    for _ in range(max_iter):
        if abs(G) <= tol:
            break
        A = jet[D_Y]
        B = jet[D_YBAR]
        den = abs(A) ** 2 - abs(B) ** 2
        if den <= 1e-14 * (abs(A) ** 2 + abs(B) ** 2 + 1e-300):
            raise NonInvertibleMotionError(
                f"|dphi/dy|^2 - |dphi/dybar|^2 = {den:.3e} at ({x}, {y0})")
        delta = (A.conjugate() * (-G) - B * (-G).conjugate()) / den
        step = delta
        for _ in range(60):
            cand = y0 + step
            try:
                jc = m._jet(x, cand)
            except DomainError:
                step *= 0.5
                continue
            if abs(jc[0] - y) < abs(G):
                y0, jet, G = cand, jc, jc[0] - y
                break
            step *= 0.5
        else:
            raise NewtonError(f"damped Newton stalled at ({x}, {y})")
    else:
        raise NewtonError(f"no convergence after {max_iter} iterations at ({x}, {y})")
    return complex(jet[1])  # dphi/dx at (x, y0); index 1 = D_X


@dataclass(frozen=True)
class MotionTable:
    """Sampled holonomy transports from a base fiber."""

    base_x: complex
    targets: tuple
    ys: tuple
    values: tuple  # values[iy][itarget]

    def to_csv(self, fp):
        fp.write("re x,im x,re y,im y,re phi,im phi\n")
        for iy, y in enumerate(self.ys):
            for it, x in enumerate(self.targets):
                v = self.values[iy][it]
                row = (x.real, x.imag, y.real, y.imag, v.real, v.imag)
                fp.write(",".join(format(c, ".17g") for c in row) + "\n")


def slope_to_motion(F, x0, targets, ys, tol=1e-10):
    """Sample the holonomy motion of F from the fiber over x0: transports each
    y in ys to each target x."""
    rows = []
    for y in ys:
        rows.append(tuple(transport(F, x0, t, y, tol) for t in targets))
    return MotionTable(complex(x0), tuple(complex(t) for t in targets),
                       tuple(complex(y) for y in ys), tuple(rows))
