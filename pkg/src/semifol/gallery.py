"""Canonical slope fields with certified companion data.

Each entry couples a slope field with whatever closed-form companions exist
for it (curve system, first integral, holomorphic motion) and is validated at
registration sample points.  The sl2-symmetric example is quarantined as
report-only: its companion residuals are measured and reported, never
asserted, so a possibly mistyped closed form cannot become ground truth.
"""

import cmath
from dataclasses import dataclass
from functools import cached_property

from .curves import CurveSystem2, lines_system, parabolas_system
from .errors import DomainError
from .expr import Expr, parse
from .foliation import SlopeField, integrability_residual
from .holonomy import MotionMap, Segment, motion_to_slope, trace_leaf
from .jets import CPoint, eval_jet

LINES_LAMBDA = "im(y)/im(x)"
LINES_GUARD = "sqrt(im(x)^2)"

PARABOLAS_LAMBDA = "2*x*re(y)/re(1+x^2)"
PARABOLAS_GUARD = "sqrt(re(1+x^2)^2)"
PARABOLAS_INTEGRAL = "re(y)/re(1+x^2)"

TRANSLATION_MOTION = "re(y)+x*im(y)"

QUADRATIC_MOTION = "y+x^2*conj(y)"
QUADRATIC_LAMBDA = "2*x*(conj(y)-conj(x)^2*y)/(1-(x*conj(x))^2)"
QUADRATIC_GUARD = "1-(x*conj(x))^2"

SL2_LAMBDA = ("(im(y^2)/(2*im(x)))"
              "*(conj(y)*sqrt(1-im(y^2)/im(x))+y*(1-im(y^2)/(2*im(x))))"
              "/(y*conj(y)*sqrt(1-im(y^2)/im(x))+re(y^2)"
              "-conj(y)^2*(im(y^2)/(2*im(x))))")
SL2_GUARD = "im(x)"
SL2_INTEGRAL = "(im(conj(x)*y^2)-y*conj(y)*im(x)*sqrt(1-im(y^2)/im(x)))/im(y^2)"

# C-infinity, non-real-analytic perturbation of the lines field used as the
# semirank contrast fixture: all derivatives of exp(-1/re(5x)^2) vanish as
# Re x -> 0, so the field is smooth but not analytic across {Re x = 0}.
BUMP_LAMBDA = "im(y)/im(x)+0.1*exp(-1/re(5*x)^2)"


@dataclass(frozen=True)
class GalleryEntry:
    field: SlopeField
    system: CurveSystem2 | None = None
    first_integral: Expr | None = None
    motion: MotionMap | None = None
    notes: str = ""
    report_only: bool = False
    membership_probe: object | None = None  # callable(tol) -> float deviation

    @property
    def label(self):
        return self.field.label

    def first_integral_residual(self, p):
        """|d_F f| = |f_x + lambda f_y| of the companion first integral."""
        if self.first_integral is None:
            raise ValueError(f"entry '{self.label}' has no first integral")
        jet = eval_jet(self.first_integral, p)
        lam = self.field.value(p)
        return abs(jet.d(1, 0, 0, 0) + lam * jet.d(0, 0, 1, 0))

    def describe(self):
        return {
            "label": self.label,
            "has_system": self.system is not None,
            "has_first_integral": self.first_integral is not None,
            "has_motion": self.motion is not None,
            "notes": self.notes,
        }


def _check(entry, points, tol=1e-9):
    for p in points:
        r = integrability_residual(entry.field, p)
        if r > tol:
            raise AssertionError(
                f"gallery entry '{entry.label}' fails integrability at {p}: {r:.3e}")
    return entry


def ex_lines():
    """Foliation by the complex affine lines with real slope and intercept:
    lambda = Im(y)/Im(x), singular on {Im x = 0}."""
    field = SlopeField(LINES_LAMBDA, LINES_GUARD, "lines")
    entry = GalleryEntry(
        field=field,
        system=lines_system(),
        notes="leaves are the lines y = a x + b with a, b real; "
              "leaf metric on {y=0} is the quarter-Poincare density 1/(4 Im(x)^2)",
    )
    return _check(entry, [CPoint(1 + 2j, 3 + 1j), CPoint(-0.5 + 1j, 0.3 - 0.7j),
                          CPoint(2j, 0.0), CPoint(0.4 - 1.5j, -1 + 1j)], 1e-12)


def ex_parabolas():
    """Foliation by the parabolas {y = a(1 + x^2) + i c} with a, c real:
    lambda = 2 x Re(y) / Re(1 + x^2), tangent to x y'' = y'."""
    field = SlopeField(PARABOLAS_LAMBDA, PARABOLAS_GUARD, "parabolas")
    entry = GalleryEntry(
        field=field,
        system=parabolas_system(),
        first_integral=parse(PARABOLAS_INTEGRAL),
        notes="first integral a = Re(y)/Re(1+x^2) is constant on leaves",
    )
    points = [CPoint(0.7 + 0.3j, 1.2 - 0.4j), CPoint(-0.2 + 0.5j, 0.8 + 1j),
              CPoint(0.1 - 0.6j, -0.5 + 0.2j)]
    _check(entry, points, 1e-10)
    for p in points:
        r = entry.first_integral_residual(p)
        if r > 1e-10:
            raise AssertionError(f"parabola first integral drifts at {p}: {r:.3e}")
    return entry


def ex_translation_motion():
    """The lines foliation presented as the holonomy motion
    phi_x(y) = Re(y) + x Im(y) with base fiber over i."""
    motion = MotionMap(TRANSLATION_MOTION, 1j)
    field = SlopeField(LINES_LAMBDA, LINES_GUARD, "translation-motion")
    entry = GalleryEntry(
        field=field,
        system=lines_system(),
        motion=motion,
        notes="motion_to_slope reproduces Im(y)/Im(x); linear parts are "
              "u = (1 - i x)/2, v = (1 + i x)/2, so the leaf boundary "
              "{|u| = |v|} is the real x-axis",
    )
    for x, y in [(2j, 2j), (1 + 1j, 0.5 - 0.3j), (0.5 + 0.5j, 1j)]:
        lam = motion_to_slope(motion, CPoint(x, y), 1e-12)
        if abs(lam - field.value(CPoint(x, y))) > 1e-8:
            raise AssertionError(f"translation motion slope mismatch at ({x}, {y})")
    return entry


def ex_motion_quadratic():
    """Synthetic fixture: the motion phi_x(y) = y + x^2 conj(y) from base 0.

    Along {y = 0} the linear parts are exactly u = 1, v = x^2, so the Bott
    term b = 2x/(1 - |x|^4) has a simple zero at x = 0 with vanishing
    antiholomorphic derivative; winding counts on small circles see it.
    """
    motion = MotionMap(QUADRATIC_MOTION, 0.0)
    field = SlopeField(QUADRATIC_LAMBDA, QUADRATIC_GUARD, "quadratic-motion")
    entry = GalleryEntry(
        field=field,
        motion=motion,
        notes="b(x, 0) = 2x/(1-|x|^4); zero of order 1 at x = 0",
    )
    for x, y in [(0.2 + 0.1j, 0.05 - 0.02j), (0.1 - 0.3j, 0.2j),
                 (-0.25 + 0.2j, 0.1 + 0.1j)]:
        p = CPoint(x, y)
        if integrability_residual(field, p) > 1e-12:
            raise AssertionError(f"quadratic motion field not integrable at {p}")
        lam = motion_to_slope(motion, p, 1e-12)
        if abs(lam - field.value(p)) > 1e-9:
            raise AssertionError(f"quadratic motion slope mismatch at {p}")
    return entry


def sl2_curve_point(a, x0, x):
    """Point of the dual-family curve with parameters (a, x0):
    y = a (x - x0) / sqrt(1 + a^2 (x - x0)), principal branch."""
    w = complex(x) - complex(x0)
    return a * w / cmath.sqrt(1.0 + a * a * w)


def _sl2_membership_probe(field):
    def probe(tol=1e-10):
        # trace from a point of the (a, x0) = (1, 0) curve and measure how far
        # the endpoint drifts off the curve formula
        a, x0 = 1.0, 0.0
        xs, xe = 0.1 + 0.8j, 0.45 + 0.95j
        ys = sl2_curve_point(a, x0, xs)
        tr = trace_leaf(field, ys, Segment(xs, xe), tol)
        return abs(tr.endpoint - sl2_curve_point(a, x0, xe))
    return probe


def ex_sl2():
    """The sl2-symmetric example: leaves are the dual-family curves
    y = a(x - x0)/sqrt(1 + a^2(x - x0)) with a, x0 real.

    Report-only: integrability, first-integral and curve-membership residuals
    are measured and reported, not asserted (see the module docstring).
    """
    field = SlopeField(SL2_LAMBDA, SL2_GUARD, "sl2")
    return GalleryEntry(
        field=field,
        first_integral=parse(SL2_INTEGRAL),
        notes="report-only entry; sqrt uses the principal branch, admissible "
              "chart Im x > 0 with 1 - Im(y^2)/Im(x) > 0",
        report_only=True,
        membership_probe=_sl2_membership_probe(field),
    )


def bump_perturbed_lines():
    """The lines field plus a smooth non-analytic bump (semirank contrast):
    lambda = Im(y)/Im(x) + 0.1 exp(-1/Re(5x)^2)."""
    return SlopeField(BUMP_LAMBDA, LINES_GUARD, "bump-lines")


_BUILDERS = {
    "lines": ex_lines,
    "parabolas": ex_parabolas,
    "translation-motion": ex_translation_motion,
    "quadratic-motion": ex_motion_quadratic,
    "sl2": ex_sl2,
}


def labels():
    return list(_BUILDERS)


def entry(label):
    try:
        return _BUILDERS[label]()
    except KeyError:
        raise KeyError(f"unknown gallery label '{label}'; known: {labels()}")


def listing():
    """JSON-ready gallery listing."""
    return [_BUILDERS[name]().describe() for name in _BUILDERS]
