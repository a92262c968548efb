"""Numerical toolkit for semiholomorphic foliations.

A foliation of an open set of C^2 by holomorphic curves is presented through
its slope field lambda in the (1,0)-form dy - lambda dx.  The package checks
the defining PDE identities pointwise, computes the leafwise metric induced by
the antiholomorphic part of Bott's connection and its curvature, traces leaves
and holonomy as complex ODEs, tests tangency to second-order curve systems and
projective duality, and builds surface-group cocycle embeddings into
PSL3(R).  Every checkable identity is exposed as a numeric residual.
"""

from .backend import backend_name
from .errors import (BoundaryError, DegenerateMetricError,
                     DegeneratePullbackError, DomainError,
                     InconsistentCocycleError, NearZeroContourError,
                     NewtonError, NoIntersectionError,
                     NonInvertibleMotionError, ParseError, PointAtInfinityError,
                     SemifolError, SingularLocusError, TangencyError,
                     TraceError)
from .expr import parse, to_text
from .jets import CPoint, WirtingerJet, eval_jet, eval_value, fd_jet

__version__ = "0.1.0"

__all__ = [
    "CPoint", "WirtingerJet", "eval_jet", "eval_value", "fd_jet",
    "parse", "to_text", "backend_name",
    "SemifolError", "ParseError", "DomainError", "TraceError",
    "SingularLocusError", "DegenerateMetricError", "NearZeroContourError",
    "NonInvertibleMotionError", "NewtonError", "BoundaryError",
    "TangencyError", "DegeneratePullbackError", "NoIntersectionError",
    "PointAtInfinityError", "InconsistentCocycleError",
]
