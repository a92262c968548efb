"""Exception types used across the package."""


class SemifolError(Exception):
    pass


class ParseError(SemifolError):
    """Formula does not conform to the grammar; carries the byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class DomainError(SemifolError):
    """Evaluation hit a point outside the domain of a partial operation."""

    def __init__(self, message, subexpr=None, point=None):
        if subexpr is not None:
            message = f"{message} in subexpression '{subexpr}'"
        if point is not None:
            message = f"{message} at {point}"
        super().__init__(message)
        self.subexpr = subexpr
        self.point = point


class DegenerateMetricError(SemifolError):
    """|b| below tolerance where the leaf metric must not degenerate."""


class NearZeroContourError(SemifolError):
    """b comes too close to 0 on a winding contour."""


class TraceError(SemifolError):
    """Leaf tracing failed for a numerical reason other than the singular locus."""


class SingularLocusError(TraceError):
    """Step size underflow: the traced leaf ran into the singular locus."""


class NonInvertibleMotionError(SemifolError):
    """The motion is not invertible at the requested point (|phi_y| <= |phi_ybar|)."""


class NewtonError(SemifolError):
    """Damped Newton iteration failed to converge."""


class BoundaryError(SemifolError):
    """|u|^2 = |v|^2 within tolerance: the point sits on the leaf boundary."""


class TangencyError(SemifolError):
    """Foliation is not tangent to the requested curve system at the point."""


class DegeneratePullbackError(SemifolError):
    """Pulled-back form is vertical: denominator Y_y - (lambda o Phi) X_y ~ 0."""


class NoIntersectionError(SemifolError):
    """No intersection found in patch (envelope Newton search)."""


class PointAtInfinityError(SemifolError):
    """Projective action sends the point to the line at infinity."""


class InconsistentCocycleError(SemifolError):
    """Cocycle does not satisfy the group relation within tolerance."""
