"""Exception hierarchy shared across the package."""


class IsofolError(Exception):
    """Base class for all package-specific errors."""


class DegenerateConfigurationError(IsofolError):
    """Pole configuration too degenerate to work with (coincident poles, etc.)."""


class DegenerateLatticeError(DegenerateConfigurationError):
    """Lattice vectors fail the real-determinant condition."""


class InvalidBasepointError(IsofolError):
    """Basepoint coincides with a pole or is otherwise unusable."""


class PoleEvaluationError(IsofolError):
    """Connection matrix requested at (or numerically on top of) a pole."""


class PoleProximityError(IsofolError):
    """Integration path passes too close to a pole."""


class StiffnessError(IsofolError):
    """Adaptive step control failed: step underflow or too many rejections."""

    def __init__(self, message, *, steps=0, rejected=0, position=None):
        super().__init__(message)
        self.steps = steps
        self.rejected = rejected
        self.position = position


class CollisionError(IsofolError):
    """Two poles came closer than the collision margin along a deformation."""


class FamilyEvaluationError(IsofolError):
    """Parameter-family evaluation failed; carries the offending point."""

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class BoundaryError(IsofolError):
    """A finite-difference stencil point left the admissible domain."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class InvalidJacobianError(IsofolError):
    """Jacobian contains non-finite entries."""


class RankInstabilityError(IsofolError):
    """Kernel dimension changed at a probe point (near a rank-drop locus)."""


class IndeterminateIntegralError(IsofolError):
    """A first-integral denominator vanishes; carries the 1-based index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SamplingError(IsofolError):
    """Rejection sampling failed to find admissible points."""


class ScanError(IsofolError):
    """Too many sample points failed during a rank scan."""


class ConfigError(IsofolError):
    """Command-line configuration rejected at parse time."""
