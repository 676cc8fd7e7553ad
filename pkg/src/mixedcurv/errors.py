"""Exception types shared across the package."""


class MixedCurvError(Exception):
    """Base class for all package errors."""


class NonFinite(MixedCurvError):
    """A field evaluation produced NaN or Inf."""


class StepTooLarge(MixedCurvError):
    """A finite-difference stencil left a non-periodic box."""


class DegenerateDistribution(MixedCurvError):
    """Gram-Schmidt hit a (near-)null vector; the split is not defined."""


class SingularMetric(MixedCurvError):
    """|det g| below tolerance at a sample point."""


class NonPeriodicAxis(MixedCurvError):
    """Integration requested on a box with a non-periodic axis."""


class WrongBundle(MixedCurvError):
    """A vector argument does not lie in the required distribution."""


class ShapeMismatch(MixedCurvError):
    """Tensor arguments have incompatible shapes."""


class ClassViolation(MixedCurvError):
    """A variation field violates its declared class constraints."""


class Degenerate(MixedCurvError):
    """A deformed metric lost nondegeneracy on the distribution."""


class UnsupportedPair(MixedCurvError):
    """No analytic first-variation formula covers this (action, class) pair."""


class NotStatistical(MixedCurvError):
    """The contorsion is not of statistical class within tolerance."""


class NotMetric(MixedCurvError):
    """The contorsion is not of metric class within tolerance."""


class NotSemiSymmetric(MixedCurvError):
    """The contorsion is not semi-symmetric within tolerance."""


class DimensionGuard(MixedCurvError):
    """A term with an n+p-2 (or similar) denominator was requested at a forbidden dimension."""


class BadParameters(MixedCurvError):
    """Scenario parameters failed validation."""


class ConfigError(MixedCurvError):
    """CLI configuration failed to parse or validate (exit code 2)."""


class ComputeError(MixedCurvError):
    """A numerical task failed mid-run (exit code 3)."""


class Mismatch(MixedCurvError):
    """Two reports differ structurally and cannot be compared."""


class NotSymmetric(MixedCurvError):
    """A cubic form argument is not totally symmetric."""
