"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`GrowthMechError`, so callers (and the CLI) can separate modelling
failures from programming errors.
"""


class GrowthMechError(Exception):
    """Base class for all library errors."""


class DomainError(GrowthMechError, ValueError):
    """A query point lies outside the declared domain."""


class DefinitenessError(GrowthMechError, ValueError):
    """A metric (or other matrix required to be SPD) is not positive-definite."""


class ConfigurationError(GrowthMechError, ValueError):
    """Inputs are structurally invalid (grid too small, bad parameters...)."""


class OrientationError(GrowthMechError, ValueError):
    """A deformation is not orientation preserving (dr/dR <= 0)."""


class GeometryError(GrowthMechError, ValueError):
    """Degenerate growth geometry, e.g. a non-positive radicand."""


class DecompositionError(GrowthMechError, ValueError):
    """F = Fe Fg cannot be formed (singular F or Fg)."""


class ConstitutiveError(GrowthMechError, ValueError):
    """A free energy produced an inconsistent derivative."""


class SingularPointError(GrowthMechError, ValueError):
    """Evaluation at a singular point of a map (e.g. the inversion centre)."""


class DegenerateConeError(GrowthMechError, ValueError):
    """Cone family with eta = -1 has no finite cone parameter."""


class NonEmbeddableError(GrowthMechError, ValueError):
    """A rotationally symmetric metric has no surface of revolution anywhere."""


class MeshError(GrowthMechError, ValueError):
    """Too few valid samples to build a mesh."""


class NumericError(GrowthMechError, ArithmeticError):
    """A numerical procedure failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SolverError(NumericError):
    """Root bracketing or root finding failed."""


class StepSizeError(NumericError):
    """An integrator step violated an invariant; retry with a smaller step."""


class VerificationError(GrowthMechError):
    """A solution was produced but failed its independent verification."""

    def __init__(self, message, value=None, tolerance=None):
        super().__init__(message)
        self.value = value
        self.tolerance = tolerance


class ParseError(GrowthMechError, ValueError):
    """Malformed expression or configuration text; carries a 1-based position."""

    def __init__(self, message, line=1, col=1, text=""):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col
        self.text = text
