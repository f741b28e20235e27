"""Exception types shared across the package.

Each error carries the numbers that triggered it so callers (and the CLI)
can report the violated condition instead of a bare message.
"""


class AnisoFrameError(Exception):
    """Base class for all package errors."""


class InvalidInputError(AnisoFrameError):
    """Malformed or inconsistent arguments / config."""


class NotExpansiveError(AnisoFrameError):
    """A dilation matrix with an eigenvalue of modulus <= 1."""

    def __init__(self, modulus: float):
        self.modulus = float(modulus)
        super().__init__(
            f"matrix is not expansive: eigenvalue modulus {self.modulus:.6g} <= 1"
        )


class ScaleRangeError(AnisoFrameError):
    """Requested matrix power outside the representable scale range."""


class AdmissibilityError(AnisoFrameError):
    """gap(nodes) * r >= 1/4, violating the balayage condition."""

    def __init__(self, gap: float, radius: float):
        self.gap = float(gap)
        self.radius = float(radius)
        self.product = self.gap * self.radius
        super().__init__(
            f"admissibility violated: gap {self.gap:.6g} * radius {self.radius:.6g}"
            f" = {self.product:.6g} >= 0.25"
        )


class AliasingError(AnisoFrameError):
    """A spectrum left the frequency grid; carries the offending frequency."""

    def __init__(self, frequency, detail=""):
        self.frequency = frequency
        msg = f"spectrum leaves the frequency grid at {frequency}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class IllPosedDualError(AnisoFrameError):
    """Calderon sum dips below threshold on the window support."""


class BalayageInfeasibleError(AnisoFrameError):
    """No regularization weight met the residual tolerance."""

    def __init__(self, best_residual: float, tol: float):
        self.best_residual = float(best_residual)
        self.tol = float(tol)
        super().__init__(
            f"balayage residual {self.best_residual:.3e} exceeds tol {self.tol:.3e}"
            " after regularization sweep"
        )


class TruncationError(AnisoFrameError):
    """Estimated truncation tail too large; suggests a larger radius."""


class ConstructionError(AnisoFrameError):
    """A window construction could not satisfy its geometric constraints."""


class ContractionError(AnisoFrameError):
    """Perturbed reconstruction diverged; perturbation too large."""


class ExhaustedGridError(AnisoFrameError):
    """No candidate in the search grid met the target; carries the best seen."""

    def __init__(self, best_param, best_value, target):
        self.best_param = best_param
        self.best_value = best_value
        self.target = target
        super().__init__(
            f"no grid entry met the target {target:.3e};"
            f" best was {best_value:.3e} at {best_param}"
        )
