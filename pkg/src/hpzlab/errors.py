"""Exception hierarchy.

Every error carries a module-qualified ``code`` so the CLI can report it
without inspecting the exception type.
"""


class HpzLabError(Exception):
    code = "hpzlab.error"


class ConfigError(HpzLabError, ValueError):
    code = "model.config"


class NumericalError(HpzLabError, ArithmeticError):
    code = "numerics.failure"


class QuadratureFailure(NumericalError):
    code = "kernels.quadrature_failure"


class DivergentAtZero(NumericalError):
    """Raised when the noise kernel is requested at its logarithmic singularity."""

    code = "kernels.divergent_at_zero"


class DegenerateRoots(NumericalError):
    code = "langevin.degenerate_roots"


class GridTooCoarse(NumericalError):
    code = "hpz.grid_too_coarse"


class GridMismatch(HpzLabError, ValueError):
    code = "entanglement.grid_mismatch"


class IllNormalized(HpzLabError, ValueError):
    code = "entanglement.ill_normalized"


class NumericalEigenFailure(NumericalError):
    code = "entanglement.eigen_failure"


class OracleMismatch(HpzLabError):
    code = "cli.oracle_mismatch"
