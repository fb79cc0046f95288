"""Non-Markovian quantum Brownian motion lab.

HPZ master-equation coefficients for a Drude bath, the decoherence function
of single-mode cat states and the concurrence of two-mode entangled
coherent states.  Units: hbar = m = omega0 = 1 unless specified.
"""

from .errors import (
    ConfigError,
    DegenerateRoots,
    DivergentAtZero,
    GridMismatch,
    GridTooCoarse,
    HpzLabError,
    IllNormalized,
    NumericalEigenFailure,
    NumericalError,
    OracleMismatch,
    QuadratureFailure,
)
from .model import BathSpec, Regime, SystemSpec, TimeGrid, Timescales, classify_regime, timescales
from .kernels import QuadratureSettings, kernel_K, kernel_L, spectral_density
from .langevin import GreenFunction, MomentState, green_function, propagate
from .hpz import HpzCoefficients, IntegratedRates, hpz_series, integrated_rates, secular_rates
from .decoherence import CatState, DecayTrace, decay_trace, mu_closed_form, mu_quadrature
from .entanglement import EcsSpec, ConcurrenceTrace, concurrence_nonmarkovian, concurrence_static, wootters_concurrence

__version__ = "0.1.0"
