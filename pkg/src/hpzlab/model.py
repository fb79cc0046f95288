"""Parameter types, time scales and regime classification.

All quantities are in natural units hbar = m = omega0 = 1 unless a
``SystemSpec`` says otherwise; the dimensionless ratios gamma/(m omega0),
Gamma/omega0, kT/(hbar omega0) and q0/sigma0 are what the presets use.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError

# "a << b" means a <= b / REGIME_RATIO, "a ~ b" means 1/REGIME_RATIO < a/b < REGIME_RATIO
REGIME_RATIO = 5.0


@dataclass(frozen=True)
class BathSpec:
    """Drude bath: damping strength ``gamma``, cutoff ``cutoff``, temperature ``kT``.

    ``noise='classical'`` replaces coth(beta hbar w / 2) by 2 kT / (hbar w),
    the high-temperature form whose noise kernel is kT gamma Gamma e^{-Gamma t}.
    """

    gamma: float
    cutoff: float
    temperature: float = 0.0
    noise: str = "quantum"

    def __post_init__(self):
        if not self.gamma >= 0.0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if not self.cutoff > 0.0:
            raise ConfigError(f"cutoff must be > 0, got {self.cutoff}")
        if not self.temperature >= 0.0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.noise not in ("quantum", "classical"):
            raise ConfigError(f"noise must be 'quantum' or 'classical', got {self.noise!r}")

    @property
    def is_zero_temperature(self) -> bool:
        return self.temperature == 0.0

    def beta_hbar(self, hbar: float = 1.0) -> float:
        """Thermal time hbar/kT; infinite at T = 0."""
        if self.is_zero_temperature:
            return math.inf
        return hbar / self.temperature


@dataclass(frozen=True)
class SystemSpec:
    """Brownian oscillator plus the geometry of the initial wave packets.

    ``sigma0`` defaults to the coherent-state width sqrt(hbar / (2 m omega0)).
    """

    mass: float = 1.0
    omega0: float = 1.0
    sigma0: Optional[float] = None
    q0: float = 0.0
    p0: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "omega0", "hbar"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0")
        if self.sigma0 is None:
            object.__setattr__(
                self, "sigma0", math.sqrt(self.hbar / (2.0 * self.mass * self.omega0))
            )
        if not self.sigma0 > 0.0:
            raise ConfigError("sigma0 must be > 0")
        if not (self.q0 >= 0.0 and self.p0 >= 0.0):
            raise ConfigError("q0 and p0 must be >= 0")

    @classmethod
    def from_alpha0(cls, alpha0: float, **kwargs) -> "SystemSpec":
        """Packets displaced along q only, with |alpha0| = q0 / (2 sigma0)."""
        if alpha0 < 0:
            raise ConfigError("|alpha0| must be >= 0")
        spec = cls(**kwargs)
        return cls(
            mass=spec.mass,
            omega0=spec.omega0,
            sigma0=spec.sigma0,
            q0=2.0 * spec.sigma0 * alpha0,
            p0=0.0,
            hbar=spec.hbar,
        )

    @property
    def alpha0_sq(self) -> float:
        return self.q0**2 / (4 * self.sigma0**2) + self.sigma0**2 * self.p0**2 / self.hbar**2

    @property
    def alpha0(self) -> float:
        return math.sqrt(self.alpha0_sq)


@dataclass(frozen=True)
class Timescales:
    tau_s: float
    tau_gamma: float
    tau_b: float
    tau_d: Optional[float] = None

    def __post_init__(self):
        for name in ("tau_s", "tau_gamma", "tau_b", "tau_d"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ConfigError(f"{name} must be > 0, got {v}")


class Regime(enum.Enum):
    BORN_MARKOVIAN = "BornMarkovian"
    NON_MARKOVIAN = "NonMarkovian"
    STRONG_COUPLING = "StrongCoupling"
    OUT_OF_RESONANCE = "OutOfResonance"
    AMBIGUOUS = "AmbiguousRegime"


def thermal_occupation(bath: BathSpec, system: SystemSpec) -> float:
    """Bose occupation 1 / (exp(hbar omega0 / kT) - 1)."""
    if bath.is_zero_temperature:
        return 0.0
    x = system.hbar * system.omega0 / bath.temperature
    return math.exp(-x) if x > 700 else 1.0 / math.expm1(x)


def timescales(bath: BathSpec, system: SystemSpec) -> Timescales:
    w0, m, g, G = system.omega0, system.mass, bath.gamma, bath.cutoff
    shift = (g * G / m) * (1.0 - G**2 / (w0**2 + G**2))
    tau_s = (w0**2 + shift) ** -0.5
    tau_gamma = math.inf if g == 0 else (m / g) * (1.0 + w0**2 / G**2)
    # ties go to 1/Gamma
    tau_b = min(1.0 / G, bath.beta_hbar(system.hbar))
    return Timescales(tau_s=tau_s, tau_gamma=tau_gamma, tau_b=tau_b)


def _much_less(a: float, b: float) -> bool:
    return a <= b / REGIME_RATIO


def _comparable(a: float, b: float) -> bool:
    return 1.0 / REGIME_RATIO < a / b < REGIME_RATIO


def classify_regime(ts: Timescales) -> Regime:
    """Assign one of the four regimes; ``Regime.AMBIGUOUS`` if none applies.

    Predicates are checked in the order out-of-resonance, strong coupling,
    non-Markovian, Born-Markovian, so the first match wins where the
    factor-5 bands overlap.
    """
    s, g, b = ts.tau_s, ts.tau_gamma, ts.tau_b
    if s < b and _much_less(b, g):
        return Regime.OUT_OF_RESONANCE
    if _much_less(b, s) and _comparable(s, g):
        return Regime.STRONG_COUPLING
    if _comparable(b, s) and _much_less(s, g):
        return Regime.NON_MARKOVIAN
    if _much_less(b, s) and _much_less(s, g):
        return Regime.BORN_MARKOVIAN
    return Regime.AMBIGUOUS


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    n_points: int = 400
    log_spaced: bool = False
    t_min_log: Optional[float] = None

    def __post_init__(self):
        if self.n_points < 2 or not self.t_max > 0:
            raise ConfigError("grid needs n_points >= 2 and t_max > 0")

    def points(self):
        import numpy as np

        if self.log_spaced:
            t0 = self.t_min_log or self.t_max * 1e-4
            return np.concatenate([[0.0], np.geomspace(t0, self.t_max, self.n_points - 1)])
        return np.linspace(0.0, self.t_max, self.n_points)


__all__ = [
    "BathSpec",
    "SystemSpec",
    "Timescales",
    "Regime",
    "TimeGrid",
    "timescales",
    "classify_regime",
    "thermal_occupation",
    "REGIME_RATIO",
]
