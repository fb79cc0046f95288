"""Second-order HPZ master-equation coefficients for the Drude bath.

gamma_p and delta_omega2 are closed-form (L(t) is a pure exponential).  The
diffusion coefficients D_p, D_qp need the noise kernel; the time integral
under the frequency integral is done analytically, leaving one frequency
quadrature per time point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import GridTooCoarse
from .kernels import DEFAULT_SETTINGS, QuadratureSettings, bath_integral, kernel_K, noise_density, spectral_density
from .model import BathSpec, SystemSpec, thermal_occupation


def _exp_sin_cos_integrals(t, decay: float, w0: float):
    """int_0^t e^{-G s} sin(w0 s) ds and int_0^t e^{-G s} cos(w0 s) ds."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-decay * t)
    s, c = np.sin(w0 * t), np.cos(w0 * t)
    den = decay**2 + w0**2
    i_sin = (w0 - e * (decay * s + w0 * c)) / den
    i_cos = (decay - e * (decay * c - w0 * s)) / den
    return i_sin, i_cos


def gamma_p(t, bath: BathSpec, system: SystemSpec):
    """Dissipation coefficient (2 / hbar m w0) int_0^t L(t') sin(w0 t') dt'."""
    i_sin, _ = _exp_sin_cos_integrals(t, bath.cutoff, system.omega0)
    return bath.gamma * bath.cutoff**2 / (system.mass * system.omega0) * i_sin


def delta_omega2(t, bath: BathSpec, system: SystemSpec):
    """Frequency shift gamma Gamma / m - (2 / hbar m) int_0^t L(t') cos(w0 t') dt'."""
    _, i_cos = _exp_sin_cos_integrals(t, bath.cutoff, system.omega0)
    m, g, G = system.mass, bath.gamma, bath.cutoff
    return g * G / m - g * G**2 / m * i_cos


def big_gamma_p(t, bath: BathSpec, system: SystemSpec):
    """Gamma_p(t) = int_0^t gamma_p(s) ds, closed form."""
    G, w0 = bath.cutoff, system.omega0
    i_sin, i_cos = _exp_sin_cos_integrals(t, G, w0)
    t = np.asarray(t, dtype=float)
    acc = (w0 * t - G * i_sin - w0 * i_cos) / (G**2 + w0**2)
    return bath.gamma * G**2 / (system.mass * w0) * acc


def _sinc(x):
    return np.sinc(x / np.pi)


def diffusion_coefficients(t: float, bath: BathSpec, system: SystemSpec,
                           settings: QuadratureSettings = DEFAULT_SETTINGS):
    """(D_qp(t), D_p(t)) from one vector-valued frequency integral.

    int_0^t cos(w s) cos(w0 s) ds and int_0^t cos(w s) sin(w0 s) ds are
    written with sinc functions so the resonance at w = w0 is harmless.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0 or bath.gamma == 0.0:
        return 0.0, 0.0
    w0 = system.omega0

    def weight(w):
        xm, xp = w - w0, w + w0
        c = 0.5 * t * (_sinc(xm * t) + _sinc(xp * t))
        # (1 - cos(x t)) / x = x t^2 / 2 * sinc^2(x t / 2)
        s = 0.25 * t * t * (xp * _sinc(0.5 * xp * t) ** 2 - xm * _sinc(0.5 * xm * t) ** 2)
        return np.stack([s, c])

    def tail_parts(w):
        den = w * w - w0 * w0
        sw, cw = math.sin(w0 * t), math.cos(w0 * t)
        P = np.array([-w0 / den, 0.0])
        C = np.array([w0 * cw / den, -w0 * sw / den])
        S = np.array([w * sw / den, w * cw / den])
        return P, C, S

    s_int, c_int = bath_integral(
        bath, t, weight, tail_parts, settings, hbar=system.hbar,
        scale=max(w0, 1.0), breakpoints=(w0,),
    )
    return float(s_int) / (system.mass * w0), float(c_int)


def d_qp(t: float, bath: BathSpec, system: SystemSpec,
         settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Anomalous diffusion (1 / m w0) int_0^t K(t') sin(w0 t') dt'."""
    return diffusion_coefficients(t, bath, system, settings)[0]


def d_p(t: float, bath: BathSpec, system: SystemSpec,
        settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Momentum diffusion int_0^t K(t') cos(w0 t') dt'."""
    return diffusion_coefficients(t, bath, system, settings)[1]


def diffusion_nested(t: float, bath: BathSpec, system: SystemSpec,
                     settings: QuadratureSettings = DEFAULT_SETTINGS):
    """(D_qp, D_p) by integrating the quadrature kernel K(t') over t'.

    Slow reference route: every outer node costs a full frequency
    integral.  K has an integrable log singularity at t' = 0.
    """
    if t == 0.0 or bath.gamma == 0.0:
        return 0.0, 0.0
    w0 = system.omega0
    strength = bath.gamma * bath.cutoff**2 / (1.0 + bath.cutoff**2)
    tol = dict(epsabs=1e-14 * min(1.0, strength), epsrel=1e-10, limit=200)
    points = [p for p in (1.0 / bath.cutoff, 5.0 / bath.cutoff) if p < t] or None
    cos_part = integrate.quad(lambda s: kernel_K(s, bath, settings, system.hbar) * math.cos(w0 * s),
                              0.0, t, points=points, **tol)[0]
    sin_part = integrate.quad(lambda s: kernel_K(s, bath, settings, system.hbar) * math.sin(w0 * s),
                              0.0, t, points=points, **tol)[0]
    return sin_part / (system.mass * w0), cos_part


class SecularRates(NamedTuple):
    gamma_down: float
    gamma_up: float
    non_lindblad: bool


def secular_from(gp, dp, system: SystemSpec):
    base = np.asarray(dp) / (system.hbar * system.mass * system.omega0)
    half = 0.5 * np.asarray(gp)
    return base + half, base - half


def secular_rates(t: float, bath: BathSpec, system: SystemSpec,
                  settings: QuadratureSettings = DEFAULT_SETTINGS) -> SecularRates:
    down, up = secular_from(gamma_p(t, bath, system), d_p(t, bath, system, settings), system)
    down, up = float(down), float(up)
    return SecularRates(down, up, down < 0 or up < 0)


@dataclass(frozen=True)
class AsymptoticCoefficients:
    gamma_p: float
    delta_omega2: float
    d_p: float
    d_qp: float
    gamma_down: float
    gamma_up: float
    nbar: float


def asymptotic_coefficients(bath: BathSpec, system: SystemSpec,
                            settings: QuadratureSettings = DEFAULT_SETTINGS) -> AsymptoticCoefficients:
    """Long-time (t >> 1/Gamma) values of every coefficient."""
    m, w0, g, G, hbar = system.mass, system.omega0, bath.gamma, bath.cutoff, system.hbar
    gp = g / m * G**2 / (w0**2 + G**2)
    dw2 = g * G / m * (1 - G**2 / (w0**2 + G**2))
    nbar = thermal_occupation(bath, system)
    coth = 2 * nbar + 1
    dp_inf = 0.5 * hbar * float(spectral_density(w0, bath)) * coth
    # D_qp(inf) = (1/m w0)(hbar/pi) PV int J coth w0 / (w0^2 - w^2) dw
    eps = 1e-15 * min(1.0, g * G**2 / (1.0 + G**2)) if g > 0 else 1e-15

    def amp(w):
        return float(noise_density(w, bath, hbar)) * w0 / (w0 + w)

    pv = integrate.quad(amp, 0.0, 2 * w0, weight="cauchy", wvar=w0, epsabs=eps, epsrel=1e-11)[0]
    rest = integrate.quad(lambda w: float(noise_density(w, bath, hbar)) * w0 / (w0**2 - w**2),
                          2 * w0, np.inf, epsabs=eps, epsrel=1e-11, limit=200)[0]
    # the cauchy weight gives PV int amp / (w - w0), and w0 / (w0^2 - w^2) = -amp / (w - w0)
    dqp_inf = (hbar / math.pi) * (-pv + rest) / (m * w0)
    return AsymptoticCoefficients(
        gamma_p=gp, delta_omega2=dw2, d_p=dp_inf, d_qp=dqp_inf,
        gamma_down=gp * (nbar + 1), gamma_up=gp * nbar, nbar=nbar,
    )


def default_nodes(t_max: float, bath: BathSpec, system: SystemSpec, per_period: int = 48) -> np.ndarray:
    """Interpolation nodes: geometric near t = 0 where the bath transients live,
    then uniform with ``per_period`` nodes per system period."""
    fast = max(bath.cutoff, 2 * math.pi * bath.temperature / system.hbar, system.omega0)
    t_fast = min(10.0 / fast, t_max)
    early = np.geomspace(1e-4 / fast, t_fast, 80)
    step = 2 * math.pi / system.omega0 / per_period
    late = np.linspace(t_fast, t_max, max(2, int(math.ceil((t_max - t_fast) / step)) + 1))
    nodes = np.unique(np.concatenate([[0.0], early[early < t_max], late]))
    return nodes


@dataclass(frozen=True)
class HpzCoefficients:
    """HPZ coefficient series on a time grid.

    ``at`` interpolates D_p, D_qp with cubic splines between the nodes;
    gamma_p and delta_omega2 are evaluated exactly.
    """

    t: np.ndarray
    gamma_p: np.ndarray
    delta_omega2: np.ndarray
    d_qp: np.ndarray
    d_p: np.ndarray
    gamma_down: np.ndarray
    gamma_up: np.ndarray
    bath: BathSpec
    system: SystemSpec

    @property
    def gamma_q(self) -> np.ndarray:
        return self.system.omega0**2 + self.delta_omega2 - self.bath.gamma * self.bath.cutoff / self.system.mass

    @property
    def non_lindblad(self) -> bool:
        return bool(np.any(self.gamma_down < 0) or np.any(self.gamma_up < 0))

    def _spline(self, y):
        return CubicSpline(self.t, y)

    def d_p_at(self, t):
        return self._spline(self.d_p)(t)

    def d_qp_at(self, t):
        return self._spline(self.d_qp)(t)

    def resample(self, ts) -> "HpzCoefficients":
        ts = np.asarray(ts, dtype=float)
        gp = gamma_p(ts, self.bath, self.system)
        dp = self.d_p_at(ts)
        down, up = secular_from(gp, dp, self.system)
        return HpzCoefficients(ts, gp, delta_omega2(ts, self.bath, self.system), self.d_qp_at(ts),
                               dp, down, up, self.bath, self.system)


def hpz_series(t_max: float, bath: BathSpec, system: SystemSpec,
               settings: QuadratureSettings = DEFAULT_SETTINGS,
               nodes: Optional[np.ndarray] = None) -> HpzCoefficients:
    ts = default_nodes(t_max, bath, system) if nodes is None else np.asarray(nodes, float)
    gp = gamma_p(ts, bath, system)
    dw2 = delta_omega2(ts, bath, system)
    dd = np.array([diffusion_coefficients(float(t), bath, system, settings) for t in ts])
    dqp, dp = dd[:, 0], dd[:, 1]
    down, up = secular_from(gp, dp, system)
    return HpzCoefficients(ts, gp, dw2, dqp, dp, down, up, bath, system)


@dataclass(frozen=True)
class IntegratedRates:
    t: np.ndarray
    big_gamma_p: np.ndarray
    delta_p: np.ndarray


def _cumulative_gauss(func, ts: np.ndarray, order: int = 8) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = ts[:-1], ts[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = func(nodes.ravel()).reshape(nodes.shape)
    pieces = (vals @ w) * half
    return np.concatenate([[0.0], np.cumsum(pieces)])


def integrated_rates(t_grid, bath: BathSpec, system: SystemSpec,
                     settings: QuadratureSettings = DEFAULT_SETTINGS,
                     series: Optional[HpzCoefficients] = None) -> IntegratedRates:
    """Gamma_p(t) and Delta_p(t) = (2 e^{-Gamma_p(t)} / hbar m w0) int_0^t e^{Gamma_p(s)} D_p(s) ds.

    Raises GridTooCoarse when splitting every grid interval in two moves
    Delta_p by more than 0.1%.
    """
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size < 2 or ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at 0")
    Gp = big_gamma_p(ts, bath, system)
    if bath.gamma == 0.0:
        return IntegratedRates(ts, Gp, np.zeros_like(ts))
    if series is None:
        series = hpz_series(float(ts[-1]), bath, system, settings)
    spline = CubicSpline(series.t, series.d_p)

    def integrand(s):
        return np.exp(big_gamma_p(s, bath, system)) * spline(s)

    coarse = _cumulative_gauss(integrand, ts)
    fine_grid = np.sort(np.concatenate([ts, 0.5 * (ts[:-1] + ts[1:])]))
    fine = _cumulative_gauss(integrand, fine_grid)[::2]
    scale = np.max(np.abs(fine)) or 1.0
    if np.max(np.abs(fine - coarse)) > 1e-3 * scale:
        raise GridTooCoarse("Delta_p changes by more than 0.1% when the grid is halved")
    pref = 2.0 / (system.hbar * system.mass * system.omega0)
    return IntegratedRates(ts, Gp, pref * np.exp(-Gp) * fine)
