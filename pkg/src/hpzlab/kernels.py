"""Drude spectral density, the dissipation and noise kernels, and the
semi-infinite quadrature engine shared by every frequency integral.

Frequency integrals over the bath are split at ``omega_max``: below it a
vectorised Gauss-Legendre panel scheme with adaptive bisection, above it
the oscillatory remainder is handed to QUADPACK's Fourier-integral routine
(QAWF) through :func:`scipy.integrate.quad`.  The noise weight
J(omega) coth(beta hbar omega / 2) only falls off like 1/omega, so the tail
cannot simply be truncated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DivergentAtZero, QuadratureFailure
from .model import BathSpec


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 40
    omega_max_factor: float = 50.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SETTINGS = QuadratureSettings()


@dataclass(frozen=True)
class KernelSample:
    t: float
    value: float


def spectral_density(omega, bath: BathSpec):
    """J(omega) = gamma omega Gamma^2 / (omega^2 + Gamma^2)."""
    omega = np.asarray(omega, dtype=float)
    G = bath.cutoff
    return bath.gamma * omega * G**2 / (omega**2 + G**2)


def noise_density(omega, bath: BathSpec, hbar: float = 1.0):
    """J(omega) coth(beta hbar omega / 2), finite at omega = 0 for T > 0."""
    omega = np.asarray(omega, dtype=float)
    J = spectral_density(omega, bath)
    if bath.noise == "classical":
        return bath.gamma * bath.cutoff**2 / (omega**2 + bath.cutoff**2) * (2 * bath.temperature / hbar)
    if bath.is_zero_temperature:
        return J
    G = bath.cutoff
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = 0.5 * hbar * omega / bath.temperature
        # J/omega * omega*coth(x), with omega*coth(x) -> 2 kT / hbar at omega = 0
        w_coth = np.where(x > 1e-8, omega / np.tanh(np.maximum(x, 1e-300)), 2 * bath.temperature / hbar)
    return bath.gamma * G**2 / (omega**2 + G**2) * w_coth


def kernel_L(t, bath: BathSpec, hbar: float = 1.0):
    """Dissipation kernel (hbar/pi) int J(w) sin(wt) dw = (hbar gamma Gamma^2 / 2) exp(-Gamma t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    return 0.5 * hbar * bath.gamma * bath.cutoff**2 * np.exp(-bath.cutoff * t)


# ---------------------------------------------------------------------------
# quadrature engine


@lru_cache(maxsize=None)
def _gauss_pair(n: int):
    xa, wa = np.polynomial.legendre.leggauss(n)
    xb, wb = np.polynomial.legendre.leggauss(2 * n)
    return xa, wa, xb, wb


def _panel_quadrature(integrand, a: np.ndarray, b: np.ndarray, n: int):
    """Integrate over each panel [a_i, b_i] with n and 2n point Gauss rules.

    Returns (estimate, error) with shapes (k, panels).
    """
    xa, wa, xb, wb = _gauss_pair(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = np.concatenate(
        [(mid[:, None] + half[:, None] * xa[None, :]).ravel(),
         (mid[:, None] + half[:, None] * xb[None, :]).ravel()]
    )
    vals = np.atleast_2d(np.asarray(integrand(nodes)))
    if vals.shape[-1] != nodes.size:
        vals = np.broadcast_to(vals, (vals.shape[0], nodes.size))
    na = a.size * n
    fa = vals[:, :na].reshape(vals.shape[0], a.size, n)
    fb = vals[:, na:].reshape(vals.shape[0], a.size, 2 * n)
    ia = np.einsum("kpn,n->kp", fa, wa) * half
    ib = np.einsum("kpn,n->kp", fb, wb) * half
    return ib, np.abs(ib - ia)


def adaptive_panels(
    integrand: Callable,
    lo: float,
    hi: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    max_width: Optional[float] = None,
    breakpoints: Sequence[float] = (),
    order: int = 10,
) -> np.ndarray:
    """Adaptive Gauss-Legendre panel quadrature of a vectorised integrand.

    The integrand maps a 1D array of abscissae to an array of shape
    (n,) or (k, n); the result has shape (k,).  Panels wider than
    ``max_width`` are split up front, then panels whose error estimate
    exceeds their share of the global tolerance are bisected, at most
    ``settings.max_subdivisions`` times.
    """
    edges = sorted({lo, hi, *[p for p in breakpoints if lo < p < hi]})
    pieces = []
    for x0, x1 in zip(edges[:-1], edges[1:]):
        npan = 1
        if max_width is not None and max_width > 0:
            npan = max(1, int(math.ceil((x1 - x0) / max_width)))
        pieces.append(np.linspace(x0, x1, npan + 1))
    a = np.concatenate([p[:-1] for p in pieces])
    b = np.concatenate([p[1:] for p in pieces])

    total = 0.0
    for _ in range(settings.max_subdivisions + 1):
        est, err = _panel_quadrature(integrand, a, b, order)
        global_est = total + est.sum(axis=1)
        tol = np.maximum(settings.abs_tol, settings.rel_tol * np.abs(global_est))
        share = (b - a) / (hi - lo)
        bad = np.any(err > tol[:, None] * share[None, :], axis=0)
        total = total + est[:, ~bad].sum(axis=1)
        if not bad.any():
            return total
        a_bad, b_bad = a[bad], b[bad]
        est, err = est[:, bad], err[:, bad]
        if a_bad.size > 200_000:
            break
        m = 0.5 * (a_bad + b_bad)
        a = np.concatenate([a_bad, m])
        b = np.concatenate([m, b_bad])
    if np.all(err.sum(axis=1) <= 10 * tol):
        return total + est.sum(axis=1)
    raise QuadratureFailure(
        f"panel quadrature on [{lo}, {hi}] did not reach tolerance within "
        f"{settings.max_subdivisions} subdivisions"
    )


def _quad_checked(f, a, b, settings: QuadratureSettings, **kw) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            f, a, b, epsabs=settings.abs_tol, epsrel=max(settings.rel_tol, 1e-13),
            limit=max(50, 10 * settings.max_subdivisions), full_output=1, **kw
        )
    value, abserr = out[0], out[1]
    if len(out) > 3 and out[3]:
        # QUADPACK flagged a problem; accept only if the error estimate is still fine
        if not abserr <= 100 * max(settings.abs_tol, settings.rel_tol * abs(value)):
            raise QuadratureFailure(f"QUADPACK: {out[3]}")
    return value


@dataclass(frozen=True)
class FourierTail:
    """Integrand for omega >= omega_max written as P(w) + C(w) cos(wt) + S(w) sin(wt).

    Each amplitude maps a scalar (or array) omega to an array of shape (k,)
    (or (k, n)); ``None`` means identically zero.
    """

    t: float
    plain: Optional[Callable] = None
    cos_amp: Optional[Callable] = None
    sin_amp: Optional[Callable] = None


def _tail_integral(tail: FourierTail, lo: float, k: int, settings: QuadratureSettings):
    out = np.zeros(k)
    for amp, weight in ((tail.plain, None), (tail.cos_amp, "cos"), (tail.sin_amp, "sin")):
        if amp is None:
            continue
        if weight is not None and tail.t == 0.0:
            if weight == "sin":
                continue
            weight = None
        for j in range(k):
            fj = lambda w, amp=amp, j=j: float(np.atleast_1d(amp(np.asarray(w)))[j])
            if weight is None:
                out[j] += _quad_checked(fj, lo, np.inf, settings)
            else:
                out[j] += _quad_checked(fj, lo, np.inf, settings, weight=weight, wvar=tail.t)
    return out


def quad_semi_infinite(
    integrand: Callable,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    scale: float = 1.0,
    t: float = 0.0,
    tail: Optional[FourierTail] = None,
    breakpoints: Sequence[float] = (),
):
    """Integrate a vectorised integrand over [0, inf).

    Panels cover [0, omega_max] with omega_max = omega_max_factor * max(scale, 1/t)
    and width at most pi/(4t) (a quarter of a half-period of cos(wt)).
    Beyond omega_max the ``tail`` decomposition is integrated by QAWF; with
    no tail the integrand is assumed negligible there.  Returns a float for
    scalar integrands and an array for vector-valued ones.
    """
    inv_t = 1.0 / t if t > 0 else 0.0
    omega_max = settings.omega_max_factor * max(scale, inv_t)
    max_width = math.pi / (4 * t) if t > 0 else omega_max / 16
    probe = np.asarray(integrand(np.array([0.5 * omega_max])))
    scalar = probe.ndim == 1
    k = 1 if scalar else probe.shape[0]
    value = adaptive_panels(
        integrand, 0.0, omega_max, settings, max_width=max_width, breakpoints=breakpoints
    )
    if tail is not None:
        value = value + _tail_integral(tail, omega_max, k, settings)
    if not np.all(np.isfinite(value)):
        raise QuadratureFailure("non-finite quadrature result")
    return float(value[0]) if scalar else value


# ---------------------------------------------------------------------------
# bath noise integrals


def bath_integral(
    bath: BathSpec,
    t: float,
    weight: Callable,
    tail_parts: Optional[Callable] = None,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    hbar: float = 1.0,
    scale: float = 1.0,
    breakpoints: Sequence[float] = (),
):
    """(hbar/pi) int_0^inf J(w) coth(beta hbar w/2) weight(w) dw.

    ``weight`` is vectorised and may be vector-valued.  ``tail_parts(w)``
    returns the triple (P, C, S) of amplitudes with
    weight = P + C cos(wt) + S sin(wt), valid for w >= omega_max.
    """
    pref = hbar / math.pi
    # every bath integral is linear in gamma and small when Gamma is: scale
    # the absolute tolerance so it never dominates the relative one
    strength = bath.gamma * bath.cutoff**2 / (1.0 + bath.cutoff**2)
    if strength > 0:
        settings = replace(settings, abs_tol=settings.abs_tol * min(1.0, strength))

    def full(w):
        return pref * noise_density(w, bath, hbar) * np.asarray(weight(w))

    tail = None
    if tail_parts is not None:
        # probe far out so resonant denominators in the tail are safe
        present = [p is not None for p in tail_parts(1e6 * max(scale, 1.0))]

        def part(i):
            if not present[i]:
                return None
            return lambda w: pref * noise_density(w, bath, hbar) * np.asarray(tail_parts(w)[i])

        tail = FourierTail(t=t, plain=part(0), cos_amp=part(1), sin_amp=part(2))
    return quad_semi_infinite(
        full, settings, scale=scale, t=t, tail=tail, breakpoints=breakpoints
    )


def kernel_K(t: float, bath: BathSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
             hbar: float = 1.0) -> float:
    """Noise kernel (hbar/pi) int J(w) coth(beta hbar w/2) cos(wt) dw.

    The Drude weight falls off like gamma Gamma^2 / w, so K diverges
    logarithmically at t = 0 at every temperature (quantum noise only).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if bath.gamma == 0.0:
        return 0.0
    if bath.noise == "classical":
        return bath.temperature * bath.gamma * bath.cutoff * math.exp(-bath.cutoff * t)
    if t == 0.0:
        raise DivergentAtZero("K(t) diverges logarithmically at t = 0 for a Drude bath")
    return bath_integral(
        bath, t, lambda w: np.cos(w * t),
        lambda w: (None, 1.0, None), settings, hbar=hbar,
        scale=max(bath.cutoff, bath.temperature / hbar, 1.0),
    )


def kernel_L_quadrature(t: float, bath: BathSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
                        hbar: float = 1.0) -> float:
    """L(t) from its defining frequency integral (reference for the closed form)."""
    pref = hbar / math.pi
    if t == 0.0:
        return 0.0 if bath.gamma == 0 else 0.5 * hbar * bath.gamma * bath.cutoff**2
    tail = FourierTail(t=t, sin_amp=lambda w: pref * spectral_density(w, bath))
    return quad_semi_infinite(
        lambda w: pref * spectral_density(w, bath) * np.sin(w * t),
        settings, scale=max(bath.cutoff, 1.0), t=t, tail=tail,
    )


def kernel_K_series(ts, bath: BathSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
                    hbar: float = 1.0) -> list[KernelSample]:
    return [KernelSample(float(t), kernel_K(float(t), bath, settings, hbar)) for t in ts]
