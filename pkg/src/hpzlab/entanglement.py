"""Concurrence of two-mode entangled coherent states.

For |alpha>^N + e^{i theta} |-alpha>^N the two-mode reduced state lives in
span{|alpha>, |-alpha>} per mode.  With |0> = |alpha>, |-alpha> = p|0> + M|1>
(p = <alpha|-alpha> = e^{-2|alpha|^2}, M = sqrt(1 - p^2)) it reads

    rho = N0^2 [ e0 e0^T + v v^T + q (e^{-i theta} e0 v^T + h.c.) ],
    e0 = (1, 0, 0, 0),  v = (p^2, pM, pM, M^2),

where q is the coherence left after tracing out (or damping) the other
modes.  Amplitude damping keeps this shape with time-dependent p, q, M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .decoherence import detect_revivals
from .errors import GridMismatch, IllNormalized, NumericalEigenFailure
from .hpz import IntegratedRates, asymptotic_coefficients
from .model import BathSpec, SystemSpec

SEPARABILITY_LEVEL = 1e-6


@dataclass(frozen=True)
class EcsSpec:
    n_modes: int = 2
    theta: float = 0.0
    alpha2: float = 1.0

    def __post_init__(self):
        if self.n_modes < 2:
            raise ValueError("need at least two modes")
        if not self.alpha2 >= 0:
            raise ValueError("alpha2 must be >= 0")

    @property
    def p(self) -> float:
        return math.exp(-2.0 * self.alpha2)

    @property
    def q(self) -> float:
        return self.p ** (self.n_modes - 2)

    @property
    def m(self) -> float:
        return math.sqrt(-math.expm1(-4.0 * self.alpha2))

    @property
    def norm_sq(self) -> float:
        """N0^2 = 1 / (2 + 2 p^N cos theta)."""
        cos = math.cos(self.theta)
        if abs(1 + math.cos(self.theta)) < 1e-15 and self.alpha2 < 1e-12:
            raise IllNormalized("theta = pi with alpha -> 0 has no normalisable state")
        return 1.0 / (2.0 + 2.0 * math.exp(-2.0 * self.n_modes * self.alpha2) * cos)


@dataclass(frozen=True)
class ReducedDensityMatrix:
    matrix: np.ndarray
    p: float
    q: float
    m: float
    norm_sq: float
    theta: float = 0.0

    def check(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10, psd_tol: float = 1e-10):
        rho = self.matrix
        assert np.max(np.abs(rho - rho.conj().T)) <= herm_tol, "not Hermitian"
        assert abs(np.trace(rho).real - 1.0) <= trace_tol, "trace != 1"
        assert np.linalg.eigvalsh(rho).min() >= -psd_tol, "not positive semidefinite"
        return True


def rebuild_density(p: float, q: float, m: float, theta: float = 0.0,
                    norm_sq: Optional[float] = None) -> ReducedDensityMatrix:
    """The 4x4 matrix for given (p, q, M).  ``norm_sq`` defaults to the value
    giving unit trace, 1 / (2 + 2 q p^2 cos theta)."""
    if norm_sq is None:
        denom = 2.0 + 2.0 * q * p * p * math.cos(theta)
        if denom <= 1e-300:
            raise IllNormalized("parameters give a zero-norm state")
        norm_sq = 1.0 / denom
    e0 = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    v = np.array([p * p, p * m, p * m, m * m], dtype=complex)
    ph = q * np.exp(-1j * theta)
    rho = np.outer(e0, e0) + np.outer(v, v) + ph * np.outer(e0, v) + np.conj(ph) * np.outer(v, e0)
    return ReducedDensityMatrix(norm_sq * rho, p, q, m, norm_sq, theta)


def reduced_density(spec: EcsSpec) -> ReducedDensityMatrix:
    return rebuild_density(spec.p, spec.q, spec.m, spec.theta, spec.norm_sq)


_SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def wootters_concurrence(rho, residual_tol: float = 1e-8) -> float:
    """max(l1 - l2 - l3 - l4, 0), l_i the square roots of the eigenvalues of
    rho (sy x sy) rho* (sy x sy).

    The l_i are taken as singular values of tau = W^T (sy x sy) W for any
    factorisation rho = W W^dagger, which avoids square roots of round-off
    sized eigenvalues; the eigenvalues of the flipped product are still
    computed and must agree (relative residual ``residual_tol``).
    """
    mat = rho.matrix if isinstance(rho, ReducedDensityMatrix) else np.asarray(rho, dtype=complex)
    mat = 0.5 * (mat + mat.conj().T)
    w, v = np.linalg.eigh(mat)
    keep = w > 1e-14 * max(w.max(), 1e-300)
    W = v[:, keep] * np.sqrt(w[keep])
    lam = np.zeros(4)
    sv = np.linalg.svd(W.T @ _SYSY @ W, compute_uv=False)
    lam[: sv.size] = np.sort(sv)[::-1]
    flip = mat @ _SYSY @ mat.conj() @ _SYSY
    ev = np.sort(np.linalg.eigvals(flip).real)[::-1]
    scale = max(np.max(np.abs(flip)), 1e-300)
    resid = np.max(np.abs(ev - lam**2)) / scale
    if not np.isfinite(resid) or resid > residual_tol:
        raise NumericalEigenFailure(f"eigen residual {resid:.3g} exceeds {residual_tol:g}")
    return float(max(lam[0] - lam[1] - lam[2] - lam[3], 0.0))


def concurrence_from_params(p, q, m, theta: float = 0.0, norm_sq=None):
    """Algebraic concurrence 2 N0^2 M^2 q (the eigenvalue gap of the flipped state)."""
    p, q, m = np.asarray(p, float), np.asarray(q, float), np.asarray(m, float)
    if norm_sq is None:
        norm_sq = 1.0 / (2.0 + 2.0 * q * p * p * math.cos(theta))
    return 2.0 * norm_sq * m * m * q


def concurrence_static(spec: EcsSpec) -> float:
    """M^2 q / (1 + p^N cos theta)."""
    return float(spec.m**2 * spec.q * 2.0 * spec.norm_sq)


def _check_two_mode(spec: EcsSpec):
    if spec.n_modes != 2:
        raise ValueError("time-dependent concurrence is implemented for N = 2")
    spec.norm_sq  # raises for the ill-normalised case


def dynamic_params(big_gamma, delta, alpha2: float):
    """(p, q, M) after damping: p = e^{-2 e^{-Gamma} |a|^2}, q = e^{-4 Delta |a|^2}."""
    big_gamma, delta = np.asarray(big_gamma, float), np.asarray(delta, float)
    x = 2.0 * np.exp(-big_gamma) * alpha2
    p = np.exp(-x)
    m = np.sqrt(-np.expm1(-2.0 * x))
    q = np.exp(-4.0 * delta * alpha2)
    return p, q, m


def concurrence_markovian(t, spec: EcsSpec, gamma: float):
    """Zero-temperature Markovian channel with relaxation rate ``gamma``."""
    _check_two_mode(spec)
    t = np.asarray(t, float)
    p, q, m = dynamic_params(gamma * t, -np.expm1(-gamma * t), spec.alpha2)
    out = concurrence_from_params(p, q, m, spec.theta, spec.norm_sq)
    return out if out.ndim else float(out)


@dataclass
class ConcurrenceTrace:
    t: np.ndarray
    c: np.ndarray
    c_markov_bare: np.ndarray
    c_markov_adjusted: np.ndarray
    params: Tuple[np.ndarray, np.ndarray, np.ndarray]
    separability_time: Optional[float]
    revivals: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def c_markov(self) -> np.ndarray:
        return self.c_markov_bare

    def to_csv(self, path, metadata: Optional[dict] = None):
        from .io import write_csv

        meta = dict(metadata or {})
        meta.setdefault("separability_time", "none" if self.separability_time is None else self.separability_time)
        meta.setdefault("revivals", [list(r) for r in self.revivals])
        write_csv(path, ["t", "c", "c_markov_bare", "c_markov_adjusted"],
                  [self.t, self.c, self.c_markov_bare, self.c_markov_adjusted], meta)


def separability_time(t, c, level: float = SEPARABILITY_LEVEL) -> Optional[float]:
    idx = np.nonzero(np.asarray(c) <= level)[0]
    return float(np.asarray(t)[idx[0]]) if idx.size else None


def concurrence_nonmarkovian(t_grid, spec: EcsSpec, rates: IntegratedRates,
                             bath: BathSpec, system: SystemSpec) -> ConcurrenceTrace:
    """C(t) with gamma t -> Gamma_p(t) and 1 - e^{-gamma t} -> Delta_p(t).

    The prefactor keeps its t = 0 value, so C(0) equals the static result;
    Markovian baselines use the bare gamma and the adjusted gamma_p(inf).
    """
    _check_two_mode(spec)
    ts = np.asarray(t_grid, float)
    if rates.t.shape != ts.shape or np.any(rates.t != ts):
        raise GridMismatch("IntegratedRates were computed on a different grid")
    p, q, m = dynamic_params(rates.big_gamma_p, rates.delta_p, spec.alpha2)
    c = concurrence_from_params(p, q, m, spec.theta, spec.norm_sq)
    g_adj = asymptotic_coefficients(bath, system).gamma_p
    bare = concurrence_markovian(ts, spec, bath.gamma / system.mass)
    adj = concurrence_markovian(ts, spec, g_adj)
    return ConcurrenceTrace(
        t=ts, c=c, c_markov_bare=np.asarray(bare), c_markov_adjusted=np.asarray(adj),
        params=(p, q, m), separability_time=separability_time(ts, c),
        revivals=detect_revivals(ts, c),
    )
