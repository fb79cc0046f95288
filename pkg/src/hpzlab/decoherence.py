"""Cat-state decoherence: Wigner dynamics and the decoherence function mu_I(t).

The bath acts on phase-space vectors x = (q, p) as a Gaussian channel
x -> S x + noise with

    S = [[fdot, f/m], [m fddot, fdot]],   noise covariance [[K_q, K_qp], [K_qp, K_p]].

The interference part of the cat Wigner function is a Gaussian times a
cosine, so it stays one under the channel and Tr rho_I^2 has a closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.special import expit

from .errors import ConfigError, QuadratureFailure
from .hpz import asymptotic_coefficients
from .kernels import DEFAULT_SETTINGS, QuadratureSettings, bath_integral
from .langevin import MomentState, green_function, propagate
from .model import BathSpec, Regime, SystemSpec, classify_regime, timescales, REGIME_RATIO


@dataclass(frozen=True)
class CatState:
    """(|+x0> + e^{i theta} |-x0>) with x0 = (q0, p0) taken from ``system``."""

    system: SystemSpec
    theta: float = 0.0

    def __post_init__(self):
        if self.theta % (2 * math.pi) == math.pi and self.system.alpha0_sq < 1e-12:
            raise ConfigError("cat state with theta = pi and alpha0 = 0 is not normalizable")

    @property
    def norm_n0(self) -> float:
        """N0 = 1 / (1 + e^{4 |alpha0|^2}), i.e. (1 + e^{q0^2/sigma0^2})^-1 for p0 = 0."""
        return float(expit(-4.0 * self.system.alpha0_sq))

    @property
    def norm_sq(self) -> float:
        """Squared state normalisation 1 / (2 + 2 e^{-2|alpha0|^2} cos theta)."""
        return 1.0 / (2.0 + 2.0 * math.exp(-2.0 * self.system.alpha0_sq) * math.cos(self.theta))

    @property
    def wavevector(self) -> np.ndarray:
        """Fringe wavevector k in (q, p): the interference term is cos(k.x + theta)."""
        s = self.system
        return np.array([-2.0 * s.p0 / s.hbar, 2.0 * s.q0 / s.hbar])

    @property
    def vacuum_cov(self) -> np.ndarray:
        s = self.system
        return np.diag([s.sigma0**2, s.hbar**2 / (4 * s.sigma0**2)])


def _gauss2(q, p, cov, cq=0.0, cp=0.0):
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2
    inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[0, 1], cov[0, 0]]]) / det
    dq, dp = q - cq, p - cp
    quad = inv[0, 0] * dq * dq + 2 * inv[0, 1] * dq * dp + inv[1, 1] * dp * dp
    return np.exp(-0.5 * quad) / (2 * math.pi * math.sqrt(det))


def cat_wigner(q, p, state: CatState, part: str = "full"):
    """Initial Wigner function; ``part`` is 'full', 'classical' or 'interference'."""
    s = state.system
    q, p = np.asarray(q, float), np.asarray(p, float)
    cov = state.vacuum_cov
    n2 = state.norm_sq
    out = 0.0
    if part in ("full", "classical"):
        out = out + n2 * (_gauss2(q, p, cov, s.q0, s.p0) + _gauss2(q, p, cov, -s.q0, -s.p0))
    if part in ("full", "interference"):
        k = state.wavevector
        out = out + 2 * n2 * _gauss2(q, p, cov) * np.cos(k[0] * q + k[1] * p + state.theta)
    if part not in ("full", "classical", "interference"):
        raise ValueError(f"unknown part {part!r}")
    return out


def channel_matrix(ms: MomentState, mass: float) -> np.ndarray:
    return np.array([[ms.fdot, ms.f / mass], [mass * ms.fddot, ms.fdot]])


def noise_cov(ms: MomentState) -> np.ndarray:
    return np.array([[ms.kq, ms.kqp], [ms.kqp, ms.kp]])


def initial_moments(system: SystemSpec) -> MomentState:
    s2 = system.sigma0**2
    return MomentState(t=0.0, q2=s2, p2=system.hbar**2 / (4 * s2), qp=0.0, kq=0.0, kp=0.0, kqp=0.0)


def evolve_interference_wigner(q, p, ms: MomentState, state: CatState):
    """W_I(q, p, t) from the transformed initial characteristic function.

    The characteristic function of N(0, Sigma0) e^{i k.x} is
    exp(-(v - k)^T Sigma0 (v - k) / 2); substituting v = S^T u and
    multiplying by the noise factor exp(-u^T K u / 2) leaves a Gaussian in u
    whose inverse transform is done exactly.
    """
    s = state.system
    S = channel_matrix(ms, s.mass)
    sig0 = state.vacuum_cov
    k = state.wavevector
    A = S @ sig0 @ S.T + noise_cov(ms)
    b = S @ sig0 @ k
    Ainv = np.linalg.inv(A)
    amp = math.exp(0.5 * b @ Ainv @ b - 0.5 * k @ sig0 @ k)
    kap = Ainv @ b
    q, p = np.asarray(q, float), np.asarray(p, float)
    return 2 * state.norm_sq * amp * _gauss2(q, p, A) * np.cos(kap[0] * q + kap[1] * p + state.theta)


def _log_mu(ms: MomentState, state: CatState) -> float:
    """log of the normalised mu_I.

    With P = Sigma0^{1/2} S^T and R = P^{-T} K P^{-1}:
    det Sigma_t = det(S)^2 det(Sigma0) det(1 + R), and the fringe exponent
    k^T Sigma0 k - b^T Sigma_t^{-1} b equals kt^T R (1 + R)^{-1} kt with
    kt = Sigma0^{1/2} k.  Both forms avoid cancellation for large q0.
    """
    s = state.system
    S = channel_matrix(ms, s.mass)
    half = np.sqrt(np.diag(state.vacuum_cov))
    P = half[:, None] * S.T
    Pinv = np.linalg.inv(P)
    R = Pinv.T @ noise_cov(ms) @ Pinv
    R = 0.5 * (R + R.T)
    I_R = np.eye(2) + R
    kt = half * state.wavevector
    decay = float(kt @ R @ np.linalg.solve(I_R, kt))
    det_s = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    log_mu0 = -math.log(abs(det_s)) - 0.5 * math.log(np.linalg.det(I_R))
    Q = float(kt @ kt)  # 4 |alpha0|^2
    X = Q - decay
    c = math.cos(2 * state.theta)
    # mu = mu0 (e^X + c) / (e^Q + c)
    return log_mu0 - decay + math.log1p(c * math.exp(-X)) - math.log1p(c * math.exp(-Q))


def mu_closed_form(ms: MomentState, state: CatState) -> float:
    """Normalised decoherence function mu_I(t) = mu0 N0 (1 + e^{X}) (theta = 0).

    mu0 = hbar / (2 sqrt(det Sigma_t)) is the purity of a single evolved
    packet and X = (hbar q0 / 2 m sigma0^2)^2 (m^2 fdot^2 <q^2> - m f fdot <{q,p}>
    + f^2 <p^2>) / det Sigma_t.  X starts at q0^2/sigma0^2 and shrinks.
    """
    if ms.t == 0.0 and ms.kq == 0.0 and ms.kp == 0.0:
        return 1.0
    return math.exp(_log_mu(ms, state))


def mu_moment_form(ms: MomentState, state: CatState) -> float:
    """Same quantity written with the packet moments; fine for moderate q0, p0 = 0."""
    s = state.system
    m, hbar = s.mass, s.hbar
    mu0 = hbar / (2 * math.sqrt(ms.det))
    pref = (hbar * s.q0 / (2 * m * s.sigma0**2)) ** 2
    X = pref * (m * m * ms.fdot**2 * ms.q2 - m * ms.f * ms.fdot * ms.qp + ms.f**2 * ms.p2) / ms.det
    c = math.cos(2 * state.theta)
    Q = s.q0**2 / s.sigma0**2
    return mu0 * (math.exp(X - Q) + c * math.exp(-Q)) / (1 + c * math.exp(-Q))


def _wigner_sq_integral(ms: MomentState, state: CatState, n_panels: Tuple[int, int], order: int = 8):
    s = state.system
    S = channel_matrix(ms, s.mass)
    sig_t = S @ state.vacuum_cov @ S.T + noise_cov(ms)
    kap = np.linalg.solve(sig_t, S @ state.vacuum_cov @ state.wavevector)
    x, w = np.polynomial.legendre.leggauss(order)
    axes = []
    for i, n in enumerate(n_panels):
        half = 8.0 * math.sqrt(sig_t[i, i])
        edges = np.linspace(-half, half, n + 1)
        mid, h = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        axes.append(((mid[:, None] + h[:, None] * x).ravel(), (h[:, None] * w).ravel()))
    (qn, qw), (pn, pw) = axes
    total = 0.0
    # row blocks keep memory bounded for fine grids
    for lo in range(0, qn.size, 512):
        Q, P = np.meshgrid(qn[lo:lo + 512], pn, indexing="ij")
        vals = evolve_interference_wigner(Q, P, ms, state) ** 2
        total += float(qw[lo:lo + 512] @ vals @ pw)
    return total, kap, sig_t


def _panels_for(ms: MomentState, state: CatState, per_fringe: int) -> Tuple[int, int]:
    s = state.system
    S = channel_matrix(ms, s.mass)
    sig_t = S @ state.vacuum_cov @ S.T + noise_cov(ms)
    kap = np.linalg.solve(sig_t, S @ state.vacuum_cov @ state.wavevector)
    out = []
    for i in range(2):
        width = 16.0 * math.sqrt(sig_t[i, i])
        fringes = width * abs(kap[i]) / (2 * math.pi)
        out.append(max(16, int(math.ceil(fringes * per_fringe))))
    return out[0], out[1]


def wigner_sq_norm(ms: MomentState, state: CatState, rel_tol: float = 1e-10, max_doublings: int = 4) -> float:
    """int int W_I^2 dq dp by tensor Gauss-Legendre panels on a +-8 sigma box.

    Panels resolve the fringes (8 per wavelength along each axis to start)
    and are doubled until two successive estimates agree to ``rel_tol``.
    """
    n = _panels_for(ms, state, per_fringe=8)
    prev = _wigner_sq_integral(ms, state, n)[0]
    for _ in range(max_doublings):
        n = (2 * n[0], 2 * n[1])
        cur = _wigner_sq_integral(ms, state, n)[0]
        if abs(cur - prev) <= rel_tol * abs(cur):
            return cur
        prev = cur
    raise QuadratureFailure("phase-space quadrature of W_I^2 did not converge")


def mu_quadrature(ms: MomentState, state: CatState, rel_tol: float = 1e-10) -> float:
    """Normalised mu_I(t) from direct phase-space quadrature of W_I^2."""
    ref = wigner_sq_norm(initial_moments(state.system), state, rel_tol)
    return wigner_sq_norm(ms, state, rel_tol) / ref


def mu_thermal_approx(t, state: CatState, bath: BathSpec,
                      settings: QuadratureSettings = DEFAULT_SETTINGS, *, high_t: bool = False):
    """exp(-4 q0^2 D_p(inf) t / hbar^2), or exp(-4 gamma kT q0^2 t / hbar^2) with ``high_t``."""
    return np.exp(-thermal_rate(state, bath, settings, high_t=high_t) * np.asarray(t, float))


def thermal_rate(state: CatState, bath: BathSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
                 *, high_t: bool = False) -> float:
    s = state.system
    if high_t:
        return 4 * bath.gamma * bath.temperature * s.q0**2 / s.hbar**2
    dp_inf = asymptotic_coefficients(bath, s, settings).d_p
    return 4 * s.q0**2 * dp_inf / s.hbar**2


def vacuum_exponent(t: float, q0: float, bath: BathSpec, system: SystemSpec,
                    settings: QuadratureSettings = DEFAULT_SETTINGS, kernel: str = "quantum") -> float:
    """(8 q0^2 / pi hbar) int J coth (1 - cos wt) / w^2 dw.

    ``kernel='classical'`` replaces K by its high-temperature form
    kT gamma Gamma e^{-Gamma t}, for which the double time integral is
    elementary.
    """
    if t == 0.0 or q0 == 0.0 or bath.gamma == 0.0:
        return 0.0
    hbar = system.hbar
    if kernel == "classical":
        G = bath.cutoff
        inner = bath.temperature * bath.gamma * (t + math.expm1(-G * t) / G)
        return 8 * q0**2 * inner / hbar**2
    if kernel != "quantum":
        raise ValueError(f"unknown kernel {kernel!r}")

    def weight(w):
        return 0.5 * t * t * np.sinc(w * t / (2 * np.pi)) ** 2

    def tail(w):
        return 1.0 / (w * w), -1.0 / (w * w), None

    val = bath_integral(bath, t, weight, tail, settings, hbar=hbar,
                        scale=max(bath.cutoff, bath.temperature / hbar, system.omega0))
    return 8 * q0**2 * float(val) / hbar**2


def mu_vacuum_approx(t, state: CatState, bath: BathSpec,
                     settings: QuadratureSettings = DEFAULT_SETTINGS, kernel: str = "quantum"):
    s = state.system
    ts = np.atleast_1d(np.asarray(t, float))
    out = np.array([math.exp(-vacuum_exponent(float(x), s.q0, bath, s, settings, kernel)) for x in ts])
    return out if np.ndim(t) else float(out[0])


def gaussian_tau_d(q0: float, bath: BathSpec, hbar: float = 1.0) -> float:
    """Short-time Gaussian law hbar / (2 sqrt(gamma Gamma kT) q0)."""
    return hbar / (2 * math.sqrt(bath.gamma * bath.cutoff * bath.temperature) * q0)


def quadratic_tau_d(q0: float, bath: BathSpec, hbar: float = 1.0) -> float:
    """Thermal exponential law hbar^2 / (4 gamma kT q0^2)."""
    return hbar**2 / (4 * bath.gamma * bath.temperature * q0**2)


def power_law_exponent(q0: float, bath: BathSpec, hbar: float = 1.0) -> float:
    """Low-temperature long-time decay mu ~ t^{-8 gamma q0^2 / (pi hbar)}."""
    return 8 * bath.gamma * q0**2 / (math.pi * hbar)


class Branch(enum.Enum):
    QUADRATIC = "Quadratic"
    LINEAR = "Linear"
    NUMERIC = "Numeric"
    NO_DECOHERENCE = "NoDecoherence"


def first_crossing(ts: np.ndarray, ys: np.ndarray, level: float) -> Optional[float]:
    below = np.nonzero(ys <= level)[0]
    if below.size == 0:
        return None
    i = below[0]
    if i == 0:
        return float(ts[0])
    # interpolate in log(mu), which is close to linear or quadratic in t
    y0, y1 = math.log(ys[i - 1]), math.log(max(ys[i], 1e-300))
    frac = (math.log(level) - y0) / (y1 - y0)
    return float(ts[i - 1] + frac * (ts[i] - ts[i - 1]))


def is_high_temperature(bath: BathSpec, system: SystemSpec) -> bool:
    return bath.temperature >= REGIME_RATIO * system.hbar * system.omega0


def decoherence_time(state: CatState, bath: BathSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
                     *, method: str = "auto", t_max: Optional[float] = None,
                     n_points: int = 400) -> Tuple[float, Branch]:
    """Decoherence time and the law that produced it.

    In the high-temperature regime the Quadratic law applies when it gives
    tau_d >= 1/Gamma and the Linear one otherwise (the two meet exactly at
    1/Gamma).  ``method='numeric'`` (or low T) returns the 1/e crossing of
    mu_closed_form on a uniform grid up to ``t_max``.
    """
    s = state.system
    if s.alpha0_sq == 0.0 or bath.gamma == 0.0:
        return math.inf, Branch.NO_DECOHERENCE
    if method == "auto" and is_high_temperature(bath, s) and s.p0 == 0.0:
        tq = quadratic_tau_d(s.q0, bath, s.hbar)
        if tq >= 1.0 / bath.cutoff:
            return tq, Branch.QUADRATIC
        return gaussian_tau_d(s.q0, bath, s.hbar), Branch.LINEAR
    if method not in ("auto", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    if t_max is None:
        t_max = 10.0 * 2 * math.pi / s.omega0
    ts = np.linspace(0.0, t_max, n_points)
    mu = mu_trace(ts, state, bath, settings)
    tau = first_crossing(ts, mu, math.exp(-1.0))
    if tau is None:
        return math.inf, Branch.NO_DECOHERENCE
    return tau, Branch.NUMERIC


def vacuum_tau_d(q0: float, bath: BathSpec, system: SystemSpec,
                 settings: QuadratureSettings = DEFAULT_SETTINGS, kernel: str = "classical") -> float:
    """1/e time of mu_vacuum_approx, i.e. the root of exponent(t) = 1."""
    if q0 == 0.0 or bath.gamma == 0.0:
        return math.inf

    def g(t):
        return vacuum_exponent(t, q0, bath, system, settings, kernel) - 1.0

    hi = min(quadratic_tau_d(q0, bath, system.hbar), gaussian_tau_d(q0, bath, system.hbar)) \
        if bath.temperature > 0 else 1.0 / bath.cutoff
    lo = 0.0
    for _ in range(200):
        if g(hi) > 0:
            break
        lo, hi = hi, 2 * hi
    else:
        return math.inf
    return optimize.brentq(g, lo, hi, xtol=1e-14 * hi, rtol=1e-12)


@dataclass(frozen=True)
class TauDRow:
    q0: float
    tau_d: float
    branch: Branch


def sweep_tau_d(q0_range: Sequence[float], bath: BathSpec, system: SystemSpec,
                settings: QuadratureSettings = DEFAULT_SETTINGS, kernel: str = "classical") -> List[TauDRow]:
    """tau_d(q0) from the short-time (tau_d << tau_s) decoherence function.

    The default ``kernel='classical'`` uses the high-temperature
    fluctuation-dissipation kernel kT gamma Gamma e^{-Gamma t}, as in the
    q0^{-1} law; ``'quantum'`` keeps the full coth weight.
    """
    q0s = np.asarray(q0_range, float)
    if q0s.size < 8 or np.any(q0s <= 0) or np.any(np.diff(q0s) <= 0):
        raise ConfigError("q0_range needs >= 8 positive increasing values")
    rows = []
    for q0 in q0s:
        tau = vacuum_tau_d(float(q0), bath, system, settings, kernel)
        branch = Branch.QUADRATIC if tau >= 1.0 / bath.cutoff else Branch.LINEAR
        rows.append(TauDRow(float(q0), tau, branch))
    return rows


def detect_revivals(t, mu, floor: float = 1e-12) -> List[Tuple[float, float]]:
    """Strict local maxima after the first strict local minimum.

    A point counts as an extremum only if it beats both neighbours by more
    than ``floor`` relative to the neighbour.  The floor is relative because
    coherence minima can be many decades deep (values near 1e-15 are still
    resolved, the closed form being evaluated in log space).
    """
    t, mu = np.asarray(t, float), np.asarray(mu, float)
    if mu.size < 3:
        return []
    left, mid, right = mu[:-2], mu[1:-1], mu[2:]
    minima = np.nonzero((mid < left * (1 - floor)) & (mid < right * (1 - floor)))[0] + 1
    if minima.size == 0:
        return []
    maxima = np.nonzero((mid > left * (1 + floor)) & (mid > right * (1 + floor)))[0] + 1
    return [(float(t[i]), float(mu[i])) for i in maxima if i > minima[0]]


def mu_trace(ts, state: CatState, bath: BathSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
             moments_out: Optional[list] = None) -> np.ndarray:
    s = state.system
    green = green_function(bath, s)
    states = propagate(ts, bath, s, settings, green=green)
    if moments_out is not None:
        moments_out.extend(states)
    return np.array([mu_closed_form(ms, state) for ms in states])


@dataclass
class DecayTrace:
    t: np.ndarray
    mu: np.ndarray
    mu_thermal: np.ndarray
    mu_vacuum: np.ndarray
    revivals: List[Tuple[float, float]]
    regime: Regime
    moments: List[MomentState] = field(default_factory=list, repr=False)

    def to_csv(self, path, metadata: Optional[dict] = None):
        from .io import write_csv

        write_csv(path, ["t", "mu", "mu_thermal", "mu_vacuum"],
                  [self.t, self.mu, self.mu_thermal, self.mu_vacuum], metadata or {})


def decay_trace(ts, state: CatState, bath: BathSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
                vacuum_kernel: str = "quantum") -> DecayTrace:
    ts = np.asarray(ts, float)
    ms: list = []
    mu = mu_trace(ts, state, bath, settings, moments_out=ms)
    return DecayTrace(
        t=ts,
        mu=mu,
        mu_thermal=np.asarray(mu_thermal_approx(ts, state, bath, settings)),
        mu_vacuum=np.asarray(mu_vacuum_approx(ts, state, bath, settings, vacuum_kernel)),
        revivals=detect_revivals(ts, mu),
        regime=classify_regime(timescales(bath, state.system)),
        moments=ms,
    )
