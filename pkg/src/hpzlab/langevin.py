"""Green's function of the quantum Langevin equation with the Drude memory
kernel, and Gaussian propagation of second moments.

The response function solves

    m f'' + int_0^t gamma Gamma exp(-Gamma (t - s)) f'(s) ds + m omega0^2 f = 0,
    f(0) = 0, f'(0) = 1,

whose Laplace transform is (s + Gamma) / [(s^2 + omega0^2)(s + Gamma) + s gamma Gamma / m].
The three poles give f as a short sum of (complex) exponentials.

Heisenberg operators evolve as

    q(t) = f' q0 + (f/m) p0 + (1/m) int f(t-s) xi(s) ds
    p(t) = m f'' q0 + f' p0 + int f'(t-s) xi(s) ds

with xi the bath noise of symmetrised correlation K.  Its variances are
evaluated in frequency space, where the time integrals of f and f' are
closed-form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import DegenerateRoots
from .kernels import DEFAULT_SETTINGS, QuadratureSettings, bath_integral
from .model import BathSpec, SystemSpec

# a true double root comes out of the companion-matrix solver split by ~sqrt(eps)
_DEGENERACY_TOL = 1e-7
_TRIPLE_TOL = 1e-4


@dataclass(frozen=True)
class GreenFunction:
    """f(t) = sum_k (c0_k + c1_k t) exp(r_k t); c1_k is nonzero only for a double pole."""

    roots: tuple
    coeffs: tuple  # ((c0, c1), ...) aligned with roots
    mass: float = 1.0

    def derivatives(self, t):
        """(f, f', f'') at t (scalar or array), real parts."""
        t = np.asarray(t, dtype=float)
        f = np.zeros(t.shape, complex)
        fd = np.zeros(t.shape, complex)
        fdd = np.zeros(t.shape, complex)
        for r, (c0, c1) in zip(self.roots, self.coeffs):
            e = np.exp(r * t)
            f += (c0 + c1 * t) * e
            fd += (c0 * r + c1 + c1 * r * t) * e
            fdd += (c0 * r * r + 2 * c1 * r + c1 * r * r * t) * e
        # pin the initial data exactly instead of leaving partial-fraction round-off
        start = t == 0.0
        f, fd, fdd = f.real, fd.real, fdd.real
        if np.any(start):
            f = np.where(start, 0.0, f)
            fd = np.where(start, 1.0, fd)
            fdd = np.where(start, 0.0, fdd)
        return f, fd, fdd

    def __call__(self, t):
        return self.derivatives(t)[0]

    def _terms(self, which: str):
        """(root, a, b) triples with the chosen function = sum (a + b u) exp(r u)."""
        out = []
        for r, (c0, c1) in zip(self.roots, self.coeffs):
            if which == "f":
                out.append((r, c0, c1))
            else:
                out.append((r, c0 * r + c1, c1 * r))
        return out

    def fourier_parts(self, omega, t: float, which: str = "f"):
        """Split int_0^t g(u) exp(i w u) du = A exp(i w t) - B for g = f or f'.

        Returns (A, B); both are smooth in omega away from the poles.
        """
        omega = np.asarray(omega, dtype=float)
        A = np.zeros(omega.shape, complex)
        B = np.zeros(omega.shape, complex)
        for r, a, b in self._terms(which):
            z = r + 1j * omega
            ert = np.exp(r * t)
            A += ert * (a / z + b * t / z - b / z**2)
            B += a / z - b / z**2
        return A, B

    def fourier(self, omega, t: float, which: str = "f"):
        """int_0^t g(u) exp(i w u) du, stable near z = r + i w = 0."""
        omega = np.asarray(omega, dtype=float)
        out = np.zeros(omega.shape, complex)
        for r, a, b in self._terms(which):
            z = r + 1j * omega
            x = z * t
            small = np.abs(x) < 1e-3
            xs = np.where(small, 1.0, x)
            phi1 = np.where(small, 1 + x / 2 + x**2 / 6 + x**3 / 24, (np.exp(xs) - 1) / xs)
            out += a * t * phi1
            if b != 0:
                # int_0^t u e^{zu} du = t^2 * phi2(zt), phi2(x) = (e^x (x - 1) + 1) / x^2
                phi2 = np.where(small, 0.5 + x / 3 + x**2 / 8 + x**3 / 30,
                                (np.exp(xs) * (xs - 1) + 1) / xs**2)
                out += b * t * t * phi2
        return out

    def substitute(self, eta, nu, t: float):
        """Characteristic-function arguments (eta_t, nu_t) after time t."""
        f, fd, fdd = self.derivatives(t)
        m = self.mass
        return fd * eta + f * nu / m, m * fdd * eta + fd * nu


def response_cubic(bath: BathSpec, system: SystemSpec) -> np.ndarray:
    w0, m, g, G = system.omega0, system.mass, bath.gamma, bath.cutoff
    return np.array([1.0, G, w0**2 + g * G / m, w0**2 * G])


def _polish(coeffs: np.ndarray, r: complex) -> complex:
    p = np.poly1d(coeffs)
    dp = p.deriv()
    for _ in range(3):
        d = dp(r)
        if d == 0:
            break
        step = p(r) / d
        r = r - step
        if abs(step) <= 1e-16 * max(1.0, abs(r)):
            break
    return complex(r)


def green_function(bath: BathSpec, system: SystemSpec) -> GreenFunction:
    cubic = response_cubic(bath, system)
    G = bath.cutoff
    roots = [_polish(cubic, r) for r in np.roots(cubic)]
    scale = max(1.0, *(abs(r) for r in roots))
    close = [
        (i, j) for i in range(3) for j in range(i + 1, 3)
        if abs(roots[i] - roots[j]) <= _DEGENERACY_TOL * scale
    ]
    # a triple root splits by ~eps^(1/3), far beyond the pairwise tolerance
    centre = sum(roots) / 3
    if len(close) >= 2 or max(abs(r - centre) for r in roots) <= _TRIPLE_TOL * scale:
        raise DegenerateRoots(f"triple root of the response cubic: {roots}")
    dpoly = np.polyder(cubic)
    if not close:
        coeffs = tuple(((r + G) / np.polyval(dpoly, r), 0.0) for r in roots)
        return GreenFunction(tuple(roots), coeffs, system.mass)
    i, j = close[0]
    k = ({0, 1, 2} - {i, j}).pop()
    rd = _polish(dpoly, 0.5 * (roots[i] + roots[j]))
    u = roots[k]
    A = (u + G) / (u - rd) ** 2
    C = (rd + G) / (rd - u)
    B = -(u + G) / (rd - u) ** 2
    return GreenFunction((u, rd), ((A, 0.0), (B, C)), system.mass)


def green_function_ode(bath: BathSpec, system: SystemSpec, t_eval, rtol=1e-12, atol=1e-14):
    """Reference (f, f') from the integro-differential equation as a 3D ODE.

    The memory integral z(t) = int gamma Gamma e^{-Gamma(t-s)} f'(s) ds obeys
    z' = gamma Gamma f' - Gamma z.
    """
    m, w0, g, G = system.mass, system.omega0, bath.gamma, bath.cutoff

    def rhs(_t, y):
        f, v, z = y
        return [v, (-z - m * w0**2 * f) / m, g * G * v - G * z]

    def jac(_t, _y):
        return [[0, 1, 0], [-w0**2, 0, -1 / m], [0, g * G, -G]]

    t_eval = np.asarray(t_eval, float)
    stiff = G > 100
    extra = {"method": "Radau", "jac": jac} if stiff else {"method": "DOP853"}
    sol = integrate.solve_ivp(
        rhs, (0.0, float(t_eval[-1])), [0.0, 1.0, 0.0],
        t_eval=t_eval, rtol=rtol, atol=atol, **extra,
    )
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[0], sol.y[1]


def memory_residual(green: GreenFunction, bath: BathSpec, system: SystemSpec, ts) -> np.ndarray:
    """m f'' + int_0^t gamma Gamma e^{-Gamma(t-s)} f'(s) ds + m omega0^2 f on ``ts``."""
    m, w0, g, G = system.mass, system.omega0, bath.gamma, bath.cutoff
    out = []
    for t in np.atleast_1d(ts):
        f, _, fdd = green.derivatives(t)
        lo = max(0.0, t - 60.0 / G)
        conv = integrate.quad(
            lambda s: g * G * math.exp(-G * (t - s)) * green.derivatives(s)[1],
            lo, t, epsabs=1e-14, epsrel=1e-13, limit=400,
        )[0]
        out.append(m * fdd + conv + m * w0**2 * f)
    return np.array(out)


@dataclass(frozen=True)
class MomentState:
    """Second moments of one evolved minimum-uncertainty packet at time t.

    ``qp`` is the symmetrised moment <{q, p}>; (kq, kp, kqp) are the noise
    contributions; (f, fdot, fddot) the Green's function triple at t.
    """

    t: float
    q2: float
    p2: float
    qp: float
    kq: float
    kp: float
    kqp: float
    f: float = 0.0
    fdot: float = 1.0
    fddot: float = 0.0

    @property
    def det(self) -> float:
        """q2 p2 - (qp/2)^2, bounded below by hbar^2 / 4."""
        return self.q2 * self.p2 - 0.25 * self.qp**2

    def satisfies_uncertainty(self, hbar: float = 1.0, slack: float = 1e-9) -> bool:
        return self.q2 > 0 and self.p2 > 0 and self.det >= 0.25 * hbar**2 - slack

    def covariance(self) -> np.ndarray:
        """Matrix in the (p, q) ordering used by characteristic functions."""
        return np.array([[self.p2, 0.5 * self.qp], [0.5 * self.qp, self.q2]])


def noise_integrals(t: float, green: GreenFunction, bath: BathSpec,
                    settings: QuadratureSettings = DEFAULT_SETTINGS, hbar: float = 1.0):
    """(K_q, K_p, K_qp) at time t.

    K_q = m^-2 int int f(t-s) f(t-s') K(s-s'), K_p the same with f', K_qp the
    mixed f' f term divided by m.  Written in frequency space each is
    (hbar/pi) int J coth |F|^2 with F the finite-time Fourier transform.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0 or bath.gamma == 0.0:
        return 0.0, 0.0, 0.0
    m = green.mass

    def weight(w):
        Ff = green.fourier(w, t, "f")
        Fd = green.fourier(w, t, "fdot")
        return np.stack([
            (Ff.real**2 + Ff.imag**2) / m**2,
            Fd.real**2 + Fd.imag**2,
            (Fd * np.conj(Ff)).real / m,
        ])

    def tail_parts(w):
        A2, B2 = green.fourier_parts(w, t, "f")
        A1, B1 = green.fourier_parts(w, t, "fdot")
        AB_f = A2 * np.conj(B2)
        AB_d = A1 * np.conj(B1)
        P = np.stack([(abs(A2) ** 2 + abs(B2) ** 2) / m**2,
                      abs(A1) ** 2 + abs(B1) ** 2,
                      (A1 * np.conj(A2) + B1 * np.conj(B2)).real / m])
        C = np.stack([-2 * AB_f.real / m**2,
                      -2 * AB_d.real,
                      -((A1 * np.conj(B2)).real + (B1 * np.conj(A2)).real) / m])
        S = np.stack([2 * AB_f.imag / m**2,
                      2 * AB_d.imag,
                      ((A1 * np.conj(B2)).imag - (B1 * np.conj(A2)).imag) / m])
        return P, C, S

    resonances = sorted({abs(r.imag) for r in green.roots if abs(r.imag) > 0})
    kq, kp, kqp = bath_integral(
        bath, t, weight, tail_parts, settings, hbar=hbar,
        scale=max(1.0, *resonances) if resonances else 1.0, breakpoints=resonances,
    )
    return float(kq), float(kp), float(kqp)


def moments(t: float, initial: SystemSpec, green: GreenFunction, noise) -> MomentState:
    """Propagate the packet's initial moments (sigma0^2, hbar^2/4sigma0^2, 0)."""
    kq, kp, kqp = noise
    f, fd, fdd = (float(x) for x in green.derivatives(t))
    m, s2, hbar = initial.mass, initial.sigma0**2, initial.hbar
    pp0 = hbar**2 / (4 * s2)
    q2 = fd**2 * s2 + (f / m) ** 2 * pp0 + kq
    p2 = (m * fdd) ** 2 * s2 + fd**2 * pp0 + kp
    qp = 2 * (fd * m * fdd * s2 + (f / m) * fd * pp0) + 2 * kqp
    return MomentState(t=float(t), q2=q2, p2=p2, qp=qp, kq=kq, kp=kp, kqp=kqp,
                       f=f, fdot=fd, fddot=fdd)


def propagate(ts: Sequence[float], bath: BathSpec, system: SystemSpec,
              settings: QuadratureSettings = DEFAULT_SETTINGS, green: GreenFunction | None = None):
    """MomentState on every time in ``ts``."""
    green = green or green_function(bath, system)
    return [
        moments(float(t), system, green, noise_integrals(float(t), green, bath, settings, system.hbar))
        for t in ts
    ]
