import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpzlab import decoherence as dec
from hpzlab.errors import ConfigError
from hpzlab.io import read_csv
from hpzlab.langevin import MomentState, green_function, propagate
from hpzlab.model import BathSpec, SystemSpec

FIG2A = BathSpec(1e-5, 10.0, 10.0)


def _cat(alpha0, theta=0.0, **kw):
    return dec.CatState(SystemSpec.from_alpha0(alpha0, **kw), theta)


def _gl_integral(f, qh, ph, n=200):
    x, w = np.polynomial.legendre.leggauss(n)
    Q, P = np.meshgrid(qh * x, ph * x, indexing="ij")
    return float(qh * ph * w @ f(Q, P) @ w)


def test_state_validation():
    with pytest.raises(ConfigError):
        dec.CatState(SystemSpec(), math.pi)
    st_ = _cat(2.0)
    assert 0 < st_.norm_n0 <= 0.5
    assert dec.CatState(SystemSpec()).norm_n0 == 0.5
    assert st_.norm_n0 == pytest.approx(1 / (1 + math.exp(st_.system.q0**2 / st_.system.sigma0**2)))


def test_wigner_origin_and_peaks():
    state = _cat(2.0)
    s = state.system
    w0 = dec.cat_wigner(0.0, 0.0, state)
    g0 = 1 / (2 * math.pi * s.sigma0 * 0.5 / s.sigma0)
    ref = 2 * state.norm_sq * g0 * (math.exp(-s.q0**2 / (2 * s.sigma0**2)) + 1)
    assert w0 == pytest.approx(ref)
    # interference maximum at the origin
    assert dec.cat_wigner(0.0, 0.0, state, "interference") >= dec.cat_wigner(0.0, 0.3, state, "interference")


@pytest.mark.parametrize("alpha0, theta", [(math.sqrt(30), 0.0), (3.0, math.pi), (0.5, 1.1)])
def test_wigner_normalized(alpha0, theta):
    state = _cat(alpha0, theta)
    s = state.system
    total = _gl_integral(lambda q, p: dec.cat_wigner(q, p, state), s.q0 + 12 * s.sigma0, 12 * 0.5 / s.sigma0, 240)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_wigner_with_momentum_displacement_normalized():
    state = dec.CatState(SystemSpec(q0=1.5, p0=2.0))
    s = state.system
    total = _gl_integral(lambda q, p: dec.cat_wigner(q, p, state), s.q0 + 12 * s.sigma0,
                         s.p0 + 12 * 0.5 / s.sigma0, 240)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_single_gaussian_is_positive():
    state = dec.CatState(SystemSpec())
    q, p = np.meshgrid(np.linspace(-5, 5, 41), np.linspace(-5, 5, 41))
    assert np.all(dec.cat_wigner(q, p, state) >= 0)
    with pytest.raises(ValueError):
        dec.cat_wigner(0.0, 0.0, state, "other")


def test_fringe_wavelength():
    state = _cat(3.0)
    k = state.wavevector
    assert k[0] == 0.0
    assert 2 * math.pi / k[1] == pytest.approx(math.pi / state.system.q0)


def test_evolved_wigner_identity_at_zero():
    state = _cat(2.5, 0.4)
    ms = dec.initial_moments(state.system)
    q, p = np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13))
    assert np.allclose(dec.evolve_interference_wigner(q, p, ms, state),
                       dec.cat_wigner(q, p, state, "interference"), atol=1e-14)


def test_evolved_wigner_half_period():
    state = dec.CatState(SystemSpec(q0=2.0, p0=0.7), 0.3)
    ms = propagate([math.pi], BathSpec(0.0, 1.0), state.system)[0]
    q, p = np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13))
    assert np.allclose(dec.evolve_interference_wigner(q, p, ms, state),
                       dec.cat_wigner(-q, -p, state, "interference"), atol=1e-12)


def _convolved(q, p, ms, state, n=48):
    """W_I(x, t) = int W_I0(S^-1 (x - y)) / |det S| N(y; 0, K) dy by Gauss-Hermite."""
    S = dec.channel_matrix(ms, state.system.mass)
    K = dec.noise_cov(ms)
    L = np.linalg.cholesky(K)
    z, w = np.polynomial.hermite.hermgauss(n)
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    Y = math.sqrt(2) * (L @ np.stack([Z1.ravel(), Z2.ravel()]))
    Sinv = np.linalg.inv(S)
    X0 = Sinv @ (np.array([[q], [p]]) - Y)
    vals = dec.cat_wigner(X0[0], X0[1], state, "interference") / abs(np.linalg.det(S))
    return float(np.outer(w, w).ravel() @ vals) / math.pi


@pytest.mark.parametrize("t", [0.4, 1.7, 3.0])
def test_evolved_wigner_matches_convolution(t):
    bath = BathSpec(0.05, 3.0, 1.0)
    state = dec.CatState(SystemSpec(q0=1.2, p0=0.3), 0.5)
    ms = propagate([t], bath, state.system)[0]
    for q, p in [(0.0, 0.0), (0.4, -0.3), (-0.8, 0.9)]:
        assert dec.evolve_interference_wigner(q, p, ms, state) == pytest.approx(
            _convolved(q, p, ms, state), abs=1e-10)


def test_mu_at_zero_and_unitary():
    state = _cat(4.0)
    assert dec.mu_closed_form(dec.initial_moments(state.system), state) == 1.0
    assert dec.mu_quadrature(dec.initial_moments(state.system), state) == pytest.approx(1.0, rel=1e-10)
    mu = dec.mu_trace(np.linspace(0, 10, 21), state, BathSpec(0.0, 10.0, 10.0))
    assert np.all(np.abs(mu - 1) <= 1e-9)


@pytest.mark.parametrize("theta", [0.0, math.pi, 0.8])
def test_closed_form_matches_quadrature_general_state(theta):
    bath = BathSpec(0.02, 5.0, 2.0)
    state = dec.CatState(SystemSpec(q0=1.5, p0=0.8), theta)
    for ms in propagate([0.3, 1.2, 4.0], bath, state.system):
        assert dec.mu_closed_form(ms, state) == pytest.approx(dec.mu_quadrature(ms, state), rel=1e-8)


def test_moment_form_agrees():
    state = _cat(3.0)
    for ms in propagate([0.5, 2.0, 6.0], FIG2A, state.system):
        assert dec.mu_moment_form(ms, state) == pytest.approx(dec.mu_closed_form(ms, state), rel=1e-10)


def test_thermal_approximant_rates():
    state = _cat(math.sqrt(30))
    q0 = state.system.q0
    assert dec.thermal_rate(state, FIG2A, high_t=True) == pytest.approx(4 * 1e-5 * 10 * q0**2)
    assert dec.thermal_rate(state, FIG2A) == pytest.approx(4 * 1e-5 * 10 * q0**2, rel=0.01)
    cold = BathSpec(1e-5, 10.0, 0.0)
    assert dec.thermal_rate(state, cold) == pytest.approx(2 * 1e-5 * q0**2, rel=0.011)
    assert dec.mu_thermal_approx(0.0, state, FIG2A) == 1.0
    assert dec.mu_vacuum_approx(0.0, state, FIG2A) == 1.0


def test_vacuum_short_time_gaussian():
    # for t << 1/Gamma the exponent is 4 q0^2 K(0)-like: quadratic in t (classical kernel)
    bath = BathSpec(1e-5, 10.0, 50.0)
    e1 = dec.vacuum_exponent(1e-4, 10.0, bath, SystemSpec(), kernel="classical")
    e2 = dec.vacuum_exponent(2e-4, 10.0, bath, SystemSpec(), kernel="classical")
    assert e2 / e1 == pytest.approx(4.0, rel=1e-3)
    with pytest.raises(ValueError):
        dec.vacuum_exponent(1.0, 1.0, bath, SystemSpec(), kernel="other")


def test_envelopes_fig2a():
    state = _cat(math.sqrt(30))
    ts = np.linspace(0, 10, 401)
    mu = dec.mu_trace(ts, state, FIG2A)
    early = ts <= 0.3
    vac = dec.mu_vacuum_approx(ts[early], state, FIG2A)
    assert np.all(mu[early] <= vac * 1.05)
    period = int(round(2 * math.pi / (ts[1] - ts[0])))
    kernel = np.ones(period) / period
    mean = np.convolve(mu, kernel, mode="same")
    window = (ts >= 3) & (ts <= 10 - math.pi)
    th = dec.mu_thermal_approx(ts[window], state, FIG2A)
    assert np.all(np.abs(mean[window] / th - 1) <= 0.10)


def test_decoherence_time_branches():
    bath = BathSpec(1e-5, 10.0, 50.0)
    tau, br = dec.decoherence_time(dec.CatState(SystemSpec(q0=5.0)), bath)
    assert br is dec.Branch.QUADRATIC and tau == pytest.approx(1 / (4 * 1e-5 * 50 * 25))
    tau, br = dec.decoherence_time(dec.CatState(SystemSpec(q0=1e4)), bath)
    assert br is dec.Branch.LINEAR and tau == pytest.approx(1 / (2 * math.sqrt(1e-5 * 10 * 50) * 1e4))
    tau, br = dec.decoherence_time(dec.CatState(SystemSpec()), bath)
    assert br is dec.Branch.NO_DECOHERENCE and math.isinf(tau)


def test_decoherence_time_numeric_and_cutoff_ordering():
    state = _cat(30.0)
    taus = [dec.decoherence_time(state, BathSpec(1e-5, G, 10.0), method="numeric", t_max=4.0, n_points=201)
            for G in (100.0, 2.0)]
    assert all(br is dec.Branch.NUMERIC for _, br in taus)
    vals = [t for t, _ in taus]
    assert vals[0] < vals[1]


def test_revivals_detection():
    t = np.linspace(0, 10, 201)
    assert dec.detect_revivals(t, np.exp(-t)) == []
    assert dec.detect_revivals(t, np.ones_like(t)) == []
    y = np.exp(-0.2 * t) * (1.5 + np.cos(t))
    rev = dec.detect_revivals(t, y)
    # the damped peak sits a little before 2 pi
    assert rev and 5.5 < rev[0][0] < 2 * math.pi


def test_markovian_trace_has_no_revivals():
    state = _cat(100.0)
    ts = np.linspace(0, 0.5, 101)
    mu = dec.mu_trace(ts, state, BathSpec(1e-5, 100.0, 10.0))
    assert dec.detect_revivals(ts, mu) == []


def test_sweep_validation():
    with pytest.raises(ConfigError):
        dec.sweep_tau_d([1, 2, 3], FIG2A, SystemSpec())
    with pytest.raises(ConfigError):
        dec.sweep_tau_d(np.linspace(10, 1, 9), FIG2A, SystemSpec())


def test_decay_trace_csv(tmp_path):
    state = _cat(2.0)
    tr = dec.decay_trace(np.linspace(0, 2, 11), state, FIG2A)
    assert tr.mu[0] == 1.0 and len(tr.moments) == 11
    tr.to_csv(tmp_path / "mu.csv", {"scenario": "x"})
    meta, header, rows = read_csv(tmp_path / "mu.csv")
    assert header == ["t", "mu", "mu_thermal", "mu_vacuum"] and meta["scenario"] == "x"
    assert np.array_equal(rows[:, 1], tr.mu)


@settings(max_examples=15, deadline=None)
@given(q0=st.floats(0.1, 4.0), p0=st.floats(0.0, 2.0), theta=st.floats(0, 2 * math.pi),
       t=st.floats(0.01, 8.0), g=st.floats(1e-4, 0.1), kT=st.floats(0, 5))
def test_mu_bounds_property(q0, p0, theta, t, g, kT):
    state = dec.CatState(SystemSpec(q0=q0, p0=p0), theta)
    ms = propagate([t], BathSpec(g, 5.0, kT), state.system)[0]
    mu = dec.mu_closed_form(ms, state)
    assert 0 < mu <= 1 + 1e-9
    assert ms.satisfies_uncertainty()


@settings(max_examples=15, deadline=None)
@given(q0=st.floats(0.0, 20.0), p0=st.floats(0.0, 5.0), theta=st.floats(0, 2 * math.pi), t=st.floats(0, 20))
def test_unitary_property(q0, p0, theta, t):
    if q0 == 0 and p0 == 0:
        theta = 0.0
    state = dec.CatState(SystemSpec(q0=q0, p0=p0), theta)
    green = green_function(BathSpec(0.0, 1.0), state.system)
    f, fd, fdd = (float(x) for x in green.derivatives(t))
    ms = MomentState(t=t, q2=1, p2=1, qp=0, kq=0, kp=0, kqp=0, f=f, fdot=fd, fddot=fdd)
    assert dec.mu_closed_form(ms, state) == pytest.approx(1.0, abs=1e-9)
