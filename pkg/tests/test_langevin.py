import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpzlab.errors import DegenerateRoots
from hpzlab.langevin import (GreenFunction, green_function, green_function_ode, memory_residual, moments,
                             noise_integrals, propagate, response_cubic)
from hpzlab.model import BathSpec, SystemSpec

SYS = SystemSpec()


def test_free_oscillator():
    g = green_function(BathSpec(0.0, 10.0), SYS)
    ts = np.linspace(0, 20, 101)
    f, fd, fdd = g.derivatives(ts)
    assert np.allclose(f, np.sin(ts), atol=1e-12)
    assert np.allclose(fd, np.cos(ts), atol=1e-12)
    assert np.allclose(fdd, -np.sin(ts), atol=1e-12)


def test_ohmic_limit():
    b = BathSpec(0.1, 1e4, 0.0)
    ts = np.linspace(0.5, 10, 40)
    wt = math.sqrt(1 - 0.1**2 / 4)
    ref = np.exp(-0.05 * ts) * np.sin(wt * ts) / wt
    f = green_function(b, SYS)(ts)
    assert np.max(np.abs(f - ref) / np.max(np.abs(ref))) <= 1e-3


@pytest.mark.parametrize("bath", [BathSpec(1e-3, 10.0), BathSpec(0.05, 0.01), BathSpec(0.3, 2.0),
                                  BathSpec(1e-5, 100.0)])
def test_against_ode_and_residual(bath):
    ts = np.linspace(0, 50, 501)
    g = green_function(bath, SYS)
    f_ode, fd_ode = green_function_ode(bath, SYS, ts)
    f, fd, _ = g.derivatives(ts)
    assert np.max(np.abs(f - f_ode)) <= 1e-6
    assert np.max(np.abs(fd - fd_ode)) <= 1e-6
    assert np.max(np.abs(memory_residual(g, bath, SYS, np.linspace(0, 20, 9)))) <= 1e-8


def test_initial_data_exact():
    g = green_function(BathSpec(0.05, 0.01), SYS)
    f, fd, fdd = g.derivatives(0.0)
    assert (float(f), float(fd), float(fdd)) == (0.0, 1.0, 0.0)


def test_confluent_roots():
    # (s + 2)^2 (s + 4/3) with m = w0 = 1 needs Gamma = 16/3 and gamma = 25/16
    bath = BathSpec(25 / 16, 16 / 3)
    green = green_function(bath, SYS)
    assert len(green.roots) == 2
    ts = np.linspace(0, 10, 101)
    f_ode, _ = green_function_ode(bath, SYS, ts)
    assert np.max(np.abs(green(ts) - f_ode)) <= 1e-6
    f, fd, _ = green.derivatives(0.0)
    assert (float(f), float(fd)) == (0.0, 1.0)


def test_triple_root_raises():
    # (s + 1)^3: Gamma = 3, omega0^2 = 1/3, gamma = 8/9
    with pytest.raises(DegenerateRoots):
        green_function(BathSpec(8 / 9, 3.0), SystemSpec(omega0=1 / math.sqrt(3.0)))


def test_substitution_identity_at_zero():
    g = green_function(BathSpec(0.01, 5.0), SYS)
    eta, nu = g.substitute(0.3, -1.2, 0.0)
    assert (float(eta), float(nu)) == (0.3, -1.2)


def test_noise_trivial_cases():
    g = green_function(BathSpec(1e-3, 10.0, 1.0), SYS)
    assert noise_integrals(0.0, g, BathSpec(1e-3, 10.0, 1.0)) == (0.0, 0.0, 0.0)
    g0 = green_function(BathSpec(0.0, 10.0, 1.0), SYS)
    assert noise_integrals(3.0, g0, BathSpec(0.0, 10.0, 1.0)) == (0.0, 0.0, 0.0)


def test_initial_moments():
    ms = propagate([0.0], BathSpec(1e-3, 10.0, 1.0), SYS)[0]
    assert (ms.q2, ms.p2, ms.qp) == pytest.approx((0.5, 0.5, 0.0))


def test_free_moments_rotate():
    s = SystemSpec(sigma0=0.4)
    ms = propagate([math.pi / 2, math.pi], BathSpec(0.0, 1.0), s)
    # a quarter period swaps the q and p widths, half a period restores them
    assert ms[0].q2 == pytest.approx(1 / (4 * 0.16))
    assert ms[1].q2 == pytest.approx(0.16) and ms[1].p2 == pytest.approx(1 / (4 * 0.16))
    assert abs(ms[1].qp) <= 1e-12


def test_equipartition_high_temperature():
    bath = BathSpec(0.2, 20.0, 20.0)
    ms = propagate([80.0], bath, SYS)[0]
    assert ms.kq == pytest.approx(bath.temperature, rel=0.03)
    assert ms.kp == pytest.approx(bath.temperature, rel=0.03)


def test_ground_state_weak_coupling():
    ms = propagate([600.0], BathSpec(0.02, 10.0, 0.0), SYS)[0]
    assert ms.p2 == pytest.approx(0.5, rel=0.05)
    assert ms.satisfies_uncertainty()


def test_moments_continuous():
    bath = BathSpec(1e-3, 10.0, 1.0)
    t, d = 2.0, [1e-3, 1e-4]
    base = propagate([t], bath, SYS)[0]
    diffs = [abs(propagate([t + x], bath, SYS)[0].q2 - base.q2) for x in d]
    assert diffs[1] < diffs[0] / 5


@settings(max_examples=20, deadline=None)
@given(g=st.floats(1e-4, 0.3), G=st.floats(0.05, 50.0), kT=st.floats(0.0, 20.0), t=st.floats(0.01, 15.0))
def test_uncertainty_property(g, G, kT, t):
    bath = BathSpec(g, G, kT)
    ms = propagate([t], bath, SYS)[0]
    assert ms.kq >= -1e-12 and ms.kp >= -1e-12
    assert ms.satisfies_uncertainty()


@settings(max_examples=20, deadline=None)
@given(g=st.floats(0.0, 0.5), G=st.floats(0.01, 100.0))
def test_green_real_and_initial(g, G):
    green = green_function(BathSpec(g, G), SYS)
    ts = np.linspace(0, 10, 21)
    f_ode, fd_ode = green_function_ode(BathSpec(g, G), SYS, ts)
    f, fd, _ = green.derivatives(ts)
    assert np.max(np.abs(f - f_ode)) <= 1e-6 and np.max(np.abs(fd - fd_ode)) <= 1e-6
