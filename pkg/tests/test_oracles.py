"""The reference computations must themselves be trustworthy."""

import math

import numpy as np
import pytest

from efklab.delay_integrator import solve_ivp
from efklab.history import Trajectory
from efklab.oracles import convolution_nodes, forced_mode_exact, mild_residual, scalar_dde_method_of_steps

from conftest import make_problem


def test_forced_mode_exact_solves_ode():
    t = np.linspace(0, 0.1, 11)
    a = forced_mode_exact(50.0, 2.0, 6.0, t, a0=0.3)
    eps = 1e-7
    da = (forced_mode_exact(50.0, 2.0, 6.0, t + eps, 0.3) - forced_mode_exact(50.0, 2.0, 6.0, t - eps, 0.3)) / (2 * eps)
    np.testing.assert_allclose(da, -50.0 * a + 2.0 * np.cos(6.0 * t), atol=1e-6)
    assert a[0] == pytest.approx(0.3)


def test_convolution_nodes_integrate_singular_weight():
    nodes, w = convolution_nodes(0.1, 1e-3)
    assert w.sum() == pytest.approx(0.1, rel=1e-14)
    lam = 1.6e9   # the stiffest mode at N = 64
    approx = np.sum(w * np.exp(-lam * (0.1 - nodes)))
    assert approx == pytest.approx(-math.expm1(-lam * 0.1) / lam, rel=1e-10)


def test_scalar_dde_reduces_to_ode_without_feedback():
    d = scalar_dde_method_of_steps(5.0, [0.0], [0.1], 1.0, 0.5)
    t = np.linspace(0, 0.5, 7)
    np.testing.assert_allclose(d(t), np.exp(-5.0 * t), rtol=1e-10)
    assert d(np.array([-0.05]))[0] == 1.0


def test_scalar_dde_first_interval_closed_form():
    # on [0, tau] the delayed term is the constant history: d = b/lam + (1 - b/lam) e^{-lam t}
    lam, b = 20.0, 3.0
    d = scalar_dde_method_of_steps(lam, [b], [0.2], 1.0, 0.2)
    t = np.linspace(0, 0.2, 9)
    np.testing.assert_allclose(d(t), b / lam + (1 - b / lam) * np.exp(-lam * t), rtol=1e-10)


def test_mild_residual_flags_wrong_trajectory():
    p = make_problem("tanh_scaled(1, 1)", betas=[1.0], taus=(0.02,), N=8)
    tr = solve_ivp(p, None, 0.1)
    good = mild_residual(p, tr, [0.05, 0.1])
    assert np.all(good < 1e-6)
    bad = Trajectory(tr.times, tr.values * (1 + 1e-3), tr.dright, tr.dleft)
    assert np.all(mild_residual(p, bad, [0.05, 0.1]) > 1e-6)
    assert mild_residual(p, tr, [0.0])[0] == 0.0
