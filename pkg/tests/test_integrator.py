import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efklab.delay_integrator import (DelayedRHS, etd2_weights, evaluate_delayed_rhs, initial_history, integrate,
                                     solve_ivp, step_etd)
from efklab.errors import DivergenceError, DomainError, HistoryUnderrunError
from efklab.history import HistoryBuffer, Trajectory
from efklab.oracles import forced_mode_exact, mild_residual, scalar_dde_method_of_steps
from efklab.spectral_core import OperatorSpectrum, SpectralField

from conftest import LAMBDA1, make_problem


@given(st.floats(1e-2, 1e4))
def test_etd_weights_consistent(z):
    lam = np.array([z])
    E, w0, w1 = etd2_weights(lam, 1.0)
    # constant forcing is integrated exactly: (1 - E)/lam
    assert (w0 + w1)[0] == pytest.approx(-math.expm1(-z) / z, rel=1e-12)
    # linear forcing s -> s is integrated exactly: int_0^1 e^{-z(1-s)} s ds
    exact = (z - 1 + math.exp(-z)) / z**2
    assert w1[0] == pytest.approx(exact, rel=1e-10)
    assert E[0] == pytest.approx(math.exp(-z))


def test_etd_weights_continuous_at_series_switch():
    lo = etd2_weights(np.array([1e-2 * (1 - 1e-12)]), 1.0)
    hi = etd2_weights(np.array([1e-2]), 1.0)
    for a, b in zip(lo, hi):
        assert a[0] == pytest.approx(b[0], rel=1e-12)
    E, w0, w1 = etd2_weights(np.array([1e-9]), 1.0)
    assert w1[0] == pytest.approx(0.5, rel=1e-8) and w0[0] == pytest.approx(0.5, rel=1e-8)


def test_pure_decay_is_exact():
    p = make_problem(taus=(0.01,), omega=None, forcing=[], h=5e-4)
    traj = solve_ivp(p, SpectralField.basis(1, 16), 0.05)
    fwd = traj.times >= 0
    np.testing.assert_allclose(traj.norms()[fwd], np.exp(-LAMBDA1 * traj.times[fwd]), rtol=1e-12)


def test_zero_data_gives_zero():
    p = make_problem(taus=(0.01,), omega=None, forcing=[])
    traj = solve_ivp(p, None, 0.02)
    assert np.all(traj.values == 0)


def test_forced_mode_second_order():
    errs = []
    for h in (1e-3, 5e-4, 2.5e-4):
        p = make_problem(N=4, h=h)
        tr = solve_ivp(p, None, 0.2)
        m = tr.times >= 0
        ex = forced_mode_exact(LAMBDA1, 1 / math.sqrt(2), 2 * math.pi, tr.times[m])
        errs.append(np.max(np.abs(tr.values[m, 0] - ex)))
    assert 3.4 <= errs[0] / errs[1] <= 4.6
    assert 3.4 <= errs[1] / errs[2] <= 4.6


def test_linear_delay_matches_scalar_dde():
    p = make_problem("linear(10)", taus=(0.01,), omega=None, forcing=[], h=1e-4, N=4)
    tr = solve_ivp(p, SpectralField.basis(1, 4), 0.1)
    oracle = scalar_dde_method_of_steps(LAMBDA1, [10.0], [0.01], 1.0, 0.1)
    m = tr.times >= 0
    ref = oracle(tr.times[m])
    assert np.max(np.abs(tr.values[m, 0] - ref)) <= 1e-6 * np.max(np.abs(ref))
    assert np.all(np.abs(tr.values[:, 1:]) < 1e-15)


def test_mild_residual_small():
    p = make_problem("tanh_scaled(1, 1)", betas=[1.0], taus=(0.02,))
    tr = solve_ivp(p, None, 0.2)
    ts = np.random.default_rng(5).uniform(0, 0.2, 10)
    assert np.max(mild_residual(p, tr, ts)) < 1e-6


def test_callable_and_trajectory_history():
    p = make_problem("linear(2)", taus=(0.01,), omega=None, forcing=[], N=4, h=5e-4)
    fn = lambda t: np.array([1.0 + t, 0.0, 0.0, 0.0])  # noqa: E731
    h1 = initial_history(fn, 0.01, 5e-4, 4)
    assert h1.times[0] == pytest.approx(-0.01) and h1.times[-1] == 0.0
    np.testing.assert_allclose(h1.dright[:, 0], 1.0, atol=1e-10)
    tr1 = solve_ivp(p, fn, 0.02)
    tr2 = solve_ivp(p, h1, 0.02)
    np.testing.assert_allclose(tr1.values, tr2.values, atol=1e-15)
    # an unaligned delay still starts exactly at -r
    h2 = initial_history(None, 0.0103, 5e-4, 4)
    assert h2.times[0] == pytest.approx(-0.0103) and np.all(np.diff(h2.times) > 0)


def test_history_not_read_after_zero():
    calls = []

    def kappa(t):
        calls.append(t)
        return np.zeros(4)

    initial_history(kappa, 0.01, 1e-3, 4)
    assert max(calls) <= 0.0


def test_step_larger_than_delay_underruns():
    p = make_problem("tanh_scaled(1, 1)", taus=(0.01,), N=4)
    with pytest.raises(HistoryUnderrunError):
        solve_ivp(p, None, 0.1, h=0.02)


def test_divergence_detected():
    p = make_problem("linear(1e6)", taus=(0.001,), omega=None, forcing=[], N=2, h=5e-5)
    with pytest.raises(DivergenceError):
        solve_ivp(p, SpectralField.basis(1, 2), 0.1)


def test_negative_horizon_rejected():
    with pytest.raises(DomainError):
        solve_ivp(make_problem(), None, -1.0)


def test_single_step_api_matches_integrate():
    p = make_problem("tanh_scaled(2, 1)", betas=[2.0], taus=(0.01,), N=8, h=5e-4)
    res = integrate(p, None, 5e-4 * 3)
    rhs = DelayedRHS.for_problem(p)
    hist = HistoryBuffer.from_trajectory(initial_history(None, 0.01, 5e-4, 8))
    u = SpectralField.zeros(8)
    for n in range(3):
        phi0 = evaluate_delayed_rhs(n * 5e-4, hist, p.nonlinearity, p.forcing, p.delays, p.collocation)
        u = step_etd(u, n * 5e-4, 5e-4, p.spectrum, hist, rhs)
        hist.append((n + 1) * 5e-4, u.coeffs, -p.spectrum.lambdas * u.coeffs)
        assert phi0.N == 8
    np.testing.assert_allclose(u.coeffs, res.trajectory.values[-1], rtol=1e-12, atol=1e-18)


@pytest.mark.parametrize("h", [1e-4, 1e-3, 0.05])
def test_constant_forcing_fixed_point_any_step(h):
    # forcing c * sqrt(2) sin(pi x) puts the constant c on mode 1; its fixed point c / lambda_1 is kept exactly
    c = 2.0
    p = make_problem(taus=(0.1,), omega=None, forcing=[{"c": c * math.sqrt(2), "m": 0, "j": 1}], N=4, h=h)
    start = np.r_[c / LAMBDA1, 0, 0, 0]
    tr = solve_ivp(p, start, 0.5)
    assert np.max(np.abs(tr.values[:, 0] - c / LAMBDA1)) <= 4e-16 * c / LAMBDA1 * 8
