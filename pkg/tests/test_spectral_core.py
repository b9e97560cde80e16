import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from efklab.errors import ConfigurationError, DomainError, ShapeError
from efklab.spectral_core import (Collocation, GreensKernelPair, OperatorSpectrum, PanelQuadrature, SpectralField,
                                  apply_A, apply_fractional_power, apply_semigroup, eigenvalue, factorization_roots,
                                  first_eigenvalue, greens_kernel_pair, greens_solve, project_function,
                                  spectral_inverse)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_first_eigenvalue_values():
    assert first_eigenvalue(1.0) == pytest.approx(106.27869543509178, rel=1e-15)
    sp = OperatorSpectrum(1.0, 64)
    assert eigenvalue(sp, 2) == pytest.approx(16 * math.pi**4 + 4 * math.pi**2 - 1, rel=1e-14)
    assert eigenvalue(sp, 2) == pytest.approx(1597.0239, abs=5e-5)
    assert eigenvalue(OperatorSpectrum(0.5, 4), 2) == pytest.approx(817.7511, abs=5e-5)
    assert eigenvalue(sp, 64) == pytest.approx(1.634e9, rel=1e-3)


def test_eigenvalue_errors():
    sp = OperatorSpectrum(1.0, 8)
    with pytest.raises(IndexError):
        eigenvalue(sp, 9)
    with pytest.raises(IndexError):
        eigenvalue(sp, 0)
    with pytest.raises(DomainError):
        OperatorSpectrum(0.0, 8)
    with pytest.raises(DomainError):
        first_eigenvalue(-1.0)


@given(st.floats(0.01, 100.0))
def test_factorization_roots(gamma):
    mu1, mu2 = factorization_roots(gamma)
    assert mu1 > 0 > mu2
    # gamma mu^2 - mu - 1 = 0 for both roots
    for mu in (mu1, mu2):
        assert abs(gamma * mu * mu - mu - 1) <= 1e-12 * max(1.0, gamma * mu * mu)
    # the operator factorization reproduces the eigenvalues
    k = np.arange(1, 6) * np.pi
    lam = gamma * (k**2 + mu1) * (k**2 + mu2)
    np.testing.assert_allclose(lam, OperatorSpectrum(gamma, 5).lambdas, rtol=1e-12)


def test_semigroup_examples():
    sp = OperatorSpectrum(1.0, 8)
    u = apply_semigroup(sp, 0.01, SpectralField.basis(1, 8))
    assert u.coeffs[0] == pytest.approx(0.34549, abs=5e-6)
    with pytest.raises(DomainError):
        apply_semigroup(sp, -0.1, u)
    assert apply_semigroup(sp, 0.0, u) == u


@settings(max_examples=50)
@given(arrays(float, 12, elements=finite), st.floats(0.0, 0.2))
def test_semigroup_contracts(a, t):
    sp = OperatorSpectrum(1.0, 12)
    u = SpectralField(a)
    assert apply_semigroup(sp, t, u).norm() <= math.exp(-sp.lambda1 * t) * u.norm() * (1 + 1e-14) + 1e-300


@settings(max_examples=30)
@given(arrays(float, 8, elements=finite), st.floats(0.0, 0.05), st.floats(0.0, 0.05))
def test_semigroup_property(a, s, t):
    sp = OperatorSpectrum(0.7, 8)
    u = SpectralField(a)
    lhs = apply_semigroup(sp, s + t, u).coeffs
    rhs = apply_semigroup(sp, s, apply_semigroup(sp, t, u)).coeffs
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-300)


def test_fractional_powers():
    sp = OperatorSpectrum(1.0, 8)
    e1 = SpectralField.basis(1, 8)
    assert apply_fractional_power(sp, 0.5, e1).coeffs[0] == pytest.approx(10.30916, abs=5e-6)
    assert apply_fractional_power(sp, 0, e1) == e1
    rng = np.random.default_rng(0)
    u = SpectralField(rng.standard_normal(8))
    back = apply_fractional_power(sp, -0.25, apply_fractional_power(sp, 0.25, u))
    np.testing.assert_allclose(back.coeffs, u.coeffs, rtol=1e-13)
    np.testing.assert_allclose(spectral_inverse(sp, apply_A(sp, u)).coeffs, u.coeffs, rtol=1e-13)


def test_spectral_field_is_immutable_and_checked():
    u = SpectralField([1.0, 2.0])
    with pytest.raises(ValueError):
        u.coeffs[0] = 3.0
    with pytest.raises(ShapeError):
        u + SpectralField([1.0])
    with pytest.raises(DomainError):
        SpectralField([np.nan])
    with pytest.raises(ShapeError):
        SpectralField(np.zeros((2, 2)))
    assert (2 * u - u) == u
    assert u.inner(u) == pytest.approx(5.0)
    with pytest.raises(IndexError):
        SpectralField.basis(3, 2)


@settings(max_examples=30)
@given(st.integers(1, 40), st.integers(0, 40), st.integers(0, 2**32 - 1))
def test_collocation_roundtrip_and_parseval(N, extra, seed):
    c = Collocation(N, N + extra)
    a = np.random.default_rng(seed).standard_normal(N)
    samples = c.to_samples(a)
    np.testing.assert_allclose(c.to_coeffs(samples), a, atol=1e-12 * max(1.0, np.abs(a).max()))
    assert c.discrete_norm(samples) == pytest.approx(np.linalg.norm(a), rel=1e-12)


def test_collocation_matches_basis_and_batches():
    c = Collocation(4, 9)
    samples = 3.0 * np.sin(2 * np.pi * c.nodes)
    np.testing.assert_allclose(c.to_coeffs(samples), [0, 3 / math.sqrt(2), 0, 0], atol=1e-14)
    batch = np.random.default_rng(1).standard_normal((3, 5, 4))
    np.testing.assert_allclose(c.to_coeffs(c.to_samples(batch)), batch, atol=1e-13)
    with pytest.raises(ConfigurationError):
        Collocation(8, 4)
    with pytest.raises(ShapeError):
        c.to_coeffs(np.zeros(8))


def test_quadrature_is_exact_for_polynomials():
    q = PanelQuadrature(128, 8)
    assert q.weights.sum() == pytest.approx(1.0, rel=1e-15)
    assert np.dot(q.weights, q.nodes**7) == pytest.approx(1 / 8, rel=1e-13)
    cum = q.cumulative(np.ones_like(q.nodes))
    np.testing.assert_allclose(cum, q.nodes, atol=1e-14)
    with pytest.raises(ConfigurationError):
        PanelQuadrature(100, 8)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("phi", [lambda x: np.sin(np.pi * x), lambda x: np.sin(2 * np.pi * x),
                                 lambda x: x * (1 - x)])
def test_greens_solve_matches_spectral_inverse(gamma, phi):
    quad = PanelQuadrature(1024, 8)
    u = greens_solve(greens_kernel_pair(gamma), gamma, phi, 64, quad)
    ref = spectral_inverse(OperatorSpectrum(gamma, 64), project_function(phi, 64, quad))
    assert (u - ref).norm() <= 1e-10 * ref.norm()


def test_greens_solve_sin_pi_value():
    u = greens_solve(greens_kernel_pair(1.0), 1.0, lambda x: np.sin(np.pi * x), 16, PanelQuadrature(512))
    assert u.coeffs[0] == pytest.approx(1 / math.sqrt(2) / first_eigenvalue(1.0), rel=1e-12)
    assert u.coeffs[0] == pytest.approx(0.0066533, abs=5e-8)
    # peak value of u(x) at x = 1/2 is 1/lambda_1
    peak = Collocation(16, 31).to_samples(u.coeffs)[15]
    assert peak == pytest.approx(1 / first_eigenvalue(1.0), rel=1e-12)


def test_greens_kernel_symmetric_and_boundary():
    pair = greens_kernel_pair(1.0)
    x = np.linspace(0, 1, 7)
    X, Y = np.meshgrid(x, x)
    np.testing.assert_allclose(pair.g1(X, Y), pair.g1(Y, X))
    np.testing.assert_allclose(pair.g2(X, Y), pair.g2(Y, X))
    assert np.all(np.abs(pair.g1(0.0, x)) < 1e-15) and np.all(np.abs(pair.g2(1.0, x)) < 1e-15)


def test_g2_typo_gives_wrong_answer():
    quad = PanelQuadrature(512)
    phi = lambda x: np.sin(np.pi * x)  # noqa: E731
    good = greens_solve(greens_kernel_pair(1.0), 1.0, phi, 16, quad)
    bad = greens_solve(greens_kernel_pair(1.0, "mu1"), 1.0, phi, 16, quad)
    assert (bad - good).norm() > 0.1 * good.norm()


def test_greens_errors():
    with pytest.raises(DomainError):
        GreensKernelPair(-1.0, -0.5)
    with pytest.raises(ValueError):
        GreensKernelPair(1.6, -0.6, "mu3")
    with pytest.raises(ConfigurationError):
        greens_solve(greens_kernel_pair(1.0), 1.0, np.sin, 128, PanelQuadrature(128))
    with pytest.raises(ShapeError):
        greens_solve(greens_kernel_pair(1.0), 1.0, np.zeros(5), 8, PanelQuadrature(128))
