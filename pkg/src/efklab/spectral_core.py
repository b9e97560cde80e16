"""Sine-basis representation of the fourth-order EFK operator.

The operator ``A u = gamma u'''' - u'' - u`` on [0, 1] with ``u = u'' = 0`` at both
ends is diagonal in the orthonormal family ``e_k(x) = sqrt(2) sin(k pi x)`` with
eigenvalues ``lambda_k = gamma (k pi)^4 + (k pi)^2 - 1``.  Everything in this module
works on coefficient vectors in that basis, so L2 norms are plain Euclidean norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
from numpy.polynomial import legendre
from scipy import fft

from .errors import ConfigurationError, DomainError, ShapeError

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable coefficient vector ``a_1..a_N`` of ``u = sum a_k sqrt(2) sin(k pi x)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ShapeError(f"coefficients must be a non-empty 1-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("spectral field contains NaN or Inf")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zeros(cls, N: int) -> "SpectralField":
        return cls(np.zeros(N))

    @classmethod
    def basis(cls, k: int, N: int) -> "SpectralField":
        """Unit vector on mode ``k`` (1-based)."""
        if not 1 <= k <= N:
            raise IndexError(f"mode {k} outside 1..{N}")
        a = np.zeros(N)
        a[k - 1] = 1.0
        return cls(a)

    @property
    def N(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other: "SpectralField") -> float:
        _check_same_N(self, other)
        return float(np.dot(self.coeffs, other.coeffs))

    def __add__(self, other):
        _check_same_N(self, other)
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_N(self, other)
        return SpectralField(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, SpectralField) and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"SpectralField(N={self.N}, norm={self.norm():.6g})"


def _check_same_N(u, v):
    if u.N != v.N:
        raise ShapeError(f"mode counts differ: {u.N} vs {v.N}")


@dataclass(frozen=True)
class OperatorSpectrum:
    gamma: float
    N: int
    lambdas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if int(self.N) < 1:
            raise ConfigurationError(f"mode count must be positive, got {self.N}")
        kpi = np.arange(1, int(self.N) + 1) * np.pi
        lam = self.gamma * kpi**4 + kpi**2 - 1.0
        lam.setflags(write=False)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "lambdas", lam)

    @property
    def lambda1(self) -> float:
        return float(self.lambdas[0])


def first_eigenvalue(gamma: float) -> float:
    """``gamma pi^4 + pi^2 - 1``; the decay rate of the semigroup."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return gamma * np.pi**4 + np.pi**2 - 1.0


def eigenvalue(spectrum: OperatorSpectrum, k: int) -> float:
    if not 1 <= k <= spectrum.N:
        raise IndexError(f"mode {k} outside 1..{spectrum.N}")
    return float(spectrum.lambdas[k - 1])


def factorization_roots(gamma: float) -> tuple[float, float]:
    """Roots ``mu1 > 0 > mu2`` with ``A = gamma (-D^2 + mu1)(-D^2 + mu2)``."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    disc = np.sqrt(1.0 + 4.0 * gamma)
    mu1 = (1.0 + disc) / (2.0 * gamma)
    # 1 - sqrt(1+4g) cancels badly for small gamma; use mu1*mu2 = -1/gamma instead.
    mu2 = -1.0 / (gamma * mu1)
    return float(mu1), float(mu2)


def _coeffs(spectrum: OperatorSpectrum, u: SpectralField) -> np.ndarray:
    if u.N != spectrum.N:
        raise ShapeError(f"field has {u.N} modes, spectrum has {spectrum.N}")
    return u.coeffs


def apply_A(spectrum: OperatorSpectrum, u: SpectralField) -> SpectralField:
    return SpectralField(spectrum.lambdas * _coeffs(spectrum, u))


def apply_semigroup(spectrum: OperatorSpectrum, t: float, u: SpectralField) -> SpectralField:
    """``T(t) u``; forward time only."""
    if t < 0:
        raise DomainError(f"semigroup is defined for t >= 0 only, got t={t}")
    return SpectralField(np.exp(-spectrum.lambdas * t) * _coeffs(spectrum, u))


def apply_fractional_power(spectrum: OperatorSpectrum, alpha: float, u: SpectralField) -> SpectralField:
    """``A^alpha u`` realized diagonally; negative ``alpha`` gives the bounded inverse powers."""
    a = _coeffs(spectrum, u)
    if alpha == 0:
        return SpectralField(a)
    return SpectralField(spectrum.lambdas**alpha * a)


def spectral_inverse(spectrum: OperatorSpectrum, phi: SpectralField) -> SpectralField:
    return apply_fractional_power(spectrum, -1.0, phi)


class Collocation:
    """Discrete sine transform between coefficients and samples at ``x_j = j/(M+1)``.

    The DST-I is exact on the first ``M`` modes at these nodes, so the round trip
    coefficients -> samples -> coefficients is the identity up to round-off, and
    ``mean_j u_j^2 * M/(M+1) = sum a_k^2``.
    """

    def __init__(self, N: int, M: int):
        if M < N:
            raise ConfigurationError(f"collocation count M={M} below mode count N={N}")
        self.N = int(N)
        self.M = int(M)
        self.nodes = np.arange(1, self.M + 1) / (self.M + 1)
        self._fwd_scale = 1.0 / (SQRT2 * (self.M + 1))

    def to_coeffs(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples, dtype=float)
        if samples.shape[-1] != self.M:
            raise ShapeError(f"expected {self.M} samples on the last axis, got {samples.shape[-1]}")
        return fft.dst(samples, type=1, axis=-1)[..., : self.N] * self._fwd_scale

    def to_samples(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != self.N:
            raise ShapeError(f"expected {self.N} coefficients on the last axis, got {coeffs.shape[-1]}")
        pad = [(0, 0)] * (coeffs.ndim - 1) + [(0, self.M - self.N)]
        return fft.dst(np.pad(coeffs, pad), type=1, axis=-1) / SQRT2

    def transform(self, samples) -> SpectralField:
        return SpectralField(self.to_coeffs(samples))

    def inverse_transform(self, u: SpectralField) -> np.ndarray:
        return self.to_samples(u.coeffs)

    def discrete_norm(self, samples: np.ndarray) -> float:
        """Quadrature L2 norm matching ``sum a_k^2`` for band-limited samples."""
        samples = np.asarray(samples, dtype=float)
        return float(np.sqrt(np.sum(samples**2) / (self.M + 1)))


# ---------------------------------------------------------------------------
# Green's-function solver


@dataclass(frozen=True)
class GreensKernelPair:
    """Green's functions of ``-u'' + mu u = phi`` with ``u(0) = u(1) = 0`` for both roots.

    ``g2_root`` selects the parameter fed into the trigonometric kernel; ``"mu2"`` is the
    correct choice, ``"mu1"`` reproduces a known misprint and exists for fault injection.
    """

    mu1: float
    mu2: float
    g2_root: str = "mu2"

    def __post_init__(self):
        if not self.mu1 > 0:
            raise DomainError(f"mu1 must be positive, got {self.mu1}")
        if not -np.pi**2 < self.mu2 < 0:
            raise DomainError(f"mu2 must lie in (-pi^2, 0), got {self.mu2}")
        if self.g2_root not in ("mu2", "mu1"):
            raise ValueError(f"g2_root must be 'mu1' or 'mu2', got {self.g2_root!r}")

    @property
    def a1(self) -> float:
        return float(np.sqrt(abs(self.mu1)))

    @property
    def a2(self) -> float:
        return float(np.sqrt(abs(self.mu2 if self.g2_root == "mu2" else self.mu1)))

    # Each kernel factors as L(min(x, y)) R(max(x, y)) / D.
    def _g1_parts(self):
        a = self.a1
        return (lambda x: np.sinh(a * x)), (lambda x: np.sinh(a * (1.0 - x))), a * np.sinh(a)

    def _g2_parts(self):
        a = self.a2
        return (lambda x: np.sin(a * x)), (lambda x: np.sin(a * (1.0 - x))), a * np.sin(a)

    @staticmethod
    def _kernel(parts, x, y):
        left, right, denom = parts
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return left(np.minimum(x, y)) * right(np.maximum(x, y)) / denom

    def g1(self, x, y):
        return self._kernel(self._g1_parts(), x, y)

    def g2(self, x, y):
        return self._kernel(self._g2_parts(), x, y)


def greens_kernel_pair(gamma: float, g2_root: str = "mu2") -> GreensKernelPair:
    mu1, mu2 = factorization_roots(gamma)
    return GreensKernelPair(mu1, mu2, g2_root)


MIN_QUAD_NODES = 64


@dataclass(frozen=True)
class PanelQuadrature:
    """Composite Gauss-Legendre rule on [0, 1] with per-panel cumulative integration."""

    n_nodes: int = 2048
    order: int = 8

    def __post_init__(self):
        if self.order < 2:
            raise ConfigurationError("panel order must be at least 2")
        if self.n_nodes < MIN_QUAD_NODES or self.n_nodes % self.order:
            raise ConfigurationError(
                f"quadrature needs a multiple of {self.order} nodes and at least "
                f"{MIN_QUAD_NODES}, got {self.n_nodes}"
            )

    @property
    def n_panels(self) -> int:
        return self.n_nodes // self.order

    @cached_property
    def _reference(self):
        xi, wi = legendre.leggauss(self.order)
        # cum[i, j] = integral from -1 to xi_i of the j-th Lagrange basis polynomial
        vander = legendre.legvander(xi, self.order - 1)
        antider = np.empty((self.order, self.order))
        for m in range(self.order):
            c = np.zeros(self.order)
            c[m] = 1.0
            antider[:, m] = legendre.legval(xi, legendre.legint(c, lbnd=-1))
        cum = antider @ np.linalg.inv(vander)
        return xi, wi, cum

    @cached_property
    def nodes(self) -> np.ndarray:
        xi, _, _ = self._reference
        half = 0.5 / self.n_panels
        mids = (np.arange(self.n_panels) + 0.5) / self.n_panels
        return (mids[:, None] + half * xi[None, :]).ravel()

    @cached_property
    def weights(self) -> np.ndarray:
        _, wi, _ = self._reference
        return np.tile(wi * (0.5 / self.n_panels), self.n_panels)

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """``integral_0^{x_i} v`` at every node, from the nodal values of a smooth ``v``."""
        _, wi, cum = self._reference
        half = 0.5 / self.n_panels
        v = np.asarray(values, float).reshape(self.n_panels, self.order)
        within = (v @ cum.T) * half
        totals = (v @ wi) * half
        before = np.concatenate(([0.0], np.cumsum(totals)[:-1]))
        return (within + before[:, None]).ravel()

    def project(self, samples: np.ndarray, N: int) -> np.ndarray:
        """Sine coefficients ``<u, e_k>`` for ``k = 1..N``."""
        k = np.arange(1, N + 1)
        basis = SQRT2 * np.sin(np.pi * np.outer(k, self.nodes))
        return basis @ (self.weights * samples)


def _apply_green(parts, quad: PanelQuadrature, values: np.ndarray) -> np.ndarray:
    """Nodal values of ``integral_0^1 G(x, z) v(z) dz``, splitting at ``z = x``."""
    left, right, denom = parts
    x = quad.nodes
    lv = left(x) * values
    rv = right(x) * values
    below = quad.cumulative(lv)
    above = np.dot(quad.weights, rv) - quad.cumulative(rv)
    return (right(x) * below + left(x) * above) / denom


def greens_solve(
    pair: GreensKernelPair,
    gamma: float,
    phi: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
    N: int,
    quad: PanelQuadrature | None = None,
) -> SpectralField:
    """Solve ``A u = phi`` through the factored Green's representation.

    ``phi`` is either a callable on [0, 1] or its samples at ``quad.nodes``.  The
    inner and outer integrals are two 1-D passes, each split at the kernel diagonal,
    and the result is projected onto the first ``N`` sine modes.
    """
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    quad = quad or PanelQuadrature()
    if quad.n_nodes < 2 * N:
        raise ConfigurationError(f"{quad.n_nodes} quadrature nodes cannot resolve {N} modes")
    phi_vals = phi(quad.nodes) if callable(phi) else np.asarray(phi, float)
    if phi_vals.shape != quad.nodes.shape:
        raise ShapeError(f"phi samples must match {quad.n_nodes} quadrature nodes")
    inner = _apply_green(pair._g2_parts(), quad, phi_vals)
    u = _apply_green(pair._g1_parts(), quad, inner) / gamma
    return SpectralField(quad.project(u, N))


def project_function(phi, N: int, quad: PanelQuadrature | None = None) -> SpectralField:
    quad = quad or PanelQuadrature()
    vals = phi(quad.nodes) if callable(phi) else np.asarray(phi, float)
    return SpectralField(quad.project(vals, N))
