"""Exponential time differencing for the delayed EFK evolution equation.

Each mode obeys ``a_k' = -lambda_k a_k + phi_k(t)`` where ``phi`` collects the
delayed nonlinearity and forcing.  The step integrates the semigroup exactly and
treats ``phi`` as linear across the step (exponential trapezoidal rule, second
order).  Because the step never exceeds the shortest delay, ``phi`` at the new
time only needs history that is already stored, so no predictor is required.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DivergenceError, DomainError
from .history import HistoryBuffer, Trajectory
from .problem import DelaySpec, ForcingSpec, NonlinearitySpec, ProblemSpec
from .spectral_core import Collocation, OperatorSpectrum, SpectralField

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12


def etd2_weights(lambdas: np.ndarray, h: float):
    """Return ``(E, w0, w1)`` so that ``a(t+h) = E a + w0 phi(t) + w1 phi(t+h)``.

    ``w0 + w1 = (1 - e^{-lambda h}) / lambda`` exactly reproduces constant forcing.
    """
    if not h > 0:
        raise DomainError(f"step size must be positive, got {h}")
    lam = np.asarray(lambdas, dtype=float)
    z = lam * h
    E = np.exp(-z)
    em1 = -np.expm1(-z)                      # 1 - e^{-z}
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = em1 / z
        p2 = (z - em1) / z**2               # (z - 1 + e^{-z}) / z^2
    small = z < 1e-2
    zs = z[small]
    p1[small] = 1 - zs / 2 + zs**2 / 6 - zs**3 / 24 + zs**4 / 120
    p2[small] = 0.5 - zs / 6 + zs**2 / 24 - zs**3 / 120 + zs**4 / 720
    w1 = h * p2
    w0 = h * p1 - w1
    return E, w0, w1


class DelayedRHS:
    """Spectral right-hand side ``f(u(t - tau_1), ..., u(t - tau_n)) + g(t)``."""

    def __init__(self, delays: DelaySpec, nl: NonlinearitySpec, forcing: ForcingSpec, colloc: Collocation):
        if nl.n != delays.n:
            raise ConfigurationError(f"nonlinearity arity {nl.n} does not match {delays.n} delays")
        self.taus = np.array(delays.taus)
        self.nl = nl
        self.forcing = forcing
        self.colloc = colloc

    @classmethod
    def for_problem(cls, problem: ProblemSpec) -> "DelayedRHS":
        return cls(problem.delays, problem.nonlinearity, problem.forcing, problem.collocation)

    def batch(self, times, lookup) -> np.ndarray:
        """Rows of the right-hand side at ``times``; ``lookup(ts)`` returns field rows."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = self.forcing.coeffs(times, self.colloc)
        if self.nl.is_zero:
            return out
        q = (times[None, :] - self.taus[:, None]).ravel()
        delayed = lookup(q).reshape(self.taus.size, times.size, self.colloc.N)
        samples = self.colloc.to_samples(delayed)
        out += self.colloc.to_coeffs(self.nl(samples))
        return out


def evaluate_delayed_rhs(t, history, nl, forcing, delays, colloc) -> SpectralField:
    """Right-hand side at one time from a ``HistoryBuffer`` or ``Trajectory``."""
    lookup = history.lookup if isinstance(history, HistoryBuffer) else history.evaluate
    return SpectralField(DelayedRHS(delays, nl, forcing, colloc).batch([t], lookup)[0])


def _check_finite(a, t):
    peak = np.max(np.abs(a))
    if not np.isfinite(peak) or peak > DIVERGENCE_LIMIT:
        raise DivergenceError(t, peak)


def step_etd(u: SpectralField, t: float, h: float, spectrum: OperatorSpectrum, history, rhs: DelayedRHS,
             phi_t=None) -> SpectralField:
    """Advance one step from ``t`` to ``t + h`` without modifying ``history``."""
    lookup = history.lookup if isinstance(history, HistoryBuffer) else history.evaluate
    if phi_t is None:
        phi_t = rhs.batch([t], lookup)[0]
    phi_next = rhs.batch([t + h], lookup)[0]
    E, w0, w1 = etd2_weights(spectrum.lambdas, h)
    a = E * u.coeffs + w0 * phi_t + w1 * phi_next
    _check_finite(a, t + h)
    return SpectralField(a)


def initial_history(kappa, r: float, h: float, N: int) -> Trajectory:
    """Sample an initial history on ``[-r, 0]`` at the step grid (plus ``-r`` itself).

    ``kappa`` may be ``None`` (zero), a constant ``SpectralField`` or array, a
    ``Trajectory`` (its Hermite slopes are reused) or a callable ``t -> coeffs``
    (slopes by second-order finite differences, one-sided at the ends).  Only times in
    ``[-r, 0]`` are ever evaluated.
    """
    m = int(np.floor(r / h * (1 + 1e-12)))
    times = -h * np.arange(m, -1, -1, dtype=float)
    if r - m * h > 1e-9 * h:
        times = np.concatenate(([-r], times))
    times[0] = max(times[0], -r)
    if times.size == 1:
        times = np.array([-r, 0.0]) if r > 0 else times
    if kappa is None:
        vals = np.zeros((times.size, N))
        return Trajectory(times, vals, np.zeros_like(vals))
    if isinstance(kappa, Trajectory):
        return Trajectory(times, kappa.evaluate(times), kappa.derivative(times))
    if isinstance(kappa, SpectralField) or not callable(kappa):
        a = kappa.coeffs if isinstance(kappa, SpectralField) else np.asarray(kappa, float)
        if a.shape != (N,):
            raise ConfigurationError(f"initial history has {a.size} modes, expected {N}")
        vals = np.tile(a, (times.size, 1))
        return Trajectory(times, vals, np.zeros_like(vals))
    vals = np.array([np.asarray(getattr(v, "coeffs", v), float) for v in map(kappa, times)])
    if vals.shape != (times.size, N):
        raise ConfigurationError(f"initial history returned shape {vals.shape[1:]}, expected ({N},)")
    if times.size > 2:
        slopes = np.gradient(vals, times, axis=0, edge_order=2)
    else:
        slopes = np.tile((vals[-1] - vals[0]) / (times[-1] - times[0]), (times.size, 1))
    return Trajectory(times, vals, slopes)


@dataclass
class IVPResult:
    trajectory: Trajectory
    rhs: np.ndarray       # right-hand side rows at the knots t >= 0
    h: float


def integrate(problem: ProblemSpec, kappa, horizon: float, h: float | None = None) -> IVPResult:
    """Run the stepper from ``t = 0`` to ``horizon`` and keep the right-hand side rows."""
    if not horizon >= 0:
        raise DomainError(f"horizon must be non-negative, got {horizon}")
    h = problem.step_size() if h is None else float(h)
    spectrum = problem.spectrum
    lam = spectrum.lambdas
    N = spectrum.N
    r = problem.delays.r
    rhs = DelayedRHS.for_problem(problem)
    kappa_traj = initial_history(kappa, r, h, N)
    steps = int(np.ceil(horizon / h * (1 - 1e-12)))
    buf = HistoryBuffer.from_trajectory(kappa_traj, extra=steps)
    E, w0, w1 = etd2_weights(lam, h)

    a = kappa_traj.values[-1].copy()
    phi = rhs.batch([0.0], buf.lookup)[0]
    buf.set_right_slope(-1, -lam * a + phi)
    phis = np.empty((steps + 1, N))
    phis[0] = phi
    for n in range(steps):
        t1 = (n + 1) * h
        phi1 = rhs.batch([t1], buf.lookup)[0]
        a = E * a + w0 * phi + w1 * phi1
        _check_finite(a, t1)
        buf.append(t1, a, -lam * a + phi1)
        phis[n + 1] = phi1
        phi = phi1
    log.debug("integrated %d steps of h=%g", steps, h)
    return IVPResult(buf.to_trajectory(), phis, h)


def solve_ivp(problem: ProblemSpec, kappa, horizon: float, h: float | None = None) -> Trajectory:
    """Mild solution on ``[-r, horizon]`` of the delayed problem with history ``kappa``."""
    return integrate(problem, kappa, horizon, h).trajectory
