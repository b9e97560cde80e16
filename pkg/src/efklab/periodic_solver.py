"""Periodic solutions as fixed points of the variation-of-constants map.

For a periodic right-hand side ``phi`` the linear equation has exactly one
``omega``-periodic mild solution, started from ``(I - T(omega))^{-1}`` applied to the
one-period convolution.  Composing that with ``u -> f(u(. - tau)) + g`` gives the map
whose fixed point is the periodic solution of the delayed problem; we iterate it
(plain Picard by default) and record how fast successive iterates contract.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .delay_integrator import DIVERGENCE_LIMIT, DelayedRHS, etd2_weights
from .errors import CertificateRefused, ConfigurationError, ConvergenceFailure, DivergenceError
from .history import PeriodicTrajectory, Trajectory
from .problem import ForcingSpec, ProblemSpec
from .spectral_core import SQRT2, Collocation, OperatorSpectrum, SpectralField

log = logging.getLogger(__name__)


@dataclass
class ConvergenceReport:
    iterations: int
    residuals: list[float]
    theoretical_factor: Optional[float]
    empirical_factor: Optional[float]
    converged: bool = True
    certificate: bool = False
    accelerated: bool = False

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residuals": [float(r) for r in self.residuals],
            "theoretical_factor": self.theoretical_factor,
            "empirical_factor": self.empirical_factor,
            "converged": self.converged,
            "certificate": self.certificate,
            "accelerated": self.accelerated,
        }


def periodic_grid(omega: float, h: float) -> tuple[np.ndarray, float]:
    P = max(1, int(round(omega / h)))
    step = omega / P
    times = step * np.arange(P + 1, dtype=float)
    times[-1] = omega
    return times, step


def periodic_initial_value(spectrum: OperatorSpectrum, omega: float, phi: np.ndarray) -> SpectralField:
    """Start value of the periodic solution for right-hand side rows ``phi`` on a uniform grid.

    ``phi`` has ``P + 1`` rows covering ``[0, omega]``.  The one-period convolution uses
    the same exponential trapezoidal weights as the stepper and the resolvent
    ``(1 - e^{-lambda_k omega})^{-1}`` is applied coefficientwise.
    """
    phi = np.asarray(phi, float)
    if phi.ndim != 2 or phi.shape[1] != spectrum.N or phi.shape[0] < 2:
        raise ConfigurationError(f"phi must have shape (P+1, {spectrum.N}), got {phi.shape}")
    step = omega / (phi.shape[0] - 1)
    E, w0, w1 = etd2_weights(spectrum.lambdas, step)
    conv = kernels.etd_sweep(np.zeros(spectrum.N), E, w0, w1, phi)[-1]
    return SpectralField(conv / -np.expm1(-spectrum.lambdas * omega))


def _periodic_response(spectrum, omega, phi, times, step):
    u0 = periodic_initial_value(spectrum, omega, phi).coeffs
    E, w0, w1 = etd2_weights(spectrum.lambdas, step)
    vals = kernels.etd_sweep(u0, E, w0, w1, phi)
    peak = np.max(np.abs(vals))
    if not np.isfinite(peak) or peak > DIVERGENCE_LIMIT:
        raise DivergenceError(float(times[np.argmax(np.max(np.abs(vals), axis=1))]), peak)
    slopes = -spectrum.lambdas * vals + phi
    return PeriodicTrajectory(times, vals, slopes, omega=omega)


class PeriodicMap:
    """The fixed-point map on periodic trajectories for one problem."""

    def __init__(self, problem: ProblemSpec, h: float | None = None):
        if problem.omega is None:
            raise ConfigurationError("periodic solve requires a period omega")
        if problem.forcing.period is None and not problem.forcing.is_zero:
            raise ConfigurationError("forcing must declare its period")
        self.problem = problem
        self.spectrum = problem.spectrum
        self.omega = float(problem.omega)
        self.times, self.h = periodic_grid(self.omega, h or problem.step_size())
        self.rhs = DelayedRHS.for_problem(problem)

    def zero(self) -> PeriodicTrajectory:
        vals = np.zeros((self.times.size, self.spectrum.N))
        return PeriodicTrajectory(self.times, vals, vals, omega=self.omega)

    def rhs_rows(self, u: PeriodicTrajectory) -> np.ndarray:
        phi = self.rhs.batch(self.times, u.evaluate)
        phi[-1] = phi[0]
        return phi

    def __call__(self, u: PeriodicTrajectory) -> PeriodicTrajectory:
        return _periodic_response(self.spectrum, self.omega, self.rhs_rows(u), self.times, self.h)


def apply_periodic_map(problem: ProblemSpec, u: PeriodicTrajectory, h: float | None = None) -> PeriodicTrajectory:
    return PeriodicMap(problem, h)(u)


def sup_distance(u: Trajectory, v: Trajectory) -> float:
    """Discrete ``max_t ||u(t) - v(t)||_2`` over shared knots."""
    return float(np.max(np.linalg.norm(u.values - v.values, axis=1)))


def theoretical_factor(problem: ProblemSpec) -> Optional[float]:
    betas = problem.nonlinearity.lipschitz_betas
    if betas is None:
        return None
    return float(sum(betas) / problem.lambda1)


def _anderson_mix(hist_x, hist_g):
    """Anderson (type II) update from stored iterates ``x_i`` and map values ``g_i``."""
    f = [g - x for x, g in zip(hist_x, hist_g)]
    if len(f) < 2:
        return hist_g[-1]
    dF = np.stack([(f[i + 1] - f[i]).ravel() for i in range(len(f) - 1)], axis=1)
    dG = np.stack([(hist_g[i + 1] - hist_g[i]).ravel() for i in range(len(f) - 1)], axis=1)
    coef, *_ = np.linalg.lstsq(dF, f[-1].ravel(), rcond=None)
    return hist_g[-1] - (dG @ coef).reshape(hist_g[-1].shape)


def picard_iterate(
    problem: ProblemSpec,
    initial: PeriodicTrajectory | None = None,
    *,
    certificate: bool = False,
    accelerate: bool = False,
    anderson_depth: int = 3,
    h: float | None = None,
    hypotheses=None,
) -> tuple[PeriodicTrajectory, ConvergenceReport]:
    """Iterate the periodic map until the sup-grid change drops below ``picard_tol``.

    In certificate mode the Lipschitz data must be declared and certify a
    contraction (``sum(betas) < lambda_1`` and the sampled Lipschitz check passing);
    otherwise ``CertificateRefused`` is raised before any iteration.  Acceleration is
    always disabled in certificate mode because it would hide the contraction rate.
    """
    fmap = PeriodicMap(problem, h)
    tol = problem.tolerances.picard_tol
    max_iters = problem.tolerances.max_iters
    factor = theoretical_factor(problem)
    if certificate:
        if hypotheses is None:
            from .stability_analyzer import check_hypotheses

            hypotheses = check_hypotheses(problem)
        if hypotheses.H2.status != "holds" or hypotheses.H3.status != "holds":
            raise CertificateRefused(
                f"contraction not certified: H2 {hypotheses.H2.status}, H3 {hypotheses.H3.status}")
        if accelerate:
            log.warning("acceleration disabled in certificate mode")
            accelerate = False

    u = initial if initial is not None else fmap.zero()
    if initial is not None and (initial.times.size != fmap.times.size
                                or not np.allclose(initial.times, fmap.times)):
        u = PeriodicTrajectory(fmap.times, initial.evaluate(fmap.times), initial.derivative(fmap.times),
                               omega=fmap.omega)

    if problem.nonlinearity.is_zero:
        # the map ignores its argument, so one application is the fixed point
        out = fmap(u)
        report = ConvergenceReport(1, [sup_distance(out, u)], factor, 0.0, True, certificate, False)
        return out, report

    residuals: list[float] = []
    hist_x, hist_g = [], []
    for it in range(1, max_iters + 1):
        new = fmap(u)
        res = sup_distance(new, u)
        residuals.append(res)
        log.debug("picard iteration %d residual %.3e", it, res)
        if res < tol:
            return new, ConvergenceReport(it, residuals, factor, _empirical(residuals), True,
                                          certificate, accelerate)
        if accelerate:
            hist_x.append(u.values)
            hist_g.append(new.values)
            hist_x, hist_g = hist_x[-anderson_depth:], hist_g[-anderson_depth:]
            mixed = _anderson_mix(hist_x, hist_g)
            slopes = -fmap.spectrum.lambdas * mixed + fmap.rhs_rows(new)
            new = PeriodicTrajectory(fmap.times, mixed, slopes, omega=fmap.omega)
        u = new
    report = ConvergenceReport(max_iters, residuals, factor, _empirical(residuals), False,
                               certificate, accelerate)
    raise ConvergenceFailure(f"no convergence to {tol:g} in {max_iters} iterations "
                             f"(last residual {residuals[-1]:.3e})", report)


def _empirical(residuals) -> Optional[float]:
    """Geometric mean of successive residual ratios."""
    r = [x for x in residuals if x > 0]
    if len(r) < 2:
        return None
    return float((r[-1] / r[0]) ** (1.0 / (len(r) - 1)))


def linear_periodic_solution(
    spectrum: OperatorSpectrum,
    omega: float,
    forcing: ForcingSpec,
    times: np.ndarray | None = None,
    h: float | None = None,
    M: int | None = None,
) -> PeriodicTrajectory:
    """Periodic response to forcing alone, in closed form for separable terms.

    A term ``c cos(W t + p) sin(j pi x)`` feeds ``b = c / sqrt(2)`` into mode ``j`` and
    the periodic response is ``b (lambda cos(W t + p) + W sin(W t + p)) / (lambda^2 + W^2)``
    (the sine analogue likewise).  Nonseparable forcing falls back to the
    exponential-quadrature response and sets ``quadrature_fallback`` on the result.
    """
    if times is None:
        times, _ = periodic_grid(omega, h or omega / 200.0)
    times = np.asarray(times, float)
    if not forcing.separable:
        colloc = Collocation(spectrum.N, M or 2 * spectrum.N)
        grid, step = periodic_grid(omega, h or (times[1] - times[0]))
        phi = forcing.coeffs(grid, colloc)
        traj = _periodic_response(spectrum, omega, phi, grid, step)
        traj.quadrature_fallback = True
        return traj
    vals = np.zeros((times.size, spectrum.N))
    slopes = np.zeros_like(vals)
    for term in forcing.terms:
        if term.mode > spectrum.N:
            raise ConfigurationError(f"forcing mode {term.mode} exceeds N={spectrum.N}")
        lam = spectrum.lambdas[term.mode - 1]
        W = term.freq
        b = term.c / SQRT2
        arg = W * times + term.phase
        c, s = np.cos(arg), np.sin(arg)
        if term.fn == "cos":
            resp = b * (lam * c + W * s) / (lam**2 + W**2)
            dresp = b * W * (-lam * s + W * c) / (lam**2 + W**2)
        else:
            resp = b * (lam * s - W * c) / (lam**2 + W**2)
            dresp = b * W * (lam * c + W * s) / (lam**2 + W**2)
        vals[:, term.mode - 1] += resp
        slopes[:, term.mode - 1] += dresp
    traj = PeriodicTrajectory(times, vals, slopes, omega=omega)
    traj.quadrature_fallback = False
    return traj
