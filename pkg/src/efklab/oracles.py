"""Brute-force reference computations used to check the solvers.

Nothing here shares time-integration code with the ETD stepper: the mild-solution
residual uses graded Gauss-Legendre quadrature of the convolution, the scalar delay
equation uses method-of-steps with a high-order Runge-Kutta solver, and the Bellman
recurrence is a plain forward-Euler sum.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre
from scipy.integrate import solve_ivp as _scipy_ivp

from .delay_integrator import DelayedRHS
from .history import Trajectory
from .problem import ProblemSpec


def forced_mode_exact(lam: float, c: float, W: float, t, a0: float = 0.0):
    """Solution of ``a' = -lam a + c cos(W t)``, ``a(0) = a0``."""
    t = np.asarray(t, float)
    den = lam**2 + W**2
    periodic = c * (lam * np.cos(W * t) + W * np.sin(W * t)) / den
    return periodic + (a0 - c * lam / den) * np.exp(-lam * t)


def _graded_breakpoints(t: float, panel: float, extra=(), levels: int = 52) -> np.ndarray:
    pts = [0.0, t]
    pts += list(t - panel * np.arange(1, int(np.floor(t / panel)) + 1))
    pts += list(t - panel * 0.5 ** np.arange(1, levels))
    pts += [e for e in extra if 0.0 < e < t]
    pts = np.unique(np.clip(pts, 0.0, t))
    return pts


def convolution_nodes(t: float, panel: float, extra=(), order: int = 8):
    """Gauss nodes/weights on ``[0, t]`` graded geometrically towards ``s = t``."""
    xi, wi = legendre.leggauss(order)
    bp = _graded_breakpoints(t, panel, extra)
    a, b = bp[:-1], bp[1:]
    keep = b - a > 0
    a, b = a[keep], b[keep]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return nodes, weights


def mild_residual(problem: ProblemSpec, traj: Trajectory, times, panel: float | None = None) -> np.ndarray:
    """``||u(t) - T(t) u(0) - int_0^t T(t-s) phi(s) ds||_2`` at each requested time.

    ``phi`` is rebuilt from the stored trajectory (Hermite-interpolated delayed values
    plus forcing) at the quadrature nodes, so the check covers the time integration
    of the solver, not its right-hand-side plumbing.
    """
    lam = problem.spectrum.lambdas
    rhs = DelayedRHS.for_problem(problem)
    panel = panel or problem.step_size()
    u0 = traj.evaluate([0.0])[0]
    out = []
    for t in np.atleast_1d(times):
        t = float(t)
        ut = traj.evaluate([t])[0]
        if t == 0.0:
            out.append(float(np.linalg.norm(ut - u0)))
            continue
        s, w = convolution_nodes(t, panel, extra=problem.delays.taus)
        phi = rhs.batch(s, traj.evaluate)
        kern = np.exp(-np.outer(t - s, lam))
        conv = (w[:, None] * kern * phi).sum(axis=0)
        out.append(float(np.linalg.norm(ut - np.exp(-lam * t) * u0 - conv)))
    return np.array(out)


def scalar_dde_method_of_steps(lam: float, betas, taus, history_value: float, t_end: float,
                               rtol: float = 1e-12, atol: float = 1e-15):
    """Dense solution of ``d' = -lam d + sum b_k d(t - tau_k)`` with constant history.

    Integrates interval by interval (each no longer than the shortest delay), so every
    delayed argument comes from an already computed dense output.  Returns a callable
    ``d(t)`` valid on ``[-max tau, t_end]``.
    """
    betas = np.asarray(betas, float)
    taus = np.asarray(taus, float)
    pieces = []

    def value(t):
        t = np.asarray(t, float)
        out = np.full(t.shape, float(history_value))
        for t0, t1, sol in pieces:
            m = (t >= t0) & (t <= t1 + 1e-12 * max(1.0, abs(t1)))
            if np.any(m):
                out[m] = sol(t[m])[0]
        return out

    step = float(taus.min())
    t0, y0 = 0.0, float(history_value)
    while t0 < t_end - 1e-15:
        t1 = min(t0 + step, t_end)

        def rhs(t, y):
            delayed = value(np.asarray(t - taus))
            return [-lam * y[0] + float(np.dot(betas, delayed))]

        sol = _scipy_ivp(rhs, (t0, t1), [y0], method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        pieces.append((t0, t1, sol.sol))
        t0, y0 = t1, float(sol.y[0, -1])
    return value


def bellman_recurrence(psi0: float, bs, taus, t_end: float, dt: float):
    """Forward-Euler solution of ``psi(t) = psi(0) + sum b_k int_0^t psi(s - tau_k) ds``.

    The history is ``psi = psi0`` on ``[-r, 0]``.  Delays are rounded to whole steps
    (at least one), and the update within each block shorter than the smallest
    delay only reads values from earlier blocks, so it is vectorized with ``cumsum``.
    """
    bs = np.asarray(bs, float)
    lags = np.maximum(1, np.round(np.asarray(taus, float) / dt).astype(int))
    lag_max = int(lags.max())
    n = int(np.ceil(t_end / dt))
    psi = np.empty(lag_max + n + 1)
    psi[: lag_max + 1] = psi0
    block = int(lags.min())
    i = 0
    while i < n:
        j = min(i + block, n)
        idx = lag_max + np.arange(i, j)
        incr = dt * sum(b * psi[idx - L] for b, L in zip(bs, lags))
        psi[idx + 1] = psi[lag_max + i] + np.cumsum(incr)
        i = j
    times = dt * np.arange(n + 1)
    return times, psi[lag_max:]
