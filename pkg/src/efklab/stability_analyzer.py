"""Hypothesis checks, the delayed Bellman envelope and attraction experiments."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .delay_integrator import solve_ivp
from .errors import BoundViolationError, CertificateRefused, DomainError
from .history import PeriodicTrajectory, Trajectory
from .problem import ProblemSpec
from .spectral_core import SpectralField, first_eigenvalue

LOG_FLOOR = 1e-13


@dataclass
class ConditionResult:
    status: str                      # "holds", "fails" or "unknown"
    margin: Optional[float] = None
    detail: dict = field(default_factory=dict)

    @property
    def holds(self) -> Optional[bool]:
        return None if self.status == "unknown" else self.status == "holds"


@dataclass
class HypothesisReport:
    lambda1: float
    H1: ConditionResult
    H2: ConditionResult
    H3: ConditionResult
    H2prime: ConditionResult
    rho: Optional[float]
    contraction_factor: Optional[float]

    def conditions(self) -> dict[str, ConditionResult]:
        return {"H1": self.H1, "H2": self.H2, "H3": self.H3, "H2prime": self.H2prime}

    def all_known_hold(self) -> bool:
        return all(c.status != "fails" for c in self.conditions().values())

    def unknown(self) -> list[str]:
        return [k for k, c in self.conditions().items() if c.status == "unknown"]

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            **{k: asdict(c) for k, c in self.conditions().items()},
            "rho": self.rho,
            "contraction_factor": self.contraction_factor,
        }


def _status(ok: bool) -> str:
    return "holds" if ok else "fails"


def decay_exponent(problem: ProblemSpec) -> Optional[float]:
    """``lambda_1 - sum beta_k exp(lambda_1 tau_k)``; positive values certify attraction."""
    betas = problem.nonlinearity.lipschitz_betas
    if betas is None:
        return None
    lam1 = first_eigenvalue(problem.gamma)
    return lam1 - math.fsum(b * math.exp(lam1 * tau) for b, tau in zip(betas, problem.delays.taus))


def check_hypotheses(problem: ProblemSpec, box: float = 10.0, samples: int = 100_000,
                     seed: int = 0) -> HypothesisReport:
    """Evaluate the growth, smallness, Lipschitz and delay-weighted smallness conditions.

    The two smallness conditions are exact arithmetic.  The growth and Lipschitz
    inequalities quantify over all of R^n, so they are checked on ``samples`` random
    points of ``[-box, box]^n`` (seeded); a pass is evidence, not proof.
    """
    nl = problem.nonlinearity
    n = problem.delays.n
    lam1 = first_eigenvalue(problem.gamma)
    rng = np.random.default_rng(seed)
    sample_info = {"samples": samples, "box": box, "seed": seed}

    if nl.affine_bound is None:
        h1 = ConditionResult("unknown")
    else:
        g_betas, K = nl.affine_bound
        xi = rng.uniform(-box, box, size=(n, samples))
        omega = problem.omega or 1.0
        t = rng.uniform(0.0, omega, size=samples)
        x = rng.uniform(0.0, 1.0, size=samples)
        lhs = np.abs(nl(xi) + problem.forcing.evaluate(t, x))
        rhs = np.tensordot(np.array(g_betas), np.abs(xi), axes=(0, 0)) + K
        slack = float(np.min(rhs - lhs))
        h1 = ConditionResult(_status(slack >= -1e-12 * max(1.0, float(np.max(rhs)))),
                             slack, {**sample_info, "betas": list(g_betas), "K": K})

    betas = nl.lipschitz_betas
    if betas is None:
        h2 = h3 = h2p = ConditionResult("unknown")
        rho = factor = None
    else:
        total = math.fsum(betas)
        h2 = ConditionResult(_status(total < lam1), lam1 - total, {"sum_betas": total})
        weighted = math.fsum(b * math.exp(lam1 * tau) for b, tau in zip(betas, problem.delays.taus))
        h2p = ConditionResult(_status(weighted < lam1), lam1 - weighted, {"weighted_sum": weighted})
        rho = lam1 - weighted
        factor = total / lam1
        xi = rng.uniform(-box, box, size=(n, samples))
        eta = rng.uniform(-box, box, size=(n, samples))
        # half of the pairs are close together so local slopes are probed too
        close = rng.uniform(-1e-3, 1e-3, size=(n, samples // 2))
        eta[:, : samples // 2] = xi[:, : samples // 2] + close
        lhs = np.abs(nl(xi) - nl(eta))
        rhs = np.tensordot(np.array(betas), np.abs(xi - eta), axes=(0, 0))
        viol = lhs - rhs
        ok = bool(np.all(viol <= 1e-12 * np.maximum(1.0, np.abs(nl(xi)))))
        h3 = ConditionResult(_status(ok), float(-np.max(viol)), {**sample_info, "betas": list(betas)})
    return HypothesisReport(lam1, h1, h2, h3, h2p, rho, factor)


def bellman_envelope(psi0_sup: float, bs, t: float) -> float:
    """``||psi||_{C[-r,0]} exp(t sum b_k)``, the bound for the delayed integral inequality."""
    if t < 0:
        raise DomainError(f"envelope is defined for t >= 0, got {t}")
    if psi0_sup < 0:
        raise DomainError("psi0_sup must be non-negative")
    return float(psi0_sup * math.exp(math.fsum(bs) * t))


@dataclass
class DecayFit:
    window: tuple[float, float]
    times: np.ndarray
    distances: np.ndarray
    bound_rhs: np.ndarray
    bound_rhs_sup: np.ndarray
    slope: float
    r_squared: float
    theoretical_exponent: Optional[float]
    status: str                      # "fitted" or "at floor"
    bound_mode: str                  # "as_written", "sup_norm_fallback" or "violated"
    prefactor: float
    prefactor_sup: float
    n_fit: int

    @property
    def log_distances(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.distances)

    def slope_ok(self, slack: float = 0.05) -> Optional[bool]:
        """Fitted slope at least as steep as ``-(1 - slack) rho``."""
        if self.theoretical_exponent is None or self.status != "fitted":
            return None
        return self.slope <= self.theoretical_exponent * (1.0 - slack)

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "slope": self.slope,
            "r_squared": self.r_squared,
            "theoretical_exponent": self.theoretical_exponent,
            "status": self.status,
            "bound_mode": self.bound_mode,
            "prefactor": self.prefactor,
            "prefactor_sup": self.prefactor_sup,
            "n_fit": self.n_fit,
            "max_distance": float(np.max(self.distances)),
            "final_distance": float(self.distances[-1]),
        }


def fit_decay(times, distances, window) -> tuple[float, float, int]:
    """Least-squares slope of ``log d`` over ``window``, ignoring values below the floor."""
    times = np.asarray(times)
    distances = np.asarray(distances)
    m = (times >= window[0]) & (times <= window[1]) & (distances > LOG_FLOOR)
    if m.sum() < 3:
        return float("nan"), float("nan"), int(m.sum())
    t, y = times[m], np.log(distances[m])
    slope, icept = np.polyfit(t, y, 1)
    resid = y - (slope * t + icept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(slope), float(r2), int(m.sum())


def perturbed_history(ubar: PeriodicTrajectory, perturbation, r: float, h: float) -> Trajectory:
    """``ubar + perturbation`` on ``[-r, 0]`` sampled on the step grid, slopes from ``ubar``."""
    from .delay_integrator import initial_history

    base = initial_history(ubar, r, h, ubar.N)
    p = np.zeros(ubar.N) if perturbation is None else np.asarray(getattr(perturbation, "coeffs", perturbation), float)
    return Trajectory(base.times, base.values + p, base.dright, base.dleft)


def attraction_experiment(
    problem: ProblemSpec,
    kappa: Trajectory,
    horizon: float,
    ubar: PeriodicTrajectory,
    *,
    fit_window: Optional[tuple[float, float]] = None,
    certificate: bool = False,
    report: Optional[HypothesisReport] = None,
    h: float | None = None,
    raise_on_violation: bool = True,
) -> DecayFit:
    """Distance between the solution started from ``kappa`` and the periodic solution.

    The pointwise envelope uses the prefactor ``max_{[-r,0]} e^{lambda_1 t} ||ubar - kappa||``
    with the exponent ``-rho``; if it is exceeded the looser prefactor
    ``max_{[-r,0]} ||ubar - kappa||`` is tried, and only if both fail is
    ``BoundViolationError`` raised.
    """
    report = report or check_hypotheses(problem)
    if certificate and report.H2prime.status != "holds":
        raise CertificateRefused(f"attraction not certified: H2' {report.H2prime.status}")
    h = problem.step_size() if h is None else h
    traj = solve_ivp(problem, kappa, horizon, h)
    fwd = traj.times >= -1e-12 * h
    times = traj.times[fwd]
    d = np.linalg.norm(traj.values[fwd] - ubar.evaluate(times), axis=1)

    lam1 = report.lambda1
    k_t = kappa.times
    diff0 = np.linalg.norm(kappa.values - ubar.evaluate(k_t), axis=1)
    pref = float(np.max(np.exp(lam1 * k_t) * diff0))
    pref_sup = float(np.max(diff0))
    rho = report.rho
    expo = -rho if rho is not None else 0.0
    bound = pref * np.exp(expo * times)
    bound_sup = pref_sup * np.exp(expo * times)
    # distances under the round-off floor carry no information about the envelope
    tol = 1e-12 * pref_sup + LOG_FLOOR
    if rho is None:
        mode = "unknown"
    elif np.all(d <= bound + tol):
        mode = "as_written"
    elif np.all(d <= bound_sup + tol):
        mode = "sup_norm_fallback"
    else:
        mode = "violated"

    window = fit_window or (horizon / 2.0, horizon)
    slope, r2, nfit = fit_decay(times, d, window)
    fit = DecayFit(tuple(window), times, d, bound, bound_sup, slope, r2,
                   expo if rho is not None else None, "fitted" if nfit >= 3 else "at floor",
                   mode, pref, pref_sup, nfit)
    if mode == "violated" and raise_on_violation:
        worst = int(np.argmax(d - bound_sup))
        raise BoundViolationError(
            f"distance {d[worst]:.3e} exceeds envelope {bound_sup[worst]:.3e} at t={times[worst]:.4g}", fit)
    return fit
