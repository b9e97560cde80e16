"""Quick invariant suite at small resolution, used by ``efk selftest``."""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .delay_integrator import etd2_weights, solve_ivp
from .errors import EFKError, HistoryUnderrunError
from .oracles import bellman_recurrence, forced_mode_exact, mild_residual
from .periodic_solver import linear_periodic_solution, picard_iterate
from .problem import DelaySpec, Discretization, ForcingSpec, ProblemSpec, Tolerances, parse_nonlinearity
from .spectral_core import (Collocation, OperatorSpectrum, PanelQuadrature, SpectralField, apply_semigroup,
                            greens_kernel_pair, greens_solve, project_function, spectral_inverse)
from .stability_analyzer import bellman_envelope, check_hypotheses

INJECTIONS = ("g2-typo", "coarse-step")


def _forced_problem(nl_expr=None, betas=None, tau=0.05, N=16, h=None, tol=1e-10):
    forcing = ForcingSpec.from_harmonics([{"c": 1.0, "fn": "cos", "m": 1, "j": 1}], 1.0)
    return ProblemSpec(1.0, 1.0, DelaySpec((tau,)), parse_nonlinearity(nl_expr, 1, betas), forcing,
                       Discretization(N, 2 * N, h), Tolerances(tol, 40))


def check_greens(inject: Optional[str]) -> tuple[bool, str]:
    root = "mu1" if inject == "g2-typo" else "mu2"
    quad = PanelQuadrature(512, 8)
    worst = 0.0
    for gamma in (0.5, 1.0, 2.0):
        sp = OperatorSpectrum(gamma, 32)
        for phi in (lambda x: np.sin(np.pi * x), lambda x: x * (1 - x)):
            u = greens_solve(greens_kernel_pair(gamma, root), gamma, phi, 32, quad)
            ref = spectral_inverse(sp, project_function(phi, 32, quad))
            worst = max(worst, (u - ref).norm() / ref.norm())
    return worst <= 1e-8, f"max relative L2 error {worst:.2e}"


def check_transform(_) -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    c = Collocation(16, 32)
    a = rng.standard_normal(16)
    err = float(np.max(np.abs(c.to_coeffs(c.to_samples(a)) - a)))
    return err < 1e-12, f"round-trip error {err:.1e}"


def check_semigroup(_) -> tuple[bool, str]:
    rng = np.random.default_rng(2)
    sp = OperatorSpectrum(1.0, 16)
    bad = 0
    for _ in range(20):
        u = SpectralField(rng.standard_normal(16))
        for t in (0.001, 0.01, 0.1):
            bad += apply_semigroup(sp, t, u).norm() > math.exp(-sp.lambda1 * t) * u.norm() * (1 + 1e-14)
    return bad == 0, f"{bad} bound violations"


def check_etd_constant(_) -> tuple[bool, str]:
    sp = OperatorSpectrum(1.0, 16)
    E, w0, w1 = etd2_weights(sp.lambdas, 1e-3)
    c = 3.0
    a = c / sp.lambdas
    err = float(np.max(np.abs(E * a + (w0 + w1) * c - a) / a))
    return err < 1e-13, f"fixed-point drift {err:.1e}"


def check_order(_) -> tuple[bool, str]:
    errs = []
    for h in (1e-3, 5e-4):
        p = _forced_problem(N=4, h=h)
        tr = solve_ivp(p, None, 0.2)
        m = tr.times >= 0
        ex = forced_mode_exact(p.lambda1, 1 / math.sqrt(2), 2 * math.pi, tr.times[m])
        errs.append(float(np.max(np.abs(tr.values[m, 0] - ex))))
    ratio = errs[0] / errs[1]
    return 3.4 <= ratio <= 4.6, f"Richardson ratio {ratio:.3f}"


def check_ivp_residual(inject: Optional[str]) -> tuple[bool, str]:
    tau = 0.02
    h = 2 * tau if inject == "coarse-step" else None
    p = _forced_problem("tanh_scaled(1, 1)", tau=tau, h=h)
    try:
        tr = solve_ivp(p, None, 0.1, h=h)
    except HistoryUnderrunError as exc:
        return False, f"history underrun: {exc}"
    ts = tr.times[tr.times > 0][::10]
    res = float(np.max(mild_residual(p, tr, ts)))
    return res < 1e-6, f"max mild residual {res:.2e}"


def check_linear_periodic(_) -> tuple[bool, str]:
    p = _forced_problem(h=5e-4)
    u, rep = picard_iterate(p)
    ex = linear_periodic_solution(p.spectrum, 1.0, p.forcing, u.times)
    err = float(np.max(np.abs(u.values - ex.values)) / np.max(np.abs(ex.values)))
    return err <= 1e-6 and rep.iterations == 1, f"relative sup error {err:.2e}"


def check_contraction(_) -> tuple[bool, str]:
    p = _forced_problem("tanh_scaled(10, 1)", betas=[10.0])
    _, rep = picard_iterate(p, certificate=True)
    ok = rep.empirical_factor <= rep.theoretical_factor + 0.05 and rep.iterations <= 15
    return ok, f"{rep.iterations} iterations, factor {rep.empirical_factor:.4f} (bound {rep.theoretical_factor:.4f})"


def check_bellman(_) -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        bs = rng.uniform(0.1, 5.0, 2)
        taus = rng.uniform(0.05, 1.0, 2)
        psi0 = rng.uniform(0.1, 2.0)
        t, psi = bellman_recurrence(psi0, bs, taus, 5 * taus.max(), 1e-3)
        env = psi0 * np.exp(bs.sum() * t)
        worst = max(worst, float(np.max(psi / env)))
    return worst <= 1.0, f"max simulated/envelope {worst:.4f}"


def check_hypotheses_arith(_) -> tuple[bool, str]:
    p = _forced_problem("tanh_scaled(10, 1)", betas=[10.0], tau=0.01)
    rep = check_hypotheses(p, samples=2000)
    lam1 = math.pi**4 + math.pi**2 - 1
    ok = abs(rep.rho - (lam1 - 10 * math.exp(lam1 * 0.01))) <= 1e-12 * lam1 and rep.H2prime.status == "holds"
    return ok, f"rho = {rep.rho:.6f}"


CHECKS: list[tuple[str, Callable]] = [
    ("greens_oracle", check_greens),
    ("transform_roundtrip", check_transform),
    ("semigroup_bound", check_semigroup),
    ("etd_constant_forcing", check_etd_constant),
    ("integrator_order", check_order),
    ("ivp_mild_residual", check_ivp_residual),
    ("linear_periodic_oracle", check_linear_periodic),
    ("picard_contraction", check_contraction),
    ("bellman_envelope", check_bellman),
    ("hypothesis_arithmetic", check_hypotheses_arith),
]


def run(inject: Optional[str] = None, echo=print) -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(inject)
        except EFKError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
        echo(f"{'PASS' if ok else 'FAIL'}  {name:<24} {detail}")
    return results
