import math

import pytest

from efklab.problem import DelaySpec, Discretization, ForcingSpec, ProblemSpec, Tolerances, parse_nonlinearity

LAMBDA1 = math.pi**4 + math.pi**2 - 1


def make_problem(nl=None, betas=None, taus=(0.05,), N=16, h=None, omega=1.0, forcing=None, tol=1e-10,
                 max_iters=40, gamma=1.0, K=None):
    if forcing is None:
        forcing = [{"c": 1.0, "fn": "cos", "m": 1, "j": 1}]
    fspec = ForcingSpec.from_harmonics(forcing, omega if omega else 1.0)
    if omega is None:
        fspec = ForcingSpec(fspec.terms, None)
    return ProblemSpec(gamma, omega, DelaySpec(tuple(taus)), parse_nonlinearity(nl, len(taus), betas, K),
                       fspec, Discretization(N, None, h), Tolerances(tol, max_iters))


@pytest.fixture
def linear_problem():
    return make_problem(h=5e-4)


@pytest.fixture
def tanh_problem():
    return make_problem("tanh_scaled(10, 1)", betas=[10.0], K=1.0)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}: {detail}")
