"""Problem data: delays, nonlinearity, forcing and discretization parameters."""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .spectral_core import SQRT2, Collocation, OperatorSpectrum


@dataclass(frozen=True)
class DelaySpec:
    taus: tuple[float, ...]

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if not taus:
            raise ConfigurationError("at least one delay is required")
        if any(not t > 0 for t in taus):
            raise DomainError(f"delays must be positive, got {taus}")
        object.__setattr__(self, "taus", taus)

    @property
    def n(self) -> int:
        return len(self.taus)

    @property
    def r(self) -> float:
        return max(self.taus)

    @property
    def tau_min(self) -> float:
        return min(self.taus)


# ---------------------------------------------------------------------------
# Nonlinearity


@dataclass(frozen=True)
class NonlinearitySpec:
    """Pointwise map ``f(xi_1, ..., xi_n)`` applied to the delayed fields.

    ``evaluator`` receives an array whose first axis has length ``n`` and must
    return an array of the remaining shape.  ``lipschitz_betas`` are the constants of
    the global Lipschitz bound, ``affine_bound`` the ``(betas, K)`` pair of the growth
    bound; both are declared data, never inferred.
    """

    n: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    lipschitz_betas: Optional[tuple[float, ...]] = None
    affine_bound: Optional[tuple[tuple[float, ...], float]] = None
    expr: str = "<callable>"
    is_zero: bool = False

    def __post_init__(self):
        if self.lipschitz_betas is not None:
            betas = tuple(float(b) for b in self.lipschitz_betas)
            if len(betas) != self.n:
                raise ConfigurationError(f"expected {self.n} Lipschitz constants, got {len(betas)}")
            object.__setattr__(self, "lipschitz_betas", betas)
        if self.affine_bound is not None:
            betas, K = self.affine_bound
            betas = tuple(float(b) for b in betas)
            if len(betas) != self.n:
                raise ConfigurationError(f"expected {self.n} growth constants, got {len(betas)}")
            object.__setattr__(self, "affine_bound", (betas, float(K)))

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        return self.evaluator(xi)

    def with_constants(self, betas=None, K=None) -> "NonlinearitySpec":
        affine = (tuple(betas), K) if betas is not None and K is not None else None
        return NonlinearitySpec(self.n, self.evaluator, tuple(betas) if betas is not None else None,
                                affine, self.expr, self.is_zero)

    @classmethod
    def zero(cls, n: int) -> "NonlinearitySpec":
        return cls(n, lambda xi: np.zeros(np.shape(xi)[1:]), tuple([0.0] * n), (tuple([0.0] * n), 0.0),
                   "zero", True)


def _arg(k, n):
    k = int(k)
    if not 1 <= k <= n:
        raise ConfigurationError(f"argument index {k} outside 1..{n}")
    return k - 1


def _build(node, n):
    """Return ``(evaluator, is_zero)`` for one DSL call node."""
    if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
        raise ConfigurationError(f"unsupported nonlinearity syntax: {ast.unparse(node)}")
    name = node.func.id
    if name == "sum":
        parts = [_build(a, n) for a in node.args]
        if not parts:
            raise ConfigurationError("sum() needs at least one term")
        fns = [p[0] for p in parts]
        return (lambda xi: sum(f(xi) for f in fns)), all(p[1] for p in parts)
    try:
        args = [float(ast.literal_eval(a)) for a in node.args]
    except (ValueError, SyntaxError) as exc:
        raise ConfigurationError(f"{name}() takes numeric arguments only") from exc
    if name == "zero":
        return (lambda xi: np.zeros(np.shape(xi)[1:])), True
    if name == "linear":
        if len(args) != n:
            raise ConfigurationError(f"linear() needs {n} coefficients, got {len(args)}")
        c = np.array(args)
        return (lambda xi: np.tensordot(c, xi, axes=(0, 0))), not np.any(c)
    if name in ("tanh_scaled", "sin_scaled"):
        if len(args) != 2:
            raise ConfigurationError(f"{name}(beta, k) takes two arguments")
        beta, k = args[0], _arg(args[1], n)
        fn = np.tanh if name == "tanh_scaled" else np.sin
        return (lambda xi: beta * fn(xi[k])), beta == 0.0
    if name == "cubic":
        if len(args) not in (1, 2):
            raise ConfigurationError("cubic(k[, c]) takes one or two arguments")
        k = _arg(args[0], n)
        c = args[1] if len(args) == 2 else 1.0
        return (lambda xi: -c * xi[k] ** 3), c == 0.0
    raise ConfigurationError(f"unknown nonlinearity {name!r}")


def parse_nonlinearity(expr: Optional[str], n: int, betas=None, K=None) -> NonlinearitySpec:
    """Build a nonlinearity from the small call-expression language.

    Built-ins: ``linear(c1, ..., cn)``, ``tanh_scaled(beta, k)`` (``beta tanh(xi_k)``),
    ``sin_scaled(beta, k)``, ``cubic(k[, c])`` (``-c xi_k^3``), ``zero()`` and
    ``sum(term, ...)``.  Argument indices ``k`` are 1-based delay indices.
    """
    if expr is None or str(expr).strip() in ("", "0", "none", "zero", "zero()"):
        spec = NonlinearitySpec.zero(n)
        if betas is not None:
            spec = spec.with_constants(betas, K if K is not None else None)
        return spec
    try:
        tree = ast.parse(str(expr), mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse nonlinearity {expr!r}: {exc.msg}") from exc
    evaluator, is_zero = _build(tree.body, n)
    affine = (tuple(betas), float(K)) if betas is not None and K is not None else None
    return NonlinearitySpec(n, evaluator, tuple(betas) if betas is not None else None, affine,
                            str(expr), is_zero)


# ---------------------------------------------------------------------------
# Forcing


@dataclass(frozen=True)
class ForcingTerm:
    """``c * fn(freq t + phase) * sin(mode pi x)`` with ``fn`` in {cos, sin}."""

    c: float
    fn: str
    freq: float
    phase: float
    mode: int

    def __post_init__(self):
        if self.fn not in ("cos", "sin"):
            raise ConfigurationError(f"forcing time factor must be cos or sin, got {self.fn!r}")
        if int(self.mode) < 1:
            raise ConfigurationError(f"spatial mode must be >= 1, got {self.mode}")

    def time_factor(self, t):
        arg = self.freq * np.asarray(t, float) + self.phase
        return np.cos(arg) if self.fn == "cos" else np.sin(arg)


@dataclass(frozen=True)
class ForcingSpec:
    """Finite sum of separable terms, optionally plus a general callable ``g(t, x)``.

    The callable path is the sampled fallback: it is evaluated at collocation nodes
    and transformed, and marks the forcing as nonseparable.
    """

    terms: tuple[ForcingTerm, ...] = ()
    period: Optional[float] = None
    extra: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.period is not None:
            if not self.period > 0:
                raise DomainError(f"period must be positive, got {self.period}")
            for term in self.terms:
                cycles = term.freq * self.period / (2 * np.pi)
                if abs(cycles - round(cycles)) > 1e-9:
                    raise ConfigurationError(f"forcing term {term} is not {self.period}-periodic")

    @classmethod
    def from_harmonics(cls, items: Sequence[dict], omega: float) -> "ForcingSpec":
        """Terms ``c * fn(2 pi m t / omega + phase) * sin(j pi x)`` from dicts."""
        terms = []
        for item in items:
            m = item.get("m", 0)
            if int(m) != m or m < 0:
                raise ConfigurationError(f"temporal harmonic m must be a non-negative integer, got {m}")
            terms.append(ForcingTerm(float(item["c"]), item.get("fn", "cos"), 2 * np.pi * m / omega,
                                     float(item.get("phase", 0.0)), int(item["j"])))
        return cls(tuple(terms), omega)

    @property
    def separable(self) -> bool:
        return self.extra is None

    @property
    def is_zero(self) -> bool:
        return self.extra is None and all(t.c == 0.0 for t in self.terms)

    def coeffs(self, times, colloc: Collocation) -> np.ndarray:
        """Spectral forcing rows ``(len(times), N)``; ``sin(j pi x) = e_j / sqrt(2)``."""
        times = np.atleast_1d(np.asarray(times, float))
        out = np.zeros((times.size, colloc.N))
        for term in self.terms:
            if term.mode > colloc.N:
                raise ConfigurationError(f"forcing mode {term.mode} exceeds N={colloc.N}")
            out[:, term.mode - 1] += term.c / SQRT2 * term.time_factor(times)
        if self.extra is not None:
            samples = self.extra(times[:, None], colloc.nodes[None, :])
            out += colloc.to_coeffs(np.broadcast_to(samples, (times.size, colloc.M)))
        return out

    def evaluate(self, t, x) -> np.ndarray:
        """Physical ``g(t, x)`` with broadcasting."""
        t = np.asarray(t, float)
        x = np.asarray(x, float)
        out = np.zeros(np.broadcast(t, x).shape)
        for term in self.terms:
            out = out + term.c * term.time_factor(t) * np.sin(term.mode * np.pi * x)
        if self.extra is not None:
            out = out + self.extra(t, x)
        return out


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Discretization:
    N: int = 64
    M: Optional[int] = None
    h: Optional[float] = None

    def __post_init__(self):
        if int(self.N) < 1:
            raise ConfigurationError(f"N must be positive, got {self.N}")
        M = 2 * int(self.N) if self.M is None else int(self.M)
        if M < self.N:
            raise ConfigurationError(f"collocation count M={M} below mode count N={self.N}")
        if self.h is not None and not self.h > 0:
            raise ConfigurationError(f"step size must be positive, got {self.h}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", M)


@dataclass(frozen=True)
class Tolerances:
    picard_tol: float = 1e-10
    max_iters: int = 50
    residual_tol: float = 1e-6

    def __post_init__(self):
        if not self.picard_tol > 0:
            raise ConfigurationError("picard_tol must be positive")
        if int(self.max_iters) < 1:
            raise ConfigurationError("max_iters must be at least 1")


@dataclass(frozen=True)
class ProblemSpec:
    gamma: float
    omega: Optional[float]
    delays: DelaySpec
    nonlinearity: NonlinearitySpec
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    discretization: Discretization = field(default_factory=Discretization)
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if self.nonlinearity.n != self.delays.n:
            raise ConfigurationError(
                f"nonlinearity takes {self.nonlinearity.n} arguments but {self.delays.n} delays given")
        if self.omega is not None:
            if not self.omega > 0:
                raise DomainError(f"period must be positive, got {self.omega}")
            if self.forcing.period is not None and abs(self.forcing.period - self.omega) > 1e-12 * self.omega:
                raise ConfigurationError(
                    f"forcing period {self.forcing.period} differs from omega {self.omega}")

    @property
    def spectrum(self) -> OperatorSpectrum:
        return OperatorSpectrum(self.gamma, self.discretization.N)

    @property
    def collocation(self) -> Collocation:
        return Collocation(self.discretization.N, self.discretization.M)

    @property
    def lambda1(self) -> float:
        return self.spectrum.lambda1

    def default_step(self) -> float:
        h = min(self.delays.tau_min / 20.0, 1e-3)
        if self.omega is not None:
            h = min(h, self.omega / 200.0)
        return h

    def step_size(self) -> float:
        """Requested step, shrunk so an integer number of steps spans one period."""
        h = self.discretization.h or self.default_step()
        if self.omega is not None:
            h = self.omega / max(1, int(round(self.omega / h)))
        return h
