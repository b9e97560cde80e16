"""Numerical lab for the delayed extended Fisher-Kolmogorov equation.

Spectral Navier-sine discretization, an exponential time-differencing delay
integrator, a Picard solver for time-periodic mild solutions and checks of the
hypotheses behind their existence and exponential attraction.
"""

from .errors import (BoundViolationError, CertificateRefused, ConfigurationError, ConvergenceFailure,
                     DivergenceError, DomainError, EFKError, HistoryUnderrunError, ShapeError)
from .kernels import BACKEND
from .spectral_core import (Collocation, OperatorSpectrum, SpectralField, apply_semigroup, first_eigenvalue,
                            greens_kernel_pair, greens_solve, spectral_inverse)
from .history import HistoryBuffer, PeriodicTrajectory, Trajectory
from .problem import (DelaySpec, Discretization, ForcingSpec, NonlinearitySpec, ProblemSpec, Tolerances,
                      parse_nonlinearity)
from .delay_integrator import solve_ivp, step_etd
from .periodic_solver import ConvergenceReport, linear_periodic_solution, picard_iterate
from .stability_analyzer import (DecayFit, HypothesisReport, attraction_experiment, bellman_envelope,
                                 check_hypotheses)

__version__ = "0.1.0"
