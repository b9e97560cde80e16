"""Time-stamped sequences of spectral fields with cubic Hermite interpolation."""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ConfigurationError, HistoryUnderrunError, ShapeError
from .spectral_core import SpectralField

SNAP = 1e-9


def _hermite_derivative(knots, values, dright, dleft, queries):
    idx = np.clip(np.searchsorted(knots, queries, side="right") - 1, 0, knots.size - 2)
    t0 = knots[idx]
    hh = knots[idx + 1] - t0
    s = ((queries - t0) / hh)[:, None]
    d = (
        (6 * s**2 - 6 * s) / hh[:, None] * values[idx]
        + (3 * s**2 - 4 * s + 1) * dright[idx]
        + (6 * s - 6 * s**2) / hh[:, None] * values[idx + 1]
        + (3 * s**2 - 2 * s) * dleft[idx + 1]
    )
    return d


class Trajectory:
    """Knots ``t_0 < t_1 < ...`` with a coefficient vector and slopes at each knot.

    ``dleft``/``dright`` are the one-sided time derivatives at each knot; they differ
    only where the solution has a derivative jump (the seam at ``t = 0`` between an
    initial history and the evolved solution).
    """

    def __init__(self, times, values, dright=None, dleft=None):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != times.size:
            raise ShapeError(f"values shape {values.shape} does not match {times.size} knots")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ConfigurationError("trajectory knots must be strictly increasing")
        if dright is None:
            dright = np.gradient(values, times, axis=0, edge_order=2) if times.size > 2 else np.zeros_like(values)
        dright = np.asarray(dright, dtype=float)
        dleft = dright if dleft is None else np.asarray(dleft, dtype=float)
        for arr in (times, values, dright, dleft):
            arr.setflags(write=False)
        self.times = times
        self.values = values
        self.dright = dright
        self.dleft = dleft

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def window(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def _map_times(self, ts):
        return ts

    def evaluate(self, ts) -> np.ndarray:
        """Coefficient rows at each query time (shape ``(len(ts), N)``)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        q = self._map_times(ts)
        out, bad = kernels.hermite_eval(self.times, self.values, self.dright, self.dleft, q, SNAP)
        if bad >= 0:
            raise HistoryUnderrunError(ts[bad], self.window)
        return out

    def derivative(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        q = self._map_times(ts)
        lo, hi = self.window
        span = SNAP * (hi - lo) if hi > lo else SNAP
        if np.any(q < lo - span) or np.any(q > hi + span):
            bad = int(np.argmax((q < lo - span) | (q > hi + span)))
            raise HistoryUnderrunError(ts[bad], self.window)
        out = _hermite_derivative(self.times, self.values, self.dright, self.dleft, q)
        # knots return the one-sided slope stored for the interval to the right
        k = np.searchsorted(self.times, q)
        k = np.clip(k, 0, self.times.size - 1)
        near = np.abs(self.times[k] - q) <= span
        out[near] = self.dright[k[near]]
        return out

    def at(self, t: float) -> SpectralField:
        return SpectralField(self.evaluate([t])[0])

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def sup_norm(self) -> float:
        return float(self.norms().max())

    def restrict(self, t0: float, t1: float) -> "Trajectory":
        m = (self.times >= t0 - SNAP) & (self.times <= t1 + SNAP)
        return Trajectory(self.times[m], self.values[m], self.dright[m], self.dleft[m])


class PeriodicTrajectory(Trajectory):
    """Trajectory on ``[0, omega]`` evaluated anywhere via ``t mod omega``."""

    def __init__(self, times, values, dright=None, dleft=None, omega=None):
        super().__init__(times, values, dright, dleft)
        self.omega = float(omega if omega is not None else self.times[-1] - self.times[0])
        if abs(self.times[0]) > SNAP or abs(self.times[-1] - self.omega) > SNAP * self.omega:
            raise ConfigurationError("periodic grid must span exactly [0, omega]")

    def _map_times(self, ts):
        q = np.mod(ts, self.omega)
        # values within round-off of omega fold back onto the seam
        q[np.isclose(q, self.omega, rtol=0, atol=SNAP * self.omega)] = 0.0
        return q

    def seam_gap(self) -> float:
        return float(np.max(np.abs(self.values[0] - self.values[-1])))


class HistoryBuffer:
    """Growable trajectory used by the time stepper for delayed lookups.

    Knots are appended in increasing order; each append supplies the slope to the
    right of the new knot (and optionally a different slope to its left).
    """

    def __init__(self, N: int, capacity: int = 1024):
        self.N = int(N)
        cap = max(int(capacity), 2)
        self._t = np.empty(cap)
        self._v = np.empty((cap, self.N))
        self._dr = np.empty((cap, self.N))
        self._dl = np.empty((cap, self.N))
        self._n = 0

    @classmethod
    def from_trajectory(cls, traj: Trajectory, extra: int = 0) -> "HistoryBuffer":
        buf = cls(traj.N, traj.times.size + extra + 1)
        n = traj.times.size
        buf._t[:n] = traj.times
        buf._v[:n] = traj.values
        buf._dr[:n] = traj.dright
        buf._dl[:n] = traj.dleft
        buf._n = n
        return buf

    def __len__(self):
        return self._n

    def _grow(self):
        cap = 2 * self._t.size
        for name in ("_t", "_v", "_dr", "_dl"):
            old = getattr(self, name)
            new = np.empty((cap,) + old.shape[1:])
            new[: self._n] = old[: self._n]
            setattr(self, name, new)

    def append(self, t, value, deriv, deriv_left=None):
        if self._n and not t > self._t[self._n - 1]:
            raise ConfigurationError(f"knot {t} does not follow {self._t[self._n - 1]}")
        if self._n == self._t.size:
            self._grow()
        i = self._n
        self._t[i] = t
        self._v[i] = value
        self._dr[i] = deriv
        self._dl[i] = deriv if deriv_left is None else deriv_left
        self._n += 1

    def set_right_slope(self, i, deriv):
        """Replace the right-hand slope of knot ``i`` (negative indices allowed)."""
        self._dr[range(self._n)[i]] = deriv

    @property
    def current_time(self) -> float:
        return float(self._t[self._n - 1])

    @property
    def window(self) -> tuple[float, float]:
        return float(self._t[0]), float(self._t[self._n - 1])

    def lookup(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        n = self._n
        out, bad = kernels.hermite_eval(self._t[:n], self._v[:n], self._dr[:n], self._dl[:n], ts, SNAP)
        if bad >= 0:
            raise HistoryUnderrunError(ts[bad], self.window)
        return out

    def to_trajectory(self) -> Trajectory:
        n = self._n
        return Trajectory(self._t[:n].copy(), self._v[:n].copy(), self._dr[:n].copy(), self._dl[:n].copy())


def interpolate_history(history, t: float) -> SpectralField:
    """Field at time ``t`` from a ``HistoryBuffer`` or ``Trajectory``."""
    if isinstance(history, HistoryBuffer):
        return SpectralField(history.lookup([t])[0])
    return history.at(t)
