import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efklab.errors import ConfigurationError, HistoryUnderrunError, ShapeError
from efklab.history import HistoryBuffer, PeriodicTrajectory, Trajectory, interpolate_history


def cubic_traj(times):
    t = np.asarray(times)
    vals = np.stack([t**3 - t, 2 * t**2 + 1], axis=1)
    der = np.stack([3 * t**2 - 1, 4 * t], axis=1)
    return Trajectory(t, vals, der), (lambda s: np.stack([s**3 - s, 2 * s**2 + 1], axis=1))


def test_hermite_exact_on_cubics():
    traj, exact = cubic_traj(np.linspace(-1, 1, 9))
    q = np.linspace(-1, 1, 101)
    np.testing.assert_allclose(traj.evaluate(q), exact(q), atol=1e-13)
    np.testing.assert_allclose(traj.derivative(q[1:-1:7]),
                               np.stack([3 * q[1:-1:7]**2 - 1, 4 * q[1:-1:7]], axis=1), atol=1e-12)


@settings(max_examples=40)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=12, unique=True))
def test_knots_are_returned_exactly(ts):
    ts = np.sort(ts)
    if np.min(np.diff(ts)) < 1e-6:
        return
    vals = np.random.default_rng(0).standard_normal((ts.size, 3))
    traj = Trajectory(ts, vals)
    np.testing.assert_array_equal(traj.evaluate(ts), vals)


def test_underrun_and_validation():
    traj, _ = cubic_traj([0.0, 0.5, 1.0])
    with pytest.raises(HistoryUnderrunError) as err:
        traj.evaluate([1.5])
    assert err.value.t == 1.5
    with pytest.raises(HistoryUnderrunError):
        traj.evaluate([-0.1])
    with pytest.raises(ConfigurationError):
        Trajectory([0.0, 0.0], np.zeros((2, 1)))
    with pytest.raises(ShapeError):
        Trajectory([0.0, 1.0], np.zeros((3, 1)))
    with pytest.raises(ValueError):
        traj.values[0, 0] = 1.0


def test_seam_slopes_differ():
    # slope -1 on the left of t = 0, +1 on the right: |t|
    t = np.array([-1.0, 0.0, 1.0])
    v = np.abs(t)[:, None]
    dr = np.array([[-1.0], [1.0], [1.0]])
    dl = np.array([[-1.0], [-1.0], [1.0]])
    traj = Trajectory(t, v, dr, dl)
    q = np.array([-0.5, -0.25, 0.25, 0.75])
    np.testing.assert_allclose(traj.evaluate(q)[:, 0], np.abs(q), atol=1e-15)


def test_periodic_trajectory_wraps():
    t = np.linspace(0, 2.0, 41)
    w = np.pi
    vals = np.stack([np.sin(w * t), np.cos(w * t)], axis=1)
    der = np.stack([w * np.cos(w * t), -w * np.sin(w * t)], axis=1)
    p = PeriodicTrajectory(t, vals, der, omega=2.0)
    np.testing.assert_allclose(p.evaluate([0.3, 2.3, -1.7, 6.3]), np.tile(p.evaluate([0.3]), (4, 1)),
                               atol=1e-14)
    np.testing.assert_array_equal(p.evaluate([2.0, 4.0]), np.tile(vals[0], (2, 1)))
    assert p.seam_gap() < 1e-15
    with pytest.raises(ConfigurationError):
        PeriodicTrajectory(t, vals, der, omega=1.0)


def test_history_buffer_matches_trajectory():
    traj, exact = cubic_traj(np.linspace(-1, 0, 5))
    buf = HistoryBuffer.from_trajectory(traj)
    for t in np.linspace(0.25, 2.0, 8):
        buf.append(t, exact(np.array([t]))[0], np.array([3 * t * t - 1, 4 * t]))
    assert len(buf) == 13 and buf.current_time == 2.0
    q = np.linspace(-1, 2, 50)
    np.testing.assert_allclose(buf.lookup(q), exact(q), atol=1e-12)
    np.testing.assert_allclose(buf.to_trajectory().evaluate(q), buf.lookup(q))
    assert interpolate_history(buf, 0.5).coeffs == pytest.approx(exact(np.array([0.5]))[0])
    with pytest.raises(ConfigurationError):
        buf.append(1.0, np.zeros(2), np.zeros(2))
    with pytest.raises(HistoryUnderrunError):
        buf.lookup([2.5])


def test_history_buffer_grows():
    buf = HistoryBuffer(1, capacity=2)
    for i in range(100):
        buf.append(float(i), [float(i)], [1.0])
    assert buf.window == (0.0, 99.0)
    assert buf.lookup([42.5])[0, 0] == pytest.approx(42.5)


def test_midpoint_error_within_hermite_remainder():
    lam, h = 106.27869543509178, 1e-4
    t = np.arange(0, 51) * h
    a = np.exp(-lam * t)[:, None]
    traj = Trajectory(t, a, -lam * a)
    mid = t[:-1] + h / 2
    err = np.abs(traj.evaluate(mid)[:, 0] - np.exp(-lam * mid))
    bound = (lam * h) ** 4 / 384 * np.exp(-lam * t[:-1])
    assert np.all(err <= bound)
