"""NumPy implementations of the hot loops; used when the compiled module is absent."""

import numpy as np


def etd_sweep(a0, E, w0, w1, phi):
    """Run ``a[n+1] = E a[n] + w0 phi[n] + w1 phi[n+1]`` over all rows of ``phi``.

    Returns an array shaped like ``phi`` whose first row is ``a0``.
    """
    phi = np.ascontiguousarray(phi, dtype=float)
    out = np.empty_like(phi)
    out[0] = a0
    a = out[0]
    for n in range(phi.shape[0] - 1):
        a = E * a + w0 * phi[n] + w1 * phi[n + 1]
        out[n + 1] = a
    return out


def hermite_eval(knots, values, dright, dleft, queries, snap):
    """Piecewise cubic Hermite interpolation of every column of ``values``.

    ``dright[i]`` is the slope used on the interval to the right of knot ``i`` and
    ``dleft[i]`` the slope on the interval to its left.  Queries within ``snap``
    (relative to the local spacing) of a knot return the stored value exactly.
    Returns ``(out, bad)`` where ``bad`` is the index of the first out-of-range
    query or -1.
    """
    knots = np.asarray(knots, dtype=float)
    q = np.asarray(queries, dtype=float)
    K = knots.size
    out = np.empty((q.size, values.shape[1]))
    if K == 1:
        hit = np.abs(q - knots[0]) <= snap
        if not hit.all():
            return out, int(np.argmin(hit))
        out[:] = values[0]
        return out, -1
    idx = np.clip(np.searchsorted(knots, q, side="right") - 1, 0, K - 2)
    t0 = knots[idx]
    hh = knots[idx + 1] - t0
    s = (q - t0) / hh
    bad = (s < -snap) | (s > 1.0 + snap)
    if bad.any():
        return out, int(np.argmax(bad))
    y0 = values[idx]
    y1 = values[idx + 1]
    m0 = dright[idx] * hh[:, None]
    m1 = dleft[idx + 1] * hh[:, None]
    s1 = s[:, None]
    s2 = s1 * s1
    s3 = s2 * s1
    out[:] = (
        (2 * s3 - 3 * s2 + 1) * y0
        + (s3 - 2 * s2 + s1) * m0
        + (-2 * s3 + 3 * s2) * y1
        + (s3 - s2) * m1
    )
    lo = s <= snap
    hi = s >= 1.0 - snap
    out[lo] = y0[lo]
    out[hi] = y1[hi]
    return out, -1
