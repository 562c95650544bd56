"""Flat torus arithmetic: wrapping, nearest lifts, quotient metric.

Points are plain numpy arrays with every coordinate in [0, 1).  The
quotient metric is the minimum over integer translates of the Euclidean
norm; since the lattice is the coordinate lattice Z^d this reduces to
centering each coordinate difference into [-1/2, 1/2).
"""

import numpy as np

from ._accel import njit


def wrap(x):
    """Reduce coordinates to the fundamental domain [0, 1)^d."""
    return np.asarray(x, dtype=float) % 1.0


def centered_diff(x, y):
    """Representative of y - x with every coordinate in [-1/2, 1/2)."""
    d = (np.asarray(y, dtype=float) - np.asarray(x, dtype=float)) % 1.0
    return np.where(d >= 0.5, d - 1.0, d)


def dist(x, y):
    """Flat quotient distance between two torus points."""
    return float(np.linalg.norm(centered_diff(x, y)))


def lift_near(x, base):
    """Lift of torus point x closest to the (unwrapped) base point."""
    base = np.asarray(base, dtype=float)
    return base + centered_diff(wrap(base), x)


@njit
def _dist_batch(xs, ys, out):
    n, d = xs.shape
    for i in range(n):
        acc = 0.0
        for k in range(d):
            t = (ys[i, k] - xs[i, k]) % 1.0
            if t >= 0.5:
                t -= 1.0
            acc += t * t
        out[i] = np.sqrt(acc)


def dist_batch(xs, ys):
    """Row-wise quotient distances between two (n, d) arrays."""
    xs = np.ascontiguousarray(xs, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    out = np.empty(xs.shape[0])
    _dist_batch(xs, ys, out)
    return out


def integer_offsets(d, radius=1):
    """All integer vectors in {-radius..radius}^d, as an (m, d) array."""
    ranges = [np.arange(-radius, radius + 1)] * d
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(float)
