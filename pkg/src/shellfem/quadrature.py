"""Gauss-Legendre rules on the reference interval [-1, 1]."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_POINTS = 64


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.points)

    def on_interval(self, a, b):
        """Map the rule to [a, b]; ``a`` and ``b`` may be arrays of equal shape.

        Returns (points, weights) with a trailing axis of length n.
        """
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        half = 0.5 * (b - a)
        return a + half * (self.points + 1.0), half * self.weights


def _legendre_and_derivative(n, x):
    # three-term recurrence for P_n, then P_n' from P_n and P_{n-1}
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    if n == 0:
        return p0, np.zeros_like(x)
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Return the n-point Gauss-Legendre rule, 1 <= n <= 64.

    Roots are found by Newton iteration on P_n started from the
    Chebyshev-like guesses cos(pi (k - 1/4) / (n + 1/2)).
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_POINTS:
        raise ValueError(f"number of Gauss points must be in [1, {MAX_POINTS}], got {n!r}")
    n = int(n)
    if n == 1:
        return QuadRule(np.array([0.0]), np.array([2.0]))
    k = np.arange(1, n // 2 + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        pn, dpn = _legendre_and_derivative(n, x)
        dx = pn / dpn
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    _, dpn = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dpn * dpn)
    # positive roots in descending order; mirror to get the full symmetric set
    if n % 2:
        xm = np.array([0.0])
        _, dp0 = _legendre_and_derivative(n, xm)
        wm = 2.0 / dp0**2
        points = np.concatenate([-x, xm, x[::-1]])
        weights = np.concatenate([w, wm, w[::-1]])
    else:
        points = np.concatenate([-x, x[::-1]])
        weights = np.concatenate([w, w[::-1]])
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(points, weights)
