"""Legendre polynomials and Gauss-Legendre quadrature on [-1, 1].

Nodes and weights are generated once per point count by Newton iteration on
the Legendre recurrence and then cached, so repeated lookups are free.
"""

from dataclasses import dataclass

import numpy as np

MAX_GAUSS_POINTS = 20

__all__ = ["QuadratureRule", "legendre_eval", "legendre_table", "gauss_rule",
           "MAX_GAUSS_POINTS"]


def legendre_eval(k, xi):
    """Standard Legendre polynomial P_k and its derivative at xi.

    Uses the three-term recurrence; xi may be a scalar or an array.
    Returns (P_k(xi), P_k'(xi)).
    """
    xi = np.asarray(xi, dtype=float)
    if k < 0:
        raise ValueError(f"degree must be nonnegative, got {k}")
    p_prev = np.ones_like(xi)
    d_prev = np.zeros_like(xi)
    if k == 0:
        return p_prev, d_prev
    p = xi.copy()
    d = np.ones_like(xi)
    for j in range(2, k + 1):
        p_next = ((2 * j - 1) * xi * p - (j - 1) * p_prev) / j
        d_next = d_prev + (2 * j - 1) * p
        p_prev, p = p, p_next
        d_prev, d = d, d_next
    return p, d


def legendre_table(max_degree, xi):
    """Values and derivatives of P_0..P_max_degree at the points xi.

    Returns two arrays of shape (max_degree + 1, len(xi)).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    vals = np.empty((max_degree + 1, xi.size))
    ders = np.empty((max_degree + 1, xi.size))
    for k in range(max_degree + 1):
        vals[k], ders[k] = legendre_eval(k, xi)
    return vals, ders


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule on the reference interval [-1, 1].

    points: reference coordinates, weights: positive, summing to 2.
    An n-point rule integrates polynomials of degree <= 2n-1 exactly.
    """

    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.points.size

    def integrate(self, fn):
        return float(np.dot(self.weights, fn(self.points)))


_rule_cache: dict[int, QuadratureRule] = {}


def gauss_rule(n):
    """n-point Gauss-Legendre rule on [-1, 1], 1 <= n <= 20."""
    if not 1 <= n <= MAX_GAUSS_POINTS:
        raise ValueError(f"supported Gauss point counts are 1..{MAX_GAUSS_POINTS}, got {n}")
    rule = _rule_cache.get(n)
    if rule is None:
        rule = _build_rule(n)
        _rule_cache[n] = rule
    return rule


def _build_rule(n):
    # Newton iteration on the roots of P_n starting from the Chebyshev guess.
    i = np.arange(n)
    x = np.cos(np.pi * (4 * i + 3) / (4 * n + 2))
    for _ in range(100):
        p, dp = legendre_eval(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = legendre_eval(n, x)
    w = 2.0 / ((1.0 - x**2) * dp**2)
    # enforce exact symmetry of the rule
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    order = np.argsort(x)
    return QuadratureRule(points=x[order], weights=w[order])
