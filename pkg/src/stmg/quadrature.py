"""Legendre-Gauss-Lobatto rules, nodal differentiation, Pade approximants.

The single-node rule (n=1, midpoint with weight 2) stands in for the
degree-0 scheme; every downstream operator degenerates consistently with
it (zero derivative matrix, scalar mass).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

__all__ = [
    "LglRule",
    "RationalPoly",
    "lgl_rule",
    "lagrange_derivative_matrix",
    "barycentric_weights",
    "lagrange_eval_matrix",
    "gauss_rule",
    "pade_exponential",
    "stability_function",
]

_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class LglRule:
    """Quadrature nodes in [-1, 1] (ascending) and positive weights."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray


def lgl_rule(n: int) -> LglRule:
    """Legendre-Gauss-Lobatto rule with n nodes (n=1: midpoint, weight 2).

    Interior nodes are the roots of P'_{n-1}, found by Newton iteration on
    (1-x^2) P'_{n-1}(x) from Chebyshev-Gauss-Lobatto starting values;
    weights are 2 / (n (n-1) P_{n-1}(x_i)^2).
    """
    if n < 1:
        raise ValueError("node count must be >= 1")
    if n == 1:
        return LglRule(1, np.array([0.0]), np.array([2.0]))
    x = -np.cos(np.pi * np.arange(n) / (n - 1))
    leg = np.zeros((n, n))
    for _ in range(_NEWTON_MAX_ITER):
        x_old = x
        leg[:, 0] = 1.0
        leg[:, 1] = x
        for k in range(2, n):
            leg[:, k] = ((2 * k - 1) * x * leg[:, k - 1] - (k - 1) * leg[:, k - 2]) / k
        # Newton update for the roots of (1-x^2) P'_{n-1}
        x = x_old - (x * leg[:, n - 1] - leg[:, n - 2]) / (n * leg[:, n - 1])
        if np.max(np.abs(x - x_old)) < _NEWTON_TOL:
            break
    x[0], x[-1] = -1.0, 1.0
    w = 2.0 / (n * (n - 1) * leg[:, n - 1] ** 2)
    return LglRule(n, x, w)


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_derivative_matrix(rule: LglRule) -> np.ndarray:
    """Entry (i, j) is the derivative of cardinal polynomial j at node i.

    Barycentric form with the negative-sum trick so each row sums to zero
    exactly up to rounding. n=1 returns [[0]].
    """
    n = rule.n
    if n == 1:
        return np.zeros((1, 1))
    x = rule.nodes
    lam = barycentric_weights(x)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                d[i, j] = (lam[j] / lam[i]) / (x[i] - x[j])
        d[i, i] = -np.sum(d[i])
    return d


def lagrange_eval_matrix(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Entry (i, j): cardinal polynomial j on ``nodes`` evaluated at points[i]."""
    nodes = np.asarray(nodes, dtype=float)
    points = np.asarray(points, dtype=float)
    out = np.ones((len(points), len(nodes)))
    for j in range(len(nodes)):
        for k in range(len(nodes)):
            if k != j:
                out[:, j] *= (points - nodes[k]) / (nodes[j] - nodes[k])
    return out


def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [-1, 1], exact through degree 2n-1."""
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class RationalPoly:
    """p(z)/q(z) with real coefficients in ascending powers, q[0] = 1."""

    num: np.ndarray
    den: np.ndarray

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        p = np.zeros_like(z)
        for c in self.num[::-1]:
            p = p * z + c
        q = np.zeros_like(z)
        for c in self.den[::-1]:
            q = q * z + c
        return p / q


def pade_exponential(k: int, m: int) -> RationalPoly:
    """(k, m)-Pade approximant of exp(z).

    Coefficients come out of exact integer factorials and are converted to
    float at the end, so no cancellation occurs for moderate k+m.
    """
    if k < 0 or m < 0:
        raise ValueError("orders must be nonnegative")
    num = [1.0]
    for j in range(1, k + 1):
        c = factorial(k + m - j) * factorial(k) // (factorial(k - j) * factorial(j))
        num.append(c / float(factorial(k + m)))
    den = [1.0]
    for j in range(1, m + 1):
        c = factorial(k + m - j) * factorial(m) // (factorial(m - j) * factorial(j))
        den.append((-1) ** j * c / float(factorial(k + m)))
    return RationalPoly(np.array(num), np.array(den))


def stability_function(p_t: int) -> RationalPoly:
    """Amplification factor R(z) of the degree-p_t upwind element solve.

    The (p_t-1, p_t+1) Pade approximant of exp(z); the single-node scheme
    (p_t=0) is implicit Euler, i.e. the (0, 1) approximant.
    """
    if p_t < 0:
        raise ValueError("temporal degree must be >= 0")
    if p_t == 0:
        return pade_exponential(0, 1)
    return pade_exponential(p_t - 1, p_t + 1)
