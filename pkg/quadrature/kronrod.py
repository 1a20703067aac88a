"""
Gauss-Kronrod Rule Tables
Builds (2n+1)-point Kronrod extensions of n-point Gauss-Legendre rules on [-1, 1]
"""
import functools
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import legendre


class QuadRule(str, Enum):
    """Supported Gauss-Kronrod pairs"""
    GK15 = 'gauss_kronrod_15'
    GK31 = 'gauss_kronrod_31'

    @property
    def gauss_points(self) -> int:
        return {QuadRule.GK15: 7, QuadRule.GK31: 15}[self]


@dataclass(frozen=True)
class KronrodRule:
    """Nodes on [-1, 1] with Kronrod weights and embedded Gauss weights (zero off-grid)"""
    nodes: np.ndarray
    kronrod_weights: np.ndarray
    gauss_weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)


def _stieltjes_coefficients(n: int) -> np.ndarray:
    """
    Legendre-series coefficients of the Stieltjes polynomial E_(n+1)

    E_(n+1) = P_(n+1) + sum_j e_j P_j is orthogonal to P_n * P_k for k = 0..n,
    which is a linear system in e_0..e_n. Products are integrated exactly by
    a Gauss-Legendre rule of sufficient order.
    """
    x, w = legendre.leggauss(2 * n + 2)
    vander = legendre.legvander(x, n + 1)  # columns P_0..P_(n+1)
    p_n = vander[:, n]
    weighted = (w * p_n)[:, None] * vander
    # system[k, j] = integral of P_n P_j P_k
    system = weighted[:, :n + 1].T @ vander[:, :n + 1]
    rhs = -(weighted[:, :n + 1].T @ vander[:, n + 1])
    coeffs = np.linalg.solve(system, rhs)
    return np.concatenate([coeffs, [1.0]])


def _polish_roots(coeffs: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    deriv = legendre.legder(coeffs)
    for _ in range(steps):
        roots = roots - legendre.legval(roots, coeffs) / legendre.legval(roots, deriv)
    return roots


@functools.lru_cache(maxsize=None)
def kronrod_rule(rule: QuadRule) -> KronrodRule:
    """
    Build the Gauss-Kronrod rule for the given pair

    Args:
        rule: Which Gauss-Kronrod pair to build

    Returns:
        KronrodRule with 2n+1 sorted nodes
    """
    n = QuadRule(rule).gauss_points
    gauss_x, gauss_w = legendre.leggauss(n)

    coeffs = _stieltjes_coefficients(n)
    extra = np.sort(np.real(legendre.legroots(coeffs)))
    extra = _polish_roots(coeffs, extra)
    extra = 0.5 * (extra - extra[::-1])  # exact symmetry about 0

    nodes = np.concatenate([gauss_x, extra])
    embedded = np.concatenate([gauss_w, np.zeros_like(extra)])
    order = np.argsort(nodes)
    nodes, embedded = nodes[order], embedded[order]

    # interpolatory weights: exact for P_0..P_(2n)
    moments = np.zeros(2 * n + 1)
    moments[0] = 2.0
    vander = legendre.legvander(nodes, 2 * n).T
    weights = np.linalg.solve(vander, moments)
    weights = 0.5 * (weights + weights[::-1])

    return KronrodRule(nodes=nodes, kronrod_weights=weights, gauss_weights=embedded)
