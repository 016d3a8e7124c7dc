"""Normalized Hermite functions and Gauss-Hermite quadrature helpers.

The Hermite function of order m is

    psi_m(w) = c_m H_m(w) exp(-w^2 / 2),   c_m = 2^{-m/2} (m!)^{-1/2} pi^{-1/4},

an orthonormal basis of L^2(R).  Values are produced by the normalized
three-term recurrence, which is stable for all orders, unlike evaluating the
monomial form of H_m whose coefficients overflow near m ~ 85.
"""

from __future__ import annotations

import numpy as np
from scipy.special import roots_hermite

__all__ = [
    "hermite_function_table",
    "hermite_function",
    "hermite_polynomial_table",
    "gauss_hermite_rule",
    "HermiteEvaluator",
]


def hermite_function_table(order: int, w) -> np.ndarray:
    """Table of psi_0..psi_{order-1} at the points w.

    Returns an array of shape w.shape + (order,).  Uses the recurrence

        psi_{m+1} = sqrt(2/(m+1)) w psi_m - sqrt(m/(m+1)) psi_{m-1}
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    w = np.asarray(w, dtype=float)
    out = np.empty(w.shape + (order,))
    out[..., 0] = np.pi ** (-0.25) * np.exp(-0.5 * w * w)
    if order > 1:
        out[..., 1] = np.sqrt(2.0) * w * out[..., 0]
    for m in range(1, order - 1):
        out[..., m + 1] = (
            np.sqrt(2.0 / (m + 1)) * w * out[..., m]
            - np.sqrt(m / (m + 1.0)) * out[..., m - 1]
        )
    return out


def hermite_function(m: int, w) -> np.ndarray:
    """Single normalized Hermite function psi_m(w)."""
    if m < 0:
        raise ValueError("order must be non-negative")
    return hermite_function_table(m + 1, w)[..., m]


def hermite_polynomial_table(order: int, w) -> np.ndarray:
    """Table of c_m H_m(w) without the Gaussian factor, shape w.shape + (order,).

    Satisfies psi_m(w) = table[..., m] * exp(-w^2/2).  Used by quadrature
    code that folds the Gaussian into the weight; entries grow with |w| so
    callers must keep |w| within the range where c_m H_m stays representable
    (|w| ~ 40 is safe for order <= 64).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    w = np.asarray(w, dtype=float)
    out = np.empty(w.shape + (order,))
    out[..., 0] = np.pi ** (-0.25)
    if order > 1:
        out[..., 1] = np.sqrt(2.0) * w * out[..., 0]
    for m in range(1, order - 1):
        out[..., m + 1] = (
            np.sqrt(2.0 / (m + 1)) * w * out[..., m]
            - np.sqrt(m / (m + 1.0)) * out[..., m - 1]
        )
    return out


def gauss_hermite_rule(count: int):
    """Nodes and weights for integration against exp(-u^2) on R."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return roots_hermite(count)


class HermiteEvaluator:
    """Cached evaluator for the first `order` Hermite functions.

    Bundles the truncation order with the quadrature rule sized to integrate
    products psi_k psi_l exactly, which the orthonormality checks rely on.
    """

    def __init__(self, order: int, quad_count: int | None = None):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.quad_count = int(quad_count) if quad_count is not None else max(2 * order + 1, 32)
        self._rule = None

    @property
    def rule(self):
        if self._rule is None:
            self._rule = gauss_hermite_rule(self.quad_count)
        return self._rule

    def table(self, w) -> np.ndarray:
        return hermite_function_table(self.order, w)

    def overlap_matrix(self) -> np.ndarray:
        """Gram matrix int psi_k psi_l dw computed by the stored rule."""
        u, wq = self.rule
        polys = hermite_polynomial_table(self.order, u)
        # psi_k psi_l = (c H_k)(c H_l) exp(-u^2); the rule weight carries exp(-u^2)
        return np.einsum("i,ik,il->kl", wq, polys, polys)
