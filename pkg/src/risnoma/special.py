"""Numerical primitives shared by the analytical BER code.

Gaussian tail probability, Gauss-Legendre rules on [0, pi/2] and an
exponential that never raises on underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureRule",
    "erfc",
    "gaussian_q",
    "gauss_legendre_half_pi",
    "stable_exp_ratio",
    "DEFAULT_QUAD_ORDER",
]

DEFAULT_QUAD_ORDER = 64

_SQRT_PI = math.sqrt(math.pi)
# below this the Maclaurin series of erf is used, above it the continued fraction
_SERIES_CUTOFF = 2.0
_EXP_UNDERFLOW = -745.0


def _erf_series(z: float) -> float:
    # erf(z) = 2/sqrt(pi) * exp(-z^2) * sum_k 2^k z^(2k+1) / (2k+1)!!
    term = z
    total = z
    z2 = 2.0 * z * z
    k = 0
    while True:
        k += 1
        term *= z2 / (2 * k + 1)
        total += term
        if term <= 1e-17 * total:
            break
    return 2.0 / _SQRT_PI * math.exp(-z * z) * total


def _erfc_cfrac(z: float) -> float:
    """Laplace continued fraction, evaluated with the modified Lentz method.

    erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    """
    tiny = 1e-300
    f = z
    c = z
    d = 0.0
    for k in range(1, 5000):
        a = 0.5 * k
        d = z + a * d
        d = tiny if d == 0.0 else d
        c = z + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-z * z) / (_SQRT_PI * f)


def erfc(z: float) -> float:
    """Complementary error function, accurate to ~1e-13 relative where normal."""
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"erfc requires a finite argument, got {z}")
    if z < 0.0:
        return 2.0 - erfc(-z)
    if z < _SERIES_CUTOFF:
        return 1.0 - _erf_series(z)
    return _erfc_cfrac(z)


def gaussian_q(x: float) -> float:
    """Upper tail P[Z > x] of the standard normal distribution.

    Raises
    ------
    ValueError
        If ``x`` is not finite.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"gaussian_q requires a finite argument, got {x}")
    return 0.5 * erfc(x / math.sqrt(2.0))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on the open interval (0, pi/2)."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Apply the rule to a vectorised integrand."""
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=None)
def gauss_legendre_half_pi(order: int = DEFAULT_QUAD_ORDER) -> QuadratureRule:
    """Gauss-Legendre rule of ``order`` nodes mapped affinely onto [0, pi/2].

    The endpoints are never sampled, which keeps integrands containing
    ``1/sin(xi)**2`` finite without special casing.
    """
    if int(order) != order or order < 2:
        raise ValueError(f"quadrature order must be an integer >= 2, got {order}")
    order = int(order)
    t, w = np.polynomial.legendre.leggauss(order)
    half = math.pi / 4.0
    nodes = half * (t + 1.0)
    weights = half * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(order=order, nodes=nodes, weights=weights)


def stable_exp_ratio(numer: float, denom: float) -> float:
    """exp(numer/denom), returning exactly 0.0 once the ratio drops below -745."""
    if not denom > 0.0:
        raise ValueError(f"denominator must be positive, got {denom}")
    r = numer / denom
    if r < _EXP_UNDERFLOW:
        return 0.0
    return math.exp(r)
