"""Polynomial smoothstep profiles with closed-form derivatives.

``smoothstep(x, order)`` is the regularized incomplete beta function
``I_x(order+1, order+1)``: a polynomial of degree ``2*order+1`` on [0, 1]
that is 0 for x <= 0, 1 for x >= 1 and C^order across both seams.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import beta, betainc


@lru_cache(maxsize=None)
def _density(order: int) -> Polynomial:
    x = Polynomial([0.0, 1.0])
    return (x**order) * ((1 - x) ** order) / beta(order + 1, order + 1)


def smoothstep(x, order: int = 6, deriv: int = 0) -> np.ndarray:
    """Value or ``deriv``-th derivative of the order-``order`` smoothstep."""
    if order < 1:
        raise ValueError("smoothstep order must be >= 1")
    x = np.asarray(x, dtype=float)
    if deriv == 0:
        return betainc(order + 1, order + 1, np.clip(x, 0.0, 1.0))
    inside = (x > 0.0) & (x < 1.0)
    poly = _density(order).deriv(deriv - 1) if deriv > 1 else _density(order)
    return np.where(inside, poly(np.clip(x, 0.0, 1.0)), 0.0)


def step_down(y, order: int = 6, deriv: int = 0) -> np.ndarray:
    """Profile equal to 1 on (-inf, 1] and 0 on [2, inf)."""
    if deriv == 0:
        return 1.0 - smoothstep(np.asarray(y) - 1.0, order)
    return -smoothstep(np.asarray(y) - 1.0, order, deriv)


def bump(t, lo: float, hi: float, order: int = 6, deriv: int = 0) -> np.ndarray:
    """Compactly supported bump on [lo, hi] with peak value 1 at the midpoint.

    Product of a rising and a falling smoothstep, each spanning half the
    support, so the result is C^order at both support edges.
    """
    if not hi > lo:
        raise ValueError("bump support must satisfy hi > lo")
    t = np.asarray(t, dtype=float)
    half = 0.5 * (hi - lo)
    up = [smoothstep((t - lo) / half, order, k) / half**k for k in range(deriv + 1)]
    down = [(-1) ** k * smoothstep((hi - t) / half, order, k) / half**k for k in range(deriv + 1)]
    # Leibniz rule
    out = np.zeros_like(t)
    for k in range(deriv + 1):
        out = out + comb(deriv, k) * up[k] * down[deriv - k]
    return out



def plateau(t, lo, hi, ramp, order=6):
    """1 on ``[lo + ramp, hi - ramp]``, 0 outside ``(lo, hi)``, smooth ramps."""
    t = np.asarray(t, dtype=float)
    return smoothstep((t - lo) / ramp, order) * smoothstep((hi - t) / ramp, order)
