"""Laguerre, Hermite and Jacobi polynomials for real or complex arguments."""

from __future__ import annotations

import numpy as np
from scipy.special import binom


def laguerre(n: int, x, alpha: float = 0.0):
    """Generalized Laguerre polynomial L_n^(alpha)(x) by three-term recurrence."""
    n = _degree(n)
    x = np.asarray(x)
    prev = np.ones_like(x, dtype=np.result_type(x, float))
    if n == 0:
        return prev
    cur = 1 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x); x may be complex."""
    n = _degree(n)
    x = np.asarray(x)
    prev = np.ones_like(x, dtype=np.result_type(x, float))
    if n == 0:
        return prev
    cur = 2 * x
    for k in range(1, n):
        prev, cur = cur, 2 * x * cur - 2 * k * prev
    return cur


def jacobi(r: int, c: float, d: float, x):
    """Jacobi polynomial P_r^(c,d)(x) as the finite sum

        sum_k (-1)^(r-k) C(r+d, r-k) C(r+k+c+d, k) ((x+1)/2)^k.
    """
    r = _degree(r)
    x = np.asarray(x)
    half = (x + 1) / 2
    total = np.zeros_like(half, dtype=np.result_type(half, float))
    for k in range(r + 1):
        total = total + (-1) ** (r - k) * binom(r + d, r - k) * binom(r + k + c + d, k) * half ** k
    return total


def special_polynomials(kind: str, degrees, x):
    """Dispatch by name: 'laguerre' (n or (n, alpha)), 'hermite' (n), 'jacobi' ((r, c, d))."""
    kind = kind.lower()
    if kind == "laguerre":
        if np.ndim(degrees) == 0:
            return laguerre(degrees, x)
        n, alpha = degrees
        return laguerre(n, x, alpha)
    if kind == "hermite":
        return hermite(degrees, x)
    if kind == "jacobi":
        r, c, d = degrees
        return jacobi(r, c, d, x)
    raise ValueError(f"unknown polynomial kind {kind!r}")


def _degree(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {n!r}")
    return int(n)
