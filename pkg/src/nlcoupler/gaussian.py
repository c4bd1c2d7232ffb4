"""First and second moments of the output fields.

The coupler map is linear, so the output means and (symmetrized) second
moments follow from the input ones for every input family.  For coherent
and thermal inputs these moments determine the state completely; for Fock
inputs they are still exact second moments, which is all the quadrature
variances need.

Quadrature convention: a = x + i y, vacuum variance of x and y is 1/4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupler_core import EvolutionCoefficients, transfer_matrix
from .states import Coherent, Fock, InputState, Thermal, check_mode


@dataclass(frozen=True)
class ModeMoments:
    """Single-mode output moments.

    amplitude: <a>; n_central: <da^+ da>; m_central: <da da> with da = a - <a>.
    """

    amplitude: complex
    n_central: float
    m_central: complex


def input_occupations(state: InputState) -> tuple[float, float]:
    """Occupations playing the role of thermal means in second-moment formulas."""
    if isinstance(state, Thermal):
        return state.nbar1, state.nbar2
    if isinstance(state, Fock):
        return float(state.n), float(state.m)
    if isinstance(state, Coherent):
        return 0.0, 0.0
    raise TypeError(f"unknown input state {state!r}")


def input_amplitudes(state: InputState) -> tuple[complex, complex]:
    if isinstance(state, Coherent):
        return state.alpha1, state.alpha2
    return 0j, 0j


def mode_moments(coeffs: EvolutionCoefficients, state: InputState, mode: int) -> ModeMoments:
    check_mode(mode)
    K, L, M, N = coeffs.mode(mode)
    own_n, other_n = input_occupations(state)
    own_a, other_a = input_amplitudes(state)
    if mode == 2:
        own_n, other_n = other_n, own_n
        own_a, other_a = other_a, own_a
    amp = K * own_a + L * own_a.conjugate() + M * other_a + N * other_a.conjugate()
    n_c = (own_n * (abs(K) ** 2 + abs(L) ** 2) + other_n * (abs(M) ** 2 + abs(N) ** 2)
           + abs(L) ** 2 + abs(N) ** 2)
    m_c = (2 * own_n + 1) * K * L + (2 * other_n + 1) * M * N
    return ModeMoments(complex(amp), float(n_c), complex(m_c))


def input_covariance(state: InputState) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and symmetrized covariance of (x1, y1, x2, y2) before the coupler."""
    n1, n2 = input_occupations(state)
    a1, a2 = input_amplitudes(state)
    mean = np.array([a1.real, a1.imag, a2.real, a2.imag])
    cov = np.diag([(2 * n1 + 1) / 4, (2 * n1 + 1) / 4, (2 * n2 + 1) / 4, (2 * n2 + 1) / 4])
    return mean, cov


def output_covariance(coeffs: EvolutionCoefficients, state: InputState) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and symmetrized covariance of (x1, y1, x2, y2) at time t."""
    T = transfer_matrix(coeffs)
    mean, cov = input_covariance(state)
    out = T @ cov @ T.T
    return T @ mean, 0.5 * (out + out.T)


def mode_block(mean: np.ndarray, cov: np.ndarray, mode: int) -> tuple[np.ndarray, np.ndarray]:
    check_mode(mode)
    sl = slice(0, 2) if mode == 1 else slice(2, 4)
    return mean[sl], cov[sl, sl]


def s_ordered_covariance(cov: np.ndarray, s: float) -> np.ndarray:
    """Covariance of the s-ordered quasiprobability: symmetric covariance minus s/4."""
    return cov - 0.25 * s * np.eye(cov.shape[0])
