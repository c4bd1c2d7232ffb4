"""Quadrature squeezing, photon-number moments and g2 of the output modes.

Squeezing measures are S = 4 Var(X) - 1 and Q = 4 Var(Y) - 1 with
X = (a + a^+)/2 and Y = (a - a^+)/(2i) in the rotating frame.  Negative
values mean noise below the vacuum level.
"""

from __future__ import annotations

from dataclasses import dataclass

from .coupler_core import EvolutionCoefficients
from .errors import ZeroIntensity
from .gaussian import ModeMoments, mode_moments
from .states import Coherent, Fock, InputState, Thermal, check_mode

__all__ = [
    "Coherent", "Fock", "Thermal", "InputState",
    "StatsKernels", "QuadratureReport", "PhotonStatistics",
    "stats_kernels", "mean_photon", "photon_variance", "g2", "squeezing",
    "photon_statistics", "ZERO_INTENSITY_FLOOR",
]

ZERO_INTENSITY_FLOOR = 1e-30


@dataclass(frozen=True)
class StatsKernels:
    """Bilinear combinations of the coefficients of one output mode."""

    v1: float
    v2: float
    v3: float
    v4: complex
    v5: complex
    v6: complex
    v7: complex

    def sum_rule_residual(self) -> float:
        """V1 + V2 - 1 - 2 V3, zero for exact coefficients."""
        return self.v1 + self.v2 - 1 - 2 * self.v3


@dataclass(frozen=True)
class QuadratureReport:
    s1: float
    q1: float
    s2: float
    q2: float

    @property
    def flags(self) -> dict[str, bool]:
        return {"s1": self.s1 < 0, "q1": self.q1 < 0, "s2": self.s2 < 0, "q2": self.q2 < 0}

    def uncertainty_products(self) -> tuple[float, float]:
        return (self.s1 + 1) * (self.q1 + 1), (self.s2 + 1) * (self.q2 + 1)


@dataclass(frozen=True)
class PhotonStatistics:
    mean: float
    variance: float
    g2: float


def stats_kernels(coeffs: EvolutionCoefficients, mode: int) -> StatsKernels:
    check_mode(mode)
    K, L, M, N = coeffs.mode(mode)
    Kc, Lc, Mc, Nc = K.conjugate(), L.conjugate(), M.conjugate(), N.conjugate()
    return StatsKernels(
        v1=abs(K) ** 2 + abs(L) ** 2,
        v2=abs(M) ** 2 + abs(N) ** 2,
        v3=abs(N) ** 2 + abs(L) ** 2,
        v4=Kc * L,
        v5=Mc * N,
        v6=K * Nc + Lc * M,
        v7=M * Kc + Nc * L,
    )


def _own_other(state: Coherent, mode: int) -> tuple[complex, complex]:
    if mode == 1:
        return state.alpha1, state.alpha2
    return state.alpha2, state.alpha1


def mean_photon(coeffs: EvolutionCoefficients, state: InputState, mode: int) -> float:
    """<a_j^+ a_j> at the time of ``coeffs``."""
    v = stats_kernels(coeffs, mode)
    if isinstance(state, Coherent):
        a, b = _own_other(state, mode)
        cross = (a * a * v.v4.conjugate() + b * b * v.v5.conjugate()
                 + a.conjugate() * b * v.v7 + a * b * v.v6)
        return float(abs(a) ** 2 * v.v1 + abs(b) ** 2 * v.v2 + v.v3 + 2 * cross.real)
    if isinstance(state, Fock):
        n, m = (state.n, state.m) if mode == 1 else (state.m, state.n)
        return float(n * v.v1 + m * v.v2 + v.v3)
    if isinstance(state, Thermal):
        n1, n2 = (state.nbar1, state.nbar2) if mode == 1 else (state.nbar2, state.nbar1)
        return float(n1 * v.v1 + n2 * v.v2 + v.v3)
    raise TypeError(f"unknown input state {state!r}")


def _gaussian_variance(mom: ModeMoments) -> float:
    # Moment factorization for a Gaussian state with mean amplitude a,
    # N = <da^+ da>, M = <da da>.
    a, N, M = mom.amplitude, mom.n_central, mom.m_central
    return float(N * (N + 1) + abs(M) ** 2 + abs(a) ** 2 * (2 * N + 1)
                 + 2 * (a.conjugate() ** 2 * M).real)


def photon_variance(coeffs: EvolutionCoefficients, state: InputState, mode: int) -> float:
    """<(Delta n_j)^2> at the time of ``coeffs``."""
    v = stats_kernels(coeffs, mode)
    if isinstance(state, Coherent):
        a, b = _own_other(state, mode)
        aa, bb = abs(a) ** 2, abs(b) ** 2
        v4s, v5s, v6s, v7s = (x.conjugate() for x in (v.v4, v.v5, v.v6, v.v7))
        real_part = ((v.v1 ** 2 + 4 * abs(v.v4) ** 2) * aa
                     + (v.v2 ** 2 + 4 * abs(v.v5) ** 2) * bb
                     + (abs(v.v7) ** 2 + abs(v.v6) ** 2) * (aa + bb)
                     + abs(v.v6) ** 2 + 2 * abs(v.v4) ** 2 + 2 * abs(v.v5) ** 2)
        cross = (a * a * (2 * v.v1 * v4s + v7s * v.v6)
                 + b * b * (2 * v.v2 * v5s + v.v7 * v.v6)
                 + a * b * (v.v1 * v.v6 + 2 * v4s * v.v7 + 2 * v5s * v7s + v.v2 * v.v6)
                 + a.conjugate() * b * (v.v1 * v.v7 + 2 * v.v4 * v.v6
                                        + 2 * v5s * v6s + v.v2 * v.v7))
        return float(real_part + 2 * cross.real)
    if isinstance(state, Fock):
        n, m = (state.n, state.m) if mode == 1 else (state.m, state.n)
        # The |V6|^2 term carries a vacuum contribution (1 + n + m + 2nm) that
        # is absent for |V7|^2; it follows from the Fock fourth moments and is
        # confirmed against the truncated Fock-space propagation.
        return float(2 * abs(v.v4) ** 2 * (n * n + n + 1)
                     + 2 * abs(v.v5) ** 2 * (m * m + m + 1)
                     + abs(v.v7) ** 2 * (n + m + 2 * n * m)
                     + abs(v.v6) ** 2 * (1 + n + m + 2 * n * m))
    if isinstance(state, Thermal):
        return _gaussian_variance(mode_moments(coeffs, state, mode))
    raise TypeError(f"unknown input state {state!r}")


def g2(coeffs: EvolutionCoefficients, state: InputState, mode: int) -> float:
    """Normalized second-order correlation 1 + (variance - mean) / mean^2."""
    mean = mean_photon(coeffs, state, mode)
    if mean < ZERO_INTENSITY_FLOOR:
        raise ZeroIntensity(f"mean photon number {mean:.3e} of mode {mode} is below "
                            f"{ZERO_INTENSITY_FLOOR:.0e}; g2 is undefined")
    return 1.0 + (photon_variance(coeffs, state, mode) - mean) / mean ** 2


def photon_statistics(coeffs: EvolutionCoefficients, state: InputState, mode: int) -> PhotonStatistics:
    return PhotonStatistics(mean_photon(coeffs, state, mode),
                            photon_variance(coeffs, state, mode),
                            g2(coeffs, state, mode))


def squeezing(coeffs: EvolutionCoefficients, state: InputState) -> QuadratureReport:
    """S_j and Q_j for both modes.

    S = 2N + (2n1+1)(L K + c.c.) + (2n2+1)(M N + c.c.) and Q likewise with
    the sign of the phase-sensitive terms reversed, where
    N = n1 (|K|^2+|L|^2) + n2 (|M|^2+|N|^2) + |L|^2 + |N|^2.  Coherent
    inputs use n1 = n2 = 0 and Fock inputs use their occupations.
    """
    out = []
    for mode in (1, 2):
        mom = mode_moments(coeffs, state, mode)
        s = 2 * mom.n_central + 2 * mom.m_central.real
        q = 2 * mom.n_central - 2 * mom.m_central.real
        out.extend([float(s), float(q)])
    return QuadratureReport(*out)
