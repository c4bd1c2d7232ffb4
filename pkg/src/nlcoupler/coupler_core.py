"""Exact input-output coefficients of the nonlinear two-waveguide coupler.

In the frame rotating with the pump, the field operators A (mode 1) and
B (mode 2) obey the closed linear system

    dA/dt = -i D1 A - 2i l1 A^+ - i l3 B - i l4 B^+
    dB/dt = -i D2 B - 2i l2 B^+ - i l3 A - i l4 A^+

whose solution is the Bogoliubov map

    A(t) = K1 a1 + L1 a1^+ + M1 a2 + N1 a2^+
    B(t) = K2 a2 + L2 a2^+ + M2 a1 + N2 a1^+.

Writing A = u + i w the quadrature vectors obey u'' = -P Q u with 2x2 real
matrices P and Q.  The eigenvalues of P Q are the squared dressed
frequencies.  Every time dependence of the solution is built from
cos(sqrt(e) t) and sin(sqrt(e) t)/sqrt(e), which are entire functions of
e, so the evaluation below uses divided differences of these functions
between the two eigenvalues.  That form has no square-root branch choices
and stays finite when the eigenvalues coincide or when a coupling
combination vanishes.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import spherical_jn

from .errors import BranchAmbiguity

SINC_SERIES_CUTOFF = 1e-4
# Below this value of |e2 - e1| t^2 the sine divided difference is taken
# from a Taylor expansion around the midpoint instead of the raw quotient.
DIVIDED_DIFFERENCE_SWITCH = 1e-2
DEFAULT_SYMPLECTIC_TOL = 1e-9


@dataclass(frozen=True)
class CouplerParams:
    """Physical constants of the coupler.

    lambda1, lambda2 are the subharmonic-generation rates, lambda3 the linear
    evanescent coupling and lambda4 the nonlinear (parametric) exchange rate.
    omega_j are mode frequencies and mu_j pump-frame frequencies; only the
    detunings delta_j = omega_j + mu_j / 2 enter the dynamics.
    """

    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float
    omega1: float = 0.0
    omega2: float = 0.0
    mu1: float = 0.0
    mu2: float = 0.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4",
                     "omega1", "omega2", "mu1", "mu2"):
            value = getattr(self, name)
            if isinstance(value, complex) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))

    @classmethod
    def from_detunings(cls, lambda1, lambda2, lambda3, lambda4,
                       delta1=0.0, delta2=0.0) -> "CouplerParams":
        """Build parameters with the given effective detunings and zero pump frequencies."""
        return cls(lambda1, lambda2, lambda3, lambda4, omega1=delta1, omega2=delta2)

    @property
    def delta1(self) -> float:
        return self.omega1 + 0.5 * self.mu1

    @property
    def delta2(self) -> float:
        return self.omega2 + 0.5 * self.mu2

    def phases(self, t: float) -> tuple[float, float]:
        """Fixed pump phases phi1(t) = (mu2 - mu1) t / 2 and phi2(t) = (mu2 + mu1) t / 2."""
        return 0.5 * (self.mu2 - self.mu1) * t, 0.5 * (self.mu2 + self.mu1) * t

    def generator(self) -> np.ndarray:
        """Matrix G with d/dt (A, A^+, B, B^+) = -i G (A, A^+, B, B^+)."""
        d1, d2 = self.delta1, self.delta2
        l1, l2, l3, l4 = self.lambda1, self.lambda2, self.lambda3, self.lambda4
        return np.array([
            [d1, 2 * l1, l3, l4],
            [-2 * l1, -d1, -l4, -l3],
            [l3, l4, d2, 2 * l2],
            [-l4, -l3, -2 * l2, -d2],
        ], dtype=float)


@dataclass(frozen=True)
class SpectralData:
    lambda_plus: float
    lambda_minus: float
    k_plus: float
    k_minus: float
    j_plus: float
    j_minus: float
    g1: float
    g2: float
    theta: complex
    omega1_sq: float
    omega2_sq: float
    omega_bar_1: complex
    omega_bar_2: complex
    # Squared dressed frequencies and their difference (the discriminant
    # root).  These are what the evaluation actually uses.
    omega_bar_1_sq: complex
    omega_bar_2_sq: complex
    discriminant_root: complex


@dataclass(frozen=True)
class BasisFunctions:
    """Time functions from which all coefficients are assembled.

    cfn and sfn carry the factor g1, while cfn_prime and sfn_prime carry g2;
    (g2/g1) * C is therefore available even when g1 = 0.
    """

    t: float
    f1: complex
    f2: complex
    g1fn: complex
    g2fn: complex
    cfn: complex
    sfn: complex
    cfn_prime: complex
    sfn_prime: complex


@dataclass(frozen=True)
class EvolutionCoefficients:
    t: float
    k1: complex
    l1: complex
    m1: complex
    n1: complex
    k2: complex
    l2: complex
    m2: complex
    n2: complex

    def mode(self, j: int) -> tuple[complex, complex, complex, complex]:
        """(K_j, L_j, M_j, N_j): own-mode pair first, cross-mode pair second."""
        if j == 1:
            return self.k1, self.l1, self.m1, self.n1
        if j == 2:
            return self.k2, self.l2, self.m2, self.n2
        raise ValueError(f"mode must be 1 or 2, got {j!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.l1, self.m1, self.n1,
                         self.k2, self.l2, self.m2, self.n2], dtype=complex)

    @classmethod
    def identity(cls, t: float = 0.0) -> "EvolutionCoefficients":
        return cls(t, 1, 0, 0, 0, 1, 0, 0, 0)


class RegimeTag(str, Enum):
    OSCILLATORY = "Oscillatory"
    AMPLIFYING = "Amplifying"
    MIXED = "Mixed"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    detail: str


@dataclass(frozen=True)
class SymplecticReport:
    """Residuals of the three commutator-preservation identities.

    ``residuals`` are absolute; ``relative`` divides each by
    max(1, sum of magnitudes of the terms in that identity), which is the
    meaningful accuracy measure once the coefficients grow exponentially.
    """

    residuals: tuple[float, float, float]
    relative: tuple[float, float, float]

    @property
    def max_abs(self) -> float:
        return max(self.residuals)

    @property
    def max_relative(self) -> float:
        return max(self.relative)


def derive_spectral(params: CouplerParams) -> SpectralData:
    lp = params.lambda3 + params.lambda4
    lm = params.lambda3 - params.lambda4
    kp = params.delta1 + 2 * params.lambda1
    km = params.delta1 - 2 * params.lambda1
    jp = params.delta2 + 2 * params.lambda2
    jm = params.delta2 - 2 * params.lambda2

    g1 = km * lp + lm * jp
    g2 = kp * lm + lp * jm
    om1 = lm * lp + km * kp
    om2 = lm * lp + jm * jp

    denom = jm * jp - km * kp          # equals om2 - om1
    prod = g1 * g2
    root = cmath.sqrt(denom * denom + 4 * prod)
    mean = 0.5 * (om1 + om2)
    e1 = mean - 0.5 * root
    e2 = mean + 0.5 * root

    if prod >= 0:
        theta = complex(0.5 * math.atan2(2 * math.sqrt(prod), denom))
    elif denom == 0:
        theta = complex(math.pi / 4)
    else:
        # The argument is +-i when the discriminant vanishes and theta is then
        # infinite; theta is reported only and never used in the evaluation.
        with np.errstate(divide="ignore", invalid="ignore"):
            theta = 0.5 * complex(np.arctan(2 * cmath.sqrt(prod) / denom))

    return SpectralData(
        lambda_plus=lp, lambda_minus=lm, k_plus=kp, k_minus=km,
        j_plus=jp, j_minus=jm, g1=g1, g2=g2, theta=theta,
        omega1_sq=om1, omega2_sq=om2,
        omega_bar_1=cmath.sqrt(e1), omega_bar_2=cmath.sqrt(e2),
        omega_bar_1_sq=e1, omega_bar_2_sq=e2, discriminant_root=root,
    )


def _sinc(z: complex) -> complex:
    if abs(z) < SINC_SERIES_CUTOFF:
        z2 = z * z
        return 1 - z2 / 6 + z2 * z2 / 120
    return cmath.sin(z) / z


def _q_series(n: int, y: complex) -> complex:
    # sum_k (-y/2)^k / (k! (2n+2k+1)!!)
    term = 1.0 / _double_factorial(2 * n + 1)
    total = term
    k = 0
    while True:
        k += 1
        term *= (-0.5 * y) / (k * (2 * n + 2 * k + 1))
        total += term
        if abs(term) <= 1e-17 * abs(total) or k > 200:
            return total


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _q(n: int, y: complex) -> complex:
    """j_n(sqrt(y)) / sqrt(y)^n, an entire function of y."""
    if abs(y) < 1.0:
        return _q_series(n, y)
    x = cmath.sqrt(y)
    return complex(spherical_jn(n, x)) / x ** n


def _cos_sin(e: complex, t: float) -> tuple[complex, complex]:
    x = cmath.sqrt(e) * t
    return cmath.cos(x), t * _sinc(x)


def _split_roots(r1: complex, r2: complex, diff: complex) -> tuple[complex, complex]:
    """Return (r1 + r2, r2 - r1) using diff = r2^2 - r1^2 for the smaller one."""
    total = r1 + r2
    gap = r2 - r1
    if abs(total) >= abs(gap):
        if total != 0:
            gap = diff / total
    else:
        total = diff / gap
    return total, gap


def _dd_cos(e1: complex, e2: complex, diff: complex, t: float) -> complex:
    """(cos(sqrt(e2) t) - cos(sqrt(e1) t)) / (e2 - e1), written as a sinc product."""
    total, gap = _split_roots(cmath.sqrt(e1), cmath.sqrt(e2), diff)
    return -0.5 * t * t * _sinc(0.5 * total * t) * _sinc(0.5 * gap * t)


def _dd_sin(e1: complex, e2: complex, diff: complex, t: float) -> complex:
    """(s(e2) - s(e1)) / (e2 - e1) for s(e) = sin(sqrt(e) t) / sqrt(e)."""
    if abs(diff) * t * t >= DIVIDED_DIFFERENCE_SWITCH:
        return (_cos_sin(e2, t)[1] - _cos_sin(e1, t)[1]) / diff
    # Odd Taylor terms of s around the midpoint; the k-th e-derivative of
    # s(e) is t^(2k+1) (-1/2)^k q_k(e t^2).
    mid = 0.5 * (e1 + e2)
    y = mid * t * t
    h2 = (0.5 * diff) ** 2
    total = 0j
    weight = 1.0
    for k in (1, 3, 5, 7):
        deriv = t ** (2 * k + 1) * (-0.5) ** k * _q(k, y)
        total += deriv * weight
        weight *= h2 / ((k + 1) * (k + 2))
    return total


def basis_functions(spectral: SpectralData, t: float) -> BasisFunctions:
    t = float(t)
    e1, e2 = spectral.omega_bar_1_sq, spectral.omega_bar_2_sq
    diff = spectral.discriminant_root
    c1, s1 = _cos_sin(e1, t)
    c2, s2 = _cos_sin(e2, t)
    ddc = _dd_cos(e1, e2, diff, t)
    dds = _dd_sin(e1, e2, diff, t)
    half_d = 0.5 * (spectral.omega2_sq - spectral.omega1_sq)
    c_mean = 0.5 * (c1 + c2)
    s_mean = 0.5 * (s1 + s2)
    return BasisFunctions(
        t=t,
        f1=c_mean - half_d * ddc,
        f2=c_mean + half_d * ddc,
        g1fn=s_mean - half_d * dds,
        g2fn=s_mean + half_d * dds,
        cfn=spectral.g1 * ddc,
        sfn=spectral.g1 * dds,
        cfn_prime=spectral.g2 * ddc,
        sfn_prime=spectral.g2 * dds,
    )


def coefficients_from_basis(spectral: SpectralData, b: BasisFunctions) -> EvolutionCoefficients:
    kp, km = spectral.k_plus, spectral.k_minus
    jp, jm = spectral.j_plus, spectral.j_minus
    lp, lm = spectral.lambda_plus, spectral.lambda_minus
    C, Cp, S, Sp = b.cfn, b.cfn_prime, b.sfn, b.sfn_prime
    G1, G2 = b.g1fn, b.g2fn
    k1 = b.f1 - 0.5j * ((kp + km) * G1 + lp * Sp + lm * S)
    l1 = -0.5j * ((kp - km) * G1 + lp * Sp - lm * S)
    m1 = 0.5 * ((C + Cp) - 1j * ((lp + lm) * G1 + jp * Sp + jm * S))
    n1 = 0.5 * ((C - Cp) - 1j * ((lp - lm) * G1 + jp * Sp - jm * S))
    k2 = b.f2 - 0.5j * ((jp + jm) * G2 + lp * S + lm * Sp)
    l2 = -0.5j * ((jp - jm) * G2 + lp * S - lm * Sp)
    m2 = 0.5 * ((C + Cp) - 1j * ((lp + lm) * G2 + kp * S + km * Sp))
    n2 = 0.5 * ((Cp - C) - 1j * ((lp - lm) * G2 + kp * S - km * Sp))
    return EvolutionCoefficients(b.t, k1, l1, m1, n1, k2, l2, m2, n2)


def evolution_coefficients(params: CouplerParams, t: float, *,
                           tol: float = DEFAULT_SYMPLECTIC_TOL,
                           spectral: SpectralData | None = None) -> EvolutionCoefficients:
    """Closed-form K, L, M, N at time t.

    Raises BranchAmbiguity when the relative symplectic residual exceeds
    ``tol``; callers may then use ``fock_oracle.ode_coefficients``.
    """
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if spectral is None:
        spectral = derive_spectral(params)
    coeffs = coefficients_from_basis(spectral, basis_functions(spectral, t))
    report = check_symplectic(coeffs)
    if not report.max_relative <= tol:
        raise BranchAmbiguity(report.max_relative, tol)
    return coeffs


def check_symplectic(coeffs: EvolutionCoefficients) -> SymplecticReport:
    K1, L1, M1, N1 = coeffs.mode(1)
    K2, L2, M2, N2 = coeffs.mode(2)
    res = []
    scale = []
    for K, L, M, N in ((K1, L1, M1, N1), (K2, L2, M2, N2)):
        terms = (abs(K) ** 2, abs(M) ** 2, abs(L) ** 2, abs(N) ** 2)
        res.append(abs(terms[0] + terms[1] - 1 - terms[2] - terms[3]))
        scale.append(sum(terms))
    ra = max(res)
    sa = max(scale)
    b_terms = (K1 * N2, M1 * L2, N1 * K2, L1 * M2)
    rb = abs(b_terms[0] + b_terms[1] - b_terms[2] - b_terms[3])
    sb = sum(abs(x) for x in b_terms)
    c_terms = (K1 * M2.conjugate(), M1 * K2.conjugate(),
               L1 * N2.conjugate(), N1 * L2.conjugate())
    rc = abs(c_terms[0] + c_terms[1] - c_terms[2] - c_terms[3])
    sc = sum(abs(x) for x in c_terms)
    residuals = (float(ra), float(rb), float(rc))
    relative = tuple(float(r / max(1.0, s)) for r, s in zip(residuals, (sa, sb, sc)))
    return SymplecticReport(residuals, relative)


def transfer_matrix(coeffs: EvolutionCoefficients) -> np.ndarray:
    """Real 4x4 map of the quadrature vector (x1, y1, x2, y2), with a = x + i y."""
    rows = []
    for j in (1, 2):
        K, L, M, N = coeffs.mode(j)
        own = (K + L, 1j * (K - L))
        other = (M + N, 1j * (M - N))
        cols = own + other if j == 1 else other + own
        rows.append([c.real for c in cols])
        rows.append([c.imag for c in cols])
    return np.array(rows, dtype=float)


def symplectic_form() -> np.ndarray:
    """Commutator matrix of (x1, y1, x2, y2) in units of i/2."""
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(2), block)


def classify_regime(spectral: SpectralData, tol: float = 1e-12) -> Regime:
    labels = []
    negative = False
    complex_ = False
    for name, e in (("Omega_bar_1^2", spectral.omega_bar_1_sq),
                    ("Omega_bar_2^2", spectral.omega_bar_2_sq)):
        scale = max(1.0, abs(e))
        if abs(e.imag) > tol * scale:
            complex_ = True
            labels.append(f"{name} complex")
        elif e.real < -tol * scale:
            negative = True
            labels.append(f"{name} negative")
        elif e.real <= tol * scale:
            labels.append(f"{name} zero")
        else:
            labels.append(f"{name} positive")
    if negative:
        tag = RegimeTag.AMPLIFYING
    elif complex_:
        tag = RegimeTag.MIXED
    else:
        tag = RegimeTag.OSCILLATORY
    return Regime(tag, ", ".join(labels))
