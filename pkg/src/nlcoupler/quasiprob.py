"""s-parametrized characteristic functions and quasiprobabilities.

Conventions:

* a = x + i y, with the vacuum variance of x and y equal to 1/4;
* C(zeta, s) = Tr[rho D(zeta)] exp(s |zeta|^2 / 2), D(zeta) = exp(zeta a^+ - zeta* a);
* W(alpha, s) = pi^-2 \\int C(zeta, s) exp(alpha zeta* - alpha* zeta) d^2 zeta
  (pi^-4 and a four-dimensional integral for the joint two-mode field),
  normalized so that \\int W d^2 alpha = 1;
* s = 1, 0, -1 select the P, Wigner and Q functions.

For a single mode the selection is the integer 1 or 2, and for the
two-mode field it is the string "joint".

Coherent and thermal inputs stay Gaussian.  Their quasiprobabilities
come from the output quadrature covariance: the s-ordered field is a
normal density whose covariance is the symmetric one minus s/4.

For Fock inputs the single-mode field is
    W = pi^-2 sum_{a<=n, b<=m} C(n,a) C(m,b) [e1^a e2^b] G(e1, e2),
where G is the Gaussian integral obtained by writing each Laguerre factor
as L_n(x) = sum_a C(n,a) [e^a] exp(-e x).  G is an explicit function of
(e1, e2), and its Taylor coefficients are taken with truncated bivariate
series arithmetic.  The result is a finite closed form.

``quasi_transform`` evaluates the same fields by numerical quadrature of
the characteristic function.  When a closed form and the transform
disagree, the transform decides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import Union

import numpy as np

from .coupler_core import EvolutionCoefficients
from .errors import (PNotRepresentable, TruncatedTransform, UnsupportedClosedForm,
                     UnsupportedState)
from .gaussian import mode_block, output_covariance, s_ordered_covariance
from .special import hermite, jacobi, laguerre, special_polynomials
from .states import Coherent, Fock, InputState, Thermal

__all__ = [
    "P_FUNCTION", "WIGNER", "Q_FUNCTION", "JOINT",
    "PhaseSpaceGrid", "QuasiField", "Method", "FockSingleKernel", "CoherentQuasiKernel",
    "ThermalKernels", "PRepresentability",
    "char_fn", "quasi_closed_form", "quasi_field_closed_form", "quasi_transform",
    "moments_from_field", "p_representable", "special_polynomials",
    "fock_single_kernel", "coherent_quasi_kernel", "thermal_kernels",
    "coherent_single_expansion", "thermal_single_expansion", "auto_grid",
    "laguerre", "hermite", "jacobi",
]

P_FUNCTION = 1.0
WIGNER = 0.0
Q_FUNCTION = -1.0
JOINT = "joint"

Selection = Union[int, str]

NORM_TOL = 1e-3
BOUNDARY_TOL = 1e-10


class Method(str, Enum):
    CLOSED_FORM = "ClosedForm"
    TRANSFORM = "Transform"


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform rectangular grid of points alpha = x + i y, x along axis 0."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_re: int
    n_im: int

    def __post_init__(self):
        bounds = (self.re_min, self.re_max, self.im_min, self.im_max)
        if not all(math.isfinite(b) for b in bounds):
            raise ValueError("grid bounds must be finite")
        if self.n_re < 2 or self.n_im < 2:
            raise ValueError("grid needs at least two samples per axis")
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError("grid bounds must be increasing")

    @classmethod
    def square(cls, center: complex, half_width: float, n: int) -> "PhaseSpaceGrid":
        c = complex(center)
        return cls(c.real - half_width, c.real + half_width,
                   c.imag - half_width, c.imag + half_width, n, n)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(self.re_min, self.re_max, self.n_re),
                np.linspace(self.im_min, self.im_max, self.n_im))

    @property
    def cell_area(self) -> float:
        return ((self.re_max - self.re_min) / (self.n_re - 1)
                * (self.im_max - self.im_min) / (self.n_im - 1))

    def points(self) -> np.ndarray:
        x, y = self.axes()
        return x[:, None] + 1j * y[None, :]


@dataclass
class QuasiField:
    """Sampled field; ``values[i, j]`` sits at x_i + i y_j (four indices for joint fields)."""

    grid: Union[PhaseSpaceGrid, tuple]
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def is_joint(self) -> bool:
        return isinstance(self.grid, tuple)

    def cell_volume(self) -> float:
        if self.is_joint:
            return self.grid[0].cell_area * self.grid[1].cell_area
        return self.grid.cell_area

    def riemann_sum(self) -> float:
        return float(np.sum(self.values) * self.cell_volume())


@dataclass(frozen=True)
class PRepresentability:
    representable: bool
    margin: float
    mode_margins: tuple = ()


def _selection(selection) -> Selection:
    if selection in (1, 2):
        return int(selection)
    if isinstance(selection, str):
        if selection.lower() == JOINT:
            return JOINT
        if selection in ("1", "2"):
            return int(selection)
    raise ValueError(f"selection must be 1, 2 or 'joint', got {selection!r}")


# ---------------------------------------------------------------------------
# characteristic functions
# ---------------------------------------------------------------------------

def _input_arguments(coeffs: EvolutionCoefficients, selection: Selection, zeta):
    """Arguments (eta_in1, eta_in2) of the input displacement and sum |zeta|^2.

    The output displacement D_out(zeta) equals D_1(eta_in1) D_2(eta_in2) on
    the input modes.
    """
    if selection == JOINT:
        z1, z2 = (np.asarray(z, dtype=complex) for z in zeta)
        K1, L1, M1, N1 = coeffs.mode(1)
        K2, L2, M2, N2 = coeffs.mode(2)
        eta1 = z1 * np.conj(K1) - np.conj(z1) * L1 + z2 * np.conj(M2) - np.conj(z2) * N2
        eta2 = z1 * np.conj(M1) - np.conj(z1) * N1 + z2 * np.conj(K2) - np.conj(z2) * L2
        return eta1, eta2, np.abs(z1) ** 2 + np.abs(z2) ** 2
    z = np.asarray(zeta, dtype=complex)
    K, L, M, N = coeffs.mode(selection)
    own = z * np.conj(K) - np.conj(z) * L
    other = z * np.conj(M) - np.conj(z) * N
    if selection == 1:
        return own, other, np.abs(z) ** 2
    return other, own, np.abs(z) ** 2


def char_fn(coeffs: EvolutionCoefficients, state: InputState, selection, s: float, zeta):
    """s-parametrized characteristic function (array-valued for array input)."""
    sel = _selection(selection)
    eta1, eta2, zz = _input_arguments(coeffs, sel, zeta)
    x1, x2 = np.abs(eta1) ** 2, np.abs(eta2) ** 2
    if isinstance(state, Fock):
        val = np.exp(-0.5 * (x1 + x2)) * laguerre(state.n, x1) * laguerre(state.m, x2)
    elif isinstance(state, Coherent):
        a1, a2 = state.alpha1, state.alpha2
        val = np.exp(-0.5 * (x1 + x2) + eta1 * np.conj(a1) - np.conj(eta1) * a1
                     + eta2 * np.conj(a2) - np.conj(eta2) * a2)
    elif isinstance(state, Thermal):
        val = np.exp(-(state.nbar1 + 0.5) * x1 - (state.nbar2 + 0.5) * x2)
    else:
        raise TypeError(f"unknown input state {state!r}")
    out = val * np.exp(0.5 * s * zz)
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FockSingleKernel:
    """Time-dependent quantities of the single-mode Fock-input field.

    tau = |K|^2 + |L|^2 + |M|^2 + |N|^2 and psi = K L + N M = |psi| e^{i epsilon}.
    tau - s -+ 2|psi| are the eigenvalues of the quadratic form of the
    Gaussian factor of the characteristic function in the rotated frame
    zeta = e^{i epsilon / 2} (p + i q).  ``r`` is the Jacobi degree
    min(n1, m1) of one term of the Hermite-product expansion.
    """

    s: float
    tau: float
    psi: complex
    epsilon: float
    eta_plus: complex
    eta_minus: complex
    zeta_plus: complex
    zeta_minus: complex
    z: complex
    r: int = 0

    def _radicands(self):
        ap = abs(self.psi)
        return (np.sqrt(complex(2 * (self.tau - self.s + 2 * ap))),
                np.sqrt(complex(2 * (self.tau - self.s - 2 * ap))))

    def _uv(self, alpha):
        alpha = np.asarray(alpha, dtype=complex)
        em, ep = np.exp(-0.5j * self.epsilon), np.exp(0.5j * self.epsilon)
        return alpha * em + np.conj(alpha) * ep, alpha * em - np.conj(alpha) * ep

    def x_arg(self, alpha):
        dp, dm = self._radicands()
        u, v = self._uv(alpha)
        return self.eta_plus * u / dp + self.eta_minus * v / dm

    def y_arg(self, alpha):
        dp, dm = self._radicands()
        u, v = self._uv(alpha)
        return self.zeta_plus * u / dp + self.zeta_minus * v / dm


def fock_single_kernel(coeffs: EvolutionCoefficients, s: float = 0.0, mode: int = 1,
                       r: int = 0) -> FockSingleKernel:
    K, L, M, N = coeffs.mode(mode)
    tau = abs(K) ** 2 + abs(L) ** 2 + abs(M) ** 2 + abs(N) ** 2
    psi = K * L + N * M
    eps = float(np.angle(psi)) if psi != 0 else 0.0
    ep, em = np.exp(0.5j * eps), np.exp(-0.5j * eps)
    dp = np.sqrt(complex(2 * (tau - s + 2 * abs(psi))))
    dm = np.sqrt(complex(2 * (tau - s - 2 * abs(psi))))
    eta_p = (np.conj(K) * ep + L * em) / dp
    eta_m = (np.conj(K) * ep - L * em) / dm
    zeta_p = (np.conj(M) * ep + N * em) / dp
    zeta_m = (np.conj(M) * ep - N * em) / dm
    z = np.sqrt(complex((1 - 2 * (abs(eta_p) ** 2 + abs(eta_m) ** 2))
                        * (1 - 2 * (abs(zeta_p) ** 2 + abs(zeta_m) ** 2))))
    return FockSingleKernel(float(s), float(tau), complex(psi), eps, complex(eta_p),
                            complex(eta_m), complex(zeta_p), complex(zeta_m), complex(z), int(r))


@dataclass(frozen=True)
class CoherentQuasiKernel:
    """Abbreviations of the coherent-input two-mode field at one evaluation point.

    a_j = (1 - s)/2 + |L_j|^2 + |N_j|^2 and b_j = N_j* M_j* + L_j* K_j* are
    the per-mode Gaussian widths; the remaining fields are the cross-mode
    combinations.  ``p_flags`` holds the per-mode condition |A_j| > |B_j|
    evaluated at s = 1.
    """

    a1: float
    a2: float
    b1: complex
    b2: complex
    delta1: float
    delta2: float
    d: complex
    chi: float
    cbar: complex
    gamma: float
    e1: complex
    e2: complex
    f_plus: float
    f_minus: float
    r_plus: float
    r_minus: float
    s_plus: float
    s_minus: float
    t_cross: float
    x_plus: complex
    x_minus: complex
    alpha_bar_1: complex
    alpha_bar_2: complex
    p_flags: tuple


def coherent_quasi_kernel(coeffs: EvolutionCoefficients, state: Coherent, s: float,
                          point=(0j, 0j)) -> CoherentQuasiKernel:
    K1, L1, M1, N1 = coeffs.mode(1)
    K2, L2, M2, N2 = coeffs.mode(2)
    al1, al2 = state.alpha1, state.alpha2
    p1, p2 = complex(point[0]), complex(point[1])
    cj = np.conj
    a = [0.5 * (1 - s + 2 * abs(L) ** 2 + 2 * abs(N) ** 2) for L, N in ((L1, N1), (L2, N2))]
    b = [cj(N) * cj(M) + cj(L) * cj(K) for K, L, M, N in ((K1, L1, M1, N1), (K2, L2, M2, N2))]
    dl = [0.5 * float(np.angle(x)) for x in b]
    d = cj(K1) * cj(N2) + cj(M1) * cj(L2)
    cbar = cj(L2) * N1 + cj(N2) * L1
    chi, gamma = float(np.angle(d)), float(np.angle(cbar))
    ab1 = K1 * al1 + L1 * cj(al1) + M1 * al2 + N1 * cj(al2)
    ab2 = K2 * al2 + L2 * cj(al2) + M2 * al1 + N2 * cj(al1)
    e1 = (ab1 - p1) * np.exp(1j * dl[0])
    e2 = (ab2 - p2) * np.exp(1j * dl[1])
    sa = math.sin(dl[0] + dl[1] - chi)
    sb = math.sin(dl[0] - dl[1] + gamma)
    ca = math.cos(dl[0] + dl[1] - chi)
    cb = math.cos(dl[0] - dl[1] + gamma)
    f_p, f_m = abs(d) * sa + abs(cbar) * sb, abs(d) * sa - abs(cbar) * sb
    r_p, r_m = abs(d) * ca + abs(cbar) * cb, abs(d) * ca - abs(cbar) * cb
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.float64(a[0] - abs(b[0]))
        hi = np.float64(a[0] + abs(b[0]))
        s_p = a[1] + abs(b[1]) - f_p ** 2 / lo - r_p ** 2 / hi
        s_m = a[1] - abs(b[1]) - r_m ** 2 / lo - f_m ** 2 / hi
        t_c = r_m * f_p / lo - r_p * f_m / hi
        x_p = 1j * (e2 + cj(e2)) + f_p * (cj(e1) - e1) / lo - 1j * r_p * (cj(e1) + e1) / hi
        x_m = (cj(e2) - e2) + r_m * (cj(e1) - e1) / lo + 1j * f_m * (cj(e1) + e1) / hi
    flags = tuple(abs(L) ** 2 + abs(N) ** 2 > abs(bb)
                  for (L, N), bb in zip(((L1, N1), (L2, N2)), b))
    return CoherentQuasiKernel(
        a1=float(a[0]), a2=float(a[1]), b1=complex(b[0]), b2=complex(b[1]),
        delta1=dl[0], delta2=dl[1], d=complex(d), chi=chi, cbar=complex(cbar), gamma=gamma,
        e1=complex(e1), e2=complex(e2), f_plus=float(f_p), f_minus=float(f_m),
        r_plus=float(r_p), r_minus=float(r_m), s_plus=float(s_p), s_minus=float(s_m),
        t_cross=float(t_c), x_plus=complex(x_p), x_minus=complex(x_m),
        alpha_bar_1=complex(ab1), alpha_bar_2=complex(ab2), p_flags=flags)


@dataclass(frozen=True)
class ThermalKernels:
    """Abbreviations of the thermal-input fields.

    ``jq`` and ``u`` describe the single-mode field of mode 1: the
    characteristic function is exp(-|zeta|^2 (J - s/2) + zeta^2 U/2 + zeta*^2 U*/2).
    ``abar*``, ``c*``, ``l*`` and ``dcal`` are the two-mode abbreviations.
    """

    s: float
    abar1: float
    abar2: float
    c1: complex
    c2: complex
    dcal: complex
    l1: complex
    l2: complex
    u: complex
    jq: float
    two_mode_flags: tuple
    single_mode_flag: bool


def thermal_kernels(coeffs: EvolutionCoefficients, state: Thermal, s: float,
                    alpha1: complex = 0j) -> ThermalKernels:
    K1, L1, M1, N1 = coeffs.mode(1)
    K2, L2, M2, N2 = coeffs.mode(2)
    h1, h2 = state.nbar1 + 0.5, state.nbar2 + 0.5
    cj = np.conj
    abar1 = h1 * (abs(L1) ** 2 + abs(K1) ** 2) + h2 * (abs(M1) ** 2 + abs(N1) ** 2) - 0.5 * s
    abar2 = h1 * (abs(M2) ** 2 + abs(N2) ** 2) + h2 * (abs(K2) ** 2 + abs(L2) ** 2) - 0.5 * s
    c1 = 2 * (h1 * cj(L1) * cj(K1) + h2 * cj(M1) * cj(N1))
    l1 = (state.nbar1 + state.nbar2 + 1) * (cj(L1) * cj(M2) + cj(K1) * cj(N2))
    l2 = h1 * (cj(L1) * cj(N2) + cj(K1) * cj(M2)) + h2 * (cj(M1) * K2 + cj(N1) * L2)
    den1 = abar1 ** 2 - abs(c1) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        den = np.float64(den1)
        c2 = ((c1 * cj(l1) ** 2 + cj(c1) * l2 ** 2 - 2 * abar1 * cj(l1) * l2) / den
              + 2 * (h2 * L2 * K2 + h1 * M2 * N2))
        a = complex(alpha1)
        dcal = (abar1 * (a * l1 + cj(a) * cj(l2)) - a * cj(l2) * c1 - cj(a) * l1 * cj(c1)) / den
    u = cj(L1) * cj(K1) * (2 * state.nbar1 + 1) + cj(M1) * cj(N1) * (2 * state.nbar2 + 1)
    jq = ((abs(L1) ** 2 + abs(K1) ** 2) * state.nbar1 + (abs(M1) ** 2 + abs(N1) ** 2) * state.nbar2
          + 0.5 + abs(L1) ** 2 + abs(N1) ** 2)
    return ThermalKernels(
        s=float(s), abar1=float(abar1), abar2=float(abar2), c1=complex(c1), c2=complex(c2),
        dcal=complex(dcal), l1=complex(l1), l2=complex(l2), u=complex(u), jq=float(jq),
        two_mode_flags=(abs(abar1) > abs(c1), abs(abar2) > abs(c2)),
        single_mode_flag=bool((jq - 0.5 * s) ** 2 > abs(u) ** 2))


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def coherent_single_expansion(coeffs: EvolutionCoefficients, state: Coherent, s: float,
                              alpha, mode: int = 1):
    """Expanded single-mode coherent-input field.

    With A = (1-s)/2 + |L|^2 + |N|^2, B = N* M* + L* K* = |B| e^{2 i delta},
    E = (alpha_bar - alpha) e^{i delta} and den = A^2 - |B|^2:
        W = exp(-A |alpha_bar - alpha|^2 / den + |B| (E^2 + E*^2) / (2 den)) / (pi sqrt(den)).
    """
    K, L, M, N = coeffs.mode(mode)
    own, other = (state.alpha1, state.alpha2) if mode == 1 else (state.alpha2, state.alpha1)
    A = 0.5 * (1 - s) + abs(L) ** 2 + abs(N) ** 2
    B = np.conj(N) * np.conj(M) + np.conj(L) * np.conj(K)
    den = A * A - abs(B) ** 2
    if not (A > 0 and den > 0):
        raise PNotRepresentable(f"A^2 - |B|^2 = {den:.3e} is not positive at s = {s}")
    abar = K * own + L * np.conj(own) + M * other + N * np.conj(other)
    alpha = np.asarray(alpha, dtype=complex)
    E = (abar - alpha) * np.exp(0.5j * np.angle(B))
    expo = (-A * np.abs(abar - alpha) ** 2 + 0.5 * abs(B) * (E ** 2 + np.conj(E) ** 2).real) / den
    return np.exp(expo) / (math.pi * math.sqrt(den))


def thermal_single_expansion(coeffs: EvolutionCoefficients, state: Thermal, s: float,
                             alpha, mode: int = 1):
    """Expanded single-mode thermal-input field.

    With J and U as in ``thermal_kernels`` (mode 1 shown; mode 2 by the
    index interchange) and J' = J - s/2:
        W = exp((-|alpha|^2 J' + (U* alpha*^2 + U alpha^2)/2) / (J'^2 - |U|^2)) / (pi sqrt(J'^2 - |U|^2)).
    """
    K, L, M, N = coeffs.mode(mode)
    n_own, n_other = (state.nbar1, state.nbar2) if mode == 1 else (state.nbar2, state.nbar1)
    U = np.conj(L) * np.conj(K) * (2 * n_own + 1) + np.conj(M) * np.conj(N) * (2 * n_other + 1)
    J = ((abs(L) ** 2 + abs(K) ** 2) * n_own + (abs(M) ** 2 + abs(N) ** 2) * n_other
         + 0.5 + abs(L) ** 2 + abs(N) ** 2)
    Jp = J - 0.5 * s
    den = Jp ** 2 - abs(U) ** 2
    if not (Jp > 0 and den > 0):
        raise PNotRepresentable(f"(J - s/2)^2 - |U|^2 = {den:.3e} is not positive at s = {s}")
    alpha = np.asarray(alpha, dtype=complex)
    expo = (-np.abs(alpha) ** 2 * Jp + (np.conj(U) * np.conj(alpha) ** 2).real) / den
    return np.exp(expo) / (math.pi * math.sqrt(den))


def _gaussian_density(mean: np.ndarray, cov: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Normal density at r (shape (k, ...))."""
    k = mean.size
    inv = np.linalg.inv(cov)
    d = r - mean.reshape((k,) + (1,) * (r.ndim - 1))
    quad = np.einsum("i...,ij,j...->...", d, inv, d)
    return np.exp(-0.5 * quad) / ((2 * math.pi) ** (k / 2) * math.sqrt(np.linalg.det(cov)))


def _s_ordered_moments(coeffs, state, sel, s):
    mean, cov = output_covariance(coeffs, state)
    if sel != JOINT:
        mean, cov = mode_block(mean, cov, sel)
    return mean, s_ordered_covariance(cov, s)


def _check_positive(cov_s: np.ndarray, s: float, what: str = "quasiprobability"):
    evals = np.linalg.eigvalsh(cov_s)
    scale = max(1.0, float(np.max(np.abs(evals))))
    if evals[0] <= 1e-12 * scale:
        raise PNotRepresentable(
            f"{what} at s = {s} is not an ordinary function: s-ordered covariance has "
            f"eigenvalue {evals[0]:.3e}")


def _points_to_real(selection, point):
    if selection == JOINT:
        a1, a2 = (np.asarray(p, dtype=complex) for p in point)
        a1, a2 = np.broadcast_arrays(a1, a2)
        return np.stack([a1.real, a1.imag, a2.real, a2.imag])
    a = np.asarray(point, dtype=complex)
    return np.stack([a.real, a.imag])


def quasi_closed_form(coeffs: EvolutionCoefficients, state: InputState, selection, s: float, point):
    """Closed-form quasiprobability at ``point`` (alpha, or (alpha1, alpha2) for 'joint').

    Arrays of points are evaluated element-wise.
    """
    sel = _selection(selection)
    if isinstance(state, (Coherent, Thermal)):
        mean, cov_s = _s_ordered_moments(coeffs, state, sel, s)
        _check_positive(cov_s, s)
        out = _gaussian_density(mean, cov_s, _points_to_real(sel, point))
    elif isinstance(state, Fock):
        if sel == JOINT:
            if s != 0:
                raise UnsupportedClosedForm("two-mode Fock closed form exists only for s = 0")
            out = _fock_joint_wigner(coeffs, state, point)
        else:
            out = _fock_single(coeffs, state, sel, s, point)
    else:
        raise TypeError(f"unknown input state {state!r}")
    return float(out) if np.ndim(out) == 0 else out


def _fock_joint_wigner(coeffs, state: Fock, point):
    a1, a2 = (np.asarray(p, dtype=complex) for p in point)
    K1, L1, M1, N1 = coeffs.mode(1)
    K2, L2, M2, N2 = coeffs.mode(2)
    lam1 = a1 * np.conj(K1) - np.conj(a1) * L1 + a2 * np.conj(M2) - np.conj(a2) * N2
    lam2 = a1 * np.conj(M1) - np.conj(a1) * N1 + a2 * np.conj(K2) - np.conj(a2) * L2
    x1, x2 = np.abs(lam1) ** 2, np.abs(lam2) ** 2
    return ((4 / math.pi ** 2) * (-1) ** (state.n + state.m) * laguerre(state.n, 4 * x1)
            * laguerre(state.m, 4 * x2) * np.exp(-2 * (x1 + x2)))


def _quadratic_form(c1: complex, c2: complex) -> np.ndarray:
    """Matrix Q with |c1 u + c2 v|^2 = (u, v) Q (u, v)^T."""
    off = (c1 * np.conj(c2)).real
    return np.array([[abs(c1) ** 2, off], [off, abs(c2) ** 2]])


def _adj_form(Q: np.ndarray, k0, k1):
    """k^T adj(Q) k for a symmetric 2x2 Q."""
    return Q[1, 1] * k0 * k0 - 2 * Q[0, 1] * k0 * k1 + Q[0, 0] * k1 * k1


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n1, m1 = a.shape[:2]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for i in range(n1):
        for j in range(m1):
            out[i:, j:] += a[i, j] * b[: n1 - i, : m1 - j]
    return out


def _series_one(shape, dtype=float) -> np.ndarray:
    one = np.zeros(shape, dtype=dtype)
    one[0, 0] = 1.0
    return one


def _series_pow(a: np.ndarray, e: float) -> np.ndarray:
    n1, m1 = a.shape[:2]
    a0 = a[0, 0]
    g = a / a0
    g[0, 0] = 0.0
    out = _series_one(a.shape, a.dtype)
    term = out.copy()
    for j in range(1, n1 + m1 - 1):
        term = _series_mul(term, g) * ((e - j + 1) / j)
        out = out + term
    return out * a0 ** e


def _series_exp(a: np.ndarray) -> np.ndarray:
    n1, m1 = a.shape[:2]
    a0 = a[0, 0].copy()
    g = a.copy()
    g[0, 0] = 0.0
    out = _series_one(a.shape, a.dtype)
    term = out.copy()
    for j in range(1, n1 + m1 - 1):
        term = _series_mul(term, g) / j
        out = out + term
    return out * np.exp(a0)


def _fock_single(coeffs, state: Fock, mode: int, s: float, point):
    K, L, M, N = coeffs.mode(mode)
    n_own, n_other = (state.n, state.m) if mode == 1 else (state.m, state.n)
    Q1 = _quadratic_form(np.conj(K) - L, 1j * (np.conj(K) + L))
    Q2 = _quadratic_form(np.conj(M) - N, 1j * (np.conj(M) + N))
    A0 = Q1 + Q2 - s * np.eye(2)
    _check_positive(A0, s, "Fock-input quasiprobability")

    alpha = np.asarray(point, dtype=complex)
    shape = alpha.shape
    k0 = (2 * alpha.imag).ravel()
    k1 = (-2 * alpha.real).ravel()
    n1, m1 = n_own + 1, n_other + 1

    # det A(e) for A(e) = A0 + 2 e1 Q1 + 2 e2 Q2, a quadratic polynomial.
    det = np.zeros((n1, m1, 1))
    det[0, 0] = np.linalg.det(A0)
    adj0 = np.array([[A0[1, 1], -A0[0, 1]], [-A0[1, 0], A0[0, 0]]])
    if n1 > 1:
        det[1, 0] = 2 * np.trace(adj0 @ Q1)
    if m1 > 1:
        det[0, 1] = 2 * np.trace(adj0 @ Q2)
    if n1 > 2:
        det[2, 0] = 4 * np.linalg.det(Q1)
    if m1 > 2:
        det[0, 2] = 4 * np.linalg.det(Q2)
    if n1 > 1 and m1 > 1:
        det[1, 1] = 4 * (Q1[0, 0] * Q2[1, 1] + Q1[1, 1] * Q2[0, 0] - 2 * Q1[0, 1] * Q2[0, 1])

    # k^T adj(A(e)) k, linear in e.
    num = np.zeros((n1, m1, k0.size))
    num[0, 0] = _adj_form(A0, k0, k1)
    if n1 > 1:
        num[1, 0] = 2 * _adj_form(Q1, k0, k1)
    if m1 > 1:
        num[0, 1] = 2 * _adj_form(Q2, k0, k1)

    inv_det = _series_pow(det, -1.0)
    gauss = 2 * math.pi * _series_mul(_series_pow(det, -0.5), _series_exp(-0.5 * _series_mul(num, inv_det)))
    weights = np.array([[comb(n_own, a) * comb(n_other, b) for b in range(m1)] for a in range(n1)])
    total = np.tensordot(weights, gauss, axes=([0, 1], [0, 1]))
    return (total / math.pi ** 2).reshape(shape)


# ---------------------------------------------------------------------------
# P representability
# ---------------------------------------------------------------------------

def p_representable(coeffs: EvolutionCoefficients, state: InputState, selection,
                    s: float = 1.0, tol: float = 1e-12) -> PRepresentability:
    """Whether the s-ordered function (default P) of a Gaussian-family state is an ordinary function.

    The margin is twice the smallest eigenvalue of the s-ordered covariance.
    For a single mode at s = 1 this equals <da^+ da> - |<da da>|.  Zero
    margin is the vacuum-like boundary, where P is a delta function.
    """
    if isinstance(state, Fock):
        raise UnsupportedState("P representability is evaluated for coherent and thermal inputs only")
    sel = _selection(selection)
    mean, cov = output_covariance(coeffs, state)
    mode_margins = []
    for j in (1, 2):
        _, blk = mode_block(mean, cov, j)
        mode_margins.append(float(2 * np.linalg.eigvalsh(s_ordered_covariance(blk, s))[0]))
    if sel != JOINT:
        _, cov = mode_block(mean, cov, sel)
    margin = float(2 * np.linalg.eigvalsh(s_ordered_covariance(cov, s))[0])
    return PRepresentability(margin >= -tol, margin, tuple(mode_margins))


# ---------------------------------------------------------------------------
# grids, fields and the numerical transform
# ---------------------------------------------------------------------------

def _field_meta(state, sel, s, t, method, values, volume, **extra):
    norm = float(np.sum(values) * volume)
    meta = {"state": state, "selection": sel, "s": float(s), "t": float(t),
            "method": method.value, "normalization": norm, "norm_tol": NORM_TOL,
            "min": float(np.min(values)), "max": float(np.max(values))}
    meta.update(extra)
    return meta


def auto_grid(coeffs: EvolutionCoefficients, state: InputState, mode: int,
              n: int = 81, n_sigma: float = 6.0) -> PhaseSpaceGrid:
    """Grid centred on the mean field, ``n_sigma`` standard deviations wide along each axis.

    The widths come from the symmetric covariance (at least the vacuum
    width), so W, Q and regular P fields fit inside.
    """
    mean, cov = output_covariance(coeffs, state)
    mean, cov = mode_block(mean, cov, mode)
    hx, hy = (n_sigma * math.sqrt(max(float(v), 0.25)) for v in np.diag(cov))
    return PhaseSpaceGrid(mean[0] - hx, mean[0] + hx, mean[1] - hy, mean[1] + hy, n, n)


def quasi_field_closed_form(coeffs: EvolutionCoefficients, state: InputState, selection,
                            s: float, grid) -> QuasiField:
    sel = _selection(selection)
    if sel == JOINT:
        g1, g2 = grid
        p1, p2 = g1.points(), g2.points()
        vals = quasi_closed_form(coeffs, state, sel, s,
                                 (p1[:, :, None, None], p2[None, None, :, :]))
        volume = g1.cell_area * g2.cell_area
    else:
        vals = quasi_closed_form(coeffs, state, sel, s, grid.points())
        volume = grid.cell_area
    vals = np.asarray(vals, dtype=float)
    return QuasiField(grid, vals, _field_meta(state, sel, s, coeffs.t, Method.CLOSED_FORM, vals, volume))


def _envelope_covariance(coeffs, state, sel, s):
    """Covariance governing the Gaussian decay of |C(zeta)| (vacuum-input one for Fock)."""
    env_state = Coherent(0, 0) if isinstance(state, Fock) else state
    mean, cov = output_covariance(coeffs, env_state)
    if sel != JOINT:
        _, cov = mode_block(mean, cov, sel)
    return s_ordered_covariance(cov, s)


def _transform_plan(coeffs, state, sel, s, spans):
    env = _envelope_covariance(coeffs, state, sel, s)
    evals = np.linalg.eigvalsh(env)
    if evals[0] <= 1e-9 * max(1.0, evals[-1]):
        raise TruncatedTransform(
            f"characteristic function does not decay at s = {s} (smallest s-ordered "
            f"covariance eigenvalue {evals[0]:.3e})")
    mean, cov = _s_ordered_moments(coeffs, state, sel, s)
    spread = math.sqrt(max(float(np.linalg.eigvalsh(cov + 0.25 * s * np.eye(cov.shape[0]))[-1]), 0.25))
    extra = 0.0
    if isinstance(state, Fock):
        extra = 2.0 * (state.n + state.m) * math.log(4.0 + state.n + state.m)
    # |C| <= poly * exp(-2 lambda_min |zeta|^2); aim well below the boundary tolerance.
    zmax = math.sqrt((math.log(1e12) + extra) / (2 * evals[0]))
    radius = 8.0 * spread + 2.0 * math.sqrt(state.n + state.m + 1 if isinstance(state, Fock) else 1)
    h = math.pi / (max(spans) + radius)
    return zmax, h, mean


def _axis_spans(grids, mean):
    spans = []
    for k, g in enumerate(grids):
        x, y = g.axes()
        spans.append(float(np.max(np.abs(x - mean[2 * k]))))
        spans.append(float(np.max(np.abs(y - mean[2 * k + 1]))))
    return spans


def _single_transform(coeffs, state, sel, s, grid, zmax, h):
    npts = int(math.ceil(zmax / h))
    u = h * np.arange(-npts, npts + 1)
    zeta = u[:, None] + 1j * u[None, :]
    C = char_fn(coeffs, state, sel, s, zeta)
    edge = max(np.max(np.abs(C[[0, -1], :])), np.max(np.abs(C[:, [0, -1]])))
    x, y = grid.axes()
    My = np.exp(2j * np.outer(y, u))
    Mx = np.exp(-2j * np.outer(x, u))
    W = (h * h / math.pi ** 2) * (Mx @ (My @ C).T)
    return W.real, float(edge), u.size


def _joint_transform(coeffs, state, s, grids, zmax, h):
    npts = int(math.ceil(zmax / h))
    u = h * np.arange(-npts, npts + 1)
    (x1, y1), (x2, y2) = grids[0].axes(), grids[1].axes()
    Mx1, My1 = np.exp(-2j * np.outer(x1, u)), np.exp(2j * np.outer(y1, u))
    Mx2, My2 = np.exp(-2j * np.outer(x2, u)), np.exp(2j * np.outer(y2, u))
    W = np.zeros((x1.size, y1.size, x2.size, y2.size))
    v1 = u[:, None, None]
    u2 = u[None, :, None]
    v2 = u[None, None, :]
    edge = 0.0
    # C(-zeta) = C(zeta)*, so the slice at -u1 contributes the conjugate of
    # the slice at u1 and only u1 >= 0 is summed.
    for a in range(npts, u.size):
        C = char_fn(coeffs, state, JOINT, s, (u[a] + 1j * v1 + 0 * u2, u2 + 1j * v2 + 0 * v1))
        if a == u.size - 1:
            edge = max(edge, float(np.max(np.abs(C))))
        else:
            edge = max(edge, float(np.max(np.abs(C[[0, -1], :, :]))),
                       float(np.max(np.abs(C[:, [0, -1], :]))),
                       float(np.max(np.abs(C[:, :, [0, -1]]))))
        R = np.einsum("bcd,ib,jc,kd->ikj", C, Mx1, My2, Mx2, optimize=True)
        weight = 1.0 if a == npts else 2.0
        W += weight * (R[:, None, :, :] * My1[None, :, a, None, None]).real
    return (h ** 4 / math.pi ** 4) * W, edge, u.size


def quasi_transform(coeffs: EvolutionCoefficients, state: InputState, selection, s: float,
                    grid, *, check_convergence: bool = True,
                    boundary_tol: float = BOUNDARY_TOL) -> QuasiField:
    """Quasiprobability by trapezoidal quadrature of the characteristic function.

    The zeta domain is a square large enough that |C| < ``boundary_tol`` on
    its edge; otherwise TruncatedTransform is raised.  The spacing keeps
    the periodic images of the field away from the evaluation grid.  For
    single-mode fields with ``check_convergence`` the quadrature is repeated
    at half spacing, and the maximum change is recorded as
    ``meta['convergence_delta']``.
    """
    sel = _selection(selection)
    grids = tuple(grid) if sel == JOINT else (grid,)
    mean, _ = _s_ordered_moments(coeffs, state, sel, s)
    zmax, h, _ = _transform_plan(coeffs, state, sel, s, _axis_spans(grids, mean))
    extra = {"zeta_extent": zmax, "spacing": h}
    if sel == JOINT:
        W, edge, count = _joint_transform(coeffs, state, s, grids, zmax, h)
        volume = grids[0].cell_area * grids[1].cell_area
    else:
        W, edge, count = _single_transform(coeffs, state, sel, s, grid, zmax, h)
        volume = grid.cell_area
        if check_convergence:
            W2, _, _ = _single_transform(coeffs, state, sel, s, grid, zmax, 0.5 * h)
            extra["convergence_delta"] = float(np.max(np.abs(W2 - W)))
    if edge > boundary_tol:
        raise TruncatedTransform(
            f"|C| = {edge:.3e} on the edge of the zeta domain exceeds {boundary_tol:.0e}")
    extra["boundary_value"] = edge
    extra["zeta_samples_per_axis"] = count
    return QuasiField(grid if sel == JOINT else grid, W,
                      _field_meta(state, sel, s, coeffs.t, Method.TRANSFORM, W, volume, **extra))


def moments_from_field(field_: QuasiField, orders) -> complex:
    """s-ordered moment  \\int W prod_j alpha_j*^{m_j} alpha_j^{n_j}  by Riemann sum.

    ``orders`` is (m1, n1) for single-mode fields and (m1, n1, m2, n2) for joint ones.
    """
    norm = field_.meta.get("normalization", field_.riemann_sum())
    tol = field_.meta.get("norm_tol", NORM_TOL)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"field normalization {norm:.6f} is outside 1 +- {tol}")
    if field_.is_joint:
        m1, n1, m2, n2 = orders
        a1 = field_.grid[0].points()[:, :, None, None]
        a2 = field_.grid[1].points()[None, None, :, :]
        weight = np.conj(a1) ** m1 * a1 ** n1 * np.conj(a2) ** m2 * a2 ** n2
    else:
        m1, n1 = orders
        a = field_.grid.points()
        weight = np.conj(a) ** m1 * a ** n1
    return complex(np.sum(field_.values * weight) * field_.cell_volume())
