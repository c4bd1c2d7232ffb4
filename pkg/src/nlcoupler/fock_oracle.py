"""Brute-force reference computations that use no closed-form result.

Two independent routes are provided:

* ``ode_coefficients`` integrates the 4x4 linear Heisenberg system for
  (A, A^+, B, B^+) with an adaptive Runge-Kutta scheme.
* ``evolve_state`` propagates a truncated two-mode Fock-space state under the
  effective quadratic Hamiltonian

      H = D1 n1 + D2 n2 + l1 (a1^+2 + a1^2) + l2 (a2^+2 + a2^2)
          + l3 (a1^+ a2 + a1 a2^+) + l4 (a1^+ a2^+ + a1 a2),

  whose Heisenberg equations are the linear system above.  All observables
  (moments, Wigner values, characteristic function samples) are then
  computed by direct contraction with the truncated state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from functools import lru_cache

from scipy.integrate import solve_ivp
from scipy.linalg import eigh
from scipy.special import eval_genlaguerre, gammaln

from .coupler_core import CouplerParams, EvolutionCoefficients
from .errors import CutoffExceeded, IntegratorFailure
from .states import Coherent, Fock, InputState, Thermal, check_mode

TAIL_THRESHOLD = 1e-8
THERMAL_REMAINDER = 1e-10


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Truncated Hamiltonian on the product basis |n1, n2>, index n1 * (cutoff+1) + n2."""

    cutoff: int
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** 2

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class OracleState:
    """Truncated two-mode state as a weighted set of pure columns.

    A pure state has a single column with weight 1; a thermal input is a
    mixture of evolved number states.  ``columns[:, k]`` is indexed like
    ``EffectiveHamiltonian``.
    """

    columns: np.ndarray
    weights: np.ndarray
    cutoff: int
    tail_mass: float
    discarded_weight: float = 0.0
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def levels(self) -> int:
        return self.cutoff + 1

    @property
    def is_pure(self) -> bool:
        return self.columns.shape[1] == 1

    def amplitude_matrices(self):
        d = self.levels
        for k in range(self.columns.shape[1]):
            yield self.weights[k], self.columns[:, k].reshape(d, d)

    def norm(self) -> float:
        return float(np.sum(self.weights * np.sum(np.abs(self.columns) ** 2, axis=0)))

    def reduced_density(self, mode: int) -> np.ndarray:
        check_mode(mode)
        d = self.levels
        rho = np.zeros((d, d), dtype=complex)
        for w, C in self.amplitude_matrices():
            X = C if mode == 1 else C.T
            rho += w * (X @ X.conj().T)
        return rho

    def density_matrix(self) -> np.ndarray:
        return (self.columns * self.weights) @ self.columns.conj().T


def _lowering(levels: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, levels)), 1, format="csr")


def build_hamiltonian(params: CouplerParams, cutoff: int) -> EffectiveHamiltonian:
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    d = cutoff + 1
    a = _lowering(d)
    eye = sp.identity(d, format="csr")
    a1 = sp.kron(a, eye, format="csr")
    a2 = sp.kron(eye, a, format="csr")
    a1d, a2d = a1.T.tocsr(), a2.T.tocsr()
    H = (params.delta1 * (a1d @ a1) + params.delta2 * (a2d @ a2)
         + params.lambda1 * (a1d @ a1d + a1 @ a1)
         + params.lambda2 * (a2d @ a2d + a2 @ a2)
         + params.lambda3 * (a1d @ a2 + a1 @ a2d)
         + params.lambda4 * (a1d @ a2d + a1 @ a2))
    return EffectiveHamiltonian(cutoff, H.astype(complex).tocsr())


def ode_coefficients(params: CouplerParams, t: float, *, rtol: float = 1e-13,
                     atol: float = 1e-15) -> EvolutionCoefficients:
    """Integrate dU/dt = -i G U from U(0) = 1 and read off K, L, M, N."""
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0:
        return EvolutionCoefficients.identity(0.0)
    G = params.generator().astype(complex)

    def rhs(_, y):
        return (-1j * (G @ y.reshape(4, 4))).ravel()

    sol = solve_ivp(rhs, (0.0, float(t)), np.eye(4, dtype=complex).ravel(),
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegratorFailure(sol.message)
    U = sol.y[:, -1].reshape(4, 4)
    return EvolutionCoefficients(float(t), U[0, 0], U[0, 1], U[0, 2], U[0, 3],
                                 U[2, 2], U[2, 3], U[2, 0], U[2, 1])


def _coherent_vector(alpha: complex, levels: int) -> np.ndarray:
    n = np.arange(levels)
    logmag = -0.5 * abs(alpha) ** 2 - 0.5 * gammaln(n + 1)
    if alpha == 0:
        out = np.zeros(levels, dtype=complex)
        out[0] = 1.0
        return out
    return np.exp(logmag + n * np.log(abs(alpha))) * np.exp(1j * n * np.angle(alpha))


def thermal_weights(nbar1: float, nbar2: float, remainder: float = THERMAL_REMAINDER,
                    max_level: int | None = None):
    """Largest product Bose-Einstein weights until the discarded mass is below ``remainder``.

    Returns (list of (n, m), weights, discarded mass).
    """
    def level_weights(nbar):
        if nbar == 0:
            return np.array([1.0])
        q = nbar / (nbar + 1)
        count = int(math.ceil(math.log(remainder * 1e-3) / math.log(q))) + 1
        if max_level is not None:
            count = min(count, max_level + 1)
        return (1 - q) * q ** np.arange(count)

    w1, w2 = level_weights(nbar1), level_weights(nbar2)
    grid = np.outer(w1, w2)
    order = np.argsort(grid, axis=None)[::-1]
    flat = grid.ravel()[order]
    cum = np.cumsum(flat)
    keep = int(np.searchsorted(cum, 1.0 - remainder)) + 1
    keep = min(keep, flat.size)
    idx = np.unravel_index(order[:keep], grid.shape)
    pairs = list(zip(idx[0].tolist(), idx[1].tolist()))
    return pairs, flat[:keep], float(max(0.0, 1.0 - cum[keep - 1]))


def initial_state(state: InputState, cutoff: int) -> OracleState:
    d = cutoff + 1
    if isinstance(state, Fock):
        if max(state.n, state.m) > cutoff:
            raise CutoffExceeded(1.0, TAIL_THRESHOLD, cutoff)
        col = np.zeros(d * d, dtype=complex)
        col[state.n * d + state.m] = 1.0
        return OracleState(col[:, None], np.ones(1), cutoff, 0.0)
    if isinstance(state, Coherent):
        col = np.kron(_coherent_vector(state.alpha1, d), _coherent_vector(state.alpha2, d))
        missing = max(0.0, 1.0 - float(np.sum(np.abs(col) ** 2)))
        return OracleState(col[:, None], np.ones(1), cutoff, 0.0, discarded_weight=missing)
    if isinstance(state, Thermal):
        pairs, weights, discarded = thermal_weights(state.nbar1, state.nbar2)
        if any(max(p) > cutoff for p in pairs):
            raise CutoffExceeded(discarded, TAIL_THRESHOLD, cutoff)
        cols = np.zeros((d * d, len(pairs)), dtype=complex)
        for k, (n, m) in enumerate(pairs):
            cols[n * d + m, k] = 1.0
        return OracleState(cols, np.asarray(weights), cutoff, 0.0, discarded_weight=discarded)
    raise TypeError(f"unknown input state {state!r}")


def tail_mass(state: OracleState) -> float:
    """Probability in the top two levels of either mode."""
    d = state.levels
    edge = np.zeros((d, d), dtype=bool)
    edge[d - 2:, :] = True
    edge[:, d - 2:] = True
    probs = np.abs(state.columns) ** 2
    return float(np.sum(state.weights * probs[edge.ravel(), :].sum(axis=0)))


class Propagator:
    """exp(-i H t) on the truncated space from a dense eigendecomposition.

    H only changes n1 + n2 by 0 or 2, so the two photon-number parity
    sectors are diagonalized separately.  One decomposition serves every
    time and every input state for the given parameters and cutoff.
    """

    def __init__(self, hamiltonian: EffectiveHamiltonian):
        self.cutoff = hamiltonian.cutoff
        d = hamiltonian.cutoff + 1
        n1, n2 = np.divmod(np.arange(d * d), d)
        parity = (n1 + n2) % 2
        H = hamiltonian.matrix.real.tocsr()
        self.sectors = []
        for p in (0, 1):
            idx = np.flatnonzero(parity == p)
            block = H[idx][:, idx].toarray()
            evals, evecs = eigh(block)
            self.sectors.append((idx, evals, evecs))

    def apply(self, columns: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros(columns.shape, dtype=complex)
        for idx, evals, evecs in self.sectors:
            sub = columns[idx, :]
            if not np.any(sub):
                continue
            phases = np.exp(-1j * float(t) * evals)[:, None]
            out[idx, :] = evecs @ (phases * (evecs.T @ sub))
        return out


@lru_cache(maxsize=4)
def propagator(params: CouplerParams, cutoff: int) -> Propagator:
    return Propagator(build_hamiltonian(params, cutoff))


def evolve_state(params: CouplerParams, state: InputState, t: float, cutoff: int, *,
                 threshold: float = TAIL_THRESHOLD) -> OracleState:
    """Schrodinger-picture propagation of ``state`` to time t in a truncated basis.

    Raises CutoffExceeded when the final tail mass exceeds ``threshold``.
    """
    start = initial_state(state, cutoff)
    if t == 0:
        cols = start.columns
    else:
        cols = propagator(params, cutoff).apply(start.columns, t)
    out = OracleState(cols, start.weights, cutoff, 0.0, start.discarded_weight, float(t),
                      meta={"input": state})
    out.tail_mass = tail_mass(out)
    if out.tail_mass > threshold:
        raise CutoffExceeded(out.tail_mass, threshold, cutoff)
    return out


def _mode_moments(state: OracleState, mode: int):
    rho = state.reduced_density(mode)
    d = rho.shape[0]
    n = np.arange(d)
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    mean_a = np.trace(rho @ a)
    mean_aa = np.trace(rho @ a @ a)
    pops = np.real(np.diag(rho))
    mean_n = float(np.sum(n * pops))
    mean_nn = float(np.sum(n * n * pops))
    return mean_a, mean_aa, mean_n, mean_nn, pops


def oracle_moments(state: OracleState, which: str, mode: int):
    """Direct operator averages: 'mean', 'variance', 'g2', 'S', 'Q' or 'quadratures' (S, Q)."""
    mean_a, mean_aa, mean_n, mean_nn, pops = _mode_moments(state, mode)
    if which == "mean":
        return mean_n
    if which == "variance":
        return mean_nn - mean_n ** 2
    if which == "g2":
        return (mean_nn - mean_n) / mean_n ** 2
    # Var(X) with X = (a + a^+)/2 written without a a^+ so the truncation
    # edge does not enter.
    var_x = 0.25 * (2 * mean_aa.real + 2 * mean_n + 1) - mean_a.real ** 2
    var_y = 0.25 * (-2 * mean_aa.real + 2 * mean_n + 1) - mean_a.imag ** 2
    s, q = 4 * var_x - 1, 4 * var_y - 1
    if which == "S":
        return s
    if which == "Q":
        return q
    if which == "quadratures":
        return s, q
    raise ValueError(f"unknown moment {which!r}")


def oracle_mean_amplitude(state: OracleState, mode: int) -> complex:
    return complex(_mode_moments(state, mode)[0])


def displacement_matrix(beta: complex, levels: int) -> np.ndarray:
    """<l| D(beta) |k> for 0 <= l, k < levels, exact matrix elements of the untruncated operator."""
    x = abs(beta) ** 2
    idx = np.arange(levels)
    L, K = np.meshgrid(idx, idx, indexing="ij")
    lo = np.minimum(L, K)
    diff = np.abs(L - K)
    log_pref = 0.5 * (gammaln(lo + 1) - gammaln(np.maximum(L, K) + 1)) - 0.5 * x
    lag = eval_genlaguerre(lo, diff, x)
    phase_base = np.where(L >= K, beta, -np.conj(beta))
    power = np.where(diff == 0, 1.0 + 0j, phase_base.astype(complex) ** diff)
    return np.exp(log_pref) * lag * power


def _parity(levels: int) -> np.ndarray:
    return (-1.0) ** np.arange(levels)


def oracle_wigner(state: OracleState, selection, point) -> float:
    """Wigner value from displaced parity.

    selection 1 or 2: point is complex alpha, W = (2/pi) Tr[rho_j D(2 alpha) Pi].
    selection 'joint': point is (alpha1, alpha2), W = (4/pi^2) <D1 Pi1 (x) D2 Pi2>.
    """
    d = state.levels
    par = _parity(d)
    if selection in (1, 2):
        rho = state.reduced_density(selection)
        op = displacement_matrix(2 * complex(point), d) * par[None, :]
        return float((2 / math.pi) * np.real(np.sum(rho * op.T)))
    if selection == "joint":
        a1, a2 = point
        O1 = displacement_matrix(2 * complex(a1), d) * par[None, :]
        O2 = displacement_matrix(2 * complex(a2), d) * par[None, :]
        return float((4 / math.pi ** 2) * np.real(_two_mode_expectation(state, O1, O2)))
    raise ValueError(f"unknown selection {selection!r}")


def _two_mode_expectation(state: OracleState, O1: np.ndarray, O2: np.ndarray) -> complex:
    total = 0j
    for w, C in state.amplitude_matrices():
        total += w * np.sum(C.conj() * (O1 @ C @ O2.T))
    return total


def oracle_characteristic(state: OracleState, zeta1: complex, zeta2: complex = 0j) -> complex:
    """Symmetric-order characteristic function <D1(zeta1) D2(zeta2)>."""
    d = state.levels
    return complex(_two_mode_expectation(state, displacement_matrix(complex(zeta1), d),
                                         displacement_matrix(complex(zeta2), d)))


def evolve_adaptive(params: CouplerParams, state: InputState, t: float, *,
                    cutoffs=(20, 30, 40, 50, 60), target: float = 1e-10,
                    threshold: float = TAIL_THRESHOLD) -> OracleState:
    """Smallest cutoff from ``cutoffs`` whose tail mass is below ``target``.

    Falls back to the largest cutoff if its tail is below ``threshold``;
    otherwise raises CutoffExceeded.
    """
    last = None
    for cutoff in cutoffs:
        try:
            out = evolve_state(params, state, t, cutoff, threshold=threshold)
        except CutoffExceeded as exc:
            last = exc
            continue
        if out.tail_mass <= target or cutoff == cutoffs[-1]:
            return out
    raise last
