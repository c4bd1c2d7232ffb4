import math

import numpy as np
import pytest

from nlcoupler import quasiprob as qp
from nlcoupler.coupler_core import CouplerParams, EvolutionCoefficients, evolution_coefficients
from nlcoupler.errors import PNotRepresentable, TruncatedTransform, UnsupportedClosedForm, UnsupportedState
from nlcoupler.fock_oracle import evolve_adaptive, evolve_state, oracle_characteristic, oracle_wigner
from nlcoupler.photon_stats import mean_photon, squeezing
from nlcoupler.states import Coherent, Fock, Thermal

CURVE_A = CouplerParams.from_detunings(0.25, 0.25, 1.0, 0.25)
DETUNED = CouplerParams.from_detunings(0.25, 0.2, 1.0, 0.25, 0.3, 0.1)
STATES = [Fock(0, 0), Fock(1, 0), Fock(2, 1), Fock(0, 2), Coherent(0.7 + 0.3j, -0.4j), Thermal(0.5, 1.2)]


@pytest.mark.parametrize("state", STATES)
def test_char_fn_normalization_and_hermiticity(state):
    c = evolution_coefficients(DETUNED, 0.8)
    zs = np.array([0.3 + 0.1j, -0.7 + 0.4j, 1.1j])
    for sel in (1, 2):
        assert qp.char_fn(c, state, sel, 0.0, 0j) == pytest.approx(1.0)
        for s in (1.0, 0.0, -1.0):
            assert np.allclose(qp.char_fn(c, state, sel, s, -zs), np.conj(qp.char_fn(c, state, sel, s, zs)),
                               atol=1e-12)
    z1, z2 = 0.2 - 0.3j, 0.4j
    assert qp.char_fn(c, state, "joint", 0.0, (-z1, -z2)) == pytest.approx(
        np.conj(qp.char_fn(c, state, "joint", 0.0, (z1, z2))), abs=1e-12)


def test_thermal_joint_char_fn_against_oracle():
    c = evolution_coefficients(CURVE_A, 1.0)
    state = Thermal(1.0, 0.5)
    o = evolve_state(CURVE_A, state, 1.0, 60)
    got = qp.char_fn(c, state, "joint", 0.0, (0.3, 0.2j))
    assert abs(got - oracle_characteristic(o, 0.3, 0.2j)) < 1e-5


@pytest.mark.parametrize("state", STATES)
def test_wigner_closed_form_against_oracle(state):
    t = 0.6
    c = evolution_coefficients(DETUNED, t)
    o = evolve_adaptive(DETUNED, state, t)
    rng = np.random.default_rng(11)
    for sel in (1, 2):
        pts = 0.8 * (rng.normal(size=5) + 1j * rng.normal(size=5))
        got = qp.quasi_closed_form(c, state, sel, 0.0, pts)
        want = [oracle_wigner(o, sel, a) for a in pts]
        assert np.max(np.abs(got - want)) < 1e-8
    pair = (0.3 + 0.1j, -0.2 + 0.4j)
    assert qp.quasi_closed_form(c, state, "joint", 0.0, pair) == pytest.approx(
        oracle_wigner(o, "joint", pair), abs=1e-8)


@pytest.mark.parametrize("state", STATES)
@pytest.mark.parametrize("s", [0.0, -1.0, 0.5])
def test_closed_form_against_transform(state, s):
    c = evolution_coefficients(DETUNED, 0.9)
    for sel in (1, 2):
        grid = qp.auto_grid(c, state, sel, n=41)
        cf = qp.quasi_field_closed_form(c, state, sel, s, grid)
        tr = qp.quasi_transform(c, state, sel, s, grid)
        tol = 1e-5 if isinstance(state, Fock) else 1e-6
        assert np.max(np.abs(cf.values - tr.values)) < tol
        assert tr.meta["method"] == "Transform"
        assert cf.meta["method"] == "ClosedForm"
        assert tr.meta["convergence_delta"] < 1e-8


def test_joint_transform_matches_closed_form():
    c = evolution_coefficients(CURVE_A, 0.7)
    state = Thermal(0.3, 0.2)
    grids = (qp.auto_grid(c, state, 1, n=7), qp.auto_grid(c, state, 2, n=7))
    cf = qp.quasi_field_closed_form(c, state, "joint", 0.0, grids)
    tr = qp.quasi_transform(c, state, "joint", 0.0, grids)
    assert cf.values.shape == (7, 7, 7, 7)
    assert np.max(np.abs(cf.values - tr.values)) < 1e-6


def test_t0_examples():
    c0 = EvolutionCoefficients.identity()
    assert qp.quasi_closed_form(c0, Fock(0, 0), "joint", 0.0, (0j, 0j)) == pytest.approx(4 / math.pi ** 2)
    assert qp.quasi_closed_form(c0, Fock(1, 3), 1, 0.0, 0j) == pytest.approx(-2 / math.pi, abs=1e-12)
    grid = qp.PhaseSpaceGrid(-2, 2, -2, 2, 9, 9)
    a = grid.points()
    nb = 0.8
    got = qp.quasi_field_closed_form(c0, Thermal(nb, 0.3), 1, 0.0, grid).values
    want = np.exp(-np.abs(a) ** 2 / (nb + 0.5)) / (math.pi * (nb + 0.5))
    assert np.max(np.abs(got - want)) < 1e-14


def test_fock_joint_needs_wigner_ordering():
    c = evolution_coefficients(CURVE_A, 0.5)
    with pytest.raises(UnsupportedClosedForm):
        qp.quasi_closed_form(c, Fock(1, 0), "joint", -1.0, (0j, 0j))


def test_p_function_refused_for_squeezed_light():
    c = evolution_coefficients(CURVE_A, 1.0)
    # Some quadrature of mode 1 is squeezed below vacuum at this time.
    assert not qp.p_representable(c, Coherent(1, 1), 1).representable
    with pytest.raises(PNotRepresentable):
        qp.quasi_closed_form(c, Coherent(1, 1), 1, 1.0, 0j)
    with pytest.raises(TruncatedTransform):
        qp.quasi_transform(c, Coherent(1, 1), 1, 1.0, qp.PhaseSpaceGrid(-2, 2, -2, 2, 5, 5))
    with pytest.raises(PNotRepresentable):
        qp.quasi_closed_form(c, Fock(1, 0), 1, 1.0, 0j)


def test_p_representability():
    c0 = EvolutionCoefficients.identity()
    rep = qp.p_representable(c0, Thermal(0.4, 0.1), 1)
    assert rep.representable and rep.margin > 0
    rep = qp.p_representable(c0, Coherent(1, 0), 1)
    assert rep.representable and rep.margin == pytest.approx(0.0, abs=1e-15)
    assert qp.p_representable(c0, Coherent(1, 0), 1, s=0.0).margin == pytest.approx(0.5)
    c = evolution_coefficients(CURVE_A, 1.0)
    assert not qp.p_representable(c, Coherent(1, 1), 1).representable
    # For a single mode at s = 1 the margin is <da+ da> - |<da da>|.
    from nlcoupler.gaussian import mode_moments
    m = mode_moments(c, Thermal(1.0, 1.0), 1)
    assert qp.p_representable(c, Thermal(1.0, 1.0), 1).margin == pytest.approx(
        m.n_central - abs(m.m_central), abs=1e-12)
    with pytest.raises(UnsupportedState):
        qp.p_representable(c, Fock(1, 0), 1)


def test_p_function_of_thermal_light():
    c = evolution_coefficients(CURVE_A, 0.4)
    state = Thermal(1.0, 1.0)
    grid = qp.auto_grid(c, state, 1, n=61)
    cf = qp.quasi_field_closed_form(c, state, 1, 1.0, grid)
    tr = qp.quasi_transform(c, state, 1, 1.0, grid)
    assert np.max(np.abs(cf.values - tr.values)) < 1e-6
    assert abs(cf.meta["normalization"] - 1) < 1e-3


@pytest.mark.parametrize("state", STATES)
def test_q_function_nonnegative(state):
    for t in (0.2, 1.5, 3.0):
        c = evolution_coefficients(DETUNED, t)
        grid = qp.auto_grid(c, state, 1, n=41)
        assert qp.quasi_field_closed_form(c, state, 1, -1.0, grid).values.min() >= -1e-12


def test_moments_examples():
    c0 = EvolutionCoefficients.identity()
    state = Coherent(0.9 - 0.2j, 0.4)
    field = qp.quasi_field_closed_form(c0, state, 1, 0.0, qp.auto_grid(c0, state, 1, n=61))
    assert qp.moments_from_field(field, (0, 0)).real == pytest.approx(1.0, abs=1e-3)
    assert qp.moments_from_field(field, (1, 1)).real == pytest.approx(abs(state.alpha1) ** 2 + 0.5, abs=1e-3)
    assert qp.moments_from_field(field, (0, 1)) == pytest.approx(state.alpha1, abs=1e-3)
    c = evolution_coefficients(CURVE_A, 1.0)
    field = qp.quasi_transform(c, Fock(1, 0), 1, 0.0, qp.auto_grid(c, Fock(1, 0), 1, n=61))
    assert qp.moments_from_field(field, (1, 1)).real == pytest.approx(mean_photon(c, Fock(1, 0), 1) + 0.5, abs=1e-3)


def test_joint_moments():
    c = evolution_coefficients(CURVE_A, 0.5)
    state = Coherent(0.5, 0.2)
    grids = (qp.auto_grid(c, state, 1, n=15), qp.auto_grid(c, state, 2, n=15))
    field = qp.quasi_field_closed_form(c, state, "joint", 0.0, grids)
    assert qp.moments_from_field(field, (0, 0, 0, 0)).real == pytest.approx(1.0, abs=1e-3)
    assert qp.moments_from_field(field, (0, 0, 1, 1)).real == pytest.approx(
        mean_photon(c, state, 2) + 0.5, abs=1e-3)


def test_moments_refuse_unnormalized_field():
    c0 = EvolutionCoefficients.identity()
    field = qp.quasi_field_closed_form(c0, Fock(0, 0), 1, 0.0, qp.PhaseSpaceGrid(0, 1, 0, 1, 5, 5))
    with pytest.raises(ValueError):
        qp.moments_from_field(field, (1, 1))


def test_fock_kernel_invariants():
    c = evolution_coefficients(DETUNED, 1.2)
    k = qp.fock_single_kernel(c, s=0.0, mode=1)
    K, L, M, N = c.mode(1)
    assert k.psi == K * L + N * M
    z2 = (1 - 2 * (abs(k.eta_plus) ** 2 + abs(k.eta_minus) ** 2)) * (
        1 - 2 * (abs(k.zeta_plus) ** 2 + abs(k.zeta_minus) ** 2))
    assert k.z ** 2 == pytest.approx(z2)
    # tau - s -+ 2|psi| are the eigenvalues of the Gaussian quadratic form.
    q1 = qp._quadratic_form(np.conj(K) - L, 1j * (np.conj(K) + L))
    q2 = qp._quadratic_form(np.conj(M) - N, 1j * (np.conj(M) + N))
    assert np.allclose(np.linalg.eigvalsh(q1 + q2), [k.tau - 2 * abs(k.psi), k.tau + 2 * abs(k.psi)])


def test_coherent_kernel():
    c = evolution_coefficients(CURVE_A, 0.8)
    state = Coherent(0.7, -0.2j)
    k = qp.coherent_quasi_kernel(c, state, 0.0, (0.1j, 0.3))
    mean, _ = qp._s_ordered_moments(c, state, "joint", 0.0)
    assert k.alpha_bar_1 == pytest.approx(complex(mean[0], mean[1]))
    assert k.alpha_bar_2 == pytest.approx(complex(mean[2], mean[3]))
    assert k.p_flags == (False, False) or squeezing(c, state).s1 >= 0


def test_thermal_kernels():
    c0 = EvolutionCoefficients.identity()
    k = qp.thermal_kernels(c0, Thermal(0.6, 0.2), 0.0)
    assert k.u == 0 and k.jq == pytest.approx(1.1)
    assert k.single_mode_flag and all(k.two_mode_flags)
    c = evolution_coefficients(CURVE_A, 0.9)
    k = qp.thermal_kernels(c, Thermal(0.6, 0.2), 0.4)
    assert k.jq - 0.2 == pytest.approx(k.abar1)
    assert abs(k.u) == pytest.approx(abs(k.c1))


@pytest.mark.parametrize("s", [0.0, -1.0, 0.5])
def test_expansions_match_covariance_route(s):
    c = evolution_coefficients(DETUNED, 1.4)
    pts = np.array([0.2 + 0.1j, -0.6j, 1.0, 0.5 - 0.5j])
    for mode in (1, 2):
        st = Coherent(0.6 + 0.1j, -0.3)
        assert np.allclose(qp.coherent_single_expansion(c, st, s, pts, mode),
                           qp.quasi_closed_form(c, st, mode, s, pts), atol=1e-13)
        th = Thermal(0.7, 0.3)
        assert np.allclose(qp.thermal_single_expansion(c, th, s, pts, mode),
                           qp.quasi_closed_form(c, th, mode, s, pts), atol=1e-13)


def test_grid_validation():
    with pytest.raises(ValueError):
        qp.PhaseSpaceGrid(0, 1, 0, 1, 1, 5)
    with pytest.raises(ValueError):
        qp.PhaseSpaceGrid(1, 0, 0, 1, 5, 5)
    with pytest.raises(ValueError):
        qp.PhaseSpaceGrid(0, float("inf"), 0, 1, 5, 5)
    with pytest.raises(ValueError):
        qp.char_fn(EvolutionCoefficients.identity(), Fock(0, 0), 3, 0.0, 0j)
