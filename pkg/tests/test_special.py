import numpy as np
import pytest
from scipy.special import binom, eval_genlaguerre, eval_hermite, eval_jacobi

from nlcoupler.special import hermite, jacobi, laguerre, special_polynomials


def test_degree_zero_is_one():
    x = np.array([-1.3, 0.0, 2.5])
    assert np.all(special_polynomials("laguerre", 0, x) == 1)
    assert np.all(special_polynomials("hermite", 0, x) == 1)
    assert np.all(special_polynomials("jacobi", (0, 0.5, 1.5), x) == 1)


@pytest.mark.parametrize("n", range(8))
def test_laguerre_matches_scipy(n):
    x = np.linspace(0, 12, 25)
    for alpha in (0.0, 1.0, 2.5):
        assert np.allclose(laguerre(n, x, alpha), eval_genlaguerre(n, alpha, x), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n", range(8))
def test_hermite_matches_scipy(n):
    x = np.linspace(-3, 3, 25)
    assert np.allclose(hermite(n, x), eval_hermite(n, x), rtol=1e-12, atol=1e-9)


def test_hermite_complex_argument():
    z = 0.3 + 0.7j
    assert hermite(3, z) == pytest.approx(8 * z ** 3 - 12 * z, abs=1e-14)


@pytest.mark.parametrize("r", range(7))
def test_jacobi_at_one_is_binomial(r):
    for c, d in ((0.0, 0.0), (1.0, 2.0), (2.5, 0.5)):
        assert jacobi(r, c, d, 1.0) == pytest.approx(binom(r + c, r), rel=1e-12)


def test_jacobi_matches_scipy():
    x = np.linspace(-1, 1, 11)
    for r in range(6):
        assert np.allclose(jacobi(r, 1.5, 0.5, x), eval_jacobi(r, 1.5, 0.5, x), atol=1e-12)


def test_laguerre_one_zero_crossing():
    # L_1(4|alpha|^2) vanishes at |alpha|^2 = 1/4.
    assert laguerre(1, 4 * 0.25) == pytest.approx(0.0, abs=1e-15)


def test_invalid_degree():
    with pytest.raises(ValueError):
        laguerre(-1, 0.5)
    with pytest.raises(ValueError):
        hermite(1.5, 0.5)
    with pytest.raises(ValueError):
        special_polynomials("legendre", 2, 0.5)
