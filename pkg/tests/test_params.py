import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from cyclosgp.params import (
    CONSTANTS,
    DomainError,
    gamma_99_formula,
    gamma_threshold,
    level,
    level_for_degree,
    predicted_rho_inf_median,
    sigma_d,
    sigma_d_squared,
    trigamma,
)


def test_tower_params_shapes():
    lv = level(5)
    assert (lv.m, lv.n, lv.r) == (32, 16, 7)
    assert lv.J == tuple(range(1, 16, 2))
    assert len(lv.J) == lv.n // 2


@pytest.mark.parametrize("k", [2, 13, 0])
def test_level_out_of_range(k):
    with pytest.raises(DomainError):
        level(k)


def test_level_for_degree():
    assert level_for_degree(256) == 9
    assert level_for_degree(508) is None
    assert level_for_degree(4) == 3


@pytest.mark.parametrize("j,expected", [(1, math.pi ** 2 / 6), (2, 0.6449), (4, 0.2838)])
def test_trigamma_values(j, expected):
    assert trigamma(j) == pytest.approx(expected, abs=1e-4)


@given(st.integers(1, 200))
def test_trigamma_matches_mpmath_polygamma(j):
    assert trigamma(j) == pytest.approx(float(mpmath.polygamma(1, j)), rel=1e-12)


@given(st.integers(1, 200))
def test_trigamma_recurrence(j):
    assert trigamma(j) - trigamma(j + 1) == pytest.approx(1 / j ** 2, rel=1e-10)


@pytest.mark.parametrize("d,expected", [(1, 0.641), (2, 0.757), (3, 0.819), (4, 0.862)])
def test_sigma_d_table(d, expected):
    assert sigma_d(d) == pytest.approx(expected, abs=1e-3)


def test_sigma_1_squared_is_pi2_over_24():
    assert sigma_d_squared(1) == pytest.approx(math.pi ** 2 / 24, rel=1e-12)


@given(st.integers(1, 30))
def test_sigma_d_increasing(d):
    assert sigma_d(d + 1) > sigma_d(d)


@pytest.mark.parametrize("d,n,expected", [(4, 256, 20.6), (2, 512, 16.9), (2, 256, 14.5)])
def test_gamma_threshold_examples(d, n, expected):
    assert gamma_threshold(d, n, 1.17) == pytest.approx(expected, abs=0.1)


def test_gamma_threshold_small_n_rejected():
    with pytest.raises(DomainError):
        gamma_threshold(2, 4)


def test_gamma_99_is_kappa_times_threshold():
    assert gamma_99_formula(4, 256) == pytest.approx(CONSTANTS.kappa_tail * gamma_threshold(4, 256))


def test_predicted_median_rho_inf():
    assert predicted_rho_inf_median(4, 256) == pytest.approx(2.69, abs=0.01)
    assert predicted_rho_inf_median(2, 256) == pytest.approx(2.36, abs=0.01)


def test_pinned_constants():
    assert CONSTANTS.alpha_d_mlwe ** 2 <= CONSTANTS.C_worst
    assert CONSTANTS.sigma_t == pytest.approx(math.pi / (2 * math.sqrt(6)))
