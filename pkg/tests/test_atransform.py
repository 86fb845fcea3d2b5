import math

import numpy as np
import pytest

from appellstop.atransform import (
    DegenerateLaw,
    ExponentialLaw,
    NegExponentialLaw,
    NormalLaw,
    SingularLawError,
    appell_poly,
    parse_law,
    reciprocal_mgf_derivs,
    series_exp,
    series_mul,
    series_reciprocal,
    transform,
    transform_power,
)
from appellstop.levy import DomainError, LevyModel
from appellstop.reward import RewardExpr, derivative, power_reward, two_sided_reward

EXP = ExponentialLaw(0.2)


def test_series_helpers():
    f = np.array([1.0, 2.0, 3.0])
    assert np.allclose(series_mul(f, series_reciprocal(f)), [1, 0, 0])
    assert np.allclose(series_exp(np.array([0.0, 1.0, 0, 0])), [1, 1, 0.5, 1 / 6])
    batch = np.array([[1.0, 2.0], [2.0, 1.0]])
    assert np.allclose(series_reciprocal(batch), [[1, -2], [0.5, -0.25]])


def test_reciprocal_derivs():
    assert np.allclose(reciprocal_mgf_derivs(EXP, 0.1, 1), [0.5, -5.0])
    assert np.allclose(reciprocal_mgf_derivs(EXP, 0.0, 2), [1.0, -5.0, 0.0])


@pytest.mark.parametrize("n,coeffs", [(0, [1]), (1, [-5, 1]), (2, [0, -10, 1]), (3, [0, 0, -15, 1])])
def test_appell_exponential(n, coeffs):
    # Q_n = y^(n-1) (y - n/beta) for Exp(beta)
    assert np.allclose(appell_poly(EXP, n), coeffs, atol=1e-12)


def test_appell_negexp_and_normal():
    assert np.allclose(appell_poly(NegExponentialLaw(0.2), 1), [5, 1])
    # standard normal gives the probabilists' Hermite polynomials
    assert np.allclose(appell_poly(NormalLaw(0, 1), 4), [3, 0, -6, 0, 1])
    assert np.allclose(appell_poly(DegenerateLaw(2.0), 2), [4, -4, 1])


def test_exponential_image():
    img = transform(RewardExpr.from_terms([(1, 0, 0.1)]), EXP)
    assert img(3.0) == pytest.approx(0.5 * math.exp(0.3), rel=1e-14)


def test_two_sided_image_upper_branch():
    img = transform(two_sided_reward(0.1, 0.05), EXP)
    x = 2.0
    assert img(x) == pytest.approx(0.5 * math.exp(0.1 * x) + 1.25 * math.exp(-0.05 * x) - 2, rel=1e-14)
    assert img(0.0) == pytest.approx(-0.25)


def test_domain_and_positive_part_errors():
    with pytest.raises(DomainError):
        transform(RewardExpr.from_terms([(1, 0, 0.3)]), EXP)
    with pytest.raises(ValueError):
        transform(power_reward(1), EXP)
    with pytest.raises(ValueError):
        appell_poly(EXP, -1)


def test_singular_law():
    class Zero(DegenerateLaw):
        def taylor_coeffs(self, a, k):
            return np.zeros(k + 1)

    with pytest.raises(SingularLawError):
        reciprocal_mgf_derivs(Zero(), 0.0, 2)


def test_differential_property():
    g = RewardExpr.from_terms([(1, 2, 0.05), (-3, 1, -0.1), (2, 0, 0)])
    img = transform(g, EXP)
    dimg = transform(derivative(g), EXP)
    assert np.allclose(img.derivative()(np.linspace(-5, 5, 11)), dimg(np.linspace(-5, 5, 11)), rtol=1e-12)


def test_parse_law():
    assert isinstance(parse_law("exp:0.2"), ExponentialLaw)
    law = parse_law("bm:0,1,2")
    assert law.var == 2.0 and law.tag == "bm:0,1,2"
    assert parse_law("const").value == 0.0
    with pytest.raises(ValueError):
        parse_law("cauchy:1")
    with pytest.raises(ValueError):
        parse_law("exp:x")


def test_of_process_mgf():
    m = LevyModel(0.1, 2.0, 0.5)
    law = NormalLaw.of_process(m, 1.5)
    u = 0.3
    assert law.mgf(u) == pytest.approx(math.exp(1.5 * (2.0 * u * u + 0.1 * u)))


def test_moments():
    assert EXP.moments(2) == pytest.approx(2 / 0.04)
    assert NormalLaw(1.0, 4.0).moments(2) == pytest.approx(5.0)


def test_transform_power_values():
    assert transform_power(DegenerateLaw(0.0), -0.5, 4.0) == pytest.approx(0.5, abs=1e-9)
    assert transform_power(EXP, -1.0, 5.0) == pytest.approx(0.4, abs=1e-8)
    # 1/M(-u) = 1 + u/beta gives y^nu - nu y^(nu-1)/beta
    assert transform_power(EXP, -0.5, 3.0) == pytest.approx(3**-0.5 + 0.5 * 3**-1.5 / 0.2, abs=1e-9)


def test_transform_power_errors():
    with pytest.raises(ValueError):
        transform_power(EXP, 0.5, 1.0)
    with pytest.raises(ValueError):
        transform_power(EXP, -1.0, -1.0)
    with pytest.raises(DomainError):
        transform_power(NegExponentialLaw(0.2), -1.0, 1.0)
