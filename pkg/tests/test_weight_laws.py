"""Weight-law moments, tails and extreme-value descriptors against closed forms."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from spectral_edge.weight_laws import (
    BOUNDED_TAIL,
    DEGENERATE_TAIL,
    EXP_TAIL,
    POLY_TAIL,
    MomentError,
    ParameterError,
    UnsupportedTailError,
    WeightLaw,
    spacing_distribution,
)

# (law, mean, second moment) worked out by hand from the standard formulas.
CLOSED_FORM_MOMENTS = [
    (WeightLaw.exponential(1.0), 1.0, 2.0),
    (WeightLaw.exponential(2.0), 0.5, 0.5),
    (WeightLaw.chi_squared(1.0), 1.0, 3.0),
    (WeightLaw.gamma(15.0, 15.0), 1.0, 16.0 / 15.0),
    (WeightLaw.pareto(0.75, 3.0), 1.125, 1.6875),
    (WeightLaw.scaled_beta(1.0, 1.0, 3.0), 0.25, 0.1),
    (WeightLaw.uniform(1.0), 0.5, 1.0 / 3.0),
    (WeightLaw.squared_student_t(9.0), 9.0 / 7.0, 243.0 / 35.0),
    (WeightLaw.point_mass(2.0), 2.0, 4.0),
]


@pytest.mark.parametrize("law, mean, second", CLOSED_FORM_MOMENTS)
def test_moments_closed_form(law, mean, second):
    got = law.moments()
    assert got == pytest.approx((mean, second), rel=1e-12)
    assert law.mean() == pytest.approx(mean, rel=1e-12)


@pytest.mark.parametrize("law, mean, second", CLOSED_FORM_MOMENTS)
def test_moments_agree_with_quadrature(law, mean, second):
    # Independent check: adaptive quadrature of s and s^2 against the density,
    # a different code path from the closed-form table.
    assert law.integrate(lambda s: s) == pytest.approx(mean, rel=1e-8)
    assert law.integrate(lambda s: s * s) == pytest.approx(second, rel=1e-8)


def test_moment_errors():
    with pytest.raises(MomentError):
        WeightLaw.pareto(1.0, 2.0).moments()
    with pytest.raises(MomentError):
        WeightLaw.squared_student_t(4.0).moments()
    with pytest.raises(MomentError):
        WeightLaw.squared_student_t(3.0, allow_assumption_violation=True).moments()


def test_parameter_validation():
    with pytest.raises(ParameterError):
        WeightLaw.exponential(0.0)
    with pytest.raises(ParameterError):
        WeightLaw.pareto(-1.0, 3.0)
    with pytest.raises(ParameterError):
        WeightLaw.scaled_beta(1.0, 0.0, 3.0)
    # Tail index below 2 breaks the second-moment assumption and must be
    # requested explicitly.
    with pytest.raises(ParameterError):
        WeightLaw.squared_student_t(3.0)
    heavy = WeightLaw.squared_student_t(3.0, allow_assumption_violation=True)
    assert heavy.poly_tail_index() == pytest.approx(1.5)
    with pytest.raises(ParameterError):
        WeightLaw.pareto(0.75, 1.5)
    assert WeightLaw.pareto(0.75, 1.5, allow_assumption_violation=True).tail_class == POLY_TAIL


def test_tail_classes():
    assert WeightLaw.pareto(0.75, 3.0).tail_class == POLY_TAIL
    assert WeightLaw.squared_student_t(9.0).tail_class == POLY_TAIL
    assert WeightLaw.exponential(1.0).tail_class == EXP_TAIL
    assert WeightLaw.gamma(15.0, 15.0).tail_class == EXP_TAIL
    assert WeightLaw.chi_squared(1.0).tail_class == EXP_TAIL
    assert WeightLaw.scaled_beta(1.0, 1.0, 3.0).tail_class == BOUNDED_TAIL
    assert WeightLaw.uniform(1.0).tail_class == BOUNDED_TAIL
    assert WeightLaw.point_mass(1.0).tail_class == DEGENERATE_TAIL


def test_poly_tail_index():
    assert WeightLaw.pareto(0.75, 3.0).poly_tail_index() == pytest.approx(3.0)
    # Squared t with nu dof has survival ~ x^{-nu/2}.
    assert WeightLaw.squared_student_t(9.0).poly_tail_index() == pytest.approx(4.5)
    assert WeightLaw.exponential(1.0).poly_tail_index() is None
    assert WeightLaw.point_mass(1.0).poly_tail_index() is None


def test_bounded_tail_descriptor_closed_forms():
    # Beta(a, b) scaled to [0, l]: density near the upper endpoint behaves like
    # econst * (l - s)^d with d = b - 1 and
    # econst = Gamma(a+b) / (Gamma(a) Gamma(b+1) l^b) * binom-style constant.
    l, d, econst = WeightLaw.scaled_beta(1.0, 1.0, 3.0).bounded_tail_descriptor()
    assert (l, d) == (1.0, 2.0)
    assert econst == pytest.approx(1.0, rel=1e-12)
    l, d, econst = WeightLaw.uniform(2.0).bounded_tail_descriptor()
    assert (l, d) == (2.0, 0.0)
    assert econst == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(UnsupportedTailError):
        WeightLaw.exponential(1.0).bounded_tail_descriptor()


def test_bounded_tail_descriptor_matches_sf():
    # sf(l - eps) ~ econst * eps^{d+1} near the endpoint.
    for law in [WeightLaw.scaled_beta(1.0, 1.0, 3.0), WeightLaw.uniform(2.0), WeightLaw.scaled_beta(2.0, 2.0, 2.0)]:
        l, d, econst = law.bounded_tail_descriptor()
        eps = 1e-4 * l
        predicted = econst * eps ** (d + 1.0)
        assert law.sf(l - eps) == pytest.approx(predicted, rel=1e-2)


def test_tail_threshold_b_n():
    n = 2000
    # Pareto: x_min n^{1/alpha}; exponential: log(n)/rate; both satisfy sf = 1/n.
    assert WeightLaw.pareto(0.75, 3.0).tail_threshold_b_n(n) == pytest.approx(0.75 * n ** (1 / 3))
    assert WeightLaw.exponential(2.0).tail_threshold_b_n(n) == pytest.approx(math.log(n) / 2.0)
    for law in [
        WeightLaw.pareto(0.75, 3.0),
        WeightLaw.exponential(1.0),
        WeightLaw.gamma(15.0, 15.0),
        WeightLaw.chi_squared(1.0),
        WeightLaw.squared_student_t(9.0),
    ]:
        b_n = law.tail_threshold_b_n(n)
        assert law.sf(b_n) == pytest.approx(1.0 / n, rel=1e-6)


def test_evt_limit_frechet():
    law = WeightLaw.pareto(0.75, 3.0)
    ev = law.evt_limit(2000)
    assert ev.family == "frechet"
    assert ev.shape == pytest.approx(3.0)
    assert ev.center == 0.0
    assert ev.scale == pytest.approx(law.tail_threshold_b_n(2000))
    x = np.array([0.5, 1.0, 2.0])
    assert np.allclose(ev.limit_cdf(x), np.exp(-x ** -3.0))
    assert np.allclose(ev.standardize(ev.scale * x), x)


def test_evt_limit_gumbel():
    law = WeightLaw.exponential(1.0)
    ev = law.evt_limit(2000)
    assert ev.family == "gumbel"
    b_n = math.log(2000)
    assert ev.center == pytest.approx(b_n)
    # Scale is 1/g'(b_n); the exponential hazard has unit slope.
    assert ev.scale == pytest.approx(1.0)
    x = np.array([-1.0, 0.0, 3.0])
    assert np.allclose(ev.limit_cdf(x), np.exp(-np.exp(-x)))


def test_evt_limit_weibull():
    law = WeightLaw.scaled_beta(1.0, 1.0, 3.0)
    ev = law.evt_limit(2000)
    assert ev.family == "weibull"
    assert ev.shape == pytest.approx(3.0)  # d + 1
    assert ev.center == pytest.approx(1.0)  # right endpoint
    # econst = 1 here, so the scale is n^{-1/(d+1)} exactly.
    assert ev.scale == pytest.approx(2000 ** (-1.0 / 3.0), rel=1e-12)
    x = np.array([-2.0, -1.0, -0.1])
    assert np.allclose(ev.limit_cdf(x), np.exp(-np.abs(x) ** 3.0))
    assert ev.limit_cdf(np.array([0.5]))[0] == pytest.approx(1.0)


def test_evt_limit_degenerate():
    with pytest.raises(UnsupportedTailError):
        WeightLaw.point_mass(1.0).evt_limit(100)


def test_g_tail_exponential_family():
    law = WeightLaw.exponential(2.0)
    assert law.g_tail(3.0) == pytest.approx(6.0, rel=1e-12)
    assert law.g_tail_deriv(3.0) == pytest.approx(2.0, rel=1e-6)
    gam = WeightLaw.gamma(15.0, 15.0)
    # -log sf with the regularized upper incomplete gamma as the oracle.
    x = 2.5
    oracle = -math.log(stats.gamma(a=15.0, scale=1.0 / 15.0).sf(x))
    assert gam.g_tail(x) == pytest.approx(oracle, rel=1e-10)
    # Hazard of Gamma(shape, rate) is rate - (shape-1)/x + O(x^{-2}).
    assert gam.g_tail_deriv(40.0) == pytest.approx(15.0 - 14.0 / 40.0, rel=1e-3)
    with pytest.raises(UnsupportedTailError):
        WeightLaw.pareto(0.75, 3.0).g_tail(3.0)


def test_sampling_matches_cdf():
    rng = np.random.default_rng(7)
    for law in [
        WeightLaw.exponential(1.0),
        WeightLaw.pareto(0.75, 3.0),
        WeightLaw.gamma(5.0, 5.0),
        WeightLaw.scaled_beta(1.0, 1.0, 3.0),
        WeightLaw.uniform(1.0),
        WeightLaw.chi_squared(1.0),
        WeightLaw.squared_student_t(9.0),
    ]:
        draws = law.sample(4000, rng)
        assert draws.shape == (4000,)
        stat = stats.kstest(draws, law.cdf).pvalue
        assert stat > 1e-3, law.family


def test_point_mass_sampling():
    draws = WeightLaw.point_mass(2.0).sample(10, np.random.default_rng(0))
    assert np.all(draws == 2.0)


def test_sampling_deterministic_given_seed():
    law = WeightLaw.gamma(5.0, 5.0)
    a = law.sample(16, np.random.default_rng(11))
    b = law.sample(16, np.random.default_rng(11))
    assert np.array_equal(a, b)


def test_integrate_handles_complex_integrands():
    law = WeightLaw.scaled_beta(1.0, 1.0, 3.0)
    z = complex(-2.0, 1e-2)
    val = law.integrate(lambda s: s / (1.0 + s * z))
    assert isinstance(val, complex)
    # Compare against a dense Riemann sum on the compact support.
    grid = np.linspace(1e-9, 1.0 - 1e-9, 200001)
    ref = np.trapezoid(grid / (1.0 + grid * z) * law.pdf(grid), grid)
    assert val == pytest.approx(ref, rel=1e-5)


def test_variance_of():
    assert WeightLaw.uniform(1.0).variance_of(lambda s: s) == pytest.approx(1.0 / 12.0, rel=1e-9)
    assert WeightLaw.point_mass(3.0).variance_of(lambda s: s) == pytest.approx(0.0, abs=1e-12)


def test_spacing_distribution_exponential_rates():
    # For i.i.d. exponential weights the i-th normalized spacing between
    # consecutive upper order statistics is exponential with rate i * rate.
    dist = spacing_distribution(3, 400, 2.0)
    assert dist.mean() == pytest.approx(1.0 / 6.0)
    assert dist.var() == pytest.approx(1.0 / 36.0)
    with pytest.raises(ParameterError):
        spacing_distribution(0, 400, 1.0)
    with pytest.raises(ParameterError):
        spacing_distribution(400, 400, 1.0)


def test_spacing_distribution_monte_carlo():
    # Renyi representation oracle: simulate order statistics directly.
    rng = np.random.default_rng(3)
    n, reps = 50, 4000
    draws = rng.exponential(1.0, size=(reps, n))
    top = -np.sort(-draws, axis=1)
    i = 4
    spacings = top[:, i - 1] - top[:, i]
    assert stats.kstest(spacings, spacing_distribution(i, n, 1.0).cdf).pvalue > 1e-3


def test_from_config_round_trip():
    for law in [
        WeightLaw.exponential(1.0),
        WeightLaw.pareto(0.75, 3.0),
        WeightLaw.gamma(15.0, 15.0),
        WeightLaw.scaled_beta(1.0, 1.0, 3.0),
        WeightLaw.uniform(2.0),
        WeightLaw.chi_squared(1.0),
        WeightLaw.squared_student_t(9.0),
        WeightLaw.point_mass(2.0),
    ]:
        clone = WeightLaw.from_config(law.family, dict(law.params))
        assert clone == law
        assert hash(clone) == hash(law)


def test_from_config_heavy_tail_needs_flag():
    with pytest.raises(ParameterError):
        WeightLaw.from_config("squared_student_t", {"nu": 3.0})
    law = WeightLaw.from_config("squared_student_t", {"nu": 3.0}, allow_assumption_violation=True)
    assert law.poly_tail_index() == pytest.approx(1.5)


def test_unknown_family_rejected():
    with pytest.raises(ParameterError):
        WeightLaw.from_config("cauchy", {})


@given(st.floats(0.1, 5.0), st.floats(2.1, 8.0))
def test_pareto_cdf_properties(x_min, alpha):
    law = WeightLaw.pareto(x_min, alpha)
    xs = np.linspace(x_min * 1.0001, x_min * 50, 64)
    cdf = law.cdf(xs)
    assert np.all(np.diff(cdf) >= 0)
    assert np.all((cdf >= 0) & (cdf <= 1))
    assert np.allclose(law.sf(xs), 1.0 - cdf, atol=1e-12)
    mean, second = law.moments()
    assert second >= mean * mean


@given(st.floats(0.2, 4.0))
def test_exponential_g_tail_is_linear(rate):
    law = WeightLaw.exponential(rate)
    xs = np.array([0.5, 1.0, 2.0, 7.0])
    for x in xs:
        assert law.g_tail(float(x)) == pytest.approx(rate * x, rel=1e-10)


@given(st.floats(0.5, 3.0), st.floats(0.5, 4.0), st.floats(1.2, 6.0))
def test_scaled_beta_descriptor_consistency(l, a, b):
    law = WeightLaw.scaled_beta(l, a, b)
    endpoint, d, econst = law.bounded_tail_descriptor()
    assert endpoint == pytest.approx(l)
    assert d == pytest.approx(b - 1.0)
    assert econst > 0
    # Density just below the endpoint follows econst * (d+1) * (l - s)^d.
    eps = 1e-5 * l
    assert law.pdf(l - eps) == pytest.approx(econst * (d + 1.0) * eps ** d, rel=5e-4)
