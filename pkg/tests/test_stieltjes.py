"""Self-consistent transform solver against closed forms and quadrature oracles.

The point-mass weight law reduces every system to the classical square-root
bulk whose transform, edge and density are elementary; those closed forms pin
the solver. Bounded laws are checked by evaluating the defining equations with
test-local quadrature at the returned solution, which exercises none of the
library's own integration paths.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from spectral_edge.matrix_model import ModelKind, eigenvalues, sample_data
from spectral_edge.population import PopulationSpec
from spectral_edge.stieltjes import (
    CriticalCaseError,
    DegenerateLawError,
    SolverEnv,
    UnsupportedTailError,
    WrongRegimeError,
    classify_regime,
    default_d1,
    density,
    edge_coupled,
    edge_weibull_regime,
    mu1_divergent,
    predict_lambda1,
    solve_edge,
    solve_m1,
    varphi,
    vartheta,
)
from spectral_edge.weight_laws import WeightLaw

BETA = WeightLaw.scaled_beta(1.0, 1.0, 3.0)
BETA_PDF = lambda s: 3.0 * (1.0 - s) ** 2  # noqa: E731
POP = PopulationSpec.identity(64)


def sep_env(law, phi):
    return SolverEnv(ModelKind.separable(), POP, law=law, phi=phi)


def ell_env(law, phi):
    return SolverEnv(ModelKind.elliptical(), POP, law=law, phi=phi)


def mp_m1_closed(z, phi):
    # Root of z*m^2 + (z + phi - 1)*m + phi = 0 on the Herglotz branch.
    b = z + phi - 1.0
    root = np.sqrt(b * b - 4.0 * z * phi + 0j)
    if root.imag * np.imag(z + 0j) < 0 or (np.imag(z + 0j) == 0 and root.real < 0):
        root = -root
    return (-b + root) / (2.0 * z)


@pytest.mark.parametrize("phi", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_point_mass_edge_closed_form(phi):
    rep = edge_coupled(sep_env(WeightLaw.point_mass(1.0), phi))
    assert rep.L_plus == pytest.approx((1.0 + math.sqrt(phi)) ** 2, abs=1e-8)
    assert rep.m1_at_edge == pytest.approx(-math.sqrt(phi) / (1.0 + math.sqrt(phi)), abs=1e-8)
    assert rep.regime == "tw_mixture"


@pytest.mark.parametrize("phi", [0.5, 2.0])
def test_point_mass_transform_closed_form(phi):
    env = sep_env(WeightLaw.point_mass(1.0), phi)
    L = (1.0 + math.sqrt(phi)) ** 2
    for z in [complex(L + 0.1, 1e-9), complex(L + 1.0, 1e-9),
              complex(L + 0.5, 0.7), complex(1.0, 1.5)]:
        got = solve_m1(z, env)
        want = mp_m1_closed(z, phi)
        assert got.m1 == pytest.approx(want, rel=1e-7, abs=1e-8)
        assert got.residual <= 1e-10
        assert got.m1.imag > 0


def test_point_mass_triple_relations():
    # m is the p-side transform, m1 = phi * m, and the companion transform
    # m2 differs from m1 by the zero-padding term (1 - phi)/z.
    env = sep_env(WeightLaw.point_mass(1.0), 0.5)
    z = complex(3.5, 1e-9)
    tr = solve_m1(z, env)
    assert tr.m1 == pytest.approx(0.5 * tr.m, rel=1e-12)
    assert tr.m2 == pytest.approx(tr.m1 - 0.5 / z, rel=1e-12)


def test_point_mass_density_interior():
    # Closed-form bulk density sqrt((L+ - x)(x - L-)) / (2 pi phi x).
    env1 = sep_env(WeightLaw.point_mass(1.0), 1.0)
    assert density(2.0, env1) == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-6)
    phi = 0.5
    env = sep_env(WeightLaw.point_mass(1.0), phi)
    lo, hi = (1 - math.sqrt(phi)) ** 2, (1 + math.sqrt(phi)) ** 2
    for x in [0.4, 1.2, 2.0]:
        want = math.sqrt((hi - x) * (x - lo)) / (2.0 * math.pi * phi * x)
        assert density(x, env, L_plus=hi) == pytest.approx(want, rel=1e-5)


def test_point_mass_density_total_mass():
    phi = 0.5
    env = sep_env(WeightLaw.point_mass(1.0), phi)
    lo, hi = (1 - math.sqrt(phi)) ** 2, (1 + math.sqrt(phi)) ** 2
    xs = np.linspace(lo + 1e-4, hi - 1e-4, 400)
    mass = np.trapezoid([density(float(x), env, L_plus=hi) for x in xs], xs)
    assert mass == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("phi, L_want", [(2.0, 2.5), (4.0, 4.5)])
def test_bounded_steep_edge_explicit(phi, L_want):
    # With a unit right endpoint the edge transform value is -1 and the edge
    # location is phi + integral of s/(1-s); for Beta(1,3) that integral is
    # 3*int s(1-s) ds = 1/2, all by hand.
    rep = solve_edge(sep_env(BETA, phi))
    assert rep.regime == "weibull"
    v2 = quad(lambda s: s / (1.0 - s) * BETA_PDF(s), 0, 1)[0]
    assert rep.L_plus == pytest.approx(phi + v2, rel=1e-8)
    assert rep.L_plus == pytest.approx(L_want, rel=1e-10)
    assert rep.d == pytest.approx(2.0)


def test_bounded_steep_edge_constants():
    rep = solve_edge(sep_env(BETA, 2.0))
    v1, v2, v3, v4 = rep.varsigma
    assert v1 == pytest.approx(1.0, rel=1e-8)
    assert v2 == pytest.approx(0.5, rel=1e-8)
    assert v3 == pytest.approx(0.25, rel=1e-8)
    assert v4 == pytest.approx(0.5, rel=1e-8)
    center, unit, exponent = rep.standardization
    assert center == pytest.approx(2.5, rel=1e-10)
    # unit = (1 - phi*v3) / (v4 * l^2) with l = 1.
    assert unit == pytest.approx((1.0 - 2.0 * v3) / v4, rel=1e-8)
    assert exponent == pytest.approx(-1.0 / 3.0)


def test_bounded_flat_edge_pins_and_residual():
    phi = 0.5
    rep = solve_edge(sep_env(BETA, phi))
    assert rep.regime == "gaussian"
    # Pinned solution of the coupled system, obtained independently.
    assert rep.L_plus == pytest.approx(0.98781464, rel=1e-6)
    assert rep.m1_at_edge == pytest.approx(-0.93409790, rel=1e-6)
    assert rep.vartheta == pytest.approx(0.36824896, rel=1e-6)

    # Test-local quadrature residual of the defining pair F = 0, dF/dm1 = 0.
    def W(m):
        return quad(lambda s: s / (1.0 + s * m) * BETA_PDF(s), 0, 1)[0]

    def F(m, z):
        return m - phi / (W(m) - z)

    m1, L = rep.m1_at_edge, rep.L_plus
    assert abs(F(m1, L)) <= 1e-8
    h = 1e-5
    dF = (F(m1 + h, L) - F(m1 - h, L)) / (2 * h)
    assert abs(dF) <= 1e-4

    # The fluctuation constant is the weight-law variance of s/(1+s*m1).
    e1 = quad(lambda s: s / (1.0 + s * m1) * BETA_PDF(s), 0, 1)[0]
    e2 = quad(lambda s: (s / (1.0 + s * m1)) ** 2 * BETA_PDF(s), 0, 1)[0]
    assert rep.vartheta == pytest.approx(e2 - e1 * e1, rel=1e-9)
    assert vartheta(sep_env(BETA, phi), m1) == pytest.approx(e2 - e1 * e1, rel=1e-9)

    center, unit, exponent = rep.standardization
    assert center == pytest.approx(rep.L_plus)
    assert unit == pytest.approx(math.sqrt(rep.vartheta), rel=1e-8)
    assert exponent == -0.5


def test_uniform_spherical_edge_residual():
    # Spherical-column model: m1 = 1/(W - z) with W = (1/phi) * E[s/(1+s*m1)].
    phi = 1.0
    law = WeightLaw.uniform(1.0)
    rep = solve_edge(ell_env(law, phi), n=2000)
    assert rep.regime == "tw_mixture"

    def W(m):
        return (1.0 / phi) * quad(lambda s: s / (1.0 + s * m), 0, 1)[0]

    def F(m, z):
        return m - 1.0 / (W(m) - z)

    m1, L = rep.m1_at_edge, rep.L_plus
    assert abs(F(m1, L)) <= 1e-8
    h = 1e-5
    assert abs((F(m1 + h, L) - F(m1 - h, L)) / (2 * h)) <= 1e-4
    assert rep.gamma > 0
    center, unit, exponent = rep.standardization
    assert center == pytest.approx(L)
    assert unit == pytest.approx(1.0 / rep.gamma, rel=1e-8)
    assert exponent == pytest.approx(-2.0 / 3.0)


def test_square_root_edge_density_matches_gamma():
    # Near the edge the bulk density follows pi^{-1} gamma^{3/2} sqrt(kappa).
    rep = solve_edge(ell_env(WeightLaw.uniform(1.0), 1.0), n=2000)
    g = rep.gamma
    for kappa in [2e-3, 1e-3]:
        rho = density(rep.L_plus - kappa, ell_env(WeightLaw.uniform(1.0), 1.0), L_plus=rep.L_plus)
        want = g ** 1.5 * math.sqrt(kappa) / math.pi
        assert rho == pytest.approx(want, rel=0.25)


def test_classify_regime_dispatch():
    assert classify_regime(sep_env(BETA, 2.0)).regime == "weibull"
    assert classify_regime(sep_env(BETA, 0.5)).regime == "gaussian"
    assert classify_regime(sep_env(WeightLaw.uniform(1.0), 1.0)).regime == "tw_mixture"
    assert classify_regime(sep_env(WeightLaw.scaled_beta(1.0, 1.0, 2.0), 1.0)).regime == "tw_mixture"
    rec = classify_regime(sep_env(BETA, 2.0))
    assert rec.d == pytest.approx(2.0)
    assert rec.phi_inverse == pytest.approx(0.5)
    assert rec.varsigma3 == pytest.approx(0.25, rel=1e-8)


def test_classify_regime_unbounded_rejected():
    for law in [WeightLaw.pareto(0.75, 3.0), WeightLaw.exponential(1.0),
                WeightLaw.gamma(5.0, 5.0), WeightLaw.squared_student_t(9.0)]:
        with pytest.raises(WrongRegimeError):
            classify_regime(sep_env(law, 1.0))


def test_classify_regime_critical_case():
    # For Beta(1,3) the transition 1/phi = varsigma_3 lands exactly at phi = 1.
    with pytest.raises(CriticalCaseError):
        classify_regime(sep_env(BETA, 1.0))


def test_classify_regime_degenerate_law():
    # Point-mass weights have no tail, so classification and the steep-edge
    # solver both refuse them; the coupled edge solver still works and labels
    # the square-root edge.
    with pytest.raises(DegenerateLawError):
        classify_regime(sep_env(WeightLaw.point_mass(1.0), 1.0))
    with pytest.raises(DegenerateLawError):
        edge_weibull_regime(sep_env(WeightLaw.point_mass(1.0), 1.0))
    assert edge_coupled(sep_env(WeightLaw.point_mass(1.0), 1.0)).regime == "tw_mixture"


def test_wrong_regime_cross_calls():
    with pytest.raises(WrongRegimeError):
        edge_weibull_regime(sep_env(BETA, 0.5))  # flat-edge case
    with pytest.raises(WrongRegimeError):
        edge_coupled(sep_env(BETA, 2.0))  # steep-edge case


def test_predict_lambda1_families():
    n = 2000
    pred = predict_lambda1(sep_env(WeightLaw.pareto(0.75, 3.0), 1.0), n=n)
    assert pred.family == "frechet"
    assert pred.center == 0.0
    assert pred.scale == pytest.approx(0.75 * n ** (1.0 / 3.0), rel=1e-10)
    assert pred.shape == pytest.approx(3.0)

    pred = predict_lambda1(sep_env(WeightLaw.exponential(1.0), 1.0), n=n)
    assert pred.family == "gumbel"
    assert pred.center == pytest.approx(math.log(n), rel=1e-10)
    assert pred.scale == pytest.approx(1.0, rel=1e-8)

    pred = predict_lambda1(sep_env(BETA, 2.0), n=n)
    assert pred.family == "weibull"
    assert pred.center == pytest.approx(2.5, rel=1e-8)
    assert pred.scale == pytest.approx(n ** (-1.0 / 3.0), rel=1e-6)
    assert pred.shape == pytest.approx(3.0)

    pred = predict_lambda1(sep_env(BETA, 0.5), n=n)
    assert pred.family == "gaussian"
    assert pred.center == pytest.approx(0.98781464, rel=1e-6)
    assert pred.scale == pytest.approx(math.sqrt(0.36824896 / n), rel=1e-6)

    pred = predict_lambda1(ell_env(WeightLaw.uniform(1.0), 1.0), n=n)
    assert pred.family == "tw_mixture"
    rep = solve_edge(ell_env(WeightLaw.uniform(1.0), 1.0), n=n)
    assert pred.center == pytest.approx(rep.L_plus, rel=1e-10)
    assert pred.scale == pytest.approx(1.0 / (rep.gamma * n ** (2.0 / 3.0)), rel=1e-8)

    pred = predict_lambda1(sep_env(WeightLaw.point_mass(1.0), 1.0), n=n)
    assert pred.family == "point"
    assert pred.center == pytest.approx(4.0, abs=1e-8)


def test_predict_standardize_is_affine():
    pred = predict_lambda1(sep_env(BETA, 0.5), n=2000)
    got = pred.standardize(np.array([pred.center, pred.center + pred.scale]))
    assert np.allclose(got, [0.0, 1.0])


def test_varphi_scaling():
    # Data-scale factor: population mean for spherical columns, phi times it
    # for independent entries.
    pop = PopulationSpec(np.array([3.0, 2.0, 1.0]))
    assert varphi(SolverEnv(ModelKind.elliptical(), pop, law=BETA, phi=0.5)) == pytest.approx(2.0)
    assert varphi(SolverEnv(ModelKind.separable(), pop, law=BETA, phi=0.5)) == pytest.approx(1.0)


def test_lambda1_matches_simulation_point_mass():
    phi, n = 0.5, 1200
    p = int(phi * n)
    data = sample_data(ModelKind.separable(), PopulationSpec.identity(p),
                       WeightLaw.point_mass(1.0), p, n, seed=42)
    lam1 = eigenvalues(data).largest
    assert lam1 == pytest.approx((1 + math.sqrt(phi)) ** 2, rel=0.03)


def test_lambda1_matches_simulation_weibull_regime():
    n, p = 900, 1800
    data = sample_data(ModelKind.separable(), PopulationSpec.identity(p), BETA, p, n, seed=7)
    lam1 = eigenvalues(data).largest
    # Largest eigenvalue sits just below the deterministic edge 2.5, within a
    # few units of the n^{-1/3} scale.
    assert 2.5 - 5.0 * 900 ** (-1.0 / 3.0) < lam1 < 2.5 + 0.02


def test_lambda1_matches_simulation_spherical_uniform():
    n = 1000
    rep = solve_edge(ell_env(WeightLaw.uniform(1.0), 1.0), n=n)
    data = sample_data(ModelKind.elliptical(), PopulationSpec.identity(n),
                       WeightLaw.uniform(1.0), n, n, seed=11)
    lam1 = eigenvalues(data).largest
    scale = 1.0 / (rep.gamma * n ** (2.0 / 3.0))
    assert rep.L_plus - 8 * scale < lam1 < rep.L_plus + 4 * scale


def test_mu1_divergent_basics():
    law = WeightLaw.pareto(0.75, 3.0)
    rng = np.random.default_rng(3)
    w = law.sample(60, rng)
    pop = PopulationSpec.identity(30)
    env_e = SolverEnv(ModelKind.elliptical(), pop, weights=w, law=law)
    env_s = SolverEnv(ModelKind.separable(), pop, weights=w, law=law)
    mu_e = mu1_divergent(env_e)
    mu_s = mu1_divergent(env_s)
    assert mu_e > varphi(env_e) * w.max()
    # The two model kinds differ exactly by the aspect-ratio weighting.
    assert mu_s == pytest.approx(0.5 * mu_e, rel=1e-10)
    assert mu1_divergent(env_e) == mu_e  # deterministic
    with pytest.raises(UnsupportedTailError):
        mu1_divergent(SolverEnv(ModelKind.elliptical(), pop,
                                weights=np.linspace(0.1, 1.0, 60), law=WeightLaw.uniform(1.0)))


def test_default_d1():
    assert default_d1(WeightLaw.pareto(0.75, 3.0), 2000) == pytest.approx(2000 ** (1 / 3 - 0.01), rel=1e-10)
    assert default_d1(WeightLaw.exponential(1.0), 2000) == 1.0
    with pytest.raises(UnsupportedTailError):
        default_d1(WeightLaw.uniform(1.0), 2000)
