"""Self-consistent Stieltjes transforms and the spectral edge.

The limiting spectrum of Q = YY^T is described by a pair of coupled
equations for the transforms (m1, m2) plus a third display recovering the
transform m of the spectral law itself. Eliminating m2 leaves one scalar
fixed-point equation

    F(m1, z) = A(m1, z) - m1 = 0,
    A(m1, z) = c_i * mean_i sigma_i / (-z + sigma_i * W(m1)),
    W(m1)    = c_w * mean_F [ s / (1 + s*m1) ],

where mean_F is the sample mean over realized weights (conditional mode) or
the integral against the weight law (unconditional mode), and the constants
(c_i, c_w) are (1, 1/phi) for elliptical data and (phi, 1) for separable
i.i.d. data, phi = p/n.

For bounded weight support (0, l] the rightmost edge L_plus of the limiting
spectrum behaves in one of three ways, controlled by the tail exponent d of
the weight CDF at l and the threshold varsigma_3:

* d > 1 and 1/phi > varsigma_3: m1(L_plus) = -1/l and L_plus solves a single
  explicit equation; lambda_1 fluctuates like the largest weight (Weibull).
* d > 1 and 1/phi < varsigma_3: (L_plus, m1(L_plus)) solve the coupled pair
  F = 0, dF/dm1 = 0 with m1(L_plus) > -1/l; lambda_1 is Gaussian.
* -1 < d <= 1: same coupled pair; the density has a square-root edge and
  lambda_1 is a Tracy-Widom/Gaussian mixture.

For unbounded weights the top eigenvalues diverge with the extreme weights;
``mu1_divergent`` locates the classical position of the largest one and
``predict_lambda1`` exposes the Frechet/Gumbel standardizations.
"""

import math
import warnings

import numpy as np
from scipy import optimize

from .weight_laws import (
    BOUNDED_TAIL, DEGENERATE_TAIL, EXP_TAIL, POLY_TAIL,
    UnsupportedTailError, WeightLaw,
)

_TOL = 1e-10
_EDGE_TOL = 1e-8
_BRENTQ_KW = dict(xtol=1e-14, rtol=8.9e-16, maxiter=200)


class SolverError(RuntimeError):
    """Fixed-point or root-finding failure; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class WrongRegimeError(ValueError):
    """The requested edge equation does not govern this environment."""


class CriticalCaseError(ValueError):
    """phi^{-1} = varsigma_3 exactly; the transition law is not covered."""


class DegenerateLawError(ValueError):
    """Point-mass weights admit no tail-based regime classification."""


class SolverEnv:
    """Everything a solve needs: model kind, population, weight description.

    Conditional mode fixes a realized vector of squared weights (the law may
    ride along as metadata for tail constants); unconditional mode averages
    over a WeightLaw and needs the aspect ratio phi = p/n explicitly.
    """

    def __init__(self, kind, pop, weights=None, law=None, phi=None):
        self.elliptical = (
            kind == "elliptical" or getattr(kind, "name", None) == "elliptical")
        self.pop = pop
        self.sigmas = np.asarray(pop.sigmas, dtype=float)
        self.p = self.sigmas.size
        if law is not None and not isinstance(law, WeightLaw):
            raise ValueError("law must be a WeightLaw")
        self.law = law
        if weights is not None:
            w = np.asarray(weights, dtype=float)
            if np.any(w <= 0):
                raise ValueError("conditional weights must be positive")
            self.weights = w
            self.n = w.size
            self.phi = self.p / self.n
        else:
            if law is None:
                raise ValueError("give weights=, or law= with phi=")
            if phi is None or phi <= 0:
                raise ValueError("unconditional mode needs phi > 0")
            self.weights = None
            self.phi = float(phi)
            self.n = None
        # prefactors turning every sum into a mean: sigma-side sums carry
        # 1/p (elliptical) or 1/n (separable); weight-side sums carry
        # 1/p (elliptical) or 1/n (separable) over the n weights
        self.c_i = 1.0 if self.elliptical else self.phi
        self.c_w = 1.0 / self.phi if self.elliptical else 1.0
        # fixed Gauss-Legendre rule for the weight-law integrals inside
        # iterative loops; converged results are re-verified against the
        # adaptive quadrature, so this only buys speed
        self._nodes = self._node_weights = None
        if (not self.conditional and law is not None
                and law.tail_class == BOUNDED_TAIL):
            lo, hi = law.support
            pdf_ends = law.pdf(np.array([lo + 1e-12 * (hi - lo), hi]))
            if np.all(np.isfinite(pdf_ends)):
                t, wq = np.polynomial.legendre.leggauss(1200)
                s = lo + (t + 1.0) * (hi - lo) / 2.0
                self._nodes = s
                self._node_weights = wq * (hi - lo) / 2.0 * law.pdf(s)

    @property
    def conditional(self):
        return self.weights is not None

    def weight_sup(self):
        """Upper endpoint l of the weight support (realized max if no law)."""
        if self.law is not None:
            return self.law.support[1]
        return float(np.max(self.weights))

    def unconditional_twin(self):
        if not self.conditional:
            return self
        if self.law is None:
            raise ValueError("conditional env has no law metadata")
        kind = "elliptical" if self.elliptical else "separable"
        return SolverEnv(kind, self.pop, law=self.law, phi=self.phi)

    # weight-side resolvent mean W(m) = c_w * <s/(1 + s m)> and derivative
    def w_mean(self, m, exact=False):
        if self.conditional:
            w = self.weights
            return self.c_w * np.mean(w / (1.0 + w * m))
        if self._nodes is not None and not exact:
            s = self._nodes
            return self.c_w * np.sum(self._node_weights * s / (1.0 + s * m))
        return self.c_w * self.law.integrate(lambda s: s / (1.0 + s * m))

    def w_mean_deriv(self, m, exact=False):
        if self.conditional:
            w = self.weights
            return -self.c_w * np.mean(w ** 2 / (1.0 + w * m) ** 2)
        if self._nodes is not None and not exact:
            s = self._nodes
            return -self.c_w * np.sum(
                self._node_weights * s ** 2 / (1.0 + s * m) ** 2)
        return -self.c_w * self.law.integrate(
            lambda s: s ** 2 / (1.0 + s * m) ** 2)

    def a_map(self, wm, z):
        return self.c_i * np.mean(self.sigmas / (-z + self.sigmas * wm))

    def residual(self, m, z, exact=False):
        return self.a_map(self.w_mean(m, exact), z) - m

    def residual_and_deriv(self, m, z, exact=False):
        """(F, dF/dm1) at (m, z)."""
        wm = self.w_mean(m, exact)
        wd = self.w_mean_deriv(m, exact)
        denom = -z + self.sigmas * wm
        f = self.c_i * np.mean(self.sigmas / denom) - m
        fm = -wd * self.c_i * np.mean(self.sigmas ** 2 / denom ** 2) - 1.0
        return f, fm

    def residual_z_deriv(self, m, z, exact=False):
        """dF/dz at (m, z); positive at a right edge."""
        wm = self.w_mean(m, exact)
        denom = -z + self.sigmas * wm
        return self.c_i * np.mean(self.sigmas / denom ** 2)


class StieltjesTriple:
    """Solved transforms at one z, with the defect of the m1 equation."""

    def __init__(self, m1, m2, m, residual):
        self.m1 = complex(m1)
        self.m2 = complex(m2)
        self.m = complex(m)
        self.residual = float(residual)

    def __repr__(self):
        return (f"StieltjesTriple(m1={self.m1:.6g}, m2={self.m2:.6g}, "
                f"m={self.m:.6g}, residual={self.residual:.2e})")


class EdgeReport:
    """Edge location, transform there, scale constants, and the limit law.

    ``standardization`` is an n-free triple (center, scale, exponent):
    lambda_1 = center + scale * n**exponent * Z approximately, with Z
    following the named regime's limit law.
    """

    def __init__(self, L_plus, m1_at_edge, varsigma, vartheta, regime,
                 standardization, d=None, gamma=None):
        self.L_plus = float(L_plus)
        self.m1_at_edge = float(m1_at_edge)
        self.varsigma = tuple(varsigma)
        self.vartheta = float(vartheta)
        self.regime = regime          # "weibull" | "gaussian" | "tw_mixture"
        self.standardization = standardization
        self.d = d
        self.gamma = gamma

    def __repr__(self):
        return (f"EdgeReport(L_plus={self.L_plus:.8g}, regime={self.regime!r}, "
                f"m1={self.m1_at_edge:.6g})")


def solve_m1(z, env, tol=_TOL, max_iter=20000, m0=None):
    """Solve F(m1, z) = 0 for Im z > 0 by damped fixed point + Newton polish.

    Starts from the large-z asymptote m1 ~ c_i*mean(sigma)/(-z) unless m0 is
    given, damps with weight 0.5 (dropping to 0.1 after oscillation or a
    half-plane violation), and polishes with guarded Newton steps once the
    residual falls below 1e-4. Returns a StieltjesTriple with
    |residual| <= tol.
    """
    if np.imag(z) <= 0:
        raise ValueError("z must have positive imaginary part")
    z = complex(z)
    m = complex(m0) if m0 is not None else env.c_i * np.mean(env.sigmas) / (-z)
    if np.imag(m) <= 0:
        m = complex(np.real(m), 0.1 * np.imag(z) + 1e-12)
    omega = 0.5
    prev_res = math.inf
    worse = 0
    for _ in range(max_iter):
        f, fm = env.residual_and_deriv(m, z)
        res = abs(f)
        if res <= tol:
            return _verify_and_finish(env, m, z, tol)
        if res < 1e-4 and abs(fm) > 1e-14:
            cand = m - f / fm
            if np.imag(cand) > 0:
                fc = abs(env.residual(cand, z))
                if fc < res:
                    m, prev_res = cand, fc
                    if fc <= tol:
                        return _verify_and_finish(env, m, z, tol)
                    continue
        if res > prev_res:
            worse += 1
            if worse >= 3:
                omega = 0.1
                worse = 0
        else:
            worse = 0
        cand = m + omega * f
        if np.imag(cand) <= 0:
            omega = 0.1
            cand = m + omega * f
            if np.imag(cand) <= 0:
                cand = complex(np.real(cand), max(0.5 * np.imag(m), 1e-14))
        m, prev_res = cand, res
    raise SolverError(
        f"fixed point stalled at |F| = {prev_res:.3e} for z = {z:.6g}",
        residual=prev_res)


def _verify_and_finish(env, m, z, tol):
    """Re-verify the residual under the adaptive quadrature, polishing if the
    fixed rule and the quadrature disagree beyond tol."""
    res = abs(env.residual(m, z, exact=True))
    for _ in range(12):
        if res <= tol:
            return _finish_triple(env, m, z, res)
        f, fm = env.residual_and_deriv(m, z, exact=True)
        if abs(fm) < 1e-14:
            break
        cand = m - f / fm
        if np.imag(cand) <= 0:
            break
        rc = abs(env.residual(cand, z, exact=True))
        if rc >= res:
            break
        m, res = cand, rc
    if res <= tol:
        return _finish_triple(env, m, z, res)
    raise SolverError(
        f"quadrature-verified residual {res:.3e} above tol at z = {z:.6g}",
        residual=res)


def _finish_triple(env, m1, z, res):
    wm = env.w_mean(m1, exact=True)
    m2 = wm / (-z)
    m = np.mean(1.0 / (-z + env.sigmas * wm))
    return StieltjesTriple(m1, m2, m, res)


def density(E, env, eta=None, L_plus=None, m0=None):
    """Spectral density at E by Stieltjes inversion, Richardson-extrapolated.

    rho(E) = lim_{eta->0} Im m(E + i eta)/pi, taken at eta and 2*eta and
    extrapolated linearly to zero. Default eta is 1e-4 times the edge scale
    when L_plus is given, else 1e-4 times |E| (floored at 1e-6).
    """
    if eta is None:
        scale = L_plus if L_plus else max(abs(E), 1.0)
        eta = max(1e-6, 1e-4 * scale)
    t1 = solve_m1(complex(E, eta), env, m0=m0)
    t2 = solve_m1(complex(E, 2.0 * eta), env, m0=t1.m1)
    rho = (2.0 * np.imag(t1.m) - np.imag(t2.m)) / math.pi
    return max(float(rho), 0.0)


def _varsigma12(env, l):
    """Weight-side constants at m1 = -1/l: (varsigma_1, varsigma_2).

    Infinite when the weight mass at l is too heavy for the integrals
    (tail exponent d <= 1 for varsigma_1, d <= 0 for varsigma_2, or an atom
    at l).
    """
    if env.conditional:
        w = env.weights
        if np.any(w >= l):
            return math.inf, math.inf
        v1 = env.c_w * float(np.mean(l ** 2 * w ** 2 / (l - w) ** 2))
        v2 = env.c_w * float(np.mean(l * w / (l - w)))
        return v1, v2
    law = env.law
    if law.tail_class == DEGENERATE_TAIL:
        return math.inf, math.inf
    _, d, _ = law.bounded_tail_descriptor()
    v1 = (env.c_w * law.integrate(lambda s: l ** 2 * s ** 2 / (l - s) ** 2)
          if d > 1 else math.inf)
    v2 = (env.c_w * law.integrate(lambda s: l * s / (l - s))
          if d > 0 else math.inf)
    return v1, v2


def _varsigma34(env, L_plus, v1, v2):
    """Sigma-side constants at the given edge from (varsigma_1, varsigma_2)."""
    if not (math.isfinite(v1) and math.isfinite(v2)):
        return math.inf, math.inf
    s = env.sigmas
    denom_sq = (L_plus - s * v2) ** 2
    pre3 = 1.0 / env.phi if env.elliptical else 1.0
    v3 = pre3 * float(np.mean(s ** 2 * v1 / denom_sq))
    pre4 = 1.0 if env.elliptical else env.phi
    v4 = pre4 * float(np.mean(s / denom_sq))
    return v3, v4


def vartheta(env, m1_at_edge):
    """CLT variance: model prefactor times Var[s/(1 + s*m1(L_+))]."""
    def f(s):
        return s / (1.0 + s * m1_at_edge)

    if env.conditional:
        vals = f(env.weights)
        v = float(np.mean(vals ** 2) - np.mean(vals) ** 2)
    else:
        v = float(env.law.variance_of(f))
    return v / env.phi ** 2 if env.elliptical else v


def varsigma_constants(env, L_plus, m1_at_edge=None):
    """(varsigma_1, varsigma_2, varsigma_3, varsigma_4, vartheta).

    The first four use the m1 = -1/l displays and come back infinite when
    the weight tail makes them diverge; vartheta is evaluated at
    m1_at_edge (default -1/l).
    """
    l = env.weight_sup()
    v1, v2 = _varsigma12(env, l)
    v3, v4 = _varsigma34(env, L_plus, v1, v2)
    m1e = m1_at_edge if m1_at_edge is not None else -1.0 / l
    return v1, v2, v3, v4, vartheta(env, m1e)


def _solve_explicit_edge(env, v2):
    """Root of 1 = c_i * mean(l*sigma/(L - sigma*varsigma_2)) above the pole."""
    l = env.weight_sup()
    s = env.sigmas
    pole = float(np.max(s)) * v2

    def h(L):
        return env.c_i * np.mean(l * s / (L - s * v2)) - 1.0

    a = pole * (1.0 + 1e-12) + 1e-12
    b = pole + max(env.c_i * l * float(np.max(s)), 1.0)
    for _ in range(80):
        if h(b) < 0:
            break
        b *= 2.0
    else:
        raise SolverError("explicit edge equation: no sign change found")
    return float(optimize.brentq(h, a, b, **_BRENTQ_KW))


def edge_weibull_regime(env, n_hint=None):
    """EdgeReport for the explicit-equation regime (d > 1, 1/phi > varsigma_3).

    m1(L_plus) = -1/l here, and lambda_1 - L_plus tracks
    varsigma_4^{-1}(1 - phi*varsigma_3)/l^2 times (largest weight - l), so
    the fluctuation inherits the weight maximum's Weibull(d+1) law.
    """
    l = env.weight_sup()
    if env.law is not None and env.law.tail_class == DEGENERATE_TAIL:
        raise DegenerateLawError("point-mass weights have no Weibull edge")
    v1, v2 = _varsigma12(env, l)
    if not math.isfinite(v1):
        raise WrongRegimeError(
            "weight tail too heavy at l (d <= 1); use edge_coupled")
    L = _solve_explicit_edge(env, v2)
    v3, v4 = _varsigma34(env, L, v1, v2)
    if 1.0 / env.phi < v3:
        raise WrongRegimeError(
            f"1/phi = {1 / env.phi:g} < varsigma_3 = {v3:g}; use edge_coupled")
    th = vartheta(env, -1.0 / l)
    d = scale = exponent = None
    if env.law is not None and env.law.tail_class == BOUNDED_TAIL:
        _, d, econst = env.law.bounded_tail_descriptor()
        unit = (1.0 - env.phi * v3) / v4 / l ** 2
        scale = unit * econst ** (-1.0 / (d + 1.0))
        exponent = -1.0 / (d + 1.0)
    return EdgeReport(L, -1.0 / l, (v1, v2, v3, v4), th, "weibull",
                      (L, scale, exponent), d=d)


def _y_of_x(env, x):
    """Unique y > sigma_1*W(x) with A(x, y) = x; returns (y, W(x))."""
    wm = env.w_mean(x)
    pole = float(np.max(env.sigmas)) * wm

    def b(y):
        return env.a_map(wm, y) - x

    a = pole * (1.0 + 1e-13) + 1e-13
    hi = pole + max(abs(pole), 1.0)
    for _ in range(200):
        if b(hi) > 0:
            break
        hi = pole + (hi - pole) * 2.0
    else:
        raise SolverError("edge inner solve: no bracket for y(x)")
    return float(optimize.brentq(b, a, hi, **_BRENTQ_KW)), wm


def _edge_defect(env, x):
    """dF/dm1 along the curve F(x, y(x)) = 0; a root marks the edge."""
    y, wm = _y_of_x(env, x)
    wd = env.w_mean_deriv(x)
    g = -wd * env.c_i * np.mean(
        env.sigmas ** 2 / (y - env.sigmas * wm) ** 2) - 1.0
    return float(g), y


def edge_coupled(env, n_hint=None):
    """EdgeReport from the coupled system F = 0, dF/dm1 = 0.

    Governs the square-root regimes: -1 < d <= 1 (Tracy-Widom mixture),
    d > 1 with 1/phi < varsigma_3 (Gaussian), and point-mass fixtures. The
    outer unknown is x = m1(L_plus) in (-1/l, 0); for each x the inner
    equation F(x, y) = 0 pins y, both by bracketed bisection, and the
    solution is Newton-polished as a pair. With several critical points the
    rightmost edge (largest y) wins.
    """
    l = env.weight_sup()
    roots = []
    vals = []
    # the weight-side integrals degrade as x -> -1/l when their integrands
    # diverge there, so start the scan a safe distance in and only push the
    # left end closer to -1/l if no sign change shows up
    for delta in (1e-3, 1e-6, 1e-9):
        grid = -np.logspace(math.log10((1.0 - delta) / l),
                            math.log10(1e-9 / l), 64)
        vals = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for x in grid:
                try:
                    vals.append(_edge_defect(env, x)[0])
                except SolverError:
                    vals.append(math.nan)
            for k in range(len(grid) - 1):
                g0, g1 = vals[k], vals[k + 1]
                if math.isnan(g0) or math.isnan(g1) or g0 * g1 > 0:
                    continue
                x_star = float(optimize.brentq(
                    lambda x: _edge_defect(env, x)[0], grid[k], grid[k + 1],
                    **_BRENTQ_KW))
                # a sign flip across a pole also brackets; only a genuine
                # root drives the defect itself small
                if abs(_edge_defect(env, x_star)[0]) <= 1e-5:
                    roots.append(x_star)
        if roots:
            break
    if not roots:
        if vals and not math.isnan(vals[0]) and vals[0] < 0:
            raise WrongRegimeError(
                "dF/dm1 < 0 throughout (-1/l, 0): explicit-equation regime; "
                "use edge_weibull_regime")
        raise SolverError("coupled edge solve found no critical point")

    best = None
    for x_star in roots:
        y_star, _ = _y_of_x(env, x_star)
        if best is None or y_star > best[1]:
            best = (x_star, y_star)
    x_star, y_star = _newton_polish_pair(env, *best)
    x_star, y_star = _newton_polish_pair(env, x_star, y_star, exact=True)

    f, fm = env.residual_and_deriv(x_star, y_star, exact=True)
    if abs(f) > _EDGE_TOL or abs(fm) > _EDGE_TOL:
        raise SolverError(
            f"coupled edge residuals too large: |F|={abs(f):.2e}, "
            f"|dF/dm1|={abs(fm):.2e}")
    if env.residual_z_deriv(x_star, y_star) <= 0:
        raise SolverError("edge solution is not a right edge (dF/dz <= 0)")

    v1, v2, v3, v4, _ = varsigma_constants(env, y_star, m1_at_edge=x_star)
    th = vartheta(env, x_star)

    regime = "gaussian"
    d = gamma = None
    scale = math.sqrt(th)
    exponent = -0.5
    if env.law is not None:
        if env.law.tail_class == BOUNDED_TAIL:
            _, d, _ = env.law.bounded_tail_descriptor()
            if d <= 1:
                regime = "tw_mixture"
        elif env.law.tail_class == DEGENERATE_TAIL:
            regime = "tw_mixture"
    if regime == "tw_mixture":
        gamma = _fit_gamma(env, y_star)
        exponent = -2.0 / 3.0
        scale = 1.0 / gamma
    return EdgeReport(y_star, x_star, (v1, v2, v3, v4), th, regime,
                      (y_star, scale, exponent), d=d, gamma=gamma)


def _newton_polish_pair(env, x, y, exact=False):
    """Newton on (F, dF/dm1) = 0 in the pair (x, y), accepted only on descent."""
    h_rel = 1e-7
    l = env.weight_sup()
    for _ in range(40):
        f, fm = env.residual_and_deriv(x, y, exact)
        err = abs(f) + abs(fm)
        if err <= 1e-12:
            break
        fy = env.residual_z_deriv(x, y, exact)
        hx = h_rel * max(abs(x), 1e-6)
        hy = h_rel * max(abs(y), 1e-6)
        fmx = (env.residual_and_deriv(x + hx, y, exact)[1]
               - env.residual_and_deriv(x - hx, y, exact)[1]) / (2 * hx)
        fmy = (env.residual_and_deriv(x, y + hy, exact)[1]
               - env.residual_and_deriv(x, y - hy, exact)[1]) / (2 * hy)
        jac = np.array([[fm, fy], [fmx, fmy]], dtype=float)
        try:
            step = np.linalg.solve(jac, np.array([f, fm]))
        except np.linalg.LinAlgError:
            break
        x_new, y_new = x - step[0], y - step[1]
        if not (-1.0 / l < x_new < 0.0) or y_new <= 0:
            break
        f2, fm2 = env.residual_and_deriv(x_new, y_new, exact)
        if abs(f2) + abs(fm2) < err:
            x, y = x_new, y_new
        else:
            break
    return x, y


def _fit_gamma(env, L_plus):
    """Square-root edge coefficient: rho(L_+ - k) = gamma^{3/2} sqrt(k)/pi."""
    ks = np.logspace(-4, -2, 7)
    rhos = []
    m0 = None
    for k in ks:
        rho = density(L_plus - k, env, L_plus=L_plus, m0=m0)
        rhos.append(rho)
    rhos = np.array(rhos)
    good = rhos > 0
    if not np.any(good):
        raise SolverError("no positive density just inside the edge")
    coef = float(np.sum(rhos[good] * np.sqrt(ks[good])) / np.sum(ks[good]))
    return (math.pi * coef) ** (2.0 / 3.0)


class RegimeRecord:
    """classify_regime output: the regime name plus the numbers behind it."""

    def __init__(self, regime, d, phi_inverse, varsigma3, detail):
        self.regime = regime
        self.d = d
        self.phi_inverse = phi_inverse
        self.varsigma3 = varsigma3
        self.detail = detail

    def __repr__(self):
        return f"RegimeRecord({self.regime!r}, {self.detail})"


def classify_regime(env, n=None):
    """Name the lambda_1 limit law for a bounded-support weight law.

    Weibull iff d > 1 and 1/phi > varsigma_3 (evaluated at the explicit-edge
    candidate); Gaussian iff d > 1 and 1/phi < varsigma_3; Tracy-Widom
    mixture iff -1 < d <= 1, annotated with the vartheta-vs-n^{-1/3}
    comparison when n is given. Exact criticality is refused.
    """
    if env.conditional:
        env = env.unconditional_twin()
    law = env.law
    if law.tail_class == DEGENERATE_TAIL:
        raise DegenerateLawError("point-mass weights: no regime to classify")
    if law.tail_class != BOUNDED_TAIL:
        raise WrongRegimeError(
            "unbounded weight laws diverge; use predict_lambda1")
    _, d, _ = law.bounded_tail_descriptor()
    if d <= 1:
        detail = f"d={d:g} in (-1, 1]: square-root edge"
        if n is not None:
            rep = edge_coupled(env)
            side = ">>" if rep.vartheta > n ** (-1.0 / 3.0) else "<~"
            detail += (f"; vartheta={rep.vartheta:.3g} {side} "
                       f"n^(-1/3)={n ** (-1.0 / 3.0):.3g}")
        return RegimeRecord("tw_mixture", d, 1.0 / env.phi, None, detail)
    v1, v2 = _varsigma12(env, env.weight_sup())
    L = _solve_explicit_edge(env, v2)
    v3, _ = _varsigma34(env, L, v1, v2)
    phi_inv = 1.0 / env.phi
    if abs(phi_inv - v3) <= 1e-6:
        raise CriticalCaseError(
            f"1/phi = varsigma_3 = {v3:g}: transition case not covered")
    if phi_inv > v3:
        return RegimeRecord(
            "weibull", d, phi_inv, v3,
            f"d={d:g} > 1 and 1/phi={phi_inv:g} > varsigma_3={v3:g}")
    return RegimeRecord(
        "gaussian", d, phi_inv, v3,
        f"d={d:g} > 1 and 1/phi={phi_inv:g} < varsigma_3={v3:g}")


def solve_edge(env, n=None):
    """Dispatch to whichever edge equation governs env's regime."""
    if env.law is not None and env.law.tail_class == DEGENERATE_TAIL:
        return edge_coupled(env)
    if env.law is not None and not env.conditional:
        rec = classify_regime(env, n)
        if rec.regime == "weibull":
            return edge_weibull_regime(env)
        return edge_coupled(env)
    try:
        return edge_weibull_regime(env)
    except WrongRegimeError:
        return edge_coupled(env)


def default_d1(law, n, epsilon=0.01):
    """mu1 regularizer: n^{1/alpha - epsilon} for poly tails, 1 for exp."""
    if law.tail_class == POLY_TAIL:
        return float(n) ** (1.0 / law.poly_tail_index() - epsilon)
    if law.tail_class == EXP_TAIL:
        return 1.0
    raise UnsupportedTailError("d1 applies to unbounded-tail laws")


def mu1_divergent(env, d1=None, epsilon=0.01):
    """Classical location of the largest eigenvalue for unbounded weights.

    Solves h(mu) = 1 with

        h(mu) = c_i * mean_i[ sigma_i * (W1 + d1) / (mu - sigma_i * S) ],
        S     = c_w * mean_j[ w_j * (W1 + d1) / (W1 + d1 - w_j) ],

    W1 the largest realized weight. h decreases strictly from +inf at the
    pole mu = sigma_1 * S to 0, so the root is unique; the bracket's upper
    end doubles geometrically until the sign flips (at most 60 times).
    d1 defaults from the law metadata: n^{1/alpha - epsilon} (poly) or 1
    (exp).
    """
    if not env.conditional:
        raise ValueError("mu1 is defined for a realized weight vector")
    if d1 is None:
        if env.law is None:
            raise ValueError("give d1 explicitly or attach law metadata")
        d1 = default_d1(env.law, env.n, epsilon)
    if d1 <= 0:
        raise ValueError("d1 must be positive")
    w = env.weights
    top = float(np.max(w)) + float(d1)
    s_big = env.c_w * float(np.mean(w * top / (top - w)))
    sig = env.sigmas
    pole = float(np.max(sig)) * s_big

    def h_minus_1(mu):
        return env.c_i * np.mean(sig * top / (mu - sig * s_big)) - 1.0

    lo = pole * (1.0 + 1e-12) + 1e-12
    hi = pole + max(env.c_i * float(np.mean(sig)) * top * 4.0, 1.0)
    for _ in range(60):
        if h_minus_1(hi) < 0:
            break
        hi = pole + (hi - pole) * 2.0
    else:
        raise SolverError("mu1 bracket expansion failed")
    return float(optimize.brentq(h_minus_1, lo, hi, **_BRENTQ_KW))


class Lambda1Prediction:
    """Point prediction and distributional standardization for lambda_1."""

    def __init__(self, point, family, shape, center, scale, notes=""):
        self.point = point
        self.family = family      # frechet | gumbel | weibull | gaussian |
        self.shape = shape        # tw_mixture | point
        self.center = center
        self.scale = scale
        self.notes = notes

    def standardize(self, lam1):
        return (np.asarray(lam1, dtype=float) - self.center) / self.scale

    def __repr__(self):
        return (f"Lambda1Prediction(point={self.point:.6g}, "
                f"family={self.family!r}, center={self.center:.6g}, "
                f"scale={self.scale:.6g})")


def varphi(env):
    """Leading coefficient of lambda_1/xi_(1)^2 for unbounded weights."""
    sbar = float(np.mean(env.sigmas))
    return sbar if env.elliptical else env.phi * sbar


def predict_lambda1(env, n=None):
    """Where lambda_1 sits and how it fluctuates, for any weight law.

    Unbounded laws: lambda_1 tracks varphi times the largest weight;
    standardized by varphi*b_n the limit is Frechet(alpha) (poly tails) or,
    after centering, Gumbel (exp tails). Bounded laws defer to the edge
    reports; the Weibull regime's point prediction refines L_plus with the
    realized largest weight when env is conditional. Point-mass weights pin
    lambda_1 at L_plus with no fluctuation term.
    """
    law = env.law
    if law is None:
        raise ValueError("predict_lambda1 needs law metadata on env")
    if n is None:
        n = env.n
    if n is None:
        raise ValueError("give n for an unconditional env")
    tc = law.tail_class
    if tc == DEGENERATE_TAIL:
        rep = edge_coupled(env.unconditional_twin())
        return Lambda1Prediction(
            rep.L_plus, "point", None, rep.L_plus, 1.0,
            notes="degenerate weights: lambda_1 -> L_plus, no fluctuation")
    if tc in (POLY_TAIL, EXP_TAIL):
        vp = varphi(env)
        b_n = law.tail_threshold_b_n(n)
        point = vp * (float(np.max(env.weights)) if env.conditional else b_n)
        if tc == POLY_TAIL:
            alpha = law.poly_tail_index()
            return Lambda1Prediction(
                point, "frechet", alpha, 0.0, vp * b_n,
                notes="lambda_1/(varphi*b_n) => Frechet(alpha)")
        gp = float(law.g_tail_deriv(b_n))
        return Lambda1Prediction(
            point, "gumbel", None, vp * b_n, vp / gp,
            notes="g'(b_n)*(lambda_1/varphi - b_n) => Gumbel")
    rec = classify_regime(env, n)
    if rec.regime == "weibull":
        rep = edge_weibull_regime(env.unconditional_twin())
        center, unit_scale, exponent = rep.standardization
        point = center
        if env.conditional:
            crep = edge_weibull_regime(env)
            _, _, v3c, v4c = crep.varsigma
            l = env.weight_sup()
            w1 = float(np.max(env.weights))
            point = crep.L_plus - (1.0 - env.phi * v3c) / v4c \
                * (l - w1) / (l * w1)
        return Lambda1Prediction(
            point, "weibull", rep.d + 1.0, center,
            unit_scale * n ** exponent,
            notes="(lambda_1 - L_+)/scale => Weibull(d+1) on x <= 0")
    rep = edge_coupled(env.unconditional_twin())
    if rec.regime == "gaussian":
        return Lambda1Prediction(
            rep.L_plus, "gaussian", None, rep.L_plus,
            math.sqrt(rep.vartheta / n),
            notes="sqrt(n/vartheta)*(lambda_1 - L_+) => N(0,1)")
    return Lambda1Prediction(
        rep.L_plus, "tw_mixture", rep.gamma, rep.L_plus,
        1.0 / (rep.gamma * n ** (2.0 / 3.0)),
        notes="n^{2/3}*gamma*(lambda_1 - L_+) => TW1 convolved with a "
              f"Gaussian part of variance constant {rep.vartheta:.3g}")
