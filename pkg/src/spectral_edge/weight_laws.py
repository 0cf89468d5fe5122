"""Weight distributions for the random column scalings.

A weight law is the distribution of the squared radius/multiplier applied to
the columns of the data matrix. Everything downstream needs four things from
it: i.i.d. samples, low-order moments, its tail class, and the extreme-value
standardization of the sample maximum.

Tail classes:

* poly     -- regularly varying survival, x^alpha * P(w > x) -> const > 0.
* exp      -- P(w > x) = exp(-g(x)) with g increasing and smooth.
* bounded  -- support sup l < inf, (1 - F(x)) / (l - x)^(d+1) -> edge_const.
* degenerate -- point mass, admitted only as an internal fixture.

The max of n i.i.d. draws, standardized per ``evt_limit``, converges to
Frechet(alpha), Gumbel, or Weibull(d+1) according to the class.
"""

import math

import numpy as np
from scipy import integrate, stats


class ParameterError(ValueError):
    """Invalid or assumption-violating weight-law parameters."""


class MomentError(ValueError):
    """Requested moment does not exist for the family."""


class UnsupportedTailError(ValueError):
    """Operation requires a different tail class."""


POLY_TAIL = "poly"
EXP_TAIL = "exp"
BOUNDED_TAIL = "bounded"
DEGENERATE_TAIL = "degenerate"

# central-difference step for numerical derivatives of g
_G_DIFF_H = 1e-6
_QUAD_TOL = 1e-10


class WeightLaw:
    """Distribution of the squared column weights.

    Instances are immutable value objects; construct through the classmethods
    (``pareto``, ``gamma``, ``exponential``, ``squared_student_t``,
    ``chi_squared``, ``scaled_beta``, ``uniform``, ``point_mass``).

    Attributes
    ----------
    family : str
        Family name.
    params : dict
        Family parameters, by name.
    tail_class : str
        One of "poly", "exp", "bounded", "degenerate".
    """

    _FAMILIES = (
        "pareto", "gamma", "exponential", "squared_student_t",
        "chi_squared", "scaled_beta", "uniform", "point_mass",
    )

    def __init__(self, family, params, allow_assumption_violation=False):
        if family not in self._FAMILIES:
            raise ParameterError(f"unknown weight family {family!r}")
        self.family = family
        self.params = dict(params)
        self._validate(allow_assumption_violation)

    # -- construction -----------------------------------------------------

    @classmethod
    def pareto(cls, x_min, alpha, allow_assumption_violation=False):
        return cls("pareto", {"x_min": float(x_min), "alpha": float(alpha)},
                   allow_assumption_violation)

    @classmethod
    def gamma(cls, shape, rate):
        return cls("gamma", {"shape": float(shape), "rate": float(rate)})

    @classmethod
    def exponential(cls, rate):
        return cls("exponential", {"rate": float(rate)})

    @classmethod
    def squared_student_t(cls, nu, allow_assumption_violation=False):
        return cls("squared_student_t", {"nu": float(nu)},
                   allow_assumption_violation)

    @classmethod
    def chi_squared(cls, k):
        return cls("chi_squared", {"k": float(k)})

    @classmethod
    def scaled_beta(cls, l, a, b):
        return cls("scaled_beta", {"l": float(l), "a": float(a), "b": float(b)})

    @classmethod
    def uniform(cls, l):
        return cls("uniform", {"l": float(l)})

    @classmethod
    def point_mass(cls, c):
        return cls("point_mass", {"c": float(c)})

    @classmethod
    def from_config(cls, family, params, allow_assumption_violation=False):
        """Build from a config-file family name and parameter mapping."""
        ctor = {
            "pareto": lambda p: cls.pareto(
                p["x_min"], p["alpha"], allow_assumption_violation),
            "gamma": lambda p: cls.gamma(p["shape"], p["rate"]),
            "exponential": lambda p: cls.exponential(p["rate"]),
            "squared_student_t": lambda p: cls.squared_student_t(
                p["nu"], allow_assumption_violation),
            "chi_squared": lambda p: cls.chi_squared(p["k"]),
            "scaled_beta": lambda p: cls.scaled_beta(p["l"], p["a"], p["b"]),
            "uniform": lambda p: cls.uniform(p.get("l", p.get("high", 1.0))),
            "point_mass": lambda p: cls.point_mass(p["c"]),
        }
        if family not in ctor:
            raise ParameterError(f"unknown weight family {family!r}")
        return ctor[family](params)

    def _validate(self, allow_violation):
        p = self.params
        pos = {
            "pareto": ("x_min", "alpha"),
            "gamma": ("shape", "rate"),
            "exponential": ("rate",),
            "squared_student_t": ("nu",),
            "chi_squared": ("k",),
            "scaled_beta": ("l", "a", "b"),
            "uniform": ("l",),
            "point_mass": ("c",),
        }[self.family]
        for name in pos:
            if not (p[name] > 0 and math.isfinite(p[name])):
                raise ParameterError(f"{self.family}: {name} must be positive")
        # tail-index assumption: poly tails need alpha >= 2 unless the caller
        # explicitly opts into an assumption-violating fixture
        idx = self.poly_tail_index()
        if idx is not None and idx < 2 and not allow_violation:
            raise ParameterError(
                f"{self.family}: tail index {idx} < 2; pass "
                "allow_assumption_violation=True to use it as a fixture")

    def poly_tail_index(self):
        """Tail index alpha for poly-tail families, else None."""
        if self.family == "pareto":
            return self.params["alpha"]
        if self.family == "squared_student_t":
            return self.params["nu"] / 2.0
        return None

    # -- identity ---------------------------------------------------------

    def _key(self):
        return (self.family, tuple(sorted(self.params.items())))

    def __eq__(self, other):
        return isinstance(other, WeightLaw) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        inner = ", ".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"WeightLaw.{self.family}({inner})"

    # -- scipy dist backing -----------------------------------------------

    def _dist(self):
        """Frozen scipy distribution of the weight (None for point mass)."""
        p = self.params
        if self.family == "pareto":
            return stats.pareto(b=p["alpha"], scale=p["x_min"])
        if self.family == "gamma":
            return stats.gamma(a=p["shape"], scale=1.0 / p["rate"])
        if self.family == "exponential":
            return stats.expon(scale=1.0 / p["rate"])
        if self.family == "chi_squared":
            return stats.chi2(df=p["k"])
        if self.family == "scaled_beta":
            return stats.beta(a=p["a"], b=p["b"], scale=p["l"])
        if self.family == "uniform":
            return stats.uniform(loc=0.0, scale=p["l"])
        return None

    @property
    def tail_class(self):
        f = self.family
        if f in ("pareto", "squared_student_t"):
            return POLY_TAIL
        if f in ("gamma", "exponential", "chi_squared"):
            return EXP_TAIL
        if f in ("scaled_beta", "uniform"):
            return BOUNDED_TAIL
        return DEGENERATE_TAIL

    @property
    def support(self):
        """(lower, upper) endpoints of the weight's support."""
        p = self.params
        return {
            "pareto": (p.get("x_min", 0.0), math.inf),
            "gamma": (0.0, math.inf),
            "exponential": (0.0, math.inf),
            "squared_student_t": (0.0, math.inf),
            "chi_squared": (0.0, math.inf),
            "scaled_beta": (0.0, p.get("l", 1.0)),
            "uniform": (0.0, p.get("l", 1.0)),
            "point_mass": (p.get("c", 1.0), p.get("c", 1.0)),
        }[self.family]

    # -- sampling ----------------------------------------------------------

    def sample(self, n, seed):
        """Draw n i.i.d. weights, deterministic given the seed.

        ``seed`` may be an int or a numpy Generator.
        """
        if n < 1:
            raise ParameterError("n must be >= 1")
        rng = seed if isinstance(seed, np.random.Generator) \
            else np.random.default_rng(seed)
        p = self.params
        f = self.family
        if f == "pareto":
            return p["x_min"] * (1.0 - rng.random(n)) ** (-1.0 / p["alpha"])
        if f == "gamma":
            return rng.gamma(p["shape"], 1.0 / p["rate"], size=n)
        if f == "exponential":
            return rng.exponential(1.0 / p["rate"], size=n)
        if f == "squared_student_t":
            return rng.standard_t(p["nu"], size=n) ** 2
        if f == "chi_squared":
            return rng.chisquare(p["k"], size=n)
        if f == "scaled_beta":
            return p["l"] * rng.beta(p["a"], p["b"], size=n)
        if f == "uniform":
            return p["l"] * rng.random(n)
        return np.full(n, p["c"])

    # -- moments -----------------------------------------------------------

    def moments(self):
        """(E w, E w^2) of the weight w, exact closed forms.

        Raises MomentError when either moment is infinite.
        """
        p = self.params
        f = self.family
        if f == "pareto":
            a, xm = p["alpha"], p["x_min"]
            if a <= 2:
                raise MomentError("pareto: second moment needs alpha > 2")
            return xm * a / (a - 1.0), xm * xm * a / (a - 2.0)
        if f == "gamma":
            k, r = p["shape"], p["rate"]
            return k / r, k * (k + 1.0) / r ** 2
        if f == "exponential":
            r = p["rate"]
            return 1.0 / r, 2.0 / r ** 2
        if f == "squared_student_t":
            nu = p["nu"]
            if nu <= 4:
                raise MomentError("squared t: second moment needs nu > 4")
            m1 = nu / (nu - 2.0)
            m2 = 3.0 * nu ** 2 / ((nu - 2.0) * (nu - 4.0))
            return m1, m2
        if f == "chi_squared":
            k = p["k"]
            return k, k * (k + 2.0)
        if f == "scaled_beta":
            l, a, b = p["l"], p["a"], p["b"]
            return (l * a / (a + b),
                    l * l * a * (a + 1.0) / ((a + b) * (a + b + 1.0)))
        if f == "uniform":
            l = p["l"]
            return l / 2.0, l * l / 3.0
        c = p["c"]
        return c, c * c

    def mean(self):
        return self.moments()[0]

    # -- tail descriptors ---------------------------------------------------

    def sf(self, x):
        """Survival function P(w > x)."""
        if self.family == "squared_student_t":
            return 2.0 * stats.t(self.params["nu"]).sf(np.sqrt(np.maximum(x, 0.0)))
        if self.family == "point_mass":
            return np.where(np.asarray(x) < self.params["c"], 1.0, 0.0)
        return self._dist().sf(x)

    def cdf(self, x):
        if self.family == "squared_student_t":
            return 1.0 - self.sf(x)
        if self.family == "point_mass":
            return np.where(np.asarray(x) < self.params["c"], 0.0, 1.0)
        return self._dist().cdf(x)

    def pdf(self, x):
        if self.family == "squared_student_t":
            x = np.asarray(x, dtype=float)
            rt = np.sqrt(np.maximum(x, 1e-300))
            return stats.t(self.params["nu"]).pdf(rt) / rt
        if self.family == "point_mass":
            raise UnsupportedTailError("point mass has no density")
        return self._dist().pdf(x)

    def g_tail(self, x):
        """g(x) = -log P(w > x) for exp-tail families."""
        if self.tail_class != EXP_TAIL:
            raise UnsupportedTailError("g is defined for exp tails only")
        if self.family == "exponential":
            return self.params["rate"] * np.asarray(x, dtype=float)
        return -self._dist().logsf(x)

    def g_tail_deriv(self, x):
        """g'(x); analytic for the exponential, central difference otherwise."""
        if self.tail_class != EXP_TAIL:
            raise UnsupportedTailError("g is defined for exp tails only")
        if self.family == "exponential":
            return self.params["rate"] * np.ones_like(np.asarray(x, dtype=float))
        h = _G_DIFF_H
        return (self.g_tail(np.asarray(x) + h) - self.g_tail(np.asarray(x) - h)) / (2 * h)

    def bounded_tail_descriptor(self):
        """(l, d, edge_const) with (1 - F(x)) ~ edge_const * (l - x)^(d+1).

        Closed forms: scaled beta l*B(a,b) has d = b - 1 and
        edge_const = Gamma(a+b) / (Gamma(a) Gamma(b+1) l^b); uniform(0, l)
        has d = 0 and edge_const = 1/l.
        """
        p = self.params
        if self.family == "scaled_beta":
            l, a, b = p["l"], p["a"], p["b"]
            const = math.gamma(a + b) / (math.gamma(a) * math.gamma(b + 1.0))
            return l, b - 1.0, const / l ** b
        if self.family == "uniform":
            l = p["l"]
            return l, 0.0, 1.0 / l
        raise UnsupportedTailError("not a bounded-tail family")

    # -- extreme-value standardization --------------------------------------

    def tail_threshold_b_n(self, n):
        """b_n = inf{x : P(w > x) <= 1/n}, the max-centering threshold."""
        if self.tail_class not in (POLY_TAIL, EXP_TAIL):
            raise UnsupportedTailError("b_n needs unbounded support")
        if n < 1:
            raise ParameterError("n must be >= 1")
        p = self.params
        if self.family == "pareto":
            return p["x_min"] * n ** (1.0 / p["alpha"])
        if self.family == "exponential":
            return math.log(n) / p["rate"]
        if self.family == "squared_student_t":
            # P(t^2 > x) = 2 P(t > sqrt(x)) = 1/n
            q = min(1.0 / (2.0 * n), 0.5)
            return float(stats.t(p["nu"]).isf(q)) ** 2 if n > 1 else 0.0
        return float(self._dist().isf(min(1.0 / n, 1.0)))

    def evt_limit(self, n):
        """Standardization of the sample max of n draws.

        Returns an EvtLimit: (max - center)/scale converges to the family's
        limit law (Frechet(shape), Gumbel, or Weibull(shape = d+1)).
        """
        tc = self.tail_class
        if tc == POLY_TAIL:
            return EvtLimit("frechet", self.poly_tail_index(), 0.0,
                            self.tail_threshold_b_n(n))
        if tc == EXP_TAIL:
            b_n = self.tail_threshold_b_n(n)
            gp = float(self.g_tail_deriv(b_n))
            return EvtLimit("gumbel", None, b_n, 1.0 / gp)
        if tc == BOUNDED_TAIL:
            l, d, econst = self.bounded_tail_descriptor()
            return EvtLimit("weibull", d + 1.0, l,
                            (econst * n) ** (-1.0 / (d + 1.0)))
        raise UnsupportedTailError("no extreme-value limit for a point mass")

    def spike_strength_threshold(self, n):
        """Diagnostic scale a spike must dominate to be detectable."""
        tc = self.tail_class
        if tc == POLY_TAIL:
            return n ** (1.0 / self.poly_tail_index()) * math.log(n)
        if tc == EXP_TAIL:
            # exp-tail exponent beta: P(w > x) = exp(-g(x)) with g ~ x^beta
            beta = 1.0  # all built-in exp-tail families are rate-1 exponent
            return math.log(n) ** (1.0 / beta)
        raise UnsupportedTailError("threshold needs unbounded support")

    # -- integration against F ----------------------------------------------

    def integrate(self, fn):
        """Integral of fn(w) dF(w) by adaptive quadrature (exact for point mass).

        fn may return complex values.
        """
        if self.family == "point_mass":
            return fn(self.params["c"])
        lo, hi = self.support
        probe = fn(lo + 0.5 * (min(hi, lo + 1.0) - lo))
        is_complex = np.iscomplexobj(probe)

        def real_part(x):
            return np.real(fn(x)) * self.pdf(x)

        def imag_part(x):
            return np.imag(fn(x)) * self.pdf(x)

        kw = dict(epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
        re = integrate.quad(real_part, lo, hi, **kw)[0]
        if not is_complex:
            return re
        im = integrate.quad(imag_part, lo, hi, **kw)[0]
        return re + 1j * im

    def variance_of(self, fn):
        """Var_F[fn(w)] via two quadratures (0 for a point mass)."""
        m1 = self.integrate(fn)
        m2 = self.integrate(lambda s: fn(s) ** 2)
        return m2 - m1 ** 2


class EvtLimit:
    """Standardization map for the sample maximum and its limit CDF."""

    def __init__(self, family, shape, center, scale):
        self.family = family      # "frechet" | "gumbel" | "weibull"
        self.shape = shape        # alpha, None, or d+1
        self.center = float(center)
        self.scale = float(scale)

    def standardize(self, maxima):
        return (np.asarray(maxima, dtype=float) - self.center) / self.scale

    def limit_cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "frechet":
            out = np.zeros_like(x)
            pos = x > 0
            out[pos] = np.exp(-x[pos] ** (-self.shape))
            return out
        if self.family == "gumbel":
            return np.exp(-np.exp(-x))
        out = np.ones_like(x)
        neg = x < 0
        out[neg] = np.exp(-np.abs(x[neg]) ** self.shape)
        return out

    def __repr__(self):
        s = f", shape={self.shape:g}" if self.shape is not None else ""
        return (f"EvtLimit({self.family}{s}, center={self.center:.6g}, "
                f"scale={self.scale:.6g})")


def spacing_distribution(i, n, rate):
    """Law of the gap between the i-th and (i+1)-th largest of n Exp(rate) draws.

    For w_(1) >= ... >= w_(n) i.i.d. exponential with the given rate, the
    spacings w_(i) - w_(i+1) are independent and exponential with rate i*rate.
    Returns the frozen scipy distribution.
    """
    if not 1 <= i <= n - 1:
        raise ParameterError("spacing index must be in [1, n-1]")
    return stats.expon(scale=1.0 / (i * rate))
