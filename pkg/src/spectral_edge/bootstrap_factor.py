"""Multiplier-bootstrap test for the number of common factors.

Reweighting the n samples by i.i.d. squared multipliers and recomputing the
top eigenvalues gives, for each spike index i at or below the true factor
count, a ratio mu_i / lambda_i that fluctuates around the multiplier mean
at Gaussian scale sqrt(V/n). The test of H0: r >= r0 standardizes the r0-th
ratio from each of B resamples, counts how many land inside the central
level-(1-alpha) Gaussian window, and reports the fraction outside as the
p-value; small p rejects.

Resampled eigenvalues are computed on the companion side: the nonzero
eigenvalues of Y W Y^T equal those of D (Y^T Y) D with D = diag(sqrt(w)),
so the Gram matrix Y^T Y is formed once per data set and each replicate
costs one rank-preserving rescaling plus one partial eigensolve.
"""

import dataclasses
import math

import numpy as np
import scipy.sparse.linalg
from scipy import stats

from .matrix_model import DataSample, ModelKind, eigenvalues
from .spike_inference import derive_seed
from .weight_laws import DEGENERATE_TAIL, WeightLaw

# fraction of failed resamples tolerated before the whole run aborts
_MAX_FAILURE_FRACTION = 0.01

# resamples per decision check when a test is allowed to stop early
_CHUNK = 32

# below this companion dimension a full dense eigensolve beats ARPACK
_DENSE_BELOW = 120


class FactorTestError(Exception):
    pass


class DegenerateMultiplierError(FactorTestError):
    """Point-mass multipliers make every standardized ratio exactly zero."""


class DegenerateSpectrumError(FactorTestError):
    """The hypothesized eigenvalue is zero, so ratios are undefined."""


class ResamplingError(FactorTestError):
    """Too many resamples lost to eigensolver failures."""


def v_constant(m4, law):
    """Variance constant of the ratio CLT: m4 * E w^2 - (E w)^2.

    ``m4`` is the fourth moment of a sqrt(n)-standardized data entry and
    ``law`` is the multiplier distribution. Moment errors from laws with
    infinite second moment propagate; a nonpositive result is rejected.
    """
    ew, ew2 = law.moments()
    v = float(m4) * ew2 - ew * ew
    if v <= 0.0:
        raise FactorTestError(
            f"variance constant must be positive, got {v:.6g} "
            f"(m4={m4:.6g}, law={law!r})")
    return float(v)


@dataclasses.dataclass(frozen=True)
class FactorTestConfig:
    """Inputs of the resampling test that do not depend on the data."""

    r0: int
    B: int
    alpha: float
    law: WeightLaw
    m4: float

    def __post_init__(self):
        if self.r0 < 1:
            raise FactorTestError("r0 must be >= 1")
        if self.B < 1:
            raise FactorTestError("B must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise FactorTestError("alpha must lie in (0, 1)")
        # Jensen: E x^4 >= (E x^2)^2 = 1 for standardized entries
        if self.m4 < 1.0:
            raise FactorTestError("m4 must be >= 1")
        v_constant(self.m4, self.law)

    def with_r0(self, r0):
        return dataclasses.replace(self, r0=r0)


@dataclasses.dataclass(frozen=True)
class Algorithm1Result:
    """Outcome of one resampling test.

    ``p_value`` is NaN when the run stopped before all B resamples because
    the decision was already certain; ``reject`` is exact either way.
    ``B_star`` counts the standardized ratios inside the Gaussian window
    among the ``resamples_used`` actually computed.
    """

    p_value: float
    B_star: int
    reject: bool
    B: int
    resamples_used: int
    lambda_r0: float


class _GramBootstrap:
    """Per-data-set state shared by all resamples.

    Holds the companion Gram matrix and its top eigenvector; the latter,
    rescaled by each replicate's sqrt-weights, seeds the Krylov iteration,
    which keeps the partial eigensolve cheap when the top of the spectrum
    is well separated.
    """

    def __init__(self, data, law, m):
        p, n = data.p, data.n
        if not 1 <= m <= min(p, n):
            raise FactorTestError(
                f"need 1 <= r0 <= min(p, n) = {min(p, n)}, got {m}")
        self.G = data.Y.T @ data.Y
        self.n = n
        self.law = law
        self.m = m
        self.dense = n < _DENSE_BELOW or m >= n - 1
        if not self.dense:
            _, vecs = np.linalg.eigh(self.G)
            self.u = vecs[:, -1]

    def rows(self, ks, root_seed):
        """Top-m resampled eigenvalues for replicate indices ks.

        Returns (array of shape (len(ks), m) descending per row, number of
        failed replicates); failed rows are NaN.
        """
        out = np.full((len(ks), self.m), np.nan)
        failed = 0
        scaled = np.empty_like(self.G)
        for j, k in enumerate(ks):
            rng = np.random.default_rng(derive_seed(root_seed, "boot", int(k)))
            d = np.sqrt(self.law.sample(self.n, rng))
            np.multiply(self.G, d[:, None], out=scaled)
            scaled *= d[None, :]
            try:
                vals = self._top_eigs(scaled, d)
            except np.linalg.LinAlgError:
                failed += 1
                continue
            out[j] = vals
        return out, failed

    def _top_eigs(self, mat, d):
        if not self.dense:
            try:
                vals = scipy.sparse.linalg.eigsh(
                    mat, k=self.m, which="LA", v0=self.u * d, tol=0,
                    return_eigenvectors=False)
                return np.sort(vals)[::-1]
            except (scipy.sparse.linalg.ArpackNoConvergence, ValueError):
                pass
        vals = np.linalg.eigvalsh(mat)
        return vals[::-1][:self.m]


def bootstrap_eigs(data, law, B, r0, root_seed=0):
    """The r0-th eigenvalue of each of B multiplier-resampled matrices.

    ``data`` holds the unweighted matrix; each replicate k draws n i.i.d.
    multipliers from ``law`` with a seed derived from (root_seed, k) only,
    so calls that differ in r0 reuse identical multiplier draws. Failed
    replicates are returned as NaN; more than 1% of them aborts.
    """
    if B < 1:
        raise FactorTestError("B must be >= 1")
    engine = _GramBootstrap(data, law, r0)
    rows, failed = engine.rows(range(B), root_seed)
    if failed > _MAX_FAILURE_FRACTION * B:
        raise ResamplingError(f"{failed} of {B} resamples failed")
    return rows[:, r0 - 1]


def algorithm1_test(data, cfg, root_seed=0, early_stop=False):
    """Level-alpha resampling test of H0: r >= r0 on one data set.

    Computes T_k = sqrt(n/V) (mu_{k,r0} / lambda_{r0} - E w) for each
    resample, counts B* = #{|T_k| <= z_{1-alpha/2}}, reports p = 1 - B*/B
    and rejects when p < alpha. Failed resamples count as outside the
    window. With ``early_stop`` the loop ends as soon as no completion of
    the remaining resamples could change the decision; the p-value is then
    NaN but the decision matches the full run exactly.
    """
    if cfg.law.tail_class == DEGENERATE_TAIL:
        raise DegenerateMultiplierError(
            "point-mass multipliers give zero-variance ratios; "
            "every standardized statistic is identically zero")
    lam = eigenvalues(data).values
    if cfg.r0 > min(data.p, data.n):
        raise FactorTestError(
            f"r0={cfg.r0} exceeds min(p, n) = {min(data.p, data.n)}")
    lam_r0 = float(lam[cfg.r0 - 1])
    if lam_r0 <= 0.0:
        raise DegenerateSpectrumError(
            f"eigenvalue {cfg.r0} of the data is not positive")
    ew = cfg.law.moments()[0]
    scale = math.sqrt(data.n / v_constant(cfg.m4, cfg.law))
    z = float(stats.norm.ppf(1.0 - cfg.alpha / 2.0))

    engine = _GramBootstrap(data, cfg.law, cfg.r0)
    B = cfg.B
    hits = 0
    used = 0
    failed = 0
    for start in range(0, B, _CHUNK):
        ks = range(start, min(start + _CHUNK, B))
        rows, nf = engine.rows(ks, root_seed)
        failed += nf
        if failed > _MAX_FAILURE_FRACTION * B:
            raise ResamplingError(f"{failed} of {B} resamples failed")
        t = scale * (rows[:, cfg.r0 - 1] / lam_r0 - ew)
        hits += int(np.count_nonzero(np.abs(t) <= z))
        used += len(ks)
        if early_stop and used < B:
            # evaluate the printed rule at both extremes of the final count
            if 1.0 - hits / B < cfg.alpha:
                return Algorithm1Result(float("nan"), hits, True,
                                        B, used, lam_r0)
            if 1.0 - (hits + B - used) / B >= cfg.alpha:
                return Algorithm1Result(float("nan"), hits, False,
                                        B, used, lam_r0)
    p = 1.0 - hits / B
    return Algorithm1Result(p, hits, p < cfg.alpha, B, used, lam_r0)


def estimate_r_factor(data, cfg_template, r_star, root_seed=0,
                      early_stop=False):
    """Largest hypothesized count the sequential test accepts.

    Runs the resampling test for r0 = 1 ... r_star, each with its own
    derived seed, and returns the largest accepted r0; 0 when every test
    rejects or when r_star is 0.
    """
    if r_star < 0:
        raise FactorTestError("r_star must be >= 0")
    r_hat = 0
    for r0 in range(1, r_star + 1):
        res = algorithm1_test(data, cfg_template.with_r0(r0),
                              derive_seed(root_seed, "scan", r0), early_stop)
        if not res.reject:
            r_hat = r0
    return r_hat


def build_factor_data(p, n, delta, loadings_cov=(1.3, 0.8, 0.5), seed=0):
    """Synthetic factor-model draw Y = (delta L F + E) / sqrt(n).

    Rows of the p x r loading matrix L are independent centered Gaussians
    with covariance diag(loadings_cov); F and E have standard normal
    entries. The 1/sqrt(n) folds the sample-size normalization into Y so
    that Y Y^T is the sample covariance. L and F are drawn before E, so a
    fixed seed keeps the noise realization identical across delta values.
    """
    if p < 1 or n < 1:
        raise FactorTestError("p and n must be >= 1")
    if delta < 0:
        raise FactorTestError("delta must be >= 0")
    cov = tuple(float(c) for c in loadings_cov)
    if not cov or any(c <= 0 for c in cov):
        raise FactorTestError("loadings_cov must be positive")
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)
    r = len(cov)
    loadings = rng.standard_normal((p, r)) * np.sqrt(cov)
    factors = rng.standard_normal((r, n))
    noise = rng.standard_normal((p, n))
    y = (delta * (loadings @ factors) + noise) / np.sqrt(n)
    extra = {"delta": float(delta), "true_r": r if delta > 0 else 0,
             "loadings_cov": cov}
    return DataSample(y, None, ModelKind.separable("gaussian"), None, None,
                      extra=extra)
