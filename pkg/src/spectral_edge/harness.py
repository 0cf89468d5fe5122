"""Reproducible Monte Carlo experiments over the inference toolkit.

Each experiment expands a configuration into a grid of cells, runs R
replicates per cell with seeds derived from (root_seed, cell label,
replicate index), and reduces to metric rows with honest Monte Carlo
standard errors. Replicates are independent and mapped over a process
pool whose size never affects the output: seeds are per replicate, BLAS
threading is pinned to one thread for the whole run, and the reduction
is order-free, so reruns are byte-identical.

Per-replicate failures are counted and reported in a "failures" row for
the affected cell; a failure of the whole cell (e.g. calibration) yields
a single "error" row. The grid itself never aborts.
"""

import csv
import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from .bootstrap_factor import (
    FactorTestConfig, algorithm1_test, build_factor_data, estimate_r_factor,
)
from .matrix_model import ModelKind, eigenvalues, sample_data
from .population import PopulationSpec, johnstone_spiked
from .spike_inference import (
    G1, G2, SpikeTestConfig, calibrate_critical, derive_seed, estimate_r,
    spike_test,
)
from .stieltjes import SolverEnv, predict_lambda1
from .weight_laws import EXP_TAIL, POLY_TAIL, WeightLaw


class HarnessError(Exception):
    pass


EXPERIMENTS = (
    "TypeIError", "Power", "EstimatorCDR", "Robustness",
    "FactorTypeIPower", "FactorCDR", "LimitLaw", "EdgeScan",
)

# weight-law settings used across the elliptical test experiments
SPIKE_SETTINGS = (
    ("gamma_5_5", WeightLaw.gamma(5.0, 5.0)),
    ("pareto_075_3", WeightLaw.pareto(0.75, 3.0)),
    ("exp_1", WeightLaw.exponential(1.0)),
    ("t3_squared",
     WeightLaw.squared_student_t(3, allow_assumption_violation=True)),
)

# multiplier settings of the factor-number test
FACTOR_MULTIPLIERS = (
    ("gamma_15_15", WeightLaw.gamma(15.0, 15.0)),
    ("exp_1", WeightLaw.exponential(1.0)),
    ("chi2_1", WeightLaw.chi_squared(1)),
)

# deliberately wrong calibration laws for the robustness experiment
MISSPEC_CALIBRATIONS = (
    ("pareto_1_4", WeightLaw.pareto(1.0, 4.0)),
    ("t2_squared",
     WeightLaw.squared_student_t(2, allow_assumption_violation=True)),
)

FAMILY_CODES = {
    "frechet": 1.0, "gumbel": 2.0, "weibull": 3.0, "gaussian": 4.0,
    "tw_mixture": 5.0, "point": 6.0,
}

_DEFAULT_LAWS = {
    "TypeIError": SPIKE_SETTINGS,
    "Power": SPIKE_SETTINGS,
    "EstimatorCDR": (SPIKE_SETTINGS[1],),
    "Robustness": (SPIKE_SETTINGS[1],),
    "FactorTypeIPower": FACTOR_MULTIPLIERS,
    "FactorCDR": (FACTOR_MULTIPLIERS[1],),
    "LimitLaw": (FACTOR_MULTIPLIERS[1],),
    "EdgeScan": (FACTOR_MULTIPLIERS[1],),
}

CSV_HEADER = ("experiment", "cell", "metric", "value", "se", "R")

# dense eigensolves below this companion dimension are cheap enough that
# the top-eigenvalue shortcuts would not pay off
_DENSE_TOP_BELOW = 600


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """One experiment family plus every knob its grid can vary.

    ``laws`` holds (name, WeightLaw) pairs and defaults to the canonical
    settings of the experiment. Unused knobs are ignored by experiments
    that do not read them.
    """

    experiment: str
    n: int = 400
    phis: tuple = (0.5, 1.0, 2.0)
    replicates: int = 2000
    alpha: float = 0.1
    root_seed: int = 0
    model: str = "elliptical"
    laws: tuple = ()
    population: object = None
    spikes: tuple = (25.0, 20.0)
    r0: int = 2
    r_star: int = 6
    calibration_replicates: int = 10000
    calibration_laws: tuple = ()
    sigma3_grid: tuple = (2.0, 5.0, 15.0)
    sigma1_grid: tuple = (5.0, 10.0, 25.0, 50.0, 100.0)
    B: int = 1000
    m4: float = 3.0
    factor_r0: int = 3
    deltas: tuple = (3.0, 0.0)
    delta_grid: tuple = (0.5, 1.0, 2.0, 3.0)
    expected_regime: str = None
    csv_path: str = None
    svg_path: str = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise HarnessError(f"unknown experiment {self.experiment!r}; "
                               f"choose one of {', '.join(EXPERIMENTS)}")
        if self.replicates < 1:
            raise HarnessError("replicates must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise HarnessError("alpha must lie in (0, 1)")
        if self.n < 1:
            raise HarnessError("n must be >= 1")
        if not self.phis or any(phi <= 0 for phi in self.phis):
            raise HarnessError("phis must be positive")
        if self.model not in ("elliptical", "separable"):
            raise HarnessError("model must be 'elliptical' or 'separable'")
        laws = self.laws or _DEFAULT_LAWS[self.experiment]
        object.__setattr__(self, "laws", tuple(
            (str(name), law) for name, law in laws))
        for _, law in self.laws:
            if not isinstance(law, WeightLaw):
                raise HarnessError("laws entries must be (name, WeightLaw)")
        if self.experiment == "Robustness":
            calib = self.calibration_laws or MISSPEC_CALIBRATIONS
            object.__setattr__(self, "calibration_laws", tuple(
                (str(name), law) for name, law in calib))


@dataclasses.dataclass(frozen=True)
class ResultRow:
    """One metric of one cell; ``se``/``value`` are None when undefined."""

    experiment: str
    cell: str
    metric: str
    value: float
    se: float
    R: int


@dataclasses.dataclass
class LimitLawReport:
    """Output of validate_limit_law.

    ``values`` holds the per-replicate standardized largest eigenvalues.
    ``ks_distance`` is None exactly when ``marker`` is "not_a_cdf": the
    mixture and degenerate regimes have no closed-form limit CDF to test
    against, so only scaling diagnostics are meaningful there.
    """

    family: str
    prediction: object
    ks_distance: float
    values: np.ndarray
    marker: str
    failures: int
    n: int
    replicates: int


# ---------------------------------------------------------------------------
# parallel plumbing


def _worker_count():
    env = os.environ.get("SPECTRAL_EDGE_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise HarnessError(
                f"SPECTRAL_EDGE_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _init_worker():
    threadpool_limits(limits=1)


def _pmap(fn, tasks):
    """Order-preserving map, in-process or over a spawn pool."""
    tasks = list(tasks)
    workers = min(_worker_count(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers,
                             mp_context=get_context("spawn"),
                             initializer=_init_worker) as pool:
        chunk = max(1, math.ceil(len(tasks) / (4 * workers)))
        return list(pool.map(fn, tasks, chunksize=chunk))


def _replicate_seeds(root_seed, cell, count):
    return [derive_seed(root_seed, cell, k) for k in range(count)]


def _proportion_row(experiment, cell, metric, flags):
    r = len(flags)
    if r == 0:
        return ResultRow(experiment, cell, metric, None, None, 0)
    phat = float(np.mean(flags))
    se = math.sqrt(phat * (1.0 - phat) / r)
    return ResultRow(experiment, cell, metric, phat, se, r)


def _collect(results):
    """Split ("ok", payload) / ("err", message) replicate results."""
    oks = [payload for status, payload in results if status == "ok"]
    errors = [payload for status, payload in results if status != "ok"]
    return oks, errors


def _cell_rows(experiment, cell, metric_flags, n_failed, requested):
    rows = [_proportion_row(experiment, cell + suffix, metric, flags)
            for suffix, metric, flags in metric_flags]
    if n_failed:
        rows.append(ResultRow(experiment, cell, "failures",
                              float(n_failed), None, requested))
    return rows


def _error_row(experiment, cell, exc):
    return ResultRow(experiment, cell, "error", None, None, 0)


# ---------------------------------------------------------------------------
# replicate bodies (module level so the process pool can import them)


def _rep_spike(task):
    cfg, data_law, p, spikes, d1, d2, seed = task
    try:
        pop = johnstone_spiked(p, spikes)
        data = sample_data(ModelKind.elliptical(), pop, data_law, p, cfg.n,
                           seed)
        spec = eigenvalues(data)
        o1 = spike_test(spec, cfg, G1, d1)
        o2 = spike_test(spec, cfg, G2, d2)
        return ("ok", (o1.reject, o2.reject))
    except Exception as e:
        return ("err", f"{type(e).__name__}: {e}")


def _rep_estimator(task):
    cfg, data_law, p, spikes, deltas, true_r, seed = task
    try:
        pop = johnstone_spiked(p, spikes)
        data = sample_data(ModelKind.elliptical(), pop, data_law, p, cfg.n,
                           seed)
        spec = eigenvalues(data)
        est = estimate_r(spec, cfg, delta_provider=lambda r0, w: deltas[r0, w])
        return ("ok", (est.r1 == true_r, est.r2 == true_r))
    except Exception as e:
        return ("err", f"{type(e).__name__}: {e}")


def _rep_factor_test(task):
    fcfg, p, n, delta, data_seed, boot_seed = task
    try:
        data = build_factor_data(p, n, delta, seed=data_seed)
        res = algorithm1_test(data, fcfg, boot_seed, early_stop=True)
        return ("ok", res.reject)
    except Exception as e:
        return ("err", f"{type(e).__name__}: {e}")


def _rep_factor_cdr(task):
    fcfg, p, n, delta, r_star, data_seed, scan_seed = task
    try:
        data = build_factor_data(p, n, delta, seed=data_seed)
        r_hat = estimate_r_factor(data, fcfg, r_star, scan_seed,
                                  early_stop=True)
        return ("ok", r_hat == data.extra["true_r"])
    except Exception as e:
        return ("err", f"{type(e).__name__}: {e}")


def _rep_lambda1(task):
    model, pop, law, p, n, seed = task
    try:
        kind = ModelKind.elliptical() if model == "elliptical" \
            else ModelKind.separable("gaussian")
        data = sample_data(kind, pop, law, p, n, seed)
        return ("ok", _largest_eigenvalue(data))
    except Exception as e:
        return ("err", f"{type(e).__name__}: {e}")


def _largest_eigenvalue(data):
    """Largest eigenvalue of Q, sized for Monte Carlo throughput.

    Small problems use the exact dense path. Large ones use a Krylov
    solve when the law's unbounded tail separates the top eigenvalue,
    and a float32 partial dense solve otherwise; the float32 relative
    error (~1e-6) is far below the distributional tolerances these
    replicates feed.
    """
    import scipy.linalg
    import scipy.sparse.linalg as spla

    m = min(data.p, data.n)
    if m <= _DENSE_TOP_BELOW:
        return eigenvalues(data).largest
    y = data.Y
    tail = data.law.tail_class if data.law is not None else None
    if tail in (POLY_TAIL, EXP_TAIL):
        if data.p <= data.n:
            mv = lambda v: y @ (y.T @ v)
        else:
            mv = lambda v: y.T @ (y @ v)
        op = spla.LinearOperator((m, m), matvec=mv, dtype=y.dtype)
        try:
            vals = spla.eigsh(op, k=1, which="LA",
                              v0=np.ones(m) / math.sqrt(m),
                              return_eigenvectors=False)
            return float(vals[0])
        except spla.ArpackNoConvergence:
            pass
    y32 = y.astype(np.float32)
    gram = y32 @ y32.T if data.p <= data.n else y32.T @ y32
    vals = scipy.linalg.eigh(gram, subset_by_index=[m - 1, m - 1],
                             eigvals_only=True, driver="evr",
                             overwrite_a=True, check_finite=False)
    return float(vals[-1])


# ---------------------------------------------------------------------------
# experiment drivers


def _spike_cfg(cfg, law, r0=None):
    return SpikeTestConfig(
        r0=cfg.r0 if r0 is None else r0, r_star=cfg.r_star, alpha=cfg.alpha,
        replicates=cfg.calibration_replicates, law=law, n=cfg.n)


def _calibrate_pair(cfg, law_name, law, seed, r0=None):
    scfg = _spike_cfg(cfg, law, r0)
    d1 = calibrate_critical(scfg, G1, derive_seed(seed, "calib", law_name, G1))
    d2 = calibrate_critical(scfg, G2, derive_seed(seed, "calib", law_name, G2))
    return scfg, d1, d2


def _run_size_power(cfg, seed, spike_grids):
    """Shared driver for TypeIError, Power, and Robustness.

    spike_grids yields (cell label, data law, calibration (name, law),
    spike vector, metric name); calibrations are cached per calibration
    law since the critical values do not depend on phi or the spikes.
    """
    rows = []
    cache = {}
    for cell, phi, data_law, calib, spikes, metric in spike_grids:
        try:
            if calib[0] not in cache:
                cache[calib[0]] = _calibrate_pair(cfg, calib[0], calib[1],
                                                  seed)
            scfg, d1, d2 = cache[calib[0]]
            p = round(phi * cfg.n)
            seeds = _replicate_seeds(seed, cell, cfg.replicates)
            tasks = [(scfg, data_law, p, spikes, d1, d2, s) for s in seeds]
            oks, errors = _collect(_pmap(_rep_spike, tasks))
            flags1 = [a for a, _ in oks]
            flags2 = [b for _, b in oks]
            rows.extend(_cell_rows(
                cfg.experiment, cell,
                ((";stat=T", metric, flags1), (";stat=T_r0", metric, flags2)),
                len(errors), cfg.replicates))
        except Exception as e:
            rows.append(_error_row(cfg.experiment, cell, e))
    return rows


def _run_type_i(cfg, seed):
    grids = [(f"law={name};phi={phi:g}", phi, law, (name, law),
              tuple(cfg.spikes), "size")
             for name, law in cfg.laws for phi in cfg.phis]
    return _run_size_power(cfg, seed, grids)


def _run_power(cfg, seed):
    grids = [(f"law={name};phi={phi:g};sigma3={s3:g}", phi, law, (name, law),
              tuple(cfg.spikes) + (float(s3),), "power")
             for name, law in cfg.laws for phi in cfg.phis
             for s3 in cfg.sigma3_grid]
    return _run_size_power(cfg, seed, grids)


def _run_robustness(cfg, seed):
    true_name, true_law = cfg.laws[0]
    grids = [(f"law={true_name};calib={cname};phi={phi:g}", phi, true_law,
              (cname, claw), tuple(cfg.spikes), "size")
             for cname, claw in cfg.calibration_laws for phi in cfg.phis]
    return _run_size_power(cfg, seed, grids)


def _run_estimator_cdr(cfg, seed):
    rows = []
    for name, law in cfg.laws:
        try:
            scfg = _spike_cfg(cfg, law, r0=0)
            deltas = {(r0, which): calibrate_critical(
                          scfg.with_r0(r0), which,
                          derive_seed(seed, "delta", name, r0, which))
                      for r0 in range(cfg.r_star) for which in (G1, G2)}
        except Exception as e:
            rows.append(_error_row(cfg.experiment, f"law={name}", e))
            continue
        for phi in cfg.phis:
            for s1 in cfg.sigma1_grid:
                cell = f"law={name};phi={phi:g};sigma1={s1:g}"
                try:
                    p = round(phi * cfg.n)
                    seeds = _replicate_seeds(seed, cell, cfg.replicates)
                    tasks = [(scfg, law, p, (float(s1),), deltas, 1, s)
                             for s in seeds]
                    oks, errors = _collect(_pmap(_rep_estimator, tasks))
                    rows.extend(_cell_rows(
                        cfg.experiment, cell,
                        ((";estimator=r1", "cdr", [a for a, _ in oks]),
                         (";estimator=r2", "cdr", [b for _, b in oks])),
                        len(errors), cfg.replicates))
                except Exception as e:
                    rows.append(_error_row(cfg.experiment, cell, e))
    return rows


def _run_factor_test(cfg, seed):
    rows = []
    for name, law in cfg.laws:
        for phi in cfg.phis:
            for delta in cfg.deltas:
                cell = f"law={name};phi={phi:g};delta={delta:g}"
                try:
                    fcfg = FactorTestConfig(r0=cfg.factor_r0, B=cfg.B,
                                            alpha=cfg.alpha, law=law,
                                            m4=cfg.m4)
                    p = round(phi * cfg.n)
                    # H0: r >= r0 is true when the data carry the factors
                    true_r = 3 if delta > 0 else 0
                    metric = "size" if true_r >= cfg.factor_r0 else "power"
                    seeds = _replicate_seeds(seed, cell, cfg.replicates)
                    tasks = [(fcfg, p, cfg.n, float(delta),
                              derive_seed(s, "data"), derive_seed(s, "mult"))
                             for s in seeds]
                    oks, errors = _collect(_pmap(_rep_factor_test, tasks))
                    rows.extend(_cell_rows(cfg.experiment, cell,
                                           (("", metric, oks),),
                                           len(errors), cfg.replicates))
                except Exception as e:
                    rows.append(_error_row(cfg.experiment, cell, e))
    return rows


def _run_factor_cdr(cfg, seed):
    rows = []
    name, law = cfg.laws[0]
    for phi in cfg.phis:
        for delta in cfg.delta_grid:
            cell = f"law={name};phi={phi:g};delta={delta:g}"
            try:
                fcfg = FactorTestConfig(r0=1, B=cfg.B, alpha=cfg.alpha,
                                        law=law, m4=cfg.m4)
                p = round(phi * cfg.n)
                seeds = _replicate_seeds(seed, cell, cfg.replicates)
                tasks = [(fcfg, p, cfg.n, float(delta), cfg.r_star,
                          derive_seed(s, "data"), derive_seed(s, "mult"))
                         for s in seeds]
                oks, errors = _collect(_pmap(_rep_factor_cdr, tasks))
                rows.extend(_cell_rows(cfg.experiment, cell,
                                       (("", "cdr", oks),),
                                       len(errors), cfg.replicates))
            except Exception as e:
                rows.append(_error_row(cfg.experiment, cell, e))
    return rows


def validate_limit_law(cfg, root_seed=None):
    """Monte Carlo check of the predicted limit law of lambda_1.

    Uses the first (law, phi) pair of the config: simulates R spectra,
    standardizes the largest eigenvalues through predict_lambda1, and
    reports the KS distance to the predicted limit CDF. The mixture and
    degenerate regimes carry no closed-form CDF; the report then has
    marker "not_a_cdf" and the standardized values serve as scaling
    diagnostics only.
    """
    seed = cfg.root_seed if root_seed is None else int(root_seed)
    name, law = cfg.laws[0]
    phi = cfg.phis[0]
    p = cfg.population.p if cfg.population is not None \
        else round(phi * cfg.n)
    pop = cfg.population if cfg.population is not None \
        else PopulationSpec.identity(p)
    env = SolverEnv(cfg.model, pop, law=law, phi=p / cfg.n)
    pred = predict_lambda1(env, cfg.n)
    if cfg.expected_regime is not None and pred.family != cfg.expected_regime:
        raise HarnessError(
            f"(law, population, phi) lands in the {pred.family!r} regime, "
            f"not the expected {cfg.expected_regime!r}")
    cell = f"law={name};phi={phi:g}"
    seeds = _replicate_seeds(seed, cell, cfg.replicates)
    tasks = [(cfg.model, pop, law, p, cfg.n, s) for s in seeds]
    oks, errors = _collect(_pmap(_rep_lambda1, tasks))
    values = pred.standardize(np.asarray(oks, dtype=float))
    dist = {
        "frechet": lambda: stats.invweibull(pred.shape),
        "gumbel": stats.gumbel_r,
        "weibull": lambda: stats.weibull_max(pred.shape),
        "gaussian": stats.norm,
    }.get(pred.family)
    if dist is None:
        return LimitLawReport(pred.family, pred, None, values, "not_a_cdf",
                              len(errors), cfg.n, len(values))
    if values.size == 0:
        raise HarnessError("every replicate failed; nothing to test")
    ks = float(stats.kstest(values, dist().cdf).statistic)
    return LimitLawReport(pred.family, pred, ks, values, "ks",
                          len(errors), cfg.n, len(values))


def _run_limit_law(cfg, seed):
    rows = []
    name, _ = cfg.laws[0]
    for phi in cfg.phis:
        cell = f"law={name};phi={phi:g}"
        try:
            sub = dataclasses.replace(cfg, phis=(phi,))
            rep = validate_limit_law(sub, seed)
            pred = rep.prediction
            checked = rep.marker == "ks"
            rows.append(ResultRow(cfg.experiment, cell, "family_code",
                                  FAMILY_CODES[rep.family], None,
                                  rep.replicates))
            rows.append(ResultRow(cfg.experiment, cell, "cdf_checked",
                                  float(checked), None, rep.replicates))
            if checked:
                rows.append(ResultRow(cfg.experiment, cell, "ks_distance",
                                      rep.ks_distance, None, rep.replicates))
            elif rep.values.size:
                q75, q25 = np.percentile(rep.values, [75.0, 25.0])
                rows.append(ResultRow(cfg.experiment, cell, "deviation_iqr",
                                      float(q75 - q25), None, rep.replicates))
            for metric, value in (("point", pred.point),
                                  ("center", pred.center),
                                  ("scale", pred.scale)):
                rows.append(ResultRow(cfg.experiment, cell, metric,
                                      float(value), None, rep.replicates))
            if rep.failures:
                rows.append(ResultRow(cfg.experiment, cell, "failures",
                                      float(rep.failures), None,
                                      cfg.replicates))
        except Exception as e:
            rows.append(_error_row(cfg.experiment, cell, e))
    return rows


def _run_edge_scan(cfg, seed):
    rows = []
    name, law = cfg.laws[0]
    for phi in cfg.phis:
        cell = f"law={name};phi={phi:g}"
        try:
            p = cfg.population.p if cfg.population is not None \
                else round(phi * cfg.n)
            pop = cfg.population if cfg.population is not None \
                else PopulationSpec.identity(p)
            env = SolverEnv(cfg.model, pop, law=law, phi=p / cfg.n)
            pred = predict_lambda1(env, cfg.n)
            metrics = [("family_code", FAMILY_CODES[pred.family]),
                       ("point", pred.point), ("center", pred.center),
                       ("scale", pred.scale)]
            if pred.shape is not None:
                metrics.append(("shape", float(pred.shape)))
            rows.extend(ResultRow(cfg.experiment, cell, m, float(v), None, 1)
                        for m, v in metrics)
        except Exception as e:
            rows.append(_error_row(cfg.experiment, cell, e))
    return rows


_DRIVERS = {
    "TypeIError": _run_type_i,
    "Power": _run_power,
    "EstimatorCDR": _run_estimator_cdr,
    "Robustness": _run_robustness,
    "FactorTypeIPower": _run_factor_test,
    "FactorCDR": _run_factor_cdr,
    "LimitLaw": _run_limit_law,
    "EdgeScan": _run_edge_scan,
}


def run_experiment(cfg, root_seed=None):
    """All metric rows of the experiment grid, deterministically.

    Seeds derive from (root seed, cell label, replicate index), BLAS
    threading is pinned for the duration, and the worker count never
    enters any seed or reduction, so identical inputs give identical
    rows at any parallelism.
    """
    seed = cfg.root_seed if root_seed is None else int(root_seed)
    with threadpool_limits(limits=1):
        return _DRIVERS[cfg.experiment](cfg, seed)


def completed(rows):
    """True when no cell errored and no replicate failures were recorded."""
    return not any(r.metric in ("error", "failures") for r in rows)


# ---------------------------------------------------------------------------
# output


def _format_field(v):
    if v is None:
        return ""
    return repr(float(v))


def emit_outputs(rows, csv_path, svg_path=None):
    """Write the fixed-header CSV and, optionally, a summary SVG."""
    rows = list(rows)
    if not rows:
        raise HarnessError("no rows to emit")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([r.experiment, r.cell, r.metric,
                             _format_field(r.value), _format_field(r.se),
                             str(int(r.R))])
    if svg_path is not None:
        _render_svg(rows, svg_path)
    return (csv_path, svg_path) if svg_path is not None else (csv_path,)


def parse_outputs(csv_path):
    """Inverse of emit_outputs' CSV: a list of ResultRow."""
    out = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise HarnessError(f"unexpected CSV header {header!r}")
        for rec in reader:
            exp, cell, metric, value, se, r = rec
            out.append(ResultRow(exp, cell, metric,
                                 float(value) if value else None,
                                 float(se) if se else None, int(r)))
    return out


def _render_svg(rows, svg_path):
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plotted = [r for r in rows
               if r.value is not None and r.metric not in ("failures",)]
    metrics = list(dict.fromkeys(r.metric for r in plotted))
    if not metrics:
        metrics = ["(no data)"]
    fig, axes = plt.subplots(len(metrics), 1,
                             figsize=(max(6.0, 0.45 * len(rows)),
                                      2.8 * len(metrics)),
                             squeeze=False)
    for ax, metric in zip(axes[:, 0], metrics):
        sub = [r for r in plotted if r.metric == metric]
        xs = np.arange(len(sub))
        ys = [r.value for r in sub]
        errs = [0.0 if r.se is None else r.se for r in sub]
        ax.bar(xs, ys, yerr=errs, color="#4878a8", capsize=2)
        ax.set_xticks(xs)
        ax.set_xticklabels([r.cell for r in sub], rotation=90, fontsize=6)
        ax.set_ylabel(metric)
    fig.suptitle(rows[0].experiment)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
