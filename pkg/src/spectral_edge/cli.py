"""Command-line front end.

Commands mirror the library surface: draw data (simulate), solve the
deterministic edge (solve-edge), name the fluctuation regime (classify),
run the spike and factor tests on supplied spectra/data (spike-test,
calibrate, factor-test), check a limit law by Monte Carlo
(validate-limits), and drive full experiment grids from a TOML config
(run). Matrix inputs are plain delimited text; both test statistics are
scale-invariant, so the input's overall normalization does not matter.
"""

import sys

import click
import numpy as np

try:
    import tomllib as tomli
except ImportError:          # Python < 3.11
    import tomli

from . import harness, spike_inference
from .bootstrap_factor import (
    FactorTestConfig, FactorTestError, algorithm1_test,
)
from .matrix_model import DataSample, ModelKind, eigenvalues, sample_data
from .population import PopulationSpec, johnstone_spiked
from .spike_inference import (
    G1, G2, SpikeInferenceError, SpikeTestConfig, calibrate_critical,
    spike_test,
)
from .stieltjes import (
    SolverEnv, WrongRegimeError, classify_regime, density, predict_lambda1,
    solve_edge,
)
from .weight_laws import WeightLaw

_ERRORS = (ValueError, RuntimeError, harness.HarnessError,
           SpikeInferenceError, FactorTestError)

# name -> (constructor, arity, takes the assumption-violation flag)
_LAW_FORMS = {
    "pointmass": (WeightLaw.point_mass, 1, False),
    "exp": (WeightLaw.exponential, 1, False),
    "gamma": (WeightLaw.gamma, 2, False),
    "chi2": (lambda k: WeightLaw.chi_squared(int(k)), 1, False),
    "pareto": (WeightLaw.pareto, 2, True),
    "beta": (WeightLaw.scaled_beta, 3, False),
    "uniform": (WeightLaw.uniform, 1, False),
    "t2": (lambda nu, **kw: WeightLaw.squared_student_t(int(nu), **kw),
           1, True),
}


def parse_law(text, allow_assumption_violation=False):
    """Parse 'name:a,b' into a WeightLaw (e.g. exp:1, pareto:0.75,3)."""
    name, _, argstr = text.partition(":")
    name = name.strip().lower()
    if name not in _LAW_FORMS:
        raise click.ClickException(
            f"unknown law {name!r}; choose from {', '.join(_LAW_FORMS)}")
    ctor, arity, takes_flag = _LAW_FORMS[name]
    try:
        args = [float(a) for a in argstr.split(",")] if argstr.strip() else []
    except ValueError:
        raise click.ClickException(f"bad law arguments in {text!r}")
    if len(args) != arity:
        raise click.ClickException(
            f"law {name!r} takes {arity} argument(s), got {len(args)}")
    kwargs = {"allow_assumption_violation": True} \
        if takes_flag and allow_assumption_violation else {}
    try:
        return ctor(*args, **kwargs)
    except ValueError as e:
        raise click.ClickException(f"invalid law {text!r}: {e}")


def _kind(model):
    return ModelKind.elliptical() if model == "elliptical" \
        else ModelKind.separable("gaussian")


def _population(p, spikes):
    if spikes:
        return johnstone_spiked(p, spikes)
    return PopulationSpec.identity(p)


def _parse_spikes(text):
    if not text:
        return ()
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError:
        raise click.ClickException(f"bad spike list {text!r}")


def _load_matrix(path):
    try:
        arr = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except OSError as e:
        raise click.ClickException(str(e))
    except ValueError:
        # fall back to whitespace-delimited
        try:
            arr = np.loadtxt(path, dtype=float, ndmin=2)
        except (OSError, ValueError) as e:
            raise click.ClickException(f"cannot parse {path}: {e}")
    return arr


def _load_spectrum(path):
    arr = _load_matrix(path)
    if 1 not in arr.shape:
        raise click.ClickException(
            f"{path} should hold a single row or column of eigenvalues, "
            f"got shape {arr.shape}")
    return np.sort(arr.ravel())[::-1]


def _echo_kv(pairs):
    for key, value in pairs:
        if isinstance(value, float):
            value = f"{value:.10g}"
        click.echo(f"{key}: {value}")


_LAW_OPT = click.option("--law", required=True,
                        help="Weight law, as name:args (e.g. exp:1, "
                             "gamma:5,5, pareto:0.75,3, beta:1,1,3, "
                             "chi2:1, uniform:1, t2:3, pointmass:1).")
_AAV_OPT = click.option("--allow-assumption-violation", is_flag=True,
                        help="Admit laws outside the tail assumptions "
                             "(e.g. pareto with alpha <= 2, t2 with "
                             "nu <= 4).")
_MODEL_OPT = click.option("--model", default="elliptical", show_default=True,
                          type=click.Choice(["elliptical", "separable"]))


@click.group()
def main():
    """Spectral-edge toolkit for weighted sample covariance models."""


@main.command()
@_MODEL_OPT
@_LAW_OPT
@_AAV_OPT
@click.option("--p", type=int, required=True, help="Row dimension.")
@click.option("--n", type=int, required=True, help="Sample size.")
@click.option("--spikes", default="", help="Spiked population eigenvalues, "
                                           "comma-separated (base identity).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="Write the p x n data matrix (CSV) here.")
@click.option("--spectrum", is_flag=True,
              help="Write eigenvalues (one per line) instead of the matrix.")
def simulate(model, law, allow_assumption_violation, p, n, spikes, seed,
             output, spectrum):
    """Draw one data set Y = Sigma^(1/2) X D and report its spectrum."""
    wlaw = parse_law(law, allow_assumption_violation)
    try:
        pop = _population(p, _parse_spikes(spikes))
        data = sample_data(_kind(model), pop, wlaw, p, n, seed)
        spec = eigenvalues(data)
    except _ERRORS as e:
        raise click.ClickException(str(e))
    _echo_kv([("model", model), ("law", law), ("p", p), ("n", n),
              ("seed", seed), ("lambda_1", spec.largest)])
    if output is not None:
        if spectrum:
            np.savetxt(output, spec.values, fmt="%.17g")
        else:
            np.savetxt(output, data.Y, fmt="%.17g", delimiter=",")
        click.echo(f"wrote: {output}")


@main.command("solve-edge")
@_MODEL_OPT
@_LAW_OPT
@_AAV_OPT
@click.option("--phi", type=float, required=True, help="Aspect ratio p/n.")
@click.option("--p", type=int, default=1000, show_default=True,
              help="Population dimension for Sigma.")
@click.option("--spikes", default="", help="Spiked population eigenvalues.")
@click.option("--n", type=int, default=None,
              help="Sample size hint for regime annotations.")
@click.option("--density-csv", type=click.Path(dir_okay=False), default=None,
              help="Also write the spectral density on a grid (E,rho).")
@click.option("--density-points", type=int, default=200, show_default=True)
def solve_edge_cmd(model, law, allow_assumption_violation, phi, p, spikes, n,
                   density_csv, density_points):
    """Solve the self-consistent system at the spectral edge."""
    wlaw = parse_law(law, allow_assumption_violation)
    try:
        env = SolverEnv(_kind(model), _population(p, _parse_spikes(spikes)),
                        law=wlaw, phi=phi)
        rep = solve_edge(env, n)
    except _ERRORS as e:
        raise click.ClickException(str(e))
    center, scale, exponent = rep.standardization
    pairs = [("L_plus", rep.L_plus), ("m1_at_edge", rep.m1_at_edge),
             ("varsigma_1", rep.varsigma[0]), ("varsigma_2", rep.varsigma[1]),
             ("varsigma_3", rep.varsigma[2]), ("varsigma_4", rep.varsigma[3]),
             ("vartheta", rep.vartheta), ("regime", rep.regime),
             ("center", center), ("scale", scale), ("exponent", exponent)]
    if rep.d is not None:
        pairs.append(("d", float(rep.d)))
    if rep.gamma is not None:
        pairs.append(("gamma", rep.gamma))
    _echo_kv(pairs)
    if density_csv is not None:
        grid = np.linspace(1e-3 * rep.L_plus, 1.05 * rep.L_plus,
                           density_points)
        with open(density_csv, "w") as fh:
            fh.write("E,rho\n")
            m0 = None
            for e_val in grid:
                try:
                    rho = density(float(e_val), env, L_plus=rep.L_plus,
                                  m0=m0)
                except _ERRORS:
                    continue
                fh.write(f"{e_val:.17g},{rho:.17g}\n")
        click.echo(f"wrote: {density_csv}")


@main.command()
@_MODEL_OPT
@_LAW_OPT
@_AAV_OPT
@click.option("--phi", type=float, required=True)
@click.option("--p", type=int, default=1000, show_default=True)
@click.option("--spikes", default="")
@click.option("--n", type=int, default=None,
              help="Sample size for the finite-n standardization.")
def classify(model, law, allow_assumption_violation, phi, p, spikes, n):
    """Name the lambda_1 fluctuation regime and its standardization."""
    wlaw = parse_law(law, allow_assumption_violation)
    try:
        env = SolverEnv(_kind(model), _population(p, _parse_spikes(spikes)),
                        law=wlaw, phi=phi)
        pairs = []
        try:
            rec = classify_regime(env, n)
            pairs += [("regime", rec.regime), ("detail", rec.detail)]
        except WrongRegimeError:
            pairs.append(("regime", wlaw.tail_class + " tail, divergent"))
        pred = predict_lambda1(env, n)
    except _ERRORS as e:
        raise click.ClickException(str(e))
    pairs += [("family", pred.family), ("point", pred.point),
              ("center", pred.center), ("scale", pred.scale)]
    if pred.shape is not None:
        pairs.append(("shape", float(pred.shape)))
    if pred.notes:
        pairs.append(("notes", pred.notes))
    _echo_kv(pairs)


@main.command("spike-test")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Spectrum file: one eigenvalue per line, descending "
                   "order not required.")
@_LAW_OPT
@_AAV_OPT
@click.option("--r0", type=int, required=True, help="Hypothesized count.")
@click.option("--r-star", type=int, default=6, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--n", type=int, required=True,
              help="Sample size behind the spectrum (calibration draws "
                   "weight vectors of this length).")
@click.option("--replicates", type=int, default=10000, show_default=True,
              help="Calibration replicates.")
@click.option("--seed", type=int, default=0, show_default=True)
def spike_test_cmd(input_path, law, allow_assumption_violation, r0, r_star,
                   alpha, n, replicates, seed):
    """Test H0: exactly r0 spikes, calibrating both gap statistics."""
    wlaw = parse_law(law, allow_assumption_violation)
    spec = _load_spectrum(input_path)
    try:
        cfg = SpikeTestConfig(r0=r0, r_star=r_star, alpha=alpha,
                              replicates=replicates, law=wlaw, n=n)
        for which in (G1, G2):
            delta = calibrate_critical(
                cfg, which, spike_inference.derive_seed(seed, "cli", which))
            out = spike_test(spec, cfg, which, delta)
            _echo_kv([(f"{which}.statistic", out.statistic),
                      (f"{which}.critical", out.critical_value),
                      (f"{which}.reject", str(out.reject).lower())])
    except _ERRORS as e:
        raise click.ClickException(str(e))


@main.command()
@_LAW_OPT
@_AAV_OPT
@click.option("--n", type=int, required=True)
@click.option("--r0", type=int, default=None,
              help="Single hypothesized count; default scans 0..r_star-1.")
@click.option("--r-star", type=int, default=6, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--replicates", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="Write the table here instead of stdout.")
def calibrate(law, allow_assumption_violation, n, r0, r_star, alpha,
              replicates, seed, output):
    """Tabulate calibrated critical values (CSV: r0,statistic,...,delta)."""
    wlaw = parse_law(law, allow_assumption_violation)
    r0s = range(r_star) if r0 is None else [r0]
    lines = ["r0,statistic,alpha,n,r_star,replicates,delta"]
    try:
        for k in r0s:
            cfg = SpikeTestConfig(r0=k, r_star=r_star, alpha=alpha,
                                  replicates=replicates, law=wlaw, n=n)
            for which in (G1, G2):
                delta = calibrate_critical(
                    cfg, which,
                    spike_inference.derive_seed(seed, "delta", k, which))
                lines.append(f"{k},{which},{alpha:g},{n},{r_star},"
                             f"{replicates},{float(delta):.17g}")
    except _ERRORS as e:
        raise click.ClickException(str(e))
    text = "\n".join(lines) + "\n"
    if output is None:
        click.echo(text, nl=False)
    else:
        with open(output, "w") as fh:
            fh.write(text)
        click.echo(f"wrote: {output}")


@main.command("factor-test")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Data matrix, rows = variables, columns = samples.")
@click.option("--multiplier", required=True,
              help="Bootstrap multiplier law (same syntax as --law).")
@click.option("--r0", type=int, required=True,
              help="Hypothesized factor count (H0: r >= r0).")
@click.option("--b", "--B", "b_resamples", type=int, default=1000,
              show_default=True, help="Bootstrap resamples.")
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--m4", type=float, default=3.0, show_default=True,
              help="Fourth-moment constant of the data entries.")
@click.option("--seed", type=int, default=0, show_default=True)
def factor_test_cmd(input_path, multiplier, r0, b_resamples, alpha, m4,
                    seed):
    """Run the multiplier-bootstrap factor test on a data matrix."""
    law = parse_law(multiplier)
    y = _load_matrix(input_path)
    data = DataSample(y, None, ModelKind.separable("gaussian"), None, None)
    try:
        cfg = FactorTestConfig(r0=r0, B=b_resamples, alpha=alpha, law=law,
                               m4=m4)
        res = algorithm1_test(data, cfg, seed)
    except _ERRORS as e:
        raise click.ClickException(str(e))
    _echo_kv([("p_value", res.p_value), ("B_star", res.B_star),
              ("B", res.B), ("lambda_r0", res.lambda_r0),
              ("reject", str(res.reject).lower())])


@main.command("validate-limits")
@_MODEL_OPT
@_LAW_OPT
@_AAV_OPT
@click.option("--phi", type=float, required=True)
@click.option("--n", type=int, default=2000, show_default=True)
@click.option("--replicates", type=int, default=2000, show_default=True)
@click.option("--expected-regime", default=None,
              help="Fail unless the configuration lands in this regime.")
@click.option("--root-seed", type=int, default=0, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False),
              default=None)
@click.option("--svg", "svg_path", type=click.Path(dir_okay=False),
              default=None)
def validate_limits(model, law, allow_assumption_violation, phi, n,
                    replicates, expected_regime, root_seed, csv_path,
                    svg_path):
    """Monte Carlo check of the predicted lambda_1 limit law."""
    wlaw = parse_law(law, allow_assumption_violation)
    cfg = harness.ExperimentConfig(
        "LimitLaw", n=n, phis=(phi,), replicates=replicates,
        model=model, laws=((law.replace(":", "_").replace(",", "_"), wlaw),),
        expected_regime=expected_regime, root_seed=root_seed)
    try:
        rep = harness.validate_limit_law(cfg)
    except _ERRORS as e:
        raise click.ClickException(str(e))
    pairs = [("family", rep.family), ("marker", rep.marker),
             ("replicates", rep.replicates), ("failures", rep.failures),
             ("point", rep.prediction.point),
             ("center", rep.prediction.center),
             ("scale", rep.prediction.scale)]
    if rep.marker == "ks":
        pairs.append(("ks_distance", rep.ks_distance))
    elif rep.values.size:
        q75, q25 = np.percentile(rep.values, [75.0, 25.0])
        pairs.append(("deviation_iqr", float(q75 - q25)))
    _echo_kv(pairs)
    if csv_path is not None or svg_path is not None:
        rows = harness.run_experiment(cfg)
        harness.emit_outputs(rows, csv_path or "limit_law.csv", svg_path)
        click.echo(f"wrote: {csv_path or 'limit_law.csv'}"
                   + (f", {svg_path}" if svg_path else ""))


_CONFIG_SCALARS = ("n", "replicates", "alpha", "root_seed", "model", "r0",
                   "r_star", "calibration_replicates", "B", "m4",
                   "factor_r0", "expected_regime")
_CONFIG_LISTS = ("phis", "spikes", "sigma3_grid", "sigma1_grid", "deltas",
                 "delta_grid")


def _config_from_toml(doc):
    if "experiment" not in doc:
        raise click.ClickException("config needs an 'experiment' key")
    aav = bool(doc.get("allow_assumption_violation", False))
    kwargs = {"experiment": doc["experiment"]}
    for key in _CONFIG_SCALARS:
        if key in doc:
            kwargs[key] = doc[key]
    for key in _CONFIG_LISTS:
        if key in doc:
            kwargs[key] = tuple(doc[key])
    for key in ("laws", "calibration_laws"):
        if key in doc:
            kwargs[key] = tuple(
                (str(text), parse_law(str(text), aav)) for text in doc[key])
    known = set(_CONFIG_SCALARS) | set(_CONFIG_LISTS) | {
        "experiment", "laws", "calibration_laws", "csv", "svg",
        "allow_assumption_violation"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise click.ClickException(f"unknown config keys: {unknown}")
    try:
        return harness.ExperimentConfig(**kwargs)
    except (TypeError, harness.HarnessError, ValueError) as e:
        raise click.ClickException(str(e))


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="TOML experiment description.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False),
              default=None, help="Override the config's csv path.")
@click.option("--svg", "svg_path", type=click.Path(dir_okay=False),
              default=None, help="Override the config's svg path.")
@click.option("--root-seed", type=int, default=None,
              help="Override the config's root seed.")
def run(config_path, csv_path, svg_path, root_seed):
    """Run an experiment grid from a config file; exit 0 iff every cell
    completed (replicate-level failure counts are reported in the CSV and
    do not affect the exit code)."""
    with open(config_path, "rb") as fh:
        try:
            doc = tomli.load(fh)
        except tomli.TOMLDecodeError as e:
            raise click.ClickException(f"bad TOML in {config_path}: {e}")
    csv_out = csv_path or doc.get("csv")
    svg_out = svg_path or doc.get("svg")
    if not csv_out:
        raise click.ClickException(
            "no output path: set csv in the config or pass --csv")
    cfg = _config_from_toml(doc)
    try:
        rows = harness.run_experiment(cfg, root_seed)
        harness.emit_outputs(rows, csv_out, svg_out)
    except _ERRORS as e:
        raise click.ClickException(str(e))
    errored = sorted({r.cell for r in rows if r.metric == "error"})
    click.echo(f"wrote: {csv_out}" + (f", {svg_out}" if svg_out else ""))
    if errored:
        click.echo(f"{len(errored)} cell(s) failed: "
                   + "; ".join(errored[:5])
                   + ("; ..." if len(errored) > 5 else ""), err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
