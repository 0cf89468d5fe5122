"""Spectral-edge analysis for weighted sample covariance models.

Library layout:

* weight_laws     -- weight distributions, tails, extreme-value limits
* population      -- population covariance spectra, plain and spiked
* matrix_model    -- data simulation Y = Sigma^{1/2} X D and eigenvalues
* stieltjes       -- transform solvers, edge location, regime classification
* spike_inference -- eigenvalue-ratio tests and spike-count estimation
* bootstrap_factor-- multiplier-bootstrap factor-number test
* harness         -- reproducible Monte Carlo experiments and reports
* cli             -- the ``spectral-edge`` command line
"""

from .weight_laws import EvtLimit, WeightLaw
from .population import PopulationSpec, SpikedPopulation, johnstone_spiked
from .matrix_model import (
    DataSample, ModelKind, Spectrum, eigenvalues, empirical_stieltjes,
    sample_data,
)
from .stieltjes import (
    EdgeReport, SolverEnv, StieltjesTriple, classify_regime, density,
    edge_coupled, edge_weibull_regime, mu1_divergent, predict_lambda1,
    solve_edge, solve_m1, varsigma_constants,
)
from .spike_inference import (
    CalibrationResult, SpikeCountEstimate, SpikeTestConfig, TestOutcome,
    calibrate_critical, estimate_r, make_delta_provider,
    spike_strength_threshold, spike_test, stat_T, stat_T_r0,
)
from .bootstrap_factor import (
    Algorithm1Result, FactorTestConfig, algorithm1_test, bootstrap_eigs,
    build_factor_data, estimate_r_factor, v_constant,
)
from .harness import (
    ExperimentConfig, LimitLawReport, ResultRow, emit_outputs, parse_outputs,
    run_experiment, validate_limit_law,
)

__version__ = "0.1.0"

__all__ = [
    "EvtLimit", "WeightLaw",
    "PopulationSpec", "SpikedPopulation", "johnstone_spiked",
    "DataSample", "ModelKind", "Spectrum", "eigenvalues",
    "empirical_stieltjes", "sample_data",
    "EdgeReport", "SolverEnv", "StieltjesTriple", "classify_regime",
    "density", "edge_coupled", "edge_weibull_regime", "mu1_divergent",
    "predict_lambda1", "solve_edge", "solve_m1", "varsigma_constants",
    "CalibrationResult", "SpikeCountEstimate", "SpikeTestConfig",
    "TestOutcome", "calibrate_critical", "estimate_r", "make_delta_provider",
    "spike_strength_threshold", "spike_test", "stat_T", "stat_T_r0",
    "Algorithm1Result", "FactorTestConfig", "algorithm1_test",
    "bootstrap_eigs", "build_factor_data", "estimate_r_factor", "v_constant",
    "ExperimentConfig", "LimitLawReport", "ResultRow", "emit_outputs",
    "parse_outputs", "run_experiment", "validate_limit_law",
    "__version__",
]
