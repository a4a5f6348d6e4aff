"""Divergences between normal distributions built from design criteria, and
a resampling two-sample test that uses them."""
from .design_criteria import Phi_k, grad_Phi_k, log_Phi_k, log_phi_p, phi_p
from .empirical import (
    corrected_Phi_k,
    energy_distance,
    mc_simplicial_dispersion,
    sample_distance,
    sample_moments,
    unbiased_phi_k_factor,
)
from .errors import BregdivError, InfeasibleError, NumericalError, ValidationError
from .gaussian_divergences import (
    DistanceSpec,
    Family,
    GaussianSummary,
    bhattacharyya,
    br_log_phi_p,
    br_log_simplicial,
    evaluate,
    jb_log_phi_p,
    jb_log_simplicial,
    jensen_shannon,
    kl_symmetrized,
    standardize_pair,
)
from .spectral import EigenFloor, Spectrum, symmetric_eigen
from .two_sample import (
    RocCurve,
    SamplingScheme,
    TestConfig,
    TestResult,
    calibrate_tau,
    roc,
    run_test,
    select_parameter,
    simulate_example,
    simulate_test_rates,
)

__version__ = "0.1.0"
