"""Growth estimation and anisotropy testing for matched fingerprint minutiae."""

from .anisotropy import (
    ConfidenceRectangle,
    DistalTestConfig,
    SphericityStat,
    TestReport,
    build_confidence_rectangle,
    chi2_2_quantile,
    ks_two_sample,
    pair_sphericity,
    rayleigh_statistic,
    solve_delta,
    sphericity_rho,
    study_theta,
    test_distal_boot,
    test_distal_vm,
    test_joint,
    test_rayleigh,
    test_tau_ks,
)
from .circular import (
    AngleSample,
    CircularSummary,
    bessel_i0,
    extrinsic_mean,
    kappa_hat,
    resultant_length,
    rose_bins,
    summarize,
    von_mises_halfcircle_density,
)
from .errors import (
    DegenerateConfigurationError,
    InvalidInputError,
    ParseError,
    UndefinedMeanError,
)
from .estimator import (
    EstimateResult,
    EstimateRow,
    EstimateTable,
    GrowthParams,
    SolverConfig,
    distance_functional,
    estimate,
    estimate_study,
    full_procrustes,
    growth_transform,
    partial_procrustes,
    update_beta,
    update_gamma,
    update_lambda,
    update_tau,
    wrap_angle,
    wrap_axis,
)
from .io import load_estimates, load_study, save_estimates, save_study
from .patterns import MatchedPair, MinutiaPattern, StudyDataset, center_pattern
from .simulate import (
    GrowthSpec,
    NoiseModel,
    SimConfig,
    TruncatedGaussianLaw,
    VariableGrowthResult,
    apply_null_model,
    estimate_alignment_precision,
    inject_growth,
    inject_growth_study,
    perturb,
    reference_tau_sample,
    simulate_pattern,
    simulate_study,
    standin_config,
    standin_dataset,
    standin_noise,
    variable_growth_study,
)
from .sweeps import (
    SweepSpec,
    default_gamma_grid,
    distal_curve,
    fine_gamma_grid,
    rejection_interval,
    tau_min_sweep,
)

__version__ = "0.1.0"
