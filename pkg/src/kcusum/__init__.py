"""Streaming kernel-CUSUM change detection for dependent observations.

Monitor a vector time series against a pre-change reference sample:
windowed kernel mean discrepancies on lifted transition pairs feed a
CUSUM stopping rule, and Doeblin minorisation parameters give
closed-form guarantees on false-alarm spacing and detection delay.
"""

from .config import (
    BoundsSection,
    CampaignSection,
    ConfigError,
    DetectorSection,
    ExperimentConfig,
    OutputSection,
    ScenarioSection,
    load_config,
    parse_config_text,
)
from .harness import (
    CampaignResult,
    CampaignRow,
    HarnessContext,
    TraceRow,
    build_context,
    run_experiment,
    run_md_campaign,
    run_mtbfa_campaign,
    run_trace,
)
from .bounds import (
    BoundReport,
    DoeblinParams,
    MdBound,
    MtbfaBound,
    bound_report,
    buffer_doeblin,
    hoeffding_tail,
    md_upper_bound,
    mtbfa_lower_bound,
    rho_envelope,
    sigma_from_doeblin,
)
from .detector import (
    Calibration,
    CusumStream,
    DetectorConfig,
    KernelCusumDetector,
    ReferenceSet,
    StepOutcome,
    build_reference,
    calibrate_correction,
)
from .kernels import KernelSpec, compensated_sum, make_pair
from .mmd import (
    ConsistencyBound,
    LiftedTrajectory,
    consistency_bound,
    lift,
    mmd,
    mmd_squared,
)
from .simulate import (
    ArScenario,
    FiniteChain,
    FiniteScenario,
    GaussianLaw,
    default_system_matrix,
    doeblin_of_finite,
    exact_mmd_finite,
    lift_chain,
    load_trajectory,
    mean_change_scenario,
    save_trajectory,
    simulate_ar,
    simulate_finite,
    simulate_finite_scenario,
    stationary_distribution,
    stream_rng,
    variance_change_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ArScenario",
    "BoundReport",
    "BoundsSection",
    "Calibration",
    "CampaignResult",
    "CampaignRow",
    "CampaignSection",
    "ConfigError",
    "ConsistencyBound",
    "CusumStream",
    "DetectorConfig",
    "DetectorSection",
    "DoeblinParams",
    "ExperimentConfig",
    "FiniteChain",
    "FiniteScenario",
    "GaussianLaw",
    "HarnessContext",
    "KernelCusumDetector",
    "KernelSpec",
    "LiftedTrajectory",
    "MdBound",
    "MtbfaBound",
    "OutputSection",
    "ReferenceSet",
    "ScenarioSection",
    "StepOutcome",
    "TraceRow",
    "bound_report",
    "buffer_doeblin",
    "build_context",
    "build_reference",
    "calibrate_correction",
    "compensated_sum",
    "consistency_bound",
    "default_system_matrix",
    "doeblin_of_finite",
    "exact_mmd_finite",
    "hoeffding_tail",
    "lift",
    "lift_chain",
    "load_config",
    "load_trajectory",
    "make_pair",
    "md_upper_bound",
    "mean_change_scenario",
    "mmd",
    "mmd_squared",
    "mtbfa_lower_bound",
    "parse_config_text",
    "rho_envelope",
    "run_experiment",
    "run_md_campaign",
    "run_mtbfa_campaign",
    "run_trace",
    "save_trajectory",
    "sigma_from_doeblin",
    "simulate_ar",
    "simulate_finite",
    "simulate_finite_scenario",
    "stationary_distribution",
    "stream_rng",
    "variance_change_scenario",
]
