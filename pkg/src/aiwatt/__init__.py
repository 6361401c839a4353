"""aiwatt: AI data-center power trace synthesis, transient metrics,
grid-impact analysis, and UPS smoothing."""

from .errors import (
    AiwattError,
    GridMismatchError,
    PowerFlowError,
    TraceParseError,
    ValidationError,
)
from .facility import (
    CoolingParams,
    FacilityConfig,
    cooling_power,
    heat_generated,
    it_power,
    joules_to_kwh,
    pue,
    supporting_infra_power,
    total_energy,
    total_power,
)
from .grid import (
    GridFrequencyParams,
    GridNetwork,
    HarmonicSpectrum,
    LoadSite,
    VariabilityInputs,
    all_power_injections,
    estimate_correlation,
    estimate_variability,
    ldc_delta_energy,
    load_duration_curve,
    net_load_variability,
    network_from_dict,
    network_from_json,
    power_injection,
    rocof,
    rocof_hz_per_s,
    solve_power_flow,
    spatial_distribution_factor,
    stability_index,
    thd,
    windowed_variability,
    worst_step_delta_w,
)
from .metrics import (
    IdleDefinition,
    RampStats,
    empirical_cdf,
    exceedance_fraction,
    peak_average_ratio,
    peak_idle_ratio,
    ramp_decline_stats,
)
from .presets import PRESETS, Preset, build_scenario, get_preset, preset_names
from .report import build_report, dumps_report, ups_block_from_result, validate_report
from .scenario import (
    FineTuneSetup,
    ScenarioConfig,
    TrainingSetup,
    load_scenario,
    scenario_from_dict,
    simulate_scenario,
    synthesize,
)
from .trace import (
    PowerTrace,
    SummaryStats,
    derivative,
    emit_csv,
    ingest_csv,
    read_csv,
    resample,
    second_derivative,
    summary_stats,
    write_csv,
)
from .ups import (
    StageSchedule,
    UpsConfig,
    UpsResult,
    Violation,
    apply_stage_caps,
    smooth,
)
from .workload import (
    AcceleratorBreakdownFractions,
    AcceleratorSpec,
    BreakdownWatts,
    DynamicsCoefficients,
    FineTuneProfile,
    InferenceProfile,
    PhaseMix,
    QueryMix,
    RateSchedule,
    TrainingProfile,
    UtilizationMode,
    accelerator_breakdown,
    dynamic_power,
    finetune_power,
    inference_power_trace,
    mixed_power,
    poisson_step_arrivals,
    steady_ai_power,
    training_power,
)

__version__ = "0.1.0"
