"""Statistics, estimation and simulation for temporal-array photon-number-resolving detectors."""

from .detector import (
    ClickPMF,
    DetectorConfig,
    click_moments,
    click_pmf_fock,
    click_pmf_poisson,
    click_probability,
    variance_maximizing_mu,
)
from .errors import (
    ConfigError,
    InsufficientDataError,
    NoTriggerError,
    OutOfRangeError,
    ParseError,
    PNRError,
    SaturatedError,
    StatisticalError,
)
from .estimation import (
    ClickSample,
    MuEstimate,
    attenuation_fit,
    cramer_rao_bound,
    delta_method_std,
    fock_classify,
    max_resolvable_mu,
    mle_mu,
    mu_from_mean_clicks,
    resolution_spacing,
    sample_mean,
)
from .ingest import (
    TimeTagRecord,
    TriggerConfig,
    bin_events,
    dark_prob_per_bin,
    parse_timetags,
    write_timetags,
)
from .montecarlo import (
    SimDetector,
    SimResult,
    Source,
    heterogeneous_two_arm,
    run_experiment,
    sample_clicks,
    uniform_detector,
)
from .multiplexer import (
    CouplerSpec,
    MultiplexerSpec,
    bin_schedule,
    bin_weights,
    effective_array_size,
    loss_budget,
    overall_efficiency,
)

__version__ = "0.1.0"
