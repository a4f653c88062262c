"""Growth-fragmentation analytics and simulation toolkit.

Submodules follow the pipeline: ``kappa_core`` (cumulant calculus and Levy
characteristics), ``levy_sim`` (spectrally negative Levy paths),
``pssmp`` (Lamperti time change to self-similar Markov processes),
``branching`` (event-driven particle system), ``solutions`` (closed-form
identities and Monte Carlo verifiers), ``verify`` (seeded verification
suites) and ``cli`` (command-line front end).
"""

from .errors import (
    ConfigError,
    DomainTooSmall,
    DriftConditionFailed,
    GfragError,
    HypothesisFailed,
    InvalidDislocation,
    KillRateNegative,
    NegativeOrder,
    NotAbsorbed,
    NotHomogeneous,
    OutsideDomain,
    PureFragmentationExcluded,
    SlopeUnattainable,
    TruncatedTrace,
    UnsupportedRegime,
    WrongSign,
)
from .kappa_core import (
    CumulantReport,
    DislocationMeasure,
    LevyCharacteristics,
    ModelParams,
    PowerLawDensity,
    clt_profile,
    drift_d,
    kappa,
    kappa_value,
    legendre,
    levy_characteristics,
    load_model,
    malthus_roots,
    validate_model,
)
from .levy_sim import (
    LevyPath,
    MCEstimate,
    estimate_exp_moment,
    sample_endpoints,
    sample_running_max,
    simulate_levy,
)
from .pssmp import (
    Absorption,
    PssmpPath,
    endpoint_samples,
    entrance_sample,
    entrance_samples,
    killed_power_integral_samples,
    killed_sup_samples,
    lamperti_forward,
    path_power_integral,
    path_sup,
    simulate_pssmp,
)
from .branching import (
    ParticleRecord,
    PopulationTrace,
    SimCaps,
    WatchSpec,
    blowup_time,
    count_in_interval,
    empirical_moment,
    explosion_experiment,
    growth_flow,
    next_split_time,
    simulate_population,
    snapshot,
)
from .rng import RngStream
from .solutions import (
    ClippedPower,
    Constant,
    Indicator,
    WeightedSample,
    branching_moment_estimate,
    clt_check,
    entrance_moment_trend,
    gamma_moment,
    homogeneous_mellin,
    rescaling_check,
    spine_estimator,
    t2_moment,
    tail_estimate,
    verify_t2,
)

__version__ = "0.1.0"
