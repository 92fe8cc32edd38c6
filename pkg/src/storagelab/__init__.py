"""storagelab: Levy-driven storage processes, their long-run regimes, and rates.

A library and CLI for simulating content processes driven by subordinator
input with state-dependent release, classifying transience / null recurrence
/ positive recurrence, certifying drift conditions with predicted
convergence rates and stationary-tail envelopes, and validating those
predictions by Monte Carlo.
"""

__version__ = "0.1.0"

from .classifier import RegimeReport, classify
from .ergodicity_lab import (
    DecayCurve,
    EnsembleEndpoint,
    LongRunTimeAverage,
    TailEstimate,
    compare_rates,
    estimate_tail,
    estimate_tv_decay,
    estimate_wp_decay,
    w1_cdf_area,
    wasserstein_1d,
)
from .levy_input import (
    CompoundPoisson,
    DeterministicJumps,
    Exponential,
    GammaSub,
    JumpStream,
    ParetoJumps,
    StableSub,
    TabulatedTail,
    TemperedStableSub,
    first_moment,
    laplace_check,
    sample_increment,
    tail,
)
from .lyapunov import (
    DriftCertificate,
    ExponentialTail,
    FromRate,
    LogScale,
    PolyQuotient,
    PowerModulus,
    RateFunction,
    SubGeometric,
    build_certificate,
    check_irreducibility_sufficient,
    check_uniform,
    check_wasserstein_contraction,
    generator_apply,
    tail_lower,
    tail_upper,
    tv_lower_rate,
    wasserstein_rate,
)
from .numerics import (
    FitResult,
    QuadratureSpec,
    fit_loglog,
    integrate_semiinfinite,
    invert_monotone,
    ode_flow,
)
from .presets import load_preset, preset_names, preset_row
from .release_rate import (
    Affine,
    Constant,
    Custom,
    Plateau,
    Power,
    PowerSmoothed,
    check_regularity,
    evaluate,
    flow_time_integral,
    modulus_R,
)
from .scenario import Scenario
from .simulator import (
    Endpoint,
    FullEvents,
    Grid,
    PathConfig,
    PathRecord,
    simulate_coupled,
    simulate_ensemble,
    simulate_path,
)
