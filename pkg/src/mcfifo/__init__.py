"""Delay bounds for multiclass FIFO queues, with a simulator to check them."""

from .analytic import (
    BoundCurve,
    StabilityReport,
    ThetaSolution,
    bound_cruz_aggregate,
    bound_dd1,
    bound_dmdm,
    bound_mstar_d1,
    delay_bound_convolve,
    gsbb_bound_convolution,
    gsbb_bound_split,
    kingman_reference,
    stability,
    theta_dmdm,
    theta_exact,
    theta_md1,
    theta_mm1,
    waiting_bound_curve,
)
from .errors import (
    ConditionNotMetError,
    InvalidInputError,
    InvalidSpecError,
    NoDecayError,
    NoPositiveRootError,
    UnsupportedEnvelopeError,
)
from .experiments import (
    CaseConfig,
    ComparisonResult,
    preset,
    run_comparison,
    simulate_case,
    tightness_scenario,
)
from .oracle import (
    mgf_monte_carlo,
    samplepath_delay_bound,
    virtual_wait_direct,
)
from .simulator import (
    CustomerRecord,
    EmpiricalCCDF,
    RunResult,
    empirical_ccdf,
    merge_streams,
    run_fifo,
    transient_distribution,
)
from .traffic import (
    ArrivalSequence,
    ClassSpec,
    Constant,
    CoupledPoisson,
    DegenerateTail,
    DeterministicEnvelope,
    ExponentialMean,
    ExponentialTail,
    Periodic,
    Poisson,
    deterministic_envelope,
    gen_coupled_poisson,
    gen_periodic,
    gen_poisson,
    gsbb_tail_from_mgf,
)

__version__ = "0.1.0"
