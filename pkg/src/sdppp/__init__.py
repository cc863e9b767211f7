"""Monte Carlo toolkit for branching-stable point processes.

Builds branching random walks, the branching convolution of point-measure
laws, randomly shifted decorated Poisson point processes (SDPPPs), and
the statistical machinery to check that a candidate law is invariant
under one branching step.
"""

from .battery import TestFunction, default_battery, plateau, ramp
from .branching import (
    POPULATION_CAP,
    MeasureSampler,
    brw_sampler,
    convolve,
    dirac_sampler,
    floor_miss_probability,
    offspring_sampler,
    recommend_floor,
    simulate_generation,
    translated_sampler,
)
from .errors import (
    ClassificationError,
    ConfigError,
    NoCriticalRootError,
    PopulationCapError,
    QuadratureError,
    TruncationError,
)
from .martingale import (
    ShiftSampler,
    additive_martingale,
    check_smoothing_identity,
    clamp_fraction,
    constant_shift,
    derivative_martingale,
    sample_S,
    scaled_shift,
)
from .point_measure import (
    NEG_INF,
    PointMeasure,
    dirac,
    from_atoms,
    integrate,
    max_atom,
    null_measure,
    tail_count,
    translate,
)
from .poisson import (
    DecorationLaw,
    check_g_asymptotics,
    cox_sampler,
    estimate_g,
    estimate_g_curve,
    max_cdf_semi_analytic,
    normalize_decoration,
    ppp_sampler,
    sample_ppp_exponential,
    sample_sdppp,
    sdppp_sampler,
)
from .reproduction import (
    BinaryDeterministic,
    BinaryGaussian,
    CriticalityReport,
    PoissonGaussian,
    ReproductionLaw,
    classify,
    kappa,
    kappa_d1,
    kappa_d2,
    sample_offspring,
    solve_critical_alpha,
)
from .streams import replicate_map, replicate_stream
from .verify import (
    LaplaceEstimate,
    VerificationReport,
    count_stabilization,
    extract_decoration,
    fit_T_phi,
    laplace_functional,
    sdppp_laplace_oracle,
    smoothing_iterate,
    verify_fixed_point,
)

__version__ = "0.1.0"
