"""Finite-time state and disturbance estimation for triangular nonlinear
systems using modulating functions, with an ODE simulator, a super-twisting
observer baseline, and a noise-robustness benchmark harness."""

from .basis import (
    MONOMIAL_RAW,
    MONOMIAL_SCALED,
    BasisFamily,
    GramMatrix,
    assemble_gram,
    design_matrix,
    eval_basis,
    reconstruct,
    to_raw_coeffs,
)
from .errors import (
    ConfigError,
    EstimationError,
    IndexOutOfRange,
    InvalidRange,
    MissingPrerequisite,
    ModfunError,
    NonFinite,
    NonFiniteState,
    NonIntegerSpan,
    OrderUnavailable,
    OutOfWindow,
    WindowMisaligned,
    WindowTooLong,
    ZeroReference,
)
from .estimator import (
    DIRECT,
    OFFLINE,
    ONLINE,
    RECURSIVE,
    EstimateSeries,
    EstimatorConfig,
    StageSpec,
    estimate_disturbance,
    estimate_disturbance_direct,
    estimate_state_direct,
    estimate_state_recursive,
    estimate_states_all,
    run_online,
    solve_ls,
)
from .experiment import (
    ExperimentConfig,
    NoisePlan,
    config_from_dict,
    load_config,
    preset_names,
    run_experiment,
)
from .modulating import (
    ModFunSet,
    PolyModFun,
    check_order,
    eval_derivative,
    make_family,
    modulate,
)
from .signals import (
    NoiseSpec,
    SampledSignal,
    TimeGrid,
    add_noise,
    integrate,
    make_grid,
    read_signals_csv,
    relative_l2_error,
    write_signals_csv,
)
from .systems import (
    PendulumParams,
    SimResult,
    StoConfig,
    TriangularSystem,
    academic3,
    pendulum,
    simulate,
    sto_estimate,
)

__version__ = "0.1.0"
