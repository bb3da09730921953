"""Sparse-array MVDR beamformer design by ADMM, with L-of-M sensor selection."""

__version__ = "0.1.0"

from .numerics import (  # noqa: E402
    HermitianMatrix,
    HpdFactor,
    SingularMatrixError,
    ValidationError,
    herm_eigvals,
    solve_hpd,
)
from .signal_model import (  # noqa: E402
    Scenario,
    SnapshotMatrix,
    data_covariance_true,
    generate_snapshots,
    interference_noise_covariance,
    sample_covariance,
    steering_vector,
)
from .beamformer import (  # noqa: E402
    BeamformerWeight,
    beampattern,
    mvdr_weights,
    optimal_sinr,
    output_sinr,
    reduced_mvdr,
    subarray_sinrs,
)
from .admm import (  # noqa: E402
    AdmmConfig,
    AdmmResult,
    KktReport,
    RhoBelowBoundWarning,
    Termination,
    Variant,
    admm_solve,
    augmented_lagrangian,
    kkt_residuals,
    project_constraint,
    rho_lower_bound,
    soft_threshold,
)
from .selection import (  # noqa: E402
    Geometry,
    SelectionReport,
    count_active,
    enumerate_all,
    fixed_geometry,
    select_support,
    tune_lambda,
)
from .config import ScenarioConfig, load_scenario  # noqa: E402
from .experiments import (  # noqa: E402
    ExperimentKind,
    ExperimentSpec,
    compare_methods,
    load_experiment,
    run_experiment,
)
