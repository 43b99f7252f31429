"""Synchronization of ring-coupled systems driven by two-sided Levy noise."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AlignmentError, ConfigError, DivergenceError, DomainError, EmptyGridError, LevySyncError,
    NumericError, OutOfSupportError, ParameterError, ShapeError, StepSizeError,
)
from .levy_process import (  # noqa: E402
    LevyPath, LevySpec, TimeGrid, build_noise_paths, build_two_sided_path, exp_weighted_integral,
    sample_increments, shift_path, strong_law_ratio,
)
from .ou_stationary import OUTrajectory, langevin_residual, stationary_convolution  # noqa: E402
from .drifts import DriftSpec, cubic_drift, estimate_dissipativity, linear_drift, make_drift, sine_drift  # noqa: E402
from .coupled_system import (  # noqa: E402
    SystemConfig, Trajectory, integrate_coupled_rode, integrate_coupled_sode, rode_rhs, transform_consistency,
)
from .bounds import (  # noqa: E402
    CouplingMatrixSpec, EigenReport, admissible_beta_range, build_coupling_matrix, closed_form_eigenvalues,
    gronwall_bound_check,
)
from .attractor import AttractorEstimate, absorbing_radius, pullback_fixed_point, stationary_orbit_residual  # noqa: E402
from .averaged import AveragedConfig, averaged_pullback_point, integrate_averaged_rode  # noqa: E402
from .analysis import (  # noqa: E402
    SyncReport, component_spread, lambda_sweep, pairwise_sync_curve, skorohod_distance_j1, sync_constants,
)
