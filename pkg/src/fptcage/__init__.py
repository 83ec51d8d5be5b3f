"""First-passage-time distributions between two absorbing boundaries.

The two-boundary density is assembled purely from one-boundary passage
kernels by repeated filtration of wrong trajectories, with
eigenfunction-expansion and Monte Carlo machinery as independent
cross-checks.
"""

from .eigen import (
    SpectrumEntry,
    ee_biased,
    ee_free,
    ee_free_nstep,
    ee_ou_fpt,
    ee_ou_fpt_integral,
    ou_spectrum,
)
from .errors import (
    AccuracyWarning,
    ConvergenceError,
    DomainError,
    FptError,
    NumericError,
)
from .filtration import (
    DensityCurve,
    FiltrationConfig,
    RatioReport,
    TimeGrid,
    auto_order,
    f_n_laplace,
    f_n_time,
    ftwo_laplace,
    ftwo_moving,
    ftwo_moving_pair,
    ftwo_series_time,
    ratio_diagnostic,
    reflected,
    splitting_probability,
)
from .laplace import (
    LaplaceKernel,
    invert_gaver_stehfest,
    invert_talbot,
    sinh_ratio_series,
)
from .mc import FptSample, McConfig, SimulationResult, histogram, simulate
from .processes import (
    LinearTrajectory,
    MovingBoundaries,
    ProcessSpec,
    StaticBoundaries,
    characteristic_time,
    fpt_one_boundary_laplace,
    fpt_one_boundary_time,
    moving_boundary_kernel,
    relaxation_horizon,
    transition_density,
)
from .specfun import SpecfunResult, kummer_1f1, log_gamma, parabolic_cylinder_d, u_pm

__version__ = "0.1.0"

__all__ = [
    "AccuracyWarning",
    "ConvergenceError",
    "DensityCurve",
    "DomainError",
    "FiltrationConfig",
    "FptError",
    "FptSample",
    "LaplaceKernel",
    "LinearTrajectory",
    "McConfig",
    "MovingBoundaries",
    "NumericError",
    "ProcessSpec",
    "RatioReport",
    "SimulationResult",
    "SpecfunResult",
    "SpectrumEntry",
    "StaticBoundaries",
    "TimeGrid",
    "auto_order",
    "characteristic_time",
    "ee_biased",
    "ee_free",
    "ee_free_nstep",
    "ee_ou_fpt",
    "ee_ou_fpt_integral",
    "f_n_laplace",
    "f_n_time",
    "fpt_one_boundary_laplace",
    "fpt_one_boundary_time",
    "ftwo_laplace",
    "ftwo_moving",
    "ftwo_moving_pair",
    "ftwo_series_time",
    "histogram",
    "invert_gaver_stehfest",
    "invert_talbot",
    "kummer_1f1",
    "log_gamma",
    "moving_boundary_kernel",
    "ou_spectrum",
    "parabolic_cylinder_d",
    "ratio_diagnostic",
    "reflected",
    "relaxation_horizon",
    "simulate",
    "sinh_ratio_series",
    "splitting_probability",
    "transition_density",
    "u_pm",
]
