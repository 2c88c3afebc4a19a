"""Spectral solver and verification suite for a time-fractional
generalized Kuramoto-Sivashinsky equation with Caputo derivative."""

__version__ = "0.1.0"

from .fracops import (
    FracOrder,
    TimeGrid,
    TimeSeries,
    caputo_derivative,
    gamma_fn,
    rl_integral,
)
from .linsolve import (
    PropagatorTable,
    Trajectory,
    build_propagators,
    caputo_history_forcing,
    solve_linear,
)
from .mlf import (
    MLAccuracyWarning,
    MLParams,
    SectorConfig,
    kernel_antiderivative,
    kernel_e,
    kernel_k,
    mittag_leffler,
    ml_asymptotic,
)
from .picard import (
    CeilingError,
    ConvergenceReport,
    PicardConfig,
    PicardDivergedError,
    WatchdogError,
    convergence_envelope,
    local_step_estimate,
    picard_step,
    solve_nonlinear,
)
from .spectral import (
    Field,
    ModelParams,
    SpectralGrid,
    forward_transform,
    inverse_transform,
    l2_norm2,
    nonlinear_term,
    norm2_pair,
    semi_norm,
    spectral_derivative,
    symbol,
    weighted_sup,
)

__all__ = [name for name in dir() if not name.startswith("_")]
