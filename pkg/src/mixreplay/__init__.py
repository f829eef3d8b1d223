"""Deterministic experience replay with neighborhood interpolation.

A ring buffer plus a family of replay strategies (uniform, prioritized,
and several interpolating variants built on convex mixing of nearest
neighbors), a small twin-critic actor-critic learner with hand-verified
gradients, two analytic environments, and tooling to measure how far
interpolated transitions drift from true dynamics.
"""
from ._kernels import BACKEND
from .buffer import RingBuffer
from .config import RunConfig, apply_settings, load_config, parse_config_text
from .core import SpaceSpec, Transition, decode, encode
from .envs import LinearEnv, PendulumEnv, swing_up_action, wrap_angle
from .errors import (
    EmptyBufferError,
    InsufficientPopulationError,
    InvalidConfigError,
    InvalidInputError,
    ReplayError,
    UninitializedMomentsError,
)
from .harness import (
    RunResult,
    evaluate,
    grid_to_csv,
    make_env,
    run_experiment,
    run_grid,
    smooth,
)
from .interpolation import (
    InterpolationOutcome,
    MixupParams,
    local_mixup,
    mixup,
    mixup_batch,
    sample_lambda,
)
from .moments import RunningMoments
from .neighbors import eligible_count, knn, knn_batch, knn_of_slot
from .nets import DenseNet, polyak_update
from .residuals import (
    ResidualReport,
    flat_residual,
    reports_to_csv,
    residual_report,
)
from .strategies import (
    STRATEGY_KINDS,
    ReplayEngine,
    StrategyConfig,
    TrainingBatch,
)
from .sumtree import SumTree
from .td3 import TD3, TD3Config

__version__ = "1.0.0"

__all__ = [
    "BACKEND",
    "DenseNet",
    "EmptyBufferError",
    "InsufficientPopulationError",
    "InterpolationOutcome",
    "InvalidConfigError",
    "InvalidInputError",
    "LinearEnv",
    "MixupParams",
    "PendulumEnv",
    "ReplayEngine",
    "ReplayError",
    "ResidualReport",
    "RingBuffer",
    "RunConfig",
    "RunResult",
    "RunningMoments",
    "STRATEGY_KINDS",
    "SpaceSpec",
    "StrategyConfig",
    "SumTree",
    "TD3",
    "TD3Config",
    "TrainingBatch",
    "Transition",
    "UninitializedMomentsError",
    "apply_settings",
    "decode",
    "eligible_count",
    "encode",
    "evaluate",
    "flat_residual",
    "grid_to_csv",
    "knn",
    "knn_batch",
    "knn_of_slot",
    "load_config",
    "local_mixup",
    "make_env",
    "mixup",
    "mixup_batch",
    "parse_config_text",
    "polyak_update",
    "reports_to_csv",
    "residual_report",
    "run_experiment",
    "run_grid",
    "sample_lambda",
    "smooth",
    "swing_up_action",
    "wrap_angle",
    "__version__",
]
