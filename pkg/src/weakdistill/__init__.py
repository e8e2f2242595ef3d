"""Entanglement amplification of two-qubit states by repeated local weak measurements."""

__version__ = "0.1.0"

from .entanglement import concurrence, linear_entropy, partial_transpose_B, ppt_check
from .errors import (
    AlreadyMaximal,
    DimensionMismatch,
    InvalidState,
    NotHermitian,
    OrderingViolation,
    RejectionBudgetExceeded,
    WeakDistillError,
    ZeroProbabilityOutcome,
)
from .measurements import (
    GeneralizedMeasurement,
    GeneralizedPartialMeasurement,
    WeakMeasurement,
    apply_ls,
    apply_mixed,
    apply_pure,
    asymptotic_operators,
    generalized_tuning,
)
from .mixed import ChannelSpec, apply_channel, criterion, single_shot, sweep_channel
from .numerics import eigh, positivity_check
from .protocol import analytic_trace, build_schedule, run_trajectories, run_trajectory, total_success_probability
from .sampling import monte_carlo_map, sample_separable
from .states import LSDecomposition, SchmidtState, TwoQubitDensity
from .streams import rng_stream
