"""Optimal control of logical gates on bosonic codes in a transmon-cavity system.

The package builds the dispersive transmon-cavity model, optimizes
band-limited control pulses with exact-gradient GRAPE, propagates the
resulting gates with and without decoherence, and analyzes their errors with
a first-order susceptibility model.
"""

__version__ = "0.1.0"

from .codes import (  # noqa: E402
    BosonicCode,
    CodeName,
    GateKind,
    LogicalGate,
    build_code,
    cardinal_states,
    codespace_projector,
    logical_unitary,
)
from .dynamics import (  # noqa: E402
    ChannelKind,
    DecoherenceChannel,
    Trajectory,
    gate_fidelity_closed,
    gate_fidelity_open,
    propagate_closed,
    propagate_open,
    standard_channels,
)
from .error_model import (  # noqa: E402
    ErrorBoundParams,
    SusceptibilityReport,
    bound_heatmap,
    decoherence_error,
    error_bound,
    ensemble_stats,
    fit_intrinsic_decay,
    gate_susceptibility,
    idle_susceptibility,
    minimize_bound,
    model_residual,
    sigma_z_moment_stats,
    susceptibility_report,
    susceptibility_timecourse,
)
from .grape import (  # noqa: E402
    PRESETS,
    OptimizationProblem,
    OptimizedGate,
    cost_and_gradient,
    make_problem,
    optimize,
    random_restarts,
)
from .hilbert import SpaceDescriptor, TruncationError, make_space, mhz_to_angular  # noqa: E402
from .metrics import entanglement_entropy, state_fidelity, wigner_grid  # noqa: E402
from .pulse import PulseParams, Waveform, synthesize  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
