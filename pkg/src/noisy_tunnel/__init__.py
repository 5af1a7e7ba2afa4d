"""Two-level tunneling system with a telegraph-modulated barrier and
white-noise bias: exact noise-averaged dynamics, coherence measures, the
BLP non-Markovianity measure, and Monte Carlo validation oracles."""

from .dynamics import (
    ModelParams,
    Trajectory,
    build_generator,
    evolve,
    evolve_tag,
    initial_augmented,
    rtn_only_trace_distance,
    static_coherence_closed_form,
)
from .integrators import IntegrationError, expm, integrate_adaptive
from .montecarlo import (
    EnsembleResult,
    RtnRealization,
    bloch_block,
    mc_full_sde,
    mc_rtn_lindblad,
    sample_rtn,
)
from .nonmarkov import (
    BlpResult,
    blp_closed_form,
    blp_measure,
    blp_measure_over_pairs,
    default_horizon,
)
from .states import (
    bloch_to_density,
    canonical_bloch,
    canonical_state,
    density_to_bloch,
    l1_coherence,
    l1_coherence_bloch,
    relative_entropy_coherence,
    relative_entropy_coherence_bloch,
    trace_distance,
    trace_distance_bloch,
)

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "Trajectory",
    "build_generator",
    "evolve",
    "evolve_tag",
    "initial_augmented",
    "static_coherence_closed_form",
    "rtn_only_trace_distance",
    "IntegrationError",
    "expm",
    "integrate_adaptive",
    "EnsembleResult",
    "RtnRealization",
    "bloch_block",
    "mc_full_sde",
    "mc_rtn_lindblad",
    "sample_rtn",
    "BlpResult",
    "blp_closed_form",
    "blp_measure",
    "blp_measure_over_pairs",
    "default_horizon",
    "bloch_to_density",
    "canonical_bloch",
    "canonical_state",
    "density_to_bloch",
    "l1_coherence",
    "l1_coherence_bloch",
    "relative_entropy_coherence",
    "relative_entropy_coherence_bloch",
    "trace_distance",
    "trace_distance_bloch",
    "__version__",
]
