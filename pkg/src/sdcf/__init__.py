"""Secure distributed consensus filtering lab.

Simulates a two-stage distributed filter (saturated innovation update plus
repeated neighbor averaging) for unstable linear plants observed by a
sensor network in which an adversary arbitrarily rewrites the observations
of a fixed subset of agents, and mechanizes the offline analysis that says
when the estimation error stays bounded.
"""

from .analysis import (
    FeasibilityReport,
    Lambda0Result,
    StabilityConstants,
    asymptotic_error_bound,
    attack_tolerance_feasible,
    average_error_condition,
    build_feasibility_report,
    disagreement_envelope,
    disagreement_envelope_limit,
    disagreement_envelope_sup,
    feasibility_grid_search,
    growth_condition,
    lambda0,
    observability_relations,
    one_step_collectively_observable,
    one_step_s_sparse_observable,
    s_sparse_observable,
    stability_constants,
)
from .attack import AttackPolicy, AttackScenario, attack_signal, select_compromised
from .filtering import (
    FilterConfig,
    FilterState,
    compact_step,
    consensus_round,
    local_update,
    saturation_gain,
    sdcf_step,
)
from .graph import (
    GraphTopology,
    SpectralInfo,
    consensus_contraction_norm,
    contraction_norm_profile,
    gen_random_connected,
    graph_from_edges,
    is_connected,
    laplacian,
    read_edgelist,
    spectral,
    write_edgelist,
)
from .harness import (
    MonteCarloResult,
    ResolvedScenario,
    ScenarioConfig,
    ScenarioError,
    SimulationTrace,
    SweepResult,
    export_csv,
    load_scenario,
    monte_carlo,
    reproduce_figures,
    resolve,
    run_simulation,
    sweep,
)
from .numerics import observability_rank, spectral_norm, sym_eigvals
from .plant import (
    NoiseMode,
    PlantModel,
    PlantTrace,
    normalize_observations,
    observe,
    rng_stream,
    sample_noise,
    step_state,
)

__version__ = "0.1.0"
