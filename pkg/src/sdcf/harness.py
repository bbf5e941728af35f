"""Scenario-driven simulation runs, Monte Carlo aggregation, CSV export.

A scenario is a TOML file with [plant], [graph], [filter], [attack] and
[sim] sections (see `SCENARIO_SCHEMA` for the field-by-field description
and defaults). Resolving a scenario fixes everything shared across Monte
Carlo runs: the communication graph and its spectrum, the sensor
assignment, the compromised set. Each run then derives its own noise and
initialization substreams from (master_seed, run_index), so runs are
reproducible individually and independent of execution order.

Divergence handling: a run whose worst per-agent error exceeds the
configured threshold is truncated there and flagged; aggregation excludes
flagged runs from means and reports their count separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import kernels
from .analysis import disagreement_envelope
from .attack import (
    AttackError,
    AttackPolicy,
    AttackScenario,
    estimate_aware_magnitude,
    select_compromised,
)
from .filtering import FilterConfig
from .graph import (
    GraphError,
    GraphTopology,
    gen_random_connected,
    graph_from_edges,
    read_edgelist,
    spectral,
)
from .plant import (
    NoiseMode,
    PlantError,
    PlantModel,
    normalize_observations,
    rng_stream,
    sample_in_ball,
)

DEFAULT_DIVERGENCE_THRESHOLD = 1e6

# substream layout under (master_seed, ...)
_NS_SENSOR = 1
_NS_RUN = 2
_S_W = 0
_S_V = 1
_S_INIT = 2
_S_ATTACK = 3

SCENARIO_SCHEMA = """\
[plant]
A = [[...], ...]          # required: square system matrix, row lists
C = [[...], ...]          # explicit unit observation rows (one per node), or:
sensor_dictionary = [[...], ...]   # rows sampled i.i.d. per agent
sensor_seed = 0           # seed for the dictionary assignment
normalize = false         # normalize explicit C rows (scales are discarded)
noise_mode = "componentwise_uniform01"   # or "ball"
b_w = 1.0                 # declared process-noise 2-norm bound
b_v = 1.0                 # declared observation-noise bound
eta = 1.0                 # initial-error bound, scalar or one per agent

[graph]                   # exactly one of the three forms
n_nodes = 100             # generator form, with:
edge_prob = 0.06
seed = 7
# edges = [[1, 2], ...]   # explicit form (n_nodes still required)
# edges_file = "g.txt"    # edge-list file: first line N, then "i j" lines

[filter]
beta = 3.0                # required, saturation threshold
L = 8                     # required, consensus rounds per step
# alpha = 0.1             # optional gain override (default: optimal gain)

[attack]
policy = "none"           # none | scale_replace | constant_bias |
                          # random_bounded | estimate_aware
kappa = 2.0               # scale_replace parameter
bias = 0.0                # constant_bias parameter
radius = 0.0              # random_bounded parameter
# magnitude = 30.0        # estimate_aware parameter (default 10*beta)
s = 0                     # declared bound on the compromised count
# agents = [3, 7]         # explicit compromised set (otherwise s drawn by:)
seed = 0

[sim]
T = 100                   # horizon (unit steps)
runs = 1                  # Monte Carlo repetitions
master_seed = 0
divergence_threshold = 1e6
# x0 = [0.0, 0.0]         # initial state (default: zero vector)
"""


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario file, prior to resolution."""

    plant: dict
    graph: dict
    filter: dict
    attack: dict
    sim: dict
    base_dir: Path


@dataclass(frozen=True)
class ResolvedScenario:
    """Everything shared by every run of a scenario."""

    model: PlantModel
    graph: GraphTopology
    lambda2: float
    lambda_max: float
    gamma: float
    alpha: float
    cfg: FilterConfig
    attack: AttackScenario
    attack_seed: int
    horizon: int
    runs: int
    master_seed: int
    divergence_threshold: float
    x0: np.ndarray

    @property
    def n_agents(self) -> int:
        return self.graph.n_nodes


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ScenarioError(f"missing required key '{key}' in [{where}]")
    return section[key]


def scenario_from_dict(raw: dict, base_dir=".") -> ScenarioConfig:
    for name in ("plant", "graph", "filter"):
        if name not in raw:
            raise ScenarioError(f"missing required section [{name}]")
    unknown = set(raw) - {"plant", "graph", "filter", "attack", "sim"}
    if unknown:
        raise ScenarioError(f"unknown sections: {sorted(unknown)}")
    return ScenarioConfig(
        plant=dict(raw["plant"]),
        graph=dict(raw["graph"]),
        filter=dict(raw["filter"]),
        attack=dict(raw.get("attack", {})),
        sim=dict(raw.get("sim", {})),
        base_dir=Path(base_dir),
    )


def load_scenario(path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(f"scenario file not found: {p}")
    try:
        raw = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"cannot parse {p}: {exc}") from exc
    return scenario_from_dict(raw, base_dir=p.parent)


def _build_graph(spec: dict, base_dir: Path) -> GraphTopology:
    forms = [k for k in ("edges", "edges_file", "edge_prob") if k in spec]
    if len(forms) != 1:
        raise ScenarioError(
            "[graph] needs exactly one of: edges, edges_file, edge_prob (generator)"
        )
    if "edges" in spec:
        return graph_from_edges(int(_require(spec, "n_nodes", "graph")), spec["edges"])
    if "edges_file" in spec:
        return read_edgelist(base_dir / spec["edges_file"])
    return gen_random_connected(
        int(_require(spec, "n_nodes", "graph")),
        float(spec["edge_prob"]),
        int(spec.get("seed", 0)),
    )


def _build_model(spec: dict, n_agents: int) -> PlantModel:
    a_mat = np.asarray(_require(spec, "A", "plant"), dtype=float)
    if "C" in spec and "sensor_dictionary" in spec:
        raise ScenarioError("[plant] takes either C or sensor_dictionary, not both")
    if "C" in spec:
        c = np.asarray(spec["C"], dtype=float)
        if spec.get("normalize", False):
            c, _ = normalize_observations(c)
        if c.shape[0] != n_agents:
            raise ScenarioError(
                f"[plant] C has {c.shape[0]} rows but the graph has {n_agents} nodes"
            )
    elif "sensor_dictionary" in spec:
        rows = np.asarray(spec["sensor_dictionary"], dtype=float)
        rng = rng_stream(int(spec.get("sensor_seed", 0)), _NS_SENSOR)
        c = rows[rng.integers(0, rows.shape[0], n_agents)]
    else:
        raise ScenarioError("[plant] needs C or sensor_dictionary")
    mode = NoiseMode(spec.get("noise_mode", "componentwise_uniform01"))
    eta = spec.get("eta", 1.0)
    try:
        return PlantModel(
            A=a_mat,
            C=c,
            b_w=float(_require(spec, "b_w", "plant")),
            b_v=float(_require(spec, "b_v", "plant")),
            eta=np.asarray(eta, dtype=float),
            noise_mode=mode,
        )
    except PlantError as exc:
        raise ScenarioError(f"[plant] {exc}") from exc


def _build_attack(spec: dict, n_agents: int, beta: float) -> AttackScenario:
    kind = spec.get("policy", "none")
    try:
        policy = AttackPolicy(
            kind=kind,
            kappa=float(spec.get("kappa", 0.0)),
            bias=float(spec.get("bias", 0.0)),
            radius=float(spec.get("radius", 0.0)),
            magnitude=float(spec["magnitude"]) if "magnitude" in spec else None,
        )
        if kind == "estimate_aware":
            policy = replace(policy, magnitude=estimate_aware_magnitude(policy, beta))
        if "agents" in spec:
            compromised = frozenset(int(i) for i in spec["agents"])
            s = int(spec.get("s", len(compromised)))
        else:
            s = int(spec.get("s", 0))
            compromised = select_compromised(n_agents, s, int(spec.get("seed", 0)))
        return AttackScenario(compromised=compromised, policy=policy, s_declared=s)
    except AttackError as exc:
        raise ScenarioError(f"[attack] {exc}") from exc


def resolve(config: ScenarioConfig) -> ResolvedScenario:
    """Fix the graph, sensors, spectrum and compromised set of a scenario."""
    try:
        g = _build_graph(config.graph, config.base_dir)
    except GraphError as exc:
        raise ScenarioError(f"[graph] {exc}") from exc
    model = _build_model(config.plant, g.n_nodes)

    fspec = config.filter
    cfg = FilterConfig(
        beta=float(_require(fspec, "beta", "filter")),
        L=int(_require(fspec, "L", "filter")),
        alpha=float(fspec["alpha"]) if "alpha" in fspec else None,
    )
    spec_info = spectral(g)
    alpha = cfg.alpha if cfg.alpha is not None else spec_info.alpha_star

    atk = _build_attack(config.attack, g.n_nodes, cfg.beta)

    sim = config.sim
    horizon = int(sim.get("T", 100))
    runs = int(sim.get("runs", 1))
    if horizon < 1 or runs < 1:
        raise ScenarioError("[sim] needs T >= 1 and runs >= 1")
    x0 = np.asarray(sim.get("x0", np.zeros(model.n)), dtype=float)
    if x0.shape != (model.n,):
        raise ScenarioError(f"[sim] x0 must have {model.n} entries")
    return ResolvedScenario(
        model=model,
        graph=g,
        lambda2=spec_info.lambda2,
        lambda_max=spec_info.lambda_max,
        gamma=spec_info.gamma,
        alpha=alpha,
        cfg=cfg,
        attack=atk,
        attack_seed=int(config.attack.get("seed", 0)),
        horizon=horizon,
        runs=runs,
        master_seed=int(sim.get("master_seed", 0)),
        divergence_threshold=float(sim.get("divergence_threshold", DEFAULT_DIVERGENCE_THRESHOLD)),
        x0=x0,
    )


def load_resolved(path) -> ResolvedScenario:
    return resolve(load_scenario(path))


# ---------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class SimulationTrace:
    """Per-run record: states, estimate metrics, and the attack ledger.

    Arrays are time-major; rows past `steps_completed` are NaN when the run
    was truncated by the divergence flag.
    """

    run_index: int
    states: np.ndarray          # (T+1, n)
    avg_estimates: np.ndarray   # (T+1, n)
    err_norms: np.ndarray       # (T+1, N)
    disagreement: np.ndarray    # (T+1, N)
    gains: np.ndarray           # (T, N)
    innovations: np.ndarray     # (T, N)
    attack_signals: np.ndarray  # (T, N)
    compromised: tuple
    diverged: bool
    steps_completed: int

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n_agents(self) -> int:
        return self.err_norms.shape[1]

    @property
    def max_err(self) -> np.ndarray:
        return self.err_norms.max(axis=1)

    @property
    def max_disagreement(self) -> np.ndarray:
        return self.disagreement.max(axis=1)


def _presample_noise(rs: ResolvedScenario, run_index: int):
    model, horizon = rs.model, rs.horizon
    n, big_n = model.n, model.n_agents
    w_rng = rng_stream(rs.master_seed, _NS_RUN, run_index, _S_W)
    if model.noise_mode.kind == "componentwise_uniform01":
        w = w_rng.uniform(0.0, 1.0, (horizon, n))
    else:
        w = np.vstack([sample_in_ball(model.b_w, n, w_rng) for _ in range(horizon)])
    v = np.empty((horizon, big_n))
    for i in range(big_n):
        v_rng = rng_stream(rs.master_seed, _NS_RUN, run_index, _S_V, i)
        if model.noise_mode.kind == "componentwise_uniform01":
            v[:, i] = v_rng.uniform(0.0, 1.0, horizon)
        elif model.b_v == 0.0:
            v[:, i] = 0.0
        else:
            v[:, i] = v_rng.uniform(-model.b_v, model.b_v, horizon)
    return w, v


def _attack_arrays(rs: ResolvedScenario, run_index: int, clean_obs: np.ndarray):
    """(mode, values, magnitude) for the kernel; values are pre-masked zeros
    for normal agents."""
    horizon, big_n = clean_obs.shape
    policy = rs.attack.policy
    mask = rs.attack.mask(big_n).astype(bool)
    values = np.zeros((horizon, big_n))
    if policy.kind == "estimate_aware":
        return kernels.ATTACK_ESTIMATE_AWARE, values, float(policy.magnitude)
    if policy.kind == "scale_replace":
        values[:, mask] = policy.kappa * clean_obs[:, mask]
    elif policy.kind == "constant_bias":
        values[:, mask] = policy.bias
    elif policy.kind == "random_bounded":
        for i in np.nonzero(mask)[0]:
            a_rng = rng_stream(rs.master_seed, _NS_RUN, run_index, _S_ATTACK, int(i))
            values[:, i] = a_rng.uniform(-policy.radius, policy.radius, horizon)
    return kernels.ATTACK_PRECOMPUTED, values, 0.0


def run_simulation(rs: ResolvedScenario, run_index: int = 0) -> SimulationTrace:
    """One deterministic realization: plant rollout, attack, filtering."""
    model = rs.model
    n, big_n, horizon = model.n, model.n_agents, rs.horizon

    w, v = _presample_noise(rs, run_index)
    x_traj = np.empty((horizon + 1, n))
    x_traj[0] = rs.x0
    for t in range(horizon):
        x_traj[t + 1] = model.A @ x_traj[t] + w[t]
    clean_obs = x_traj[1:] @ model.C.T + v

    xhat0 = np.empty((big_n, n))
    for i in range(big_n):
        init_rng = rng_stream(rs.master_seed, _NS_RUN, run_index, _S_INIT, i)
        xhat0[i] = rs.x0 + sample_in_ball(model.eta[i], n, init_rng)

    mode, values, magnitude = _attack_arrays(rs, run_index, clean_obs)
    indptr, indices = rs.graph.neighbor_csr()
    out = kernels.run_filter(
        model.A,
        model.C,
        indptr,
        indices,
        rs.alpha,
        rs.cfg.beta,
        rs.cfg.L,
        xhat0,
        x_traj,
        clean_obs,
        rs.attack.mask(big_n),
        mode,
        values,
        magnitude,
        rs.divergence_threshold,
    )
    return SimulationTrace(
        run_index=run_index,
        states=x_traj,
        avg_estimates=out["avg_est"],
        err_norms=out["err_norms"],
        disagreement=out["disagreement"],
        gains=out["gains"],
        innovations=out["innovations"],
        attack_signals=out["signals"],
        compromised=tuple(sorted(rs.attack.compromised)),
        diverged=bool(out["diverged"]),
        steps_completed=int(out["steps_completed"]),
    )


@dataclass(frozen=True)
class MonteCarloResult:
    """Aggregated mean (over non-divergent runs) of the per-step worst error."""

    mean_max_err: np.ndarray    # (T+1,), NaN when every run diverged
    runs: int
    divergent_runs: tuple
    traces: tuple | None = None

    @property
    def n_divergent(self) -> int:
        return len(self.divergent_runs)

    @property
    def all_divergent(self) -> bool:
        return self.n_divergent == self.runs


def monte_carlo(rs: ResolvedScenario, keep_traces: bool = False) -> MonteCarloResult:
    """Sequential, order-deterministic aggregation over rs.runs realizations."""
    total = np.zeros(rs.horizon + 1)
    kept = 0
    divergent = []
    traces = [] if keep_traces else None
    for r in range(rs.runs):
        tr = run_simulation(rs, r)
        if traces is not None:
            traces.append(tr)
        if tr.diverged:
            divergent.append(r)
        else:
            total += tr.max_err
            kept += 1
    mean = total / kept if kept else np.full(rs.horizon + 1, np.nan)
    return MonteCarloResult(
        mean_max_err=mean,
        runs=rs.runs,
        divergent_runs=tuple(divergent),
        traces=tuple(traces) if traces is not None else None,
    )


SWEEP_PARAMETERS = ("L", "beta", "compromised_count")


def apply_parameter(rs: ResolvedScenario, parameter: str, value) -> ResolvedScenario:
    """Rebuild only what a swept parameter touches; the graph, sensors and
    noise substreams stay shared across values (common random numbers)."""
    if parameter == "L":
        return replace(rs, cfg=replace(rs.cfg, L=int(value)))
    if parameter == "beta":
        atk = rs.attack
        if atk.policy.kind == "estimate_aware":
            pol = replace(atk.policy, magnitude=10.0 * float(value))
            atk = replace(atk, policy=pol)
        return replace(rs, cfg=replace(rs.cfg, beta=float(value)), attack=atk)
    if parameter == "compromised_count":
        compromised = select_compromised(rs.n_agents, int(value), rs.attack_seed)
        atk = replace(rs.attack, compromised=compromised, s_declared=int(value))
        return replace(rs, attack=atk)
    raise ScenarioError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: tuple
    results: tuple  # one MonteCarloResult per value


def sweep(rs: ResolvedScenario, parameter: str, values) -> SweepResult:
    results = []
    for value in values:
        results.append(monte_carlo(apply_parameter(rs, parameter, value)))
    return SweepResult(parameter=parameter, values=tuple(values), results=tuple(results))


def envelope_margin(trace: SimulationTrace, rs: ResolvedScenario) -> float:
    """max over recorded steps of (worst disagreement - envelope); <= 0 means
    the disagreement envelope held for this run. Needs a*gamma^L < 1."""
    worst = -math.inf
    md = trace.max_disagreement
    for t in range(1, trace.steps_completed + 1):
        p = disagreement_envelope(
            rs.cfg.L, t, rs.model.a, rs.gamma, rs.n_agents, rs.model.eta0, rs.cfg.beta
        )
        worst = max(worst, float(md[t]) - p)
    return worst


# ---------------------------------------------------------------------------
# CSV export


def _fmt(x) -> str:
    return repr(float(x))


def export_trace_csv(trace: SimulationTrace, path) -> Path:
    """Long format, one row per (t, agent) for t = 1..steps_completed."""
    p = Path(path)
    lines = ["t,agent,err_norm,disagreement,gain,innovation,attack_signal"]
    for t in range(1, trace.steps_completed + 1):
        for i in range(trace.n_agents):
            lines.append(
                f"{t},{i + 1},{_fmt(trace.err_norms[t, i])},{_fmt(trace.disagreement[t, i])},"
                f"{_fmt(trace.gains[t - 1, i])},{_fmt(trace.innovations[t - 1, i])},"
                f"{_fmt(trace.attack_signals[t - 1, i])}"
            )
    _write_lines(p, lines)
    return p


def export_tracking_csv(trace: SimulationTrace, path) -> Path:
    """Wide format for state-vs-average-estimate plots: one row per step."""
    p = Path(path)
    n = trace.states.shape[1]
    header = (
        "t,"
        + ",".join(f"x{d + 1}" for d in range(n))
        + ","
        + ",".join(f"xhat_avg{d + 1}" for d in range(n))
    )
    lines = [header]
    for t in range(trace.steps_completed + 1):
        row = [str(t)]
        row += [_fmt(trace.states[t, d]) for d in range(n)]
        row += [_fmt(trace.avg_estimates[t, d]) for d in range(n)]
        lines.append(",".join(row))
    _write_lines(p, lines)
    return p


def export_aggregate_csv(mc: MonteCarloResult, path) -> Path:
    p = Path(path)
    lines = ["t,mean_max_err,divergent_runs"]
    for t, value in enumerate(mc.mean_max_err):
        lines.append(f"{t},{_fmt(value)},{mc.n_divergent}")
    _write_lines(p, lines)
    return p


def export_sweep_csv(result: SweepResult, path) -> Path:
    p = Path(path)
    lines = ["param,t,mean_max_err,divergent_runs"]
    for value, mc in zip(result.values, result.results):
        for t, mean in enumerate(mc.mean_max_err):
            lines.append(f"{value},{t},{_fmt(mean)},{mc.n_divergent}")
    _write_lines(p, lines)
    return p


def export_csv(obj, path) -> Path:
    """Schema dispatch on the object type."""
    if isinstance(obj, SimulationTrace):
        return export_trace_csv(obj, path)
    if isinstance(obj, SweepResult):
        return export_sweep_csv(obj, path)
    if isinstance(obj, MonteCarloResult):
        return export_aggregate_csv(obj, path)
    raise TypeError(f"no CSV schema for {type(obj).__name__}")


def _write_lines(p: Path, lines) -> None:
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {p}: {exc}") from exc


# ---------------------------------------------------------------------------
# built-in scenarios


def builtin_scenario_path(name: str) -> Path:
    """Path of a scenario file shipped with the package."""
    from importlib.resources import files

    p = files("sdcf.scenarios").joinpath(f"{name}.toml")
    if not p.is_file():
        raise ScenarioError(f"no built-in scenario named {name!r}")
    return Path(str(p))


def reproduce_figures(out_dir, runs: int | None = None, seed: int | None = None) -> dict:
    """Run the three bundled experiments and emit their CSVs.

    fig2_tracking.csv   one realization, state vs average estimate per step
    fig3_Lsweep.csv     consensus-depth sweep L in {2, 4, 8}
    fig4_attacksweep.csv  compromised-count sweep {0, 25, 50, 66}
    `runs` and `seed` override the bundled Monte Carlo settings.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def _resolved(name):
        rs = resolve(load_scenario(builtin_scenario_path(name)))
        if runs is not None:
            rs = replace(rs, runs=runs)
        if seed is not None:
            rs = replace(rs, master_seed=seed)
        return rs

    paths = {}
    tracking = run_simulation(_resolved("fig2_tracking"), 0)
    paths["fig2"] = export_tracking_csv(tracking, out / "fig2_tracking.csv")

    rs3 = _resolved("fig3_consensus_sweep")
    paths["fig3"] = export_sweep_csv(sweep(rs3, "L", [2, 4, 8]), out / "fig3_Lsweep.csv")

    rs4 = _resolved("fig4_attack_sweep")
    paths["fig4"] = export_sweep_csv(
        sweep(rs4, "compromised_count", [0, 25, 50, 66]), out / "fig4_attacksweep.csv"
    )
    return paths
