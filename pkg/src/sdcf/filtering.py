"""The secure distributed consensus filter (SDCF).

Each time step has two stages. First every agent folds its own observation
into the predicted estimate through a saturating gain: the correction along
C_i^T is capped at beta, so a compromised observation can displace the
local estimate by at most beta no matter how large the injected signal is.
Second the agents run L simultaneous neighbor-averaging rounds with gain
alpha, which contracts the disagreement between estimates.

`sdcf_step` is the per-agent reference implementation. `compact_step`
evaluates the same transition in one stacked expression built from
Kronecker products and block-diagonal gain/observation matrices; it exists
purely as an independent oracle for equivalence testing (it materializes
O(N^2 n^2) matrices, so it is for small instances only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphTopology, laplacian, spectral
from .plant import PlantModel


class FilterError(ValueError):
    pass


@dataclass(frozen=True)
class FilterConfig:
    """Saturation threshold beta, consensus rounds per step L, gain alpha.

    alpha = None resolves to the optimal gain 2/(lambda2 + lambda_max) of
    the communication graph; an explicit value overrides it (used for gain
    sweeps and for test graphs whose spectrum is degenerate).
    """

    beta: float
    L: int
    alpha: float | None = None

    def __post_init__(self):
        if self.beta <= 0:
            raise FilterError("saturation threshold beta must be > 0")
        if self.L < 1:
            raise FilterError("at least one consensus round per step is required")

    def resolve_alpha(self, g: GraphTopology) -> float:
        if self.alpha is not None:
            return float(self.alpha)
        return spectral(g).alpha_star


@dataclass(frozen=True)
class FilterState:
    """Per-agent estimates stacked as rows; t is the time index."""

    estimates: np.ndarray  # (N, n)
    t: int = 0

    def __post_init__(self):
        e = np.asarray(self.estimates, dtype=float)
        if e.ndim != 2:
            raise FilterError("estimates must be an (N, n) array")
        if not np.all(np.isfinite(e)):
            raise FilterError("estimates must be finite")
        object.__setattr__(self, "estimates", e)


def saturation_gain(innovation: float, beta: float) -> float:
    """min{1, beta/|innovation|}: 1 below the threshold, clipping above.

    Zero innovation takes the min's first branch, so the gain is 1 and no
    division occurs. The product gain * |innovation| never exceeds beta.
    """
    if beta <= 0:
        raise FilterError("beta must be > 0")
    mag = abs(innovation)
    if mag <= beta:
        return 1.0
    return beta / mag


def local_update(xhat_prev, y: float, c_row, a_mat, beta: float):
    """Observation stage: returns (corrected estimate, gain used)."""
    xhat_prev = np.asarray(xhat_prev, dtype=float)
    c = np.asarray(c_row, dtype=float).reshape(-1)
    a = np.asarray(a_mat, dtype=float)
    if a.shape != (xhat_prev.size, xhat_prev.size) or c.size != xhat_prev.size:
        raise FilterError(
            f"dimension mismatch: A {a.shape}, C_i ({c.size},), estimate ({xhat_prev.size},)"
        )
    predicted = a @ xhat_prev
    innovation = float(y - c @ predicted)
    k = saturation_gain(innovation, beta)
    return predicted + k * innovation * c, k


def consensus_round(estimates, g: GraphTopology, alpha: float):
    """One simultaneous averaging round: all agents read the previous round.

    x_i <- x_i - alpha * sum_{j in N_i} (x_i - x_j), evaluated Jacobi-style
    from a frozen copy so agent order cannot matter.
    """
    est = np.asarray(estimates, dtype=float)
    if est.ndim != 2 or est.shape[0] != g.n_nodes:
        raise FilterError(f"need one estimate row per node, got shape {est.shape}")
    out = est.copy()
    for i in range(1, g.n_nodes + 1):
        nbrs = g.neighbors(i)
        if not nbrs:
            continue
        diff = len(nbrs) * est[i - 1] - est[np.array(nbrs) - 1].sum(axis=0)
        out[i - 1] = est[i - 1] - alpha * diff
    return out


def sdcf_step(
    state: FilterState,
    observations,
    model: PlantModel,
    g: GraphTopology,
    cfg: FilterConfig,
) -> FilterState:
    """One full filter step: per-agent local updates, then L consensus rounds."""
    y = np.asarray(observations, dtype=float).reshape(-1)
    if y.size != model.n_agents or state.estimates.shape != (model.n_agents, model.n):
        raise FilterError("observation vector / estimate block does not match the model")
    if g.n_nodes != model.n_agents:
        raise FilterError("graph size does not match the number of agents")
    alpha = cfg.resolve_alpha(g)
    updated = np.empty_like(state.estimates)
    for i in range(model.n_agents):
        updated[i], _ = local_update(state.estimates[i], y[i], model.C[i], model.A, cfg.beta)
    for _ in range(cfg.L):
        updated = consensus_round(updated, g, alpha)
    return FilterState(estimates=updated, t=state.t + 1)


def stack_estimates(estimates) -> np.ndarray:
    """(N, n) estimate block -> (N*n,) stacked vector."""
    return np.asarray(estimates, dtype=float).reshape(-1)


def unstack_estimates(stacked, n_agents: int) -> np.ndarray:
    v = np.asarray(stacked, dtype=float).reshape(-1)
    return v.reshape(n_agents, v.size // n_agents)


def compact_step(
    xhat_stacked,
    observations,
    model: PlantModel,
    g: GraphTopology,
    cfg: FilterConfig,
) -> np.ndarray:
    """Stacked-form oracle for one filter step.

    Builds W = (I - alpha*(Lap kron I_n))^L, the block-diagonal observation
    map Cbar, and the diagonal gain matrix from the saturating gain of each
    innovation, then evaluates

        W [ (I_N kron A) Xhat + Cbar^T K (Y - Cbar (I_N kron A) Xhat) ].
    """
    big_n, n = model.n_agents, model.n
    x_stacked = np.asarray(xhat_stacked, dtype=float).reshape(-1)
    y = np.asarray(observations, dtype=float).reshape(-1)
    if x_stacked.size != big_n * n or y.size != big_n:
        raise FilterError("stacked estimate / observation size mismatch")
    alpha = cfg.resolve_alpha(g)

    lap = laplacian(g)
    w_mat = np.linalg.matrix_power(
        np.eye(big_n * n) - alpha * np.kron(lap, np.eye(n)), cfg.L
    )
    a_block = np.kron(np.eye(big_n), model.A)
    cbar = np.zeros((big_n, big_n * n))
    for i in range(big_n):
        cbar[i, i * n : (i + 1) * n] = model.C[i]

    predicted = a_block @ x_stacked
    innovations = y - cbar @ predicted
    gains = np.diag([saturation_gain(float(r), cfg.beta) for r in innovations])
    return w_mat @ (predicted + cbar.T @ gains @ innovations)
