"""Observation adversary: a fixed compromised subset and a signal policy.

Only observations are attacked. The compromised set is drawn once and held
for the whole horizon; every agent outside it has a zero attack signal at
every step. The policy menu runs from benign (constant bias) to the
replay-scaling attack used in the simulation study, to an estimate-aware
policy that pushes each compromised observation as far as possible from
the agent's predicted observation (always saturating the filter gain).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plant import rng_stream

POLICY_KINDS = ("none", "scale_replace", "constant_bias", "random_bounded", "estimate_aware")


class AttackError(ValueError):
    pass


@dataclass(frozen=True)
class AttackPolicy:
    """Total map (agent, t, x, v_i, C_i, prediction) -> attack signal.

    kind            parameter   signal a_i(t)
    none            -           0
    scale_replace   kappa       kappa * (C_i x + v_i), so y_i = (1+kappa)(C_i x + v_i)
    constant_bias   bias        bias
    random_bounded  radius      uniform on [-radius, radius]
    estimate_aware  magnitude   magnitude * sign(C_i x + v_i - C_i A xhat_i(t-1))
    """

    kind: str
    kappa: float = 0.0
    bias: float = 0.0
    radius: float = 0.0
    magnitude: float | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise AttackError(f"unknown attack policy {self.kind!r}; choose from {POLICY_KINDS}")
        if self.kind == "random_bounded" and self.radius < 0:
            raise AttackError("random_bounded radius must be >= 0")


@dataclass(frozen=True)
class AttackScenario:
    """Compromised set, the policy applied to it, and the declared size bound."""

    compromised: frozenset
    policy: AttackPolicy
    s_declared: int

    def __post_init__(self):
        if len(self.compromised) > self.s_declared:
            raise AttackError(
                f"{len(self.compromised)} compromised agents exceed the declared bound "
                f"s = {self.s_declared}"
            )

    def mask(self, n_agents: int) -> np.ndarray:
        m = np.zeros(n_agents, dtype=np.uint8)
        for i in self.compromised:
            if not (1 <= i <= n_agents):
                raise AttackError(f"compromised agent {i} outside 1..{n_agents}")
            m[i - 1] = 1
        return m


def select_compromised(n_agents: int, s: int, seed: int) -> frozenset:
    """Uniformly random s-subset of {1..N}, deterministic per seed."""
    if not (0 <= s <= n_agents):
        raise AttackError(f"cannot compromise {s} of {n_agents} agents")
    rng = rng_stream(seed, 0xA77AC)
    picks = rng.choice(n_agents, size=s, replace=False)
    return frozenset(int(i) + 1 for i in picks)


def attack_signal(
    policy: AttackPolicy,
    agent: int,
    t: int,
    x,
    v_i: float,
    c_row,
    a_mat=None,
    prev_estimate=None,
    rng: np.random.Generator | None = None,
) -> float:
    """Signal for a compromised agent; callers keep normal agents at zero."""
    if policy.kind == "none":
        return 0.0
    if policy.kind == "constant_bias":
        return policy.bias
    if policy.kind == "random_bounded":
        if rng is None:
            raise AttackError("random_bounded needs an RNG substream")
        return float(rng.uniform(-policy.radius, policy.radius))
    clean = float(np.asarray(c_row, dtype=float) @ np.asarray(x, dtype=float)) + v_i
    if policy.kind == "scale_replace":
        return policy.kappa * clean
    # estimate_aware: push the observation away from the predicted one
    if a_mat is None or prev_estimate is None or policy.magnitude is None:
        raise AttackError("estimate_aware needs A, the previous estimate, and a magnitude")
    predicted = float(
        np.asarray(c_row, dtype=float)
        @ (np.asarray(a_mat, dtype=float) @ np.asarray(prev_estimate, dtype=float))
    )
    return policy.magnitude * (1.0 if clean - predicted >= 0 else -1.0)


def estimate_aware_magnitude(policy: AttackPolicy, beta: float) -> float:
    """Resolve the estimate_aware magnitude; defaults to 10*beta.

    The default guarantees the pushed innovation exceeds the saturation
    threshold, exercising the clipping branch of the gain.
    """
    if policy.magnitude is not None:
        return policy.magnitude
    return 10.0 * beta
