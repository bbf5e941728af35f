"""Linear plant, scalar observation channels, and bounded noise sampling.

The plant is x(t+1) = A x(t) + w(t) with agent i observing y_i(t) =
C_i x(t) + v_i(t) + a_i(t). Observation rows are kept at unit 2-norm; a raw
sensor row is normalized and the caller rescales the measurement and the
noise bound by the returned factor.

Two noise models ship: 'componentwise_uniform01' draws each entry i.i.d.
uniform on [0, 1] (the uniform-box model used in the simulation study,
whose 2-norm can exceed a declared bound of 1 in dimension >= 2), and
'ball' draws uniformly from the centered 2-norm ball of a given radius so
the declared bound holds exactly. Both are kept because the declared
(b_w, b_v) are analysis inputs, not properties the sampler must enforce.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import as_matrix, spectral_norm

UNIT_ROW_TOL = 1e-12


class PlantError(ValueError):
    pass


def rng_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent substream keyed by (master_seed, *path).

    Streams are derived through SeedSequence, so a per-agent stream does
    not depend on how many other agents exist or on evaluation order;
    parallel Monte Carlo runs stay reproducible.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, path)]))


@dataclass(frozen=True)
class NoiseMode:
    """Noise sampling model: kind 'componentwise_uniform01' or 'ball'."""

    kind: str
    bound: float = 0.0

    def __post_init__(self):
        if self.kind not in ("componentwise_uniform01", "ball"):
            raise PlantError(f"unknown noise mode {self.kind!r}")
        if self.kind == "ball" and self.bound < 0:
            raise PlantError("ball radius must be >= 0")

    @staticmethod
    def uniform01() -> "NoiseMode":
        return NoiseMode("componentwise_uniform01")

    @staticmethod
    def ball(bound: float) -> "NoiseMode":
        return NoiseMode("ball", bound=float(bound))


def sample_noise(dim: int, mode: NoiseMode, rng: np.random.Generator) -> np.ndarray:
    """One noise vector under the given mode; deterministic per rng state."""
    if dim < 1:
        raise PlantError("noise dimension must be >= 1")
    if mode.kind == "componentwise_uniform01":
        return rng.uniform(0.0, 1.0, dim)
    b = mode.bound
    if b == 0.0:
        return np.zeros(dim)
    # rejection from the cube: acceptance >= 0.5 for dim <= 3, fine here
    while True:
        v = rng.uniform(-b, b, dim)
        if v @ v <= b * b:
            return v


def sample_in_ball(radius: float, dim: int, rng: np.random.Generator) -> np.ndarray:
    return sample_noise(dim, NoiseMode.ball(radius), rng)


def normalize_observations(c_raw):
    """Rescale each row to unit 2-norm; returns (rows, scales).

    The caller divides measurements and the observation-noise bound by the
    same scales. A zero row has no scale and is rejected with the agent id.
    """
    c = as_matrix(c_raw)
    scales = np.linalg.norm(c, axis=1)
    zero = np.nonzero(scales == 0.0)[0]
    if zero.size:
        raise PlantError(f"observation row of agent {zero[0] + 1} is zero and cannot be normalized")
    return c / scales[:, None], scales


@dataclass(frozen=True)
class PlantModel:
    """System matrix, unit observation rows, and declared bounds.

    eta[i] bounds agent i's initial estimation error; eta0 is their max.
    The induced norm of A is exposed as `a`; a >= 1 is the interesting
    (unstable) regime but a < 1 is accepted.
    """

    A: np.ndarray
    C: np.ndarray
    b_w: float
    b_v: float
    eta: np.ndarray
    noise_mode: NoiseMode = field(default_factory=NoiseMode.uniform01)

    def __post_init__(self):
        a = as_matrix(self.A)
        if a.shape[0] != a.shape[1]:
            raise PlantError("system matrix must be square")
        c = as_matrix(self.C)
        if c.shape[1] != a.shape[0]:
            raise PlantError(
                f"observation rows have {c.shape[1]} entries, state dimension is {a.shape[0]}"
            )
        norms = np.linalg.norm(c, axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > UNIT_ROW_TOL)[0]
        if bad.size:
            raise PlantError(
                f"observation row of agent {bad[0] + 1} is not unit norm "
                f"(|C_i| = {norms[bad[0]]:.12g}); normalize_observations first"
            )
        eta = np.asarray(self.eta, dtype=float)
        if eta.ndim == 0:
            eta = np.full(c.shape[0], float(eta))
        if eta.shape != (c.shape[0],):
            raise PlantError("eta must give one bound per agent")
        if self.b_w < 0 or self.b_v < 0 or np.any(eta < 0):
            raise PlantError("noise and initial-error bounds must be >= 0")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "eta", eta)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_agents(self) -> int:
        return self.C.shape[0]

    @property
    def eta0(self) -> float:
        return float(self.eta.max())

    @property
    def a(self) -> float:
        return spectral_norm(self.A)


def step_state(a_mat, x, w) -> np.ndarray:
    """x(t+1) = A x(t) + w(t)."""
    a = as_matrix(a_mat)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (a.shape[1],) or w.shape != (a.shape[0],):
        raise PlantError(f"dimension mismatch: A is {a.shape}, x {x.shape}, w {w.shape}")
    return a @ x + w


def observe(c_row, x, v: float, a_sig: float = 0.0) -> float:
    """y = C_i x + v_i + a_i."""
    c = np.asarray(c_row, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    if c.shape != x.shape:
        raise PlantError(f"dimension mismatch: C_i {c.shape}, x {x.shape}")
    return float(c @ x + v + a_sig)


@dataclass(frozen=True)
class PlantTrace:
    """Recorded state trajectory with the exact noises that produced it.

    states[t] is x(t) for t = 0..T; process_noise[t-1] and obs_noise[t-1]
    belong to the transition into / the observation at time t.
    """

    states: np.ndarray        # (T+1, n)
    process_noise: np.ndarray  # (T, n)
    obs_noise: np.ndarray      # (T, N)


def simulate_trace(model: PlantModel, x0, horizon: int, rng_w, rng_v_list) -> PlantTrace:
    """Roll the plant forward and record everything needed to replay it."""
    n, big_n = model.n, model.n_agents
    x0 = np.asarray(x0, dtype=float)
    states = np.empty((horizon + 1, n))
    w = np.empty((horizon, n))
    v = np.empty((horizon, big_n))
    states[0] = x0
    w_mode = model.noise_mode if model.noise_mode.kind == "componentwise_uniform01" \
        else NoiseMode.ball(model.b_w)
    v_mode = model.noise_mode if model.noise_mode.kind == "componentwise_uniform01" \
        else NoiseMode.ball(model.b_v)
    for t in range(horizon):
        w[t] = sample_noise(n, w_mode, rng_w)
        states[t + 1] = step_state(model.A, states[t], w[t])
    for i in range(big_n):
        col = np.array([sample_noise(1, v_mode, rng_v_list[i])[0] for _ in range(horizon)])
        v[:, i] = col
    return PlantTrace(states=states, process_noise=w, obs_noise=v)


def replay_states(a_mat, x0, process_noise) -> np.ndarray:
    """Recompute the state sequence from x0 and the recorded noises."""
    w = np.asarray(process_noise, dtype=float)
    out = np.empty((w.shape[0] + 1, w.shape[1]))
    out[0] = np.asarray(x0, dtype=float)
    for t in range(w.shape[0]):
        out[t + 1] = step_state(a_mat, out[t], w[t])
    return out
