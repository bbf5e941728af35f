"""Offline analysis: observability margins, stability constants, bounds.

Everything here is global-knowledge, design-time machinery. The central
quantity is lambda0: the worst-case smallest eigenvalue of the observation
Gram sum after deleting any s agents. lambda0 > s is exactly the condition
under which the filter's boundedness requirement admits parameters
(beta, eta0, L); the grid search below corroborates that equivalence by
bounded enumeration rather than proving it.

The constants chain is evaluated in dependency order

    gamma -> p0_star -> k_star -> (mu0, q0) -> theta0 -> m0,

and every domain violation (e.g. a * gamma^L >= 1, which makes the
disagreement series diverge) is recorded in a diagnostics map instead of
surfacing as a silent NaN.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import DEFAULT_RANK_TOL, as_matrix, observability_rank, sym_eigvals
from .plant import PlantModel, rng_stream

ENUMERATION_LIMIT = 1_000_000


class AnalysisError(ValueError):
    pass


class AnalysisDomainError(AnalysisError):
    """A formula was evaluated outside its domain of validity."""


class EnumerationTooLargeError(AnalysisError):
    pass


# ---------------------------------------------------------------------------
# observability margins


@dataclass(frozen=True)
class Lambda0Result:
    """Worst-case remaining-Gram smallest eigenvalue after deleting s agents.

    `exact` distinguishes full enumeration from random-subset sampling; a
    sampled value is only an upper estimate (the true minimum can be lower)
    and must never back a feasibility verdict.
    """

    value: float
    s: int
    exact: bool
    subsets_evaluated: int


def _min_eig(gram: np.ndarray) -> float:
    return float(sym_eigvals(gram)[0])


def _min_eig_psd(gram: np.ndarray) -> float:
    # Gram sums are positive semidefinite; negative values are roundoff
    return max(_min_eig(gram), 0.0)


def lambda0(
    c_rows,
    s: int,
    mode: str = "exact",
    samples: int = 10_000,
    seed: int = 0,
) -> Lambda0Result:
    """min over removal sets of lambda_min(sum of remaining C_i^T C_i).

    mode='exact' enumerates every s-subset (allowed up to C(N, s) <= 1e6);
    mode='sampled' takes the min over `samples` random subsets instead.
    """
    c = as_matrix(c_rows)
    big_n = c.shape[0]
    if not (0 <= s < big_n):
        raise AnalysisError(f"need 0 <= s < N, got s={s}, N={big_n}")
    gram_total = c.T @ c
    if s == 0:
        return Lambda0Result(value=_min_eig_psd(gram_total), s=0, exact=True, subsets_evaluated=1)
    n_subsets = math.comb(big_n, s)
    if mode == "exact" or (mode == "sampled" and samples >= n_subsets):
        if mode == "exact" and n_subsets > ENUMERATION_LIMIT:
            raise EnumerationTooLargeError(
                f"C({big_n},{s}) = {n_subsets} removal sets exceed {ENUMERATION_LIMIT}; "
                "use mode='sampled'"
            )
        best = math.inf
        for removed in itertools.combinations(range(big_n), s):
            sub = c[list(removed)]
            best = min(best, _min_eig_psd(gram_total - sub.T @ sub))
        return Lambda0Result(value=best, s=s, exact=True, subsets_evaluated=n_subsets)
    if mode != "sampled":
        raise AnalysisError(f"unknown lambda0 mode {mode!r}")
    rng = rng_stream(seed, 0x1A3B)
    best = math.inf
    for _ in range(samples):
        removed = rng.choice(big_n, size=s, replace=False)
        sub = c[removed]
        best = min(best, _min_eig_psd(gram_total - sub.T @ sub))
    return Lambda0Result(value=best, s=s, exact=False, subsets_evaluated=samples)


def one_step_collectively_observable(c_rows, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Whether the full Gram sum of observation rows is positive definite."""
    c = as_matrix(c_rows)
    return _min_eig(c.T @ c) > tol


def one_step_s_sparse_observable(c_rows, s: int, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Positive-definite remaining Gram sum for every s-agent deletion."""
    c = as_matrix(c_rows)
    big_n = c.shape[0]
    if s < 0:
        raise AnalysisError("s must be >= 0")
    if s >= big_n:
        return False
    n_subsets = math.comb(big_n, s)
    if n_subsets > ENUMERATION_LIMIT:
        raise EnumerationTooLargeError(
            f"C({big_n},{s}) = {n_subsets} removal sets exceed {ENUMERATION_LIMIT}"
        )
    gram_total = c.T @ c
    for removed in itertools.combinations(range(big_n), s):
        sub = c[list(removed)]
        if _min_eig(gram_total - sub.T @ sub) <= tol:
            return False
    return True


def s_sparse_observable(a_mat, c_rows, s: int, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Observability of (A, remaining rows) for every s-agent deletion."""
    a = as_matrix(a_mat)
    c = as_matrix(c_rows)
    big_n, n = c.shape[0], a.shape[0]
    if s < 0:
        raise AnalysisError("s must be >= 0")
    if s >= big_n:
        return False
    n_subsets = math.comb(big_n, s)
    if n_subsets > ENUMERATION_LIMIT:
        raise EnumerationTooLargeError(
            f"C({big_n},{s}) = {n_subsets} removal sets exceed {ENUMERATION_LIMIT}"
        )
    for removed in itertools.combinations(range(big_n), s):
        keep = [i for i in range(big_n) if i not in removed]
        if observability_rank(a, c[keep], tol=tol) < n:
            return False
    return True


# ---------------------------------------------------------------------------
# stability constants and conditions


@dataclass(frozen=True)
class StabilityConstants:
    """Derived constants for the boundedness analysis of the filter.

    p0_star bounds the worst disagreement between any estimate and the
    network average; k_star is the worst-case saturating gain a normal
    agent can be driven to; mu0 is the contraction rate of the average
    error; q0 collects the per-step forcing (noise plus consensus leakage);
    theta0 and m0 combine them into the margin that the plant's induced
    norm `a` must stay below. Undefined entries are None with the reason
    recorded in `diagnostics`.
    """

    a: float
    n_agents: int
    L: int
    beta: float
    eta0: float
    b_w: float
    b_v: float
    s: int
    attacked: int
    lambda0_value: float
    gamma: float
    p0_star: float | None = None
    k_star: float | None = None
    mu0: float | None = None
    q0: float | None = None
    theta0: float | None = None
    m0: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def gamma_pow_l(self) -> float:
        return self.gamma ** self.L

    @property
    def gamma_neg_pow_l(self) -> float:
        """gamma^-L, with the complete-graph limit gamma=0 mapped to +inf."""
        if self.gamma == 0.0:
            return math.inf
        return self.gamma ** (-self.L)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def stability_constants(
    a: float,
    n_agents: int,
    L: int,
    beta: float,
    eta0: float,
    b_w: float,
    b_v: float,
    s: int,
    lambda0_value: float,
    gamma: float,
    attacked: int | None = None,
) -> StabilityConstants:
    """Evaluate the constants chain, recording domain violations.

    `attacked` is the compromised-set size used where the formulas want the
    actual |A|; it defaults to the declared bound s (the adverse case).
    """
    if n_agents < 1 or L < 1:
        raise AnalysisError("need n_agents >= 1 and L >= 1")
    if beta <= 0 or eta0 <= 0:
        raise AnalysisError("beta and eta0 must be > 0")
    if not (0.0 <= gamma < 1.0):
        raise AnalysisError(f"gamma must be in [0, 1), got {gamma}")
    if b_w < 0 or b_v < 0 or lambda0_value < 0 or a <= 0:
        raise AnalysisError("bounds must be >= 0 and a > 0")
    if attacked is None:
        attacked = s
    if not (0 <= attacked <= n_agents):
        raise AnalysisError("attacked count must be in [0, N]")

    diag: dict = {}
    sqrt_n = math.sqrt(n_agents)
    g_l = gamma ** L
    p0 = k_star = mu0 = q0 = theta0 = m0 = None

    if a * g_l >= 1.0:
        diag["p0_star"] = f"undefined: a*gamma^L = {a * g_l:.6g} >= 1"
    else:
        p0 = a * g_l * sqrt_n * eta0 + sqrt_n * beta * g_l / (1.0 - a * g_l)
        k_star = min(1.0, beta / (a * (p0 + eta0) + b_w + b_v))
        mu0 = a * (1.0 - k_star * lambda0_value / n_agents)
        q0 = (1.0 - attacked / n_agents) * (b_w + b_v + a * p0) + b_w

        sat_frac = beta * attacked / (n_agents * eta0)
        if sat_frac >= 1.0:
            diag["theta0"] = f"undefined: beta*|A|/(N*eta0) = {sat_frac:.6g} >= 1"
        else:
            theta0 = 1.0 - (q0 / eta0) / (1.0 - sat_frac)
            denom = 1.0 - k_star * lambda0_value / n_agents
            if denom <= 0.0:
                diag["m0"] = f"undefined: 1 - k*lambda0/N = {denom:.6g} <= 0"
            else:
                m0 = theta0 * (1.0 - sat_frac) / denom

    return StabilityConstants(
        a=a, n_agents=n_agents, L=L, beta=beta, eta0=eta0, b_w=b_w, b_v=b_v,
        s=s, attacked=attacked, lambda0_value=lambda0_value, gamma=gamma,
        p0_star=p0, k_star=k_star, mu0=mu0, q0=q0, theta0=theta0, m0=m0,
        diagnostics=diag,
    )


@dataclass(frozen=True)
class GrowthConditionResult:
    """Outcome of the boundedness condition 1 <= a < min{m0, gamma^-L}."""

    holds: bool
    a: float
    m0: float | None
    gamma_neg_pow_l: float
    reasons: tuple = ()


def growth_condition(tc: StabilityConstants) -> GrowthConditionResult:
    """Check that the plant's induced norm stays inside the filter's margin."""
    reasons = []
    if tc.a < 1.0:
        reasons.append(f"a = {tc.a:.6g} is below 1 (analysis targets the unstable regime)")
    if tc.m0 is None:
        key = "m0" if "m0" in tc.diagnostics else "theta0" if "theta0" in tc.diagnostics else "p0_star"
        reasons.append(f"m0 undefined ({tc.diagnostics.get(key, 'domain violation')})")
    elif not tc.a < tc.m0:
        reasons.append(f"a = {tc.a:.6g} is not below m0 = {tc.m0:.6g}")
    if not tc.a < tc.gamma_neg_pow_l:
        reasons.append(
            f"a = {tc.a:.6g} is not below gamma^-L = {tc.gamma_neg_pow_l:.6g}"
        )
    return GrowthConditionResult(
        holds=not reasons,
        a=tc.a,
        m0=tc.m0,
        gamma_neg_pow_l=tc.gamma_neg_pow_l,
        reasons=tuple(reasons),
    )


def asymptotic_error_bound(tc: StabilityConstants) -> float:
    """Steady-state per-agent error-norm bound.

    (N*q0 + |A|*beta) / (N*(1 - mu0)) + sqrt(N)*beta*gamma^L / (1 - a*gamma^L),
    defined only when mu0 < 1 and a*gamma^L < 1.
    """
    if tc.p0_star is None or tc.mu0 is None or tc.q0 is None:
        raise AnalysisDomainError(
            f"bound undefined: {tc.diagnostics.get('p0_star', 'constants undefined')}"
        )
    if tc.mu0 >= 1.0:
        raise AnalysisDomainError(f"bound undefined: mu0 = {tc.mu0:.6g} >= 1")
    n, g_l = tc.n_agents, tc.gamma_pow_l
    tail = math.sqrt(n) * tc.beta * g_l / (1.0 - tc.a * g_l)
    return (n * tc.q0 + tc.attacked * tc.beta) / (n * (1.0 - tc.mu0)) + tail


def average_error_condition(tc: StabilityConstants) -> bool:
    """(|A|*beta + N*q0) / (N*eta0) <= 1 - mu0, the mean-tracking margin."""
    if tc.mu0 is None or tc.q0 is None:
        return False
    lhs = (tc.attacked * tc.beta + tc.n_agents * tc.q0) / (tc.n_agents * tc.eta0)
    return lhs <= 1.0 - tc.mu0


# ---------------------------------------------------------------------------
# disagreement envelope


def disagreement_envelope(
    L: int, t: int, a: float, gamma: float, n_agents: int, eta0: float, beta: float
) -> float:
    """Worst-case gap between one estimate and the network average at time t.

    (a*gamma^L)^t * sqrt(N)*eta0
        + sqrt(N)*beta*gamma^L * (1 - (a*gamma^L)^(t-1)) / (1 - a*gamma^L)

    for t >= 1, defined when a*gamma^L < 1.
    """
    if t < 1:
        raise AnalysisError("the envelope is defined for t >= 1")
    g_l = gamma ** L
    if a * g_l >= 1.0:
        raise AnalysisDomainError(f"a*gamma^L = {a * g_l:.6g} >= 1: envelope diverges")
    sqrt_n = math.sqrt(n_agents)
    decays = (a * g_l) ** t
    # a^(t-1) * gamma^(L(t-1)) evaluated as one decaying product power
    partial = (1.0 - (a * g_l) ** (t - 1)) / (1.0 - a * g_l)
    return decays * sqrt_n * eta0 + sqrt_n * beta * g_l * partial


def disagreement_envelope_limit(L: int, a: float, gamma: float, n_agents: int, beta: float) -> float:
    """Large-t limit of the envelope: sqrt(N)*beta*gamma^L / (1 - a*gamma^L)."""
    g_l = gamma ** L
    if a * g_l >= 1.0:
        raise AnalysisDomainError(f"a*gamma^L = {a * g_l:.6g} >= 1: envelope diverges")
    return math.sqrt(n_agents) * beta * g_l / (1.0 - a * g_l)


def disagreement_envelope_sup(
    L: int, a: float, gamma: float, n_agents: int, eta0: float, beta: float
) -> float:
    """Uniform-in-time envelope bound p0_star."""
    g_l = gamma ** L
    if a * g_l >= 1.0:
        raise AnalysisDomainError(f"a*gamma^L = {a * g_l:.6g} >= 1: envelope diverges")
    sqrt_n = math.sqrt(n_agents)
    return a * g_l * sqrt_n * eta0 + sqrt_n * beta * g_l / (1.0 - a * g_l)


# ---------------------------------------------------------------------------
# feasibility


def attack_tolerance_feasible(lam0: Lambda0Result, s: int) -> bool:
    """Whether the boundedness condition admits any (beta, eta0, L): lambda0 > s.

    Refuses sampled estimates: they only upper-bound lambda0, so they can
    certify neither direction.
    """
    if not lam0.exact:
        raise AnalysisError(
            "feasibility needs an exactly enumerated lambda0; a sampled value is "
            "only an upper estimate"
        )
    return lam0.value > s


DEFAULT_BETA_GRID = tuple(float(b) for b in np.logspace(-2, 4, 25))
DEFAULT_ETA0_GRID = tuple(float(e) for e in np.logspace(-2, 4, 25))
DEFAULT_L_GRID = (1, 2, 4, 8, 16, 32, 64)


def feasibility_grid_search(
    a: float,
    n_agents: int,
    gamma: float,
    s: int,
    lambda0_value: float,
    b_w: float,
    b_v: float,
    beta_values=DEFAULT_BETA_GRID,
    eta0_values=DEFAULT_ETA0_GRID,
    L_values=DEFAULT_L_GRID,
):
    """First (beta, eta0, L) on the grid satisfying the growth condition.

    A bounded stand-in for the existential feasibility statement: 'no
    witness in this grid' is reported as None, never as a proof of
    infeasibility. Scan order is lexicographic over (L, eta0, beta).
    """
    for L in L_values:
        for eta0 in eta0_values:
            for beta in beta_values:
                tc = stability_constants(
                    a, n_agents, int(L), float(beta), float(eta0),
                    b_w, b_v, s, lambda0_value, gamma,
                )
                if growth_condition(tc).holds:
                    return (float(beta), float(eta0), int(L))
    return None


# ---------------------------------------------------------------------------
# relations between the margin and sparse observability


@dataclass(frozen=True)
class ObservabilityRelations:
    """Necessity/sufficiency links between lambda0 > s and 2s-sparse one-step
    observability. Sufficiency only applies under the hypothesis that the
    observation rows are pairwise orthogonal (or copies) and A is diagonal;
    outside it the field is None.
    """

    lambda0_value: float
    s: int
    one_step_2s: bool
    necessity_ok: bool
    sufficiency_ok: bool | None


def _rows_orthogonal_or_parallel(c: np.ndarray, tol: float = 1e-9) -> bool:
    dots = np.abs(c @ c.T)
    off = dots - np.diag(np.diag(dots))
    return bool(np.all((off <= tol) | (np.abs(off - 1.0) <= tol)))


def _is_diagonal(a: np.ndarray, tol: float = 1e-12) -> bool:
    scale = 1.0 + np.abs(a).max()
    return bool(np.abs(a - np.diag(np.diag(a))).max() <= tol * scale)


def observability_relations(a_mat, c_rows, s: int) -> ObservabilityRelations:
    """Check: lambda0 > s requires one-step 2s-sparse observability, and under
    orthogonal rows + diagonal A the implication also reverses."""
    a = as_matrix(a_mat)
    c = as_matrix(c_rows)
    lam0 = lambda0(c, s).value
    margin = lam0 > s
    one_step_2s = one_step_s_sparse_observable(c, 2 * s)
    necessity_ok = (not margin) or one_step_2s
    if _rows_orthogonal_or_parallel(c) and _is_diagonal(a):
        sufficiency_ok = (not one_step_2s) or margin
    else:
        sufficiency_ok = None
    return ObservabilityRelations(
        lambda0_value=lam0,
        s=s,
        one_step_2s=one_step_2s,
        necessity_ok=necessity_ok,
        sufficiency_ok=sufficiency_ok,
    )


# ---------------------------------------------------------------------------
# assembled report


@dataclass(frozen=True)
class FeasibilityReport:
    """Everything the offline design check produces for one scenario."""

    lam0: Lambda0Result
    constants: StabilityConstants
    growth: GrowthConditionResult
    error_bound: float | None
    average_condition_holds: bool
    attack_feasible: bool | None
    witness: tuple | None
    notes: tuple = ()


def build_feasibility_report(
    model: PlantModel,
    gamma: float,
    s: int,
    L: int,
    beta: float,
    lambda0_mode: str = "auto",
    samples: int = 10_000,
    seed: int = 0,
    grid_search: bool = False,
) -> FeasibilityReport:
    """Evaluate the margin, constants, conditions and bound for a scenario."""
    big_n = model.n_agents
    notes = []
    if lambda0_mode == "auto":
        lambda0_mode = "exact" if (s == 0 or math.comb(big_n, s) <= ENUMERATION_LIMIT) else "sampled"
        if lambda0_mode == "sampled":
            notes.append(
                f"lambda0 sampled over {samples} random removal sets (upper estimate: "
                "exact enumeration is out of reach); feasibility is not certified"
            )
    lam0 = lambda0(model.C, s, mode=lambda0_mode, samples=samples, seed=seed)
    tc = stability_constants(
        model.a, big_n, L, beta, model.eta0, model.b_w, model.b_v, s, lam0.value, gamma
    )
    growth = growth_condition(tc)
    try:
        bound = asymptotic_error_bound(tc)
    except AnalysisDomainError as exc:
        bound = None
        notes.append(f"error bound: {exc}")
    feasible = attack_tolerance_feasible(lam0, s) if lam0.exact else None
    if feasible is False:
        notes.append(
            f"lambda0 = {lam0.value:.6g} <= s = {s}: no (beta, eta0, L) can satisfy "
            "the boundedness condition"
        )
    witness = None
    if grid_search:
        witness = feasibility_grid_search(
            model.a, big_n, gamma, s, lam0.value, model.b_w, model.b_v
        )
    return FeasibilityReport(
        lam0=lam0,
        constants=tc,
        growth=growth,
        error_bound=bound,
        average_condition_holds=average_error_condition(tc),
        attack_feasible=feasible,
        witness=witness,
        notes=tuple(notes),
    )
