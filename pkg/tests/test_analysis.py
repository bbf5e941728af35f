import itertools
import math

import numpy as np
import pytest

from sdcf.analysis import (
    AnalysisDomainError,
    AnalysisError,
    EnumerationTooLargeError,
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
from sdcf.plant import PlantModel

from conftest import ORTHO_SIX_ROWS, random_unit_rows

SQ2 = np.sqrt(2) / 2
DICT3 = np.array([[1.0, 0.0], [0.0, 1.0], [SQ2, SQ2]])


def brute_force_lambda0(c, s):
    """Independent route: fresh Gram summation per kept set, LAPACK eigvalsh."""
    c = np.asarray(c, dtype=float)
    big_n, n = c.shape
    best = math.inf
    for kept in itertools.combinations(range(big_n), big_n - s):
        gram = np.zeros((n, n))
        for i in kept:
            gram += np.outer(c[i], c[i])
        best = min(best, float(np.linalg.eigvalsh(gram)[0]))
    return best


class TestLambda0:
    def test_three_sensor_dictionary(self):
        res = lambda0(DICT3, 1)
        assert res.exact
        assert res.value == pytest.approx(1 - SQ2, abs=1e-12)

    def test_replicated_orthogonal_rows(self):
        res = lambda0(np.array(ORTHO_SIX_ROWS), 1)
        assert res.value == pytest.approx(2.0, abs=1e-12)

    def test_s_zero_is_full_gram_minimum(self):
        res = lambda0(DICT3, 0)
        gram = DICT3.T @ DICT3
        assert res.value == pytest.approx(float(np.linalg.eigvalsh(gram)[0]), abs=1e-12)

    def test_sampled_with_full_budget_equals_exact(self):
        rng = np.random.default_rng(0)
        c = random_unit_rows(rng, 8, 2)
        exact = lambda0(c, 2, mode="exact")
        sampled = lambda0(c, 2, mode="sampled", samples=math.comb(8, 2))
        assert sampled.exact  # full budget falls back to enumeration
        assert sampled.value == exact.value

    def test_sampled_upper_estimate(self):
        rng = np.random.default_rng(1)
        c = random_unit_rows(rng, 10, 3)
        exact = lambda0(c, 3, mode="exact")
        sampled = lambda0(c, 3, mode="sampled", samples=10, seed=5)
        assert not sampled.exact
        assert sampled.value >= exact.value - 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        big_n = int(rng.integers(3, 9))
        n = int(rng.integers(1, 4))
        s = int(rng.integers(0, min(3, big_n)))
        c = random_unit_rows(rng, big_n, n)
        assert lambda0(c, s).value == pytest.approx(brute_force_lambda0(c, s), abs=1e-12)

    def test_monotone_nonincreasing_in_s(self):
        rng = np.random.default_rng(7)
        c = random_unit_rows(rng, 8, 2)
        values = [lambda0(c, s).value for s in range(4)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_enumeration_guard(self):
        rng = np.random.default_rng(2)
        c = random_unit_rows(rng, 60, 2)
        with pytest.raises(EnumerationTooLargeError, match="sampled"):
            lambda0(c, 20)

    def test_s_out_of_range(self):
        with pytest.raises(AnalysisError):
            lambda0(DICT3, 3)


class TestObservabilityDefinitions:
    def test_orthogonal_pair_observable(self):
        assert one_step_collectively_observable([[1.0, 0.0], [0.0, 1.0]])

    def test_repeated_row_not_observable(self):
        assert not one_step_collectively_observable([[1.0, 0.0], [1.0, 0.0]])

    def test_dictionary_observable(self):
        assert one_step_collectively_observable(DICT3)

    def test_sparse_observable_with_redundancy(self):
        c = [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
        assert s_sparse_observable(np.eye(2), c, 1)

    def test_sparse_not_observable_without_redundancy(self):
        assert not s_sparse_observable(np.eye(2), [[1.0, 0.0], [0.0, 1.0]], 1)

    def test_jordan_block_single_row_suffices(self):
        a = [[1.0, 1.0], [0.0, 1.0]]
        assert s_sparse_observable(a, [[1.0, 0.0], [1.0, 0.0]], 1)

    def test_one_step_sparse_examples(self):
        assert one_step_s_sparse_observable(DICT3, 1)
        assert not one_step_s_sparse_observable([[1.0, 0.0], [0.0, 1.0]], 1)

    def test_one_step_sparse_s_zero_reduces_to_collective(self):
        for c in (DICT3, [[1.0, 0.0], [1.0, 0.0]]):
            assert one_step_s_sparse_observable(c, 0) == one_step_collectively_observable(c)

    @pytest.mark.parametrize("seed", range(6))
    def test_one_step_sparse_iff_lambda0_positive(self, seed):
        rng = np.random.default_rng(100 + seed)
        big_n = int(rng.integers(3, 8))
        n = int(rng.integers(1, 4))
        s = int(rng.integers(0, min(3, big_n)))
        c = random_unit_rows(rng, big_n, n)
        assert one_step_s_sparse_observable(c, s) == (lambda0(c, s).value > 1e-8)

    @pytest.mark.parametrize("seed", range(6))
    def test_one_step_implies_n_step(self, seed):
        rng = np.random.default_rng(200 + seed)
        big_n = int(rng.integers(2, 7))
        n = int(rng.integers(1, 4))
        s = int(rng.integers(0, big_n))
        c = random_unit_rows(rng, big_n, n)
        a = np.diag(rng.uniform(0.5, 2.0, n))
        if one_step_s_sparse_observable(c, s):
            assert s_sparse_observable(a, c, s)

    @pytest.mark.parametrize("seed", range(6))
    def test_scalar_matrix_makes_definitions_equivalent(self, seed):
        # powers of c*I add no new directions, so the n-step stack has the
        # same rank as the rows themselves
        rng = np.random.default_rng(300 + seed)
        big_n = int(rng.integers(2, 7))
        n = int(rng.integers(1, 4))
        s = int(rng.integers(0, big_n))
        c = random_unit_rows(rng, big_n, n)
        a = float(rng.uniform(0.5, 2.0)) * np.eye(n)
        assert s_sparse_observable(a, c, s) == one_step_s_sparse_observable(c, s)

    def test_distinct_diagonal_breaks_equivalence(self):
        # a generic row is observable under distinct eigenvalues even though
        # a single rank-one Gram is never positive definite
        a = np.diag([1.0, 2.0])
        c = [[SQ2, SQ2]]
        assert s_sparse_observable(a, c, 0)
        assert not one_step_s_sparse_observable(c, 0)


def reference_constants(a, n_agents, L, beta, eta0, b_w, b_v, attacked, lam0, gamma):
    """Plain transcription of the constants chain for cross-checking."""
    g_l = gamma ** L
    p0 = a * g_l * math.sqrt(n_agents) * eta0 + math.sqrt(n_agents) * beta * g_l / (1 - a * g_l)
    k = min(1.0, beta / (a * (p0 + eta0) + b_w + b_v))
    mu = a * (1 - k * lam0 / n_agents)
    q = (1 - attacked / n_agents) * (b_w + b_v + a * p0) + b_w
    frac = 1 - beta * attacked / (n_agents * eta0)
    theta = 1 - (q / eta0) / frac
    m = theta * frac / (1 - k * lam0 / n_agents)
    return p0, k, mu, q, theta, m


class TestStabilityConstants:
    def test_reference_spectrum_gamma(self):
        tc = stability_constants(
            a=1.16, n_agents=100, L=8, beta=3.0, eta0=1.0, b_w=1.0, b_v=1.0,
            s=25, lambda0_value=0.05, gamma=(21.3 - 4.1) / (21.3 + 4.1),
        )
        assert tc.gamma == pytest.approx(0.67717, abs=1e-5)

    @pytest.mark.parametrize("seed", range(8))
    def test_fields_reproduce_formulas(self, seed):
        rng = np.random.default_rng(400 + seed)
        a = float(rng.uniform(1.0, 1.2))
        n_agents = int(rng.integers(2, 12))
        L = int(rng.integers(1, 6))
        gamma = float(rng.uniform(0.0, 0.8))
        beta = float(rng.uniform(0.1, 5.0))
        eta0 = float(rng.uniform(0.5, 10.0))
        b_w, b_v = float(rng.uniform(0, 0.5)), float(rng.uniform(0, 0.5))
        s = int(rng.integers(0, n_agents))
        lam0 = float(rng.uniform(0.0, n_agents / 2))
        tc = stability_constants(a, n_agents, L, beta, eta0, b_w, b_v, s, lam0, gamma)
        if tc.m0 is None:
            return
        p0, k, mu, q, theta, m = reference_constants(
            a, n_agents, L, beta, eta0, b_w, b_v, s, lam0, gamma
        )
        for got, want in [(tc.p0_star, p0), (tc.k_star, k), (tc.mu0, mu),
                          (tc.q0, q), (tc.theta0, theta), (tc.m0, m)]:
            assert got == pytest.approx(want, abs=1e-12, rel=1e-12)

    def test_domain_guard_unstable_consensus(self):
        tc = stability_constants(
            a=1.5, n_agents=4, L=1, beta=1.0, eta0=1.0, b_w=0.0, b_v=0.0,
            s=0, lambda0_value=1.0, gamma=0.8,
        )
        assert tc.p0_star is None
        assert "p0_star" in tc.diagnostics
        assert not growth_condition(tc).holds

    def test_domain_guard_saturation_fraction(self):
        tc = stability_constants(
            a=1.01, n_agents=2, L=1, beta=10.0, eta0=1.0, b_w=0.0, b_v=0.0,
            s=2, lambda0_value=0.0, gamma=0.0,
        )
        assert tc.theta0 is None and tc.m0 is None
        assert "theta0" in tc.diagnostics

    def test_k_star_saturates_at_one(self):
        tc = stability_constants(
            a=1.0, n_agents=4, L=2, beta=1e6, eta0=1.0, b_w=0.1, b_v=0.1,
            s=0, lambda0_value=1.0, gamma=0.3,
        )
        assert tc.k_star == 1.0

    def test_attacked_defaults_to_declared_bound(self):
        tc = stability_constants(
            a=1.0, n_agents=6, L=1, beta=0.5, eta0=1.0, b_w=0.1, b_v=0.1,
            s=2, lambda0_value=1.0, gamma=0.0,
        )
        assert tc.attacked == 2
        tc2 = stability_constants(
            a=1.0, n_agents=6, L=1, beta=0.5, eta0=1.0, b_w=0.1, b_v=0.1,
            s=2, lambda0_value=1.0, gamma=0.0, attacked=1,
        )
        assert tc2.attacked == 1
        assert tc2.q0 != tc.q0


def _passing_constants():
    # complete graph, replicated orthogonal sensors, mild instability
    return stability_constants(
        a=1.01, n_agents=6, L=2, beta=0.6, eta0=1.0, b_w=0.005, b_v=0.005,
        s=1, lambda0_value=2.0, gamma=0.0,
    )


class TestGrowthCondition:
    def test_stable_plants_fail_the_lower_clause(self):
        tc = stability_constants(
            a=0.9, n_agents=4, L=1, beta=1.0, eta0=1.0, b_w=0.0, b_v=0.0,
            s=0, lambda0_value=1.0, gamma=0.2,
        )
        res = growth_condition(tc)
        assert not res.holds
        assert any("below 1" in r for r in res.reasons)

    def test_complete_graph_drops_consensus_clause(self):
        tc = _passing_constants()
        res = growth_condition(tc)
        assert res.gamma_neg_pow_l == math.inf
        assert res.holds

    def test_verdict_is_computed_not_assumed(self):
        # the bundled 100-agent setting: evaluate and just require a verdict
        tc = stability_constants(
            a=1.16, n_agents=100, L=8, beta=3.0, eta0=1.0, b_w=1.0, b_v=1.0,
            s=25, lambda0_value=0.2, gamma=0.677,
        )
        res = growth_condition(tc)
        assert res.holds in (True, False)


class TestErrorBound:
    def test_undefined_when_mu0_exceeds_one(self):
        tc = stability_constants(
            a=1.2, n_agents=4, L=2, beta=1.0, eta0=1.0, b_w=0.0, b_v=0.0,
            s=0, lambda0_value=0.0, gamma=0.1,
        )
        assert tc.mu0 is not None and tc.mu0 >= 1.0
        with pytest.raises(AnalysisDomainError, match="mu0"):
            asymptotic_error_bound(tc)

    def test_single_agent_noiseless_limit(self):
        # gamma = 0, s = 0, no noise, huge beta, scalar plant: the bound
        # collapses to q0 / (1 - mu0) with mu0 = 0, and q0 itself is 0
        tc = stability_constants(
            a=1.0, n_agents=1, L=1, beta=1e9, eta0=1.0, b_w=0.0, b_v=0.0,
            s=0, lambda0_value=1.0, gamma=0.0,
        )
        assert tc.mu0 == pytest.approx(0.0, abs=1e-15)
        assert asymptotic_error_bound(tc) == pytest.approx(tc.q0, abs=1e-15)

    def test_positive_for_noisy_instances(self):
        tc = _passing_constants()
        assert asymptotic_error_bound(tc) > 0.0


class TestAverageErrorCondition:
    def test_false_when_mu0_too_large(self):
        tc = stability_constants(
            a=1.2, n_agents=4, L=2, beta=1.0, eta0=1.0, b_w=0.0, b_v=0.0,
            s=0, lambda0_value=0.0, gamma=0.1,
        )
        assert not average_error_condition(tc)

    def test_growth_condition_implies_it(self):
        # algebraic consequence of a < m0; checked on a passing instance
        tc = _passing_constants()
        assert growth_condition(tc).holds
        assert average_error_condition(tc)

    @pytest.mark.parametrize("seed", range(20))
    def test_growth_condition_implies_it_randomized(self, seed):
        rng = np.random.default_rng(500 + seed)
        tc = stability_constants(
            a=float(rng.uniform(1.0, 1.1)),
            n_agents=int(rng.integers(2, 10)),
            L=int(rng.integers(1, 6)),
            beta=float(rng.uniform(0.1, 3.0)),
            eta0=float(rng.uniform(0.5, 50.0)),
            b_w=float(rng.uniform(0, 0.05)),
            b_v=float(rng.uniform(0, 0.05)),
            s=int(rng.integers(0, 3)),
            lambda0_value=float(rng.uniform(0.5, 4.0)),
            gamma=float(rng.uniform(0.0, 0.7)),
        )
        if growth_condition(tc).holds:
            assert average_error_condition(tc)


class TestDisagreementEnvelope:
    def test_complete_graph_collapses_to_zero(self):
        for t in (1, 2, 10):
            assert disagreement_envelope(3, t, 1.1, 0.0, 10, 1.0, 3.0) == 0.0

    def test_long_time_limit(self):
        limit = disagreement_envelope_limit(4, 1.1, 0.5, 9, 2.0)
        assert disagreement_envelope(4, 4000, 1.1, 0.5, 9, 1.0, 2.0) == pytest.approx(
            limit, rel=1e-12
        )
        g_l = 0.5 ** 4
        assert limit == pytest.approx(3 * 2.0 * g_l / (1 - 1.1 * g_l), rel=1e-12)

    def test_deep_consensus_kills_the_envelope(self):
        values = [
            disagreement_envelope_sup(L, 1.15, 0.6, 16, 1.0, 3.0) for L in (2, 8, 20, 40)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-6

    def test_sup_dominates_everywhere(self):
        sup = disagreement_envelope_sup(3, 1.1, 0.55, 7, 2.0, 1.5)
        for t in range(1, 200):
            assert disagreement_envelope(3, t, 1.1, 0.55, 7, 2.0, 1.5) <= sup + 1e-12

    def test_domain_guard(self):
        with pytest.raises(AnalysisDomainError):
            disagreement_envelope(1, 1, 1.3, 0.9, 4, 1.0, 1.0)

    def test_needs_time_at_least_one(self):
        with pytest.raises(AnalysisError):
            disagreement_envelope(1, 0, 1.1, 0.5, 4, 1.0, 1.0)


class TestFeasibility:
    def test_margin_above_attack_count(self):
        assert attack_tolerance_feasible(lambda0(np.array(ORTHO_SIX_ROWS), 1), 1)

    def test_dictionary_cannot_tolerate_one(self):
        assert not attack_tolerance_feasible(lambda0(DICT3, 1), 1)

    def test_zero_attacks_feasible_when_observable(self):
        assert attack_tolerance_feasible(lambda0(DICT3, 0), 0)

    def test_sampled_estimate_refused(self):
        rng = np.random.default_rng(3)
        c = random_unit_rows(rng, 10, 2)
        est = lambda0(c, 2, mode="sampled", samples=3)
        with pytest.raises(AnalysisError, match="sampled"):
            attack_tolerance_feasible(est, 2)

    def test_grid_search_empty_grid(self):
        assert feasibility_grid_search(
            1.001, 6, 0.0, 1, 2.0, 0.01, 0.01, beta_values=(), eta0_values=(), L_values=()
        ) is None

    def test_grid_search_finds_witness_on_easy_instance(self):
        witness = feasibility_grid_search(1.001, 6, 0.0, 1, 2.0, 0.01, 0.01)
        assert witness is not None
        beta, eta0, L = witness
        tc = stability_constants(1.001, 6, L, beta, eta0, 0.01, 0.01, 1, 2.0, 0.0)
        assert growth_condition(tc).holds

    def test_grid_search_no_witness_when_margin_fails(self):
        assert feasibility_grid_search(1.01, 3, 0.2, 1, 1 - SQ2, 0.01, 0.01) is None


class TestObservabilityRelations:
    def test_replicated_orthogonal_case(self):
        rel = observability_relations(np.eye(2), np.array(ORTHO_SIX_ROWS), 1)
        assert rel.necessity_ok
        assert rel.sufficiency_ok is True

    def test_thin_sensor_set_vacuous_necessity(self):
        rel = observability_relations(np.eye(2), [[1.0, 0.0], [0.0, 1.0]], 1)
        assert rel.lambda0_value <= 1.0
        assert not rel.one_step_2s
        assert rel.necessity_ok

    def test_non_orthogonal_rows_skip_sufficiency(self):
        rel = observability_relations(np.eye(2), DICT3, 1)
        assert rel.sufficiency_ok is None

    @pytest.mark.parametrize("seed", range(10))
    def test_necessity_on_random_instances(self, seed):
        rng = np.random.default_rng(600 + seed)
        big_n = int(rng.integers(3, 8))
        n = int(rng.integers(1, 4))
        s = int(rng.integers(0, 2))
        c = random_unit_rows(rng, big_n, n)
        a = np.diag(rng.uniform(0.5, 1.5, n))
        rel = observability_relations(a, c, s)
        assert rel.necessity_ok


class TestReport:
    def _model(self):
        return PlantModel(A=np.array([[1.01, 0.0], [0.0, 1.01]]),
                          C=np.array(ORTHO_SIX_ROWS), b_w=0.005, b_v=0.005, eta=1.0)

    def test_exact_report_feasible(self):
        rep = build_feasibility_report(self._model(), 0.0, s=1, L=2, beta=0.6)
        assert rep.lam0.exact
        assert rep.attack_feasible is True
        assert rep.growth.holds
        assert rep.error_bound is not None and rep.error_bound > 0

    def test_infeasible_scenario_flagged(self):
        model = PlantModel(A=np.eye(2), C=DICT3, b_w=0.1, b_v=0.1, eta=1.0)
        rep = build_feasibility_report(model, 0.3, s=1, L=2, beta=1.0)
        assert rep.attack_feasible is False
        assert any("no (beta, eta0, L)" in note for note in rep.notes)

    def test_witness_included_on_request(self):
        rep = build_feasibility_report(self._model(), 0.0, s=1, L=2, beta=0.6,
                                       grid_search=True)
        assert rep.witness is not None
