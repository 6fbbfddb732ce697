import numpy as np
import pytest

from bora.acquisition import BetaSchedule
from bora.errors import FitError
from bora.measures import AllocationDecision
from bora.policies import (
    BoraPolicy,
    CANONICAL_POLICIES,
    ObservationRecord,
    RandomPolicy,
    SbfPolicy,
    bora1_decide,
    bora2_decide,
    bora3_decide,
    fit_history_model,
    sbf_decide,
    sbf_init,
    sbf_update,
    wilson_lower,
)

from oracles import wilson_lower_reference

FIXED = BetaSchedule("fixed", 2.0)


def _feasible(d: AllocationDecision, budget: float):
    assert np.all(d.amounts >= 0.0)
    assert d.amounts.sum() == pytest.approx(budget, abs=1e-9)


def _roll_history(rng, n, m=2, budget=33.9):
    history = []
    for t in range(n):
        w = rng.dirichlet(np.ones(m))
        d = AllocationDecision(w * budget, budget)
        history.append(ObservationRecord(d, float(rng.uniform(0.0, 2.0)), t=t + 1))
    return history


class TestCanonicalNames:
    def test_expected_policy_names(self):
        assert CANONICAL_POLICIES == ("bora1", "bora2", "bora3", "sbf", "random")


class TestBoraWarmup:
    @pytest.mark.parametrize("decide", [bora1_decide, bora2_decide, bora3_decide])
    def test_warmup_decisions_are_random_and_feasible(self, rng, decide):
        for n in range(3):
            d = decide(_roll_history(rng, n), 33.9, FIXED, rng, m=2)
            _feasible(d, 33.9)

    def test_warmup_requires_m_on_empty_history(self, rng):
        with pytest.raises(ValueError):
            bora1_decide([], 33.9, FIXED, rng)

    def test_m_inferred_from_history(self, rng):
        d = bora1_decide(_roll_history(rng, 1, m=4), 10.0, FIXED, rng)
        assert d.m == 4


class TestBoraDecisions:
    @pytest.mark.parametrize("decide", [bora1_decide, bora2_decide, bora3_decide])
    def test_post_warmup_decision_feasible(self, rng, decide):
        history = _roll_history(rng, 10)
        d = decide(history, 33.9, FIXED, rng, m=2)
        _feasible(d, 33.9)

    def test_exploits_clear_best_channel(self, rng):
        # channel 0 pays 1 per unit, channel 1 pays nothing; with no
        # exploration bonus the fitted surrogate must lean on channel 0
        history = []
        for _ in range(25):
            w = rng.dirichlet(np.ones(2))
            d = AllocationDecision(w * 10.0, 10.0)
            reward = d.amounts[0] + rng.normal(0.0, 0.05)
            history.append(ObservationRecord(d, float(reward)))
        d = bora1_decide(history, 10.0, BetaSchedule("fixed", 0.0), np.random.default_rng(5), m=2)
        assert d.amounts[0] > 8.0

    def test_fit_failure_falls_back_to_random(self, rng, monkeypatch, caplog):
        import bora.policies as policies_mod

        def boom(*args, **kwargs):
            raise FitError("forced")

        monkeypatch.setattr(policies_mod, "fit_history_model", boom)
        with caplog.at_level("WARNING", logger="bora.policies"):
            d = bora2_decide(_roll_history(rng, 8), 33.9, FIXED, rng, m=2)
        _feasible(d, 33.9)
        assert any("fit failed" in r.message for r in caplog.records)


class TestFitHistoryModel:
    def test_variant_one_sees_amounts(self, rng):
        history = _roll_history(rng, 8, budget=50.0)
        model = fit_history_model(history, 1, rng)
        assert model.spec.kind == "se"
        assert model.inputs.max() > 1.5  # raw amounts, not weights

    def test_variant_two_sees_weights(self, rng):
        history = _roll_history(rng, 8, budget=50.0)
        model = fit_history_model(history, 2, rng)
        assert model.spec.kind == "se"
        assert model.inputs.max() <= 1.0

    def test_variant_three_uses_transport_kernel(self, rng):
        history = _roll_history(rng, 8)
        model = fit_history_model(history, 3, rng, wasserstein_p=2.0)
        assert model.spec.kind == "wse"

    def test_rejects_unknown_variant(self, rng):
        with pytest.raises(ValueError):
            fit_history_model(_roll_history(rng, 5), 4, rng)

    def test_rejects_short_history(self, rng):
        with pytest.raises(ValueError):
            fit_history_model(_roll_history(rng, 1), 1, rng)


class TestWilsonLower:
    def test_matches_score_test_inversion(self):
        for n in (1, 5, 20, 100):
            for s in range(0, n + 1, max(1, n // 5)):
                want = wilson_lower_reference(s, n, 0.95)
                assert wilson_lower(s, n, 0.95) == pytest.approx(want, abs=1e-9)

    def test_zero_successes_gives_zero(self):
        assert wilson_lower(0, 10) == 0.0

    def test_all_successes_below_one(self):
        got = wilson_lower(10, 10)
        assert 0.5 < got < 1.0

    def test_monotone_in_successes(self):
        vals = [wilson_lower(s, 20) for s in range(21)]
        assert np.all(np.diff(vals) >= -1e-12)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            wilson_lower(1, 0)
        with pytest.raises(ValueError):
            wilson_lower(5, 3)
        with pytest.raises(ValueError):
            wilson_lower(1, 2, confidence=1.0)


class TestSbfDecide:
    def test_fills_known_requirements_then_spreads(self):
        # requirements (25, 50) under budget 33.9: channel one is filled,
        # channel two gets the remainder
        state = sbf_init(2)
        state.lower = np.array([25.0, 50.0])
        d = sbf_decide(state, 33.9)
        assert d.amounts[0] == pytest.approx(25.0, abs=1e-12)
        assert d.amounts[1] == pytest.approx(8.9, abs=1e-12)

    def test_surplus_spread_evenly(self):
        state = sbf_init(2)
        state.lower = np.array([25.0, 50.0])
        d = sbf_decide(state, 100.0)
        assert d.amounts[0] == pytest.approx(37.5, abs=1e-12)
        assert d.amounts[1] == pytest.approx(62.5, abs=1e-12)

    def test_tiny_budget_goes_to_smallest_requirement(self):
        state = sbf_init(2)
        state.lower = np.array([25.0, 50.0])
        d = sbf_decide(state, 0.0001)
        assert d.amounts[0] == pytest.approx(0.0001, abs=1e-15)
        assert d.amounts[1] == 0.0

    def test_fresh_state_spreads_everything(self):
        d = sbf_decide(sbf_init(4), 20.0)
        assert np.allclose(d.amounts, 5.0)

    def test_rejects_bad_budget(self):
        with pytest.raises(ValueError):
            sbf_decide(sbf_init(2), -1.0)


class TestSbfUpdate:
    def test_failure_raises_lower_bound(self):
        state = sbf_init(2)
        d = AllocationDecision(np.array([10.0, 5.0]), 15.0)
        sbf_update(state, d, np.array([0, 0]))
        assert state.lower[0] == pytest.approx(10.0)
        assert state.lower[1] == pytest.approx(5.0)

    def test_success_caps_upper_bound(self):
        state = sbf_init(2)
        d = AllocationDecision(np.array([10.0, 5.0]), 15.0)
        sbf_update(state, d, np.array([1, 1]))
        q = wilson_lower(1, 1)
        assert state.upper[0] == pytest.approx(10.0 / q)
        assert state.upper[1] == pytest.approx(5.0 / q)

    def test_bounds_stay_ordered_under_random_feedback(self, rng):
        # interval invariants must survive arbitrary noisy feedback
        for _ in range(200):
            m = int(rng.integers(2, 6))
            state = sbf_init(m)
            for _ in range(30):
                b = float(rng.uniform(0.5, 100.0))
                d = sbf_decide(state, b)
                prev_lower = state.lower.copy()
                prev_upper = state.upper.copy()
                sbf_update(state, d, rng.integers(0, 2, m))
                assert np.all(state.lower >= prev_lower - 1e-12)
                assert np.all(state.upper <= prev_upper + 1e-12)
                assert np.all(state.lower <= state.upper + 1e-12)

    def test_shape_mismatch_rejected(self):
        state = sbf_init(2)
        d = AllocationDecision(np.array([1.0, 1.0]), 2.0)
        with pytest.raises(ValueError):
            sbf_update(state, d, np.array([1, 0, 1]))


class TestPolicyClasses:
    def test_bora_policy_full_loop(self, rng):
        policy = BoraPolicy(2, 2, FIXED, rng)
        assert policy.name == "bora2"
        for t in range(1, 8):
            d = policy.decide(33.9)
            _feasible(d, 33.9)
            policy.observe(ObservationRecord(d, float(rng.uniform(0, 2)), t=t))
        assert len(policy.history) == 7

    def test_sbf_policy_needs_outcomes(self):
        policy = SbfPolicy(2)
        d = policy.decide(10.0)
        with pytest.raises(ValueError):
            policy.observe(ObservationRecord(d, 1.0))

    def test_sbf_policy_loop(self, rng):
        policy = SbfPolicy(3)
        for _ in range(5):
            d = policy.decide(12.0)
            _feasible(d, 12.0)
            policy.observe(ObservationRecord(d, 1.0, outcomes=rng.integers(0, 2, 3)))

    def test_random_policy_feasible_and_varied(self, rng):
        policy = RandomPolicy(3, rng)
        draws = [policy.decide(9.0) for _ in range(5)]
        for d in draws:
            _feasible(d, 9.0)
        stacked = np.stack([d.amounts for d in draws])
        assert np.std(stacked) > 0.0

    def test_bora_policy_rejects_unknown_variant(self, rng):
        with pytest.raises(ValueError):
            BoraPolicy(7, 2, FIXED, rng)
