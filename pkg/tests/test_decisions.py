"""Policy projection: shared-noise dominance, recovery-window semantics,
and the comparison summary contract."""

import numpy as np
import pytest

from smolt.decisions import (Policy, PolicyComparison, ProjectionResult,
                             compare_policies, make_projection_noise,
                             moratorium, project, status_quo)
from smolt.errors import ValidationError


def _synthetic_result():
    """Four draws, one stock, horizon 6, capacity 100 everywhere."""
    smolts = np.full((4, 1, 6), 1.0)
    smolts[0, 0] = [10, 60, 10, 10, 10, 10]
    smolts[1, 0] = [100, 10, 49, 10, 10, 10]
    smolts[2, 0] = [0.5, 0.5, 50, 10, 10, 10]
    smolts[3, 0] = [0.5, 0.5, 0.5, 10, 10, 10]
    catch = np.zeros((4, 2, 6))
    catch[:, 0, :] = 2.0
    catch[:, 1, :] = 1.0
    return ProjectionResult(
        policy="synthetic", stock_ids=["s"], fishery_ids=["a", "b"],
        smolts=smolts, catch=catch, capacity=np.full((4, 1), 100.0))


class TestRecoveryWindowSemantics:
    def test_any_year_within_the_window_counts(self):
        r = _synthetic_result()
        # window years 2..3 (1-based): draws 0 (60) and 2 (50, >= counts)
        assert r.prob_recovery(0.5, window=(2, 3))[0] == pytest.approx(0.5)

    def test_single_year_window(self):
        r = _synthetic_result()
        assert r.prob_recovery(0.5, window=(1, 1))[0] == pytest.approx(0.25)

    def test_threshold_nesting(self):
        r = _synthetic_result()
        assert r.prob_recovery(0.75, window=(2, 3))[0] == pytest.approx(0.0)

    def test_window_bounds_validated(self):
        r = _synthetic_result()
        for window in ((0, 3), (5, 4), (1, 7)):
            with pytest.raises(ValidationError):
                r.prob_recovery(0.5, window=window)

    def test_collapse_uses_the_final_year(self):
        r = _synthetic_result()
        # final-year smolts all 10; 10 < 0.2*100 collapses, not < 0.1*100
        assert r.prob_any_collapse(0.2) == pytest.approx(1.0)
        assert r.prob_any_collapse(0.05) == pytest.approx(0.0)

    def test_cumulative_catch_is_the_per_draw_mean(self):
        r = _synthetic_result()
        assert r.expected_cumulative_catch() == pytest.approx(18.0)

    def test_summary_contract(self):
        s = _synthetic_result().summary(thresholds=(0.5, 0.75),
                                        window=(2, 3))
        assert s["policy"] == "synthetic"
        assert s["horizon"] == 6 and s["n_draws"] == 4
        assert set(s["prob_recovery"]) == {"0.5", "0.75"}
        assert s["recovery_window"] == [2, 3]
        assert len(s["smolt_quantiles"]["s"]) == len(s["quantile_probs"])


class TestPolicyValidation:
    def test_exactly_one_of_multiplier_or_schedule(self):
        with pytest.raises(ValidationError):
            Policy("p")
        with pytest.raises(ValidationError):
            Policy("p", multiplier=np.ones(2), schedule=np.ones((2, 3)))
        with pytest.raises(ValidationError):
            Policy("p", multiplier=-np.ones(2))
        with pytest.raises(ValidationError):
            Policy("p", schedule=np.ones(3))

    def test_effort_shapes_checked(self):
        last = np.array([4.0, 8.0])
        pol = Policy("p", multiplier=np.array([0.5, 2.0]))
        np.testing.assert_allclose(pol.effort(last, 3),
                                   [[2.0] * 3, [16.0] * 3])
        with pytest.raises(ValidationError):
            Policy("p", multiplier=np.ones(3)).effort(last, 3)
        with pytest.raises(ValidationError):
            Policy("p", schedule=np.ones((2, 4))).effort(last, 3)


class TestProjection:
    def test_same_seed_is_deterministic(self, projection_state):
        nf = projection_state["effort_last"].shape[0]
        r1 = project(projection_state, status_quo(nf), horizon=5, seed=3)
        r2 = project(projection_state, status_quo(nf), horizon=5, seed=3)
        np.testing.assert_array_equal(r1.smolts, r2.smolts)
        np.testing.assert_array_equal(r1.catch, r2.catch)
        r3 = project(projection_state, status_quo(nf), horizon=5, seed=4)
        assert not np.array_equal(r1.smolts, r3.smolts)

    def test_shapes_and_positivity(self, projection_state):
        nf = projection_state["effort_last"].shape[0]
        nd, ns = projection_state["r_last"].shape
        r = project(projection_state, status_quo(nf), horizon=4, seed=0)
        assert r.smolts.shape == (nd, ns, 4)
        assert r.catch.shape == (nd, nf, 4)
        assert np.all(r.smolts > 0)
        assert np.all(r.catch >= 0)
        np.testing.assert_allclose(r.capacity,
                                   1.0 / projection_state["beta"])

    def test_moratorium_dominates_draw_by_draw(self, projection_state):
        nf = projection_state["effort_last"].shape[0]
        cmp = compare_policies(
            projection_state, [status_quo(nf), moratorium(nf)],
            horizon=6, seed=11)
        sq = cmp.results["status_quo"]
        mor = cmp.results["moratorium"]
        assert np.all(mor.smolts >= sq.smolts)
        np.testing.assert_array_equal(mor.catch, 0.0)
        for th in (0.5, 0.75):
            p_mor = mor.prob_recovery(th)
            p_sq = sq.prob_recovery(th)
            assert np.all(p_mor >= p_sq)

    def test_multiplier_equals_equivalent_schedule(self, projection_state):
        nf = projection_state["effort_last"].shape[0]
        H = 4
        sched = np.repeat(projection_state["effort_last"][:, None], H,
                          axis=1) * 0.5
        pols = [Policy("half_mult", multiplier=np.full(nf, 0.5)),
                Policy("half_sched", schedule=sched)]
        cmp = compare_policies(projection_state, pols, horizon=H, seed=2)
        np.testing.assert_array_equal(cmp.results["half_mult"].smolts,
                                      cmp.results["half_sched"].smolts)
        np.testing.assert_array_equal(cmp.results["half_mult"].catch,
                                      cmp.results["half_sched"].catch)

    def test_noise_reuse_and_errors(self, projection_state):
        nf = projection_state["effort_last"].shape[0]
        noise = make_projection_noise(projection_state, 3, seed=5)
        r1 = project(projection_state, status_quo(nf), 3, noise=noise)
        r2 = project(projection_state, status_quo(nf), 3, noise=noise)
        np.testing.assert_array_equal(r1.smolts, r2.smolts)
        with pytest.raises(ValidationError):
            project(projection_state, status_quo(nf), 4, noise=noise)
        with pytest.raises(ValidationError):
            project(projection_state, status_quo(nf), 3)
        with pytest.raises(ValidationError):
            project(projection_state, status_quo(nf), 0, seed=1)

    def test_duplicate_policy_names_rejected(self, projection_state):
        nf = projection_state["effort_last"].shape[0]
        with pytest.raises(ValidationError):
            compare_policies(projection_state,
                             [status_quo(nf), status_quo(nf)], 3, seed=0)

    def test_comparison_summary_contract(self, projection_state):
        nf = projection_state["effort_last"].shape[0]
        cmp = compare_policies(projection_state,
                               [status_quo(nf), moratorium(nf)],
                               horizon=6, seed=7)
        s = cmp.summary()
        assert s["horizon"] == 6 and s["seed"] == 7
        assert set(s["policies"]) == {"status_quo", "moratorium"}
        assert isinstance(cmp, PolicyComparison)
