import numpy as np
import pytest

from hapref.simulation import (
    SyntheticParticipant,
    paper_like_participant,
    ratings_from_perceived,
    recovery_metrics,
    run_cohort,
    run_session,
    simulate_choice,
    simulate_likert,
)


class TestParticipant:
    def test_temperature_must_be_positive(self):
        with pytest.raises(ValueError):
            SyntheticParticipant(utilities=np.zeros(15), choice_temperature=0.0)

    def test_noise_must_be_non_negative(self):
        with pytest.raises(ValueError):
            SyntheticParticipant(utilities=np.zeros(15), rating_noise_sd=-0.1)

    def test_perception_deterministic_given_seed(self):
        p = SyntheticParticipant(utilities=np.arange(15.0), rating_noise_sd=0.4, seed=3)
        assert np.array_equal(p.perceived_utilities(), p.perceived_utilities())

    def test_zero_noise_perception_is_exact(self):
        p = SyntheticParticipant(utilities=np.arange(15.0), rating_noise_sd=0.0, seed=3)
        assert np.array_equal(p.perceived_utilities(), np.arange(15.0))


class TestSimulateLikert:
    def test_ratings_weakly_monotone_in_utilities(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            utilities = rng.normal(0, 1, 15)
            while len(np.unique(utilities)) < 15:
                utilities = rng.normal(0, 1, 15)
            p = SyntheticParticipant(utilities=utilities, rating_noise_sd=0.0, seed=1)
            ratings = simulate_likert(p)
            order = np.argsort(utilities)
            values = [ratings[sid][0] for sid in order]
            assert all(a <= b for a, b in zip(values, values[1:]))

    def test_all_equal_utilities_rate_zero(self):
        p = SyntheticParticipant(utilities=np.zeros(15), rating_noise_sd=0.0, seed=1)
        ratings = simulate_likert(p)
        non_anchor = [v for sid, (v, anchor) in ratings.items() if not anchor]
        assert set(non_anchor) == {0}

    def test_same_seed_same_ratings(self):
        p = paper_like_participant(12)
        assert simulate_likert(p) == simulate_likert(p)

    def test_anchors_are_perceived_extremes(self):
        p = paper_like_participant(4)
        perceived = p.perceived_utilities()
        ratings = simulate_likert(p)
        anchors = {sid for sid, (v, anchor) in ratings.items() if anchor}
        assert anchors == {int(np.argmax(perceived)), int(np.argmin(perceived))}
        assert ratings[int(np.argmax(perceived))][0] == 3
        assert ratings[int(np.argmin(perceived))][0] == -3

    def test_affine_map_pins_anchors(self):
        perceived = np.linspace(0, 1, 15)
        ratings = ratings_from_perceived(perceived, best=14, worst=0)
        assert ratings[14] == 3 and ratings[0] == -3
        assert all(-3 <= v <= 3 for v in ratings.values())


class TestSimulateChoice:
    def test_equal_utilities_near_half(self):
        p = SyntheticParticipant(utilities=np.zeros(2), seed=7)
        rng = p.choice_rng()
        wins = sum(simulate_choice(p, (0, 1), rng) == 0 for _ in range(10_000))
        assert wins / 10_000 == pytest.approx(0.5, abs=0.02)

    def test_two_to_one_rate(self):
        p = SyntheticParticipant(utilities=np.array([np.log(2), 0.0]),
                                 choice_temperature=1.0, seed=8)
        rng = p.choice_rng()
        wins = sum(simulate_choice(p, (0, 1), rng) == 0 for _ in range(10_000))
        assert wins / 10_000 == pytest.approx(2 / 3, abs=0.02)

    def test_deterministic_mode_always_picks_stronger(self):
        p = SyntheticParticipant(utilities=np.array([0.2, 0.9]),
                                 deterministic_choice=True, seed=9)
        assert all(simulate_choice(p, (0, 1)) == 1 for _ in range(20))
        assert all(simulate_choice(p, (1, 0)) == 1 for _ in range(20))


class TestRunSession:
    def test_noiseless_deterministic_recovers_order(self):
        rng = np.random.default_rng(100)
        for k in range(10):
            utilities = rng.normal(0, 1, 15)
            while len(np.unique(utilities)) < 15:
                utilities = rng.normal(0, 1, 15)
            p = SyntheticParticipant(utilities=utilities, rating_noise_sd=0.0,
                                     deterministic_choice=True, seed=k)
            _, result = run_session(p)
            metrics = recovery_metrics(utilities, result.after)
            assert metrics.kendall_tau == pytest.approx(1.0)
            assert metrics.top1_match

    def test_trial_identity_holds(self):
        for k in range(5):
            session, _ = run_session(paper_like_participant(k))
            schedule = session.schedule
            assert schedule.twice_pairs + schedule.once_pairs + schedule.omitted_pairs == 105
            assert schedule.total_trials == 2 * schedule.twice_pairs + schedule.once_pairs

    def test_deterministic_given_seed(self):
        a_session, a_result = run_session(paper_like_participant(77))
        b_session, b_result = run_session(paper_like_participant(77))
        assert a_session.state_digest() == b_session.state_digest()
        assert a_result.r == b_result.r

    def test_before_is_rating_vector(self):
        session, result = run_session(paper_like_participant(5))
        assert np.array_equal(result.before, session.rating_vector())
        assert result.after.min() == -3.0 and result.after.max() == 3.0


class TestRecoveryMetrics:
    def test_identical_orderings(self):
        metrics = recovery_metrics(np.arange(15.0), np.arange(15.0) * 2 + 1)
        assert metrics.kendall_tau == pytest.approx(1.0)
        assert metrics.spearman_rho == pytest.approx(1.0)
        assert metrics.top1_match

    def test_reversed(self):
        metrics = recovery_metrics(np.arange(15.0), -np.arange(15.0))
        assert metrics.kendall_tau == pytest.approx(-1.0)

    def test_adjacent_swap(self):
        # one discordant pair among C(15,2): tau = 1 - 2/105
        estimated = np.arange(15.0)
        estimated[0], estimated[1] = estimated[1], estimated[0]
        metrics = recovery_metrics(np.arange(15.0), estimated)
        assert metrics.kendall_tau == pytest.approx(1.0 - 2.0 / 105.0, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            recovery_metrics(np.arange(3.0), np.arange(4.0))


class TestCohort:
    def test_budget_savings_on_simulated_sessions(self):
        summary, sessions = run_cohort(20, base_seed=0, keep_sessions=True)
        for session in sessions:
            schedule = session.schedule
            assert schedule.total_trials <= 210
            if schedule.omitted_pairs > 0:
                assert schedule.total_trials < 105

    def test_recovery_degrades_with_temperature(self):
        temperatures = [0.5, 1.0, 2.0, 4.0]
        mean_taus = []
        for temp in temperatures:
            def factory(seed, temp=temp):
                rng = np.random.default_rng(seed)
                return SyntheticParticipant(
                    utilities=rng.uniform(0, 1, 15), choice_temperature=temp,
                    rating_noise_sd=0.1, seed=seed)
            summary, _ = run_cohort(100, base_seed=500, participant_factory=factory)
            mean_taus.append(summary.mean_tau)
        assert all(a >= b - 1e-9 for a, b in zip(mean_taus, mean_taus[1:]))
