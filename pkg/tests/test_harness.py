import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfalearn import (
    ExperimentConfig,
    InputError,
    LearnerSpec,
    TargetSpec,
    WeightedAutomaton,
    basis_success_experiment,
    exact_blocks,
    l1_error,
    length_k_basis,
    max_deviation,
    model_select,
    pnfa_to_wa,
    random_pnfa,
    run_learning_curve,
)
from wfalearn.harness import (
    ResultRecord,
    draw_target_in_stratum,
    exact_rank_on_basis,
    sigma_min_length1,
    target_rank,
    trial_target_and_sample,
)
from wfalearn.hankel import numerical_rank, random_basis
from wfalearn import draw_sample, empirical_blocks, svd_learn

from conftest import all_words, random_rank_target


def make_record(learner="svd", value=1.0, err=0.5, size=100, seed=0):
    return ResultRecord(
        target_digest="t",
        learner=learner,
        hyperparameter=value,
        sample_size=size,
        seed=seed,
        l1_error=err,
        tail_mass=0.0,
        wall_time_s=0.0,
        nuclear_norm=1.0,
    )


class TestL1Error:
    def test_self_comparison_is_zero(self, rng):
        target = random_pnfa(3, 2, rng)
        for bound in (1, 4, 8):
            err, _ = l1_error(target, pnfa_to_wa(target), bound)
            assert err <= 1e-10

    def test_zero_model_error_is_enumerated_mass(self, rng):
        target = random_pnfa(3, 2, rng)
        zero = WeightedAutomaton(np.zeros(1), np.zeros(1), (np.zeros((1, 1)), np.zeros((1, 1))))
        err, tail = l1_error(target, zero, 6)
        assert err == pytest.approx(1.0 - tail, abs=1e-10)

    def test_matches_naive_per_string_summation(self, rng):
        target = random_rank_target(rng, 3, 2)
        wa = pnfa_to_wa(target)
        blocks = exact_blocks(wa, length_k_basis(2, 1))
        learned = svd_learn(blocks, 2)
        err, tail = l1_error(target, learned, 6)
        naive_err = sum(abs(wa.evaluate(w) - learned.evaluate(w)) for w in all_words(2, 6))
        naive_tail = 1.0 - sum(wa.evaluate(w) for w in all_words(2, 6))
        assert err == pytest.approx(naive_err, abs=1e-10)
        assert tail == pytest.approx(naive_tail, abs=1e-10)

    def test_alphabet_mismatch_rejected(self, rng):
        target = random_pnfa(2, 2, rng)
        other = pnfa_to_wa(random_pnfa(2, 3, rng))
        with pytest.raises(InputError):
            l1_error(target, other, 4)

    def test_enumeration_cap(self, rng):
        target = random_pnfa(2, 10, rng)
        with pytest.raises(InputError):
            l1_error(target, pnfa_to_wa(target), 8)

    def test_max_deviation_agrees_with_naive(self, rng):
        a = pnfa_to_wa(random_pnfa(3, 2, rng))
        b = pnfa_to_wa(random_pnfa(2, 2, rng))
        naive = max(abs(a.evaluate(w) - b.evaluate(w)) for w in all_words(2, 5))
        assert max_deviation(a, b, 5) == pytest.approx(naive, abs=1e-12)


class TestModelSelect:
    def test_single_record(self):
        assert model_select([make_record(value=4.0)]) == 4.0

    def test_tie_breaks_toward_smaller_state_count(self):
        records = [
            make_record(value=2.0, err=0.5),
            make_record(value=3.0, err=0.1),
            make_record(value=4.0, err=0.1),
        ]
        assert model_select(records) == 3.0

    def test_tie_breaks_toward_larger_regularization(self):
        records = [
            make_record(learner="co", value=10.0, err=0.1),
            make_record(learner="co", value=100.0, err=0.1),
            make_record(learner="co", value=1.0, err=0.4),
        ]
        assert model_select(records) == 100.0

    def test_empty_and_mixed_sweeps_rejected(self):
        with pytest.raises(InputError):
            model_select([])
        with pytest.raises(InputError):
            model_select([make_record(learner="svd"), make_record(learner="co")])

    @given(
        st.lists(
            st.tuples(st.sampled_from([1.0, 2.0, 3.0, 4.0]), st.floats(0, 1, allow_nan=False)),
            min_size=1,
            max_size=12,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_matches_exhaustive_scan(self, pairs):
        records = [make_record(value=v, err=e) for v, e in pairs]
        best = min(records, key=lambda r: (r.l1_error, r.hyperparameter))
        assert model_select(records) == best.hyperparameter


class TestTargetStratification:
    def test_bounds_are_respected(self, rng):
        lo, hi = 1e-4, 1e-2
        for seed in range(3):
            p = draw_target_in_stratum(4, 2, np.random.default_rng(seed), 1.0, lo, hi)
            assert lo <= sigma_min_length1(p) < hi

    def test_unreachable_stratum_rejected(self):
        with pytest.raises(InputError):
            draw_target_in_stratum(2, 2, np.random.default_rng(0), 1.0, 50.0, 60.0)


class TestRunLearningCurve:
    def small_config(self, **overrides):
        base = dict(
            target=TargetSpec(kind="random", n_states=3, alphabet_size=2),
            sizes=(200, 400),
            learners=(LearnerSpec(method="svd", values=(1.0, 2.0)),),
            estimator="word",
            length_bound=5,
            trials=2,
            seed=9,
        )
        base.update(overrides)
        return ExperimentConfig(**base)

    def test_single_cell_yields_single_record(self):
        config = self.small_config(sizes=(100,), trials=1, learners=(LearnerSpec("svd", (2.0,)),))
        records = run_learning_curve(config)
        assert len(records) == 1
        r = records[0]
        assert r.learner == "svd" and r.sample_size == 100 and r.hyperparameter == 2.0
        assert r.l1_error >= 0.0 and 0.0 <= r.tail_mass <= 1.0

    def test_record_grid_is_complete_and_sorted(self):
        records = run_learning_curve(self.small_config())
        assert len(records) == 2 * 2 * 2
        keys = [r.key() for r in records]
        assert keys == sorted(keys)

    def test_deterministic_given_config(self):
        a = run_learning_curve(self.small_config())
        b = run_learning_curve(self.small_config())
        assert [(r.key(), r.l1_error, r.nuclear_norm, r.target_digest) for r in a] == [
            (r.key(), r.l1_error, r.nuclear_norm, r.target_digest) for r in b
        ]

    def test_smaller_sizes_use_prefix_of_largest_sample(self):
        # Recompute the 200-size record by hand from the stored full sample.
        config = self.small_config(trials=1, learners=(LearnerSpec("svd", (2.0,)),))
        records = run_learning_curve(config)
        target, full = trial_target_and_sample(config, 0)
        sub = full.prefix(200)
        blocks = empirical_blocks(sub, length_k_basis(2, config.basis.k), "word")
        expected_err, expected_tail = l1_error(target, svd_learn(blocks, 2), 5)
        small = [r for r in records if r.sample_size == 200][0]
        assert small.l1_error == expected_err
        assert small.tail_mass == expected_tail

    def test_em_learner_integration(self):
        config = self.small_config(
            sizes=(150,),
            trials=1,
            learners=(LearnerSpec(method="em", values=(2.0,), max_iter=10),),
        )
        records = run_learning_curve(config)
        assert len(records) == 1
        assert records[0].learner == "em"
        assert np.isfinite(records[0].l1_error)

    def test_co_learner_integration_with_default_grid(self):
        from wfalearn import DEFAULT_TAU_GRID

        config = self.small_config(
            sizes=(150,),
            trials=1,
            learners=(LearnerSpec(method="co", values=(), max_iter=2000),),
        )
        records = run_learning_curve(config)
        assert len(records) == len(DEFAULT_TAU_GRID)
        assert all(np.isfinite(r.l1_error) for r in records)

    def test_invalid_configs_rejected(self):
        with pytest.raises(InputError):
            self.small_config(sizes=())
        with pytest.raises(InputError):
            self.small_config(learners=())
        with pytest.raises(InputError):
            self.small_config(estimator="letter")
        with pytest.raises(InputError):
            LearnerSpec(method="svd", values=())


class TestBasisSuccess:
    def test_single_string_sample_cannot_reach_rank_three(self, rng):
        target = random_rank_target(rng, 3, 2)
        rows = basis_success_experiment(target, sizes=(1,), trials=20, seed=0)
        assert rows[0].rate == 0.0

    def test_rank_oracle_matches_block_construction(self, rng):
        target = random_rank_target(rng, 3, 2)
        wa = pnfa_to_wa(target)
        for seed in range(5):
            sample = draw_sample(target, 50, np.random.default_rng(seed))
            basis = random_basis(sample, np.random.default_rng(seed + 100))
            direct = numerical_rank(exact_blocks(wa, basis).h)
            assert exact_rank_on_basis(wa, basis) == direct

    def test_target_rank_probe(self, rng):
        target = random_rank_target(rng, 3, 2)
        assert target_rank(target) == 3
        assert target_rank(target) <= target.n_states

    def test_row_bookkeeping(self, rng):
        target = random_rank_target(rng, 2, 2)
        rows = basis_success_experiment(target, sizes=(5, 50), trials=10, seed=1)
        assert [r.sample_size for r in rows] == [5, 50]
        for row in rows:
            assert row.trials == 10
            assert 0 <= row.successes <= 10
            assert row.rate == row.successes / 10
