import os
import time

import numpy as np
import pytest

from async_tm import (
    ClassBank,
    EpochReport,
    ExamplePool,
    Mode,
    MultiClassTM,
    TMConfig,
    classify,
    export_vote_sums,
    fit,
    refresh_tallies,
    train_epoch_parallel,
    train_epoch_sequential,
    update_clause,
)
from async_tm.clause import encode_literals
from async_tm.exceptions import DatasetSchemaException, InvalidConfigException
from async_tm.feedback import ClassificationPolicy, FeedbackRng
from async_tm.model_file import model_to_json
from async_tm.synth import synth_clause_patterns, synth_xor_split, xor_grid
from async_tm.trainer import PARALLEL, SEQUENTIAL, partition_clauses

SEEDS = [1, 2, 3, 4, 5]
# both parity runs together stay under five minutes
PARITY_SECONDS = 150


def load_bank(polarity_includes):
    """One included-literal list per clause, in bank order, over one feature."""
    bank = ClassBank.create(len(polarity_includes), 1)
    for clause, included in zip(bank, polarity_includes):
        states = np.full(2, clause.depth, dtype=np.int32)
        for k in included:
            states[k - 1] = clause.depth + 1
        clause.load_states(states)
    return bank


class TestUpdateClause:
    def prepare(self, label, tally):
        pool = ExamplePool(np.array([[1, 0]]), [label], number_of_tallies=2)
        pool.bind([ClassBank.create(2, 2), ClassBank.create(2, 2)])
        pool.tallies.set(0, 0, tally)
        clause = ClassBank.create(2, 2)[0]
        clause.attach(pool.size)
        return pool, clause

    def run(self, clause, pool, b, seed=1):
        policy = ClassificationPolicy(0, 5)
        return update_clause(clause, pool, 0, b, policy, 3.0, False, FeedbackRng(seed))

    def test_no_feedback_once_margin_is_reached(self):
        pool, clause = self.prepare(label=0, tally=5)
        stats = self.run(clause, pool, 10_000)
        assert stats.events == 0
        assert stats.skipped == 10_000
        assert clause.version == 0
        assert pool.tallies.get(0, 0) == 5

    def test_full_error_always_gates(self):
        pool, clause = self.prepare(label=0, tally=-5)
        stats = self.run(clause, pool, 1)
        assert stats.type_i == 1
        # the clause keeps firing, so its first recorded output lifts the tally
        assert pool.tallies.get(0, 0) == -4
        assert clause.prev_output.get(0) == 1

    def test_tally_follows_output_changes(self):
        pool, clause = self.prepare(label=1, tally=0)
        # y' = 0 on a positive clause: Type II on every gated step
        stats = self.run(clause, pool, 50, seed=2)
        assert stats.type_i == 0
        assert pool.tallies.get(0, 0) == clause.prev_output.get(0)

    def test_tally_tracks_the_clause_across_wraps(self):
        rng = np.random.default_rng(5)
        X = rng.integers(0, 2, size=(300, 4)).astype(np.uint8)
        pool = ExamplePool(X, rng.integers(0, 2, size=300), number_of_tallies=1)
        bank = ClassBank.create(2, 4)
        pool.bind([bank])
        clause = bank[0]
        policy = ClassificationPolicy(0, 5)
        order = rng.permutation(300)
        stats = update_clause(
            clause, pool, 0, 900, policy, 3.0, False, FeedbackRng(6), order, 170
        )
        assert stats.events + stats.skipped == 900
        assert stats.events > 0
        # a lone positive clause: every tally is its last recorded output
        assert np.array_equal(
            pool.tally_snapshot()[:, 0], clause.prev_output.to_bits()
        )

    def test_rejects_empty_batch(self):
        pool, clause = self.prepare(label=0, tally=0)
        with pytest.raises(ValueError):
            self.run(clause, pool, 0)


class TestClassify:
    def test_ties_go_to_lowest_class(self):
        config = TMConfig(clauses=10, margin=5)
        tm = MultiClassTM(config, 1, 3)
        negatives_firing = [[], [1], [], [1], [], [1], [], [], [], []]
        positives_firing = [[1], [], [1], [], [1], [], [1], [], [1], []]
        tm.banks = [
            load_bank(negatives_firing),
            load_bank(positives_firing),
            load_bank(positives_firing),
        ]
        assert export_vote_sums(tm, [1]).tolist() == [-3, 5, 5]
        assert classify(tm, [1]) == 1

    def test_untrained_model_votes_zero(self):
        tm = MultiClassTM(TMConfig(clauses=4), 3, 4)
        assert export_vote_sums(tm, [1, 0, 1]).tolist() == [0, 0, 0, 0]
        assert classify(tm, [1, 0, 1]) == 0

    def test_single_bank_unit_step(self):
        tm = MultiClassTM(TMConfig(clauses=4), 2, 2, single_bank=True)
        assert export_vote_sums(tm, [0, 1]).tolist() == [0]
        assert classify(tm, [0, 1]) == 1

    def test_vote_sums_match_banks(self):
        rng = np.random.default_rng(0)
        tm = MultiClassTM(TMConfig(clauses=6, depth=4), 4, 2)
        for bank in tm.banks:
            for clause in bank:
                clause.load_states(rng.integers(3, 7, size=8))
        X = [1, 0, 0, 1]
        literals = encode_literals(X)
        expected = [bank.vote_sum(literals, Mode.PREDICT) for bank in tm.banks]
        assert export_vote_sums(tm, X).tolist() == expected
        assert tm.predict(np.array([X])).tolist() == [classify(tm, X)]


def test_model_validation():
    with pytest.raises(InvalidConfigException):
        MultiClassTM(TMConfig(clauses=3), 2, 2)
    with pytest.raises(InvalidConfigException):
        MultiClassTM(TMConfig(), 2, 1)
    with pytest.raises(InvalidConfigException):
        MultiClassTM(TMConfig(), 2, 3, single_bank=True)
    tm = MultiClassTM(TMConfig(), 2, 2)
    with pytest.raises(DatasetSchemaException):
        tm.new_pool(np.array([[0, 1]]), [2])


def test_partition_is_round_robin():
    banks = [ClassBank.create(4, 1), ClassBank.create(2, 1)]
    shares = partition_clauses(banks, 4)
    assert [len(s) for s in shares] == [2, 2, 1, 1]
    pairs = sorted((c, j) for share in shares for _, c, j in share)
    assert pairs == [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (1, 1)]
    assert len(partition_clauses(banks, 10)) == 6


def test_sequential_epoch_report():
    X, y = xor_grid(5)
    tm = MultiClassTM(TMConfig(clauses=4, margin=2), 2, 2)
    pool = tm.new_pool(X, y)
    report = train_epoch_sequential(tm, pool, FeedbackRng(1), epoch=3)
    assert isinstance(report, EpochReport)
    assert report.epoch == 3
    assert report.duration > 0
    assert report.mode == SEQUENTIAL
    assert len(report.clause_changes) == 2
    assert report.feedback.events + report.feedback.skipped > 0


def test_single_example_vote_sum_is_bounded():
    tm = MultiClassTM(TMConfig(clauses=2, margin=1), 3, 2)
    pool = tm.new_pool(np.array([[1, 0, 1]]), [1])
    train_epoch_sequential(tm, pool, FeedbackRng(4))
    for v in export_vote_sums(tm, [1, 0, 1]):
        assert abs(v) <= 2


def test_zero_epochs_leave_the_model_unchanged():
    X, y = xor_grid(2)
    tm = MultiClassTM(TMConfig(clauses=4), 2, 2)
    before = model_to_json(tm)
    assert fit(tm, tm.new_pool(X, y), epochs=0) == []
    assert model_to_json(tm) == before


def test_sequential_xor_converges(xor_config):
    X, y = xor_grid(250)
    tm = MultiClassTM(xor_config, 2, 2)
    reports = fit(tm, tm.new_pool(X, y), mode=SEQUENTIAL, stop_when=1.0)
    assert len(reports) <= 50
    assert reports[-1].train_metric == 1.0


@pytest.mark.slow
@pytest.mark.parametrize("mode", [SEQUENTIAL, PARALLEL])
@pytest.mark.parametrize("seed", SEEDS)
def test_xor_converges_on_every_seed(xor_config, mode, seed):
    X, y = xor_grid(250)
    tm = MultiClassTM(xor_config.with_overrides(seed=seed), 2, 2)
    reports = fit(tm, tm.new_pool(X, y), mode=mode, workers=8, stop_when=1.0)
    assert reports[-1].train_metric == 1.0


@pytest.mark.parametrize("mode", [SEQUENTIAL, PARALLEL])
def test_fixed_seed_runs_are_identical(mode):
    X, y = synth_clause_patterns(120, features=10, classes=3, seed=3)

    def run():
        tm = MultiClassTM(TMConfig(clauses=6, margin=4, seed=9, workers=1), 10, 3)
        fit(tm, tm.new_pool(X, y), epochs=3, mode=mode, workers=1)
        return model_to_json(tm)

    assert run() == run()


def test_parallel_tallies_are_exact_after_refresh():
    X, y = xor_grid(20)
    tm = MultiClassTM(TMConfig(clauses=6, margin=3, seed=2), 2, 2)
    pool = tm.new_pool(X, y)
    train_epoch_parallel(tm, pool, workers=4)
    refresh_tallies(pool, tm.banks)
    expected = np.stack(
        [bank.vote_sums(pool.literals.bits, Mode.TRAIN) for bank in tm.banks], axis=1
    )
    assert np.array_equal(pool.tally_snapshot(), expected)


def test_parallel_margin_gating_counts():
    X = np.array([[1, 0]] * 10, dtype=np.uint8)
    y = np.zeros(10, dtype=np.int64)
    tm = MultiClassTM(TMConfig(clauses=4, margin=2, seed=1), 2, 2)
    pool = tm.new_pool(X, y)
    pool.bind(tm.banks)
    for i in range(10):
        pool.tallies.set(i, 0, 2)
        pool.tallies.set(i, 1, -2)
    report = train_epoch_parallel(tm, pool, workers=2)
    assert report.feedback.events == 0
    assert report.feedback.skipped == 2 * 4 * 10
    assert report.clause_changes == [0, 0]


def test_worker_errors_reach_the_caller():
    X, y = xor_grid(2)
    tm = MultiClassTM(TMConfig(clauses=4), 2, 2)

    class Broken(ClassificationPolicy):
        def goals(self, labels):
            raise RuntimeError("boom")

    tm.policy = lambda class_index: Broken(class_index, 5)
    with pytest.raises(RuntimeError, match="boom"):
        train_epoch_parallel(tm, tm.new_pool(X, y), workers=2)


def test_a_worker_that_dies_is_reported():
    X, y = xor_grid(2)
    tm = MultiClassTM(TMConfig(clauses=4), 2, 2)

    class Dying(ClassificationPolicy):
        def goals(self, labels):
            os._exit(3)

    tm.policy = lambda class_index: Dying(class_index, 5)
    with pytest.raises(RuntimeError, match="exited with code 3"):
        train_epoch_parallel(tm, tm.new_pool(X, y), workers=2)


def test_parallel_workers_hand_back_their_clauses():
    X, y = xor_grid(50)
    tm = MultiClassTM(TMConfig(clauses=8, margin=4, seed=3), 2, 2)
    pool = tm.new_pool(X, y)
    report = train_epoch_parallel(tm, pool, workers=4)
    assert report.workers == 4
    assert sum(report.clause_changes) > 0
    assert report.feedback.events + report.feedback.skipped == 16 * pool.size
    # outputs recorded in the workers came back with the clauses
    recorded = np.stack(
        [
            sum(
                clause.sign * clause.prev_output.to_bits().astype(np.int64)
                for clause in bank
            )
            for bank in tm.banks
        ],
        axis=1,
    )
    assert np.array_equal(pool.tally_snapshot(), recorded)


def test_fit_reports_test_metric_and_stops_early(xor_config):
    X, y, X_test, y_test = synth_xor_split(400, 200, seed=1)
    tm = MultiClassTM(xor_config, 2, 2)
    seen = []
    reports = fit(
        tm,
        tm.new_pool(X, y),
        epochs=30,
        test=(X_test, y_test),
        stop_when=0.0,
        on_epoch=seen.append,
    )
    assert len(reports) == 1
    assert seen == reports
    assert 0.0 <= reports[0].test_metric <= 1.0


def test_fit_rejects_unknown_mode():
    X, y = xor_grid(2)
    tm = MultiClassTM(TMConfig(clauses=4), 2, 2)
    with pytest.raises(ValueError):
        fit(tm, tm.new_pool(X, y), epochs=1, mode="gpu")


def mean_test_accuracy(mode, make_data, features, classes, config):
    scores = []
    for seed in SEEDS:
        X, y, X_test, y_test = make_data(seed)
        tm = MultiClassTM(config.with_overrides(seed=seed), features, classes)
        pool = tm.new_pool(X, y)
        reports = fit(tm, pool, mode=mode, workers=8, test=(X_test, y_test))
        scores.append(reports[-1].test_metric)
    return float(np.mean(scores))


@pytest.mark.slow
def test_parallel_matches_sequential_on_noisy_xor():
    config = TMConfig(clauses=20, margin=10, specificity=3.9, epochs=20)

    def data(seed):
        return synth_xor_split(5000, 5000, noise_rate=0.1, seed=seed)

    start = time.perf_counter()
    seq = mean_test_accuracy(SEQUENTIAL, data, 2, 2, config)
    par = mean_test_accuracy(PARALLEL, data, 2, 2, config)
    assert abs(par - seq) <= 0.02
    assert time.perf_counter() - start < PARITY_SECONDS


@pytest.mark.slow
def test_parallel_matches_sequential_on_clause_patterns():
    config = TMConfig(clauses=40, margin=15, specificity=3.9, epochs=20)

    def data(seed):
        X, y = synth_clause_patterns(5000, noise_rate=0.1, seed=seed)
        X_test, y_test = synth_clause_patterns(2000, seed=seed + 100)
        return X, y, X_test, y_test

    start = time.perf_counter()
    seq = mean_test_accuracy(SEQUENTIAL, data, 20, 4, config)
    par = mean_test_accuracy(PARALLEL, data, 20, 4, config)
    assert abs(par - seq) <= 0.02
    assert time.perf_counter() - start < PARITY_SECONDS
