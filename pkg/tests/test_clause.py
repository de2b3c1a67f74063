import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from async_tm import ClassBank, Clause, Mode, Polarity, evaluate_clause, literal_value
from async_tm.clause import OutputBitmap, encode_literal_matrix, encode_literals
from async_tm.exceptions import DatasetSchemaException
from async_tm.pool import vote_sum


def naive_output(clause: Clause, X, mode: Mode) -> int:
    included = clause.included_literals()
    if not included:
        return 1 if mode is Mode.TRAIN else 0
    return int(all(literal_value(X, k) == 1 for k in included))


@st.composite
def clause_and_input(draw, max_features=12):
    o = draw(st.integers(min_value=1, max_value=max_features))
    depth = draw(st.integers(min_value=1, max_value=8))
    states = draw(
        hnp.arrays(np.int32, 2 * o, elements=st.integers(1, 2 * depth))
    )
    X = draw(hnp.arrays(np.uint8, o, elements=st.integers(0, 1)))
    clause = Clause(Polarity.POSITIVE, o, depth=depth)
    clause.load_states(states)
    return clause, X


def test_literal_value_features_then_negations():
    X = [0, 1]
    assert [literal_value(X, k) for k in (1, 2, 3, 4)] == [0, 1, 1, 0]


@pytest.mark.parametrize("k", [0, 5, -1])
def test_literal_value_out_of_range(k):
    with pytest.raises(IndexError):
        literal_value([0, 1], k)


def test_encode_literals_mask():
    literals = encode_literals([1, 0, 1])
    assert literals.bits.tolist() == [1, 0, 1, 0, 1, 0]
    assert literals.mask == 0b010101


def test_encode_rejects_matrix():
    with pytest.raises(DatasetSchemaException):
        encode_literals(np.zeros((2, 2)))


def test_empty_clause_depends_on_mode(make_clause):
    clause = make_clause(3)
    assert evaluate_clause(clause, [0, 1, 0], Mode.TRAIN) == 1
    assert evaluate_clause(clause, [0, 1, 0], Mode.PREDICT) == 0


def test_conjunction_of_included_literals(make_clause):
    # x1 and not x2
    clause = make_clause(2, included=[1, 4])
    assert evaluate_clause(clause, [1, 0], Mode.PREDICT) == 1
    assert evaluate_clause(clause, [1, 1], Mode.PREDICT) == 0
    assert evaluate_clause(clause, [0, 0], Mode.TRAIN) == 0


def test_contradiction_never_fires(make_clause):
    clause = make_clause(1, included=[1, 2])
    assert evaluate_clause(clause, [0], Mode.TRAIN) == 0
    assert evaluate_clause(clause, [1], Mode.TRAIN) == 0


@given(clause_and_input())
def test_packed_evaluation_matches_naive(case):
    clause, X = case
    for mode in Mode:
        assert evaluate_clause(clause, X, mode) == naive_output(clause, X, mode)


@given(clause_and_input())
def test_evaluate_many_matches_single(case):
    clause, X = case
    literals = encode_literal_matrix(X[np.newaxis, :])
    for mode in Mode:
        many = clause.evaluate_many(literals.bits, mode)
        assert many.tolist() == [evaluate_clause(clause, X, mode)]


def test_load_states_validates_range():
    clause = Clause(Polarity.POSITIVE, 2, depth=4)
    with pytest.raises(DatasetSchemaException):
        clause.load_states([1, 2, 3, 9])
    with pytest.raises(DatasetSchemaException):
        clause.load_states([1, 2, 3])


def test_describe(make_clause):
    assert make_clause(2, included=[1, 4]).describe() == "x1 ∧ ¬x2"
    assert make_clause(2).describe() == "∅"


def test_bank_listing_counts_literals(make_clause):
    bank = ClassBank([make_clause(2, [1, 4]), make_clause(2, [], Polarity.NEGATIVE)])
    assert bank[0].include_count == 2
    assert bank.describe() == [
        "C1 (+, 2 literals): x1 ∧ ¬x2",
        "C2 (-, 0 literals): ∅",
    ]


def test_output_bitmap():
    bitmap = OutputBitmap(10)
    assert bitmap.nbytes == 2
    bitmap.set(9, 1)
    bitmap.set(3, 1)
    bitmap.set(3, 0)
    assert bitmap.get(9) == 1
    assert bitmap.get(3) == 0
    assert bitmap.to_bits().tolist() == [0] * 9 + [1]
    with pytest.raises(IndexError):
        bitmap.get(10)


def test_bank_polarity_alternates():
    bank = ClassBank.create(4, 2)
    assert bank.signs().tolist() == [1, -1, 1, -1]
    assert ClassBank.create(4, 2, all_positive=True).signs().tolist() == [1] * 4


def test_vote_sum_of_outputs(make_clause):
    # outputs (1, 0, 1, 0) with odd clauses positive
    bank = ClassBank(
        [
            make_clause(1, [1], Polarity.POSITIVE),
            make_clause(1, [2], Polarity.NEGATIVE),
            make_clause(1, [1], Polarity.POSITIVE),
            make_clause(1, [2], Polarity.NEGATIVE),
        ]
    )
    assert bank.outputs(encode_literals([1]), Mode.PREDICT) == [1, 0, 1, 0]
    assert vote_sum(bank, [1], Mode.PREDICT) == 2


def test_empty_bank_votes_zero_in_predict_mode():
    bank = ClassBank.create(6, 3)
    assert vote_sum(bank, [1, 0, 1], Mode.PREDICT) == 0
    # positive and negative empty clauses cancel while training
    assert vote_sum(bank, [1, 0, 1], Mode.TRAIN) == 0


@given(
    st.integers(min_value=1, max_value=6).flatmap(
        lambda o: st.tuples(
            hnp.arrays(np.int32, (6, 2 * o), elements=st.integers(1, 8)),
            hnp.arrays(np.uint8, (5, o), elements=st.integers(0, 1)),
        )
    )
)
def test_batch_vote_sums_match_per_example(case):
    states, X = case
    bank = ClassBank.create(6, X.shape[1], depth=4)
    for clause, row in zip(bank, states):
        clause.load_states(row)
    literals = encode_literal_matrix(X)
    for mode in Mode:
        expected = [bank.vote_sum(row, mode) for row in literals.rows]
        assert bank.vote_sums(literals.bits, mode).tolist() == expected


def test_checkpoint_restores_counters_outputs_and_version(make_clause):
    trained = make_clause(2, included=[1, 4], pool_size=10)
    trained.prev_output.set(7, 1)
    trained.version = 3
    fresh = make_clause(2, pool_size=10)
    fresh.restore(trained.checkpoint())
    assert fresh.included_literals() == [1, 4]
    assert fresh.include.tolist() == [True, False, False, True]
    assert fresh.prev_output.get(7) == 1
    assert fresh.version == 3
    with pytest.raises(DatasetSchemaException):
        make_clause(2, pool_size=100).restore(trained.checkpoint())
