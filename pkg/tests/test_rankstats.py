"""Rank aggregation against independent quantile oracles."""

import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vibrostim import (
    DomainError,
    ValidationError,
    aggregate_ranks,
    create_session,
    preset_battery,
    quantile_linear,
)


def _finalized_record(battery, ranking, seed=0, participant="P"):
    session = create_session(battery, participant, seed)
    for _ in range(len(battery)):
        session.advance_presentation()
    session.submit_ranking(ranking)
    for _ in range(len(battery)):
        session.advance_confirmation()
    return session.finalize()


@pytest.fixture
def battery():
    return preset_battery("paper")


def test_single_record_degenerate_boxes(battery):
    record = _finalized_record(battery, [2, 0, 1, 4, 3])
    agg = aggregate_ranks([record], battery)
    stats = agg.get(battery[2].id)
    assert stats.ranks == (1,)
    assert stats.median == 1.0
    assert stats.q1 == stats.q3 == 1.0
    assert stats.outliers == ()


def test_two_records_median_interpolates(battery):
    # stimulus index 0 is ranked 1st in one session, 3rd in the other
    rec_a = _finalized_record(battery, [0, 1, 2, 3, 4], seed=1)
    rec_b = _finalized_record(battery, [1, 2, 0, 3, 4], seed=2)
    agg = aggregate_ranks([rec_a, rec_b], battery)
    stats = agg.get(battery[0].id)
    assert stats.ranks == (1, 3)
    assert stats.median == 2.0


def test_quartiles_match_numpy_on_handmade_records(battery):
    rankings = [
        [0, 1, 2, 3, 4],
        [1, 0, 2, 3, 4],
        [2, 1, 0, 4, 3],
        [0, 2, 1, 3, 4],
        [4, 3, 2, 1, 0],
        [0, 1, 3, 2, 4],
    ]
    records = [_finalized_record(battery, r, seed=i) for i, r in enumerate(rankings)]
    agg = aggregate_ranks(records, battery)
    for stats in agg.per_stimulus:
        ranks = np.asarray(stats.ranks, dtype=float)
        assert stats.q1 == pytest.approx(np.percentile(ranks, 25), abs=1e-12)
        assert stats.median == pytest.approx(np.percentile(ranks, 50), abs=1e-12)
        assert stats.q3 == pytest.approx(np.percentile(ranks, 75), abs=1e-12)


def test_whiskers_and_outliers_tukey(battery):
    # four agreeing sessions and one flipping stimulus 0 to last place
    rankings = [[0, 1, 2, 3, 4]] * 4 + [[1, 2, 3, 4, 0]]
    records = [_finalized_record(battery, r, seed=i) for i, r in enumerate(rankings)]
    stats = aggregate_ranks(records, battery).get(battery[0].id)
    assert stats.ranks == (1, 1, 1, 1, 5)
    assert stats.q1 == 1.0 and stats.q3 == 1.0
    assert stats.whisker_low == 1.0 and stats.whisker_high == 1.0
    assert stats.outliers == (5,)


def test_aggregate_is_permutation_invariant(battery):
    rng = random.Random(7)
    rankings = []
    for _ in range(8):
        r = list(range(5))
        rng.shuffle(r)
        rankings.append(r)
    records = [_finalized_record(battery, r, seed=i) for i, r in enumerate(rankings)]
    agg_forward = aggregate_ranks(records, battery)
    shuffled = records[:]
    rng.shuffle(shuffled)
    agg_shuffled = aggregate_ranks(shuffled, battery)
    assert agg_forward == agg_shuffled


def test_aggregate_rejects_mixed_batteries(battery):
    record = _finalized_record(battery, [0, 1, 2, 3, 4])
    with pytest.raises(ValidationError):
        aggregate_ranks([record], ["other", "ids"])


def test_aggregate_requires_records(battery):
    with pytest.raises(DomainError):
        aggregate_ranks([], battery)


def test_every_session_contributes_one_rank_per_stimulus(battery):
    records = [_finalized_record(battery, [0, 1, 2, 3, 4], seed=i) for i in range(3)]
    agg = aggregate_ranks(records, battery)
    for stats in agg.per_stimulus:
        assert len(stats.ranks) == 3


@given(
    st.lists(st.floats(min_value=-100, max_value=100), min_size=1, max_size=50),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_quantile_linear_matches_numpy(values, q):
    ours = quantile_linear(values, q)
    theirs = float(np.percentile(np.asarray(values), q * 100, method="linear"))
    assert ours == pytest.approx(theirs, abs=1e-9)


def test_quantile_domain_errors():
    with pytest.raises(DomainError):
        quantile_linear([], 0.5)
    with pytest.raises(DomainError):
        quantile_linear([1.0], 1.5)
