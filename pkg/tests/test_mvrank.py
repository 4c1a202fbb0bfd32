import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fresh_mv_bundle, fresh_single_bundle, make_table
from mvforge.chartspec import ChartType, assign_encodings
from mvforge.errors import EmptyDataset, EmptyMV, LayoutError, PositionError, TooManyCharts
from mvforge.featurize import TableFeatures
from mvforge.mvrank import (
    MVState,
    MvScorer,
    chart_context_embedding,
    embed_mv,
    score_mv,
    train_mv,
)
from mvforge.pairgen import MvPair
from mvforge.ranker import SingleChartScorer, TrainConfig, pair_accuracy


@pytest.fixture
def six_col_table():
    rng = np.random.default_rng(0)
    return make_table(
        "six", {f"c{i}": [str(x) for x in rng.integers(0, 99, size=10)] for i in range(6)}
    )


def mv_of(table, *specs):
    mv = MVState()
    for cols, chart_type in specs:
        mv = mv.append(assign_encodings(table, cols, chart_type))
    return mv


def test_singleton_mv_embedding(six_col_table, single_scorer):
    mv = mv_of(six_col_table, ({0, 1}, ChartType.BAR))
    emb = embed_mv(mv, single_scorer, six_col_table)
    assert emb.shape == (1, 9)
    assert emb[0, 3] == 0.0  # type_diversity
    assert emb[0, 4] == 0.0  # overlap_mean
    assert emb[0, 5] == 1.0  # novel_column_ratio
    assert emb[0, 8] == 0.0  # duplicate_flag
    assert emb[0, 2] == pytest.approx(2 / 4)
    assert emb[0, 7] == pytest.approx(1 / 12)
    assert 0 < emb[0, 0] < 1 and 0 < emb[0, 1] < 1


def test_duplicate_charts_flagged(six_col_table, single_scorer):
    mv = mv_of(six_col_table, ({0, 1}, ChartType.BAR), ({0, 1}, ChartType.BAR))
    emb = embed_mv(mv, single_scorer, six_col_table)
    assert emb[0, 8] == 1.0 and emb[1, 8] == 1.0
    assert emb[0, 4] == 1.0 and emb[1, 4] == 1.0  # overlap_mean of identical sets


def test_hand_computed_overlap_and_coverage(six_col_table, single_scorer):
    mv = mv_of(six_col_table, ({0, 1}, ChartType.BAR), ({1, 2, 3}, ChartType.LINE))
    emb = embed_mv(mv, single_scorer, six_col_table)
    assert emb[1, 4] == pytest.approx(0.25)  # |{1}| / |{0,1,2,3}|
    assert emb[1, 6] == pytest.approx(2 / 6)  # columns 2,3 are new, table has 6
    assert emb[0, 6] == pytest.approx(2 / 6)  # first chart covers 0,1
    assert emb[1, 5] == pytest.approx(2 / 3)  # columns 2,3 of 3 are unshared
    assert emb[0, 3] == pytest.approx(1 - 1 / 2)  # types differ


def test_chart_context_embedding_position(six_col_table, single_scorer):
    mv = mv_of(six_col_table, ({0}, ChartType.BAR), ({1}, ChartType.PIE))
    full = embed_mv(mv, single_scorer, six_col_table)
    assert np.array_equal(chart_context_embedding(mv, 1, single_scorer, six_col_table), full[1])
    with pytest.raises(PositionError):
        chart_context_embedding(mv, 5, single_scorer, six_col_table)


def test_adding_duplicate_cannot_increase_coverage(six_col_table, single_scorer):
    base = mv_of(six_col_table, ({0, 1}, ChartType.BAR), ({2}, ChartType.LINE))
    base_cov = embed_mv(base, single_scorer, six_col_table)[:, 6].sum()
    dup = base.append(base.charts[0])
    dup_emb = embed_mv(dup, single_scorer, six_col_table)
    assert dup_emb[2, 8] == 1.0
    assert dup_emb[:, 6].sum() <= base_cov + 1e-12


def test_score_mv_zero_model(six_col_table, single_scorer):
    bundle = fresh_mv_bundle()
    for p in bundle.params.values():
        p[:] = 0.0
    scorer = MvScorer(bundle)
    mv = mv_of(six_col_table, ({0, 1}, ChartType.BAR))
    assert score_mv(scorer, mv, single_scorer, six_col_table) == pytest.approx(0.5)


def test_score_mv_size_limits(six_col_table, single_scorer, mv_scorer):
    with pytest.raises(EmptyMV):
        score_mv(mv_scorer, MVState(), single_scorer, six_col_table)
    with pytest.raises(TooManyCharts):
        mv = MVState()
        for i in range(13):
            mv = mv.append(assign_encodings(six_col_table, {i % 6}, ChartType.BAR))


def test_score_mv_deterministic(six_col_table, single_scorer, mv_scorer):
    mv = mv_of(six_col_table, ({0, 1}, ChartType.BAR), ({2, 3}, ChartType.LINE))
    a = score_mv(mv_scorer, mv, single_scorer, six_col_table)
    b = score_mv(mv_scorer, mv, single_scorer, six_col_table)
    assert a == b
    assert 0 < a < 1


def test_mv_scorer_guards():
    with pytest.raises(LayoutError):
        MvScorer(fresh_single_bundle())
    bad = fresh_mv_bundle()
    bad.layout_version = 42
    with pytest.raises(LayoutError):
        MvScorer(bad)


def _shared_property_setup():
    rng = np.random.default_rng(0)
    table = make_table(
        "six", {f"c{i}": [str(x) for x in rng.integers(0, 99, size=10)] for i in range(6)}
    )
    return table, SingleChartScorer(fresh_single_bundle(seed=11))


_PROP_TABLE, _PROP_SCORER = _shared_property_setup()


@given(st.integers(1, 12), st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_embedding_bounds_property(n_charts, rng_seed):
    rng = np.random.default_rng(rng_seed)
    mv = MVState()
    for _ in range(n_charts):
        k = int(rng.integers(1, 5))
        cols = tuple(sorted(rng.choice(6, size=k, replace=False).tolist()))
        chart_type = list(ChartType)[int(rng.integers(5))]
        mv = mv.append(assign_encodings(_PROP_TABLE, cols, chart_type))
    emb = embed_mv(mv, _PROP_SCORER, _PROP_TABLE)
    assert np.isfinite(emb).all()
    assert (emb[:, 2:] >= 0.0).all() and (emb[:, 2:] <= 1.0).all()


def test_train_mv_deterministic_and_learns():
    rng = np.random.default_rng(5)
    v = np.zeros(9)
    v[2:] = rng.normal(size=7)
    pairs = []
    while len(pairs) < 120:
        a = rng.random((int(rng.integers(1, 6)), 9))
        b = rng.random((int(rng.integers(1, 6)), 9))
        ua, ub = float(v @ a.mean(axis=0)), float(v @ b.mean(axis=0))
        if abs(ua - ub) < 0.4:  # separable planted pairs only
            continue
        if ua < ub:
            a, b = b, a
        pairs.append(MvPair(session_id=f"s{len(pairs) % 10}", pos_embeddings=a, neg_embeddings=b))
    config = TrainConfig(hidden_dim=16, head_dims=(8, 1), epochs=15, seed=2, batch_size=16)
    bundle = train_mv(pairs, config)
    assert bundle.kind == "mv"
    assert bundle.hyper["type_head_dims"] is None
    assert pair_accuracy(bundle, pairs) >= 0.9
    from mvforge.neural import save_bundle

    assert save_bundle(bundle) == save_bundle(train_mv(pairs, config))


def test_train_mv_empty():
    with pytest.raises(EmptyDataset):
        train_mv([], TrainConfig())


def test_mv_state_json_round_trip(six_col_table):
    mv = mv_of(six_col_table, ({0, 1}, ChartType.BAR), ({2}, ChartType.PIE))
    mv = MVState(charts=mv.charts, locked=frozenset({0}), layout=mv.layout)
    back = MVState.from_json(mv.to_json())
    assert back == mv
    assert back.identity() == mv.identity()
