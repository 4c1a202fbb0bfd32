import itertools
import math

import numpy as np
import pytest

from conftest import make_table
from mvforge.chartspec import ChartType, assign_encodings, chart_identity
from mvforge.errors import InfeasibleRequest
from mvforge.featurize import TableFeatures
from mvforge.mvrank import MVState, embed_mv
from mvforge.recommend import chart_ideas, enumerate_candidates, recommend_mv


@pytest.fixture
def four_col_table():
    rng = np.random.default_rng(1)
    return make_table(
        "four", {f"c{i}": [str(x) for x in rng.integers(0, 99, size=12)] for i in range(4)}
    )


def test_pool_size_dedup(four_col_table, single_scorer):
    pool = enumerate_candidates(four_col_table, single_scorer, dedup=True)
    assert len(pool) == 15  # C(4,1) + C(4,2) + C(4,3) + C(4,4)
    scores = [c.s_data for c in pool]
    assert scores == sorted(scores, reverse=True)
    identities = {chart_identity(c.spec) for c in pool}
    assert len(identities) == 15


def test_pool_size_no_dedup(single_scorer):
    table = make_table("one", {"only": ["1", "2", "3"]})
    dedup_pool = enumerate_candidates(table, single_scorer, dedup=True)
    assert len(dedup_pool) == 1
    full_pool = enumerate_candidates(table, single_scorer, dedup=False)
    assert len(full_pool) == 5  # one per chart type
    overall = [c.s_overall() for c in full_pool]
    assert overall == sorted(overall, reverse=True)


def test_pool_max_cap(four_col_table, single_scorer):
    pool = enumerate_candidates(four_col_table, single_scorer, dedup=True, max_pool=6)
    assert len(pool) == 6


def test_recommend_locked_first(four_col_table, single_scorer, mv_scorer):
    locked = [assign_encodings(four_col_table, {0, 1}, ChartType.BAR)]
    mv = recommend_mv(four_col_table, 3, locked, single_scorer, mv_scorer)
    assert len(mv.charts) == 3
    assert mv.charts[0] == locked[0]
    assert 0 in mv.locked
    identities = [chart_identity(c) for c in mv.charts]
    assert len(set(identities)) == 3


def test_recommend_n_equals_locked(four_col_table, single_scorer, mv_scorer):
    locked = [
        assign_encodings(four_col_table, {0}, ChartType.PIE),
        assign_encodings(four_col_table, {1, 2}, ChartType.LINE),
    ]
    mv = recommend_mv(four_col_table, 2, locked, single_scorer, mv_scorer)
    assert list(mv.charts) == locked


def test_recommend_infeasible(four_col_table, single_scorer, mv_scorer):
    locked = [assign_encodings(four_col_table, {0}, ChartType.BAR)]
    with pytest.raises(InfeasibleRequest):
        recommend_mv(four_col_table, 0, [], single_scorer, mv_scorer)
    with pytest.raises(InfeasibleRequest):
        recommend_mv(four_col_table, 13, [], single_scorer, mv_scorer)
    with pytest.raises(InfeasibleRequest):
        # pool has 15 candidates; one is consumed by the locked chart's identity
        recommend_mv(four_col_table, 16, locked, single_scorer, mv_scorer)


def test_greedy_with_modular_stub_matches_brute_force(four_col_table, single_scorer,
                                                      stub_mv_scorer):
    """With an additive scorer the greedy output must be globally optimal."""
    features = TableFeatures.from_table(four_col_table)
    pool = enumerate_candidates(features, single_scorer, dedup=True, max_pool=10)
    for n in (1, 2, 3):
        mv = recommend_mv(features, n, [], single_scorer, stub_mv_scorer, pool=pool)
        greedy_score = float(
            np.mean(embed_mv(mv, single_scorer, features)[:, 0])
        )
        best = -math.inf
        for combo in itertools.combinations(list(pool), n):
            candidate = MVState()
            for cand in combo:
                candidate = candidate.append(cand.spec)
            score = float(np.mean(embed_mv(candidate, single_scorer, features)[:, 0]))
            best = max(best, score)
        assert greedy_score == pytest.approx(best, abs=1e-12), n


def test_greedy_each_step_is_one_step_argmax(four_col_table, single_scorer, mv_scorer):
    features = TableFeatures.from_table(four_col_table)
    pool = enumerate_candidates(features, single_scorer, dedup=True)
    mv = recommend_mv(features, 4, [], single_scorer, mv_scorer, pool=pool)
    prefix = MVState()
    for step in range(4):
        used = {chart_identity(c) for c in prefix.charts}
        available = [c for c in pool if chart_identity(c.spec) not in used]
        scores = mv_scorer.score_sequences(
            [embed_mv(prefix.append(c.spec), single_scorer, features) for c in available]
        )
        chosen = mv.charts[step]
        chosen_idx = next(
            i for i, c in enumerate(available) if chart_identity(c.spec) == chart_identity(chosen)
        )
        assert scores[chosen_idx] == pytest.approx(float(scores.max()), abs=1e-15), step
        prefix = prefix.append(chosen)


def test_recommend_deterministic(four_col_table, single_scorer, mv_scorer):
    a = recommend_mv(four_col_table, 3, [], single_scorer, mv_scorer)
    b = recommend_mv(four_col_table, 3, [], single_scorer, mv_scorer)
    assert a.to_json() == b.to_json()


def test_chart_ideas_must_include(four_col_table, single_scorer, mv_scorer):
    ideas = chart_ideas(
        four_col_table, MVState(), must_include={2}, single_scorer=single_scorer,
        mv_scorer=mv_scorer, limit=50,
    )
    assert ideas
    for spec, _ in ideas:
        assert 2 in spec.column_indices


def test_chart_ideas_excludes_current(four_col_table, single_scorer, mv_scorer):
    mv = MVState().append(assign_encodings(four_col_table, {0, 1}, ChartType.BAR))
    ideas = chart_ideas(four_col_table, mv, single_scorer=single_scorer, mv_scorer=mv_scorer,
                        limit=50)
    assert all(chart_identity(spec) != ((0, 1)) for spec, _ in ideas)
    assert all(set(spec.column_indices) != {0, 1} for spec, _ in ideas)


def test_chart_ideas_top1_matches_greedy(four_col_table, single_scorer, mv_scorer):
    mv = MVState().append(assign_encodings(four_col_table, {0}, ChartType.BAR))
    ideas = chart_ideas(four_col_table, mv, single_scorer=single_scorer, mv_scorer=mv_scorer,
                        limit=5)
    extended = recommend_mv(four_col_table, 2, list(mv.charts), single_scorer, mv_scorer)
    assert chart_identity(ideas[0][0]) == chart_identity(extended.charts[1])


def test_chart_ideas_empty_mv_ranked_by_s_data(four_col_table, single_scorer, mv_scorer):
    pool = enumerate_candidates(four_col_table, single_scorer, dedup=True)
    ideas = chart_ideas(four_col_table, MVState(), single_scorer=single_scorer,
                        mv_scorer=mv_scorer, limit=3)
    assert [chart_identity(spec) for spec, _ in ideas] == [
        chart_identity(c.spec) for c in list(pool)[:3]
    ]
    assert [score for _, score in ideas] == [c.s_data for c in list(pool)[:3]]


def test_chart_ideas_exhausted_pool(single_scorer, mv_scorer):
    table = make_table("one", {"only": ["1", "2", "3"]})
    mv = MVState().append(assign_encodings(table, {0}, ChartType.BAR))
    ideas = chart_ideas(table, mv, single_scorer=single_scorer, mv_scorer=mv_scorer, limit=5)
    assert ideas == []


def test_chart_ideas_dedup_off_lists_type_variants(four_col_table, single_scorer, mv_scorer):
    mv = MVState().append(assign_encodings(four_col_table, {0, 1}, ChartType.BAR))
    ideas = chart_ideas(four_col_table, mv, dedup=False, single_scorer=single_scorer,
                        mv_scorer=mv_scorer, limit=100)
    with_01 = [spec for spec, _ in ideas if spec.column_indices == (0, 1)]
    assert len(with_01) == 4  # the bar variant is in the dashboard; others listed
    assert ChartType.BAR not in {spec.chart_type for spec in with_01}
