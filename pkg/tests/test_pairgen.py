import itertools

import numpy as np
import pytest

from conftest import fresh_single_bundle, make_table
from mvforge.chartspec import ChartType, assign_encodings, chart_identity
from mvforge.errors import InsufficientHistory
from mvforge.featurize import TableFeatures
from mvforge.mvrank import MVState
from mvforge.pairgen import (
    MvPair,
    PairGenStats,
    corpus_pairs,
    mv_pair_record,
    provenance_pairs,
    read_chart_pairs,
    read_mv_pairs,
    write_chart_pairs,
    write_mv_pairs,
)
from mvforge.provenance import AuthoringSession
from mvforge.ranker import SingleChartScorer


def numeric_table(name, n_cols, n_rows=8, seed=0):
    rng = np.random.default_rng(seed)
    return make_table(
        name, {f"c{i}": [str(x) for x in rng.integers(0, 99, size=n_rows)] for i in range(n_cols)}
    )


def brute_force_pair_count(n_cols, ground_truths):
    """Independent enumerator: subsets via bitmasks, same-cardinality rule."""
    gt_sets = {frozenset(g) for g, _ in ground_truths}
    total = 0
    for g, _ in ground_truths:
        if not 1 <= len(g) <= 4:
            continue
        k = len(g)
        for mask in range(1, 2**n_cols):
            subset = frozenset(i for i in range(n_cols) if mask >> i & 1)
            if len(subset) == k and subset not in gt_sets:
                total += 1
    return total


def test_five_column_one_gt():
    table = numeric_table("t", 5)
    pairs, stats = corpus_pairs(table, [((0, 1), ChartType.BAR)])
    assert len(pairs) == 9  # C(5,2) - 1
    assert stats.pairs_emitted == 9
    assert all(p.pos.column_indices == (0, 1) for p in pairs)
    assert all(p.pos_type is ChartType.BAR for p in pairs)


def test_eleven_column_table_skipped():
    table = numeric_table("wide", 11)
    pairs, stats = corpus_pairs(table, [((0, 1), ChartType.BAR)])
    assert pairs == []
    assert stats.tables_skipped_wide == 1
    assert stats.pairs_emitted == 0


def test_wide_ground_truth_skipped():
    table = numeric_table("t", 6)
    pairs, stats = corpus_pairs(
        table, [((0, 1, 2, 3, 4), ChartType.BAR), ((0,), ChartType.LINE)]
    )
    assert stats.charts_skipped_wide == 1
    assert len(pairs) == 5  # only the 1-column ground truth pairs


def test_two_ground_truths_shared_cardinality():
    table = numeric_table("t", 4)
    gts = [((0, 1), ChartType.BAR), ((2, 3), ChartType.LINE)]
    pairs, _ = corpus_pairs(table, gts)
    # each pairs against C(4,2) - 2 = 4 negatives
    assert len(pairs) == 8
    per_pos = {}
    for p in pairs:
        per_pos.setdefault(p.pos.column_indices, []).append(p)
    assert {k: len(v) for k, v in per_pos.items()} == {(0, 1): 4, (2, 3): 4}
    neg_ids = {chart_identity(assign_encodings(table, p.neg.column_indices, ChartType.BAR))
               for p in pairs}
    assert (0, 1) not in neg_ids and (2, 3) not in neg_ids


def test_no_self_pairs_random_tables():
    rng = np.random.default_rng(3)
    for trial in range(30):
        n_cols = int(rng.integers(3, 11))
        table = numeric_table(f"t{trial}", n_cols, seed=trial)
        n_gts = int(rng.integers(1, 4))
        gts = []
        seen = set()
        while len(gts) < n_gts:
            k = int(rng.integers(1, min(4, n_cols) + 1))
            cols = tuple(sorted(rng.choice(n_cols, size=k, replace=False).tolist()))
            if cols not in seen:
                seen.add(cols)
                gts.append((cols, ChartType.BAR))
        pairs, _ = corpus_pairs(table, gts)
        assert len(pairs) == brute_force_pair_count(n_cols, gts)
        for p in pairs:
            assert p.pos.column_indices != p.neg.column_indices


def test_cap_per_ground_truth():
    table = numeric_table("t", 8)
    pairs, _ = corpus_pairs(table, [((0, 1), ChartType.BAR)], cap_per_ground_truth=5, seed=1)
    assert len(pairs) == 5
    again, _ = corpus_pairs(table, [((0, 1), ChartType.BAR)], cap_per_ground_truth=5, seed=1)
    assert [p.neg.column_indices for p in pairs] == [p.neg.column_indices for p in again]


def test_filter_accounting_exact():
    stats = PairGenStats()
    tables = [numeric_table("a", 11), numeric_table("b", 5), numeric_table("c", 3)]
    gt_lists = [
        [((0, 1), ChartType.BAR)],
        [((0, 1, 2, 3, 4), ChartType.BAR), ((0,), ChartType.PIE)],
        [((0, 2), ChartType.LINE)],
    ]
    total = 0
    for table, gts in zip(tables, gt_lists):
        pairs, stats = corpus_pairs(table, gts, stats=stats)
        total += len(pairs)
    assert stats.tables_seen == 3
    assert stats.tables_skipped_wide == 1
    assert stats.charts_seen == 3  # wide table's charts never reach the chart filter
    assert stats.charts_skipped_wide == 1
    assert stats.pairs_emitted == total


def test_chart_pairs_jsonl_round_trip(tmp_path):
    table = numeric_table("t", 5)
    features = TableFeatures.from_table(table)
    pairs, _ = corpus_pairs(features, [((0, 1), ChartType.LINE)])
    path = tmp_path / "pairs.jsonl"
    write_chart_pairs(pairs, {features.table_id: features}, path)
    assert (tmp_path / "pairs.jsonl.features.json").exists()
    back = read_chart_pairs(path)
    assert len(back) == len(pairs)
    assert back[0].pos == pairs[0].pos
    assert back[0].pos_type is ChartType.LINE
    assert back[0].source == "corpus"


def session_with_snapshots(mvs, features):
    session = AuthoringSession("s1", features, consent=True)
    session.record("upload_table", {"table_id": features.table_id, "name": features.name})
    for mv in mvs:
        session.record("recommend_mv_request", {"n_charts": len(mv.charts), "mv": mv.to_json()})
    session.saved = True
    return session.export_log()


def mv_of(table, *col_sets, chart_type=ChartType.BAR):
    mv = MVState()
    for cols in col_sets:
        mv = mv.append(assign_encodings(table, cols, chart_type))
    return mv


def test_provenance_pairs_final_vs_intermediates():
    table = numeric_table("t", 6)
    features = TableFeatures.from_table(table)
    scorer = SingleChartScorer(fresh_single_bundle())
    v1 = mv_of(table, {0})
    v2 = mv_of(table, {0}, {1, 2})
    v3 = mv_of(table, {0}, {1, 2}, {3})
    log = session_with_snapshots([v1, v2, v3], features)
    pairs, stats = provenance_pairs(log, scorer)
    assert len(pairs) == 2
    assert stats.pairs_emitted == 2
    assert all(p.source == "provenance" for p in pairs)
    assert all(len(p.pos_embeddings) == 3 for p in pairs)
    assert {len(p.neg_embeddings) for p in pairs} == {1, 2}


def test_provenance_pairs_duplicate_snapshot_collapses():
    table = numeric_table("t", 6)
    features = TableFeatures.from_table(table)
    scorer = SingleChartScorer(fresh_single_bundle())
    v1 = mv_of(table, {0})
    v2 = mv_of(table, {1, 2})
    log = session_with_snapshots([v1, v1, v2], features)
    pairs, _ = provenance_pairs(log, scorer)
    assert len(pairs) == 1


def test_provenance_pairs_insufficient_history():
    table = numeric_table("t", 6)
    features = TableFeatures.from_table(table)
    scorer = SingleChartScorer(fresh_single_bundle())
    log = session_with_snapshots([mv_of(table, {0})], features)
    with pytest.raises(InsufficientHistory):
        provenance_pairs(log, scorer)


def test_provenance_pairs_no_intermediate_ranking():
    """Only final-vs-intermediate pairs come out, never intermediate pairs."""
    table = numeric_table("t", 6)
    features = TableFeatures.from_table(table)
    scorer = SingleChartScorer(fresh_single_bundle())
    versions = [mv_of(table, {0}), mv_of(table, {1}), mv_of(table, {2}), mv_of(table, {0, 1})]
    log = session_with_snapshots(versions, features)
    pairs, _ = provenance_pairs(log, scorer)
    assert len(pairs) == 3
    final_embedding = pairs[0].pos_embeddings
    for p in pairs:
        assert np.array_equal(p.pos_embeddings, final_embedding)


def test_mv_pairs_jsonl_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    pairs = [
        MvPair(
            session_id=f"s{i}",
            pos_embeddings=rng.random((3, 9)),
            neg_embeddings=rng.random((2, 9)),
        )
        for i in range(3)
    ]
    path = tmp_path / "mv.jsonl"
    write_mv_pairs(pairs, path)
    back = read_mv_pairs(path)
    assert len(back) == 3
    for orig, restored in zip(pairs, back):
        assert orig.session_id == restored.session_id
        assert np.array_equal(orig.pos_embeddings, restored.pos_embeddings)
        assert np.array_equal(orig.neg_embeddings, restored.neg_embeddings)
    rec = mv_pair_record(pairs[0])
    assert rec["source"] == "provenance"
    assert len(rec["pos"]["embeddings"][0]) == 9
