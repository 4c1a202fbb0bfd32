"""Ranked-pair construction from chart corpora and provenance logs.

Corpus pairing treats each ground-truth chart as better than every other
column subset of the same cardinality in its table; tables wider than ten
columns and ground truths wider than four columns are filtered out, with
counters so the accounting is auditable. Provenance pairing marks a
session's final dashboard as better than each distinct intermediate
version, ignoring orderings among intermediates.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .chartspec import ChartType
from .errors import InsufficientHistory
from .featurize import ChartInput, TableFeatures, _as_features, build_chart_input
from .mvrank import embed_mv
from .provenance import ProvenanceLog

MAX_TABLE_COLUMNS = 10
MAX_CHART_COLUMNS = 4


@dataclass(eq=False)
class RankedPair:
    """One ranked chart pair: positive beats negative, same table."""

    table_id: str
    pos: ChartInput
    neg: ChartInput
    pos_type: ChartType = None
    source: str = "corpus"

    def pos_matrix(self):
        return self.pos.matrix()

    def neg_matrix(self):
        return self.neg.matrix()

    def pos_flat(self):
        return self.pos.padded_matrix().ravel()

    def neg_flat(self):
        return self.neg.padded_matrix().ravel()


@dataclass(eq=False)
class MvPair:
    """One ranked dashboard pair, stored as 9-dim embedding sequences."""

    session_id: str
    pos_embeddings: np.ndarray
    neg_embeddings: np.ndarray
    source: str = "provenance"

    @property
    def table_id(self):  # lets the MCCV harness group MV pairs by session
        return self.session_id

    def pos_matrix(self):
        return self.pos_embeddings

    def neg_matrix(self):
        return self.neg_embeddings

    def pos_flat(self):
        return _pad_mv_flat(self.pos_embeddings)

    def neg_flat(self):
        return _pad_mv_flat(self.neg_embeddings)


def _pad_mv_flat(embeddings, max_len=12):
    padded = np.zeros((max_len, embeddings.shape[1]))
    padded[: len(embeddings)] = embeddings
    return padded.ravel()


@dataclass
class PairGenStats:
    tables_seen: int = 0
    tables_skipped_wide: int = 0
    charts_seen: int = 0
    charts_skipped_wide: int = 0
    pairs_emitted: int = 0
    sessions_seen: int = 0
    sessions_skipped_short: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def corpus_pairs(source, ground_truth_charts, cap_per_ground_truth=None, seed=0,
                 stats: PairGenStats = None):
    """Pairs for one table: each ground truth vs every same-size column subset.

    ``ground_truth_charts`` is a list of (column indices, ChartType). Other
    ground truths never appear as negatives. Tables wider than 10 columns
    yield no pairs; ground truths wider than 4 columns are skipped. With
    ``cap_per_ground_truth`` set, negatives are subsampled deterministically.
    """
    features = _as_features(source)
    stats = stats if stats is not None else PairGenStats()
    stats.tables_seen += 1
    if features.n_columns > MAX_TABLE_COLUMNS:
        stats.tables_skipped_wide += 1
        return [], stats

    kept = []
    gt_sets = set()
    for columns, chart_type in ground_truth_charts:
        stats.charts_seen += 1
        cols = tuple(sorted(set(columns)))
        if not 1 <= len(cols) <= MAX_CHART_COLUMNS:
            stats.charts_skipped_wide += 1
            continue
        kept.append((cols, ChartType(chart_type)))
        gt_sets.add(cols)

    rng = np.random.default_rng(seed)
    pairs = []
    for cols, chart_type in kept:
        k = len(cols)
        negatives = [
            sub
            for sub in itertools.combinations(range(features.n_columns), k)
            if sub not in gt_sets
        ]
        if cap_per_ground_truth is not None and len(negatives) > cap_per_ground_truth:
            chosen = rng.choice(len(negatives), size=cap_per_ground_truth, replace=False)
            negatives = [negatives[i] for i in sorted(chosen)]
        pos_input = build_chart_input(features, cols)
        for sub in negatives:
            pairs.append(
                RankedPair(
                    table_id=features.table_id,
                    pos=pos_input,
                    neg=build_chart_input(features, sub),
                    pos_type=chart_type,
                    source="corpus",
                )
            )
    stats.pairs_emitted += len(pairs)
    return pairs, stats


def provenance_pairs(log: ProvenanceLog, single_scorer, stats: PairGenStats = None):
    """Pairs from one session: final dashboard vs each distinct intermediate.

    Dashboards are distinct under their identity (multiset of column sets +
    chart types); empty snapshots are not dashboards and are ignored, as are
    intermediates identical to the final version. Partial orderings among
    intermediates are deliberately not emitted.
    """
    stats = stats if stats is not None else PairGenStats()
    stats.sessions_seen += 1
    features = log.table_features()
    snapshots = [mv for _, mv in log.snapshots() if len(mv.charts) > 0]

    distinct = {}
    for mv in snapshots:
        distinct.setdefault(mv.identity(), mv)
    if not snapshots or len(distinct) < 2:
        stats.sessions_skipped_short += 1
        raise InsufficientHistory(
            f"session {log.session_id} has {len(distinct)} distinct dashboard snapshots; need 2"
        )

    final = snapshots[-1]
    final_identity = final.identity()
    final_embeddings = embed_mv(final, single_scorer, features)
    pairs = []
    for identity, mv in distinct.items():
        if identity == final_identity:
            continue
        pairs.append(
            MvPair(
                session_id=log.session_id,
                pos_embeddings=final_embeddings,
                neg_embeddings=embed_mv(mv, single_scorer, features),
                source="provenance",
            )
        )
    stats.pairs_emitted += len(pairs)
    return pairs, stats


# --- JSONL wire formats ---------------------------------------------------


def chart_pair_record(pair: RankedPair) -> dict:
    return {
        "table_id": pair.table_id,
        "pos": {
            "columns": list(pair.pos.column_indices),
            "chart_type": pair.pos_type.value if pair.pos_type else None,
        },
        "neg": {"columns": list(pair.neg.column_indices)},
        "source": pair.source,
    }


def write_chart_pairs(pairs, features_by_table, path) -> None:
    """Write pair records plus a feature sidecar (<path>.features.json).

    The sidecar carries each referenced table's column embeddings so that
    training can rebuild model inputs without re-reading the CSVs.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(chart_pair_record(pair), sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    used = {p.table_id for p in pairs}
    dump = {tid: features_by_table[tid].to_dump() for tid in sorted(used)}
    with open(str(path) + ".features.json", "w", encoding="utf-8") as fh:
        json.dump(dump, fh, sort_keys=True, separators=(",", ":"))


def read_chart_pairs(path, features_by_table=None):
    """Load chart pairs; features come from the sidecar unless supplied."""
    if features_by_table is None:
        with open(str(path) + ".features.json", encoding="utf-8") as fh:
            features_by_table = {
                tid: TableFeatures.from_dump(dump) for tid, dump in json.load(fh).items()
            }
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            features = features_by_table[rec["table_id"]]
            chart_type = rec["pos"].get("chart_type")
            pairs.append(
                RankedPair(
                    table_id=rec["table_id"],
                    pos=build_chart_input(features, rec["pos"]["columns"]),
                    neg=build_chart_input(features, rec["neg"]["columns"]),
                    pos_type=ChartType(chart_type) if chart_type else None,
                    source=rec.get("source", "corpus"),
                )
            )
    return pairs


def mv_pair_record(pair: MvPair) -> dict:
    return {
        "session_id": pair.session_id,
        "pos": {"embeddings": pair.pos_embeddings.tolist()},
        "neg": {"embeddings": pair.neg_embeddings.tolist()},
        "source": pair.source,
    }


def write_mv_pairs(pairs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(mv_pair_record(pair), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_mv_pairs(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            pairs.append(
                MvPair(
                    session_id=rec["session_id"],
                    pos_embeddings=np.asarray(rec["pos"]["embeddings"], dtype=np.float64),
                    neg_embeddings=np.asarray(rec["neg"]["embeddings"], dtype=np.float64),
                    source=rec.get("source", "provenance"),
                )
            )
    return pairs
