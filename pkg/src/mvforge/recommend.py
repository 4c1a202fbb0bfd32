"""Candidate enumeration, the greedy constrained dashboard recommender, and
incremental chart ideas.

The recommender starts from the user-locked charts and repeatedly appends
the candidate whose addition maximizes the dashboard score; locked charts
are never moved or dropped. Chart ideas rank the same one-step extensions
for the current dashboard, so the top idea is exactly what the recommender
would add next. Ties always break the same way: higher single-chart score
first, then lexicographic column indices, then chart-type order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chartspec import TYPE_ORDER, TYPE_RANK, ChartSpec, assign_encodings, chart_identity
from .errors import InfeasibleRequest
from .featurize import _as_features
from .mvrank import MAX_MV_CHARTS, MVState, embed_mv
from .ranker import enumerate_subsets


@dataclass
class Candidate:
    spec: ChartSpec
    s_data: float
    p_type: np.ndarray

    def s_overall(self) -> float:
        return self.s_data * float(self.p_type[TYPE_RANK[self.spec.chart_type]])


@dataclass
class CandidatePool:
    candidates: list
    dedup: bool

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)


def enumerate_candidates(source, single_scorer, dedup: bool = True, max_pool=None) -> CandidatePool:
    """Score every column subset of size 1-4 and return the sorted pool.

    With dedup on there is one candidate per column set, carrying its
    best-scoring chart type, sorted by s_data. With dedup off each set
    appears once per chart type, sorted by the composed overall score.
    """
    features = _as_features(source)
    subsets = enumerate_subsets(features.n_columns)
    s_data, p_type = single_scorer.subset_scores(features, subsets)

    candidates = []
    if dedup:
        for i, subset in enumerate(subsets):
            best_type = TYPE_ORDER[int(np.argmax(p_type[i]))]
            spec = assign_encodings(features, subset, best_type)
            candidates.append(Candidate(spec=spec, s_data=float(s_data[i]), p_type=p_type[i]))
        candidates.sort(
            key=lambda c: (-c.s_data, c.spec.column_indices, TYPE_RANK[c.spec.chart_type])
        )
    else:
        for i, subset in enumerate(subsets):
            for chart_type in TYPE_ORDER:
                spec = assign_encodings(features, subset, chart_type)
                candidates.append(Candidate(spec=spec, s_data=float(s_data[i]), p_type=p_type[i]))
        candidates.sort(
            key=lambda c: (-c.s_overall(), c.spec.column_indices, TYPE_RANK[c.spec.chart_type])
        )
    if max_pool is not None:
        candidates = candidates[:max_pool]
    return CandidatePool(candidates=candidates, dedup=dedup)


def _greedy_pick(mv: MVState, available, single_scorer, mv_scorer, features):
    """One greedy step: index into ``available`` of the best one-step extension."""
    seqs = [embed_mv(mv.append(c.spec), single_scorer, features) for c in available]
    scores = mv_scorer.score_sequences(seqs)
    best = 0
    for i in range(1, len(available)):
        if scores[i] > scores[best]:
            best = i
    return best, scores


def recommend_mv(source, n_charts: int, locked, single_scorer, mv_scorer,
                 dedup: bool = True, pool: CandidatePool = None) -> MVState:
    """Greedy dashboard of exactly ``n_charts`` charts containing ``locked``.

    Locked charts keep their given order at the front and are never
    replaced. Raises InfeasibleRequest when the target size is below the
    locked count, above the 12-chart cap, or beyond the candidate supply.
    """
    features = _as_features(source)
    locked = list(locked or [])
    if n_charts < max(1, len(locked)) or n_charts > MAX_MV_CHARTS:
        raise InfeasibleRequest(
            f"n_charts {n_charts} outside [{max(1, len(locked))}, {MAX_MV_CHARTS}]"
        )
    if pool is None:
        pool = enumerate_candidates(features, single_scorer, dedup=dedup)

    mv = MVState()
    for spec in locked:
        mv = mv.append(spec, locked=True)

    used = {chart_identity(c, drop_alternative_types=pool.dedup) for c in mv.charts}
    available = [
        c for c in pool if chart_identity(c.spec, drop_alternative_types=pool.dedup) not in used
    ]
    if n_charts > len(locked) + len(available):
        raise InfeasibleRequest(
            f"need {n_charts - len(locked)} candidates, only {len(available)} remain"
        )

    while len(mv.charts) < n_charts:
        best, _ = _greedy_pick(mv, available, single_scorer, mv_scorer, features)
        mv = mv.append(available[best].spec)
        used.add(chart_identity(available[best].spec, drop_alternative_types=pool.dedup))
        available = [
            c
            for c in available
            if chart_identity(c.spec, drop_alternative_types=pool.dedup) not in used
        ]
    return mv


def chart_ideas(source, current_mv: MVState, must_include=(), dedup: bool = True,
                single_scorer=None, mv_scorer=None, limit: int = 10,
                pool: CandidatePool = None):
    """Ranked one-step chart additions for the current dashboard.

    Candidates already in the dashboard (by identity) are excluded, and only
    those covering every must-include column survive. Non-empty dashboards
    rank by the projected dashboard score after adding the chart; an empty
    dashboard falls back to the single-chart ranking.
    """
    features = _as_features(source)
    if pool is None:
        pool = enumerate_candidates(features, single_scorer, dedup=dedup)
    must = set(must_include or ())
    current = {
        chart_identity(c, drop_alternative_types=pool.dedup) for c in current_mv.charts
    }
    filtered = [
        c
        for c in pool
        if must <= set(c.spec.column_indices)
        and chart_identity(c.spec, drop_alternative_types=pool.dedup) not in current
    ]
    if not filtered:
        return []

    if len(current_mv.charts) == 0 or len(current_mv.charts) >= MAX_MV_CHARTS:
        scored = [(c.spec, c.s_data if pool.dedup else c.s_overall()) for c in filtered]
        return scored[: max(1, limit)]

    seqs = [embed_mv(current_mv.append(c.spec), single_scorer, features) for c in filtered]
    scores = mv_scorer.score_sequences(seqs)
    order = sorted(range(len(filtered)), key=lambda i: (-scores[i], i))
    return [(filtered[i].spec, float(scores[i])) for i in order[: max(1, limit)]]
