"""mvforge: learned chart and dashboard scoring with greedy recommendation.

The pipeline: parse CSV tables, embed columns into fixed 96-dim feature
vectors, score column selections with a bidirectional-LSTM ranking model
trained on ranked pairs, embed charts in dashboard context (9 dims), score
dashboards with a second recurrent ranker trained on authoring provenance,
and greedily assemble constraint-respecting dashboard recommendations.
"""

from .chartspec import ChartSpec, ChartType, assign_encodings, chart_identity, emit_vegalite
from .featurize import ChartInput, ColumnEmbedding, TableFeatures, build_chart_input, embed_column
from .ingest import Column, ColumnProfile, DataTable, infer_type, parse_csv, profile
from .mvrank import MVState, MvScorer, chart_context_embedding, embed_mv, score_mv, train_mv
from .neural import BiLstmScorer, ModelBundle, load_bundle, margin_rank_loss, save_bundle
from .pairgen import MvPair, RankedPair, corpus_pairs, provenance_pairs
from .ranker import (
    ChartScore,
    SingleChartScorer,
    TrainConfig,
    mc_cross_validate,
    pair_accuracy,
    score_chart,
    topk_recall,
    train_single,
)
from .recommend import CandidatePool, chart_ideas, enumerate_candidates, recommend_mv

__version__ = "0.1.0"

__all__ = [
    "BiLstmScorer",
    "CandidatePool",
    "ChartInput",
    "ChartScore",
    "ChartSpec",
    "ChartType",
    "Column",
    "ColumnEmbedding",
    "ColumnProfile",
    "DataTable",
    "MVState",
    "ModelBundle",
    "MvPair",
    "MvScorer",
    "RankedPair",
    "SingleChartScorer",
    "TableFeatures",
    "TrainConfig",
    "assign_encodings",
    "build_chart_input",
    "chart_context_embedding",
    "chart_ideas",
    "chart_identity",
    "corpus_pairs",
    "embed_column",
    "embed_mv",
    "emit_vegalite",
    "enumerate_candidates",
    "infer_type",
    "load_bundle",
    "margin_rank_loss",
    "mc_cross_validate",
    "pair_accuracy",
    "parse_csv",
    "profile",
    "provenance_pairs",
    "recommend_mv",
    "save_bundle",
    "score_chart",
    "score_mv",
    "topk_recall",
    "train_single",
]
