"""Multi-chart assessment: context embeddings, dashboard scoring, MV training.

A dashboard is scored as a sequence of 9-dim chart embeddings. The first two
dimensions come from the single-chart model; the rest encode the four
selection guidelines (diversity, complementarity, decomposition, parsimony)
plus a duplicate flag, all computed within the dashboard the chart sits in,
so the same chart embeds differently in different dashboards.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .chartspec import TYPE_RANK, ChartSpec, chart_identity
from .errors import EmptyDataset, EmptyMV, LayoutError, PositionError, TooManyCharts
from .featurize import LAYOUT_VERSION, _as_features
from .neural import BiLstmScorer, ModelBundle, adam_init, adam_step, pair_batch_loss, sigmoid
from .ranker import TrainConfig, _epoch_batches

MAX_MV_CHARTS = 12
CHART_EMBED_DIM = 9

# Default grid geometry for newly placed charts (presentation only).
GRID_COLS = 12
DEFAULT_W = 4
DEFAULT_H = 4


def default_layout(position: int) -> dict:
    per_row = GRID_COLS // DEFAULT_W
    return {
        "x": (position % per_row) * DEFAULT_W,
        "y": (position // per_row) * DEFAULT_H,
        "w": DEFAULT_W,
        "h": DEFAULT_H,
    }


@dataclass(frozen=True)
class MVState:
    """An ordered dashboard: charts, lock flags, and presentation-only layout."""

    charts: tuple = ()
    locked: frozenset = frozenset()
    layout: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "charts", tuple(self.charts))
        object.__setattr__(self, "locked", frozenset(self.locked))
        if len(self.charts) > MAX_MV_CHARTS:
            raise TooManyCharts(f"{len(self.charts)} charts exceeds the {MAX_MV_CHARTS} limit")
        layout = tuple(
            self.layout[i] if i < len(self.layout) else default_layout(i)
            for i in range(len(self.charts))
        )
        object.__setattr__(self, "layout", layout)

    def __len__(self):
        return len(self.charts)

    def append(self, chart: ChartSpec, locked: bool = False) -> "MVState":
        pos = len(self.charts)
        return MVState(
            charts=self.charts + (chart,),
            locked=self.locked | {pos} if locked else self.locked,
            layout=self.layout + (default_layout(pos),),
        )

    def identity(self):
        """Multiset of chart identities (column set + type); layout ignored."""
        return tuple(sorted(chart_identity(c, drop_alternative_types=False) for c in self.charts))

    def to_json(self) -> dict:
        return {
            "charts": [c.to_json() for c in self.charts],
            "locked": sorted(self.locked),
            "layout": [dict(cell) for cell in self.layout],
        }

    @classmethod
    def from_json(cls, data: dict) -> "MVState":
        return cls(
            charts=tuple(ChartSpec.from_json(c) for c in data.get("charts", [])),
            locked=frozenset(data.get("locked", [])),
            layout=tuple(data.get("layout", [])),
        )


def chart_context_embedding(mv: MVState, position: int, single_scorer, source) -> np.ndarray:
    """The 9-dim embedding of one chart within its dashboard context."""
    if not 0 <= position < len(mv.charts):
        raise PositionError(f"position {position} out of range for {len(mv.charts)} charts")
    return embed_mv(mv, single_scorer, source)[position]


def embed_mv(mv: MVState, single_scorer, source) -> np.ndarray:
    """Embed every chart of a dashboard, in sequence order; shape (n, 9)."""
    features = _as_features(source)
    n = len(mv.charts)
    if n == 0:
        return np.zeros((0, CHART_EMBED_DIM))
    subsets = [c.column_indices for c in mv.charts]
    s_data, p_type = single_scorer.subset_scores(features, subsets)

    col_sets = [frozenset(c.column_indices) for c in mv.charts]
    identities = [chart_identity(c) for c in mv.charts]
    out = np.zeros((n, CHART_EMBED_DIM))
    seen = set()
    for i, chart in enumerate(mv.charts):
        out[i, 0] = s_data[i]
        out[i, 1] = p_type[i][TYPE_RANK[chart.chart_type]]
        out[i, 2] = len(col_sets[i]) / 4.0
        same_type = sum(1 for c in mv.charts if c.chart_type is chart.chart_type)
        out[i, 3] = 1.0 - same_type / n
        if n > 1:
            jaccards = [
                len(col_sets[i] & col_sets[j]) / len(col_sets[i] | col_sets[j])
                for j in range(n)
                if j != i
            ]
            out[i, 4] = float(np.mean(jaccards))
            others = frozenset().union(*(col_sets[j] for j in range(n) if j != i))
            out[i, 5] = len(col_sets[i] - others) / len(col_sets[i])
        else:
            out[i, 4] = 0.0
            out[i, 5] = 1.0
        out[i, 6] = len(col_sets[i] - seen) / features.n_columns
        seen |= col_sets[i]
        out[i, 7] = n / MAX_MV_CHARTS
        dup = any(identities[j] == identities[i] for j in range(n) if j != i)
        out[i, 8] = 1.0 if dup else 0.0
    return out


class MvScorer:
    """Scoring facade over a trained (or fresh) multi-chart bundle."""

    def __init__(self, bundle: ModelBundle):
        if bundle.kind != "mv":
            raise LayoutError(f"expected an mv bundle, got {bundle.kind!r}")
        if bundle.layout_version != LAYOUT_VERSION:
            raise LayoutError(
                f"bundle layout_version {bundle.layout_version} != featurizer {LAYOUT_VERSION}"
            )
        self.bundle = bundle
        self._net = bundle.scorer()

    def score_sequences(self, seqs) -> np.ndarray:
        """Sigmoid scores for a batch of (n, 9) embedding sequences."""
        raw, _, _ = self._net.forward_batch(seqs)
        return sigmoid(raw)


def score_mv(mv_scorer, mv: MVState, single_scorer, source) -> float:
    """Overall quality score for a dashboard, in (0, 1)."""
    if len(mv.charts) == 0:
        raise EmptyMV("cannot score an empty dashboard")
    if len(mv.charts) > MAX_MV_CHARTS:
        raise TooManyCharts(f"{len(mv.charts)} charts exceeds the {MAX_MV_CHARTS} limit")
    embeddings = embed_mv(mv, single_scorer, source)
    return float(mv_scorer.score_sequences([embeddings])[0])


def mv_train_config(config: TrainConfig = None) -> TrainConfig:
    config = config or TrainConfig()
    return replace(config, type_head_dims=None, lam=0.0)


def train_mv(pairs, config: TrainConfig = None) -> ModelBundle:
    """Siamese margin training of the dashboard scorer on ranked MV pairs.

    Pairs carry precomputed 9-dim embedding sequences, so training does not
    need the original tables (logs may be shared without their data).
    """
    config = mv_train_config(config)
    if not pairs:
        raise EmptyDataset("no MV training pairs")
    pos_seqs = [p.pos_matrix() for p in pairs]
    neg_seqs = [p.neg_matrix() for p in pairs]
    model = BiLstmScorer(
        input_dim=CHART_EMBED_DIM,
        hidden_dim=config.hidden_dim,
        head_dims=config.head_dims,
        type_head_dims=None,
        max_len=MAX_MV_CHARTS,
        seed=config.seed,
    )
    state = adam_init(model.params)
    rng = np.random.default_rng(config.seed)
    final_loss = None
    for _ in range(config.epochs):
        losses = []
        for batch in _epoch_batches(len(pairs), config.batch_size, rng):
            loss, grads = pair_batch_loss(
                model,
                [pos_seqs[i] for i in batch],
                [neg_seqs[i] for i in batch],
                margin=config.margin,
                loss_scale=1.0 / len(batch),
            )
            adam_step(model.params, grads, state, config.lr, config.beta1, config.beta2, config.eps)
            losses.append(loss)
        final_loss = float(np.mean(losses))
    return ModelBundle(
        kind="mv",
        layout_version=LAYOUT_VERSION,
        hyper={
            "input_dim": CHART_EMBED_DIM,
            "hidden_dim": config.hidden_dim,
            "head_dims": list(config.head_dims),
            "type_head_dims": None,
            "max_len": MAX_MV_CHARTS,
            "margin": config.margin,
            "lam": 0.0,
        },
        params={name: p.copy() for name, p in model.params.items()},
        meta={"epochs": config.epochs, "pair_count": len(pairs), "seed": config.seed,
              "final_loss": final_loss},
    )
