"""Single-chart assessment: composed scores, Siamese training, baselines, metrics.

The single-chart model scores a column selection (s_data, squashed to (0,1)
with a sigmoid) and predicts a distribution over the five chart types; the
overall score of (selection, type) is their product, so the type ranking for
a fixed selection never depends on s_data.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .chartspec import TYPE_RANK, ChartType
from .errors import EmptyDataset, LayoutError, ShapeError
from .featurize import EMBED_DIM, LAYOUT_VERSION, MAX_CHART_COLUMNS, _as_features, build_chart_input
from .neural import (
    AdamState,
    BiLstmScorer,
    MlpScorer,
    ModelBundle,
    adam_init,
    adam_step,
    pair_batch_loss,
    sigmoid,
)

FLAT_INPUT_DIM = MAX_CHART_COLUMNS * EMBED_DIM  # 384: padded chart input, flattened


@dataclass
class TrainConfig:
    hidden_dim: int = 64
    head_dims: tuple = (32, 1)
    type_head_dims: tuple = (32, 5)
    margin: float = 1.0
    lam: float = 0.5
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    deterministic: bool = True
    # baseline knobs
    nn_head_dims: tuple = (128, 32, 1)
    svm_c: float = 1000.0
    svm_lr: float = 2.0
    svm_iters: int = 4000

    def __post_init__(self):
        for dims in (self.head_dims, self.nn_head_dims):
            if any(d <= 0 for d in dims):
                raise ShapeError(f"layer widths must be positive, got {dims}")
        if self.type_head_dims is not None and any(d <= 0 for d in self.type_head_dims):
            raise ShapeError(f"layer widths must be positive, got {self.type_head_dims}")


@dataclass
class ChartScore:
    s_data: float
    p_type: np.ndarray

    def s_overall(self, chart_type: ChartType) -> float:
        return self.s_data * float(self.p_type[TYPE_RANK[chart_type]])

    def overall_vector(self) -> np.ndarray:
        return self.s_data * self.p_type

    def best_type(self) -> ChartType:
        # argmax of s_overall; equal to the p_type argmax since s_data > 0
        from .chartspec import TYPE_ORDER

        return TYPE_ORDER[int(np.argmax(self.p_type))]


class SingleChartScorer:
    """Chart scoring facade over a trained (or fresh) single-chart bundle.

    Caches subset scores per table so that candidate enumeration and the
    greedy recommender never re-run the network for the same selection.
    """

    def __init__(self, bundle: ModelBundle):
        if bundle.kind != "single_chart":
            raise LayoutError(f"expected a single_chart bundle, got {bundle.kind!r}")
        if bundle.layout_version != LAYOUT_VERSION:
            raise LayoutError(
                f"bundle layout_version {bundle.layout_version} != featurizer {LAYOUT_VERSION}"
            )
        self.bundle = bundle
        self._net = bundle.scorer()
        self._cache = {}

    def subset_scores(self, source, subsets):
        """s_data and p_type for each column subset; batched and cached."""
        features = _as_features(source)
        keys = [(features.table_id, tuple(sorted(s))) for s in subsets]
        missing = [k for k in dict.fromkeys(keys) if k not in self._cache]
        if missing:
            seqs = [build_chart_input(features, k[1]).matrix() for k in missing]
            raw, probs, _ = self._net.forward_batch(seqs)
            squashed = sigmoid(raw)
            for j, k in enumerate(missing):
                self._cache[k] = (float(squashed[j]), probs[j])
        s_data = np.array([self._cache[k][0] for k in keys])
        p_type = np.stack([self._cache[k][1] for k in keys])
        return s_data, p_type

    def score_chart(self, source, column_indices) -> ChartScore:
        s_data, p_type = self.subset_scores(source, [tuple(column_indices)])
        return ChartScore(s_data=float(s_data[0]), p_type=p_type[0])


def score_chart(bundle: ModelBundle, source, column_indices) -> ChartScore:
    return SingleChartScorer(bundle).score_chart(source, column_indices)


def _epoch_batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def train_single(pairs, config: TrainConfig = None) -> ModelBundle:
    """Siamese margin training of the single-chart scorer on ranked chart pairs."""
    config = config or TrainConfig()
    if not pairs:
        raise EmptyDataset("no training pairs")
    pos_seqs = [p.pos_matrix() for p in pairs]
    neg_seqs = [p.neg_matrix() for p in pairs]
    labels = np.array(
        [TYPE_RANK[p.pos_type] if p.pos_type is not None else 0 for p in pairs], dtype=np.intp
    )
    have_labels = all(p.pos_type is not None for p in pairs)

    model = BiLstmScorer(
        input_dim=EMBED_DIM,
        hidden_dim=config.hidden_dim,
        head_dims=config.head_dims,
        type_head_dims=config.type_head_dims,
        max_len=MAX_CHART_COLUMNS,
        seed=config.seed,
    )
    state = adam_init(model.params)
    rng = np.random.default_rng(config.seed)
    lam = config.lam if have_labels else 0.0
    final_loss = math.nan
    for _ in range(config.epochs):
        losses = []
        for batch in _epoch_batches(len(pairs), config.batch_size, rng):
            loss, grads = pair_batch_loss(
                model,
                [pos_seqs[i] for i in batch],
                [neg_seqs[i] for i in batch],
                margin=config.margin,
                lam=lam,
                labels=labels[batch],
                loss_scale=1.0 / len(batch),
            )
            adam_step(model.params, grads, state, config.lr, config.beta1, config.beta2, config.eps)
            losses.append(loss)
        final_loss = float(np.mean(losses))
    return ModelBundle(
        kind="single_chart",
        layout_version=LAYOUT_VERSION,
        hyper={
            "input_dim": EMBED_DIM,
            "hidden_dim": config.hidden_dim,
            "head_dims": list(config.head_dims),
            "type_head_dims": list(config.type_head_dims) if config.type_head_dims else None,
            "max_len": MAX_CHART_COLUMNS,
            "margin": config.margin,
            "lam": lam,
        },
        params={name: p.copy() for name, p in model.params.items()},
        meta={
            "epochs": config.epochs,
            "pair_count": len(pairs),
            "seed": config.seed,
            "final_loss": None if math.isnan(final_loss) else final_loss,
        },
    )


def _pair_scores(model, pairs):
    """Scores for all positives and negatives under any supported model."""
    if isinstance(model, ModelBundle):
        model = model.scorer()
    if isinstance(model, BiLstmScorer):
        seqs = [p.pos_matrix() for p in pairs] + [p.neg_matrix() for p in pairs]
        scores, _, _ = model.forward_batch(seqs)
    elif isinstance(model, MlpScorer):
        flat = np.stack(
            [p.pos_flat() for p in pairs] + [p.neg_flat() for p in pairs]
        )
        scores, _ = model.forward_batch(flat)
    elif isinstance(model, RankSvmModel):
        flat = np.stack(
            [p.pos_flat() for p in pairs] + [p.neg_flat() for p in pairs]
        )
        scores = flat @ model.w
    else:
        raise ShapeError(f"unsupported model type {type(model)!r}")
    n = len(pairs)
    return scores[:n], scores[n:]


def pair_accuracy(model, pairs) -> float:
    """Fraction of pairs where the positive outscores the negative. Ties count
    as incorrect."""
    if not pairs:
        raise EmptyDataset("no evaluation pairs")
    s_pos, s_neg = _pair_scores(model, pairs)
    return float((s_pos > s_neg).sum()) / len(pairs)


def enumerate_subsets(n_columns, max_size=MAX_CHART_COLUMNS):
    """All column subsets of size 1..max_size, in lexicographic order."""
    subsets = []
    for k in range(1, min(max_size, n_columns) + 1):
        subsets.extend(itertools.combinations(range(n_columns), k))
    return subsets


def topk_recall(scorer, tables_with_groundtruth, k: int) -> float:
    """Proportion of ground-truth selections inside the top-k candidates,
    averaged over tables.

    ``scorer`` is anything with subset_scores (the trained facade or a
    planted oracle). Candidates are every subset of size 1-4, ranked by
    s_data descending with lexicographic-column tie-breaking.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not tables_with_groundtruth:
        raise EmptyDataset("no tables with ground truth")
    per_table = []
    for features, gt_sets in tables_with_groundtruth:
        features = _as_features(features)
        subsets = enumerate_subsets(features.n_columns)
        s_data, _ = scorer.subset_scores(features, subsets)
        ranked = sorted(zip(s_data, subsets), key=lambda t: (-t[0], t[1]))
        top = {tuple(sub) for _, sub in ranked[:k]}
        gts = [tuple(sorted(g)) for g in gt_sets]
        per_table.append(sum(1 for g in gts if g in top) / len(gts))
    return float(np.mean(per_table))


def train_nn_baseline(pairs, config: TrainConfig = None) -> MlpScorer:
    """Fully-connected baseline on flattened padded inputs, margin loss + Adam."""
    config = config or TrainConfig()
    if not pairs:
        raise EmptyDataset("no training pairs")
    pos = np.stack([p.pos_flat() for p in pairs])
    neg = np.stack([p.neg_flat() for p in pairs])
    model = MlpScorer(input_dim=pos.shape[1], head_dims=config.nn_head_dims, seed=config.seed)
    state = adam_init(model.params)
    rng = np.random.default_rng(config.seed)
    for _ in range(config.epochs):
        for batch in _epoch_batches(len(pairs), config.batch_size, rng):
            x = np.concatenate([pos[batch], neg[batch]])
            scores, cache = model.forward_batch(x)
            nb = len(batch)
            hinge = np.maximum(0.0, config.margin - (scores[:nb] - scores[nb:]))
            active = (hinge > 0).astype(np.float64) / nb
            dscores = np.concatenate([-active, active])
            grads = model.backward_batch(cache, dscores)
            adam_step(model.params, grads, state, config.lr, config.beta1, config.beta2, config.eps)
    return model


@dataclass
class RankSvmModel:
    w: np.ndarray

    def score(self, flat) -> float:
        return float(np.asarray(flat) @ self.w)


def train_ranksvm_baseline(pairs, config: TrainConfig = None) -> RankSvmModel:
    """Linear RankSVM: hinge loss on difference vectors with L2 regularization,
    plain full-batch gradient descent."""
    config = config or TrainConfig()
    if not pairs:
        raise EmptyDataset("no training pairs")
    diffs = np.stack([p.pos_flat() - p.neg_flat() for p in pairs])
    n, dim = diffs.shape
    w = np.zeros(dim)
    for t in range(config.svm_iters):
        margins = diffs @ w
        active = margins < 1.0
        grad = -(diffs[active].sum(axis=0)) / n + w / config.svm_c
        w -= config.svm_lr / math.sqrt(1.0 + t) * grad
    return RankSvmModel(w=w)


_TRAINERS = {
    "ours": train_single,
    "nn": train_nn_baseline,
    "ranksvm": train_ranksvm_baseline,
}


def mc_cross_validate(pairs, runs=10, split=0.8, config: TrainConfig = None, model="ours",
                      trainer=None, group_key=None):
    """Monte-Carlo cross-validation at table granularity.

    Every pair of a table lands entirely on one side of each split, so no
    near-duplicate pairs leak between train and test. Returns per-run
    accuracies, mean and std, plus a split audit (train/test group ids).
    """
    config = config or TrainConfig()
    if not pairs:
        raise EmptyDataset("no pairs to cross-validate")
    if not 0 < split < 1:
        raise ValueError("split must be in (0, 1)")
    trainer = trainer or _TRAINERS[model]
    group_key = group_key or (lambda p: p.table_id)
    groups = {}
    for p in pairs:
        groups.setdefault(group_key(p), []).append(p)
    group_ids = sorted(groups)
    if len(group_ids) < 2:
        raise EmptyDataset("need at least two groups for a split")

    run_rows = []
    audit = []
    for run in range(runs):
        rng = np.random.default_rng((config.seed, run))
        order = [group_ids[i] for i in rng.permutation(len(group_ids))]
        n_train = min(max(int(round(split * len(order))), 1), len(order) - 1)
        train_ids, test_ids = set(order[:n_train]), set(order[n_train:])
        train_pairs = [p for gid in sorted(train_ids) for p in groups[gid]]
        test_pairs = [p for gid in sorted(test_ids) for p in groups[gid]]
        run_config = replace(config, seed=config.seed + run)
        fitted = trainer(train_pairs, run_config)
        acc = pair_accuracy(fitted, test_pairs)
        run_rows.append(
            {
                "run": run,
                "accuracy": acc,
                "train_groups": len(train_ids),
                "test_groups": len(test_ids),
                "train_pairs": len(train_pairs),
                "test_pairs": len(test_pairs),
            }
        )
        audit.append({"train_ids": sorted(train_ids), "test_ids": sorted(test_ids)})
    accs = np.array([row["accuracy"] for row in run_rows])
    return {
        "metric": "pair_accuracy",
        "model": model if trainer is _TRAINERS.get(model) else "custom",
        "runs": run_rows,
        "mean": float(accs.mean()),
        "std": float(accs.std()),
        "split_audit": audit,
    }
