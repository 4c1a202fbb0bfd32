"""Train the single-chart ranking model on a synthetic corpus and evaluate it
the way the experiments do: held-out pair accuracy against the baselines,
then the top-k recall curve.

Runs in about a minute on a laptop CPU. Everything is seeded.
"""

import tempfile
from pathlib import Path

import numpy as np

from mvforge import TrainConfig, pair_accuracy, topk_recall, train_single
from mvforge.featurize import TableFeatures
from mvforge.pairgen import PairGenStats, corpus_pairs
from mvforge.ranker import SingleChartScorer, train_nn_baseline, train_ranksvm_baseline
from mvforge.synth import generate_corpus, load_corpus, load_utility

workdir = Path(tempfile.mkdtemp(prefix="mvforge-demo-"))
print(f"working in {workdir}")

print("\n1. generate a 60-table corpus with a planted utility (seed 7)")
generate_corpus(workdir / "corpus", n_tables=60, cols_max=8, seed=7)
entries = load_corpus(workdir / "corpus")

print("2. build ranked pairs (ground truth beats every same-size column subset)")
stats = PairGenStats()
pairs = []
tables_gt = []
for table, charts in entries:
    features = TableFeatures.from_table(table)
    table_pairs, stats = corpus_pairs(features, charts, stats=stats)
    pairs.extend(table_pairs)
    tables_gt.append((features, [set(cols) for cols, _ in charts]))
print(f"   {stats.pairs_emitted} pairs from {stats.tables_seen} tables")

print("3. split at table granularity, 80/20")
ids = sorted({p.table_id for p in pairs})
rng = np.random.default_rng(0)
order = [ids[i] for i in rng.permutation(len(ids))]
train_ids = set(order[: int(0.8 * len(order))])
train = [p for p in pairs if p.table_id in train_ids]
test = [p for p in pairs if p.table_id not in train_ids]

print("4. train the recurrent ranker (10 epochs) and both baselines")
config = TrainConfig(epochs=10, seed=7)
bundle = train_single(train, config)
nn = train_nn_baseline(train, config)
svm = train_ranksvm_baseline(train, config)

print("\nheld-out pair accuracy:")
print(f"   ours    {pair_accuracy(bundle, test):.4f}")
print(f"   NN      {pair_accuracy(nn, test):.4f}")
print(f"   RankSVM {pair_accuracy(svm, test):.4f}")

print("\n5. top-k recall of the ground-truth selections")
scorer = SingleChartScorer(bundle)
oracle = load_utility(workdir / "corpus")
for k in (1, 3, 5, 10):
    ours = topk_recall(scorer, tables_gt, k)
    planted = topk_recall(oracle, tables_gt, k)
    print(f"   recall@{k:<3} ours {ours:.3f}   planted oracle {planted:.3f}")
