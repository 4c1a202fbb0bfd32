"""From authoring history to a trained dashboard scorer.

Sessions record every edit with a snapshot; a session's final dashboard is
taken as better than each distinct intermediate, and those ranked pairs
train the dashboard model. This demo generates synthetic sessions, mines
them, trains, and cross-validates.
"""

import tempfile
from pathlib import Path

from mvforge import TrainConfig, mc_cross_validate
from mvforge.mvrank import train_mv
from mvforge.pairgen import PairGenStats, provenance_pairs
from mvforge.provenance import ProvenanceLog
from mvforge.ranker import SingleChartScorer
from mvforge.service import fresh_single_bundle
from mvforge.synth import generate_corpus, generate_sessions

workdir = Path(tempfile.mkdtemp(prefix="mvforge-demo-"))
print(f"working in {workdir}")

print("\n1. corpus + 120 synthetic authoring sessions")
generate_corpus(workdir / "corpus", n_tables=25, cols_max=8, seed=7)
scorer = SingleChartScorer(fresh_single_bundle(seed=7))
paths = generate_sessions(workdir / "corpus", workdir / "sessions", n_sessions=120,
                          seed=9, single_scorer=scorer)
print(f"   wrote {len(paths)} .mvlog.jsonl logs")

print("2. mine ranked dashboard pairs (final beats each distinct intermediate)")
stats = PairGenStats()
pairs = []
for path in sorted((workdir / "sessions").glob("*.mvlog.jsonl")):
    log = ProvenanceLog.from_jsonl(path.read_text(encoding="utf-8"))
    session_pairs, stats = provenance_pairs(log, scorer, stats=stats)
    pairs.extend(session_pairs)
print(f"   {stats.pairs_emitted} pairs from {stats.sessions_seen} sessions")

print("3. Monte-Carlo cross-validation of the dashboard model (5 runs, 80/20)")
report = mc_cross_validate(pairs, runs=5, split=0.8,
                           config=TrainConfig(epochs=10, seed=7), trainer=train_mv)
for row in report["runs"]:
    print(f"   run {row['run']}: accuracy {row['accuracy']:.4f} "
          f"({row['train_pairs']} train / {row['test_pairs']} test pairs)")
print(f"   mean {report['mean']:.4f} +- {report['std']:.4f}")
