"""Operator command line: synthesize corpora, build pairs, train, evaluate,
recommend, and serve.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors. Every
command takes --seed and is deterministic under it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .chartspec import ChartType, assign_encodings, emit_vegalite
from .errors import EmptyDataset, InsufficientHistory, MvForgeError
from .featurize import LAYOUT_VERSION, TableFeatures
from .ingest import parse_csv
from .mvrank import MvScorer, score_mv, train_mv
from .neural import load_bundle, save_bundle
from .pairgen import (
    PairGenStats,
    corpus_pairs,
    provenance_pairs,
    read_chart_pairs,
    read_mv_pairs,
    write_chart_pairs,
    write_mv_pairs,
)
from .provenance import LOG_SUFFIX, ProvenanceLog
from .ranker import (
    SingleChartScorer,
    TrainConfig,
    mc_cross_validate,
    pair_accuracy,
    topk_recall,
    train_nn_baseline,
    train_ranksvm_baseline,
    train_single,
)
from .recommend import recommend_mv
from .synth import generate_corpus, generate_sessions, load_corpus, load_utility


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {raw}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic corpus (and optional sessions)")
    p.add_argument("--tables", type=int, required=True)
    p.add_argument("--cols-max", type=int, default=8)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.add_argument("--gts", type=int, default=1, help="ground truths per table")
    p.add_argument("--interaction", action="store_true",
                   help="add the non-linear interaction term to the planted utility")
    p.add_argument("--sessions", type=int, default=0,
                   help="also generate this many synthetic authoring logs under <out>/sessions")

    p = sub.add_parser("pairs", help="build ranked pairs from a corpus or provenance logs")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", help="corpus directory (ground_truth.jsonl + tables/)")
    src.add_argument("--provenance", help="directory of *.mvlog.jsonl session logs")
    p.add_argument("--out", required=True)
    p.add_argument("--cap", type=int, default=None, help="cap negatives per ground truth")
    p.add_argument("--model-single", help="single-chart bundle for MV embeddings (provenance mode)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a scoring model from a pairs file")
    p.add_argument("--kind", choices=("single", "mv"), required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=0.5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-from", help="warm-start from an existing bundle (layout must match)")

    p = sub.add_parser("eval", help="pair accuracy (optionally MCCV) or top-k recall")
    p.add_argument("--model", help="bundle to evaluate (or supplying hyper-params for MCCV)")
    p.add_argument("--pairs")
    p.add_argument("--mccv", type=int, default=0, help="Monte-Carlo cross-validation runs")
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--baseline", choices=("nn", "ranksvm"),
                   help="also train/evaluate this baseline on identical splits")
    p.add_argument("--recall", action="store_true", help="top-k recall over a corpus")
    p.add_argument("--corpus", help="corpus directory (recall mode)")
    p.add_argument("--k", default="1,3,5,10")
    p.add_argument("--oracle", action="store_true", help="use the planted utility as the scorer")
    p.add_argument("--out", help="write recall rows as CSV")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("recommend", help="recommend a dashboard for a CSV table")
    p.add_argument("--table", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--lock", action="append", default=[],
                   help='locked chart as "0,3" or "0,3:bar" (repeatable)')
    p.add_argument("--model-single", required=True)
    p.add_argument("--model-mv", required=True)
    p.add_argument("--emit", choices=("vegalite", "json"), default="vegalite")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--seed", type=int, default=None)
    return parser


def _load_bundle_file(path):
    return load_bundle(Path(path).read_bytes(), expected_layout=LAYOUT_VERSION)


def _cmd_gen_synth(args) -> int:
    out = Path(args.out)
    info = generate_corpus(
        out,
        n_tables=args.tables,
        cols_max=args.cols_max,
        seed=args.seed,
        gts_per_table=args.gts,
        interaction=args.interaction,
    )
    print(f"tables: {info['tables']}")
    print(f"ground truths: {info['ground_truths']}")
    if args.sessions:
        from .service import fresh_single_bundle

        scorer = SingleChartScorer(fresh_single_bundle(args.seed))
        paths = generate_sessions(out, out / "sessions", args.sessions, args.seed, scorer)
        print(f"sessions: {len(paths)}")
    return 0


def _cmd_pairs(args) -> int:
    if args.corpus:
        try:
            entries = load_corpus(args.corpus)
        except (EmptyDataset, FileNotFoundError) as exc:
            print(f"no usable corpus in {args.corpus}: {exc}", file=sys.stderr)
            return 2
        stats = PairGenStats()
        pairs = []
        features_by_table = {}
        for table, charts in entries:
            features = TableFeatures.from_table(table)
            features_by_table[features.table_id] = features
            table_pairs, stats = corpus_pairs(
                features, charts, cap_per_ground_truth=args.cap, seed=args.seed, stats=stats
            )
            pairs.extend(table_pairs)
        write_chart_pairs(pairs, features_by_table, args.out)
        print(f"tables skipped (>10 columns): {stats.tables_skipped_wide}")
        print(f"charts skipped (>4 columns): {stats.charts_skipped_wide}")
        print(f"pairs: {stats.pairs_emitted}")
        return 0

    log_dir = Path(args.provenance)
    log_files = sorted(log_dir.glob(f"*{LOG_SUFFIX}"))
    if not log_files:
        print(f"no {LOG_SUFFIX} files in {log_dir}", file=sys.stderr)
        return 2
    if args.model_single:
        scorer = SingleChartScorer(_load_bundle_file(args.model_single))
    else:
        from .service import fresh_single_bundle

        print("warning: no --model-single given; embedding with a fresh seeded model",
              file=sys.stderr)
        scorer = SingleChartScorer(fresh_single_bundle(args.seed))
    stats = PairGenStats()
    pairs = []
    for path in log_files:
        log = ProvenanceLog.from_jsonl(path.read_text(encoding="utf-8"))
        try:
            log_pairs, stats = provenance_pairs(log, scorer, stats=stats)
        except InsufficientHistory as exc:
            print(f"skipping {path.name}: {exc}", file=sys.stderr)
            continue
        pairs.extend(log_pairs)
    write_mv_pairs(pairs, args.out)
    print(f"sessions: {stats.sessions_seen}")
    print(f"sessions skipped (<2 distinct snapshots): {stats.sessions_skipped_short}")
    print(f"pairs: {stats.pairs_emitted}")
    return 0


def _cmd_train(args) -> int:
    config = TrainConfig(
        epochs=args.epochs,
        margin=args.margin,
        lam=args.lam,
        lr=args.lr,
        batch_size=args.batch_size,
        hidden_dim=args.hidden,
        seed=args.seed,
    )
    if args.init_from:
        # warm starts must share the feature layout; mismatches abort here
        _load_bundle_file(args.init_from)
    if args.kind == "single":
        pairs = read_chart_pairs(args.pairs)
        bundle = train_single(pairs, config)
    else:
        pairs = read_mv_pairs(args.pairs)
        bundle = train_mv(pairs, config)
    Path(args.out).write_bytes(save_bundle(bundle))
    print(f"trained {args.kind} model on {len(pairs)} pairs "
          f"({args.epochs} epochs, seed {args.seed})")
    print(f"final loss: {bundle.meta['final_loss']:.6f}")
    print(f"wrote {args.out}")
    return 0


def _parse_k_list(raw: str):
    try:
        ks = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        ks = []
    if not ks or any(k < 1 for k in ks):
        raise ValueError(f"bad --k list {raw!r}")
    return ks


def _cmd_eval(args) -> int:
    if args.recall:
        if not args.corpus:
            print("--recall needs --corpus", file=sys.stderr)
            return 2
        entries = load_corpus(args.corpus)
        tables_gt = [
            (TableFeatures.from_table(table), [set(cols) for cols, _ in charts])
            for table, charts in entries
        ]
        if args.oracle:
            scorer = load_utility(args.corpus)
        elif args.model:
            scorer = SingleChartScorer(_load_bundle_file(args.model))
        else:
            print("--recall needs --model or --oracle", file=sys.stderr)
            return 2
        rows = []
        for k in _parse_k_list(args.k):
            rows.append((k, topk_recall(scorer, tables_gt, k)))
            print(f"recall@{rows[-1][0]}: {rows[-1][1]:.4f}")
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write("k,recall\n")
                for k, r in rows:
                    fh.write(f"{k},{r:.6f}\n")
            print(f"wrote {args.out}")
        return 0

    if not args.pairs:
        print("eval needs --pairs (or --recall)", file=sys.stderr)
        return 2
    kind = "single"
    if args.model:
        bundle = _load_bundle_file(args.model)
        kind = "single" if bundle.kind == "single_chart" else "mv"
    else:
        with open(args.pairs, encoding="utf-8") as fh:
            first = json.loads(fh.readline())
        kind = "mv" if "embeddings" in first.get("pos", {}) else "single"
    pairs = read_chart_pairs(args.pairs) if kind == "single" else read_mv_pairs(args.pairs)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, seed=args.seed)

    if args.mccv < 1:
        if not args.model:
            print("eval without --mccv needs --model", file=sys.stderr)
            return 2
        acc = pair_accuracy(bundle, pairs)
        print(f"pair accuracy: {acc:.4f} over {len(pairs)} pairs")
        return 0

    trainer = train_single if kind == "single" else train_mv
    report = mc_cross_validate(
        pairs, runs=args.mccv, split=args.split, config=config, trainer=trainer
    )
    print(f"model: ours ({kind})")
    print("run  accuracy  train_pairs  test_pairs")
    for row in report["runs"]:
        print(
            f"{row['run']:>3}  {row['accuracy']:.4f}    {row['train_pairs']:>8}    "
            f"{row['test_pairs']:>8}"
        )
    print(f"mean: {report['mean']:.4f}  std: {report['std']:.4f}")
    disjoint = all(
        not (set(audit["train_ids"]) & set(audit["test_ids"])) for audit in report["split_audit"]
    )
    print(f"splits disjoint: {'yes' if disjoint else 'NO'}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1)
        print(f"wrote {args.out}")

    if args.baseline:
        if kind != "single":
            print("baselines apply to single-chart pairs only", file=sys.stderr)
            return 2
        base_trainer = train_nn_baseline if args.baseline == "nn" else train_ranksvm_baseline
        base_report = mc_cross_validate(
            pairs, runs=args.mccv, split=args.split, config=config, trainer=base_trainer
        )
        print(f"model: {args.baseline}")
        for row in base_report["runs"]:
            print(f"{row['run']:>3}  {row['accuracy']:.4f}")
        print(f"mean: {base_report['mean']:.4f}  std: {base_report['std']:.4f}")
    return 0


def _parse_lock(raw: str, features, scorer):
    if ":" in raw:
        cols_part, type_part = raw.split(":", 1)
        chart_type = ChartType(type_part.strip())
    else:
        cols_part, chart_type = raw, None
    columns = tuple(int(c) for c in cols_part.split(",") if c.strip() != "")
    if chart_type is None:
        chart_type = scorer.score_chart(features, columns).best_type()
    return assign_encodings(features, columns, chart_type)


def _cmd_recommend(args) -> int:
    table = parse_csv(Path(args.table).read_bytes(), Path(args.table).name)
    features = TableFeatures.from_table(table)
    single = SingleChartScorer(_load_bundle_file(args.model_single))
    mv_scorer = MvScorer(_load_bundle_file(args.model_mv))
    locked = [_parse_lock(raw, features, single) for raw in args.lock]
    mv = recommend_mv(features, args.n, locked, single, mv_scorer)
    if args.emit == "vegalite":
        for spec in mv.charts:
            print(emit_vegalite(spec, features))
    else:
        payload = {
            "mv": mv.to_json(),
            "mv_score": score_mv(mv_scorer, mv, single, features),
            "vegalite": [json.loads(emit_vegalite(spec, features)) for spec in mv.charts],
        }
        print(json.dumps(payload, sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .config import load_config
    from .service import create_app

    config = load_config(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    if args.seed is not None:
        config.seed = args.seed
    app = create_app(config)  # missing model paths abort here
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


_COMMANDS = {
    "gen-synth": _cmd_gen_synth,
    "pairs": _cmd_pairs,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "recommend": _cmd_recommend,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    np.seterr(all="raise", under="ignore")
    try:
        return _COMMANDS[args.command](args)
    except (MvForgeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
