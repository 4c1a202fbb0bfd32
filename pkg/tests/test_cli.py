import json
from pathlib import Path

import pytest

from conftest import csv_bytes, fresh_single_bundle
from mvforge.cli import main
from mvforge.neural import save_bundle


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One small corpus + pairs + models, shared across CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus"
    assert main(["gen-synth", "--tables", "12", "--seed", "5", "--out", str(corpus),
                 "--sessions", "15"]) == 0
    pairs = root / "pairs.jsonl"
    assert main(["pairs", "--corpus", str(corpus), "--out", str(pairs)]) == 0
    single = root / "single.json"
    assert main(["train", "--kind", "single", "--pairs", str(pairs), "--epochs", "3",
                 "--seed", "5", "--out", str(single)]) == 0
    mv_pairs = root / "mv_pairs.jsonl"
    assert main(["pairs", "--provenance", str(corpus / "sessions"), "--out", str(mv_pairs),
                 "--model-single", str(single)]) == 0
    mv_model = root / "mv.json"
    assert main(["train", "--kind", "mv", "--pairs", str(mv_pairs), "--epochs", "3",
                 "--seed", "5", "--out", str(mv_model)]) == 0
    return root


def test_gen_synth_deterministic(tmp_path, capsys):
    code, out, _ = run(capsys, "gen-synth", "--tables", "4", "--seed", "9",
                       "--out", str(tmp_path / "a"))
    assert code == 0
    assert "tables: 4" in out
    run(capsys, "gen-synth", "--tables", "4", "--seed", "9", "--out", str(tmp_path / "b"))
    for rel in ["ground_truth.jsonl", "utility.json", "tables/table_0000.csv"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_pairs_counters_printed(workspace, tmp_path, capsys):
    code, out, _ = run(capsys, "pairs", "--corpus", str(workspace / "corpus"),
                       "--out", str(tmp_path / "p.jsonl"))
    assert code == 0
    assert "tables skipped (>10 columns): 0" in out
    assert "charts skipped (>4 columns): 0" in out
    assert "pairs: " in out


def test_pairs_empty_dir_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "pairs", "--provenance", str(tmp_path), "--out",
                       str(tmp_path / "x.jsonl"))
    assert code == 2
    assert "no .mvlog.jsonl files" in err


def test_pairs_missing_corpus_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "pairs", "--corpus", str(tmp_path / "nowhere"),
                       "--out", str(tmp_path / "x.jsonl"))
    assert code == 2
    assert "no usable corpus" in err


def test_train_deterministic_bytes(workspace, tmp_path, capsys):
    out1 = tmp_path / "m1.json"
    out2 = tmp_path / "m2.json"
    for out in (out1, out2):
        code, _, _ = run(capsys, "train", "--kind", "single", "--pairs",
                         str(workspace / "pairs.jsonl"), "--epochs", "2", "--seed", "3",
                         "--out", str(out))
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_train_rejects_mismatched_layout(workspace, tmp_path, capsys):
    bundle = fresh_single_bundle()
    bundle.layout_version = 77
    stale = tmp_path / "stale.json"
    stale.write_bytes(save_bundle(bundle))
    code, _, err = run(capsys, "train", "--kind", "single",
                       "--pairs", str(workspace / "pairs.jsonl"),
                       "--init-from", str(stale), "--out", str(tmp_path / "out.json"))
    assert code == 1
    assert "layout_version" in err


def test_eval_model_accuracy(workspace, capsys):
    code, out, _ = run(capsys, "eval", "--model", str(workspace / "single.json"),
                       "--pairs", str(workspace / "pairs.jsonl"))
    assert code == 0
    assert "pair accuracy:" in out


def test_eval_mccv_rows_and_baseline(workspace, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code, out, _ = run(capsys, "eval", "--pairs", str(workspace / "pairs.jsonl"),
                       "--mccv", "3", "--split", "0.8", "--epochs", "2", "--seed", "1",
                       "--baseline", "ranksvm", "--out", str(report_path))
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["metric"] == "pair_accuracy"
    assert len(report["runs"]) == 3
    assert {"mean", "std"} <= set(report)
    assert out.count("\n0  ") + out.count("\n  0  ") >= 1
    assert "mean:" in out and "std:" in out
    assert "splits disjoint: yes" in out
    assert "model: ranksvm" in out
    ours_rows = [line for line in out.splitlines() if line.strip().startswith(("0 ", "1 ", "2 "))]
    assert len(ours_rows) >= 6  # 3 runs for ours + 3 for the baseline


def test_eval_recall_monotone_and_csv(workspace, tmp_path, capsys):
    csv_out = tmp_path / "recall.csv"
    code, out, _ = run(capsys, "eval", "--recall", "--corpus", str(workspace / "corpus"),
                       "--oracle", "--k", "1,3,5,10", "--out", str(csv_out))
    assert code == 0
    rows = [line.split(",") for line in csv_out.read_text().strip().splitlines()[1:]]
    recalls = [float(r[1]) for r in rows]
    assert recalls == sorted(recalls)
    assert recalls[0] == 1.0  # oracle recall@1 on its own corpus
    code, out, _ = run(capsys, "eval", "--recall", "--corpus", str(workspace / "corpus"),
                       "--model", str(workspace / "single.json"), "--k", "3")
    assert code == 0 and "recall@3" in out


def test_recommend_lock_and_determinism(workspace, capsys):
    table = next((workspace / "corpus" / "tables").glob("*.csv"))
    argv = ["recommend", "--table", str(table), "--n", "3", "--lock", "0,1:bar",
            "--model-single", str(workspace / "single.json"),
            "--model-mv", str(workspace / "mv.json"), "--emit", "vegalite"]
    code, out1, _ = run(capsys, *argv)
    assert code == 0
    specs = [json.loads(line) for line in out1.strip().splitlines()]
    assert len(specs) == 3
    assert specs[0]["mark"] == "bar"
    code, out2, _ = run(capsys, *argv)
    assert out1 == out2

    code, out, _ = run(capsys, *argv[:-2], "--emit", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["mv"]["charts"][0]["chart_type"] == "bar"
    assert 0 < payload["mv_score"] < 1


def test_recommend_n_zero_is_usage_error(workspace, capsys):
    table = next((workspace / "corpus" / "tables").glob("*.csv"))
    with pytest.raises(SystemExit) as exit_info:
        main(["recommend", "--table", str(table), "--n", "0",
              "--model-single", str(workspace / "single.json"),
              "--model-mv", str(workspace / "mv.json")])
    assert exit_info.value.code == 2
    assert "--n" in capsys.readouterr().err


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["train"])  # missing required arguments
    assert exit_info.value.code == 2


def test_serve_rejects_missing_model(tmp_path, capsys):
    config = tmp_path / "cfg.toml"
    config.write_text(f'model_single = "{tmp_path}/absent.json"\n', encoding="utf-8")
    code, _, err = run(capsys, "serve", "--config", str(config))
    assert code == 1
