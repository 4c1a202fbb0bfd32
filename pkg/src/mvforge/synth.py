"""Seeded synthetic corpora and authoring sessions for training and evaluation.

The real-world corpus this pipeline was designed around is not
redistributable, so experiments run on generated tables whose ground-truth
charts maximize a planted utility over the same 96-dim features the models
consume. The utility vector is written next to the corpus, which gives the
test suite an exact oracle: a scorer wired to the utility must rank every
generated ground truth first on its own corpus.

Two corpus flavours exist: a linear utility (realizable by a linear model on
flattened features, so the RankSVM baseline can saturate) and an
interaction-term utility (a product of two feature projections) that a
linear model provably cannot represent.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .chartspec import TYPE_RANK, ChartType, assign_encodings
from .errors import EmptyDataset
from .featurize import TableFeatures, build_chart_input
from .ingest import parse_csv
from .mvrank import CHART_EMBED_DIM, MVState, embed_mv
from .neural import sigmoid
from .provenance import AuthoringSession
from .ranker import enumerate_subsets

GROUND_TRUTH_FILE = "ground_truth.jsonl"
UTILITY_FILE = "utility.json"
MV_UTILITY_FILE = "mv_utility.json"

_NOMINAL_POOLS = {
    "region": ["north", "south", "east", "west", "central", "overseas"],
    "product": ["widget", "gadget", "sprocket", "gizmo", "doohickey", "whatsit", "doodad"],
    "segment": ["consumer", "corporate", "home office", "public sector"],
    "city": ["berlin", "lyon", "osaka", "porto", "quito", "tunis", "oslo", "perth"],
    "status": ["open", "closed", "pending", "escalated", "archived"],
    "material": ["steel", "oak", "carbon", "glass", "nylon", "bamboo"],
}
_QUANT_HEADERS = [
    "price", "sales", "profit", "weight", "distance", "duration", "score",
    "quantity", "rating", "revenue", "cost", "temperature", "pressure",
]
_YEAR_HEADERS = ["year", "model_year", "release_year", "fiscal_year"]
_DATE_HEADERS = ["date", "order_date", "ship_date"]
_BOOL_HEADERS = ["returned", "active", "in_stock", "verified"]
_ORDINAL_CHOICES = [
    ("month", ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]),
    ("priority", ["low", "medium", "high"]),
    ("size", ["small", "medium", "large"]),
]

_COLUMN_FLAVOURS = (
    "quantitative", "quantitative", "quantitative",  # measures dominate real tables
    "nominal", "nominal",
    "year", "date", "boolean", "ordinal",
)


def _render_number(rng, value: float) -> str:
    return f"{value:.4g}"


def _make_column(rng, flavour, used_headers, n_rows):
    """Returns (header, list of cell strings, may be empty strings for missing)."""
    if flavour == "quantitative":
        header = _QUANT_HEADERS[rng.integers(len(_QUANT_HEADERS))]
        kind = rng.integers(3)
        if kind == 0:
            vals = rng.uniform(rng.uniform(-50, 0), rng.uniform(10, 500), n_rows)
        elif kind == 1:
            vals = rng.normal(rng.uniform(-20, 100), rng.uniform(0.5, 30), n_rows)
        else:
            vals = rng.lognormal(rng.uniform(0, 3), rng.uniform(0.2, 1.0), n_rows)
        if rng.random() < 0.3:
            vals = np.round(vals)
        cells = [_render_number(rng, v) for v in vals]
    elif flavour == "nominal":
        pool_name = list(_NOMINAL_POOLS)[rng.integers(len(_NOMINAL_POOLS))]
        pool = _NOMINAL_POOLS[pool_name]
        k = int(rng.integers(2, len(pool) + 1))
        cats = list(pool[:k])
        header = pool_name
        cells = [cats[rng.integers(k)] for _ in range(n_rows)]
    elif flavour == "year":
        header = _YEAR_HEADERS[rng.integers(len(_YEAR_HEADERS))]
        start = int(rng.integers(1950, 2015))
        span = int(rng.integers(3, 40))
        cells = [str(start + int(rng.integers(span))) for _ in range(n_rows)]
    elif flavour == "date":
        header = _DATE_HEADERS[rng.integers(len(_DATE_HEADERS))]
        year = int(rng.integers(2000, 2024))
        cells = [
            f"{year}-{int(rng.integers(1, 13)):02d}-{int(rng.integers(1, 29)):02d}"
            for _ in range(n_rows)
        ]
    elif flavour == "boolean":
        header = _BOOL_HEADERS[rng.integers(len(_BOOL_HEADERS))]
        style = rng.integers(3)
        vocab = [("yes", "no"), ("true", "false"), ("0", "1")][style]
        cells = [vocab[rng.integers(2)] for _ in range(n_rows)]
    else:  # ordinal
        header, vocab = _ORDINAL_CHOICES[rng.integers(len(_ORDINAL_CHOICES))]
        cells = [vocab[rng.integers(len(vocab))] for _ in range(n_rows)]

    if rng.random() < 0.25:
        miss = rng.random(n_rows) < rng.uniform(0.02, 0.12)
        cells = ["" if m else c for c, m in zip(cells, miss)]

    base = header
    bump = 2
    while header in used_headers:
        header = f"{base}_{bump}"
        bump += 1
    used_headers.add(header)
    return header, cells


def _make_table_csv(rng, n_cols, n_rows) -> str:
    used = set()
    headers = []
    columns = []
    flavours = [_COLUMN_FLAVOURS[rng.integers(len(_COLUMN_FLAVOURS))] for _ in range(n_cols)]
    if not any(f == "quantitative" for f in flavours):
        flavours[int(rng.integers(n_cols))] = "quantitative"
    for flavour in flavours:
        header, cells = _make_column(rng, flavour, used, n_rows)
        headers.append(header)
        columns.append(cells)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    for r in range(n_rows):
        writer.writerow([columns[c][r] for c in range(n_cols)])
    return buf.getvalue()


def planted_chart_type(types) -> ChartType:
    """Deterministic chart-type label from the column types of a selection."""
    n_measures = sum(1 for t in types if t == "quantitative")
    has_temporal = any(t == "temporal" for t in types)
    if has_temporal:
        return ChartType.AREA if n_measures >= 2 else ChartType.LINE
    if n_measures == len(types):
        return ChartType.SCATTER if n_measures >= 2 else ChartType.BAR
    if n_measures >= 1:
        return ChartType.BAR
    return ChartType.PIE


class PlantedOracle:
    """Scores subsets with the planted utility; the corpus's exact ranker.

    The utility is linear over the flattened, padded 4x96 chart input (one
    weight per feature slot), optionally plus a product of two projections
    that no linear model can represent.
    """

    def __init__(self, utility: dict):
        self.w = np.asarray(utility["w"], dtype=np.float64)
        self.k_bias = np.asarray(utility.get("k_bias", [0.0] * 4), dtype=np.float64)
        self.interaction = bool(utility.get("interaction", False))
        self.v = np.asarray(utility["v"], dtype=np.float64) if self.interaction else None
        self.q = np.asarray(utility["q"], dtype=np.float64) if self.interaction else None
        self.beta = float(utility.get("beta", 0.0))
        center = utility.get("center")
        self.center = np.asarray(center, dtype=np.float64) if center is not None else None

    def utility(self, features, subset) -> float:
        flat = build_chart_input(features, subset).padded_matrix().ravel()
        u = float(self.w @ flat) + float(self.k_bias[len(tuple(subset)) - 1])
        if self.interaction:
            x = flat - self.center if self.center is not None else flat
            u += self.beta * float(self.v @ x) * float(self.q @ x)
        return u

    def subset_scores(self, features, subsets):
        utilities = np.array([self.utility(features, s) for s in subsets])
        p_type = np.zeros((len(subsets), 5))
        for i, subset in enumerate(subsets):
            types = [features.types[j] for j in sorted(subset)]
            p_type[i, TYPE_RANK[planted_chart_type(types)]] = 1.0
        return sigmoid(utilities), p_type


def _draw_shared_weights(rng) -> np.ndarray:
    """One 96-dim unit weight vector tiled across the 4 slots, so a chart's
    utility is the sum of its columns' utilities (order-free, length-free).

    Statistics and type dims get most of the mass; the hashed-header block
    is down-weighted because its buckets barely generalize across tables.
    """
    w = rng.normal(0.0, 1.0, 96)
    w[:64] *= 0.2
    w[95] = 0.0  # padding flag stays inert
    w /= np.linalg.norm(w)
    return np.tile(w, 4)


def _draw_utility(rng, interaction: bool, seed) -> dict:
    """Planted utility: linear in the flat chart features plus a per-corpus
    cardinality bias; optionally a centered product of two projections.

    The bias gently penalizes wide charts (against the extreme-value pull of
    the larger subset counts) so ground-truth sizes spread over 1-4. It
    cancels inside same-cardinality pairs, so pair ranking on the linear
    corpus stays exactly realizable by a linear model on flat features.

    The interaction term is centered on the mean chart vector of a
    calibration sample and scaled to dominate the linear part. Centering
    kills the first-order linear leakage of the product, which is what caps
    a linear ranker on the interaction corpus.
    """
    utility = {"w": _draw_shared_weights(rng).tolist(), "interaction": interaction}
    slope = rng.normal(0.08, 0.015)
    k_bias = [-slope * k + rng.normal(0.0, 0.03) for k in range(4)]
    utility["k_bias"] = k_bias
    if interaction:
        w = np.asarray(utility["w"])
        v = _draw_shared_weights(rng)
        q = _draw_shared_weights(rng)
        center, beta = _calibrate_interaction(seed, w, v, q, target_ratio=3.0)
        utility.update(
            {"v": v.tolist(), "q": q.tolist(), "beta": beta, "center": center.tolist()}
        )
    return utility


def _calibrate_interaction(seed, w, v, q, target_ratio, n_tables=20):
    """Mean chart vector and interaction scale from a throwaway table sample."""
    flats = []
    for t in range(n_tables):
        rng = np.random.default_rng((seed, 0xCA11B, t))
        n_cols = int(rng.integers(3, 9))
        n_rows = int(rng.integers(40, 121))
        table = parse_csv(_make_table_csv(rng, n_cols, n_rows).encode("utf-8"), f"cal_{t}")
        features = TableFeatures.from_table(table)
        for subset in enumerate_subsets(n_cols):
            flats.append(build_chart_input(features, subset).padded_matrix().ravel())
    flats = np.stack(flats)
    center = flats.mean(axis=0)
    centered = flats - center
    linear_std = float((flats @ w).std())
    product_std = float(((centered @ v) * (centered @ q)).std())
    beta = target_ratio * linear_std / max(product_std, 1e-12)
    return center, beta


def generate_corpus(out_dir, n_tables, cols_max=8, seed=7, gts_per_table=1,
                    interaction=False, rows=(40, 120), separation=0.3,
                    max_attempts=25) -> dict:
    """Write ``n_tables`` CSVs plus ground truths maximizing a planted utility.

    Ground truths are the top-ranked column subsets under the utility; a
    table is resampled until each ground truth clears every same-cardinality
    rival by ``separation`` times the table's utility spread, so the corpus
    is separable by construction.
    """
    out_dir = Path(out_dir)
    (out_dir / "tables").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    utility = _draw_utility(rng, interaction, seed)
    utility["seed"] = seed
    oracle = PlantedOracle(utility)

    records = []
    for t in range(n_tables):
        accepted = None
        for attempt in range(max_attempts):
            table_rng = np.random.default_rng((seed, t, attempt))
            n_cols = int(table_rng.integers(3, cols_max + 1))
            n_rows = int(table_rng.integers(rows[0], rows[1] + 1))
            name = f"table_{t:04d}"
            csv_text = _make_table_csv(table_rng, n_cols, n_rows)
            table = parse_csv(csv_text.encode("utf-8"), name)
            features = TableFeatures.from_table(table)
            subsets = enumerate_subsets(n_cols)
            utilities = np.array([oracle.utility(features, s) for s in subsets])
            spread = float(utilities.std())
            if spread == 0:
                continue
            order = sorted(range(len(subsets)), key=lambda i: (-utilities[i], subsets[i]))
            gts = [subsets[i] for i in order[:gts_per_table]]
            gt_set = {tuple(g) for g in gts}
            ok = True
            for g in gts:
                k = len(g)
                rivals = [
                    utilities[i]
                    for i, s in enumerate(subsets)
                    if len(s) == k and tuple(s) not in gt_set
                ]
                gap_ok = not rivals or (
                    oracle.utility(features, g) - max(rivals) >= separation * spread
                )
                if not gap_ok:
                    ok = False
                    break
            if ok:
                accepted = (name, csv_text, table, features, gts)
                break
        if accepted is None:
            # rare: fall back to the last attempt without the gap guarantee
            accepted = (name, csv_text, table, features, gts)
        name, csv_text, table, features, gts = accepted
        csv_path = out_dir / "tables" / f"{name}.csv"
        csv_path.write_text(csv_text, encoding="utf-8")
        charts = [
            {
                "columns": list(g),
                "type": planted_chart_type([features.types[j] for j in g]).value,
            }
            for g in gts
        ]
        records.append(
            {"table": {"name": name, "csv_path": str(csv_path.relative_to(out_dir))},
             "charts": charts}
        )

    with open(out_dir / GROUND_TRUTH_FILE, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    with open(out_dir / UTILITY_FILE, "w", encoding="utf-8") as fh:
        json.dump(utility, fh, sort_keys=True, separators=(",", ":"))
    return {"tables": n_tables, "ground_truths": sum(len(r["charts"]) for r in records)}


def load_corpus(corpus_dir):
    """Yield (DataTable, [(columns, ChartType), ...]) for each corpus table."""
    corpus_dir = Path(corpus_dir)
    gt_path = corpus_dir / GROUND_TRUTH_FILE
    if not gt_path.exists():
        raise EmptyDataset(f"no {GROUND_TRUTH_FILE} in {corpus_dir}")
    entries = []
    with open(gt_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            csv_path = corpus_dir / rec["table"]["csv_path"]
            table = parse_csv(csv_path.read_bytes(), rec["table"]["name"])
            charts = [(tuple(c["columns"]), ChartType(c["type"])) for c in rec["charts"]]
            entries.append((table, charts))
    if not entries:
        raise EmptyDataset(f"{gt_path} is empty")
    return entries


def load_utility(corpus_dir) -> PlantedOracle:
    with open(Path(corpus_dir) / UTILITY_FILE, encoding="utf-8") as fh:
        return PlantedOracle(json.load(fh))


# --- synthetic authoring sessions ------------------------------------------


def _draw_mv_utility(rng) -> np.ndarray:
    """Weights over the 9 chart-embedding dims; zero on the two model-score
    dims so the planted ordering holds under any single-chart model."""
    v = np.zeros(CHART_EMBED_DIM)
    v[2:] = rng.normal(0.0, 1.0, CHART_EMBED_DIM - 2)
    v /= np.linalg.norm(v)
    return v


def _random_mv(rng, features, max_charts=5) -> MVState:
    n_charts = int(rng.integers(1, max_charts + 1))
    mv = MVState()
    for _ in range(n_charts):
        k = int(rng.integers(1, min(4, features.n_columns) + 1))
        cols = tuple(sorted(rng.choice(features.n_columns, size=k, replace=False).tolist()))
        chart_type = planted_chart_type([features.types[j] for j in cols])
        mv = mv.append(assign_encodings(features, cols, chart_type))
    return mv


def generate_sessions(corpus_dir, out_dir, n_sessions, seed, single_scorer,
                      candidates_per_session=10, separation=0.05) -> list:
    """Write synthetic authoring logs whose final dashboards maximize a
    planted utility over the 9-dim chart embeddings.

    Each session uploads a corpus table, walks through a few intermediate
    dashboards, and ends on the sampled dashboard with the highest utility.
    Returns the written log paths; mv_utility.json lands next to them.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = load_corpus(corpus_dir)
    rng = np.random.default_rng(seed)
    v = _draw_mv_utility(rng)
    with open(out_dir / MV_UTILITY_FILE, "w", encoding="utf-8") as fh:
        json.dump({"v": v.tolist(), "seed": seed}, fh, sort_keys=True, separators=(",", ":"))

    def mv_utility(mv, features):
        return float(v @ embed_mv(mv, single_scorer, features).mean(axis=0))

    paths = []
    written = 0
    attempt = 0
    while written < n_sessions:
        attempt += 1
        session_rng = np.random.default_rng((seed, written, attempt))
        table, _ = tables[int(session_rng.integers(len(tables)))]
        features = TableFeatures.from_table(table)
        sampled = [_random_mv(session_rng, features) for _ in range(candidates_per_session)]
        utilities = [mv_utility(mv, features) for mv in sampled]
        order = sorted(range(len(sampled)), key=lambda i: -utilities[i])
        final = sampled[order[0]]
        intermediates = [sampled[i] for i in order[1:]]
        intermediates = [mv for mv in intermediates if mv.identity() != final.identity()]
        if len(intermediates) < 2:
            continue
        if utilities[order[0]] - utilities[order[1]] < separation:
            continue
        n_inter = int(session_rng.integers(2, min(6, len(intermediates)) + 1))
        # visit order is a random walk; only the final position matters
        visit = [intermediates[i] for i in session_rng.permutation(len(intermediates))[:n_inter]]

        session = AuthoringSession(f"synth-{written:04d}", features, consent=True)
        session.record("upload_table", {"table_id": features.table_id, "name": features.name})
        for mv in visit:
            session.record("recommend_mv_request", {"n_charts": len(mv.charts), "mv": mv.to_json()})
        session.record("recommend_mv_request", {"n_charts": len(final.charts), "mv": final.to_json()})
        paths.append(session.save(consent=True, directory=out_dir))
        written += 1
    return paths
