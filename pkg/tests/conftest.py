import csv
import io

import pytest

from mvforge.featurize import EMBED_DIM, LAYOUT_VERSION, TableFeatures
from mvforge.ingest import parse_csv
from mvforge.mvrank import CHART_EMBED_DIM, MAX_MV_CHARTS, MvScorer
from mvforge.neural import BiLstmScorer, ModelBundle
from mvforge.ranker import SingleChartScorer


def csv_bytes(headers, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def make_table(name, columns):
    """Build a DataTable from {header: [cell, ...]}; None becomes a missing cell."""
    headers = list(columns)
    length = max(len(v) for v in columns.values())
    rows = [
        ["" if columns[h][r] is None else columns[h][r] for h in headers]
        for r in range(length)
    ]
    return parse_csv(csv_bytes(headers, rows), name)


def fresh_single_bundle(seed=0, hidden=16):
    net = BiLstmScorer(
        input_dim=EMBED_DIM, hidden_dim=hidden, head_dims=(16, 1), type_head_dims=(16, 5),
        max_len=4, seed=seed,
    )
    return ModelBundle(
        kind="single_chart",
        layout_version=LAYOUT_VERSION,
        hyper={"input_dim": EMBED_DIM, "hidden_dim": hidden, "head_dims": [16, 1],
               "type_head_dims": [16, 5], "max_len": 4},
        params=net.params,
    )


def fresh_mv_bundle(seed=0, hidden=16):
    net = BiLstmScorer(
        input_dim=CHART_EMBED_DIM, hidden_dim=hidden, head_dims=(16, 1), type_head_dims=None,
        max_len=MAX_MV_CHARTS, seed=seed,
    )
    return ModelBundle(
        kind="mv",
        layout_version=LAYOUT_VERSION,
        hyper={"input_dim": CHART_EMBED_DIM, "hidden_dim": hidden, "head_dims": [16, 1],
               "type_head_dims": None, "max_len": MAX_MV_CHARTS},
        params=net.params,
    )


@pytest.fixture
def cars_table():
    """A cars-shaped table: 9 columns including a 4-digit Year column."""
    rows = [
        ["chevrolet chevelle", "18", "8", "307", "130", "3504", "12", "1970", "USA"],
        ["buick skylark", "15", "8", "350", "165", "3693", "11.5", "1970", "USA"],
        ["toyota corona", "24", "4", "113", "95", "2372", "15", "1971", "Japan"],
        ["datsun pl510", "27", "4", "97", "88", "2130", "14.5", "1971", "Japan"],
        ["volkswagen 1131", "26", "4", "97", "46", "1835", "20.5", "1972", "Europe"],
        ["peugeot 504", "25", "4", "110", "87", "2672", "17.5", "1972", "Europe"],
        ["audi 100 ls", "24", "4", "107", "90", "2430", "14.5", "1973", "Europe"],
        ["saab 99e", "25", "4", "104", "95", "2375", "17.5", "1973", "Europe"],
    ]
    headers = [
        "name", "miles_per_gallon", "cylinders", "displacement", "horsepower",
        "weight", "acceleration", "model_year", "origin",
    ]
    return parse_csv(csv_bytes(headers, rows), "cars")


@pytest.fixture
def cars_features(cars_table):
    return TableFeatures.from_table(cars_table)


@pytest.fixture
def single_scorer():
    return SingleChartScorer(fresh_single_bundle(seed=11))


@pytest.fixture
def mv_scorer():
    return MvScorer(fresh_mv_bundle(seed=12))


class StubMvScorer:
    """Modular dashboard scorer: the mean single-chart score of the charts."""

    def score_sequences(self, seqs):
        import numpy as np

        return np.array([float(np.mean(seq[:, 0])) for seq in seqs])


@pytest.fixture
def stub_mv_scorer():
    return StubMvScorer()
