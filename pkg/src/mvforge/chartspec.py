"""Chart types, deterministic encoding assignment, Vega-Lite emission, identity.

Encoding assignment follows a fixed fill order so that the same column
selection always yields the same chart. Columns are partitioned into
dimensions (nominal/ordinal/temporal/boolean) and measures (quantitative);
dimensions fill positional channels before measures do.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import CardinalityError
from .featurize import MAX_CHART_COLUMNS, TableFeatures, _as_features


class ChartType(str, Enum):
    SCATTER = "scatter"
    BAR = "bar"
    LINE = "line"
    PIE = "pie"
    AREA = "area"


# Deterministic tie-break order for chart types.
TYPE_ORDER = (ChartType.SCATTER, ChartType.BAR, ChartType.LINE, ChartType.PIE, ChartType.AREA)
TYPE_RANK = {t: i for i, t in enumerate(TYPE_ORDER)}

_MARKS = {
    ChartType.SCATTER: "point",
    ChartType.BAR: "bar",
    ChartType.LINE: "line",
    ChartType.PIE: "arc",
    ChartType.AREA: "area",
}

DIMENSION_TYPES = frozenset({"nominal", "ordinal", "temporal", "boolean"})

# Channels a chart of each type may carry, in canonical order.
CHANNELS_BY_TYPE = {
    ChartType.PIE: ("theta", "color", "column", "row", "size"),
}
_DEFAULT_CHANNELS = ("x", "y", "color", "size", "column", "row")


def valid_channels(chart_type: ChartType):
    return CHANNELS_BY_TYPE.get(chart_type, _DEFAULT_CHANNELS)


@dataclass(frozen=True)
class ChartSpec:
    """A column selection with a chart type and derived channel encodings.

    ``encodings`` maps channel -> column index; a channel mapped to None is
    a record-count aggregate. ``transforms`` maps channel -> {"bin": True}
    or {"aggregate": "count"|"mean"|"sum"}.
    """

    column_indices: tuple
    chart_type: ChartType
    encodings: tuple = ()  # tuple of (channel, index-or-None) pairs, insertion order
    transforms: tuple = ()  # tuple of (channel, (op, value)) pairs

    def encoding_map(self) -> dict:
        return dict(self.encodings)

    def transform_map(self) -> dict:
        return {ch: {op: val} for ch, (op, val) in self.transforms}

    def to_json(self) -> dict:
        return {
            "columns": list(self.column_indices),
            "chart_type": self.chart_type.value,
            "encodings": {ch: idx for ch, idx in self.encodings},
            "transforms": {ch: {op: val} for ch, (op, val) in self.transforms},
        }

    @classmethod
    def from_json(cls, data: dict) -> "ChartSpec":
        encodings = tuple((ch, idx) for ch, idx in data.get("encodings", {}).items())
        transforms = tuple(
            (ch, next(iter(spec.items()))) for ch, spec in data.get("transforms", {}).items()
        )
        return cls(
            column_indices=tuple(sorted(data["columns"])),
            chart_type=ChartType(data["chart_type"]),
            encodings=encodings,
            transforms=transforms,
        )


def assign_encodings(source, column_indices, chart_type: ChartType) -> ChartSpec:
    """Derive channel encodings for a column selection, deterministically.

    Fill order: x takes the first dimension (temporal preferred for line and
    area), y the first measure; leftover columns go to color, size, column,
    row, dimensions before measures. A selection with no measure gets a
    count-aggregate y; one with no dimension puts its first measure on x
    (binned for bar charts). Pie charts put the category on color and the
    measure (or count) on theta.
    """
    features = _as_features(source)
    indices = sorted(set(column_indices))
    if not 1 <= len(indices) <= MAX_CHART_COLUMNS:
        raise CardinalityError(f"a chart encodes 1-4 columns, got {len(indices)}")
    for idx in indices:
        if not 0 <= idx < features.n_columns:
            raise IndexError(f"column index {idx} out of range")

    dims = [i for i in indices if features.types[i] in DIMENSION_TYPES]
    measures = [i for i in indices if features.types[i] == "quantitative"]

    encodings = []
    transforms = []
    used = set()

    def take(channel, idx):
        encodings.append((channel, idx))
        used.add(idx)

    if chart_type is ChartType.PIE:
        if dims:
            take("color", dims[0])
            if measures:
                take("theta", measures[0])
            else:
                encodings.append(("theta", None))
                transforms.append(("theta", ("aggregate", "count")))
        else:
            take("theta", measures[0])
            if len(measures) > 1:
                take("color", measures[1])
        rest_channels = ["column", "row", "size"]
    else:
        x_col = None
        if chart_type in (ChartType.LINE, ChartType.AREA):
            temporal = [i for i in dims if features.types[i] == "temporal"]
            if temporal:
                x_col = temporal[0]
        if x_col is None and dims:
            x_col = dims[0]
        if x_col is not None:
            take("x", x_col)
        else:
            take("x", measures[0])
            if chart_type is ChartType.BAR:
                transforms.append(("x", ("bin", True)))
        remaining_measures = [i for i in measures if i not in used]
        if remaining_measures:
            take("y", remaining_measures[0])
        else:
            encodings.append(("y", None))
            transforms.append(("y", ("aggregate", "count")))
        rest_channels = ["color", "size", "column", "row"]

    leftover = [i for i in dims if i not in used] + [i for i in measures if i not in used]
    for idx, channel in zip(leftover, rest_channels):
        take(channel, idx)

    return ChartSpec(
        column_indices=tuple(indices),
        chart_type=chart_type,
        encodings=tuple(encodings),
        transforms=tuple(transforms),
    )


_VEGA_TYPES = {
    "quantitative": "quantitative",
    "nominal": "nominal",
    "ordinal": "ordinal",
    "temporal": "temporal",
    "boolean": "nominal",
}


def emit_vegalite(spec: ChartSpec, source) -> str:
    """Emit a canonical Vega-Lite v5 unit spec (sorted keys, no whitespace).

    Data is referenced by the named source "table"; the serving layer is
    responsible for injecting values or a URL under that name.
    """
    features = _as_features(source)
    transform_map = spec.transform_map()
    encoding = {}
    for channel, idx in spec.encodings:
        if idx is None:
            entry = {"aggregate": "count", "type": "quantitative"}
        else:
            entry = {
                "field": features.headers[idx],
                "type": _VEGA_TYPES[features.types[idx]],
            }
            for op, val in transform_map.get(channel, {}).items():
                entry[op] = val
        encoding[channel] = entry
    doc = {
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "data": {"name": "table"},
        "mark": _MARKS[spec.chart_type],
        "encoding": encoding,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def chart_identity(spec: ChartSpec, drop_alternative_types: bool = True):
    """Deduplication key: the column set, optionally joined with chart type."""
    columns = tuple(sorted(spec.column_indices))
    if drop_alternative_types:
        return columns
    return (columns, spec.chart_type.value)
