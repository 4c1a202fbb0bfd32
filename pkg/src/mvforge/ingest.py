"""CSV ingestion: parsing, per-column type inference, and statistical profiling.

A parsed table is immutable. Missing cells are represented as ``None``
(never a sentinel string); a cell is missing when its raw text is empty or
whitespace-only. All profile statistics are finite by construction:
whenever a statistic is undefined for a column (std of a constant column,
skewness of fewer than three values, ...) it is exactly 0.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from dataclasses import dataclass, fields
from datetime import date, datetime

import numpy as np

from .errors import EmptyInput, MalformedCsv

COLUMN_TYPES = ("quantitative", "nominal", "ordinal", "temporal", "boolean")

# Cells longer than this many bytes are truncated at parse time; headers never are.
MAX_CELL_BYTES = 1024

# Fraction of non-missing cells that must satisfy a parse rule for the
# column to take that type.
TYPE_THRESHOLD = 0.95

_BOOL_VOCAB = {"true", "false", "0", "1", "yes", "no"}
_YEAR_RE = re.compile(r"^\d{4}$")
_MONTHS = {
    "january", "february", "march", "april", "may", "june", "july",
    "august", "september", "october", "november", "december",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
}
_WEEKDAYS = {
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
    "mon", "tue", "wed", "thu", "fri", "sat", "sun",
}
# Vocabularies whose members carry an inherent order; a column is ordinal
# when its distinct values all come from a single one of these.
_ORDINAL_VOCABS = (
    _MONTHS,
    _WEEKDAYS,
    {"low", "medium", "high"},
    {"small", "medium", "large"},
)

_LOG_SCALE = math.log(1.0 + 1e6)


@dataclass(frozen=True)
class Column:
    index: int
    header: str
    values: tuple
    inferred_type: str


@dataclass(frozen=True)
class DataTable:
    table_id: str
    name: str
    columns: tuple
    row_count: int


@dataclass(frozen=True)
class ColumnProfile:
    """The 24 per-column statistics, in feature-layout order.

    Numeric aggregates are computed on min-max-normalized values, and
    ratio statistics lie in [0, 1], so every statistic is invariant under
    positive rescaling of a quantitative column.
    """

    row_count_log: float
    missing_ratio: float
    distinct_count_log: float
    distinct_ratio: float
    norm_mean: float
    norm_std: float
    norm_median: float
    skewness_clamped: float
    range_log: float
    monotonic_increasing: float
    monotonic_decreasing: float
    is_sorted_any: float
    negative_ratio: float
    zero_ratio: float
    integer_ratio: float
    outlier_ratio: float
    mean_char_length_log: float
    max_char_length_log: float
    is_year_like: float
    month_name_ratio: float
    weekday_name_ratio: float
    all_unique_flag: float
    mode_frequency_ratio: float
    entropy_norm: float

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


PROFILE_STAT_NAMES = tuple(f.name for f in fields(ColumnProfile))


def _split_records(text: str):
    """RFC-4180 state machine. Returns a list of records (lists of cell strings).

    Raises MalformedCsv when a quoted field is still open at end of input.
    Handles CRLF/LF line endings and escaped quotes ("" inside a quoted field).
    """
    records = []
    field_chars = []
    record = []
    in_quotes = False
    quote_open_offset = 0
    quote_open_line = 1
    line = 1
    i = 0
    n = len(text)
    saw_quote = False  # current field was quoted

    def end_field():
        record.append("".join(field_chars))
        field_chars.clear()

    def end_record():
        end_field()
        records.append(list(record))
        record.clear()

    while i < n:
        ch = text[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and text[i + 1] == '"':
                    field_chars.append('"')
                    i += 2
                    continue
                in_quotes = False
            else:
                if ch == "\n":
                    line += 1
                field_chars.append(ch)
            i += 1
        else:
            if ch == '"' and not field_chars and not saw_quote:
                in_quotes = True
                saw_quote = True
                quote_open_offset = i
                quote_open_line = line
                i += 1
            elif ch == ",":
                end_field()
                saw_quote = False
                i += 1
            elif ch == "\r" and i + 1 < n and text[i + 1] == "\n":
                end_record()
                saw_quote = False
                line += 1
                i += 2
            elif ch == "\n" or ch == "\r":
                end_record()
                saw_quote = False
                line += 1
                i += 1
            else:
                field_chars.append(ch)
                i += 1

    if in_quotes:
        raise MalformedCsv("unclosed quote", offset=quote_open_offset, line=quote_open_line)
    if field_chars or record:
        end_record()
    # Drop a trailing empty record produced by a final newline.
    if records and records[-1] == [""]:
        records.pop()
    return records


def _truncate_cell(raw: str) -> str:
    encoded = raw.encode("utf-8")
    if len(encoded) <= MAX_CELL_BYTES:
        return raw
    return encoded[:MAX_CELL_BYTES].decode("utf-8", errors="ignore")


def parse_csv(data: bytes, name: str) -> DataTable:
    """Parse RFC-4180 CSV bytes (UTF-8, header row required) into a DataTable.

    Ragged rows are padded with missing markers; rows longer than the header
    are truncated to the header width. Raises EmptyInput for zero data rows
    or zero columns and MalformedCsv for an unclosed quote.
    """
    text = data.decode("utf-8-sig")
    records = _split_records(text)
    if not records:
        raise EmptyInput("no records in input")
    header = records[0]
    if header == [""] or not header:
        raise EmptyInput("empty header row")
    rows = records[1:]
    if not rows:
        raise EmptyInput("no data rows after header")

    n_cols = len(header)
    cells = [[] for _ in range(n_cols)]
    for row in rows:
        for j in range(n_cols):
            raw = row[j] if j < len(row) else ""
            if raw.strip() == "":
                cells[j].append(None)
            else:
                cells[j].append(_truncate_cell(raw))

    table_id = hashlib.sha256(name.encode("utf-8") + b"\x00" + data).hexdigest()[:16]
    columns = []
    for j in range(n_cols):
        values = tuple(cells[j])
        col = Column(index=j, header=header[j].strip(), values=values, inferred_type="nominal")
        columns.append(
            Column(index=j, header=col.header, values=values, inferred_type=infer_type(col))
        )
    return DataTable(table_id=table_id, name=name, columns=tuple(columns), row_count=len(rows))


def _parse_number(raw: str):
    try:
        v = float(raw.strip())
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _parse_iso_temporal(raw: str) -> bool:
    s = raw.strip()
    for parser in (date.fromisoformat, datetime.fromisoformat):
        try:
            parser(s)
            return True
        except ValueError:
            pass
    return False


def infer_type(column: Column) -> str:
    """Classify a column as one of the five supported data types.

    Priority: boolean -> temporal -> quantitative -> ordinal -> nominal.
    Deterministic for fixed input; all-missing columns are nominal.
    """
    present = [v for v in column.values if v is not None]
    if not present:
        return "nominal"
    n = len(present)

    bools = sum(1 for v in present if v.strip().lower() in _BOOL_VOCAB)
    if bools / n >= TYPE_THRESHOLD:
        return "boolean"

    iso = sum(1 for v in present if _parse_iso_temporal(v))
    if iso / n >= TYPE_THRESHOLD:
        return "temporal"
    header = column.header.lower()
    if ("year" in header or "date" in header) and all(
        _YEAR_RE.match(v.strip()) and 1500 <= int(v.strip()) <= 2100 for v in present
    ):
        return "temporal"

    numeric = sum(1 for v in present if _parse_number(v) is not None)
    if numeric / n >= TYPE_THRESHOLD:
        return "quantitative"

    distinct = {v.strip().lower() for v in present}
    for vocab in _ORDINAL_VOCABS:
        if distinct <= vocab:
            return "ordinal"
    return "nominal"


def _log_scaled(x: float) -> float:
    return math.log1p(max(x, 0.0)) / _LOG_SCALE


def profile(column: Column) -> ColumnProfile:
    """Compute the 24-statistic profile for a typed column. Total: never NaN/inf."""
    n = len(column.values)
    present = [v for v in column.values if v is not None]
    stats = dict.fromkeys(PROFILE_STAT_NAMES, 0.0)

    if not present:
        # Degenerate column: missing ratio is the only signal carried.
        stats["missing_ratio"] = 1.0 if n > 0 else 0.0
        return ColumnProfile(**stats)

    n_present = len(present)
    stats["row_count_log"] = _log_scaled(n)
    stats["missing_ratio"] = (n - n_present) / n

    counts = Counter(present)
    d = len(counts)
    stats["distinct_count_log"] = _log_scaled(d)
    stats["distinct_ratio"] = d / n_present
    stats["all_unique_flag"] = 1.0 if d == n_present else 0.0
    mode_count = max(counts.values())
    stats["mode_frequency_ratio"] = mode_count / n_present
    if d >= 2:
        probs = np.array(sorted(counts.values()), dtype=np.float64) / n_present
        entropy = float(-(probs * np.log(probs)).sum())
        stats["entropy_norm"] = min(entropy / math.log(d), 1.0)

    lowered = [v.strip().lower() for v in present]
    stats["month_name_ratio"] = sum(1 for v in lowered if v in _MONTHS) / n_present
    stats["weekday_name_ratio"] = sum(1 for v in lowered if v in _WEEKDAYS) / n_present

    if column.inferred_type in ("nominal", "ordinal"):
        lengths = [len(v) for v in present]
        stats["mean_char_length_log"] = _log_scaled(sum(lengths) / n_present)
        stats["max_char_length_log"] = _log_scaled(max(lengths))

    if column.inferred_type == "temporal" and all(
        _YEAR_RE.match(v.strip()) and 1500 <= int(v.strip()) <= 2100 for v in present
    ):
        stats["is_year_like"] = 1.0

    numbers = [x for x in (_parse_number(v) for v in present) if x is not None]
    if numbers:
        arr = np.array(numbers, dtype=np.float64)
        n_num = len(arr)
        lo, hi = float(arr.min()), float(arr.max())
        if hi > lo:
            norm = (arr - lo) / (hi - lo)
            stats["norm_mean"] = float(norm.mean())
            stats["norm_std"] = float(norm.std())
            stats["norm_median"] = float(np.median(norm))
            stats["range_log"] = _log_scaled(1.0)
            if n_num >= 3 and norm.std() > 0:
                centered = norm - norm.mean()
                skew = float((centered**3).mean() / norm.std() ** 3)
                stats["skewness_clamped"] = max(-3.0, min(3.0, skew)) / 3.0
            z = (arr - arr.mean()) / arr.std() if arr.std() > 0 else np.zeros(n_num)
            stats["outlier_ratio"] = float((np.abs(z) > 3).sum()) / n_num
            # on normalized values (integral there means sitting on an extreme),
            # so the statistic survives rescaling like everything else here
            stats["integer_ratio"] = float((norm == np.floor(norm)).sum()) / n_num
        if n_num >= 2:
            diffs = np.diff(arr)
            stats["monotonic_increasing"] = 1.0 if bool((diffs >= 0).all()) else 0.0
            stats["monotonic_decreasing"] = 1.0 if bool((diffs <= 0).all()) else 0.0
        stats["negative_ratio"] = float((arr < 0).sum()) / n_num
        stats["zero_ratio"] = float((arr == 0).sum()) / n_num

    if n_present >= 2:
        if len(numbers) == n_present:
            seq = numbers
        else:
            seq = present
        ascending = all(a <= b for a, b in zip(seq, seq[1:]))
        descending = all(a >= b for a, b in zip(seq, seq[1:]))
        stats["is_sorted_any"] = 1.0 if (ascending or descending) else 0.0

    return ColumnProfile(**stats)


def table_summary(table: DataTable) -> dict:
    """JSON-ready summary of a table: per-column types and profiles, no values."""
    summaries = []
    for col in table.columns:
        prof = profile(col)
        summaries.append(
            {
                "index": col.index,
                "header": col.header,
                "type": col.inferred_type,
                "profile": {name: getattr(prof, name) for name in PROFILE_STAT_NAMES},
            }
        )
    return {
        "table_id": table.table_id,
        "name": table.name,
        "row_count": table.row_count,
        "columns": summaries,
    }
