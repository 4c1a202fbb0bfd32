"""Fixed 96-dimensional column embeddings and per-chart input assembly.

Layout (version 1):
  entries  0-63  signed character-trigram hash of the lowercased header,
                 L2-normalized (all-zero for an empty header)
  entries 64-87  the 24 profile statistics, in ColumnProfile field order
  entries 88-95  one-hot over {quantitative, nominal, ordinal, temporal,
                 boolean, id_like, reserved, padding}; id_like overrides the
                 base type for all-unique columns with an id-shaped header

Padding embeddings (used when a chart input is padded to length 4 for the
flat-input baselines) are all-zero except the padding flag.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import CardinalityError
from .ingest import PROFILE_STAT_NAMES, Column, ColumnProfile, DataTable, profile

LAYOUT_VERSION = 1

EMBED_DIM = 96
SEMANTIC_DIM = 64
PROFILE_OFFSET = 64
TYPE_OFFSET = 88
MAX_CHART_COLUMNS = 4

_TYPE_SLOTS = {
    "quantitative": 88,
    "nominal": 89,
    "ordinal": 90,
    "temporal": 91,
    "boolean": 92,
    "id_like": 93,
}
PADDING_SLOT = 95

_ID_HEADER_RE = re.compile(r"(^|_)id$|^index$", re.IGNORECASE)

# Index of all_unique_flag within the profile block, used for id_like detection.
_ALL_UNIQUE_IDX = PROFILE_STAT_NAMES.index("all_unique_flag")


def _trigram_hash(trigram: str) -> int:
    digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def semantic_embedding(header: str) -> np.ndarray:
    """Signed 64-bucket trigram hash of the lowercased header, L2-normalized."""
    vec = np.zeros(SEMANTIC_DIM, dtype=np.float64)
    if not header:
        return vec
    padded = "\x02" + header.lower() + "\x03"
    for i in range(len(padded) - 2):
        h = _trigram_hash(padded[i : i + 3])
        sign = 1.0 if (h & 1) == 0 else -1.0
        vec[h % SEMANTIC_DIM] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


@dataclass(frozen=True, eq=False)
class ColumnEmbedding:
    vector: np.ndarray
    layout_version: int = LAYOUT_VERSION

    def __eq__(self, other):
        return (
            isinstance(other, ColumnEmbedding)
            and self.layout_version == other.layout_version
            and np.array_equal(self.vector, other.vector)
        )


def embed_column(column: Column, prof: ColumnProfile) -> ColumnEmbedding:
    """Build the 96-dim embedding for one profiled column."""
    vec = np.zeros(EMBED_DIM, dtype=np.float64)
    vec[:SEMANTIC_DIM] = semantic_embedding(column.header)
    vec[PROFILE_OFFSET:TYPE_OFFSET] = prof.as_vector()

    slot = _TYPE_SLOTS[column.inferred_type]
    if prof.as_vector()[_ALL_UNIQUE_IDX] == 1.0 and _ID_HEADER_RE.search(column.header):
        slot = _TYPE_SLOTS["id_like"]
    vec[slot] = 1.0
    return ColumnEmbedding(vector=vec)


def padding_embedding() -> ColumnEmbedding:
    vec = np.zeros(EMBED_DIM, dtype=np.float64)
    vec[PADDING_SLOT] = 1.0
    return ColumnEmbedding(vector=vec)


@dataclass(frozen=True)
class TableFeatures:
    """A table reduced to what the scoring models need: embeddings and types.

    Built either from a parsed table or from the feature dump stored in a
    provenance log, so models can score charts without the original data.
    """

    table_id: str
    name: str
    n_columns: int
    headers: tuple
    types: tuple
    embeddings: tuple = field(repr=False)

    @classmethod
    def from_table(cls, table: DataTable) -> "TableFeatures":
        embeddings = tuple(embed_column(col, profile(col)) for col in table.columns)
        return cls(
            table_id=table.table_id,
            name=table.name,
            n_columns=len(table.columns),
            headers=tuple(col.header for col in table.columns),
            types=tuple(col.inferred_type for col in table.columns),
            embeddings=embeddings,
        )

    def to_dump(self) -> dict:
        return {
            "table_id": self.table_id,
            "name": self.name,
            "layout_version": LAYOUT_VERSION,
            "headers": list(self.headers),
            "types": list(self.types),
            "embeddings": [emb.vector.tolist() for emb in self.embeddings],
        }

    @classmethod
    def from_dump(cls, dump: dict) -> "TableFeatures":
        embeddings = tuple(
            ColumnEmbedding(
                vector=np.asarray(v, dtype=np.float64),
                layout_version=dump.get("layout_version", LAYOUT_VERSION),
            )
            for v in dump["embeddings"]
        )
        return cls(
            table_id=dump["table_id"],
            name=dump.get("name", dump["table_id"]),
            n_columns=len(embeddings),
            headers=tuple(dump.get("headers", [""] * len(embeddings))),
            types=tuple(dump.get("types", ["nominal"] * len(embeddings))),
            embeddings=embeddings,
        )


def _as_features(source) -> TableFeatures:
    if isinstance(source, TableFeatures):
        return source
    return TableFeatures.from_table(source)


@dataclass(eq=False)
class ChartInput:
    """Ordered column-embedding sequence for one chart (ascending table index)."""

    embeddings: list
    true_length: int
    column_indices: tuple

    def __eq__(self, other):
        return (
            isinstance(other, ChartInput)
            and self.column_indices == other.column_indices
            and self.true_length == other.true_length
            and all(a == b for a, b in zip(self.embeddings, other.embeddings))
        )

    def matrix(self) -> np.ndarray:
        return np.stack([emb.vector for emb in self.embeddings])

    def padded_matrix(self, length: int = MAX_CHART_COLUMNS) -> np.ndarray:
        rows = [emb.vector for emb in self.embeddings]
        pad = padding_embedding().vector
        rows.extend([pad] * (length - len(rows)))
        return np.stack(rows)


def build_chart_input(source, column_indices) -> ChartInput:
    """Assemble the model input for a chart over the given column indices.

    ``source`` is a DataTable or TableFeatures. Raises CardinalityError for
    0 or more than 4 indices, IndexError for out-of-range ones.
    """
    features = _as_features(source)
    indices = sorted(set(column_indices))
    if not 1 <= len(indices) <= MAX_CHART_COLUMNS:
        raise CardinalityError(f"a chart encodes 1-4 columns, got {len(indices)}")
    for idx in indices:
        if not 0 <= idx < features.n_columns:
            raise IndexError(f"column index {idx} out of range for {features.n_columns} columns")
    return ChartInput(
        embeddings=[features.embeddings[i] for i in indices],
        true_length=len(indices),
        column_indices=tuple(indices),
    )
