"""Walk through ingestion: parse a CSV, inspect inferred types, profiles,
and the 96-dim column embeddings the scoring models consume."""

import numpy as np

from mvforge import build_chart_input, parse_csv, profile
from mvforge.featurize import TableFeatures
from mvforge.ingest import PROFILE_STAT_NAMES

CSV = b"""region,sales,model_year,returned,note
north,105,1999,yes,steady growth
south,212,2003,no,best quarter ever
east,159,2010,yes,
west,98,2007,no,flat
north,131,2001,no,rebound
"""

table = parse_csv(CSV, "shop")
print(f"table {table.name!r}: {len(table.columns)} columns x {table.row_count} rows\n")

for column in table.columns:
    print(f"  {column.header:<12} -> {column.inferred_type}")

print("\nprofile of 'sales' (24 statistics, scale-free by construction):")
sales = table.columns[1]
prof = profile(sales)
for name in PROFILE_STAT_NAMES:
    value = getattr(prof, name)
    if value != 0.0:
        print(f"  {name:<24} {value:.4f}")

features = TableFeatures.from_table(table)
embedding = features.embeddings[1].vector
print(f"\nembedding of 'sales': {embedding.shape[0]} dims "
      f"(semantic {np.linalg.norm(embedding[:64]):.2f}, "
      f"profile block {embedding[64:88].round(3)[:5]}..., "
      f"type one-hot at dim {64 + 24 + int(np.argmax(embedding[88:]))} )")

chart = build_chart_input(table, {0, 1})
print(f"\nchart input over columns (0, 1): sequence shape {chart.matrix().shape}, "
      f"padded {chart.padded_matrix().shape}")
