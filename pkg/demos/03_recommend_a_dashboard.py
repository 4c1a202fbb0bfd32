"""Greedy dashboard recommendation with a locked chart, plus chart ideas.

The recommender starts from whatever the user pinned, then repeatedly adds
the candidate that maximizes the dashboard score. Chart ideas are the same
one-step lookahead, served as a ranked list.
"""

from mvforge import ChartType, assign_encodings, emit_vegalite, parse_csv
from mvforge.featurize import TableFeatures
from mvforge.mvrank import MvScorer, score_mv
from mvforge.ranker import SingleChartScorer
from mvforge.recommend import chart_ideas, recommend_mv
from mvforge.service import fresh_mv_bundle, fresh_single_bundle

CSV = b"""region,sales,profit,year,segment,price
north,105,12.5,1999,consumer,3.20
south,212,30.1,2003,corporate,4.10
east,159,18.9,2010,consumer,5.00
west,98,8.2,2007,public,2.75
north,131,15.0,2001,corporate,3.90
south,177,22.3,2005,consumer,4.40
"""

table = parse_csv(CSV, "shop")
features = TableFeatures.from_table(table)

# fresh seeded models keep the demo self-contained; swap in trained bundles
# (demos/02 or `mvforge train`) for meaningful rankings
single = SingleChartScorer(fresh_single_bundle(seed=7))
mv_model = MvScorer(fresh_mv_bundle(seed=7))

locked = assign_encodings(features, {0, 1}, ChartType.BAR)
print("locked chart: bar over (region, sales)\n")

mv = recommend_mv(features, 4, [locked], single, mv_model)
print(f"recommended dashboard ({len(mv.charts)} charts, "
      f"score {score_mv(mv_model, mv, single, features):.3f}):")
for i, chart in enumerate(mv.charts):
    lock_marker = " [locked]" if i in mv.locked else ""
    cols = ", ".join(features.headers[j] for j in chart.column_indices)
    print(f"  {i}. {chart.chart_type.value:<8} {cols}{lock_marker}")

print("\nchart ideas given the current dashboard (must include 'year'):")
ideas = chart_ideas(features, mv, must_include={3}, single_scorer=single,
                    mv_scorer=mv_model, limit=3)
for spec, projected in ideas:
    cols = ", ".join(features.headers[j] for j in spec.column_indices)
    print(f"  {projected:.3f}  {spec.chart_type.value:<8} {cols}")

print("\nVega-Lite for the locked chart:")
print(emit_vegalite(locked, features))
