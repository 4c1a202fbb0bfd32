"""Drive the HTTP API end to end, in process.

The same app `mvforge serve` runs is exercised here through the test client:
upload a CSV, ask for a dashboard with a locked chart, browse chart ideas,
edit, restore history, and save with consent off (nothing is written).
"""

import io
import tempfile

from fastapi.testclient import TestClient

from mvforge.config import ServiceConfig
from mvforge.service import create_app

CSV = b"""region,sales,profit,year,segment
north,105,12.5,1999,consumer
south,212,30.1,2003,corporate
east,159,18.9,2010,consumer
west,98,8.2,2007,public
north,131,15.0,2001,corporate
"""

app = create_app(ServiceConfig(deterministic=True, data_dir=tempfile.mkdtemp()))
with TestClient(app) as client:
    print("health:", client.get("/api/health").json())

    doc = client.post("/api/datasets",
                      files={"file": ("shop.csv", io.BytesIO(CSV), "text/csv")}).json()
    sid = doc["session_id"]
    print(f"\nuploaded {doc['name']!r}: "
          f"{[(c['header'], c['type']) for c in doc['columns']]}")

    mv = client.post(f"/api/sessions/{sid}/recommend-mv",
                     json={"n_charts": 4,
                           "locked": [{"columns": [0, 1], "chart_type": "bar"}]}).json()
    print(f"\nrecommended {mv['mv']['size']} charts "
          f"(dashboard score {mv['scores']['mv_score']:.3f}):")
    for chart in mv["mv"]["charts"]:
        marker = " [locked]" if chart["locked"] else ""
        print(f"  {chart['chart_type']:<8} columns {chart['columns']}{marker}")

    ideas = client.post(f"/api/sessions/{sid}/chart-ideas",
                        json={"must_include": [3], "limit": 3}).json()["ideas"]
    print("\nideas that include column 3 (year):")
    for idea in ideas:
        print(f"  {idea['projected_score']:.3f}  {idea['chart_type']:<8} {idea['columns']}")

    client.patch(f"/api/sessions/{sid}/charts/1", json={"chart_type": "line"})
    history = client.get(f"/api/sessions/{sid}/history").json()["history"]
    print(f"\nhistory has {len(history)} snapshots; restoring the first")
    restored = client.post(f"/api/sessions/{sid}/restore",
                           json={"seq": history[0]["seq"]}).json()
    print(f"dashboard back to {restored['mv']['size']} charts")

    saved = client.post(f"/api/sessions/{sid}/save", json={"consent": False}).json()
    print(f"\nsave with consent=false -> stored: {saved['stored']}")
