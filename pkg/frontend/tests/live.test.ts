/** The same authoring loop against a live server, when one is provided:
 *
 *     mvforge serve --config cfg.toml &
 *     MVFORGE_LIVE_URL=http://127.0.0.1:8331 npm test
 *
 * Uses real fetch; skipped entirely otherwise.
 */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { chartIdentity } from "../src/types.js";
import { hasOverlap } from "../src/grid.js";

const LIVE_URL = process.env.MVFORGE_LIVE_URL;

const CSV = `region,sales,profit,year,segment,price
north,105,12.5,1999,consumer,3.20
south,212,30.1,2003,corporate,4.10
east,159,18.9,2010,consumer,5.00
west,98,8.2,2007,public,2.75
north,131,15.0,2001,corporate,3.90
south,177,22.3,2005,consumer,4.40
`;

describe.skipIf(!LIVE_URL)("live server loop", () => {
  it("runs the full authoring loop against the service", async () => {
    const controller = new SessionController(new ApiClient(LIVE_URL as string));
    await controller.connect();
    await controller.uploadFile(new Blob([CSV]), "shop.csv");
    const store = controller.store;
    expect(store.current.table?.columns).toHaveLength(6);

    await controller.recommend(3);
    expect(store.current.mv.size).toBe(3);

    const pinned = chartIdentity(store.current.mv.charts[0], false);
    await controller.toggleLock(0, true);
    await controller.recommend(4);
    expect(chartIdentity(store.current.mv.charts[0], false)).toBe(pinned);
    expect(store.current.mv.locked[0]).toBe(true);
    expect(hasOverlap(store.current.gridView)).toBe(false);

    await controller.setChartType(1, "line");
    expect(store.current.mv.charts[1].chart_type).toBe("line");

    await controller.setMustInclude([2]);
    for (const idea of store.current.ideas) expect(idea.columns).toContain(2);
    const current = store.current.mv.charts.map((c) => chartIdentity(c));
    for (const idea of store.current.ideas) {
      expect(current).not.toContain(chartIdentity(idea));
    }

    await controller.brushFilter(1, 100, 200);
    expect(controller.visibleRows().length).toBeLessThan(6);
    await controller.clearFilters();

    await controller.loadHistory();
    const first = store.current.history[0];
    await controller.restore(first.seq);
    expect(store.current.mv.size).toBe(first.n_charts);

    const stored = await controller.saveSession(false);
    expect(stored).toBeNull();
  }, 30000);
});
