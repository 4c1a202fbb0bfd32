/** Orchestrates the mixed-initiative loop: every user gesture issues its one
 * API call, and the UI state is reconciled from the server's response.
 *
 * Chart Ideas are "active" recommendations: any change to the dashboard's
 * charts (add, edit, remove, recommend, restore) re-requests the list.
 * Layout-only gestures (move, resize, lock) do not, since identities are
 * unchanged. All ranking happens server-side.
 */

import type { ApiClient } from "./api.js";
import { CrossFilterModel } from "./filter.js";
import { SessionStore } from "./state.js";
import { encodingPatch } from "./editor.js";
import { chartRef } from "./types.js";
import type { ChartIdea, ChartTypeName } from "./types.js";

export const IDEAS_LIMIT = 8;

export class SessionController {
  readonly store = new SessionStore();
  readonly filters = new CrossFilterModel();

  constructor(private api: ApiClient) {}

  private get sid(): string {
    const sid = this.store.current.sessionId;
    if (!sid) throw new Error("no active session");
    return sid;
  }

  async connect(): Promise<void> {
    await this.api.health();
  }

  async uploadFile(file: Blob, filename: string): Promise<void> {
    this.store.update({ pending: true });
    try {
      const uploaded = await this.api.uploadDataset(file, filename);
      this.store.update({
        sessionId: uploaded.session_id,
        table: uploaded,
        history: [],
        ideas: [],
        mustInclude: [],
        dropAlternativeTypes: true,
        mvScore: null,
        lastStoredPath: null,
      });
      this.store.reconcileMv({ charts: [], locked: [], size: 0 });
      const data = await this.api.data(uploaded.session_id);
      this.store.update({ data });
      await this.refreshIdeas();
    } finally {
      this.store.update({ pending: false });
    }
  }

  async refreshIdeas(): Promise<void> {
    const state = this.store.current;
    // with alternative chart types shown, each column set fans out into up
    // to five variants, so the expanded list asks for more entries
    const limit = state.dropAlternativeTypes ? IDEAS_LIMIT : IDEAS_LIMIT * 4;
    const response = await this.api.chartIdeas(this.sid, {
      must_include: state.mustInclude,
      drop_alternative_types: state.dropAlternativeTypes,
      limit,
    });
    this.store.update({ ideas: response.ideas });
  }

  canRecommend(nCharts: number): boolean {
    return nCharts >= Math.max(1, this.store.lockedCount()) && nCharts <= 12;
  }

  /** The passive recommender: replaces the dashboard, keeping locked charts. */
  async recommend(nCharts: number): Promise<void> {
    if (!this.canRecommend(nCharts)) {
      throw new Error(`cannot request ${nCharts} charts with ${this.store.lockedCount()} locked`);
    }
    const state = this.store.current;
    const locked = state.mv.charts.filter((_, i) => state.mv.locked[i]).map(chartRef);
    this.store.update({ pending: true });
    try {
      const response = await this.api.recommendMv(
        this.sid, nCharts, locked, state.dropAlternativeTypes,
      );
      this.store.reconcileMv(response.mv);
      this.store.update({ mvScore: response.scores.mv_score });
      await this.refreshIdeas();
    } finally {
      this.store.update({ pending: false });
    }
  }

  /** Click-to-add from the ideas list. */
  async addIdea(idea: ChartIdea): Promise<void> {
    const response = await this.api.addChart(this.sid, chartRef(idea), { fromIdeas: true });
    this.store.reconcileMv(response.mv);
    await this.refreshIdeas();
  }

  async setChartType(position: number, chartType: ChartTypeName): Promise<void> {
    const response = await this.api.editChart(this.sid, position, { chart_type: chartType });
    this.store.reconcileMv(response.mv);
    await this.refreshIdeas();
  }

  async setEncoding(position: number, channel: string, column: number | null): Promise<void> {
    const chart = this.store.current.mv.charts[position];
    const response = await this.api.editChart(
      this.sid, position, encodingPatch(chart, channel, column),
    );
    this.store.reconcileMv(response.mv);
    await this.refreshIdeas();
  }

  async moveChart(position: number, x: number, y: number): Promise<void> {
    const response = await this.api.editChart(this.sid, position, { layout: { x, y } });
    this.store.reconcileMv(response.mv, position);
  }

  async resizeChart(position: number, w: number, h: number): Promise<void> {
    const response = await this.api.editChart(this.sid, position, { layout: { w, h } });
    this.store.reconcileMv(response.mv, position);
  }

  async toggleLock(position: number, locked: boolean): Promise<void> {
    const response = await this.api.editChart(this.sid, position, { lock: locked });
    this.store.reconcileMv(response.mv);
  }

  async removeChart(position: number): Promise<void> {
    const response = await this.api.deleteChart(this.sid, position);
    this.store.reconcileMv(response.mv);
    await this.refreshIdeas();
  }

  async setMustInclude(columns: number[]): Promise<void> {
    this.store.update({ mustInclude: columns });
    await this.refreshIdeas();
  }

  async setDropAlternativeTypes(flag: boolean): Promise<void> {
    this.store.update({ dropAlternativeTypes: flag });
    await this.refreshIdeas();
  }

  /** Brush an interval on a quantitative axis; filters all linked charts. */
  async brushFilter(column: number, lo: number, hi: number): Promise<void> {
    this.filters.setInterval(column, lo, hi);
    await this.api.crossFilter(this.sid, { kind: "interval", column, lo, hi });
    this.store.update({}); // re-render with the filtered rows
  }

  /** Click a mark: toggle an equality filter on its category. */
  async clickFilter(column: number, value: string): Promise<void> {
    this.filters.togglePoint(column, value);
    await this.api.crossFilter(this.sid, { kind: "point", column, value });
    this.store.update({});
  }

  async clearFilters(): Promise<void> {
    this.filters.clear();
    await this.api.crossFilter(this.sid, { kind: "clear" });
    this.store.update({});
  }

  async loadHistory(): Promise<void> {
    const response = await this.api.history(this.sid);
    this.store.update({ history: response.history });
  }

  async restore(seq: number): Promise<void> {
    const response = await this.api.restore(this.sid, seq);
    this.store.reconcileMv(response.mv);
    await this.loadHistory();
    await this.refreshIdeas();
  }

  toggleTheme(): void {
    const theme = this.store.current.theme === "light" ? "dark" : "light";
    this.store.update({ theme });
  }

  async saveSession(consent: boolean): Promise<string | null> {
    const response = await this.api.save(this.sid, consent);
    this.store.update({ consent: response.consent, lastStoredPath: response.stored });
    return response.stored;
  }

  /** Rows after cross-filtering; what every chart renders from. */
  visibleRows(): (string | null)[][] {
    const data = this.store.current.data;
    if (!data) return [];
    return this.filters.filteredRows(data);
  }
}
