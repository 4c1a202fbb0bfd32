/** UI session state: a pure projection of server responses plus the local
 * presentation bits (ideas filters, theme, consent toggle, grid view). */

import { resolveLayout } from "./grid.js";
import type {
  ChartIdea,
  GridCell,
  HistoryEntry,
  MVPayload,
  TableData,
  TableSummary,
} from "./types.js";

export interface UISessionState {
  sessionId: string | null;
  table: TableSummary | null;
  data: TableData | null;
  mv: MVPayload;
  gridView: GridCell[]; // collision-resolved presentation of mv layouts
  ideas: ChartIdea[];
  mustInclude: number[];
  dropAlternativeTypes: boolean;
  history: HistoryEntry[];
  theme: "light" | "dark";
  consent: boolean;
  selectedChart: number | null; // editor target, shares a highlight colour
  mvScore: number | null;
  lastStoredPath: string | null;
  pending: boolean;
}

const EMPTY_MV: MVPayload = { charts: [], locked: [], size: 0 };

export type Listener = (state: UISessionState) => void;

export class SessionStore {
  private state: UISessionState = {
    sessionId: null,
    table: null,
    data: null,
    mv: EMPTY_MV,
    gridView: [],
    ideas: [],
    mustInclude: [],
    dropAlternativeTypes: true,
    history: [],
    theme: "light",
    consent: true,
    selectedChart: null,
    mvScore: null,
    lastStoredPath: null,
    pending: false,
  };

  private listeners: Listener[] = [];

  get current(): UISessionState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(partial: Partial<UISessionState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Server truth wins: replace the dashboard and re-derive the grid view. */
  reconcileMv(mv: MVPayload, movedPosition?: number): void {
    const cells = mv.charts.map(
      (chart, i) => chart.layout ?? { x: (i % 3) * 4, y: Math.floor(i / 3) * 4, w: 4, h: 4 },
    );
    this.update({ mv, gridView: resolveLayout(cells, movedPosition) });
  }

  lockedCount(): number {
    return this.state.mv.locked.filter(Boolean).length;
  }
}
