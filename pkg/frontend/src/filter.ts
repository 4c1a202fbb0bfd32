/** Client-side cross-chart filtering over the shared dataset.
 *
 * Clicking a mark toggles an equality filter on that category; brushing a
 * quantitative axis sets an interval filter. Filters combine with AND
 * across columns and OR within the point-values of one column. Filter
 * state is presentation-only: it never enters dashboard snapshots.
 */

import type { TableData } from "./types.js";

export interface PointFilter {
  kind: "point";
  column: number;
  values: string[];
}

export interface IntervalFilter {
  kind: "interval";
  column: number;
  lo: number;
  hi: number;
}

export type Filter = PointFilter | IntervalFilter;

export class CrossFilterModel {
  private filters = new Map<number, Filter>();

  get active(): Filter[] {
    return [...this.filters.values()];
  }

  get isEmpty(): boolean {
    return this.filters.size === 0;
  }

  /** Toggle a category value; clicking the only selected value clears it. */
  togglePoint(column: number, value: string): void {
    const current = this.filters.get(column);
    if (current && current.kind === "point") {
      const values = current.values.includes(value)
        ? current.values.filter((v) => v !== value)
        : [...current.values, value];
      if (values.length === 0) this.filters.delete(column);
      else this.filters.set(column, { kind: "point", column, values });
    } else {
      this.filters.set(column, { kind: "point", column, values: [value] });
    }
  }

  setInterval(column: number, lo: number, hi: number): void {
    this.filters.set(column, { kind: "interval", column, lo: Math.min(lo, hi), hi: Math.max(lo, hi) });
  }

  clear(): void {
    this.filters.clear();
  }

  rowPasses(row: (string | null)[]): boolean {
    for (const filter of this.filters.values()) {
      const raw = row[filter.column];
      if (raw === null || raw === undefined) return false;
      if (filter.kind === "point") {
        if (!filter.values.includes(raw)) return false;
      } else {
        const value = Number(raw);
        if (!Number.isFinite(value) || value < filter.lo || value > filter.hi) return false;
      }
    }
    return true;
  }

  /** Rows that pass every active filter; the full dataset when none are. */
  filteredRows(data: TableData): (string | null)[][] {
    if (this.isEmpty) return data.rows;
    return data.rows.filter((row) => this.rowPasses(row));
  }
}
