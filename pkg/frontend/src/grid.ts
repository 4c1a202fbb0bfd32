/** Responsive grid math for the dashboard pane.
 *
 * The server stores one cell per chart but does not arbitrate overlaps;
 * the client owns presentation, so after every gesture the rendered layout
 * is passed through collision resolution (overlapping charts are pushed
 * down, then everything floats up). Pure functions, no DOM.
 */

import type { GridCell } from "./types.js";

export const GRID_COLS = 12;

export function clampCell(cell: GridCell): GridCell {
  const w = Math.max(1, Math.min(GRID_COLS, Math.round(cell.w)));
  const h = Math.max(1, Math.round(cell.h));
  const x = Math.max(0, Math.min(GRID_COLS - w, Math.round(cell.x)));
  const y = Math.max(0, Math.round(cell.y));
  return { x, y, w, h };
}

export function collides(a: GridCell, b: GridCell): boolean {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

/** Push every chart that overlaps an earlier-priority chart straight down. */
export function resolveCollisions(cells: GridCell[], priority?: number): GridCell[] {
  const order = cells.map((_, i) => i);
  // the actively moved chart wins ties; otherwise top-to-bottom order
  order.sort((a, b) => {
    if (a === priority) return -1;
    if (b === priority) return 1;
    return cells[a].y - cells[b].y || cells[a].x - cells[b].x;
  });
  const placed: number[] = [];
  const result = cells.map((cell) => ({ ...cell }));
  for (const index of order) {
    let guard = 0;
    while (placed.some((p) => collides(result[index], result[p])) && guard < 1000) {
      result[index].y += 1;
      guard += 1;
    }
    placed.push(index);
  }
  return result;
}

/** Float every chart as far up as it can go without creating an overlap. */
export function compact(cells: GridCell[]): GridCell[] {
  const result = cells.map((cell) => ({ ...cell }));
  const order = result.map((_, i) => i).sort((a, b) => result[a].y - result[b].y || result[a].x - result[b].x);
  for (const index of order) {
    while (result[index].y > 0) {
      const trial = { ...result[index], y: result[index].y - 1 };
      if (result.some((other, j) => j !== index && collides(trial, other))) break;
      result[index].y -= 1;
    }
  }
  return result;
}

export function resolveLayout(cells: GridCell[], priority?: number): GridCell[] {
  return compact(resolveCollisions(cells.map(clampCell), priority));
}

export function hasOverlap(cells: GridCell[]): boolean {
  for (let i = 0; i < cells.length; i++) {
    for (let j = i + 1; j < cells.length; j++) {
      if (collides(cells[i], cells[j])) return true;
    }
  }
  return false;
}

/** First free slot for a new chart of the default 4x4 size, scanning rows. */
export function placeNew(cells: GridCell[], w = 4, h = 4): GridCell {
  for (let y = 0; ; y++) {
    for (let x = 0; x + w <= GRID_COLS; x++) {
      const trial = { x, y, w, h };
      if (!cells.some((cell) => collides(trial, cell))) return trial;
    }
  }
}
