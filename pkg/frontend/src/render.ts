/** DOM layer: three panes (dataset/system, editor/ideas, dashboard grid).
 *
 * Charts render from their server-provided Vega-Lite specs via vega-embed
 * with the (cross-filtered) rows injected as the named "table" dataset.
 * Nothing here ranks or scores; it draws state and forwards gestures to the
 * controller.
 */

import type { SessionController } from "./controller.js";
import { channelOptions, columnChoices } from "./editor.js";
import { GRID_COLS } from "./grid.js";
import type { UISessionState } from "./state.js";
import { CHART_TYPES } from "./types.js";
import type { ChartPayload } from "./types.js";

const CELL_PX = 64;

type VegaEmbed = (el: HTMLElement, spec: object, options?: object) => Promise<{ view: unknown }>;
let vegaEmbed: VegaEmbed | null = null;

async function loadVegaEmbed(): Promise<VegaEmbed | null> {
  if (vegaEmbed) return vegaEmbed;
  try {
    const module = await import("vega-embed");
    vegaEmbed = (module.default ?? module) as unknown as VegaEmbed;
  } catch {
    vegaEmbed = null; // offline fallback renders the spec as text
  }
  return vegaEmbed;
}

function rowsAsObjects(state: UISessionState, rows: (string | null)[][]): object[] {
  const headers = state.data?.columns ?? [];
  return rows.map((row) => {
    const obj: Record<string, unknown> = {};
    headers.forEach((header, i) => {
      const raw = row[i];
      const asNumber = raw === null ? NaN : Number(raw);
      obj[header] = raw !== null && raw !== "" && Number.isFinite(asNumber) ? asNumber : raw;
    });
    return obj;
  });
}

async function renderChartInto(
  el: HTMLElement,
  chart: ChartPayload,
  values: object[],
  thumbnail: boolean,
): Promise<void> {
  const embed = await loadVegaEmbed();
  const spec = {
    ...chart.vegalite,
    width: thumbnail ? 120 : "container",
    height: thumbnail ? 80 : "container",
    data: { name: "table" },
    datasets: { table: values },
  };
  if (!embed) {
    el.textContent = JSON.stringify(chart.vegalite);
    return;
  }
  await embed(el, spec, { actions: false, renderer: "svg" });
}

export class AppView {
  private root: HTMLElement;

  constructor(
    root: HTMLElement,
    private controller: SessionController,
  ) {
    this.root = root;
    controller.store.subscribe(() => void this.render());
  }

  async render(): Promise<void> {
    const state = this.controller.store.current;
    this.root.dataset.theme = state.theme;
    this.root.innerHTML = "";
    this.root.append(this.leftPane(state), this.middlePane(state), this.gridPane(state));
  }

  private button(label: string, onClick: () => void, disabled = false): HTMLButtonElement {
    const btn = document.createElement("button");
    btn.textContent = label;
    btn.disabled = disabled;
    btn.addEventListener("click", onClick);
    return btn;
  }

  private leftPane(state: UISessionState): HTMLElement {
    const pane = document.createElement("aside");
    pane.className = "pane pane-left";

    const upload = document.createElement("input");
    upload.type = "file";
    upload.accept = ".csv";
    upload.addEventListener("change", () => {
      const file = upload.files?.[0];
      if (file) void this.controller.uploadFile(file, file.name);
    });
    pane.append(sectionTitle("Dataset"), upload);

    if (state.table) {
      const list = document.createElement("ul");
      list.className = "column-list";
      for (const column of state.table.columns) {
        const item = document.createElement("li");
        item.textContent = `${column.header} · ${column.type}`;
        list.append(item);
      }
      pane.append(list);
    }

    pane.append(sectionTitle("Recommender"));
    const nInput = document.createElement("input");
    nInput.type = "number";
    nInput.min = "1";
    nInput.max = "12";
    nInput.value = String(Math.max(4, this.controller.store.lockedCount()));
    const go = this.button("Recommend", () => {
      const n = Number(nInput.value);
      if (this.controller.canRecommend(n)) void this.controller.recommend(n);
    }, state.pending || !state.sessionId);
    nInput.addEventListener("input", () => {
      go.disabled = !this.controller.canRecommend(Number(nInput.value));
    });
    pane.append(nInput, go);
    if (state.mvScore !== null) {
      const score = document.createElement("div");
      score.className = "mv-score";
      score.textContent = `dashboard score ${state.mvScore.toFixed(3)}`;
      pane.append(score);
    }

    pane.append(sectionTitle("History"));
    pane.append(this.button("Refresh history", () => void this.controller.loadHistory(),
                            !state.sessionId));
    const history = document.createElement("ol");
    history.className = "history";
    for (const entry of state.history) {
      const item = document.createElement("li");
      item.textContent = `#${entry.seq} ${entry.kind} (${entry.n_charts} charts)`;
      item.append(this.button("restore", () => void this.controller.restore(entry.seq)));
      history.append(item);
    }
    pane.append(history);

    pane.append(sectionTitle("System"));
    pane.append(this.button(`Theme: ${state.theme}`, () => this.controller.toggleTheme()));
    const consent = document.createElement("label");
    const consentBox = document.createElement("input");
    consentBox.type = "checkbox";
    consentBox.checked = state.consent;
    consent.append(consentBox, document.createTextNode(" allow storing my editing log"));
    pane.append(
      consent,
      this.button("Save session", () => void this.controller.saveSession(consentBox.checked),
                  !state.sessionId),
    );
    if (state.lastStoredPath !== null) {
      const stored = document.createElement("div");
      stored.textContent = `stored: ${state.lastStoredPath}`;
      pane.append(stored);
    } else if (state.sessionId && !state.consent) {
      const stored = document.createElement("div");
      stored.textContent = "nothing stored (no consent)";
      pane.append(stored);
    }
    return pane;
  }

  private middlePane(state: UISessionState): HTMLElement {
    const pane = document.createElement("section");
    pane.className = "pane pane-middle";
    pane.append(sectionTitle("Chart editor"));
    if (state.selectedChart !== null && state.mv.charts[state.selectedChart]) {
      pane.append(this.editor(state, state.selectedChart));
    } else {
      const hint = document.createElement("p");
      hint.textContent = "Select a chart to edit it.";
      pane.append(hint);
    }
    pane.append(sectionTitle("Chart ideas"), this.ideas(state));
    return pane;
  }

  private editor(state: UISessionState, position: number): HTMLElement {
    const chart = state.mv.charts[position];
    const box = document.createElement("div");
    box.className = "editor highlight";

    const typeSelect = document.createElement("select");
    for (const chartType of CHART_TYPES) {
      const option = document.createElement("option");
      option.value = chartType;
      option.textContent = chartType;
      option.selected = chartType === chart.chart_type;
      typeSelect.append(option);
    }
    typeSelect.addEventListener("change", () => {
      void this.controller.setChartType(position, typeSelect.value as never);
    });
    box.append(labelled("type", typeSelect));

    const columns = state.table ? columnChoices(state.table.columns) : [];
    for (const option of channelOptions(chart)) {
      const select = document.createElement("select");
      select.disabled = !option.selectable;
      const none = document.createElement("option");
      none.value = "";
      none.textContent = option.current === null && option.channel in chart.encodings
        ? "count()" : "—";
      select.append(none);
      for (const choice of columns) {
        const opt = document.createElement("option");
        opt.value = String(choice.index);
        opt.textContent = choice.label;
        opt.selected = option.current === choice.index;
        select.append(opt);
      }
      select.addEventListener("change", () => {
        const value = select.value === "" ? null : Number(select.value);
        void this.controller.setEncoding(position, option.channel, value);
      });
      box.append(labelled(option.channel, select));
    }
    return box;
  }

  private ideas(state: UISessionState): HTMLElement {
    const box = document.createElement("div");
    box.className = "ideas";

    const chips = document.createElement("div");
    chips.className = "chips";
    for (const column of state.table?.columns ?? []) {
      const chip = document.createElement("button");
      chip.className = state.mustInclude.includes(column.index) ? "chip active" : "chip";
      chip.textContent = column.header;
      chip.addEventListener("click", () => {
        const next = state.mustInclude.includes(column.index)
          ? state.mustInclude.filter((c) => c !== column.index)
          : [...state.mustInclude, column.index];
        void this.controller.setMustInclude(next);
      });
      chips.append(chip);
    }
    box.append(chips);

    const dedup = document.createElement("label");
    const dedupBox = document.createElement("input");
    dedupBox.type = "checkbox";
    dedupBox.checked = state.dropAlternativeTypes;
    dedupBox.addEventListener("change", () => {
      void this.controller.setDropAlternativeTypes(dedupBox.checked);
    });
    dedup.append(dedupBox, document.createTextNode(" drop alternative chart-types"));
    box.append(dedup);

    const list = document.createElement("ul");
    list.className = "idea-list";
    const values = rowsAsObjects(state, this.controller.visibleRows());
    for (const idea of state.ideas) {
      const item = document.createElement("li");
      const thumb = document.createElement("div");
      thumb.className = "thumb";
      void renderChartInto(thumb, idea, values, true);
      const add = this.button(
        `add ${idea.chart_type} (${idea.projected_score.toFixed(3)})`,
        () => void this.controller.addIdea(idea),
      );
      item.append(thumb, add);
      list.append(item);
    }
    box.append(list);
    return box;
  }

  private gridPane(state: UISessionState): HTMLElement {
    const pane = document.createElement("main");
    pane.className = "pane pane-grid";
    pane.append(sectionTitle("Dashboard"));
    if (!this.controller.filters.isEmpty) {
      pane.append(this.button("clear cross-filter", () => void this.controller.clearFilters()));
    }
    const grid = document.createElement("div");
    grid.className = "grid";
    grid.style.width = `${GRID_COLS * CELL_PX}px`;
    const values = rowsAsObjects(state, this.controller.visibleRows());

    state.mv.charts.forEach((chart, position) => {
      const cell = state.gridView[position];
      const card = document.createElement("div");
      card.className = position === state.selectedChart ? "chart-card highlight" : "chart-card";
      card.style.left = `${cell.x * CELL_PX}px`;
      card.style.top = `${cell.y * CELL_PX}px`;
      card.style.width = `${cell.w * CELL_PX}px`;
      card.style.height = `${cell.h * CELL_PX}px`;
      card.draggable = true;

      const bar = document.createElement("header");
      bar.textContent = `${chart.chart_type}${state.mv.locked[position] ? " 🔒" : ""}`;
      bar.addEventListener("click", () => {
        this.controller.store.update({ selectedChart: position });
      });
      const lock = this.button(state.mv.locked[position] ? "unlock" : "lock", () => {
        void this.controller.toggleLock(position, !state.mv.locked[position]);
      });
      const remove = this.button("✕", () => void this.controller.removeChart(position));
      bar.append(lock, remove);

      const body = document.createElement("div");
      body.className = "chart-body";
      void renderChartInto(body, chart, values, false);

      card.addEventListener("dragend", (event) => {
        const rect = grid.getBoundingClientRect();
        const x = Math.round((event.clientX - rect.left) / CELL_PX);
        const y = Math.round((event.clientY - rect.top) / CELL_PX);
        void this.controller.moveChart(position, x, y);
      });
      const handle = document.createElement("div");
      handle.className = "resize-handle";
      handle.addEventListener("pointerup", (event) => {
        const rect = card.getBoundingClientRect();
        const w = Math.max(1, Math.round((event.clientX - rect.left) / CELL_PX));
        const h = Math.max(1, Math.round((event.clientY - rect.top) / CELL_PX));
        void this.controller.resizeChart(position, w, h);
      });

      card.append(bar, body, handle);
      grid.append(card);
    });
    pane.append(grid);
    return pane;
  }
}

function sectionTitle(text: string): HTMLElement {
  const el = document.createElement("h2");
  el.textContent = text;
  return el;
}

function labelled(label: string, control: HTMLElement): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "field";
  const span = document.createElement("span");
  span.textContent = label;
  wrap.append(span, control);
  return wrap;
}
