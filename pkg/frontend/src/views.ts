// Render functions. Every number shown here is taken verbatim from a
// service response; the UI does no metric arithmetic.

import type { Histogram } from "./api.js";
import type { QueryRecord, Status } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderStatus(container: HTMLElement, status: Status): void {
  container.replaceChildren();
  container.dataset.phase = status.phase;
  delete container.dataset.errorCode;
  switch (status.phase) {
    case "idle":
      return;
    case "loading":
      container.append(el("div", "status loading", `looking up ${status.input}…`));
      return;
    case "invalid":
      container.append(el("div", "status invalid", `Not a recognized identifier: ${status.message}`));
      return;
    case "done":
      return;
    case "error": {
      const box = el("div", "status error");
      let label: string;
      if (status.httpStatus === 400) {
        label = "The service rejected this identifier.";
        container.dataset.errorCode = "bad-id";
      } else if (status.httpStatus === 404) {
        label = "No such entity is known upstream.";
        container.dataset.errorCode = "not-found";
      } else if (status.httpStatus === 502) {
        label = "The scholarly-graph API is unavailable — try again shortly.";
        container.dataset.errorCode = "upstream";
        box.append(el("button", "retry", "Retry"));
      } else if (status.httpStatus === 429) {
        label = "Rate limited upstream — wait a moment and retry.";
        container.dataset.errorCode = "rate-limited";
      } else {
        label = "The service could not be reached.";
        container.dataset.errorCode = "network";
        box.append(el("button", "retry", "Retry"));
      }
      box.prepend(el("div", "error-label", label), el("div", "error-detail", status.message));
      container.append(box);
    }
  }
}

function reportColumn(record: QueryRecord): HTMLElement {
  const { report } = record;
  const column = el("section", "report");
  column.dataset.entityId = report.entity.id;

  const head = el("header");
  head.append(
    el("h3", "entity", `${report.entity.kind}: ${report.entity.input}`),
  );
  const cfdi = el("div", "cfdi");
  cfdi.append(el("span", "cfdi-label", "CFDI "));
  cfdi.append(
    el("span", "cfdi-value", report.outgoing.cfdi === null ? "undefined" : String(report.outgoing.cfdi)),
  );
  if (report.outgoing.percentile !== null) {
    cfdi.append(el("span", "percentile", ` · corpus percentile ${String(report.outgoing.percentile)}`));
  }
  head.append(cfdi);
  head.append(
    el(
      "div",
      "meta",
      `${String(report.outgoing.total_references)} references` +
        (report.outgoing.unlabeled_references
          ? ` (${String(report.outgoing.unlabeled_references)} without field labels)`
          : "") +
        (report.complete ? "" : " — truncated fetch"),
    ),
  );
  column.append(head);

  const bars = el("div", "field-bars");
  for (const entry of report.outgoing.field_counts) {
    const row = el("div", "field-bar");
    row.dataset.field = entry.field;
    const fill = el("div", "bar-fill");
    fill.style.width = `${entry.percentage}%`;
    row.append(
      el("span", "bar-label", entry.field),
      fill,
      el("span", "bar-value", `${String(entry.count)} · ${String(entry.percentage)}%`),
    );
    bars.append(row);
  }
  column.append(bars);
  return column;
}

export function renderReport(container: HTMLElement, record: QueryRecord | null): void {
  container.replaceChildren();
  if (record) container.append(reportColumn(record));
}

export function renderComparison(container: HTMLElement, records: QueryRecord[]): void {
  container.replaceChildren();
  if (records.length < 2) return;
  const grid = el("div", "comparison");
  for (const record of records) grid.append(reportColumn(record));
  container.append(grid);
}

export function renderHistory(
  container: HTMLElement,
  history: QueryRecord[],
  selected: Set<number>,
  onToggle: (index: number) => void,
): void {
  container.replaceChildren();
  history.forEach((record, index) => {
    const row = el("label", "history-row");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = selected.has(index);
    box.addEventListener("change", () => onToggle(index));
    const cfdi = record.report.outgoing.cfdi;
    row.append(
      box,
      el("span", "history-input", record.input),
      el("span", "history-cfdi", cfdi === null ? "undefined" : String(cfdi)),
    );
    container.append(row);
  });
}

/** Histogram bars plus a marker line at the current entity's CFDI. */
export function renderHistogram(
  canvas: HTMLCanvasElement,
  histogram: Histogram | null,
  marker: number | null,
  enabled: boolean,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  canvas.dataset.marker = marker === null ? "" : String(marker);
  if (!histogram || !enabled) return;
  const { counts } = histogram;
  const max = Math.max(...counts, 1);
  const barWidth = canvas.width / counts.length;
  ctx.fillStyle = "#9ec5e8";
  counts.forEach((count, i) => {
    const h = (count / max) * (canvas.height - 14);
    ctx.fillRect(i * barWidth, canvas.height - h, barWidth - 1, h);
  });
  if (marker !== null) {
    const x = Math.min(marker, 1) * canvas.width;
    ctx.strokeStyle = "#c0392b";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, canvas.height);
    ctx.stroke();
    ctx.fillStyle = "#c0392b";
    ctx.fillText(canvas.dataset.marker ?? "", Math.min(x + 4, canvas.width - 40), 10);
  }
}
