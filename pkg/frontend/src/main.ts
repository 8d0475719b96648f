// Entry point: wires the static page to the controller and renderers.
// The service base URL is configurable via `window.CITEFIELD_SERVICE_URL`
// or a `?service=` query parameter; default is same-origin.

import { DiversityClient } from "./api.js";
import { loadHistogram, submitQuery } from "./app.js";
import { ViewState } from "./state.js";
import {
  renderComparison,
  renderHistogram,
  renderHistory,
  renderReport,
  renderStatus,
} from "./views.js";

function serviceBaseUrl(): string {
  const fromGlobal = (window as { CITEFIELD_SERVICE_URL?: string }).CITEFIELD_SERVICE_URL;
  if (fromGlobal) return fromGlobal.replace(/\/$/, "");
  const fromQuery = new URLSearchParams(window.location.search).get("service");
  if (fromQuery) return fromQuery.replace(/\/$/, "");
  return "";
}

function mustFind<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function bootstrap(): void {
  const state = new ViewState();
  const client = new DiversityClient(serviceBaseUrl());

  const form = mustFind<HTMLFormElement>("query-form");
  const inputBox = mustFind<HTMLInputElement>("query-input");
  const statusBox = mustFind<HTMLElement>("status");
  const reportBox = mustFind<HTMLElement>("report");
  const historyBox = mustFind<HTMLElement>("history");
  const compareButton = mustFind<HTMLButtonElement>("compare-button");
  const comparisonBox = mustFind<HTMLElement>("comparison");
  const overlayToggle = mustFind<HTMLInputElement>("overlay-toggle");
  const histogramCanvas = mustFind<HTMLCanvasElement>("histogram");

  function redraw(): void {
    renderStatus(statusBox, state.status);
    const last = state.history.length ? state.history[state.history.length - 1] : null;
    renderReport(reportBox, state.status.phase === "done" ? last : null);
    renderHistory(historyBox, state.history, state.selected, (index) => {
      state.toggleSelected(index);
      redraw();
    });
    compareButton.disabled = !state.canCompare();
    renderComparison(comparisonBox, state.canCompare() ? state.selectedRecords() : []);
    const marker =
      state.status.phase === "done" && state.lastReport ? state.lastReport.outgoing.cfdi : null;
    renderHistogram(histogramCanvas, state.histogram, marker, state.overlayEnabled);
    const retry = statusBox.querySelector("button.retry");
    retry?.addEventListener("click", () => {
      void submitQuery(state, client, state.input).then(redraw);
    });
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitQuery(state, client, inputBox.value).then(redraw);
    redraw(); // show the loading state immediately
  });

  compareButton.addEventListener("click", () => redraw());
  overlayToggle.addEventListener("change", () => {
    state.overlayEnabled = overlayToggle.checked;
    redraw();
  });

  void loadHistogram(state, client).then(redraw);
}

if (typeof document !== "undefined" && document.getElementById("query-form")) {
  bootstrap();
}
