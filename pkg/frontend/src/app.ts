// Controller: one in-flight query at a time; superseded responses are
// discarded by sequence number; successful reports append to history.

import { detectKind, DiversityClient, ServiceError } from "./api.js";
import type { ViewState } from "./state.js";

export async function submitQuery(
  state: ViewState,
  client: DiversityClient,
  rawInput: string,
): Promise<void> {
  const input = rawInput.trim();
  state.input = input;
  if (!input) {
    state.status = { phase: "invalid", message: "enter an identifier" };
    return;
  }
  const kind = detectKind(input);
  if (kind === null) {
    // inline validation failure: no request leaves the browser
    state.status = { phase: "invalid", message: input };
    return;
  }
  const seq = state.nextSeq();
  state.status = { phase: "loading", input };
  try {
    const report = await client.fetchDiversity(kind, input);
    if (!state.isCurrent(seq)) return; // a newer query superseded this one
    state.lastReport = report;
    state.status = { phase: "done" };
    state.appendHistory({ input, report });
  } catch (err) {
    if (!state.isCurrent(seq)) return;
    if (err instanceof ServiceError) {
      state.status = {
        phase: "error",
        httpStatus: err.status,
        code: err.code,
        message: err.message,
      };
    } else {
      state.status = { phase: "error", httpStatus: null, code: "unknown", message: String(err) };
    }
  }
}

export async function loadHistogram(state: ViewState, client: DiversityClient): Promise<void> {
  try {
    state.histogram = await client.fetchHistogram();
  } catch {
    state.histogram = null; // the overlay is optional; queries still work
  }
}
