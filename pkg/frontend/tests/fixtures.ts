// Frozen responses captured from the lookup service running on its
// canned upstream fixtures. Tests assert the UI renders these verbatim.

import type { DiversityReport, Histogram } from "../src/api.js";

export const PAPER_ID = "1111111111111111111111111111111111111111";

export const PAPER_REPORT: DiversityReport = {
  schema_version: 1,
  entity: { kind: "paper", id: PAPER_ID, input: PAPER_ID },
  outgoing: {
    total_references: 3,
    unlabeled_references: 0,
    field_counts: [
      { field: "Computer Science", count: 2, percentage: 50.0 },
      { field: "Linguistics", count: 1, percentage: 25.0 },
      { field: "Mathematics", count: 1, percentage: 25.0 },
    ],
    cfdi: 0.625,
    cfdi_defined: true,
    percentile: 62.5,
  },
  complete: true,
};

export const AUTHOR_REPORT: DiversityReport = {
  schema_version: 1,
  entity: { kind: "author", id: "7", input: "7" },
  outgoing: {
    total_references: 4,
    unlabeled_references: 0,
    field_counts: [
      { field: "Computer Science", count: 2, percentage: 50.0 },
      { field: "Linguistics", count: 1, percentage: 25.0 },
      { field: "Mathematics", count: 1, percentage: 25.0 },
    ],
    cfdi: 0.625,
    cfdi_defined: true,
    percentile: 62.5,
  },
  complete: true,
};

export const HISTOGRAM: Histogram = {
  schema_version: 1,
  bin_width: 0.05,
  counts: [2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2],
  total: 40,
  scope: "nlp",
};

export function errorBody(code: string, message: string) {
  return { error: { code, message } };
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}
