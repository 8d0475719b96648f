// View state: the current query, its status, the history of successful
// reports (append-only within a session), and the comparison selection.

import type { DiversityReport, Histogram } from "./api.js";

export interface QueryRecord {
  input: string;
  report: DiversityReport;
}

export type Status =
  | { phase: "idle" }
  | { phase: "loading"; input: string }
  | { phase: "done" }
  | { phase: "invalid"; message: string }
  | { phase: "error"; httpStatus: number | null; code: string; message: string };

export class ViewState {
  input = "";
  status: Status = { phase: "idle" };
  lastReport: DiversityReport | null = null;
  histogram: Histogram | null = null;
  overlayEnabled = true;
  readonly history: QueryRecord[] = [];
  readonly selected = new Set<number>();

  private seq = 0;

  /** Stamp a new in-flight query; older responses become stale. */
  nextSeq(): number {
    return ++this.seq;
  }

  isCurrent(seq: number): boolean {
    return seq === this.seq;
  }

  appendHistory(record: QueryRecord): void {
    this.history.push(record);
  }

  toggleSelected(historyIndex: number): void {
    if (this.selected.has(historyIndex)) {
      this.selected.delete(historyIndex);
    } else {
      this.selected.add(historyIndex);
    }
  }

  /** The comparison control is enabled only with two or more picks. */
  canCompare(): boolean {
    return this.selected.size >= 2;
  }

  selectedRecords(): QueryRecord[] {
    return [...this.selected].sort((a, b) => a - b).map((i) => this.history[i]);
  }
}
