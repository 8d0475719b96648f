// Typed client for the diversity lookup service. The UI talks to the
// documented HTTP API only and never recomputes metrics client-side.

export type EntityKind = "paper" | "author" | "venue";

export interface FieldCount {
  field: string;
  count: number;
  percentage: number;
}

export interface DiversityReport {
  schema_version: number;
  entity: { kind: EntityKind; id: string; input: string };
  outgoing: {
    total_references: number;
    unlabeled_references: number;
    field_counts: FieldCount[];
    cfdi: number | null;
    cfdi_defined: boolean;
    percentile: number | null;
  };
  complete: boolean;
}

export interface Histogram {
  schema_version: number;
  bin_width: number;
  counts: number[];
  total: number;
  scope: string;
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number | null,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

const HEX40 = /^[0-9a-f]{40}$/;
const ACL_OLD = /^[A-Z]\d{2}-\d{1,4}$/;
const ACL_NEW = /^\d{4}\.[a-z0-9-]+\.\d+$/;
const DIGITS = /^\d+$/;

/** Client-side mirror of the service's identifier patterns.
 *  Returns null for inputs the service would reject, so no request is sent. */
export function detectKind(raw: string): EntityKind | null {
  const s = raw.trim();
  if (!s) return null;
  const lower = s.toLowerCase();
  if (lower.startsWith("paper:")) return "paper";
  if (lower.startsWith("author:")) return "author";
  if (lower.startsWith("venue:")) return "venue";
  if (lower.includes("aclanthology.org") || lower.includes("aclweb.org")) {
    return lower.includes("/volumes/") ? "venue" : "paper";
  }
  if (lower.includes("semanticscholar.org")) {
    if (lower.includes("/author/")) return "author";
    if (lower.includes("/paper/")) return "paper";
    return null;
  }
  if (HEX40.test(lower)) return "paper";
  if (/^corpusid:\d+$/.test(lower)) return "paper";
  if (ACL_OLD.test(s) || ACL_NEW.test(lower)) return "paper";
  if (DIGITS.test(s)) return "author";
  return null;
}

async function errorFrom(response: Response): Promise<ServiceError> {
  let code = "unknown";
  let message = `service responded with ${response.status}`;
  try {
    const body = await response.json();
    if (body?.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ServiceError(response.status, code, message);
}

export class DiversityClient {
  constructor(private readonly baseUrl: string = "") {}

  async fetchDiversity(kind: EntityKind, id: string): Promise<DiversityReport> {
    let response: Response;
    try {
      response = await fetch(
        `${this.baseUrl}/v1/diversity/${kind}/${encodeURIComponent(id)}`,
      );
    } catch (err) {
      throw new ServiceError(null, "network", `service unreachable: ${err}`);
    }
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as DiversityReport;
  }

  /** Corpus histogram, or null when the service has none loaded. */
  async fetchHistogram(): Promise<Histogram | null> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}/v1/corpus/cfdi-distribution`);
    } catch (err) {
      throw new ServiceError(null, "network", `service unreachable: ${err}`);
    }
    if (response.status === 404) return null;
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as Histogram;
  }
}
