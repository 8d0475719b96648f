"""Citation field-flow analytics.

Ingests scholarly paper-metadata and citation-edge dumps, aggregates
citations into field-by-field-by-year flow tensors, and computes
cross-field influence metrics (CFDI, ORCP/IRCP, intra-field citation
percentage, interdisciplinarity, per-bin diversity, subfield analyses).
"""

from .corpus import (
    CitationEdge,
    CorpusIndex,
    IngestSummary,
    PaperRecord,
    Scope,
    build_index,
    load_index,
    parse_citation_edge,
    parse_paper_record,
    save_index,
    scope_all,
    scope_field,
    scope_nlp,
)
from .errors import (
    CitefieldError,
    IndexFormatError,
    RecordParseError,
    ResolutionError,
    SchemeError,
    UndefinedMetricError,
    UnknownEntityError,
    UpstreamError,
    UpstreamRateLimitError,
)
from .flowgraph import FlowSlice, FlowTensor, build_flow_tensor, flow_slice, incoming_shares, outgoing_shares
from .metrics import (
    CITATION_BINS,
    CitationBin,
    RcpVector,
    assign_citation_bin,
    cfdi,
    cfdi_by_bin_and_period,
    intra_field_pct,
    ircp,
    mean_fields_per_paper,
    moving_average,
    orcp,
    per_paper_outgoing_cfdi,
    per_paper_outgoing_field_counts,
)
from .schemes import (
    FieldLabel,
    FieldScheme,
    SchemeKind,
    cs_subfield_scheme,
    load_scheme,
    nlp_subfield_scheme,
    top_level_scheme,
)

__version__ = "0.1.0"
