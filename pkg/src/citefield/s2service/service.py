"""Diversity lookup service: per-entity CFDI against the corpus distribution.

Endpoints re-serialize library results; no metric arithmetic happens in
handlers. Error mapping: 400 for unresolvable ids, 404 for unknown
entities, 429 when the upstream keeps rate-limiting, 502 for upstream
failures.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..errors import (
    ResolutionError,
    UnknownEntityError,
    UpstreamError,
    UpstreamRateLimitError,
)
from ..metrics import cfdi
from ..reports import SCHEMA_VERSION, CfdiHistogram, round_half_up
from .client import EntityRef, S2Client, resolve_entity

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class DirectionBreakdown:
    """Field counts and CFDI for one citation direction."""

    field_counts: dict[str, int]
    total_references: int
    unlabeled_references: int
    cfdi: float | None
    percentile: float | None

    def to_dict(self) -> dict:
        total = sum(self.field_counts.values())
        breakdown = [
            {
                "field": field,
                "count": count,
                "percentage": round_half_up(100.0 * count / total) if total else 0.0,
            }
            for field, count in sorted(self.field_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        ]
        return {
            "total_references": self.total_references,
            "unlabeled_references": self.unlabeled_references,
            "field_counts": breakdown,
            "cfdi": self.cfdi,
            "cfdi_defined": self.cfdi is not None,
            "percentile": self.percentile,
        }


@dataclass
class DiversityReport:
    """Per-entity citation-field breakdown and CFDI."""

    entity: EntityRef
    outgoing: DirectionBreakdown
    incoming: DirectionBreakdown | None
    complete: bool

    # convenience passthroughs for the common outgoing-only use
    @property
    def field_counts(self) -> dict[str, int]:
        return self.outgoing.field_counts

    @property
    def cfdi(self) -> float | None:
        return self.outgoing.cfdi

    @property
    def percentile(self) -> float | None:
        return self.outgoing.percentile

    @property
    def cfdi_defined(self) -> bool:
        return self.outgoing.cfdi is not None

    @property
    def total_references(self) -> int:
        return self.outgoing.total_references

    @property
    def unlabeled_references(self) -> int:
        return self.outgoing.unlabeled_references

    def to_dict(self) -> dict:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "entity": {
                "kind": self.entity.kind,
                "id": self.entity.canonical_id,
                "input": self.entity.raw,
            },
            "outgoing": self.outgoing.to_dict(),
            "complete": self.complete,
        }
        if self.incoming is not None:
            payload["incoming"] = self.incoming.to_dict()
        return payload


def _breakdown(fetched, histogram: CfdiHistogram | None) -> DirectionBreakdown:
    counts: Counter[str] = Counter()
    unlabeled = 0
    for item in fetched.items:
        if item.fields:
            counts.update(item.fields)
        else:
            unlabeled += 1
    score = cfdi(counts) if counts else None
    percentile = None
    if score is not None and histogram is not None and histogram.total > 0:
        percentile = histogram.percentile_of(score)
    return DirectionBreakdown(
        field_counts=dict(counts),
        total_references=len(fetched.items),
        unlabeled_references=unlabeled,
        cfdi=score,
        percentile=percentile,
    )


def entity_diversity(
    entity: EntityRef,
    client: S2Client,
    histogram: CfdiHistogram | None = None,
    include_incoming: bool = False,
) -> DiversityReport:
    """Fetch references and compute the citation-field breakdown and CFDI.

    Each reference contributes one count per field label it carries (the
    multi-label attribution rule); references without labels are counted
    separately and contribute nothing. Author and venue entities pool
    counts across their papers. ``include_incoming`` adds the same
    breakdown for citations received.
    """
    refs = client.fetch_references(entity)
    outgoing = _breakdown(refs, histogram)
    incoming = None
    complete = refs.complete
    if include_incoming:
        cites = client.fetch_citations(entity)
        incoming = _breakdown(cites, histogram)
        complete = complete and cites.complete
    return DiversityReport(
        entity=entity,
        outgoing=outgoing,
        incoming=incoming,
        complete=complete,
    )


# ---------------------------------------------------------------------------
# HTTP service
# ---------------------------------------------------------------------------


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def create_app(
    client: S2Client,
    histogram: CfdiHistogram | None = None,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    """Wire the diversity endpoints around a client and optional histogram."""
    app = FastAPI(title="citefield diversity service", version="1")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET"], allow_headers=["*"]
    )

    @app.exception_handler(ResolutionError)
    async def _bad_id(_, exc: ResolutionError):
        return _error(400, "bad_id", str(exc))

    @app.exception_handler(UnknownEntityError)
    async def _unknown(_, exc: UnknownEntityError):
        return _error(404, "entity_not_found", str(exc))

    @app.exception_handler(UpstreamRateLimitError)
    async def _limited(_, exc: UpstreamRateLimitError):
        return _error(429, "rate_limited", str(exc))

    @app.exception_handler(UpstreamError)
    async def _upstream(_, exc: UpstreamError):
        return _error(502, "upstream_failure", str(exc))

    @app.get("/healthz", response_class=PlainTextResponse)
    def healthz() -> str:
        return "ok"

    def _resolved(kind: str, entity_id: str) -> EntityRef:
        try:
            ref = resolve_entity(entity_id)
        except ResolutionError:
            if kind == "venue":  # venue names are free-form
                return EntityRef("venue", entity_id, entity_id)
            raise
        if ref.kind != kind:
            if kind == "venue":
                return EntityRef("venue", entity_id, entity_id)
            raise ResolutionError(
                f"identifier {entity_id!r} resolves to a {ref.kind}, not a {kind}"
            )
        return ref

    @app.get("/v1/diversity/paper/{entity_id:path}")
    def paper_diversity(entity_id: str, incoming: bool = False) -> dict:
        ref = _resolved("paper", entity_id)
        return entity_diversity(ref, client, histogram, include_incoming=incoming).to_dict()

    @app.get("/v1/diversity/author/{entity_id:path}")
    def author_diversity(entity_id: str, incoming: bool = False) -> dict:
        ref = _resolved("author", entity_id)
        return entity_diversity(ref, client, histogram, include_incoming=incoming).to_dict()

    @app.get("/v1/diversity/venue/{entity_id:path}")
    def venue_diversity(entity_id: str, incoming: bool = False) -> dict:
        ref = _resolved("venue", entity_id)
        return entity_diversity(ref, client, histogram, include_incoming=incoming).to_dict()

    @app.get("/v1/corpus/cfdi-distribution")
    def corpus_distribution():
        if histogram is None:
            return _error(404, "no_histogram", "no corpus histogram loaded")
        return {
            "schema_version": SCHEMA_VERSION,
            "bin_width": histogram.bin_width,
            "counts": histogram.counts,
            "total": histogram.total,
            "scope": histogram.scope,
        }

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8040
    base_url: str = "https://api.semanticscholar.org/graph/v1"
    api_key: str | None = None
    cache_dir: str | None = None
    histogram_path: str | None = None
    rate_per_sec: float = 1.0
    frontend_dir: str | None = None


def serve(config: ServiceConfig) -> None:
    """Run the HTTP service until interrupted."""
    import uvicorn

    histogram = None
    if config.histogram_path:
        histogram = CfdiHistogram.from_json(Path(config.histogram_path).read_text("utf-8"))
    client = S2Client(
        base_url=config.base_url,
        api_key=config.api_key,
        cache_dir=config.cache_dir,
        rate_per_sec=config.rate_per_sec,
    )
    app = create_app(client, histogram, frontend_dir=config.frontend_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
