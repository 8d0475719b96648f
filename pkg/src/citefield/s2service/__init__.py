"""Scholarly-graph API client and the diversity lookup HTTP service."""

from .client import (
    EntityRef,
    FetchResult,
    RelatedPaper,
    S2Client,
    TokenBucket,
    resolve_entity,
)
from .service import DiversityReport, ServiceConfig, create_app, entity_diversity, serve

__all__ = [
    "EntityRef",
    "FetchResult",
    "RelatedPaper",
    "S2Client",
    "TokenBucket",
    "resolve_entity",
    "DiversityReport",
    "ServiceConfig",
    "create_app",
    "entity_diversity",
    "serve",
]
