"""Client for the public scholarly-graph REST API.

Identifier resolution, a token-bucket rate limiter, retry with
exponential backoff, and a per-entity disk cache
(``cache/<kind>/<id>.json``, entries expiring after a configurable
number of days). The HTTP transport is injectable so tests run against
canned responses.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable
from urllib.parse import quote, unquote, urlparse

import httpx

from ..errors import ResolutionError, UnknownEntityError, UpstreamError, UpstreamRateLimitError

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.semanticscholar.org/graph/v1"
API_KEY_ENV = "S2_API_KEY"
CACHE_DIR_ENV = "CITEFIELD_CACHE_DIR"

_PAPER_FIELDS = "title,year,externalIds,s2FieldsOfStudy,fieldsOfStudy"

_HEX40_RE = re.compile(r"^[0-9a-f]{40}$")
_ACL_OLD_RE = re.compile(r"^[A-Z]\d{2}-\d{1,4}$")
_ACL_NEW_RE = re.compile(r"^\d{4}\.[a-z0-9-]+\.\d+$")
_DIGITS_RE = re.compile(r"^\d+$")
_CORPUS_RE = re.compile(r"^CorpusId:\d+$", re.IGNORECASE)


# ---------------------------------------------------------------------------
# Entity resolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntityRef:
    """A resolved entity: what the user typed and the canonical API id."""

    kind: str  # "paper" | "author" | "venue"
    raw: str
    canonical_id: str


def _acl_paper_id(token: str) -> str | None:
    token = token.removesuffix(".pdf").strip("/")
    if _ACL_OLD_RE.match(token) or _ACL_NEW_RE.match(token):
        return f"ACL:{token}"
    return None


def _resolve_url(raw: str) -> EntityRef | None:
    parsed = urlparse(raw if "://" in raw else f"https://{raw}")
    host = parsed.netloc.lower()
    parts = [unquote(p) for p in parsed.path.split("/") if p]

    if host.endswith("aclanthology.org") or (host.endswith("aclweb.org") and "anthology" in parts):
        if "volumes" in parts:
            i = parts.index("volumes")
            if i + 1 < len(parts):
                return EntityRef("venue", raw, parts[i + 1])
        for part in reversed(parts):
            acl = _acl_paper_id(part)
            if acl:
                return EntityRef("paper", raw, acl)
        return None

    if host.endswith("semanticscholar.org"):
        if "paper" in parts:
            for part in reversed(parts):
                if _HEX40_RE.match(part):
                    return EntityRef("paper", raw, part)
                if _CORPUS_RE.match(part):
                    return EntityRef("paper", raw, part)
        if "author" in parts:
            for part in reversed(parts):
                if _DIGITS_RE.match(part):
                    return EntityRef("author", raw, part)
    return None


def resolve_entity(raw: str) -> EntityRef:
    """Detect the entity kind of an identifier string.

    Accepts 40-hex paper hashes, ``CorpusId:N``, anthology paper ids
    (``P19-1234`` / ``2020.acl-main.123``) and URLs, scholarly-graph
    paper/author profile URLs, bare numeric author ids, and explicit
    ``paper:``/``author:``/``venue:`` prefixes.
    """
    s = raw.strip()
    if not s:
        raise ResolutionError("empty identifier")

    lowered = s.lower()
    for prefix in ("paper:", "author:", "venue:"):
        if lowered.startswith(prefix):
            rest = s[len(prefix):].strip()
            if not rest:
                raise ResolutionError(f"empty identifier after {prefix!r}")
            return EntityRef(prefix[:-1], raw, rest)

    if "://" in s or any(h in lowered for h in ("aclanthology.org", "aclweb.org", "semanticscholar.org")):
        ref = _resolve_url(s)
        if ref is not None:
            return ref
        raise ResolutionError(f"unrecognized URL {raw!r}")

    if _HEX40_RE.match(lowered):
        return EntityRef("paper", raw, lowered)
    if _CORPUS_RE.match(s):
        return EntityRef("paper", raw, s)
    acl = _acl_paper_id(s)
    if acl:
        return EntityRef("paper", raw, acl)
    if _DIGITS_RE.match(s):
        return EntityRef("author", raw, s)
    raise ResolutionError(f"cannot resolve identifier {raw!r}")


# ---------------------------------------------------------------------------
# Rate limiting
# ---------------------------------------------------------------------------


class TokenBucket:
    """Token-bucket limiter: sustained ``rate`` tokens/s, burst ``capacity``.

    ``clock``/``sleep`` are injectable for simulated-time tests.
    """

    def __init__(
        self,
        rate: float,
        capacity: float | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self._clock = clock
        self._sleep = sleep
        self._tokens = self.capacity
        self._updated = clock()
        self._lock = threading.Lock()

    def _refill(self) -> None:
        now = self._clock()
        self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
        self._updated = now

    def acquire(self, tokens: float = 1.0) -> None:
        """Block until ``tokens`` are available, then consume them."""
        if tokens > self.capacity:
            raise ValueError("cannot acquire more tokens than the bucket capacity")
        # The 1e-9 tolerance absorbs float rounding in refill arithmetic;
        # without it a refill can land immeasurably short of the target and
        # the recomputed wait becomes too small to advance any clock.
        while True:
            with self._lock:
                self._refill()
                if self._tokens + 1e-9 >= tokens:
                    self._tokens = max(0.0, self._tokens - tokens)
                    return
                wait = (tokens - self._tokens) / self.rate
            self._sleep(wait)


# ---------------------------------------------------------------------------
# Disk cache
# ---------------------------------------------------------------------------


class DiskCache:
    """Per-entity JSON cache laid out as ``<root>/<kind>/<id>.json``."""

    def __init__(self, root: str | Path, ttl_days: float = 30, clock: Callable[[], float] = time.time):
        self.root = Path(root)
        self.ttl_seconds = ttl_days * 86400
        self._clock = clock

    def _path(self, kind: str, key: str) -> Path:
        return self.root / kind / f"{quote(key, safe='')}.json"

    def get(self, kind: str, key: str) -> dict | None:
        path = self._path(kind, key)
        try:
            entry = json.loads(path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        if self._clock() - entry.get("fetched_at", 0) > self.ttl_seconds:
            return None
        return entry.get("payload")

    def put(self, kind: str, key: str, payload: dict) -> None:
        path = self._path(kind, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "fetched_at": self._clock(),
            "fetched_date": time.strftime("%Y-%m-%d", time.gmtime(self._clock())),
            "payload": payload,
        }
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(entry, sort_keys=True), encoding="utf-8")
        os.replace(tmp, path)


# ---------------------------------------------------------------------------
# API client
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelatedPaper:
    """A cited or citing paper with its field-of-study labels."""

    paper_id: str | None
    title: str | None
    year: int | None
    fields: tuple[str, ...]


@dataclass
class FetchResult:
    """Related papers plus a completeness flag (False if pages were cut off)."""

    items: list[RelatedPaper]
    complete: bool

    def as_dict(self) -> dict:
        return {
            "complete": self.complete,
            "items": [
                {"paper_id": p.paper_id, "title": p.title, "year": p.year, "fields": list(p.fields)}
                for p in self.items
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FetchResult":
        return cls(
            items=[
                RelatedPaper(
                    paper_id=item.get("paper_id"),
                    title=item.get("title"),
                    year=item.get("year"),
                    fields=tuple(item.get("fields", ())),
                )
                for item in data["items"]
            ],
            complete=data["complete"],
        )


def _paper_fields(record: dict) -> tuple[str, ...]:
    """Unique field-of-study categories of an API paper record."""
    s2fos = record.get("s2FieldsOfStudy") or []
    categories = {entry.get("category") for entry in s2fos if entry.get("category")}
    if not categories:
        categories = set(record.get("fieldsOfStudy") or [])
    return tuple(sorted(categories))


class S2Client:
    """Rate-limited, cached access to paper/author reference lists."""

    def __init__(
        self,
        base_url: str = DEFAULT_BASE_URL,
        api_key: str | None = None,
        cache_dir: str | Path | None = None,
        cache_ttl_days: float = 30,
        rate_per_sec: float = 1.0,
        burst: float | None = None,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        page_size: int = 100,
        max_pages: int = 10,
        max_entity_papers: int = 50,
        transport: httpx.BaseTransport | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        headers = {"x-api-key": api_key} if api_key else {}
        self._http = httpx.Client(
            base_url=base_url, headers=headers, transport=transport, timeout=30.0
        )
        if cache_dir is None:
            cache_dir = os.environ.get(CACHE_DIR_ENV) or Path.home() / ".cache" / "citefield"
        self.cache = DiskCache(Path(cache_dir) / "cache", ttl_days=cache_ttl_days)
        self.bucket = TokenBucket(rate_per_sec, burst, clock=clock, sleep=sleep)
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.page_size = page_size
        self.max_pages = max_pages
        self.max_entity_papers = max_entity_papers
        self._sleep = sleep

    def close(self) -> None:
        self._http.close()

    # -- transport ----------------------------------------------------------

    def _request(self, path: str, params: dict | None = None) -> dict:
        """One GET with rate limiting, retries, and status mapping."""
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            self.bucket.acquire()
            try:
                response = self._http.get(path, params=params)
            except httpx.TransportError as exc:
                last_error = exc
                if attempt < self.max_retries:
                    self._sleep(self.backoff_base * 2**attempt)
                    continue
                raise UpstreamError(f"transport failure for {path}: {exc}") from exc

            if response.status_code == 200:
                return response.json()
            if response.status_code == 404:
                raise UnknownEntityError(f"entity not found: {path}", status_code=404)
            if response.status_code == 429:
                if attempt < self.max_retries:
                    retry_after = response.headers.get("retry-after")
                    try:
                        delay = float(retry_after) if retry_after else self.backoff_base * 2**attempt
                    except ValueError:
                        delay = self.backoff_base * 2**attempt
                    self._sleep(delay)
                    continue
                raise UpstreamRateLimitError(
                    f"rate-limited by upstream after {attempt + 1} attempts", status_code=429
                )
            if response.status_code >= 500:
                if attempt < self.max_retries:
                    self._sleep(self.backoff_base * 2**attempt)
                    continue
                raise UpstreamError(
                    f"upstream error {response.status_code} for {path}",
                    status_code=response.status_code,
                )
            raise UpstreamError(
                f"unexpected upstream status {response.status_code} for {path}",
                status_code=response.status_code,
            )
        raise UpstreamError(f"request failed: {last_error}")  # pragma: no cover

    def _paginate(self, path: str, params: dict, item_key: str) -> tuple[list[dict], bool]:
        """Offset pagination; returns (records, complete)."""
        records: list[dict] = []
        offset = 0
        for _ in range(self.max_pages):
            page = self._request(path, {**params, "offset": offset, "limit": self.page_size})
            for row in page.get("data", []):
                record = row.get(item_key) if item_key else row
                if record:
                    records.append(record)
            if page.get("next") is None:
                return records, True
            offset = page["next"]
        logger.warning("pagination cut off after %d pages of %s", self.max_pages, path)
        return records, False

    # -- fetching ------------------------------------------------------------

    def fetch_references(self, entity: EntityRef) -> FetchResult:
        """Outgoing references of an entity (pooled over papers for author/venue)."""
        return self._fetch_related(entity, "references")

    def fetch_citations(self, entity: EntityRef) -> FetchResult:
        """Incoming citations of an entity."""
        return self._fetch_related(entity, "citations")

    def _fetch_related(self, entity: EntityRef, relation: str) -> FetchResult:
        cached = self.cache.get(entity.kind, entity.canonical_id)
        if cached is not None and relation in cached:
            return FetchResult.from_dict(cached[relation])

        if entity.kind == "paper":
            result = self._paper_related(entity.canonical_id, relation)
        elif entity.kind in ("author", "venue"):
            result = self._pooled_related(entity, relation)
        else:
            raise ResolutionError(f"unknown entity kind {entity.kind!r}")

        payload = dict(cached or {})
        payload[relation] = result.as_dict()
        self.cache.put(entity.kind, entity.canonical_id, payload)
        return result

    def _paper_related(self, paper_id: str, relation: str) -> FetchResult:
        wrapper = "citedPaper" if relation == "references" else "citingPaper"
        records, complete = self._paginate(
            f"/paper/{paper_id}/{relation}", {"fields": _PAPER_FIELDS}, wrapper
        )
        return FetchResult(items=[self._decode(r) for r in records], complete=complete)

    def _entity_papers(self, entity: EntityRef) -> tuple[list[str], bool]:
        """Paper ids belonging to an author or venue."""
        if entity.kind == "author":
            records, complete = self._paginate(
                f"/author/{entity.canonical_id}/papers", {"fields": "paperId"}, ""
            )
        else:
            records, complete = self._paginate(
                "/paper/search/bulk",
                {"venue": entity.canonical_id, "fields": "paperId"},
                "",
            )
        ids = [r["paperId"] for r in records if r.get("paperId")]
        if len(ids) > self.max_entity_papers:
            logger.warning(
                "%s %s has %d papers; only the first %d are pooled",
                entity.kind, entity.canonical_id, len(ids), self.max_entity_papers,
            )
            return ids[: self.max_entity_papers], False
        return ids, complete

    def _pooled_related(self, entity: EntityRef, relation: str) -> FetchResult:
        """Union of per-paper reference lists (counts pooled, not averaged)."""
        paper_ids, complete = self._entity_papers(entity)
        if not paper_ids:
            raise UnknownEntityError(f"{entity.kind} {entity.canonical_id!r} has no papers", status_code=404)
        items: list[RelatedPaper] = []
        for pid in paper_ids:
            sub = self._fetch_related(EntityRef("paper", pid, pid), relation)
            items.extend(sub.items)
            complete = complete and sub.complete
        return FetchResult(items=items, complete=complete)

    @staticmethod
    def _decode(record: dict) -> RelatedPaper:
        year = record.get("year")
        return RelatedPaper(
            paper_id=record.get("paperId"),
            title=record.get("title"),
            year=int(year) if isinstance(year, int) else None,
            fields=_paper_fields(record),
        )
