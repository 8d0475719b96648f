"""Domain records and streaming ingestion of paper/citation dumps.

Input is newline-delimited JSON. Paper records carry ``id``, optional
``year``/``title``, a non-empty ``fields`` array from the top-level
taxonomy, optional ``cs_subfields``, an ``is_nlp`` flag, and a total
incoming ``citation_count``. Edge records carry ``src`` and ``tgt``.

Ingestion is single-pass with working memory independent of edge count;
everything that grows is part of the finished :class:`CorpusIndex`
(interning table, packed per-paper columns, edge arrays).
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
from array import array
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import IndexFormatError, RecordParseError
from .schemes import FieldScheme, cs_subfield_scheme, top_level_scheme

logger = logging.getLogger(__name__)

YEAR_MIN = 1965
YEAR_MAX = 2099
YEAR_UNKNOWN = -1

_INDEX_MAGIC = b"CFIDX"
_INDEX_VERSION = 1


# ---------------------------------------------------------------------------
# Records and parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PaperRecord:
    """One paper: identity, publication year, labels, and corpus flags."""

    paper_id: str
    year: int | None
    title: str
    fields: frozenset[str]
    cs_subfields: frozenset[str] = frozenset()
    is_nlp: bool = False
    citation_count: int = 0


@dataclass(frozen=True)
class CitationEdge:
    """One directed citation: ``src_id`` cites ``tgt_id``."""

    src_id: str
    tgt_id: str


def _decode_json_object(line: str | bytes, position: int | None) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"malformed record: {exc.msg}", position) from None
    if not isinstance(obj, dict):
        raise RecordParseError("record is not a JSON object", position)
    return obj


def parse_paper_record(
    line: str | bytes,
    scheme: FieldScheme | None = None,
    cs_scheme: FieldScheme | None = None,
    position: int | None = None,
) -> PaperRecord:
    """Decode one paper record line, validating labels against the schemes."""
    scheme = scheme or top_level_scheme()
    cs_scheme = cs_scheme or cs_subfield_scheme()
    obj = _decode_json_object(line, position)

    paper_id = obj.get("id")
    if not isinstance(paper_id, str) or not paper_id:
        raise RecordParseError("missing or empty 'id'", position)

    year = obj.get("year")
    if year is None:
        year_val: int | None = None
    elif isinstance(year, int) and not isinstance(year, bool):
        if not YEAR_MIN <= year <= YEAR_MAX:
            raise RecordParseError(f"year {year} outside {YEAR_MIN}-{YEAR_MAX}", position)
        year_val = year
    else:
        raise RecordParseError(f"year must be an integer, got {year!r}", position)

    fields = obj.get("fields")
    if not isinstance(fields, list) or not fields:
        raise RecordParseError("empty field set", position)
    for name in fields:
        if not isinstance(name, str) or name not in scheme:
            raise RecordParseError(f"unknown field label {name!r}", position)

    cs_subfields = obj.get("cs_subfields", [])
    if not isinstance(cs_subfields, list):
        raise RecordParseError("'cs_subfields' must be an array", position)
    for name in cs_subfields:
        if not isinstance(name, str) or name not in cs_scheme:
            raise RecordParseError(f"unknown CS subfield label {name!r}", position)

    citation_count = obj.get("citation_count", 0)
    if not isinstance(citation_count, int) or isinstance(citation_count, bool) or citation_count < 0:
        raise RecordParseError(f"negative or non-integer citation_count {citation_count!r}", position)

    title = obj.get("title", "")
    if title is None:
        title = ""
    if not isinstance(title, str):
        raise RecordParseError("'title' must be a string", position)

    return PaperRecord(
        paper_id=paper_id,
        year=year_val,
        title=title,
        fields=frozenset(fields),
        cs_subfields=frozenset(cs_subfields),
        is_nlp=bool(obj.get("is_nlp", False)),
        citation_count=citation_count,
    )


def parse_citation_edge(line: str | bytes, position: int | None = None) -> CitationEdge:
    """Decode one citation edge line."""
    obj = _decode_json_object(line, position)
    src = obj.get("src")
    tgt = obj.get("tgt")
    if not isinstance(src, str) or not src:
        raise RecordParseError("missing source", position)
    if not isinstance(tgt, str) or not tgt:
        raise RecordParseError("missing target", position)
    if src == tgt:
        raise RecordParseError(f"self-citation edge {src!r}", position)
    return CitationEdge(src, tgt)


# ---------------------------------------------------------------------------
# Corpus index
# ---------------------------------------------------------------------------


@dataclass
class IngestSummary:
    """Counts gathered during ingestion."""

    papers: int = 0
    duplicate_papers: int = 0
    paper_errors: int = 0
    edge_lines: int = 0
    resolvable_edges: int = 0
    dangling_edges: int = 0
    edge_errors: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


class CorpusIndex:
    """Compact, immutable, queryable corpus of papers and citation edges.

    Paper ids are interned to dense integers; per-paper attributes live in
    packed numpy columns (year, field bitset, CS-subfield bitset, flags).
    Edges are stored as parallel ``src``/``tgt`` arrays of interned ids,
    with CSR adjacency built lazily in both directions.
    """

    def __init__(
        self,
        paper_ids: list[str],
        titles: list[str],
        years: np.ndarray,
        field_bits: np.ndarray,
        cs_bits: np.ndarray,
        is_nlp: np.ndarray,
        citation_count: np.ndarray,
        edge_src: np.ndarray,
        edge_tgt: np.ndarray,
        scheme: FieldScheme,
        cs_scheme: FieldScheme,
        summary: IngestSummary,
    ):
        self.paper_ids = paper_ids
        self.titles = titles
        self.years = years
        self.field_bits = field_bits
        self.cs_bits = cs_bits
        self.is_nlp = is_nlp
        self.citation_count = citation_count
        self.edge_src = edge_src
        self.edge_tgt = edge_tgt
        self.scheme = scheme
        self.cs_scheme = cs_scheme
        self.summary = summary
        self._intern = {pid: i for i, pid in enumerate(paper_ids)}
        self._out_csr: tuple[np.ndarray, np.ndarray] | None = None
        self._in_csr: tuple[np.ndarray, np.ndarray] | None = None
        for arr in (years, field_bits, cs_bits, is_nlp, citation_count, edge_src, edge_tgt):
            arr.flags.writeable = False

    # -- identity ----------------------------------------------------------

    @property
    def n_papers(self) -> int:
        return len(self.paper_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_src)

    def resolve(self, paper_id: str) -> int:
        """Interned integer for a paper id; raises KeyError if absent."""
        return self._intern[paper_id]

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self._intern

    # -- adjacency ---------------------------------------------------------

    def _csr(self, keys: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        order = np.argsort(keys, kind="stable")
        indices = values[order]
        counts = np.bincount(keys, minlength=self.n_papers)
        indptr = np.zeros(self.n_papers + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, indices

    def _out(self) -> tuple[np.ndarray, np.ndarray]:
        if self._out_csr is None:
            self._out_csr = self._csr(self.edge_src, self.edge_tgt)
        return self._out_csr

    def _in(self) -> tuple[np.ndarray, np.ndarray]:
        if self._in_csr is None:
            self._in_csr = self._csr(self.edge_tgt, self.edge_src)
        return self._in_csr

    def out_neighbors(self, paper: int) -> np.ndarray:
        """Interned ids of papers cited by ``paper``."""
        indptr, indices = self._out()
        return indices[indptr[paper] : indptr[paper + 1]]

    def in_neighbors(self, paper: int) -> np.ndarray:
        """Interned ids of papers citing ``paper``."""
        indptr, indices = self._in()
        return indices[indptr[paper] : indptr[paper + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_src, minlength=self.n_papers)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_tgt, minlength=self.n_papers)

    # -- scopes and labels ---------------------------------------------------

    def bits_for(self, scheme: FieldScheme) -> np.ndarray:
        """Packed label column for one of the index's own schemes."""
        if scheme == self.scheme:
            return self.field_bits
        if scheme == self.cs_scheme:
            return self.cs_bits
        raise ValueError(f"index has no label column for scheme {scheme.name!r}")

    def mask_all(self) -> np.ndarray:
        return np.ones(self.n_papers, dtype=bool)

    def mask_nlp(self) -> np.ndarray:
        return self.is_nlp.copy()

    def mask_field(self, label: str) -> np.ndarray:
        bit = 1 << self.scheme.index(label)
        return (self.field_bits & bit) != 0

    def field_counts_per_paper(self) -> np.ndarray:
        """Number of top-level field labels per paper."""
        return _popcount(self.field_bits)


@dataclass(frozen=True)
class Scope:
    """A named predicate over papers, materialized as a boolean mask."""

    name: str
    mask: np.ndarray

    def count(self) -> int:
        return int(self.mask.sum())


def scope_all(index: CorpusIndex) -> Scope:
    return Scope("all", index.mask_all())


def scope_nlp(index: CorpusIndex) -> Scope:
    return Scope("nlp", index.mask_nlp())


def scope_field(index: CorpusIndex, label: str) -> Scope:
    return Scope(label, index.mask_field(label))


def _popcount(bits: np.ndarray) -> np.ndarray:
    counts = np.zeros(bits.shape, dtype=np.int64)
    work = bits.astype(np.uint64, copy=True)
    while work.any():
        counts += (work & 1).astype(np.int64)
        work >>= np.uint64(1)
    return counts


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def _iter_lines(source: str | Path | Iterable[str | bytes]) -> Iterator[str | bytes]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def _as_sources(source) -> list:
    """Normalize a source argument to a list of shards.

    A ``str`` or ``Path`` is one file; a list/tuple of ``Path`` objects is
    a list of shard files; anything else is an iterable of record lines.
    """
    if isinstance(source, (str, Path)):
        return [source]
    if isinstance(source, (list, tuple)) and source and all(isinstance(s, Path) for s in source):
        return list(source)
    return [source]


class _PaperColumns:
    """Growable per-paper columns used while streaming paper records."""

    def __init__(self) -> None:
        self.ids: list[str] = []
        self.titles: list[str] = []
        self.years = array("h")
        self.field_bits = array("I")
        self.cs_bits = array("I")
        self.is_nlp = array("b")
        self.citation_count = array("q")

    def append(self, rec: PaperRecord, scheme: FieldScheme, cs_scheme: FieldScheme) -> None:
        self.ids.append(rec.paper_id)
        self.titles.append(rec.title)
        self.years.append(YEAR_UNKNOWN if rec.year is None else rec.year)
        self.field_bits.append(scheme.bits_of(rec.fields))
        self.cs_bits.append(cs_scheme.bits_of(rec.cs_subfields))
        self.is_nlp.append(1 if rec.is_nlp else 0)
        self.citation_count.append(rec.citation_count)


def _ingest_papers(
    sources: list,
    scheme: FieldScheme,
    cs_scheme: FieldScheme,
    on_error: str,
    summary: IngestSummary,
) -> tuple[_PaperColumns, dict[str, int]]:
    cols = _PaperColumns()
    intern: dict[str, int] = {}
    for source in sources:
        position = 0
        for line in _iter_lines(source):
            position += 1
            if not line.strip():
                continue
            try:
                rec = parse_paper_record(line, scheme, cs_scheme, position)
            except RecordParseError:
                if on_error == "raise":
                    raise
                summary.paper_errors += 1
                continue
            if rec.paper_id in intern:
                summary.duplicate_papers += 1
                continue
            intern[rec.paper_id] = len(cols.ids)
            cols.append(rec, scheme, cs_scheme)
    summary.papers = len(cols.ids)
    return cols, intern


def _ingest_edge_lines(
    lines: Iterable[str | bytes],
    intern: dict[str, int],
    on_error: str,
) -> tuple[array, array, int, int, int]:
    """Single pass over edge lines.

    Returns (src, tgt, accepted_lines, dangling, errors). The hot path
    splits the canonical ``{"src": "...", "tgt": "..."}`` shape directly
    and falls back to full JSON decoding for anything else.
    """
    src = array("i")
    tgt = array("i")
    src_append = src.append
    tgt_append = tgt.append
    get = intern.get
    loads = json.loads
    accepted = dangling = errors = 0
    position = 0

    for line in lines:
        position += 1
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if not line.strip():
            continue
        s_id = t_id = None
        if "\\" not in line:
            # exact match for {"src": "...", "tgt": "..."} modulo whitespace;
            # anything else (extra keys, arrays, escapes) takes the JSON path
            parts = line.split('"')
            if (
                len(parts) == 9
                and parts[1] == "src"
                and parts[5] == "tgt"
                and parts[3]
                and parts[7]
                and parts[0].strip() == "{"
                and parts[2].strip() == ":"
                and parts[4].strip() == ","
                and parts[6].strip() == ":"
                and parts[8].strip() == "}"
            ):
                s_id = parts[3]
                t_id = parts[7]
        if s_id is None or s_id == t_id:
            try:
                edge = parse_citation_edge(line, position)
            except RecordParseError:
                if on_error == "raise":
                    raise
                errors += 1
                continue
            s_id, t_id = edge.src_id, edge.tgt_id
        accepted += 1
        s = get(s_id, -1)
        t = get(t_id, -1)
        if s >= 0 and t >= 0:
            src_append(s)
            tgt_append(t)
        else:
            dangling += 1

    return src, tgt, accepted, dangling, errors


# Globals inherited by forked edge-shard workers.
_WORKER_INTERN: dict[str, int] = {}
_WORKER_ON_ERROR = "raise"


def _init_edge_worker(intern: dict[str, int], on_error: str) -> None:
    global _WORKER_INTERN, _WORKER_ON_ERROR
    _WORKER_INTERN = intern
    _WORKER_ON_ERROR = on_error


def _edge_shard(path: str | Path) -> tuple[bytes, bytes, int, int, int]:
    src, tgt, accepted, dangling, errors = _ingest_edge_lines(
        _iter_lines(path), _WORKER_INTERN, _WORKER_ON_ERROR
    )
    return src.tobytes(), tgt.tobytes(), accepted, dangling, errors


def build_index(
    papers: str | Path | Iterable | list,
    edges: str | Path | Iterable | list,
    *,
    scheme: FieldScheme | None = None,
    cs_scheme: FieldScheme | None = None,
    on_error: str = "raise",
    workers: int = 1,
) -> tuple[CorpusIndex, IngestSummary]:
    """Stream paper and edge records into a :class:`CorpusIndex`.

    ``papers`` and ``edges`` may each be a path, a list of paths (shards),
    or an iterable of record lines. Duplicate paper ids keep the first
    occurrence; edges with an endpoint missing from the corpus are counted
    as dangling and excluded. ``on_error`` is ``"raise"`` (default) or
    ``"skip"`` (count malformed lines and continue). With ``workers > 1``
    and multiple edge files, shards are parsed in parallel and merged;
    the merge is order-preserving so results match the sequential pass.
    """
    if on_error not in ("raise", "skip"):
        raise ValueError("on_error must be 'raise' or 'skip'")
    scheme = scheme or top_level_scheme()
    cs_scheme = cs_scheme or cs_subfield_scheme()
    summary = IngestSummary()

    paper_sources = _as_sources(papers)
    cols, intern = _ingest_papers(paper_sources, scheme, cs_scheme, on_error, summary)

    edge_sources = _as_sources(edges)
    shard_results: list[tuple[array | bytes, array | bytes, int, int, int]] = []
    use_pool = (
        workers > 1
        and len(edge_sources) > 1
        and all(isinstance(s, (str, Path)) for s in edge_sources)
    )
    if use_pool:
        import multiprocessing

        with multiprocessing.Pool(
            min(workers, len(edge_sources)), _init_edge_worker, (intern, on_error)
        ) as pool:
            shard_results = pool.map(_edge_shard, edge_sources)
    else:
        for source in edge_sources:
            shard_results.append(_ingest_edge_lines(_iter_lines(source), intern, on_error))

    src_parts = []
    tgt_parts = []
    for s_part, t_part, accepted, dangling, errors in shard_results:
        if isinstance(s_part, bytes):
            src_parts.append(np.frombuffer(s_part, dtype=np.int32))
            tgt_parts.append(np.frombuffer(t_part, dtype=np.int32))
        else:
            src_parts.append(np.asarray(s_part, dtype=np.int32))
            tgt_parts.append(np.asarray(t_part, dtype=np.int32))
        summary.edge_lines += accepted
        summary.dangling_edges += dangling
        summary.edge_errors += errors

    edge_src = np.concatenate(src_parts) if src_parts else np.empty(0, np.int32)
    edge_tgt = np.concatenate(tgt_parts) if tgt_parts else np.empty(0, np.int32)
    summary.resolvable_edges = len(edge_src)

    index = CorpusIndex(
        paper_ids=cols.ids,
        titles=cols.titles,
        years=np.asarray(cols.years, dtype=np.int16),
        field_bits=np.asarray(cols.field_bits, dtype=np.uint32),
        cs_bits=np.asarray(cols.cs_bits, dtype=np.uint32),
        is_nlp=np.asarray(cols.is_nlp, dtype=np.int8).astype(bool),
        citation_count=np.asarray(cols.citation_count, dtype=np.int64),
        edge_src=edge_src,
        edge_tgt=edge_tgt,
        scheme=scheme,
        cs_scheme=cs_scheme,
        summary=summary,
    )
    if summary.duplicate_papers:
        logger.warning("ingestion: %d duplicate paper ids (first kept)", summary.duplicate_papers)
    if summary.dangling_edges:
        logger.info("ingestion: %d dangling edges excluded", summary.dangling_edges)
    return index, summary


# ---------------------------------------------------------------------------
# Persistence: versioned binary container with checksum
# ---------------------------------------------------------------------------


def save_index(index: CorpusIndex, path: str | Path) -> None:
    """Write the index to a versioned, checksummed binary file."""
    meta = {
        "scheme": {"name": index.scheme.name, "labels": list(index.scheme.labels)},
        "cs_scheme": {"name": index.cs_scheme.name, "labels": list(index.cs_scheme.labels)},
        "summary": index.summary.as_dict(),
    }
    buf = io.BytesIO()
    np.savez(
        buf,
        meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        paper_ids=np.frombuffer(json.dumps(index.paper_ids).encode("utf-8"), dtype=np.uint8),
        titles=np.frombuffer(json.dumps(index.titles).encode("utf-8"), dtype=np.uint8),
        years=index.years,
        field_bits=index.field_bits,
        cs_bits=index.cs_bits,
        is_nlp=index.is_nlp,
        citation_count=index.citation_count,
        edge_src=index.edge_src,
        edge_tgt=index.edge_tgt,
    )
    payload = buf.getvalue()
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(_INDEX_MAGIC)
        fh.write(_INDEX_VERSION.to_bytes(2, "big"))
        fh.write(len(payload).to_bytes(8, "big"))
        fh.write(digest)
        fh.write(payload)


def load_index(path: str | Path) -> CorpusIndex:
    """Load an index written by :func:`save_index`, verifying the checksum."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_INDEX_MAGIC))
        if magic != _INDEX_MAGIC:
            raise IndexFormatError(f"not a corpus index file: {path}")
        version = int.from_bytes(fh.read(2), "big")
        if version != _INDEX_VERSION:
            raise IndexFormatError(
                f"unsupported index version {version} (this build reads version {_INDEX_VERSION})"
            )
        length = int.from_bytes(fh.read(8), "big")
        digest = fh.read(32)
        payload = fh.read()
    if len(payload) != length or hashlib.sha256(payload).digest() != digest:
        raise IndexFormatError(f"checksum mismatch (truncated or corrupt file): {path}")

    with np.load(io.BytesIO(payload)) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        paper_ids = json.loads(bytes(data["paper_ids"]).decode("utf-8"))
        titles = json.loads(bytes(data["titles"]).decode("utf-8"))
        scheme = FieldScheme(meta["scheme"]["name"], meta["scheme"]["labels"])
        cs_scheme = FieldScheme(meta["cs_scheme"]["name"], meta["cs_scheme"]["labels"])
        summary = IngestSummary(**meta["summary"])
        return CorpusIndex(
            paper_ids=paper_ids,
            titles=titles,
            years=data["years"].copy(),
            field_bits=data["field_bits"].copy(),
            cs_bits=data["cs_bits"].copy(),
            is_nlp=data["is_nlp"].copy(),
            citation_count=data["citation_count"].copy(),
            edge_src=data["edge_src"].copy(),
            edge_tgt=data["edge_tgt"].copy(),
            scheme=scheme,
            cs_scheme=cs_scheme,
            summary=summary,
        )
