"""Citation-based field metrics.

* ``cfdi`` — Citation Field Diversity Index, the Gini–Simpson complement
  ``1 - sum(p_f^2)`` over a vector of per-field citation counts.
* ``orcp`` / ``ircp`` — Outgoing/Incoming Relative Citational Prominence:
  a focal entity's citation share to (from) each field minus the macro
  average of all fields' shares, in percentage points.
* ``intra_field_pct`` — share of a scope's outgoing citations that stay
  inside the same scope.
* ``mean_fields_per_paper`` — average number of field labels per paper.
* citation-count bins and per-bin/per-period diversity summaries.
* ``moving_average`` — centered moving average over a year-keyed series.

All functions are pure with respect to their (immutable) inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import CorpusIndex, Scope
from .errors import UndefinedMetricError
from .flowgraph import FlowTensor, YearRange
from .schemes import FieldScheme

logger = logging.getLogger(__name__)

#: A per-field citation count vector, e.g. ``{"Linguistics": 7, "Mathematics": 3}``.
FieldCountVector = Mapping[str, float]


# ---------------------------------------------------------------------------
# Citation Field Diversity Index
# ---------------------------------------------------------------------------


def cfdi(counts: FieldCountVector | Sequence[float] | np.ndarray) -> float:
    """Diversity of a field-count vector: ``1 - sum((x_f / X)^2)``.

    0 means every citation goes to a single field; the maximum,
    ``1 - 1/K`` for ``K`` occupied fields, is reached exactly at the
    uniform vector. Scale-invariant and label-permutation-invariant.

    Raises :class:`UndefinedMetricError` when the total is zero and
    ``ValueError`` for negative entries.
    """
    if isinstance(counts, Mapping):
        values = np.asarray(list(counts.values()), dtype=np.float64)
    else:
        values = np.asarray(counts, dtype=np.float64)
    if values.size and values.min() < 0:
        raise ValueError("field counts must be non-negative")
    total = values.sum()
    if total == 0:
        raise UndefinedMetricError("CFDI is undefined for an all-zero count vector")
    p = values / total
    return float(1.0 - np.dot(p, p))


# ---------------------------------------------------------------------------
# Relative citational prominence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RcpVector:
    """Per-field prominence scores in percentage points.

    ``excluded`` lists fields dropped from the macro average because they
    had no outgoing (incoming, for the transposed case) citations.
    """

    direction: str  # "outgoing" | "incoming"
    focal: str
    scores: dict[str, float]
    excluded: tuple[str, ...] = ()

    def __getitem__(self, field: str) -> float:
        return self.scores[field]


def orcp(
    tensor: FlowTensor,
    focal: str | FieldCountVector,
    years: YearRange | int | None = None,
) -> RcpVector:
    """Outgoing relative citational prominence of ``focal`` for every field.

    ``X(f)`` is the focal entity's share of outgoing citations going to
    field ``f``; ``Y(f)`` is the unweighted mean of that share across all
    fields with at least one outgoing citation (the focal field's own row
    included when it is part of the scheme). The score is
    ``100 * (X(f) - Y(f))``.

    ``focal`` is either a label on the tensor's source axis or a
    precomputed per-target-field count vector (used for corpus slices
    such as the NLP scope, which are not a field of the scheme).
    """
    return _rcp(tensor, focal, years, direction="outgoing")


def ircp(
    tensor: FlowTensor,
    focal: str | FieldCountVector,
    years: YearRange | int | None = None,
) -> RcpVector:
    """Incoming counterpart of :func:`orcp`: ``orcp`` on the transposed tensor.

    For a count-vector ``focal``, pass the focal entity's *incoming*
    per-source-field counts.
    """
    return _rcp(tensor.transpose(), focal, years, direction="incoming")


def _rcp(
    tensor: FlowTensor,
    focal: str | FieldCountVector,
    years: YearRange | int | None,
    direction: str,
) -> RcpVector:
    m = tensor.matrix(years).astype(np.float64)
    row_labels = tensor.src_labels
    col_labels = tensor.tgt_labels
    row_sums = m.sum(axis=1)
    included = row_sums > 0
    excluded = tuple(label for label, ok in zip(row_labels, included) if not ok)
    if excluded:
        logger.warning(
            "%s RCP: fields with no citations excluded from the macro average: %s",
            direction,
            ", ".join(excluded),
        )
    n_included = int(included.sum())
    if n_included == 0:
        raise UndefinedMetricError("no field has any citations; macro average undefined")
    shares = m[included] / row_sums[included, None]
    macro = shares.mean(axis=0)

    if isinstance(focal, str):
        focal_name = focal
        i = row_labels.index(focal)
        if row_sums[i] == 0:
            raise UndefinedMetricError(f"focal {focal!r} has no citations in range")
        x = m[i] / row_sums[i]
    else:
        focal_name = "scope"
        vec = np.zeros(len(col_labels), dtype=np.float64)
        for name, value in focal.items():
            vec[col_labels.index(name)] = value
        total = vec.sum()
        if total == 0:
            raise UndefinedMetricError("focal count vector is all zero")
        x = vec / total

    scores = {f: 100.0 * (x[j] - macro[j]) for j, f in enumerate(col_labels)}
    return RcpVector(direction=direction, focal=focal_name, scores=scores, excluded=excluded)


# ---------------------------------------------------------------------------
# Insularity and interdisciplinarity
# ---------------------------------------------------------------------------


def intra_field_pct(
    source: FlowTensor | CorpusIndex,
    scope: str | Scope,
    years: YearRange | int | None = None,
) -> float:
    """Percentage of a scope's outgoing citations that land back inside it.

    With a tensor and a field label, this is the diagonal cell over the
    row total. With an index and a :class:`Scope` (e.g. the NLP corpus
    slice), citations are counted as plain edge events: edges whose
    source is in scope, with the numerator requiring the target in scope
    as well. Year filtering uses the citing paper's year.
    """
    if isinstance(source, FlowTensor):
        if not isinstance(scope, str):
            raise TypeError("tensor-based intra-field percentage takes a field label")
        m = source.matrix(years)
        i = source.src_labels.index(scope)
        denom = m[i].sum()
        if denom == 0:
            raise UndefinedMetricError(f"{scope!r} has no outgoing citations in range")
        j = source.tgt_labels.index(scope)
        return 100.0 * float(m[i, j]) / float(denom)

    index = source
    if isinstance(scope, str):
        raise TypeError("index-based intra-field percentage takes a Scope")
    src = index.edge_src
    tgt = index.edge_tgt
    keep = scope.mask[src]
    if years is not None:
        lo, hi = (years, years) if isinstance(years, int) else years
        edge_years = index.years[src]
        keep &= (edge_years >= lo) & (edge_years <= hi)
    denom = int(keep.sum())
    if denom == 0:
        raise UndefinedMetricError(f"scope {scope.name!r} has no outgoing citations in range")
    inside = int((keep & scope.mask[tgt]).sum())
    return 100.0 * inside / denom


def mean_fields_per_paper(
    index: CorpusIndex,
    scope: Scope | None = None,
    years: YearRange | int | None = None,
) -> float:
    """Mean number of top-level field labels over in-scope papers."""
    mask = scope.mask.copy() if scope is not None else index.mask_all()
    if years is not None:
        lo, hi = (years, years) if isinstance(years, int) else years
        mask &= (index.years >= lo) & (index.years <= hi)
    n = int(mask.sum())
    if n == 0:
        raise UndefinedMetricError("no papers in scope for the requested years")
    return float(index.field_counts_per_paper()[mask].mean())


# ---------------------------------------------------------------------------
# Citation bins
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CitationBin:
    """A closed range of total incoming citation counts."""

    label: str
    lo: int
    hi: int | None  # None = unbounded

    def __contains__(self, count: int) -> bool:
        return count >= self.lo and (self.hi is None or count <= self.hi)


CITATION_BINS: tuple[CitationBin, ...] = (
    CitationBin("0", 0, 0),
    CitationBin("1-9", 1, 9),
    CitationBin("10-49", 10, 49),
    CitationBin("50-99", 50, 99),
    CitationBin("100-499", 100, 499),
    CitationBin("500-999", 500, 999),
    CitationBin("1000-1999", 1000, 1999),
    CitationBin("2000-4999", 2000, 4999),
    CitationBin("5000+", 5000, None),
)

_BIN_LOWER_BOUNDS = np.array([b.lo for b in CITATION_BINS], dtype=np.int64)


def assign_citation_bin(count: int) -> CitationBin:
    """The unique citation bin containing ``count``."""
    if count < 0:
        raise ValueError("citation count must be non-negative")
    return CITATION_BINS[int(np.searchsorted(_BIN_LOWER_BOUNDS, count, side="right")) - 1]


# ---------------------------------------------------------------------------
# Per-paper outgoing diversity
# ---------------------------------------------------------------------------


def per_paper_outgoing_field_counts(
    index: CorpusIndex,
    scheme: FieldScheme | None = None,
    scope: Scope | None = None,
    *,
    tgt_bits: np.ndarray | None = None,
    n_labels: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-paper counts of cited fields under the multi-label rule.

    Returns ``(papers, counts)`` where ``papers`` holds the interned ids
    of in-scope papers and ``counts[i, f]`` the number of paper
    ``papers[i]``'s outgoing citations attributed to field ``f``.
    """
    scheme = scheme or index.scheme
    bits = tgt_bits if tgt_bits is not None else index.bits_for(scheme)
    k = n_labels if n_labels is not None else (len(scheme) if tgt_bits is None else int(bits.max()).bit_length())
    papers = np.flatnonzero(scope.mask) if scope is not None else np.arange(index.n_papers)
    row_of = np.full(index.n_papers, -1, dtype=np.int64)
    row_of[papers] = np.arange(len(papers))

    src = index.edge_src
    tgt = index.edge_tgt
    rows = row_of[src]
    in_scope = rows >= 0
    counts = np.zeros((len(papers), k), dtype=np.int64)
    tgt_bits_edges = bits[tgt].astype(np.int64)
    for f in range(k):
        sel = in_scope & ((tgt_bits_edges >> f) & 1).astype(bool)
        if sel.any():
            counts[:, f] = np.bincount(rows[sel], minlength=len(papers))
    return papers, counts


def per_paper_outgoing_cfdi(
    index: CorpusIndex,
    scheme: FieldScheme | None = None,
    scope: Scope | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Outgoing CFDI for every in-scope paper with at least one attributed citation.

    Returns ``(papers, scores)``; papers with no labeled outgoing
    citations are dropped.
    """
    papers, counts = per_paper_outgoing_field_counts(index, scheme, scope)
    totals = counts.sum(axis=1)
    has = totals > 0
    p = counts[has] / totals[has, None]
    scores = 1.0 - np.einsum("ij,ij->i", p, p)
    return papers[has], scores


DEFAULT_PERIODS: tuple[tuple[int, int], ...] = (
    (1965, 1990),
    (1990, 2000),
    (2000, 2010),
    (2010, 2020),
)


@dataclass
class BinPeriodTable:
    """Mean per-paper outgoing CFDI by (publication period, citation bin).

    ``cells`` maps ``(period_label, bin_label)`` to the mean; empty cells
    are absent. Periods are half-open ``[start, stop)`` year ranges.
    """

    cells: dict[tuple[str, str], float]
    cell_sizes: dict[tuple[str, str], int]
    period_labels: tuple[str, ...]
    bin_labels: tuple[str, ...]
    papers_without_outgoing: int


def cfdi_by_bin_and_period(
    index: CorpusIndex,
    scheme: FieldScheme | None = None,
    scope: Scope | None = None,
    periods: Sequence[tuple[int, int]] = DEFAULT_PERIODS,
) -> BinPeriodTable:
    """Group papers by citation bin and publication period; average their CFDI.

    Each paper's outgoing CFDI comes from its own cited-field counts;
    binning uses the paper's total incoming ``citation_count``. Papers
    with no labeled outgoing citations contribute nothing and are counted
    separately; papers whose year falls in no period are skipped.
    """
    papers_all = np.flatnonzero(scope.mask) if scope is not None else np.arange(index.n_papers)
    papers, scores = per_paper_outgoing_cfdi(index, scheme, scope)
    excluded = len(papers_all) - len(papers)

    period_labels = tuple(f"{lo}-{hi}" for lo, hi in periods)
    bin_labels = tuple(b.label for b in CITATION_BINS)
    years = index.years[papers]
    counts = index.citation_count[papers]
    bin_idx = np.searchsorted(_BIN_LOWER_BOUNDS, counts, side="right") - 1

    cells: dict[tuple[str, str], float] = {}
    sizes: dict[tuple[str, str], int] = {}
    for p_label, (lo, hi) in zip(period_labels, periods):
        in_period = (years >= lo) & (years < hi)
        for b, b_label in enumerate(bin_labels):
            sel = in_period & (bin_idx == b)
            n = int(sel.sum())
            if n:
                cells[(p_label, b_label)] = float(scores[sel].mean())
                sizes[(p_label, b_label)] = n
    return BinPeriodTable(
        cells=cells,
        cell_sizes=sizes,
        period_labels=period_labels,
        bin_labels=bin_labels,
        papers_without_outgoing=excluded,
    )


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------


def moving_average(series: Mapping[int, float], window: int = 3) -> dict[int, float]:
    """Centered moving average over a year-keyed series.

    The window is in *years* (odd, >= 1) and truncates at boundaries and
    gaps: a year's smoothed value averages the values that exist within
    ``window // 2`` years of it. Missing years are never fabricated.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    half = window // 2
    out: dict[int, float] = {}
    for year in sorted(series):
        nearby = [series[y] for y in range(year - half, year + half + 1) if y in series]
        out[year] = sum(nearby) / len(nearby)
    return out
