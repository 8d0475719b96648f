"""Aggregation of citation edges into field-by-field-by-year flow tensors.

The attribution rule: every resolvable in-scope edge contributes one
count for each (source label, target label) pair drawn from the two
papers' label sets. An axis may instead be a single scope pseudo-label
(e.g. the NLP corpus slice), in which case each edge contributes exactly
one count on that side.

The year axis buckets by the citing paper's publication year by default;
slot 0 of the axis collects edges whose bucketing year is unknown, so
whole-range queries still see them while per-year series skip them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import YEAR_MAX, YEAR_MIN, CorpusIndex, Scope
from .schemes import FieldScheme, SchemeKind

logger = logging.getLogger(__name__)

YearRange = tuple[int, int]


# ---------------------------------------------------------------------------
# Tensor type
# ---------------------------------------------------------------------------


@dataclass
class FlowTensor:
    """Citation counts indexed by (source label, target label, year)."""

    src_labels: tuple[str, ...]
    tgt_labels: tuple[str, ...]
    counts: np.ndarray  # (S, T, 1 + n_years) int64; slot 0 = unknown year
    year_min: int
    src_scope: str
    tgt_scope: str
    skipped_unlabeled: int = 0

    def _year_slice(self, years: YearRange | int | None) -> np.ndarray:
        """Sum the year axis over an inclusive range (None = everything)."""
        if years is None:
            return self.counts.sum(axis=2)
        if isinstance(years, int):
            years = (years, years)
        lo, hi = years
        lo_slot = max(1, 1 + lo - self.year_min)
        hi_slot = max(0, 2 + hi - self.year_min)
        return self.counts[:, :, lo_slot:hi_slot].sum(axis=2)

    def matrix(self, years: YearRange | int | None = None) -> np.ndarray:
        """Label-by-label count matrix summed over a year range."""
        return self._year_slice(years)

    def total(self, years: YearRange | int | None = None) -> int:
        return int(self._year_slice(years).sum())

    def cell(self, src: str, tgt: str, years: YearRange | int | None = None) -> int:
        m = self._year_slice(years)
        try:
            i = self.src_labels.index(src)
            j = self.tgt_labels.index(tgt)
        except ValueError:
            return 0
        return int(m[i, j])

    def transpose(self) -> "FlowTensor":
        """Swap citation direction: counts[t, s, y] = self.counts[s, t, y]."""
        return FlowTensor(
            src_labels=self.tgt_labels,
            tgt_labels=self.src_labels,
            counts=self.counts.transpose(1, 0, 2).copy(),
            year_min=self.year_min,
            src_scope=self.tgt_scope,
            tgt_scope=self.src_scope,
            skipped_unlabeled=self.skipped_unlabeled,
        )

    def __add__(self, other: "FlowTensor") -> "FlowTensor":
        if (
            self.src_labels != other.src_labels
            or self.tgt_labels != other.tgt_labels
            or self.year_min != other.year_min
            or self.counts.shape != other.counts.shape
        ):
            raise ValueError("tensors have different axes and cannot be summed")
        return FlowTensor(
            src_labels=self.src_labels,
            tgt_labels=self.tgt_labels,
            counts=self.counts + other.counts,
            year_min=self.year_min,
            src_scope=self.src_scope,
            tgt_scope=self.tgt_scope,
            skipped_unlabeled=self.skipped_unlabeled + other.skipped_unlabeled,
        )

    def years_with_data(self) -> list[int]:
        totals = self.counts.sum(axis=(0, 1))
        return [self.year_min + slot - 1 for slot in range(1, self.counts.shape[2]) if totals[slot]]


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


# Lookup: byte value -> indices of set bits, for 8-bit chunkwise expansion.
_BYTE_INDICES = [
    np.array([i for i in range(8) if b >> i & 1], dtype=np.int64) for b in range(256)
]


def _expand_bits(bits: int) -> np.ndarray:
    """Label indices set in a packed bitset."""
    out = []
    base = 0
    while bits:
        chunk = bits & 0xFF
        if chunk:
            out.append(_BYTE_INDICES[chunk] + base)
        bits >>= 8
        base += 8
    if not out:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(out)


def _axis_bits(
    index: CorpusIndex,
    scheme: FieldScheme | None,
    axis: str,
    scope: Scope | None,
    custom_bits: np.ndarray | None,
    custom_labels: tuple[str, ...] | None,
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Resolve one tensor axis to (per-paper bitsets, axis labels)."""
    if axis == "scope":
        name = scope.name if scope is not None else "all"
        return np.ones(index.n_papers, dtype=np.uint32), (name,)
    if axis == "custom":
        if custom_bits is None or custom_labels is None:
            raise ValueError("a custom axis requires explicit per-paper bits and labels")
        return custom_bits, tuple(custom_labels)
    if axis != "fields":
        raise ValueError(f"unknown axis {axis!r}; expected 'fields', 'scope' or 'custom'")
    if custom_bits is not None:
        if custom_labels is None:
            raise ValueError("custom axis bits require custom labels")
        return custom_bits, tuple(custom_labels)
    if scheme is None:
        raise ValueError("a scheme is required when no custom axis is given")
    if scheme.kind is SchemeKind.NLP_SUBFIELD:
        raise ValueError("NLP subfield axes need explicit per-paper bits (see subfields module)")
    return index.bits_for(scheme), scheme.labels


def build_flow_tensor(
    index: CorpusIndex,
    scheme: FieldScheme | None = None,
    src_scope: Scope | None = None,
    tgt_scope: Scope | None = None,
    year_axis: str = "citing_paper_year",
    *,
    src_axis: str = "fields",
    tgt_axis: str = "fields",
    src_bits: np.ndarray | None = None,
    src_labels: tuple[str, ...] | None = None,
    tgt_bits: np.ndarray | None = None,
    tgt_labels: tuple[str, ...] | None = None,
) -> FlowTensor:
    """Aggregate all in-scope edges into a :class:`FlowTensor`.

    ``src_axis``/``tgt_axis`` select label expansion (``"fields"``) or
    scope-level counting (``"scope"``, one count per edge on that side).
    Edges whose paper lacks labels under the chosen axis are skipped and
    counted in ``skipped_unlabeled``.
    """
    if year_axis not in ("citing_paper_year", "cited_paper_year"):
        raise ValueError(f"unknown year axis {year_axis!r}")

    s_bits_col, s_labels = _axis_bits(index, scheme, src_axis, src_scope, src_bits, src_labels)
    t_bits_col, t_labels = _axis_bits(index, scheme, tgt_axis, tgt_scope, tgt_bits, tgt_labels)

    n_years = YEAR_MAX - YEAR_MIN + 1
    counts = np.zeros((len(s_labels), len(t_labels), 1 + n_years), dtype=np.int64)
    tensor = FlowTensor(
        src_labels=s_labels,
        tgt_labels=t_labels,
        counts=counts,
        year_min=YEAR_MIN,
        src_scope=src_scope.name if src_scope else "all",
        tgt_scope=tgt_scope.name if tgt_scope else "all",
    )

    src = index.edge_src
    tgt = index.edge_tgt
    if len(src) == 0:
        return tensor

    keep = np.ones(len(src), dtype=bool)
    if src_scope is not None:
        keep &= src_scope.mask[src]
    if tgt_scope is not None:
        keep &= tgt_scope.mask[tgt]
    if src_scope is not None and not src_scope.mask.any():
        logger.warning("empty source scope %r: tensor is empty", src_scope.name)
    if tgt_scope is not None and not tgt_scope.mask.any():
        logger.warning("empty target scope %r: tensor is empty", tgt_scope.name)
    src = src[keep]
    tgt = tgt[keep]
    if len(src) == 0:
        return tensor

    edge_s_bits = s_bits_col[src].astype(np.uint64)
    edge_t_bits = t_bits_col[tgt].astype(np.uint64)
    labeled = (edge_s_bits != 0) & (edge_t_bits != 0)
    tensor.skipped_unlabeled = int((~labeled).sum())
    if tensor.skipped_unlabeled:
        logger.info(
            "flow tensor: %d edges skipped (no labels on one side)", tensor.skipped_unlabeled
        )

    year_src = src if year_axis == "citing_paper_year" else tgt
    years = index.years[year_src].astype(np.int64)
    slots = np.where(years == -1, 0, years - YEAR_MIN + 1).astype(np.uint64)

    edge_s_bits = edge_s_bits[labeled]
    edge_t_bits = edge_t_bits[labeled]
    slots = slots[labeled]

    if len(t_labels) > 25 or len(s_labels) > 25:
        raise ValueError("axes wider than 25 labels are not supported by the packed-key layout")

    # Group edges by (src bits, tgt bits, year slot); expand label pairs
    # once per distinct combination rather than once per edge.
    t_width = max(len(t_labels), 1)
    key = (edge_s_bits << np.uint64(t_width + 9)) | (edge_t_bits << np.uint64(9)) | slots
    uniq, cnt = np.unique(key, return_counts=True)
    t_mask = (1 << t_width) - 1
    for packed, n in zip(uniq.tolist(), cnt.tolist()):
        slot = packed & 0x1FF
        t_b = (packed >> 9) & t_mask
        s_b = packed >> (t_width + 9)
        s_idx = _expand_bits(s_b)
        t_idx = _expand_bits(t_b)
        counts[np.ix_(s_idx, t_idx, [slot])] += n

    return tensor


# ---------------------------------------------------------------------------
# Shares and slices
# ---------------------------------------------------------------------------


def outgoing_shares(
    tensor: FlowTensor,
    src_field: str,
    denominator_scope: tuple[str, ...] | list[str] | None = None,
    years: YearRange | int | None = None,
) -> dict[str, float]:
    """Percentage of ``src_field``'s outgoing citations landing on each field.

    ``denominator_scope`` restricts both the reported fields and the
    denominator (e.g. all fields, non-CS only, CS subfields only). A zero
    denominator yields an explicit empty mapping.
    """
    fields = tuple(denominator_scope) if denominator_scope is not None else tensor.tgt_labels
    if not fields:
        raise ValueError("denominator scope is empty")
    m = tensor.matrix(years)
    i = tensor.src_labels.index(src_field)
    cols = [tensor.tgt_labels.index(f) for f in fields]
    row = m[i, cols].astype(np.float64)
    total = row.sum()
    if total == 0:
        return {}
    return {f: 100.0 * v / total for f, v in zip(fields, row)}


def incoming_shares(
    tensor: FlowTensor,
    tgt_field: str,
    denominator_scope: tuple[str, ...] | list[str] | None = None,
    years: YearRange | int | None = None,
) -> dict[str, float]:
    """Percentage of citations received by ``tgt_field`` coming from each field."""
    return outgoing_shares(tensor.transpose(), tgt_field, denominator_scope, years)


@dataclass
class FlowSlice:
    """A 2-D view of a tensor: label subsets and a year range, with marginals."""

    src_labels: tuple[str, ...]
    tgt_labels: tuple[str, ...]
    matrix: np.ndarray
    years: YearRange | None
    src_scope: str
    tgt_scope: str

    @property
    def row_marginals(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.matrix.sum())


def row_share_matrix(
    tensor: FlowTensor,
    years: YearRange | int | None = None,
) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    """Row-percentage view of a tensor: each row's outgoing shares.

    Rows with no citations are dropped. Returns (row labels, column
    labels, percentage matrix with rows summing to 100).
    """
    m = tensor.matrix(years).astype(np.float64)
    row_sums = m.sum(axis=1)
    keep = row_sums > 0
    labels = tuple(label for label, ok in zip(tensor.src_labels, keep) if ok)
    pct = 100.0 * m[keep] / row_sums[keep, None]
    return labels, tensor.tgt_labels, pct


def flow_slice(
    tensor: FlowTensor,
    src_fields: tuple[str, ...] | list[str] | None = None,
    tgt_fields: tuple[str, ...] | list[str] | None = None,
    years: YearRange | int | None = None,
) -> FlowSlice:
    """Slice a tensor down to chosen labels and years, with marginals."""
    src_fields = tuple(src_fields) if src_fields is not None else tensor.src_labels
    tgt_fields = tuple(tgt_fields) if tgt_fields is not None else tensor.tgt_labels
    m = tensor.matrix(years)
    rows = [tensor.src_labels.index(f) for f in src_fields]
    cols = [tensor.tgt_labels.index(f) for f in tgt_fields]
    if isinstance(years, int):
        years = (years, years)
    return FlowSlice(
        src_labels=src_fields,
        tgt_labels=tgt_fields,
        matrix=m[np.ix_(rows, cols)].copy(),
        years=years,
        src_scope=tensor.src_scope,
        tgt_scope=tensor.tgt_scope,
    )
