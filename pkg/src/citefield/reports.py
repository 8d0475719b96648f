"""Export artifacts: diachronic series, Sankey flows, heatmap grids, histograms.

Every export is a pure function of its inputs: identical inputs produce
byte-identical files. CSV is UTF-8 with a header row; JSON carries a
``schema_version`` field. Percentages are written with one decimal,
rounded half-up; full precision is kept internally.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import CorpusIndex, Scope, scope_field, scope_nlp
from .errors import UndefinedMetricError
from .flowgraph import FlowSlice, build_flow_tensor, outgoing_shares
from .metrics import cfdi, intra_field_pct, mean_fields_per_paper, moving_average, per_paper_outgoing_cfdi
from .schemes import COMPUTER_SCIENCE

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def round_half_up(value: float, digits: int = 1) -> float:
    """Round half away from zero at ``digits`` decimals (file precision)."""
    q = Decimal(10) ** -digits
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


def export_name(metric: str, scope: str, years: tuple[int, int] | None, ext: str) -> str:
    """Conventional artifact file name: ``<metric>_<scope>_<years>.<ext>``."""
    span = f"{years[0]}-{years[1]}" if years else "all"
    safe_scope = scope.lower().replace(" ", "-")
    return f"{metric}_{safe_scope}_{span}.{ext}"


def _write(path: str | Path | None, text: str) -> str:
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# ---------------------------------------------------------------------------
# Diachronic series
# ---------------------------------------------------------------------------


@dataclass
class SeriesTable:
    """A per-year metric series, optionally with a smoothed column."""

    metric: str
    scope: str
    denominator: str
    rows: list[tuple[int, float, float | None]]
    smoothed: bool
    percent: bool = False  # percentage metrics are written with one decimal

    def __post_init__(self) -> None:
        years = [y for y, _, _ in self.rows]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ValueError("series years must be strictly increasing")

    def _fmt(self, value: float) -> str:
        if self.percent:
            return f"{round_half_up(value):.1f}"
        return repr(float(value))

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["year", "value"] + (["smoothed"] if self.smoothed else [])
        writer.writerow(header)
        for year, value, smoothed in self.rows:
            row = [year, self._fmt(value)]
            if self.smoothed:
                row.append(self._fmt(smoothed) if smoothed is not None else "")
            writer.writerow(row)
        return _write(path, buf.getvalue())

    def to_json(self, path: str | Path | None = None) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "metric": self.metric,
            "scope": self.scope,
            "denominator": self.denominator,
            "rows": [
                {"year": y, "value": v, **({"smoothed": s} if self.smoothed else {})}
                for y, v, s in self.rows
            ],
        }
        return _write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class MetricSpec:
    """Names a metrics-module computation plus its scope parameters."""

    name: str
    scope: str = "nlp"
    field: str | None = None
    denominator: str = "all"
    direction: str = "outgoing"


def _scope_of(index: CorpusIndex, name: str) -> Scope | None:
    if name == "all":
        return None
    if name == "nlp":
        return scope_nlp(index)
    return scope_field(index, name)


def _share_series(index: CorpusIndex, spec: MetricSpec) -> Callable[[int], float | None]:
    if spec.field is None:
        raise ValueError(f"metric {spec.name!r} needs a target field")
    if spec.scope == "all":
        raise ValueError("share metrics need an 'nlp' or field-label scope")
    outgoing = spec.direction == "outgoing"

    # the far side: the fields the shares are computed over
    if spec.denominator == "cs_subfields":
        far_bits, far_labels = index.cs_bits, index.cs_scheme.labels
        denom_fields = far_labels
    elif spec.denominator in ("all", "non_cs"):
        far_bits, far_labels = index.field_bits, index.scheme.labels
        denom_fields = (
            tuple(f for f in far_labels if f != COMPUTER_SCIENCE)
            if spec.denominator == "non_cs"
            else far_labels
        )
    else:
        raise ValueError(f"unknown denominator {spec.denominator!r}")

    # the focal side: a corpus slice (one pseudo-row) or a field label
    if spec.scope == "nlp":
        scope = scope_nlp(index)
        focal_axis = dict(src_axis="scope") if outgoing else dict(tgt_axis="scope")
        focal_scope = dict(src_scope=scope) if outgoing else dict(tgt_scope=scope)
        row = scope.name
    else:
        index.scheme.index(spec.scope)  # validate the label
        bits_kw = "src_bits" if outgoing else "tgt_bits"
        labels_kw = "src_labels" if outgoing else "tgt_labels"
        focal_axis = {("src_axis" if outgoing else "tgt_axis"): "custom"}
        focal_scope = {bits_kw: index.field_bits, labels_kw: index.scheme.labels}
        row = spec.scope

    far_kw = (
        dict(tgt_axis="custom", tgt_bits=far_bits, tgt_labels=far_labels)
        if outgoing
        else dict(src_axis="custom", src_bits=far_bits, src_labels=far_labels)
    )
    tensor = build_flow_tensor(index, **focal_axis, **focal_scope, **far_kw)
    if not outgoing:
        tensor = tensor.transpose()

    def at_year(year: int) -> float | None:
        shares = outgoing_shares(tensor, row, denominator_scope=denom_fields, years=year)
        if not shares:
            return None
        return shares.get(spec.field, 0.0)

    return at_year


def _cfdi_series(index: CorpusIndex, spec: MetricSpec) -> Callable[[int], float | None]:
    scope = _scope_of(index, spec.scope)
    outgoing = spec.direction == "outgoing"
    if spec.scope in ("nlp", "all"):
        if outgoing:
            tensor = build_flow_tensor(index, index.scheme, src_scope=scope, src_axis="scope")
        else:
            tensor = build_flow_tensor(index, index.scheme, tgt_scope=scope, tgt_axis="scope")
            tensor = tensor.transpose()
        row = 0
    else:
        tensor = build_flow_tensor(index, index.scheme)
        if not outgoing:
            tensor = tensor.transpose()
        row = tensor.src_labels.index(spec.scope)

    def at_year(year: int) -> float | None:
        counts = tensor.matrix(year)[row]
        if counts.sum() == 0:
            return None
        return cfdi(counts)

    return at_year


def _intra_series(index: CorpusIndex, spec: MetricSpec) -> Callable[[int], float | None]:
    if spec.scope == "all":
        raise ValueError("insularity needs an 'nlp' or field-label scope")
    if spec.scope == "nlp":
        scope = scope_nlp(index)

        def at_year(year: int) -> float | None:
            try:
                return intra_field_pct(index, scope, years=year)
            except UndefinedMetricError:
                return None

    else:
        tensor = build_flow_tensor(index, index.scheme)

        def at_year(year: int) -> float | None:
            try:
                return intra_field_pct(tensor, spec.scope, years=year)
            except UndefinedMetricError:
                return None

    return at_year


def _mean_fields_series(index: CorpusIndex, spec: MetricSpec) -> Callable[[int], float | None]:
    scope = _scope_of(index, spec.scope)

    def at_year(year: int) -> float | None:
        try:
            return mean_fields_per_paper(index, scope, years=year)
        except UndefinedMetricError:
            return None

    return at_year


_METRIC_BUILDERS: dict[str, Callable[[CorpusIndex, MetricSpec], Callable[[int], float | None]]] = {
    "share": _share_series,
    "cfdi": _cfdi_series,
    "intra_pct": _intra_series,
    "mean_fields": _mean_fields_series,
}


def diachronic_series(
    index: CorpusIndex,
    spec: MetricSpec,
    years: tuple[int, int],
    smoothing: bool = False,
    window: int = 3,
) -> SeriesTable:
    """One row per year with data; optional centered moving average."""
    try:
        builder = _METRIC_BUILDERS[spec.name]
    except KeyError:
        raise ValueError(
            f"unknown metric {spec.name!r}; expected one of {sorted(_METRIC_BUILDERS)}"
        ) from None
    at_year = builder(index, spec)
    values: dict[int, float] = {}
    for year in range(years[0], years[1] + 1):
        value = at_year(year)
        if value is not None:
            values[year] = value
    smoothed = moving_average(values, window) if smoothing else {}
    rows = [
        (year, values[year], smoothed.get(year) if smoothing else None)
        for year in sorted(values)
    ]
    return SeriesTable(
        metric=f"{spec.direction}_{spec.name}" if spec.name in ("share", "cfdi") else spec.name,
        scope=spec.scope,
        denominator=spec.denominator if spec.name == "share" else "n/a",
        rows=rows,
        smoothed=smoothing,
        percent=spec.name in ("share", "intra_pct"),
    )


# ---------------------------------------------------------------------------
# Sankey export
# ---------------------------------------------------------------------------


@dataclass
class SankeyExport:
    """Node/link description consumable by standard Sankey renderers."""

    nodes: list[dict]
    links: list[dict]
    denominator: str
    schema_version: int = SCHEMA_VERSION

    def to_json(self, path: str | Path | None = None) -> str:
        payload = {
            "schema_version": self.schema_version,
            "denominator": self.denominator,
            "nodes": self.nodes,
            "links": self.links,
        }
        return _write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def sankey_export(slice_: FlowSlice, denominator_total: int | None = None) -> SankeyExport:
    """Links for every nonzero slice cell, percentages over the slice denominator.

    Singleton axes are marked ``focal`` (the hub node of the diagram);
    the other side's nodes are ``source``/``target`` accordingly.
    """
    total = slice_.total if denominator_total is None else denominator_total
    if total == 0:
        logger.warning("sankey export of an empty slice")
        return SankeyExport(nodes=[], links=[], denominator="empty")

    src_side = "focal" if len(slice_.src_labels) == 1 else "source"
    tgt_side = "focal" if len(slice_.tgt_labels) == 1 and src_side != "focal" else "target"

    nodes = [{"label": lab, "side": src_side} for lab in slice_.src_labels]
    nodes += [{"label": lab, "side": tgt_side} for lab in slice_.tgt_labels]
    links = []
    for i, src in enumerate(slice_.src_labels):
        for j, tgt in enumerate(slice_.tgt_labels):
            count = int(slice_.matrix[i, j])
            if count == 0:
                continue
            links.append(
                {
                    "from": src,
                    "to": tgt,
                    "count": count,
                    "percentage": round_half_up(100.0 * count / total),
                }
            )
    denominator = f"{slice_.src_scope}->{slice_.tgt_scope} total {total}"
    return SankeyExport(nodes=nodes, links=links, denominator=denominator)


# ---------------------------------------------------------------------------
# Heatmap grid
# ---------------------------------------------------------------------------


def heatmap_export(
    matrix: np.ndarray | Sequence[Sequence[float]],
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    path: str | Path | None = None,
) -> str:
    """CSV grid with one-decimal percentages; header row and column."""
    rows = [list(r) for r in matrix]
    if any(len(r) != len(col_labels) for r in rows):
        raise ValueError("ragged matrix: every row must match the column labels")
    if len(rows) != len(row_labels):
        raise ValueError("row label count does not match the matrix")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + list(col_labels))
    for label, row in zip(row_labels, rows):
        writer.writerow([label] + [f"{round_half_up(v):.1f}" for v in row])
    return _write(path, buf.getvalue())


# ---------------------------------------------------------------------------
# CFDI distribution
# ---------------------------------------------------------------------------


@dataclass
class CfdiHistogram:
    """Fixed-width histogram of per-paper outgoing CFDI over [0, 1]."""

    bin_width: float
    counts: list[int]
    total: int
    scope: str

    def bin_edges(self) -> list[float]:
        n = len(self.counts)
        return [round(i * self.bin_width, 10) for i in range(n + 1)]

    def to_json(self, path: str | Path | None = None) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "bin_width": self.bin_width,
            "counts": self.counts,
            "total": self.total,
            "scope": self.scope,
        }
        return _write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_json(cls, text: str) -> "CfdiHistogram":
        data = json.loads(text)
        return cls(
            bin_width=data["bin_width"],
            counts=list(data["counts"]),
            total=data["total"],
            scope=data.get("scope", "all"),
        )

    def percentile_of(self, score: float) -> float:
        """Share of papers with CFDI <= score, in percent (bin-resolution)."""
        if self.total == 0:
            raise UndefinedMetricError("empty histogram")
        edge = 0.0
        below = 0.0
        for count in self.counts:
            next_edge = edge + self.bin_width
            if score >= next_edge:
                below += count
            elif score > edge:
                below += count * (score - edge) / self.bin_width
            edge = next_edge
        return 100.0 * below / self.total


def cfdi_distribution(
    index: CorpusIndex,
    scope: Scope | None = None,
    bin_width: float = 0.05,
) -> CfdiHistogram:
    """Histogram of per-paper outgoing CFDI; total = papers with citations."""
    _, scores = per_paper_outgoing_cfdi(index, scope=scope)
    n_bins = int(round(1.0 / bin_width))
    counts = [0] * n_bins
    for score in scores:
        counts[min(int(score / bin_width), n_bins - 1)] += 1
    return CfdiHistogram(
        bin_width=bin_width,
        counts=counts,
        total=int(len(scores)),
        scope=scope.name if scope else "all",
    )
