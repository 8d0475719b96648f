"""Command-line entry point: ingestion, analyses, exports, and the service.

Exit codes: 0 success, 1 usage error, 2 data error. Flags override values
from an optional flat key=value config file (``--config``). The CLI only
formats library results; it performs no metric arithmetic of its own.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import CorpusIndex, Scope, build_index, load_index, save_index, scope_all, scope_field, scope_nlp
from .errors import CitefieldError
from .flowgraph import build_flow_tensor, flow_slice, row_share_matrix
from .metrics import cfdi, cfdi_by_bin_and_period, ircp, orcp
from .reports import (
    CfdiHistogram,
    MetricSpec,
    cfdi_distribution,
    diachronic_series,
    export_name,
    heatmap_export,
    round_half_up,
    sankey_export,
)
from .s2service import S2Client, ServiceConfig, entity_diversity, resolve_entity, serve
from .schemes import COMPUTER_SCIENCE, load_scheme
from .subfields import (
    SubfieldLexicon,
    label_papers,
    load_stopwords,
    subfield_cfdi_delta,
    subfield_flow_matrix,
    subfield_intra_pct,
    top_bigrams,
)

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _years(text: str | None) -> tuple[int, int] | None:
    if not text:
        return None
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise CitefieldError(f"invalid year range {text!r}; expected START:END") from None


def _load(args) -> CorpusIndex:
    return load_index(args.index)


def _scope(index: CorpusIndex, name: str) -> Scope | None:
    if name == "all":
        return None
    if name == "nlp":
        return scope_nlp(index)
    return scope_field(index, name)


def _scope_outgoing_counts(index: CorpusIndex, scope: Scope, years, incoming: bool = False) -> dict[str, int]:
    """Per-field citation counts of a corpus slice (multi-label on the far side)."""
    if incoming:
        tensor = build_flow_tensor(index, index.scheme, tgt_scope=scope, tgt_axis="scope").transpose()
    else:
        tensor = build_flow_tensor(index, index.scheme, src_scope=scope, src_axis="scope")
    row = tensor.matrix(years)[0]
    return {f: int(n) for f, n in zip(tensor.tgt_labels, row)}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _path_list(value) -> list[Path]:
    if isinstance(value, (str, Path)):
        return [Path(value)]
    return [Path(p) for p in value]


def cmd_ingest(args) -> int:
    papers = _path_list(args.papers)
    edges = _path_list(args.edges)
    scheme = load_scheme(args.scheme) if args.scheme else None
    cs_scheme = load_scheme(args.cs_scheme) if args.cs_scheme else None
    index, summary = build_index(
        papers,
        edges,
        scheme=scheme,
        cs_scheme=cs_scheme,
        on_error="skip" if args.skip_bad_records else "raise",
        workers=args.threads,
    )
    save_index(index, args.out)

    nlp = index.is_nlp
    out_from_nlp = int(nlp[index.edge_src].sum())
    in_to_nlp = int(nlp[index.edge_tgt].sum())
    known = index.years[index.years >= 0]
    span = f"{known.min()}-{known.max()}" if known.size else "n/a"
    rows = [
        ("time range", span),
        ("papers", summary.papers),
        ("citation edges", summary.resolvable_edges),
        ("dangling edges excluded", summary.dangling_edges),
        ("duplicate papers ignored", summary.duplicate_papers),
        ("papers in NLP scope", int(nlp.sum())),
        ("out-citations from NLP", out_from_nlp),
        ("in-citations to NLP", in_to_nlp),
    ]
    if summary.paper_errors or summary.edge_errors:
        rows.append(("bad records skipped", summary.paper_errors + summary.edge_errors))
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {value}")
    print(f"index written to {args.out}")
    return 0


def cmd_flows(args) -> int:
    index = _load(args)
    years = _years(args.years)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scope = _scope(index, args.scope)
    if scope is None:
        raise CitefieldError("flows requires a focal scope ('nlp' or a field label)")

    if args.denominator == "cs_subfields":
        scheme = index.cs_scheme
        fields = scheme.labels
    else:
        scheme = index.scheme
        fields = (
            tuple(f for f in scheme.labels if f != COMPUTER_SCIENCE)
            if args.denominator == "non_cs"
            else scheme.labels
        )

    directions = ("out", "in") if args.direction == "both" else (args.direction,)
    for direction in directions:
        if direction == "out":
            tensor = build_flow_tensor(index, scheme, src_scope=scope, src_axis="scope")
            s = flow_slice(tensor, tgt_fields=fields, years=years)
        else:
            tensor = build_flow_tensor(index, scheme, tgt_scope=scope, tgt_axis="scope")
            s = flow_slice(tensor, src_fields=fields, years=years)
        name = export_name(f"sankey-{direction}-{args.denominator}", scope.name, years, "json")
        sankey_export(s).to_json(out_dir / name)
        print(f"wrote {out_dir / name}")

    # field-by-field heatmap of row share percentages
    tensor = build_flow_tensor(index, scheme)
    labels, cols, pct = row_share_matrix(tensor, years)
    name = export_name(f"flows-heatmap-{args.denominator}", "fields", years, "csv")
    heatmap_export(pct, list(labels), list(cols), out_dir / name)
    print(f"wrote {out_dir / name}")
    return 0


def cmd_cfdi(args) -> int:
    index = _load(args)
    years = _years(args.years)
    scope = _scope(index, args.scope)
    incoming = args.direction == "in"

    if args.by_bin:
        table = cfdi_by_bin_and_period(index, scope=scope)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / export_name("cfdi-by-bin", args.scope, years, "csv")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["period"] + list(table.bin_labels))
        for p_label in table.period_labels:
            row = [table.cells.get((p_label, b)) for b in table.bin_labels]
            writer.writerow([p_label] + ["" if v is None else repr(float(v)) for v in row])
        path.write_text(buf.getvalue(), encoding="utf-8")
        print(f"wrote {path}")
        return 0

    if args.diachronic:
        spec = MetricSpec(
            name="cfdi", scope=args.scope, direction="incoming" if incoming else "outgoing"
        )
        table = diachronic_series(index, spec, years or (1965, 2099), smoothing=args.smooth)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / export_name(table.metric, args.scope, years, "csv")
        table.to_csv(path)
        print(f"wrote {path}")
        for year, value, smoothed in table.rows:
            extra = f"  smoothed {smoothed:.3f}" if args.smooth and smoothed is not None else ""
            print(f"{year}  {value:.3f}{extra}")
        return 0

    counts = _scope_outgoing_counts(index, scope or scope_all(index), years, incoming)
    print(f"{cfdi(counts):.3f}")
    return 0


def cmd_rcp(args) -> int:
    index = _load(args)
    years = _years(args.years)
    tensor = build_flow_tensor(index, index.scheme)
    incoming = args.direction == "in"
    if args.focal == "nlp":
        focal = _scope_outgoing_counts(index, scope_nlp(index), years, incoming)
    else:
        focal = args.focal
    result = ircp(tensor, focal, years) if incoming else orcp(tensor, focal, years)

    ranked = sorted(result.scores.items(), key=lambda kv: -kv[1])
    width = max(len(f) for f, _ in ranked)
    label = "IRCP" if incoming else "ORCP"
    print(f"{label} of {args.focal} (percentage points vs. macro average)")
    for field, score in ranked:
        print(f"{field:<{width}}  {round_half_up(score):+.1f}")
    if result.excluded:
        print(f"excluded from macro average (no citations): {', '.join(result.excluded)}")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / export_name(label.lower(), args.focal, years, "csv")
        lines = ["field,score_pp"] + [f"{f},{round_half_up(s):.1f}" for f, s in ranked]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    return 0


def cmd_insularity(args) -> int:
    index = _load(args)
    years = _years(args.years) or (1965, 2099)
    spec = MetricSpec(name="intra_pct", scope=args.scope)
    table = diachronic_series(index, spec, years, smoothing=args.smooth)
    for year, value, smoothed in table.rows:
        extra = f"  smoothed {round_half_up(smoothed):.1f}" if args.smooth and smoothed is not None else ""
        print(f"{year}  {round_half_up(value):.1f}{extra}")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / export_name("intra-field-pct", args.scope, years, "csv")
        table.to_csv(path)
        print(f"wrote {path}")
    return 0


def cmd_interdisciplinarity(args) -> int:
    index = _load(args)
    years = _years(args.years) or (1965, 2099)
    spec = MetricSpec(name="mean_fields", scope=args.scope)
    table = diachronic_series(index, spec, years, smoothing=args.smooth)
    for year, value, smoothed in table.rows:
        extra = f"  smoothed {smoothed:.3f}" if args.smooth and smoothed is not None else ""
        print(f"{year}  {value:.3f}{extra}")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / export_name("mean-fields-per-paper", args.scope, years, "csv")
        table.to_csv(path)
        print(f"wrote {path}")
    return 0


def cmd_subfields(args) -> int:
    index = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stopwords = load_stopwords(args.stopwords) if args.stopwords else load_stopwords()

    nlp_titles = [index.titles[i] for i in np.flatnonzero(index.is_nlp)]
    ranked = top_bigrams(nlp_titles, k=args.top_bigrams, stopwords=stopwords)
    path = out_dir / "top_bigrams.csv"
    lines = ["rank,bigram,count"] + [f"{i},{b},{n}" for i, (b, n) in enumerate(ranked, 1)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path}")

    lexicon = SubfieldLexicon.load(args.lexicon) if args.lexicon else SubfieldLexicon.load()
    bits = label_papers(index, lexicon)
    labeled = int((bits != 0).sum())
    print(f"{labeled} NLP papers matched a lexicon bigram")

    for target in ("cs", "non_cs"):
        rows, cols, pct = subfield_flow_matrix(index, lexicon, target)
        path = out_dir / f"subfield_flows_{target}.csv"
        heatmap_export(pct, list(rows), list(cols), path)
        print(f"wrote {path}")

    year = args.year or (max(index.years[index.years >= 0]) if (index.years >= 0).any() else None)
    if year is not None:
        try:
            deltas = subfield_cfdi_delta(index, lexicon, int(year), subfield_bits=bits)
        except CitefieldError as exc:
            print(f"cfdi deltas skipped: {exc}", file=sys.stderr)
            deltas = {}
        if deltas:
            path = out_dir / f"subfield_cfdi_delta_{year}.csv"
            lines = ["subfield,delta_vs_nlp"] + [
                f"{s},{repr(float(d))}" for s, d in sorted(deltas.items())
            ]
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            print(f"wrote {path}")

    intra_rows = []
    for subfield in lexicon.scheme.labels:
        try:
            pct_value = subfield_intra_pct(index, lexicon, subfield, subfield_bits=bits)
        except CitefieldError:
            continue
        intra_rows.append((subfield, pct_value))
    if intra_rows:
        path = out_dir / "subfield_intra_pct.csv"
        lines = ["subfield,intra_pct"] + [
            f"{s},{round_half_up(v):.1f}" for s, v in sorted(intra_rows, key=lambda kv: -kv[1])
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    return 0


def _make_client(args) -> S2Client:
    return S2Client(
        base_url=args.base_url,
        api_key=args.api_key,
        cache_dir=args.cache_dir,
        rate_per_sec=args.rate,
    )


def cmd_paper_diversity(args) -> int:
    entity = resolve_entity(args.id)
    histogram = None
    if args.histogram:
        histogram = CfdiHistogram.from_json(Path(args.histogram).read_text("utf-8"))
    client = _make_client(args)
    try:
        report = entity_diversity(entity, client, histogram)
    finally:
        client.close()
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    config = ServiceConfig(
        host=args.host,
        port=args.port,
        base_url=args.base_url,
        api_key=args.api_key,
        cache_dir=args.cache_dir,
        histogram_path=args.histogram,
        rate_per_sec=args.rate,
        frontend_dir=args.frontend_dir,
    )
    serve(config)
    return 0


def cmd_distribution(args) -> int:
    index = _load(args)
    scope = _scope(index, args.scope)
    hist = cfdi_distribution(index, scope)
    path = Path(args.out)
    hist.to_json(path)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--index", required=True, help="corpus index file built by 'ingest'")
    p.add_argument("--years", help="inclusive year range START:END")


def _add_upstream(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base-url", default="https://api.semanticscholar.org/graph/v1")
    p.add_argument("--api-key", default=None, help="upstream API key (default: $S2_API_KEY)")
    p.add_argument("--cache-dir", default=None, help="cache location (default: $CITEFIELD_CACHE_DIR)")
    p.add_argument("--rate", type=float, default=1.0, help="upstream requests per second")
    p.add_argument("--histogram", default=None, help="corpus CFDI histogram JSON")


def build_parser() -> _Parser:
    parser = _Parser(prog="citefield", description=__doc__)
    parser.add_argument("--version", action="version", version=f"citefield {__version__}")
    parser.add_argument("--config", default=None, help="flat key=value config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("ingest", help="build and save a corpus index")
    p.add_argument("--papers", nargs="+", required=True)
    p.add_argument("--edges", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme", help="custom top-level field scheme file")
    p.add_argument("--cs-scheme", help="custom CS subfield scheme file")
    p.add_argument("--skip-bad-records", action="store_true")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("flows", help="Sankey and heatmap exports")
    _add_common(p)
    p.add_argument("--direction", choices=("out", "in", "both"), default="both")
    p.add_argument("--scope", default="nlp")
    p.add_argument("--denominator", choices=("all", "non_cs", "cs_subfields"), default="all")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_flows)

    p = sub.add_parser("cfdi", help="citation field diversity index")
    _add_common(p)
    p.add_argument("--scope", default="nlp")
    p.add_argument("--direction", choices=("out", "in"), default="out")
    p.add_argument("--diachronic", action="store_true")
    p.add_argument("--by-bin", action="store_true")
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_cfdi)

    p = sub.add_parser("rcp", help="relative citational prominence tables")
    _add_common(p)
    p.add_argument("--direction", choices=("out", "in"), required=True)
    p.add_argument("--focal", required=True, help="'nlp' or a field label")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_rcp)

    p = sub.add_parser("insularity", help="intra-field citation percentage series")
    _add_common(p)
    p.add_argument("--scope", default="nlp")
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_insularity)

    p = sub.add_parser("interdisciplinarity", help="mean field labels per paper series")
    _add_common(p)
    p.add_argument("--scope", default="nlp")
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_interdisciplinarity)

    p = sub.add_parser("subfields", help="subfield lexicon statistics and analyses")
    _add_common(p)
    p.add_argument("--lexicon", default=None, help="bigram<TAB>category lexicon file")
    p.add_argument("--stopwords", default=None)
    p.add_argument("--top-bigrams", type=int, default=200)
    p.add_argument("--year", type=int, default=None, help="year for the CFDI delta table")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_subfields)

    p = sub.add_parser("distribution", help="per-paper outgoing CFDI histogram")
    p.add_argument("--index", required=True)
    p.add_argument("--scope", default="nlp")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distribution)

    p = sub.add_parser("paper-diversity", help="diversity report for one identifier")
    p.add_argument("--id", required=True)
    _add_upstream(p)
    p.set_defaults(func=cmd_paper_diversity)

    p = sub.add_parser("serve", help="run the diversity HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--frontend-dir", default=None, help="built web UI to mount at /ui")
    _add_upstream(p)
    p.set_defaults(func=cmd_serve)

    parser.subcommands = {name: sp for name, sp in sub.choices.items()}
    return parser


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    try:
        return int(value)
    except ValueError:
        return value


def _apply_config(parser: _Parser, argv: list[str]) -> None:
    """Install config-file values as parser defaults (flags still win)."""
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1]
    defaults = {}
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CitefieldError(f"config line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        defaults[key.strip().replace("-", "_")] = _coerce(value.strip())
    parser.set_defaults(**defaults)
    for sub in parser.subcommands.values():
        for action in sub._actions:
            if action.dest in defaults:
                sub.set_defaults(**{action.dest: defaults[action.dest]})
                action.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, CitefieldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors exit 1, --help/--version exit 0
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not getattr(args, "command", None):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except CitefieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
