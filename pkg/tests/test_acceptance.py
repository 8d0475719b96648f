"""Acceptance suite: one test per release criterion, at stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one pass line
per criterion. The ingestion-scale criterion generates a 10M-edge fixture
and takes around a minute.
"""

import json
import random
import time
from pathlib import Path

import httpx
import numpy as np
import pytest
from fastapi.testclient import TestClient

import oracles
from citefield import (
    CITATION_BINS,
    assign_citation_bin,
    build_flow_tensor,
    build_index,
    cfdi,
    intra_field_pct,
    ircp,
    load_index,
    moving_average,
    orcp,
    outgoing_shares,
    save_index,
    scope_nlp,
)
from citefield.reports import CfdiHistogram
from citefield.s2service import EntityRef, S2Client, TokenBucket, create_app, entity_diversity
from citefield.schemes import FieldScheme
from citefield.subfields import (
    LexiconEntry,
    SubfieldLexicon,
    classify_subfield,
    label_papers,
    subfield_flow_matrix,
    subfield_intra_pct,
    subfield_scope,
    top_bigrams,
)
from conftest import make_edge, make_paper


def _passed(name: str) -> None:
    print(f"[PASS] {name}")


# ---------------------------------------------------------------------------
# Criterion: CFDI unit suite (< 1 s, exact to 1e-12, >= 1000 random vectors)
# ---------------------------------------------------------------------------


def test_criterion_cfdi_unit_suite():
    start = time.perf_counter()

    assert cfdi({"A": 10}) == pytest.approx(0.0, abs=1e-12)
    assert cfdi({"A": 1, "B": 1}) == pytest.approx(0.5, abs=1e-12)
    assert cfdi({"A": 3, "B": 1}) == pytest.approx(0.375, abs=1e-12)
    uniform23 = {f"f{i}": 4 for i in range(23)}
    assert cfdi(uniform23) == pytest.approx(1 - 1 / 23, abs=1e-12)

    rng = np.random.default_rng(2024)
    for _ in range(1000):
        size = int(rng.integers(1, 24))
        vec = rng.integers(0, 1000, size=size)
        if vec.sum() == 0:
            vec[0] = 1
        base = cfdi(vec)
        scale = int(rng.integers(1, 50))
        assert cfdi(vec * scale) == pytest.approx(base, abs=1e-12)  # scale invariance
        assert cfdi(rng.permutation(vec)) == pytest.approx(base, abs=1e-12)  # permutation invariance
        assert -1e-12 <= base <= 1 - 1 / size + 1e-12

    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"CFDI unit suite took {elapsed:.3f}s (limit 1s)"
    _passed(f"CFDI unit suite: exact values and 1000-vector invariance in {elapsed:.3f}s")


# ---------------------------------------------------------------------------
# Criterion: ORCP/IRCP oracle equivalence (100 corpora, 1e-9, < 30 s)
# ---------------------------------------------------------------------------


def _random_corpus(rng: random.Random):
    n_fields = rng.randint(2, 10)
    labels = [f"F{i}" for i in range(n_fields)]
    scheme = FieldScheme("random", tuple(labels))
    n_papers = rng.randint(max(10, n_fields), 80)
    papers = {}
    lines = []
    for i in range(n_papers):
        pid = f"p{i}"
        fields = rng.sample(labels, rng.randint(1, min(3, n_fields)))
        if i < n_fields and labels[i] not in fields:
            fields.append(labels[i])  # every field gets at least one paper
        papers[pid] = {"id": pid, "fields": fields, "year": rng.randint(1990, 2020)}
        lines.append(json.dumps(papers[pid]))
    ids = list(papers)
    edges = []
    # one guaranteed outgoing citation per field
    for f in labels:
        src = rng.choice([p for p in ids if f in papers[p]["fields"]])
        tgt = rng.choice([p for p in ids if p != src])
        edges.append((src, tgt))
    for _ in range(rng.randint(0, 10_000) - len(edges)):
        src = rng.choice(ids)
        tgt = rng.choice(ids)
        if tgt != src:
            edges.append((src, tgt))
    edge_lines = [json.dumps({"src": s, "tgt": t}) for s, t in edges]
    index, _ = build_index(lines, edge_lines, scheme=scheme)
    return scheme, papers, edges, index


def test_criterion_orcp_ircp_oracle_equivalence():
    start = time.perf_counter()
    rng = random.Random(99)
    for trial in range(100):
        scheme, papers, edges, index = _random_corpus(rng)
        tensor = build_flow_tensor(index, scheme)
        matrix = oracles.field_matrix(papers, edges)
        focal = rng.choice(scheme.labels)

        got_out = orcp(tensor, focal)
        expected_out = oracles.rcp_scores(matrix, list(scheme.labels), focal)
        for f in scheme.labels:
            assert got_out[f] == pytest.approx(expected_out[f], abs=1e-9), f"trial {trial}"

        got_in = ircp(tensor, focal)
        expected_in = oracles.rcp_scores(oracles.transpose_matrix(matrix), list(scheme.labels), focal)
        for f in scheme.labels:
            assert got_in[f] == pytest.approx(expected_in[f], abs=1e-9), f"trial {trial}"

        # every field has outgoing citations by construction, so scores sum to 0
        assert abs(sum(got_out.scores.values())) < 1e-9

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"ORCP/IRCP suite took {elapsed:.1f}s (limit 30s)"
    _passed(f"ORCP/IRCP oracle equivalence on 100 corpora in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion: flow-tensor attribution and additivity (exact)
# ---------------------------------------------------------------------------


def test_criterion_flow_tensor_attribution():
    rng = random.Random(5)
    for _ in range(5):
        scheme, papers, edges, index = _random_corpus(rng)
        tensor = build_flow_tensor(index, scheme)
        expected_total = sum(
            len(papers[s]["fields"]) * len(papers[t]["fields"]) for s, t in edges
        )
        assert tensor.total() == expected_total  # exact

        edge_lines = [json.dumps({"src": s, "tgt": t}) for s, t in edges]
        paper_lines = [json.dumps(p) for p in papers.values()]
        half = len(edge_lines) // 2
        part1, _ = build_index(paper_lines, edge_lines[:half], scheme=scheme)
        part2, _ = build_index(paper_lines, edge_lines[half:], scheme=scheme)
        summed = build_flow_tensor(part1, scheme) + build_flow_tensor(part2, scheme)
        assert np.array_equal(tensor.counts, summed.counts)  # exact additivity
    _passed("flow-tensor attribution total and partition additivity exact")


# ---------------------------------------------------------------------------
# Criterion: intra-field insularity (hand corpus 80%/0%, year bucketing)
# ---------------------------------------------------------------------------


def test_criterion_intra_field_hand_corpus():
    papers = [make_paper(f"n{i}", ["Computer Science"], year=2010 + i % 3, is_nlp=True) for i in range(5)]
    papers += [make_paper(f"o{i}", ["Linguistics"], year=2010) for i in range(5)]
    inside = [("n0", "n1"), ("n1", "n2"), ("n2", "n3"), ("n3", "n4"),
              ("n4", "n0"), ("n0", "n2"), ("n1", "n3"), ("n2", "n4")]
    outside = [("n0", "o0"), ("n1", "o1")]
    edges = [make_edge(s, t) for s, t in inside + outside]
    index, _ = build_index(papers, edges)
    assert intra_field_pct(index, scope_nlp(index)) == 80.0  # exact

    no_self = [make_paper("n0", ["Computer Science"], year=2010, is_nlp=True),
               make_paper("o0", ["Linguistics"], year=2010)]
    idx2, _ = build_index(no_self, [make_edge("n0", "o0")])
    assert intra_field_pct(idx2, scope_nlp(idx2)) == 0.0  # exact

    # series bucketing by citing-paper year against the per-edge oracle
    parsed = {p["id"]: p for p in map(json.loads, papers)}
    edge_pairs = inside + outside
    member = lambda p: p.get("is_nlp", False)
    for year in (2010, 2011, 2012):
        expected = oracles.intra_pct_by_membership(parsed, edge_pairs, member, year)
        got = intra_field_pct(index, scope_nlp(index), years=year)
        assert got == expected
    _passed("intra-field insularity: 80%/0% and citing-year bucketing exact")


# ---------------------------------------------------------------------------
# Criterion: citation-bin boundaries (exact)
# ---------------------------------------------------------------------------


def test_criterion_citation_bin_boundaries():
    expected = {
        0: "0", 1: "1-9", 9: "1-9", 10: "10-49", 49: "10-49", 50: "50-99",
        99: "50-99", 100: "100-499", 499: "100-499", 500: "500-999",
        999: "500-999", 1000: "1000-1999", 1999: "1000-1999",
        2000: "2000-4999", 4999: "2000-4999", 5000: "5000+",
    }
    for count, label in expected.items():
        assert assign_citation_bin(count).label == label
    assert len(CITATION_BINS) == 9
    _passed("citation bins: all 16 boundary values map exactly")


# ---------------------------------------------------------------------------
# Criterion: moving average (exact)
# ---------------------------------------------------------------------------


def test_criterion_moving_average():
    constant = {2000 + i: 7.0 for i in range(6)}
    assert moving_average(constant) == constant  # exact preservation
    assert moving_average({2000: 0.0, 2001: 3.0, 2002: 6.0}) == {
        2000: 1.5, 2001: 3.0, 2002: 4.5,
    }
    _passed("moving average: constant preservation and truncated edges exact")


# ---------------------------------------------------------------------------
# Criterion: subfield pipeline
# ---------------------------------------------------------------------------


def test_criterion_subfield_pipeline():
    # top bigrams vs naive recount on a 10^4-title fixture
    rng = random.Random(11)
    words = ["neural", "machine", "translation", "parsing", "model", "corpus",
             "semantic", "language", "speech", "evaluation", "learning", "graph"]
    titles = [" ".join(rng.choices(words, k=rng.randint(2, 8))) for _ in range(10_000)]
    expected = oracles.naive_bigrams(titles, frozenset())
    got = top_bigrams(titles, k=len(expected), stopwords=frozenset())
    assert dict(got) == dict(expected)
    assert got == sorted(expected.items(), key=lambda kv: (-kv[1], kv[0]))

    # the running MT example maps through the default lexicon
    lexicon = SubfieldLexicon.load()
    assert "machine-translation" in classify_subfield(
        "Large Language Models in Machine Translation", lexicon
    )

    # subfield metrics equal the generic metrics on the scoped tensor, exactly
    lex = SubfieldLexicon(
        [
            LexiconEntry("machine translation", "machine-translation"),
            LexiconEntry("lexical semantics", "lexical-semantics"),
        ]
    )
    papers = [
        json.dumps({"id": "mt1", "title": "neural machine translation", "year": 2015,
                    "fields": ["Computer Science"], "is_nlp": True}),
        json.dumps({"id": "mt2", "title": "machine translation decoding", "year": 2015,
                    "fields": ["Computer Science"], "is_nlp": True}),
        json.dumps({"id": "ml", "title": "", "year": 2014, "fields": ["Computer Science"],
                    "cs_subfields": ["Machine Learning"]}),
        json.dumps({"id": "ir", "title": "", "year": 2014, "fields": ["Computer Science"],
                    "cs_subfields": ["Information Retrieval"]}),
    ]
    edges = [make_edge("mt1", "mt2"), make_edge("mt1", "ml"), make_edge("mt2", "ir")]
    index, _ = build_index(papers, edges)
    bits = label_papers(index, lex)
    rows, cols, pct = subfield_flow_matrix(index, lex, target="cs")
    scope = subfield_scope(index, bits, "machine-translation", lex.scheme)
    scoped = build_flow_tensor(index, index.cs_scheme, src_scope=scope, src_axis="scope")
    shares = outgoing_shares(scoped, "machine-translation", denominator_scope=list(cols))
    r = rows.index("machine-translation")
    for j, col in enumerate(cols):
        assert pct[r, j] == shares.get(col, 0.0)  # exact equality
    assert subfield_intra_pct(index, lex, "machine-translation") == intra_field_pct(index, scope)
    _passed("subfield pipeline: 10^4-title recount, lexicon example, scoped-metric equality")


# ---------------------------------------------------------------------------
# Criterion: ingestion scale and persistence round trip
# ---------------------------------------------------------------------------

N_PERF_PAPERS = 100_000
N_PERF_EDGES = 10_000_000


def _vm_rss_bytes() -> int:
    for line in Path("/proc/self/status").read_text().splitlines():
        if line.startswith("VmRSS:"):
            return int(line.split()[1]) * 1024
    return 0


def _write_perf_fixture(tmp: Path) -> tuple[Path, Path]:
    rng = random.Random(17)
    papers_path = tmp / "perf_papers.jsonl"
    edges_path = tmp / "perf_edges.jsonl"
    fields_pool = ["Computer Science", "Linguistics", "Mathematics", "Psychology"]
    with open(papers_path, "w") as fh:
        rows = []
        for i in range(N_PERF_PAPERS):
            fields = json.dumps(rng.sample(fields_pool, rng.randint(1, 2)))
            nlp = "true" if rng.random() < 0.3 else "false"
            rows.append(
                '{"id": "p%07d", "year": %d, "fields": %s, "is_nlp": %s, "citation_count": %d}'
                % (i, rng.randint(1965, 2020), fields, nlp, rng.randint(0, 100))
            )
            if len(rows) == 50_000:
                fh.write("\n".join(rows) + "\n")
                rows = []
        if rows:
            fh.write("\n".join(rows) + "\n")
    with open(edges_path, "w") as fh:
        randrange = rng.randrange
        rows = []
        for _ in range(N_PERF_EDGES):
            a = randrange(N_PERF_PAPERS)
            b = randrange(N_PERF_PAPERS)
            if a == b:
                b = (b + 1) % N_PERF_PAPERS
            rows.append('{"src": "p%07d", "tgt": "p%07d"}' % (a, b))
            if len(rows) == 200_000:
                fh.write("\n".join(rows) + "\n")
                rows = []
        if rows:
            fh.write("\n".join(rows) + "\n")
    return papers_path, edges_path


def test_criterion_ingestion_scale_and_round_trip(tmp_path):
    papers_path, edges_path = _write_perf_fixture(tmp_path)
    rss_before = _vm_rss_bytes()

    start = time.perf_counter()
    index, summary = build_index(papers_path, edges_path)
    elapsed = time.perf_counter() - start

    assert summary.papers == N_PERF_PAPERS
    assert summary.resolvable_edges == N_PERF_EDGES
    assert summary.edge_lines == N_PERF_EDGES
    assert elapsed < 60.0, f"ingest took {elapsed:.1f}s (limit 60s)"

    # documented budget: the index's own arrays plus bounded working overhead
    rss_after = _vm_rss_bytes()
    index_bytes = (
        index.edge_src.nbytes + index.edge_tgt.nbytes + index.years.nbytes
        + index.field_bits.nbytes + index.cs_bits.nbytes + index.is_nlp.nbytes
        + index.citation_count.nbytes
    )
    id_overhead = N_PERF_PAPERS * 120  # interning table + id strings + list slots
    budget = index_bytes * 2 + id_overhead + 400 * 2**20
    used = rss_after - rss_before
    assert used < budget, f"ingestion used {used / 2**20:.0f} MiB, budget {budget / 2**20:.0f} MiB"

    # save/load round trip yields identical downstream tensors
    path = tmp_path / "perf.cfidx"
    save_index(index, path)
    loaded = load_index(path)
    t1 = build_flow_tensor(index, index.scheme)
    t2 = build_flow_tensor(loaded, loaded.scheme)
    assert np.array_equal(t1.counts, t2.counts)

    _passed(
        f"ingestion scale: {N_PERF_EDGES:,} edges in {elapsed:.1f}s, "
        f"{used / 2**20:.0f} MiB used (index arrays {index_bytes / 2**20:.0f} MiB); "
        "round-trip tensor identical"
    )


# ---------------------------------------------------------------------------
# Criterion: service contract on canned fixtures
# ---------------------------------------------------------------------------

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "entity", "outgoing", "complete"],
    "properties": {
        "schema_version": {"const": 1},
        "entity": {
            "type": "object",
            "required": ["kind", "id", "input"],
            "properties": {
                "kind": {"enum": ["paper", "author", "venue"]},
                "id": {"type": "string"},
                "input": {"type": "string"},
            },
        },
        "outgoing": {
            "type": "object",
            "required": [
                "total_references", "unlabeled_references", "field_counts",
                "cfdi", "cfdi_defined", "percentile",
            ],
            "properties": {
                "total_references": {"type": "integer", "minimum": 0},
                "unlabeled_references": {"type": "integer", "minimum": 0},
                "field_counts": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["field", "count", "percentage"],
                        "properties": {
                            "field": {"type": "string"},
                            "count": {"type": "integer", "minimum": 0},
                            "percentage": {"type": "number", "minimum": 0, "maximum": 100},
                        },
                    },
                },
                "cfdi": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                "cfdi_defined": {"type": "boolean"},
                "percentile": {"type": ["number", "null"], "minimum": 0, "maximum": 100},
            },
        },
        "complete": {"type": "boolean"},
    },
}

HISTOGRAM_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "bin_width", "counts", "total", "scope"],
    "properties": {
        "schema_version": {"const": 1},
        "bin_width": {"type": "number", "exclusiveMinimum": 0},
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "total": {"type": "integer", "minimum": 0},
        "scope": {"type": "string"},
    },
}

PAPER_X = "1" * 40
PAPER_Y = "2" * 40

SERVICE_ROUTES = {
    f"/paper/{PAPER_X}/references": [
        {
            "offset": 0,
            "data": [
                {"citedPaper": {"paperId": "r1", "title": "a", "year": 2000,
                                "s2FieldsOfStudy": [{"category": "Computer Science"}]}},
                {"citedPaper": {"paperId": "r2", "title": "b", "year": 2001,
                                "s2FieldsOfStudy": [{"category": "Linguistics"}]}},
                {"citedPaper": {"paperId": "r3", "title": "c", "year": 2002,
                                "s2FieldsOfStudy": [{"category": "Computer Science"},
                                                    {"category": "Mathematics"}]}},
            ],
        },
    ],
    "/author/7/papers": [
        {"offset": 0, "data": [{"paperId": PAPER_X}, {"paperId": PAPER_Y}]},
    ],
    f"/paper/{PAPER_Y}/references": [
        {
            "offset": 0,
            "data": [
                {"citedPaper": {"paperId": "r4", "title": "d", "year": 2003,
                                "s2FieldsOfStudy": [{"category": "Psychology"}]}},
            ],
        },
    ],
    "/paper/search/bulk": [
        {"offset": 0, "data": [{"paperId": PAPER_Y}]},
    ],
}


class CountingTransport(httpx.BaseTransport):
    def __init__(self, routes):
        self.routes = routes
        self.calls = 0

    def handle_request(self, request):
        self.calls += 1
        pages = self.routes.get(request.url.path)
        if pages is None:
            return httpx.Response(404, json={"error": "unknown"})
        offset = int(dict(request.url.params).get("offset", 0))
        for page in pages:
            if page["offset"] == offset:
                return httpx.Response(200, json=page)
        return httpx.Response(200, json={"offset": offset, "data": []})


def test_criterion_service_contract(tmp_path):
    assert jsonschema is not None, "jsonschema is required for the acceptance suite"
    transport = CountingTransport(SERVICE_ROUTES)
    client = S2Client(
        base_url="https://canned.example",
        cache_dir=tmp_path,
        rate_per_sec=1000.0,
        transport=transport,
        sleep=lambda s: None,
    )
    histogram = CfdiHistogram(bin_width=0.05, counts=[2] * 20, total=40, scope="nlp")
    http = TestClient(create_app(client, histogram=histogram), raise_server_exceptions=False)

    assert http.get("/healthz").text == "ok"

    # every diversity endpoint returns schema-valid JSON with the library's CFDI
    for kind, entity_id in (("paper", PAPER_X), ("author", "7"), ("venue", "venue:Canned Venue")):
        response = http.get(f"/v1/diversity/{kind}/{entity_id}")
        assert response.status_code == 200, response.text
        body = response.json()
        jsonschema.validate(body, REPORT_SCHEMA)
        ref = EntityRef(kind, entity_id, body["entity"]["id"])
        expected = entity_diversity(ref, client, histogram)
        assert body["outgoing"]["cfdi"] == expected.cfdi
        recomputed = cfdi({fc["field"]: fc["count"] for fc in body["outgoing"]["field_counts"]})
        assert recomputed == pytest.approx(body["outgoing"]["cfdi"], abs=1e-12)

    response = http.get("/v1/corpus/cfdi-distribution")
    assert response.status_code == 200
    jsonschema.validate(response.json(), HISTOGRAM_SCHEMA)

    # cache suppresses repeat upstream calls
    calls_before = transport.calls
    repeat = http.get(f"/v1/diversity/paper/{PAPER_X}")
    assert repeat.status_code == 200
    assert transport.calls == calls_before

    # rate limiter never exceeds its budget under a simulated clock
    class SimClock:
        def __init__(self):
            self.now = 0.0

        def __call__(self):
            return self.now

        def sleep(self, seconds):
            self.now += seconds

    clock = SimClock()
    rate, capacity = 5.0, 2.0
    bucket = TokenBucket(rate, capacity, clock=clock, sleep=clock.sleep)
    grants = []
    for _ in range(200):
        bucket.acquire()
        grants.append(clock.now)
    for t in grants:
        granted = sum(1 for g in grants if g <= t)
        assert granted <= capacity + rate * t + 1e-9

    _passed("service contract: schema-valid endpoints, CFDI parity, cache hit, rate budget")
