import httpx
import pytest
from fastapi.testclient import TestClient

from citefield import ResolutionError, UnknownEntityError, UpstreamError, UpstreamRateLimitError
from citefield.reports import CfdiHistogram
from citefield.s2service import (
    EntityRef,
    S2Client,
    TokenBucket,
    create_app,
    entity_diversity,
    resolve_entity,
)
from citefield.s2service.client import DiskCache

PAPER_A = "a" * 40
PAPER_B = "b" * 40
PAPER_C = "c" * 40


# ---------------------------------------------------------------------------
# Entity resolution
# ---------------------------------------------------------------------------


def test_resolve_hex_paper_id():
    ref = resolve_entity(PAPER_A)
    assert ref.kind == "paper"
    assert ref.canonical_id == PAPER_A


def test_resolve_anthology_url():
    ref = resolve_entity("https://aclanthology.org/P19-1234/")
    assert ref.kind == "paper"
    assert ref.canonical_id == "ACL:P19-1234"


def test_resolve_new_style_anthology_url():
    ref = resolve_entity("https://aclanthology.org/2020.acl-main.123.pdf")
    assert ref.canonical_id == "ACL:2020.acl-main.123"


def test_resolve_bare_anthology_id():
    assert resolve_entity("P19-1234").canonical_id == "ACL:P19-1234"


def test_resolve_anthology_volume_is_venue():
    ref = resolve_entity("https://aclanthology.org/volumes/2020.acl-main/")
    assert ref.kind == "venue"
    assert ref.canonical_id == "2020.acl-main"


def test_resolve_s2_paper_url():
    ref = resolve_entity(f"https://www.semanticscholar.org/paper/Some-Title/{PAPER_A}")
    assert ref.kind == "paper"
    assert ref.canonical_id == PAPER_A


def test_resolve_s2_author_url():
    ref = resolve_entity("https://www.semanticscholar.org/author/Jane-Doe/144118848")
    assert ref.kind == "author"
    assert ref.canonical_id == "144118848"


def test_resolve_bare_digits_author():
    assert resolve_entity("144118848").kind == "author"


def test_resolve_corpus_id():
    assert resolve_entity("CorpusId:12345").kind == "paper"


def test_resolve_explicit_prefixes():
    assert resolve_entity("venue:ACL 2020").kind == "venue"
    assert resolve_entity("author:99").canonical_id == "99"
    assert resolve_entity("paper:" + PAPER_B).canonical_id == PAPER_B


def test_resolve_gibberish_fails():
    with pytest.raises(ResolutionError):
        resolve_entity("certainly not an id")


def test_resolve_empty_fails():
    with pytest.raises(ResolutionError):
        resolve_entity("   ")


# ---------------------------------------------------------------------------
# Token bucket under a simulated clock
# ---------------------------------------------------------------------------


class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        assert seconds >= 0
        self.now += seconds


def test_token_bucket_never_exceeds_budget():
    clock = FakeClock()
    rate, capacity = 2.0, 3.0
    bucket = TokenBucket(rate, capacity, clock=clock, sleep=clock.sleep)
    grants = []
    for _ in range(50):
        bucket.acquire()
        grants.append(clock.now)
    for t in grants:
        used = sum(1 for g in grants if g <= t)
        assert used <= capacity + rate * t + 1e-9


def test_token_bucket_allows_burst_then_throttles():
    clock = FakeClock()
    bucket = TokenBucket(1.0, 2.0, clock=clock, sleep=clock.sleep)
    bucket.acquire()
    bucket.acquire()
    assert clock.now == 0.0  # burst capacity
    bucket.acquire()
    assert clock.now == pytest.approx(1.0)  # had to wait for a refill


def test_token_bucket_rejects_oversized_acquire():
    bucket = TokenBucket(1.0, 1.0)
    with pytest.raises(ValueError):
        bucket.acquire(2.0)


# ---------------------------------------------------------------------------
# Disk cache
# ---------------------------------------------------------------------------


def test_disk_cache_round_trip(tmp_path):
    cache = DiskCache(tmp_path, ttl_days=30)
    cache.put("paper", PAPER_A, {"x": 1})
    assert cache.get("paper", PAPER_A) == {"x": 1}
    assert (tmp_path / "paper" / f"{PAPER_A}.json").exists()


def test_disk_cache_expires(tmp_path):
    now = [0.0]
    cache = DiskCache(tmp_path, ttl_days=1, clock=lambda: now[0])
    cache.put("paper", PAPER_A, {"x": 1})
    now[0] = 2 * 86400
    assert cache.get("paper", PAPER_A) is None


def test_disk_cache_quotes_awkward_keys(tmp_path):
    cache = DiskCache(tmp_path, ttl_days=1)
    cache.put("venue", "ACL / EMNLP 2020", {"x": 1})
    assert cache.get("venue", "ACL / EMNLP 2020") == {"x": 1}
    (entry,) = (tmp_path / "venue").iterdir()
    assert "/" not in entry.name.replace(entry.suffix, "")


# ---------------------------------------------------------------------------
# Canned upstream fixtures
# ---------------------------------------------------------------------------


def _ref(paper_id, title, year, categories):
    return {
        "citedPaper": {
            "paperId": paper_id,
            "title": title,
            "year": year,
            "s2FieldsOfStudy": [{"category": c, "source": "model"} for c in categories],
        }
    }


FIXTURE_ROUTES = {
    f"/paper/{PAPER_A}/references": [
        {
            "offset": 0,
            "next": 2,
            "data": [
                _ref("r1", "ref one", 2001, ["Computer Science"]),
                _ref("r2", "ref two", 2002, ["Computer Science", "Linguistics"]),
            ],
        },
        {
            "offset": 2,
            "data": [
                _ref("r3", "ref three", 2003, ["Mathematics"]),
                {"citedPaper": {"paperId": "r4", "title": "no fields", "year": None}},
            ],
        },
    ],
    f"/paper/{PAPER_B}/references": [
        {"offset": 0, "data": [_ref("r5", "only one field", 1999, ["Linguistics"])]},
    ],
    f"/paper/{PAPER_C}/references": [
        {
            "offset": 0,
            "data": [
                _ref("r6", "x", 2000, ["Computer Science"]),
                _ref("r7", "y", 2000, ["Linguistics"]),
            ],
        },
    ],
    "/author/42/papers": [
        {
            "offset": 0,
            "data": [{"paperId": PAPER_A}, {"paperId": PAPER_B}, {"paperId": PAPER_C}],
        },
    ],
}


class CannedTransport(httpx.BaseTransport):
    """Offset-paginated canned responses; counts every request."""

    def __init__(self, routes=FIXTURE_ROUTES):
        self.routes = routes
        self.calls: list[str] = []

    def handle_request(self, request):
        path = request.url.path
        self.calls.append(path)
        pages = self.routes.get(path)
        if pages is None:
            return httpx.Response(404, json={"error": "not found"})
        offset = int(dict(request.url.params).get("offset", 0))
        for page in pages:
            if page["offset"] == offset:
                return httpx.Response(200, json=page)
        return httpx.Response(200, json={"offset": offset, "data": []})


def _client(tmp_path, transport=None, **kwargs):
    transport = transport or CannedTransport()
    client = S2Client(
        base_url="https://canned.example",
        api_key="test-key",
        cache_dir=tmp_path,
        rate_per_sec=1000.0,
        transport=transport,
        sleep=lambda s: None,
        **kwargs,
    )
    return client, transport


def test_fetch_references_decodes_fixture(tmp_path):
    client, _ = _client(tmp_path)
    result = client.fetch_references(EntityRef("paper", PAPER_A, PAPER_A))
    assert result.complete
    assert [p.paper_id for p in result.items] == ["r1", "r2", "r3", "r4"]
    assert result.items[1].fields == ("Computer Science", "Linguistics")
    assert result.items[3].fields == ()


def test_fetch_references_cache_suppresses_upstream(tmp_path):
    client, transport = _client(tmp_path)
    ref = EntityRef("paper", PAPER_A, PAPER_A)
    client.fetch_references(ref)
    calls_after_first = len(transport.calls)
    again = client.fetch_references(ref)
    assert len(transport.calls) == calls_after_first  # zero new upstream calls
    assert [p.paper_id for p in again.items] == ["r1", "r2", "r3", "r4"]


def test_fetch_references_zero_refs_complete(tmp_path):
    routes = {f"/paper/{PAPER_A}/references": [{"offset": 0, "data": []}]}
    client, _ = _client(tmp_path, transport=CannedTransport(routes))
    result = client.fetch_references(EntityRef("paper", PAPER_A, PAPER_A))
    assert result.items == []
    assert result.complete


def test_fetch_author_pools_three_papers(tmp_path):
    client, _ = _client(tmp_path)
    result = client.fetch_references(EntityRef("author", "42", "42"))
    assert [p.paper_id for p in result.items] == ["r1", "r2", "r3", "r4", "r5", "r6", "r7"]


def test_unknown_entity_maps_to_error(tmp_path):
    client, _ = _client(tmp_path)
    with pytest.raises(UnknownEntityError):
        client.fetch_references(EntityRef("paper", "f" * 40, "f" * 40))


class FlakyTransport(httpx.BaseTransport):
    """Fails with 500 a fixed number of times, then succeeds."""

    def __init__(self, failures, status=500, headers=None):
        self.failures = failures
        self.status = status
        self.headers = headers or {}
        self.calls = 0

    def handle_request(self, request):
        self.calls += 1
        if self.calls <= self.failures:
            return httpx.Response(self.status, headers=self.headers)
        return httpx.Response(200, json={"offset": 0, "data": []})


def test_retry_then_success(tmp_path):
    transport = FlakyTransport(failures=2)
    client, _ = _client(tmp_path, transport=transport)
    result = client.fetch_references(EntityRef("paper", PAPER_A, PAPER_A))
    assert result.complete
    assert transport.calls == 3


def test_persistent_500_raises_upstream_error(tmp_path):
    transport = FlakyTransport(failures=99)
    client, _ = _client(tmp_path, transport=transport, max_retries=2)
    with pytest.raises(UpstreamError):
        client.fetch_references(EntityRef("paper", PAPER_A, PAPER_A))
    assert transport.calls == 3


def test_persistent_429_raises_rate_limit(tmp_path):
    slept = []
    transport = FlakyTransport(failures=99, status=429, headers={"retry-after": "7"})
    client = S2Client(
        base_url="https://canned.example",
        cache_dir=tmp_path,
        rate_per_sec=1000.0,
        transport=transport,
        max_retries=1,
        sleep=slept.append,
    )
    with pytest.raises(UpstreamRateLimitError):
        client.fetch_references(EntityRef("paper", PAPER_A, PAPER_A))
    assert 7.0 in slept  # honored the upstream retry-after signal


def test_429_then_success_retries(tmp_path):
    transport = FlakyTransport(failures=1, status=429)
    client, _ = _client(tmp_path, transport=transport)
    result = client.fetch_references(EntityRef("paper", PAPER_A, PAPER_A))
    assert result.complete
    assert transport.calls == 2


# ---------------------------------------------------------------------------
# Entity diversity
# ---------------------------------------------------------------------------


def test_entity_diversity_single_field_zero(tmp_path):
    client, _ = _client(tmp_path)
    report = entity_diversity(EntityRef("paper", PAPER_B, PAPER_B), client)
    assert report.cfdi == 0.0
    assert report.field_counts == {"Linguistics": 1}


def test_entity_diversity_two_even_fields(tmp_path):
    client, _ = _client(tmp_path)
    report = entity_diversity(EntityRef("paper", PAPER_C, PAPER_C), client)
    assert report.cfdi == pytest.approx(0.5)


def test_entity_diversity_counts_match_multilabel_rule(tmp_path):
    client, _ = _client(tmp_path)
    report = entity_diversity(EntityRef("paper", PAPER_A, PAPER_A), client)
    assert report.field_counts == {"Computer Science": 2, "Linguistics": 1, "Mathematics": 1}
    assert report.unlabeled_references == 1
    assert report.total_references == 4


def test_entity_diversity_author_pools_counts(tmp_path):
    client, _ = _client(tmp_path)
    report = entity_diversity(EntityRef("author", "42", "42"), client)
    # pooled brute-force recount across the three papers
    assert report.field_counts == {"Computer Science": 3, "Linguistics": 3, "Mathematics": 1}
    expected = 1 - ((3 / 7) ** 2 + (3 / 7) ** 2 + (1 / 7) ** 2)
    assert report.cfdi == pytest.approx(expected)


def test_entity_diversity_zero_citations_undefined(tmp_path):
    routes = {f"/paper/{PAPER_A}/references": [{"offset": 0, "data": []}]}
    client, _ = _client(tmp_path, transport=CannedTransport(routes))
    report = entity_diversity(EntityRef("paper", PAPER_A, PAPER_A), client)
    assert report.cfdi is None
    assert not report.cfdi_defined


def test_report_cfdi_recomputable_from_counts(tmp_path):
    from citefield import cfdi as cfdi_fn

    client, _ = _client(tmp_path)
    report = entity_diversity(EntityRef("paper", PAPER_A, PAPER_A), client)
    assert cfdi_fn(report.field_counts) == pytest.approx(report.cfdi)


def test_report_percentile_against_histogram(tmp_path):
    client, _ = _client(tmp_path)
    hist = CfdiHistogram(bin_width=0.5, counts=[5, 5], total=10, scope="nlp")
    report = entity_diversity(EntityRef("paper", PAPER_C, PAPER_C), client, histogram=hist)
    assert report.percentile == pytest.approx(50.0)


def test_entity_diversity_optional_incoming(tmp_path):
    routes = {
        f"/paper/{PAPER_A}/references": [{"offset": 0, "data": [_ref("r1", "x", 2000, ["Art"])]}],
        f"/paper/{PAPER_A}/citations": [
            {
                "offset": 0,
                "data": [
                    {"citingPaper": {"paperId": "c1", "title": "c", "year": 2005,
                                     "s2FieldsOfStudy": [{"category": "Biology"}]}},
                    {"citingPaper": {"paperId": "c2", "title": "d", "year": 2006,
                                     "s2FieldsOfStudy": [{"category": "Art"}]}},
                ],
            },
        ],
    }
    client, _ = _client(tmp_path, transport=CannedTransport(routes))
    report = entity_diversity(EntityRef("paper", PAPER_A, PAPER_A), client, include_incoming=True)
    assert report.incoming is not None
    assert report.incoming.field_counts == {"Biology": 1, "Art": 1}
    assert report.incoming.cfdi == pytest.approx(0.5)
    payload = report.to_dict()
    assert payload["incoming"]["cfdi"] == pytest.approx(0.5)
    # outgoing-only reports omit the block entirely
    plain = entity_diversity(EntityRef("paper", PAPER_A, PAPER_A), client)
    assert "incoming" not in plain.to_dict()


# ---------------------------------------------------------------------------
# HTTP service
# ---------------------------------------------------------------------------


@pytest.fixture()
def service(tmp_path):
    client, transport = _client(tmp_path)
    hist = CfdiHistogram(bin_width=0.05, counts=[1] * 20, total=20, scope="nlp")
    app = create_app(client, histogram=hist)
    return TestClient(app, raise_server_exceptions=False), client, transport


def test_healthz(service):
    http, _, _ = service
    response = http.get("/healthz")
    assert response.status_code == 200
    assert response.text == "ok"


def test_paper_endpoint_equals_library_result(service):
    http, client, _ = service
    response = http.get(f"/v1/diversity/paper/{PAPER_A}")
    assert response.status_code == 200
    hist = CfdiHistogram(bin_width=0.05, counts=[1] * 20, total=20, scope="nlp")
    expected = entity_diversity(EntityRef("paper", PAPER_A, PAPER_A), client, hist).to_dict()
    got = response.json()
    assert got["outgoing"]["cfdi"] == expected["outgoing"]["cfdi"]
    assert got["outgoing"]["field_counts"] == expected["outgoing"]["field_counts"]


def test_bad_id_maps_to_400(service):
    http, _, _ = service
    response = http.get("/v1/diversity/paper/definitely not a paper")
    assert response.status_code == 400
    body = response.json()
    assert body["error"]["code"] == "bad_id"


def test_kind_mismatch_maps_to_400(service):
    http, _, _ = service
    response = http.get("/v1/diversity/author/" + PAPER_A)
    assert response.status_code == 400


def test_unknown_entity_maps_to_404(service):
    http, _, _ = service
    response = http.get("/v1/diversity/paper/" + "f" * 40)
    assert response.status_code == 404
    assert response.json()["error"]["code"] == "entity_not_found"


def test_upstream_failure_maps_to_502(tmp_path):
    client, _ = _client(tmp_path, transport=FlakyTransport(failures=99), max_retries=0)
    http = TestClient(create_app(client), raise_server_exceptions=False)
    response = http.get("/v1/diversity/paper/" + PAPER_A)
    assert response.status_code == 502
    assert response.json()["error"]["code"] == "upstream_failure"


def test_rate_limit_maps_to_429(tmp_path):
    client, _ = _client(tmp_path, transport=FlakyTransport(failures=99, status=429), max_retries=0)
    http = TestClient(create_app(client), raise_server_exceptions=False)
    response = http.get("/v1/diversity/paper/" + PAPER_A)
    assert response.status_code == 429
    assert response.json()["error"]["code"] == "rate_limited"


def test_histogram_endpoint(service):
    http, _, _ = service
    response = http.get("/v1/corpus/cfdi-distribution")
    assert response.status_code == 200
    body = response.json()
    assert body["total"] == 20
    assert len(body["counts"]) == 20


def test_histogram_endpoint_missing(tmp_path):
    client, _ = _client(tmp_path)
    http = TestClient(create_app(client, histogram=None), raise_server_exceptions=False)
    response = http.get("/v1/corpus/cfdi-distribution")
    assert response.status_code == 404


def test_venue_endpoint_accepts_free_form_names(tmp_path):
    routes = {
        "/paper/search/bulk": [{"offset": 0, "data": [{"paperId": PAPER_B}]}],
        f"/paper/{PAPER_B}/references": FIXTURE_ROUTES[f"/paper/{PAPER_B}/references"],
    }
    client, _ = _client(tmp_path, transport=CannedTransport(routes))
    http = TestClient(create_app(client), raise_server_exceptions=False)
    response = http.get("/v1/diversity/venue/Workshop on Things")
    assert response.status_code == 200
    assert response.json()["entity"]["kind"] == "venue"
