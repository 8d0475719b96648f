"""The diversity lookup service driven against a canned upstream.

Run with:  python demos/diversity_service.py
(No network access needed; the upstream transport is replayed in-process.)
"""

import tempfile

import httpx
from fastapi.testclient import TestClient

from citefield.reports import CfdiHistogram
from citefield.s2service import S2Client, create_app

PAPER = "d" * 40

# %% A canned upstream: one paper with three references across two fields.


def canned(request: httpx.Request) -> httpx.Response:
    if request.url.path == f"/paper/{PAPER}/references":
        return httpx.Response(200, json={
            "offset": 0,
            "data": [
                {"citedPaper": {"paperId": "r1", "title": "one", "year": 2019,
                                "s2FieldsOfStudy": [{"category": "Computer Science"}]}},
                {"citedPaper": {"paperId": "r2", "title": "two", "year": 2020,
                                "s2FieldsOfStudy": [{"category": "Computer Science"}]}},
                {"citedPaper": {"paperId": "r3", "title": "three", "year": 2021,
                                "s2FieldsOfStudy": [{"category": "Linguistics"}]}},
            ],
        })
    return httpx.Response(404, json={"error": "unknown"})


# %% Wire the client (rate-limited, disk-cached) and the app around it.

with tempfile.TemporaryDirectory() as tmp:
    client = S2Client(
        base_url="https://canned.example",
        cache_dir=tmp,
        transport=httpx.MockTransport(canned),
        rate_per_sec=100.0,
    )
    histogram = CfdiHistogram(bin_width=0.05, counts=[3] * 20, total=60, scope="nlp")
    http = TestClient(create_app(client, histogram=histogram), raise_server_exceptions=False)

    print("healthz:", http.get("/healthz").text)

    report = http.get(f"/v1/diversity/paper/{PAPER}").json()
    print("cfdi:", report["outgoing"]["cfdi"])
    for entry in report["outgoing"]["field_counts"]:
        print(f"  {entry['field']:<18} {entry['count']}  ({entry['percentage']}%)")
    print("percentile vs corpus:", report["outgoing"]["percentile"])

    # errors come back as machine-readable JSON with mapped status codes
    bad = http.get("/v1/diversity/paper/not-an-identifier")
    print("bad id ->", bad.status_code, bad.json()["error"]["code"])
    missing = http.get("/v1/diversity/paper/" + "0" * 40)
    print("unknown ->", missing.status_code, missing.json()["error"]["code"])
