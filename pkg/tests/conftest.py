from __future__ import annotations

import json

import pytest

import synthcorpus
from citefield import build_index


@pytest.fixture(scope="session")
def synth():
    """Deterministic 1000-paper / 10000-edge corpus with ground truth."""
    return synthcorpus.generate(n_papers=1000, n_edges=10_000, seed=42, n_duplicates=7)


@pytest.fixture(scope="session")
def synth_index(synth):
    index, summary = build_index(synth.paper_lines, synth.edge_lines)
    return index, summary


def make_paper(pid, fields, year=None, **kwargs):
    rec = {"id": pid, "fields": list(fields), **kwargs}
    if year is not None:
        rec["year"] = year
    return json.dumps(rec)


def make_edge(src, tgt):
    return json.dumps({"src": src, "tgt": tgt})
