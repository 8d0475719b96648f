"""End-to-end walkthrough: synthesize a corpus, ingest it, save and reload.

Run with:  python demos/run_pipeline.py
"""

import json
import random
import tempfile
from pathlib import Path

from citefield import build_index, load_index, save_index

# %% Synthesize a small dump: 500 papers, 5000 citation edges.
# Paper records are JSON lines with id/year/title/fields/is_nlp/citation_count;
# edge records carry src and tgt ids.

rng = random.Random(1)
fields_pool = ["Computer Science", "Linguistics", "Mathematics", "Psychology", "Sociology"]

paper_lines = []
for i in range(500):
    record = {
        "id": f"p{i:04d}",
        "year": rng.randint(1980, 2020),
        "title": f"study {i} of {rng.choice(fields_pool).lower()}",
        "fields": rng.sample(fields_pool, rng.randint(1, 2)),
        "is_nlp": rng.random() < 0.3,
        "citation_count": rng.randint(0, 2000),
    }
    paper_lines.append(json.dumps(record))

edge_lines = []
for _ in range(5000):
    a, b = rng.sample(range(500), 2)
    edge_lines.append(json.dumps({"src": f"p{a:04d}", "tgt": f"p{b:04d}"}))
# a few citations to papers outside the corpus: these become "dangling"
edge_lines.append(json.dumps({"src": "p0000", "tgt": "missing-1"}))
edge_lines.append(json.dumps({"src": "p0001", "tgt": "missing-2"}))

# %% One streaming pass builds the index; the summary is the audit trail.

index, summary = build_index(paper_lines, edge_lines)
print("papers           ", summary.papers)
print("resolvable edges ", summary.resolvable_edges)
print("dangling excluded", summary.dangling_edges)
print("NLP papers       ", int(index.is_nlp.sum()))

# %% Adjacency queries work on interned integer ids.

pid = index.resolve("p0000")
print("p0000 cites", len(index.out_neighbors(pid)), "papers,",
      "cited by", len(index.in_neighbors(pid)))

# %% The index round-trips through a versioned, checksummed file.

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.cfidx"
    save_index(index, path)
    reloaded = load_index(path)
    print("round trip OK:", reloaded.paper_ids == index.paper_ids,
          f"({path.stat().st_size / 1024:.0f} KiB on disk)")
