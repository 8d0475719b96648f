"""Flow tensors, share queries, and the export formats.

Run with:  python demos/flows_and_exports.py
"""

import json
import random

from citefield import build_flow_tensor, build_index, flow_slice, outgoing_shares, scope_nlp
from citefield.reports import MetricSpec, diachronic_series, heatmap_export, sankey_export

# %% A corpus where NLP papers cite mostly CS, some Linguistics and Math.

rng = random.Random(7)
papers, edges = [], []
targets = {"Computer Science": 16, "Linguistics": 3, "Mathematics": 1}
for field, _ in targets.items():
    papers.append(json.dumps({"id": field, "fields": [field], "year": 1998}))
for i in range(10):
    papers.append(json.dumps({
        "id": f"n{i}", "fields": ["Computer Science"],
        "year": 2000 + i % 5, "is_nlp": True,
    }))
for field, weight in targets.items():
    for _ in range(weight):
        edges.append(json.dumps({"src": f"n{rng.randrange(10)}", "tgt": field}))

index, _ = build_index(papers, edges)

# %% The NLP-scoped tensor counts one citation per cited field per edge.

tensor = build_flow_tensor(index, index.scheme, src_scope=scope_nlp(index), src_axis="scope")
shares = outgoing_shares(tensor, "nlp")
for field, pct in sorted(shares.items(), key=lambda kv: -kv[1]):
    if pct:
        print(f"NLP -> {field:<18} {pct:5.1f}%")

# %% Slices carry the matrix plus marginals; the Sankey export is links + nodes.

s = flow_slice(tensor)
print("slice total:", s.total)
print(sankey_export(s).to_json()[:340], "...")

# %% Heatmap grids are plain CSV with one-decimal percentages.

rows, cols = ("nlp",), tensor.tgt_labels[:4]
matrix = [[shares.get(c, 0.0) for c in cols]]
print(heatmap_export(matrix, list(rows), list(cols)))

# %% Per-year series with a three-year moving average.

spec = MetricSpec(name="share", scope="nlp", field="Computer Science", denominator="all")
table = diachronic_series(index, spec, years=(2000, 2004), smoothing=True)
print(table.to_csv())
