"""Tour of the field-diversity metrics on a hand-sized corpus.

Run with:  python demos/diversity_metrics.py
"""

import json
import logging

from citefield import (
    assign_citation_bin,
    build_flow_tensor,
    build_index,
    cfdi,
    intra_field_pct,
    ircp,
    mean_fields_per_paper,
    moving_average,
    orcp,
    scope_nlp,
)

logging.basicConfig(level=logging.ERROR)  # hide excluded-field warnings in the tour

# %% CFDI: 1 - sum of squared field shares. One field -> 0; even split -> 0.5.

print("cfdi {A:10}      ", cfdi({"A": 10}))
print("cfdi {A:1, B:1}  ", cfdi({"A": 1, "B": 1}))
print("cfdi {A:3, B:1}  ", cfdi({"A": 3, "B": 1}))
print("cfdi uniform-23  ", round(cfdi([1] * 23), 5), "(= 1 - 1/23)")

# %% A two-field corpus. Art-papers cite Art 8x and Biology 2x; the
# Biology paper splits evenly. The focal NLP slice is the Art row.

papers = [
    json.dumps({"id": "a_src", "fields": ["Art"], "year": 2000, "is_nlp": True}),
    json.dumps({"id": "b_src", "fields": ["Biology"], "year": 2000}),
    json.dumps({"id": "a_t", "fields": ["Art"], "year": 1999}),
    json.dumps({"id": "b_t", "fields": ["Biology"], "year": 1999}),
]
edges = (
    [json.dumps({"src": "a_src", "tgt": "a_t"})] * 8
    + [json.dumps({"src": "a_src", "tgt": "b_t"})] * 2
    + [json.dumps({"src": "b_src", "tgt": "a_t"})] * 5
    + [json.dumps({"src": "b_src", "tgt": "b_t"})] * 5
)
index, _ = build_index(papers, edges)
tensor = build_flow_tensor(index, index.scheme)

# %% ORCP: how much more the focal cites a field than the average field does.
# Art sends 20% of its citations to Biology; the macro average is 35%,
# so Art's prominence toward Biology is -15 percentage points.

for field, score in sorted(orcp(tensor, "Art").scores.items(), key=lambda kv: -kv[1]):
    if score:
        print(f"ORCP_Art({field}) = {score:+.1f} pp")

# %% IRCP is the same computation with the direction reversed.

print("IRCP_Art(Biology) =", round(ircp(tensor, "Art")["Biology"], 1), "pp")

# %% Insularity: the share of a scope's citations that stay inside it.

print("NLP intra-field %:", intra_field_pct(index, scope_nlp(index)))
print("mean fields/paper:", mean_fields_per_paper(index))

# %% Citation bins group papers by total incoming citations.

for count in (0, 7, 450, 5000):
    print(f"{count:>5} citations -> bin {assign_citation_bin(count).label}")

# %% Three-year centered moving average, truncating at series edges.

series = {2000: 0.0, 2001: 3.0, 2002: 6.0}
print("smoothed", moving_average(series))
