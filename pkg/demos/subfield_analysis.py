"""Title-bigram subfield classification and subfield-level analyses.

Run with:  python demos/subfield_analysis.py
"""

import json
import logging

from citefield import build_index
from citefield.subfields import (
    SubfieldLexicon,
    classify_subfield,
    subfield_flow_matrix,
    subfield_intra_pct,
    top_bigrams,
)

logging.basicConfig(level=logging.ERROR)  # hide empty-subfield warnings in the tour

# %% The most frequent title bigrams are the raw material for the lexicon.

titles = [
    "neural machine translation with attention",
    "statistical machine translation revisited",
    "machine translation for low resource languages",
    "sentiment analysis of product reviews",
    "aspect based sentiment analysis",
]
for bigram, count in top_bigrams(titles, k=5):
    print(f"{count}x  {bigram}")

# %% The shipped lexicon maps curated bigrams to subfield categories.

lexicon = SubfieldLexicon.load()
print("\n'Large Language Models in Machine Translation' ->",
      classify_subfield("Large Language Models in Machine Translation", lexicon))
print("'A Survey of Sentiment Analysis' ->",
      classify_subfield("A Survey of Sentiment Analysis", lexicon))

# %% Subfield flow shares: where does each subfield's citation mass go?

papers = [
    json.dumps({"id": "mt1", "title": "neural machine translation", "year": 2018,
                "fields": ["Computer Science"], "is_nlp": True}),
    json.dumps({"id": "mt2", "title": "machine translation decoding", "year": 2019,
                "fields": ["Computer Science"], "is_nlp": True}),
    json.dumps({"id": "sa1", "title": "sentiment analysis at scale", "year": 2019,
                "fields": ["Computer Science"], "is_nlp": True}),
    json.dumps({"id": "ling", "title": "", "year": 2000, "fields": ["Linguistics"]}),
    json.dumps({"id": "psy", "title": "", "year": 2000, "fields": ["Psychology"]}),
]
edges = [
    json.dumps({"src": "mt1", "tgt": "mt2"}),   # intra-subfield
    json.dumps({"src": "mt1", "tgt": "ling"}),
    json.dumps({"src": "mt2", "tgt": "ling"}),
    json.dumps({"src": "sa1", "tgt": "psy"}),
]
index, _ = build_index(papers, edges)

rows, cols, pct = subfield_flow_matrix(index, lexicon, target="non_cs")
for i, subfield in enumerate(rows):
    top = max(range(len(cols)), key=lambda j: pct[i, j])
    print(f"{subfield:<22} -> {cols[top]} {pct[i, top]:.0f}% of its non-CS citations")

# %% Insularity per subfield: citations staying inside the same subfield.

print("machine-translation intra %:",
      round(subfield_intra_pct(index, lexicon, "machine-translation"), 1))
