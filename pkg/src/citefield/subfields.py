"""NLP subfield classification and subfield-level citation analyses.

Papers in the NLP corpus slice are assigned subfield categories by
matching normalized title bigrams against an editable lexicon
(``bigram<TAB>category`` lines). Analyses mirror the field-level ones:
flow percentages into CS subfields and non-CS fields, per-subfield
diversity deltas against the NLP yearly average, and insularity.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import CorpusIndex, Scope, scope_nlp
from .errors import SchemeError, UndefinedMetricError
from .flowgraph import FlowTensor, build_flow_tensor, row_share_matrix
from .metrics import cfdi, intra_field_pct
from .schemes import COMPUTER_SCIENCE, FieldScheme, nlp_subfield_scheme

logger = logging.getLogger(__name__)

MAX_LEXICON_ENTRIES = 200

_TOKEN_RE = re.compile(r"[^\w\s]|_", re.UNICODE)


def normalize_title(title: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _TOKEN_RE.sub(" ", title.lower()).split()


def title_bigrams(title: str) -> list[str]:
    tokens = normalize_title(title)
    return [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


# ---------------------------------------------------------------------------
# Bigram statistics
# ---------------------------------------------------------------------------


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("citefield.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def top_bigrams(
    titles: Iterable[str],
    k: int = 200,
    stopwords: frozenset[str] | None = None,
) -> list[tuple[str, int]]:
    """Exact top-``k`` title bigrams by frequency, ties broken lexicographically.

    Bigrams made of two stopwords are excluded. Returns fewer than ``k``
    pairs when the titles contain fewer distinct bigrams.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    counts: dict[str, int] = {}
    for title in titles:
        tokens = normalize_title(title)
        for a, b in zip(tokens, tokens[1:]):
            if a in stopwords and b in stopwords:
                continue
            bigram = f"{a} {b}"
            counts[bigram] = counts.get(bigram, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


# ---------------------------------------------------------------------------
# Lexicon
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LexiconEntry:
    bigram: str
    category: str
    note: str = ""


class SubfieldLexicon:
    """Ordered mapping of normalized title bigrams to subfield categories."""

    def __init__(self, entries: Sequence[LexiconEntry], scheme: FieldScheme | None = None):
        self.scheme = scheme or nlp_subfield_scheme()
        seen: set[str] = set()
        for entry in entries:
            if entry.bigram in seen:
                raise SchemeError(f"duplicate lexicon bigram {entry.bigram!r}")
            seen.add(entry.bigram)
            if entry.category not in self.scheme:
                raise SchemeError(
                    f"lexicon category {entry.category!r} is not in scheme {self.scheme.name!r}"
                )
        if len(entries) > MAX_LEXICON_ENTRIES:
            raise SchemeError(f"lexicon has {len(entries)} entries; at most {MAX_LEXICON_ENTRIES} allowed")
        self.entries = tuple(entries)
        self._by_bigram = {e.bigram: e.category for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def categories_for(self, bigram: str) -> str | None:
        return self._by_bigram.get(bigram)

    @classmethod
    def load(cls, path: str | Path | None = None, scheme: FieldScheme | None = None) -> "SubfieldLexicon":
        """Read ``bigram<TAB>category[<TAB>note]`` lines; '#' starts a comment."""
        if path is None:
            text = resources.files("citefield.data").joinpath("subfield_lexicon.tsv").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        entries = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise SchemeError(f"lexicon line {lineno}: expected 'bigram<TAB>category'")
            bigram = " ".join(normalize_title(parts[0]))
            entries.append(LexiconEntry(bigram, parts[1].strip(), parts[2].strip() if len(parts) > 2 else ""))
        return cls(entries, scheme)


def classify_subfield(title: str, lexicon: SubfieldLexicon) -> set[str]:
    """All categories whose lexicon bigram occurs in the normalized title."""
    found: set[str] = set()
    for bigram in title_bigrams(title):
        category = lexicon.categories_for(bigram)
        if category is not None:
            found.add(category)
    return found


def label_papers(index: CorpusIndex, lexicon: SubfieldLexicon) -> np.ndarray:
    """Per-paper subfield bitsets; only NLP-scope papers receive labels."""
    bits = np.zeros(index.n_papers, dtype=np.uint32)
    scheme = lexicon.scheme
    for paper in np.flatnonzero(index.is_nlp):
        labels = classify_subfield(index.titles[paper], lexicon)
        if labels:
            bits[paper] = scheme.bits_of(labels)
    return bits


def subfield_scope(index: CorpusIndex, bits: np.ndarray, subfield: str, scheme: FieldScheme | None = None) -> Scope:
    scheme = scheme or nlp_subfield_scheme()
    mask = (bits & np.uint32(1 << scheme.index(subfield))) != 0
    return Scope(subfield, mask)


# ---------------------------------------------------------------------------
# Subfield analyses
# ---------------------------------------------------------------------------


def subfield_flow_tensor(
    index: CorpusIndex,
    lexicon: SubfieldLexicon,
    target: str = "cs",
    *,
    subfield_bits: np.ndarray | None = None,
) -> FlowTensor:
    """Subfield-by-target-field tensor; ``target`` is ``"cs"`` or ``"non_cs"``."""
    bits = subfield_bits if subfield_bits is not None else label_papers(index, lexicon)
    if target == "cs":
        tgt_bits = index.cs_bits
        tgt_labels = index.cs_scheme.labels
    elif target == "non_cs":
        tgt_labels = tuple(f for f in index.scheme.labels if f != COMPUTER_SCIENCE)
        # drop the CS bit and repack the remaining bits contiguously
        tgt_bits = _drop_bit(index.field_bits, index.scheme.index(COMPUTER_SCIENCE))
    else:
        raise ValueError("target must be 'cs' or 'non_cs'")
    return build_flow_tensor(
        index,
        src_bits=bits,
        src_labels=lexicon.scheme.labels,
        tgt_bits=tgt_bits,
        tgt_labels=tgt_labels,
        src_axis="custom",
        tgt_axis="custom",
    )


def _drop_bit(bits: np.ndarray, position: int) -> np.ndarray:
    """Remove one bit position, shifting higher bits down by one."""
    low_mask = np.uint32((1 << position) - 1)
    low = bits & low_mask
    high = (bits >> np.uint32(position + 1)) << np.uint32(position)
    return low | high


def subfield_flow_matrix(
    index: CorpusIndex,
    lexicon: SubfieldLexicon,
    target: str = "cs",
    years: tuple[int, int] | int | None = None,
) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    """Row-percentage matrix: share of each subfield's citations per target field.

    Row denominators are the subfield's total citations into the target
    scope (all CS subfields, or all non-CS fields), so every returned row
    sums to 100. Subfields with a zero denominator are omitted.
    """
    tensor = subfield_flow_tensor(index, lexicon, target)
    rows, cols, pct = row_share_matrix(tensor, years)
    dropped = [label for label in tensor.src_labels if label not in rows]
    if dropped:
        logger.warning("subfield flow: no citations in scope for %s", ", ".join(dropped))
    return rows, cols, pct


def subfield_cfdi_delta(
    index: CorpusIndex,
    lexicon: SubfieldLexicon,
    year: int,
    *,
    subfield_bits: np.ndarray | None = None,
) -> dict[str, float]:
    """Per-subfield outgoing CFDI minus the NLP-wide CFDI for one year.

    Both sides aggregate the citations made in ``year`` over the top-level
    fields. Subfields with no outgoing citations that year are omitted;
    the NLP-wide average itself maps to the zero line.
    """
    bits = subfield_bits if subfield_bits is not None else label_papers(index, lexicon)
    nlp_tensor = build_flow_tensor(
        index, index.scheme, src_scope=scope_nlp(index), src_axis="scope"
    )
    nlp_counts = nlp_tensor.matrix(year)[0]
    if nlp_counts.sum() == 0:
        raise UndefinedMetricError(f"NLP scope has no outgoing citations in {year}")
    nlp_cfdi = cfdi(nlp_counts)

    sub_tensor = build_flow_tensor(
        index,
        src_bits=bits,
        src_labels=lexicon.scheme.labels,
        tgt_bits=index.field_bits,
        tgt_labels=index.scheme.labels,
        src_axis="custom",
        tgt_axis="custom",
    )
    m = sub_tensor.matrix(year)
    deltas: dict[str, float] = {}
    for i, subfield in enumerate(sub_tensor.src_labels):
        if m[i].sum() == 0:
            continue
        deltas[subfield] = cfdi(m[i]) - nlp_cfdi
    return deltas


def subfield_intra_pct(
    index: CorpusIndex,
    lexicon: SubfieldLexicon,
    subfield: str,
    years: tuple[int, int] | int | None = None,
    *,
    subfield_bits: np.ndarray | None = None,
) -> float:
    """Share of a subfield's citations that stay inside the same subfield."""
    bits = subfield_bits if subfield_bits is not None else label_papers(index, lexicon)
    return intra_field_pct(index, subfield_scope(index, bits, subfield, lexicon.scheme), years)
