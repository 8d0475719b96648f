"""Field taxonomies: top-level fields, CS subfields, NLP subfields.

A :class:`FieldScheme` is an ordered, immutable list of canonical label
strings. The three built-in schemes are loaded from editable data files
shipped with the package; ad-hoc schemes (e.g. two-field toys in tests)
can be constructed directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from .errors import SchemeError


class SchemeKind(enum.Enum):
    TOP_LEVEL = "top-level"
    CS_SUBFIELD = "cs-subfield"
    NLP_SUBFIELD = "nlp-subfield"


# Expected sizes of the built-in taxonomies.
_BUILTIN_SIZES = {
    SchemeKind.TOP_LEVEL: 23,
    SchemeKind.CS_SUBFIELD: 16,
    SchemeKind.NLP_SUBFIELD: 25,
}

_BUILTIN_FILES = {
    SchemeKind.TOP_LEVEL: "top_level_fields.txt",
    SchemeKind.CS_SUBFIELD: "cs_subfields.txt",
    SchemeKind.NLP_SUBFIELD: "nlp_subfields.txt",
}


@dataclass(frozen=True)
class FieldLabel:
    """A canonical field label together with the scheme it belongs to."""

    scheme: SchemeKind
    name: str


class FieldScheme:
    """An ordered taxonomy of field labels.

    Label order is significant: it fixes bit positions in packed per-paper
    label columns and axis order in flow tensors.
    """

    def __init__(self, name: str, labels: Iterable[str], kind: SchemeKind | None = None):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise SchemeError(f"scheme {name!r} has duplicate labels")
        if not labels:
            raise SchemeError(f"scheme {name!r} is empty")
        self.name = name
        self.kind = kind
        self.labels = labels
        self._index = {label: i for i, label in enumerate(labels)}

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FieldScheme) and self.labels == other.labels

    def __repr__(self) -> str:
        return f"FieldScheme({self.name!r}, {len(self.labels)} labels)"

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise SchemeError(f"unknown field label {label!r} in scheme {self.name!r}") from None

    def field_label(self, label: str) -> FieldLabel:
        if label not in self._index:
            raise SchemeError(f"unknown field label {label!r} in scheme {self.name!r}")
        return FieldLabel(self.kind or SchemeKind.TOP_LEVEL, label)

    def bits_of(self, labels: Iterable[str]) -> int:
        """Pack a set of labels into an integer bitset (bit i = labels[i])."""
        bits = 0
        for label in labels:
            bits |= 1 << self.index(label)
        return bits

    def labels_of(self, bits: int) -> tuple[str, ...]:
        """Unpack a bitset back into label strings."""
        return tuple(label for i, label in enumerate(self.labels) if bits >> i & 1)


def _read_label_file(text: str) -> list[str]:
    labels = []
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            labels.append(line)
    return labels


def load_scheme(path: str | Path, name: str | None = None, kind: SchemeKind | None = None) -> FieldScheme:
    """Load a scheme from a label file (one label per line, '#' comments)."""
    path = Path(path)
    labels = _read_label_file(path.read_text(encoding="utf-8"))
    return FieldScheme(name or path.stem, labels, kind=kind)


def _load_builtin(kind: SchemeKind) -> FieldScheme:
    text = resources.files("citefield.data").joinpath(_BUILTIN_FILES[kind]).read_text(encoding="utf-8")
    labels = _read_label_file(text)
    expected = _BUILTIN_SIZES[kind]
    if len(labels) != expected:
        raise SchemeError(
            f"built-in {kind.value} scheme must have exactly {expected} labels, found {len(labels)}"
        )
    return FieldScheme(kind.value, labels, kind=kind)


_CACHE: dict[SchemeKind, FieldScheme] = {}


def top_level_scheme() -> FieldScheme:
    """The 23 top-level fields of study."""
    if SchemeKind.TOP_LEVEL not in _CACHE:
        _CACHE[SchemeKind.TOP_LEVEL] = _load_builtin(SchemeKind.TOP_LEVEL)
    return _CACHE[SchemeKind.TOP_LEVEL]


def cs_subfield_scheme() -> FieldScheme:
    """The 16 CS subfields (ML and the rest of AI listed separately)."""
    if SchemeKind.CS_SUBFIELD not in _CACHE:
        _CACHE[SchemeKind.CS_SUBFIELD] = _load_builtin(SchemeKind.CS_SUBFIELD)
    return _CACHE[SchemeKind.CS_SUBFIELD]


def nlp_subfield_scheme() -> FieldScheme:
    """The 25 NLP subfield categories (24 research areas + shared tasks)."""
    if SchemeKind.NLP_SUBFIELD not in _CACHE:
        _CACHE[SchemeKind.NLP_SUBFIELD] = _load_builtin(SchemeKind.NLP_SUBFIELD)
    return _CACHE[SchemeKind.NLP_SUBFIELD]


COMPUTER_SCIENCE = "Computer Science"
