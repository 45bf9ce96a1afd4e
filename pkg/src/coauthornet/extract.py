"""From harvested Dublin Core records to publications and co-author pairs."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime
from itertools import combinations
from typing import FrozenSet, Iterable, List, Optional, Pattern, Sequence, Set, Tuple, Union

from .harvester.models import OaiRecord


class EmptyName(ValueError):
    """Raised for author strings that contain nothing but whitespace."""


@dataclass(frozen=True)
class CanonicalName:
    canonical: str
    display: str

    def __post_init__(self):
        if not self.canonical:
            raise EmptyName("canonical name must not be empty")


@dataclass(frozen=True, order=True)
class DdcClass:
    code: str

    def __post_init__(self):
        if not is_ddc_code(self.code):
            raise ValueError(f"not a DDC code: {self.code!r}")

    @property
    def level(self) -> str:
        if self.code.endswith("00"):
            return "main"
        if self.code.endswith("0"):
            return "division"
        return "section"

    @property
    def main_class(self) -> str:
        return self.code[0] + "00"


def is_ddc_code(code: str) -> bool:
    return isinstance(code, str) and len(code) == 3 and code.isascii() and code.isdigit()


@dataclass(frozen=True)
class Publication:
    record_id: str
    authors: Tuple[CanonicalName, ...] = ()
    ddc_classes: FrozenSet[DdcClass] = field(default_factory=frozenset)
    datestamp: Optional[datetime] = None

    def __post_init__(self):
        if not self.record_id:
            raise ValueError("record_id must not be empty")
        seen = set()
        for author in self.authors:
            if author.canonical in seen:
                raise ValueError(f"duplicate author {author.canonical!r} in {self.record_id}")
            seen.add(author.canonical)

    @property
    def canonical_authors(self) -> List[str]:
        return [a.canonical for a in self.authors]

    @property
    def ddc_codes(self) -> List[str]:
        return sorted(d.code for d in self.ddc_classes)


@dataclass(frozen=True)
class Deletion:
    record_id: str


_WS = re.compile(r"\s+")


def _collapse(text: str) -> str:
    return _WS.sub(" ", unicodedata.normalize("NFC", text)).strip()


def normalize_author_name(raw: str) -> CanonicalName:
    """Canonicalize a ``dc:creator`` string to ``"last, first"`` lower-case form.

    ``"Last, First"`` keeps its order; a comma-less name with two or more
    tokens takes the final token as the surname. Identity is the exact
    canonical string, so ``"J. Doe"`` and ``"Jane Doe"`` remain
    distinct authors.
    """
    text = _collapse(raw or "")
    if not text:
        raise EmptyName(f"empty author name: {raw!r}")

    if "," in text:
        last, _, rest = text.partition(",")
        # stray commas at either end of a part carry no name information
        last, rest = last.strip(" ,"), rest.strip(" ,")
        if not last or not rest:
            return normalize_author_name(last or rest)
        display = f"{last}, {rest}"
    else:
        tokens = text.split(" ")
        display = text if len(tokens) == 1 else f"{tokens[-1]}, {' '.join(tokens[:-1])}"

    return CanonicalName(canonical=unicodedata.normalize("NFC", display.casefold()), display=display)


DEFAULT_SUBJECT_PATTERNS: Tuple[Pattern[str], ...] = (
    re.compile(r"^\s*ddc\s*:\s*(\d{3})\s*$", re.IGNORECASE),
    re.compile(r"^\s*(\d{3})\s*$"),
)
DEFAULT_SET_PATTERNS: Tuple[Pattern[str], ...] = (re.compile(r"^ddc:(\d{3})$", re.IGNORECASE),)


def extract_ddc(
    record: OaiRecord,
    subject_patterns: Sequence[Pattern[str]] = DEFAULT_SUBJECT_PATTERNS,
    set_patterns: Sequence[Pattern[str]] = DEFAULT_SET_PATTERNS,
) -> Set[DdcClass]:
    """Collect DDC classes from ``dc:subject`` values and ``setSpec`` tokens.

    Each pattern must capture the three-digit code in group 1. Values that
    match nothing are ignored.
    """
    found = set()
    sources = ((record.dc_fields.get("subject", []), subject_patterns), (record.set_specs, set_patterns))
    for values, patterns in sources:
        for value in values:
            for pattern in patterns:
                match = pattern.match(value)
                if match and is_ddc_code(match.group(1)):
                    found.add(DdcClass(match.group(1)))
                    break
    return found


def extract_publication(record: OaiRecord, **ddc_options) -> Union[Publication, Deletion]:
    if record.deleted:
        return Deletion(record.identifier)
    authors = []
    seen = set()
    for raw in record.dc_fields.get("creator", []):
        try:
            name = normalize_author_name(raw)
        except EmptyName:
            continue
        if name.canonical not in seen:
            seen.add(name.canonical)
            authors.append(name)
    return Publication(
        record_id=record.identifier,
        authors=tuple(authors),
        ddc_classes=frozenset(extract_ddc(record, **ddc_options)),
        datestamp=record.datestamp,
    )


def coauthor_pairs(pub: Publication, max_authors: Optional[int] = None) -> Set[FrozenSet[str]]:
    """Unordered pairs of distinct canonical authors of ``pub``.

    With ``max_authors`` only the first that many authors are paired.
    """
    names: Iterable[str] = pub.canonical_authors
    if max_authors is not None:
        names = list(names)[:max_authors]
    return {frozenset(pair) for pair in combinations(names, 2)}
