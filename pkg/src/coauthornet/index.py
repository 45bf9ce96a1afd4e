"""Co-author index: publications plus per-partition weighted co-author graphs."""

from __future__ import annotations

import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import combinations
from typing import Dict, Iterator, List, Optional, Tuple

from .extract import Publication, is_ddc_code

logger = logging.getLogger(__name__)

REPOSITORY_WIDE = "repository_wide"
DDC_MAIN = "ddc_main"
DDC_EXACT = "ddc_exact"

DEFAULT_MAX_PAIR_AUTHORS = 50


@dataclass(frozen=True, order=True)
class PartitionKey:
    kind: str
    code: Optional[str] = None

    def __post_init__(self):
        if self.kind == REPOSITORY_WIDE:
            if self.code is not None:
                raise ValueError("repository_wide partition takes no code")
        elif self.kind in (DDC_MAIN, DDC_EXACT):
            if not is_ddc_code(self.code or ""):
                raise ValueError(f"invalid DDC code {self.code!r}")
            if self.kind == DDC_MAIN and not self.code.endswith("00"):
                raise ValueError(f"main class code must end in 00: {self.code!r}")
        else:
            raise ValueError(f"unknown partition kind {self.kind!r}")

    @classmethod
    def repository_wide(cls) -> "PartitionKey":
        return cls(REPOSITORY_WIDE)

    @classmethod
    def ddc_main(cls, code: str) -> "PartitionKey":
        return cls(DDC_MAIN, code[0] + "00" if len(code) >= 1 else code)

    @classmethod
    def ddc_exact(cls, code: str) -> "PartitionKey":
        return cls(DDC_EXACT, code)

    def __str__(self) -> str:
        return self.kind if self.code is None else f"{self.kind}:{self.code}"


def partitions_of(pub: Publication) -> List[PartitionKey]:
    keys = {PartitionKey.repository_wide()}
    for ddc in pub.ddc_classes:
        keys.add(PartitionKey.ddc_exact(ddc.code))
        keys.add(PartitionKey.ddc_main(ddc.code))
    return sorted(keys)


@dataclass
class CoauthorGraph:
    """Undirected weighted graph keyed by canonical author names.

    ``adjacency[a][b]`` is the number of publications shared by ``a`` and
    ``b``; ``publication_count[a]`` the number of publications of ``a``.
    Every node has a ``publication_count`` entry, isolated nodes included.
    """

    adjacency: Dict[str, Dict[str, int]] = field(default_factory=dict)
    publication_count: Dict[str, int] = field(default_factory=dict)
    display: Dict[str, str] = field(default_factory=dict)

    @property
    def nodes(self) -> List[str]:
        return sorted(self.publication_count)

    def __len__(self) -> int:
        return len(self.publication_count)

    def weight(self, a: str, b: str) -> int:
        return self.adjacency.get(a, {}).get(b, 0)

    def neighbors(self, node: str) -> Dict[str, int]:
        return self.adjacency.get(node, {})

    def edges(self) -> Iterator[Tuple[str, str, int]]:
        """Each undirected edge once, as ``(a, b, weight)`` with ``a < b``."""
        for a in sorted(self.adjacency):
            for b, w in sorted(self.adjacency[a].items()):
                if a < b:
                    yield a, b, w

    def number_of_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency.values()) // 2

    def induced(self, nodes) -> "CoauthorGraph":
        keep = set(nodes) & set(self.publication_count)
        return CoauthorGraph(
            adjacency={
                a: {b: w for b, w in self.adjacency.get(a, {}).items() if b in keep}
                for a in keep
                if any(b in keep for b in self.adjacency.get(a, {}))
            },
            publication_count={a: self.publication_count[a] for a in keep},
            display={a: self.display.get(a, a) for a in keep},
        )

    def check_invariants(self) -> None:
        for a, nbrs in self.adjacency.items():
            assert a in self.publication_count, f"edge endpoint {a!r} is not a node"
            assert nbrs, f"empty adjacency entry for {a!r}"
            for b, w in nbrs.items():
                assert a != b, f"self-loop on {a!r}"
                assert b in self.publication_count, f"edge endpoint {b!r} is not a node"
                assert isinstance(w, int) and w >= 1, f"bad weight {w!r} on {a!r}-{b!r}"
                assert self.adjacency[b][a] == w, f"asymmetric weight on {a!r}-{b!r}"
        assert all(c >= 1 for c in self.publication_count.values())


@dataclass(frozen=True)
class IngestDelta:
    edges_added: int = 0
    edges_incremented: int = 0


class _Partition:
    def __init__(self):
        self.adjacency: Dict[str, Dict[str, int]] = {}
        self.pubs: Dict[str, int] = {}
        self.displays: Dict[str, Counter] = {}

    def apply(self, pub: Publication, pairs, sign: int) -> Tuple[int, int]:
        added = incremented = 0
        for a, b in pairs:
            w = self.adjacency.get(a, {}).get(b, 0) + sign
            if w > 0:
                if w == 1 and sign > 0:
                    added += 1
                elif sign > 0:
                    incremented += 1
                self.adjacency.setdefault(a, {})[b] = w
                self.adjacency.setdefault(b, {})[a] = w
            else:
                for x, y in ((a, b), (b, a)):
                    del self.adjacency[x][y]
                    if not self.adjacency[x]:
                        del self.adjacency[x]
        for author in pub.authors:
            name = author.canonical
            count = self.pubs.get(name, 0) + sign
            displays = self.displays.setdefault(name, Counter())
            displays[author.display] += sign
            if displays[author.display] <= 0:
                del displays[author.display]
            if count > 0:
                self.pubs[name] = count
            else:
                del self.pubs[name]
                del self.displays[name]
        return added, incremented

    def graph(self) -> CoauthorGraph:
        return CoauthorGraph(
            adjacency={a: dict(nbrs) for a, nbrs in self.adjacency.items()},
            publication_count=dict(self.pubs),
            display={
                name: min(counts.items(), key=lambda item: (-item[1], item[0]))[0]
                for name, counts in self.displays.items()
            },
        )

    def __bool__(self) -> bool:
        return bool(self.pubs)


@dataclass
class IndexSnapshot:
    repository_id: str
    publications: Dict[str, Publication]
    built_at: datetime
    format_version: int = 1


class CoauthorIndex:
    """Publications of one repository and the co-author graphs they induce.

    Publications are the source of truth. Each partition's graph is kept up
    to date incrementally on every write; ``subgraph`` hands out detached
    copies that are memoized until the next write. One writer, many readers:
    every public method holds the index lock, so a reader never observes a
    half-applied publication.
    """

    def __init__(self, repository_id: str, max_pair_authors: Optional[int] = DEFAULT_MAX_PAIR_AUTHORS):
        self.repository_id = repository_id
        self.max_pair_authors = max_pair_authors
        self.capped_publications = 0
        self.generation = 0
        self._publications: Dict[str, Publication] = {}
        self._partitions: Dict[PartitionKey, _Partition] = {}
        self._views: Dict[PartitionKey, CoauthorGraph] = {}
        self._lock = threading.RLock()

    def _pairs(self, pub: Publication):
        names = pub.canonical_authors
        if self.max_pair_authors is not None and len(names) > self.max_pair_authors:
            names = names[: self.max_pair_authors]
        return list(combinations(names, 2))

    def _apply(self, pub: Publication, sign: int) -> IngestDelta:
        pairs = self._pairs(pub)
        added = incremented = 0
        for key in partitions_of(pub):
            part = self._partitions.setdefault(key, _Partition())
            a, i = part.apply(pub, pairs, sign)
            added += a
            incremented += i
            if not part:
                del self._partitions[key]
        return IngestDelta(added, incremented)

    def _touch(self) -> None:
        self.generation += 1
        self._views.clear()

    def ingest(self, pub: Publication) -> IngestDelta:
        """Insert or replace ``pub``; publications without authors are dropped."""
        with self._lock:
            previous = self._publications.get(pub.record_id)
            if previous == pub:
                return IngestDelta()
            if previous is not None:
                self._apply(previous, -1)
                del self._publications[pub.record_id]
                self._touch()
            if not pub.authors:
                return IngestDelta()
            if self.max_pair_authors is not None and len(pub.authors) > self.max_pair_authors:
                self.capped_publications += 1
                logger.warning(
                    "%s has %d authors; pairing only the first %d",
                    pub.record_id,
                    len(pub.authors),
                    self.max_pair_authors,
                )
            self._publications[pub.record_id] = pub
            delta = self._apply(pub, +1)
            self._touch()
            return delta

    def retract(self, record_id: str) -> bool:
        with self._lock:
            pub = self._publications.pop(record_id, None)
            if pub is None:
                return False
            self._apply(pub, -1)
            self._touch()
            return True

    def subgraph(self, key: PartitionKey) -> CoauthorGraph:
        """Graph of one partition; unknown partitions give an empty graph.

        The returned graph is shared between callers until the next write
        and must be treated as read-only.
        """
        with self._lock:
            view = self._views.get(key)
            if view is None:
                part = self._partitions.get(key)
                view = part.graph() if part is not None else CoauthorGraph()
                self._views[key] = view
            return view

    def view(self, key: PartitionKey) -> Tuple[int, CoauthorGraph]:
        """``(generation, subgraph(key))`` read atomically."""
        with self._lock:
            return self.generation, self.subgraph(key)

    def partitions(self) -> List[PartitionKey]:
        with self._lock:
            return sorted(self._partitions)

    @property
    def publications(self) -> Dict[str, Publication]:
        with self._lock:
            return dict(self._publications)

    def __len__(self) -> int:
        return len(self._publications)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._publications

    def snapshot(self) -> IndexSnapshot:
        with self._lock:
            return IndexSnapshot(
                repository_id=self.repository_id,
                publications=dict(self._publications),
                built_at=datetime.now(timezone.utc),
            )

    @classmethod
    def from_snapshot(cls, snapshot: IndexSnapshot, **kwargs) -> "CoauthorIndex":
        index = cls(snapshot.repository_id, **kwargs)
        for record_id in sorted(snapshot.publications):
            index.ingest(snapshot.publications[record_id])
        return index
