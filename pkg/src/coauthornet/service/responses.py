"""Centrality response documents in XML and JSON.

Both encodings carry the same values; floats are written with ``repr`` so
they round-trip exactly.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from importlib import resources
from typing import Optional, Tuple

from ..centrality import CentralityRanking

SCHEMA_RESOURCE = "schemas/centrality.xsd"


@dataclass(frozen=True)
class ResponseEntry:
    rank: int
    author: str
    raw: float
    normalized: float
    publication_count: int


@dataclass(frozen=True)
class CentralityResponse:
    repository_id: str
    partition_kind: str
    partition_code: Optional[str]
    edge_mode: str
    generated_at: str
    entries: Tuple[ResponseEntry, ...]

    @classmethod
    def from_ranking(
        cls,
        repository_id: str,
        ranking: CentralityRanking,
        generated_at: Optional[datetime] = None,
    ) -> "CentralityResponse":
        generated_at = (generated_at or datetime.now(timezone.utc)).astimezone(timezone.utc)
        return cls(
            repository_id=repository_id,
            partition_kind=ranking.partition.kind,
            partition_code=ranking.partition.code,
            edge_mode=ranking.edge_mode,
            generated_at=generated_at.strftime("%Y-%m-%dT%H:%M:%SZ"),
            entries=tuple(
                ResponseEntry(e.rank, e.display, e.raw, e.normalized, e.publication_count)
                for e in ranking.entries
            ),
        )

    def to_dict(self) -> dict:
        return {
            "repository_id": self.repository_id,
            "partition": {"kind": self.partition_kind, "code": self.partition_code},
            "edge_mode": self.edge_mode,
            "generated_at": self.generated_at,
            "entries": [asdict(e) for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CentralityResponse":
        data = json.loads(text)
        return cls(
            repository_id=data["repository_id"],
            partition_kind=data["partition"]["kind"],
            partition_code=data["partition"]["code"],
            edge_mode=data["edge_mode"],
            generated_at=data["generated_at"],
            entries=tuple(ResponseEntry(**e) for e in data["entries"]),
        )

    def to_xml(self) -> bytes:
        root = ET.Element(
            "centralityResult",
            {
                "repository": self.repository_id,
                "partitionKind": self.partition_kind,
                "mode": self.edge_mode,
                "generatedAt": self.generated_at,
            },
        )
        if self.partition_code is not None:
            root.set("partitionCode", self.partition_code)
        for e in self.entries:
            author = ET.SubElement(
                root,
                "author",
                {
                    "rank": str(e.rank),
                    "raw": repr(float(e.raw)),
                    "normalized": repr(float(e.normalized)),
                    "publications": str(e.publication_count),
                },
            )
            author.text = e.author
        ET.indent(root)
        return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"

    @classmethod
    def from_xml(cls, document) -> "CentralityResponse":
        root = ET.fromstring(document)
        if root.tag != "centralityResult":
            raise ValueError(f"unexpected root element {root.tag!r}")
        return cls(
            repository_id=root.get("repository"),
            partition_kind=root.get("partitionKind"),
            partition_code=root.get("partitionCode"),
            edge_mode=root.get("mode"),
            generated_at=root.get("generatedAt"),
            entries=tuple(
                ResponseEntry(
                    rank=int(a.get("rank")),
                    author=a.text or "",
                    raw=float(a.get("raw")),
                    normalized=float(a.get("normalized")),
                    publication_count=int(a.get("publications")),
                )
                for a in root.findall("author")
            ),
        )


def schema_text() -> bytes:
    return resources.files("coauthornet").joinpath(SCHEMA_RESOURCE).read_bytes()
