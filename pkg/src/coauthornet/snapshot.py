"""Line-delimited snapshot files for a co-author index.

Layout (UTF-8, LF line endings)::

    {"built_at": ..., "format_version": 1, "record_count": N, "repository_id": ...}
    {"authors": [{"canonical": ..., "display": ...}, ...], "datestamp": ..., "ddc": [...], "record_id": ...}
    ...
    fnv64:<16 lower-case hex digits>

The checksum is 64-bit FNV-1a over every byte preceding the checksum line.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

from .extract import CanonicalName, DdcClass, Publication
from .index import IndexSnapshot

FORMAT_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF
_CHECKSUM_RE = re.compile(rb"^fnv64:([0-9a-f]{16})$")


class SnapshotError(Exception):
    pass


class VersionMismatch(SnapshotError):
    def __init__(self, found, expected=FORMAT_VERSION):
        super().__init__(f"snapshot format_version {found!r}, expected {expected}")
        self.found = found
        self.expected = expected


class CorruptSnapshot(SnapshotError):
    pass


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


def _iso(value: Optional[datetime]) -> Optional[str]:
    if value is None:
        return None
    return value.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _from_iso(value: Optional[str]) -> Optional[datetime]:
    if value is None:
        return None
    return datetime.fromisoformat(value.replace("Z", "+00:00")).astimezone(timezone.utc)


def _line(obj) -> bytes:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"


def dumps(snapshot: IndexSnapshot) -> bytes:
    parts = [
        _line(
            {
                "format_version": snapshot.format_version,
                "repository_id": snapshot.repository_id,
                "built_at": _iso(snapshot.built_at),
                "record_count": len(snapshot.publications),
            }
        )
    ]
    for record_id in sorted(snapshot.publications):
        pub = snapshot.publications[record_id]
        parts.append(
            _line(
                {
                    "record_id": pub.record_id,
                    "authors": [{"canonical": a.canonical, "display": a.display} for a in pub.authors],
                    "ddc": pub.ddc_codes,
                    "datestamp": _iso(pub.datestamp),
                }
            )
        )
    body = b"".join(parts)
    return body + b"fnv64:%016x\n" % fnv1a_64(body)


def loads(data: bytes) -> IndexSnapshot:
    if not data.endswith(b"\n"):
        raise CorruptSnapshot("snapshot is truncated (no trailing newline)")
    cut = data.rfind(b"\n", 0, len(data) - 1) + 1
    body, checksum_line = data[:cut], data[cut:-1]
    match = _CHECKSUM_RE.match(checksum_line)
    if not match or not body:
        raise CorruptSnapshot("snapshot is truncated (missing checksum line)")
    if int(match.group(1), 16) != fnv1a_64(body):
        raise CorruptSnapshot("snapshot checksum mismatch")

    lines = body.split(b"\n")[:-1]
    try:
        header = json.loads(lines[0])
        version = header["format_version"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptSnapshot(f"unreadable snapshot header: {exc}") from None
    if version != FORMAT_VERSION:
        raise VersionMismatch(version)

    try:
        publications = {}
        for raw in lines[1:]:
            obj = json.loads(raw)
            pub = Publication(
                record_id=obj["record_id"],
                authors=tuple(CanonicalName(a["canonical"], a["display"]) for a in obj["authors"]),
                ddc_classes=frozenset(DdcClass(code) for code in obj["ddc"]),
                datestamp=_from_iso(obj["datestamp"]),
            )
            if pub.record_id in publications:
                raise CorruptSnapshot(f"duplicate record {pub.record_id!r}")
            publications[pub.record_id] = pub
        if header["record_count"] != len(publications):
            raise CorruptSnapshot("record count does not match header")
        return IndexSnapshot(
            repository_id=header["repository_id"],
            publications=publications,
            built_at=_from_iso(header["built_at"]),
            format_version=version,
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptSnapshot(f"malformed snapshot record: {exc}") from None


def save(snapshot: IndexSnapshot, path: Union[str, Path]) -> Path:
    """Atomically write ``snapshot`` to ``path``; OSError propagates."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(dumps(snapshot))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load(path: Union[str, Path]) -> IndexSnapshot:
    return loads(Path(path).read_bytes())
