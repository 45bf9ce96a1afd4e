"""Parsing of OAI-PMH 2.0 response documents (Identify and ListRecords)."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from datetime import datetime, timezone
from typing import Optional, Union

from .errors import ProtocolError, UnsupportedVersion, oai_error
from .models import DC_ELEMENTS, ListRecordsPage, OaiRecord, RepositoryInfo

OAI_NS = "http://www.openarchives.org/OAI/2.0/"
OAI_DC_NS = "http://www.openarchives.org/OAI/2.0/oai_dc/"
DC_NS = "http://purl.org/dc/elements/1.1/"

NS = {"oai": OAI_NS, "oai_dc": OAI_DC_NS, "dc": DC_NS}

_DC_SET = frozenset(DC_ELEMENTS)


def _root(document: Union[str, bytes]) -> ET.Element:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise ProtocolError(f"response is not well-formed XML: {exc}") from None
    if root.tag != f"{{{OAI_NS}}}OAI-PMH":
        raise ProtocolError(f"unexpected root element {root.tag!r}")
    error = root.find("oai:error", NS)
    if error is not None:
        raise oai_error(error.get("code", "unknown"), (error.text or "").strip())
    return root


def _text(elem: Optional[ET.Element]) -> Optional[str]:
    if elem is None or elem.text is None:
        return None
    return elem.text.strip()


def parse_utc(value: str) -> datetime:
    """Lenient UTC datestamp parsing (day granularity, seconds, optional fraction)."""
    value = value.strip()
    try:
        if len(value) == 10:
            return datetime.strptime(value, "%Y-%m-%d").replace(tzinfo=timezone.utc)
        if value.endswith("Z"):
            value = value[:-1] + "+00:00"
        stamp = datetime.fromisoformat(value)
    except ValueError:
        raise ProtocolError(f"malformed datestamp {value!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def parse_identify(document: Union[str, bytes]) -> RepositoryInfo:
    root = _root(document)
    identify = root.find("oai:Identify", NS)
    if identify is None:
        raise ProtocolError("response carries no Identify element")
    fields = {}
    for name in ("repositoryName", "baseURL", "protocolVersion", "earliestDatestamp", "granularity"):
        value = _text(identify.find(f"oai:{name}", NS))
        if not value:
            raise ProtocolError(f"Identify response lacks {name}")
        fields[name] = value
    if fields["protocolVersion"] != "2.0":
        raise UnsupportedVersion(fields["protocolVersion"])
    return RepositoryInfo(
        repository_name=fields["repositoryName"],
        base_url=fields["baseURL"],
        protocol_version=fields["protocolVersion"],
        earliest_datestamp=fields["earliestDatestamp"],
        granularity=fields["granularity"],
    )


def _parse_record(elem: ET.Element) -> OaiRecord:
    header = elem.find("oai:header", NS)
    if header is None:
        raise ProtocolError("record without header")
    identifier = _text(header.find("oai:identifier", NS))
    datestamp = _text(header.find("oai:datestamp", NS))
    if not identifier or not datestamp:
        raise ProtocolError("record header lacks identifier or datestamp")
    set_specs = [s.text.strip() for s in header.findall("oai:setSpec", NS) if s.text and s.text.strip()]
    deleted = header.get("status") == "deleted"

    dc_fields = {}
    dc = elem.find("oai:metadata/oai_dc:dc", NS)
    if dc is not None:
        for child in dc:
            if not child.tag.startswith(f"{{{DC_NS}}}"):
                continue
            name = child.tag[len(DC_NS) + 2 :]
            value = (child.text or "").strip()
            if name in _DC_SET and value:
                dc_fields.setdefault(name, []).append(value)

    return OaiRecord(
        identifier=identifier,
        datestamp=parse_utc(datestamp),
        set_specs=set_specs,
        deleted=deleted,
        dc_fields=dc_fields,
        raw_xml=ET.tostring(elem, encoding="unicode"),
    )


def _int_attr(elem: ET.Element, name: str) -> Optional[int]:
    value = elem.get(name)
    if value is None or not value.strip():
        return None
    try:
        return int(value)
    except ValueError:
        raise ProtocolError(f"resumptionToken attribute {name}={value!r} is not an integer") from None


def parse_list_records(document: Union[str, bytes]) -> ListRecordsPage:
    """Parse one ListRecords response into a page of records.

    Raises ``OaiError`` (or a subclass) when the repository returned an
    ``<error>`` element and ``ProtocolError`` when there is no ListRecords
    payload at all. An absent or empty ``resumptionToken`` marks the final
    page.
    """
    root = _root(document)
    listing = root.find("oai:ListRecords", NS)
    if listing is None:
        raise ProtocolError("response carries neither ListRecords nor an OAI error")

    records = [_parse_record(r) for r in listing.findall("oai:record", NS)]

    token = None
    complete_list_size = cursor = None
    token_elem = listing.find("oai:resumptionToken", NS)
    if token_elem is not None:
        token = _text(token_elem) or None
        complete_list_size = _int_attr(token_elem, "completeListSize")
        cursor = _int_attr(token_elem, "cursor")

    if not records and token is not None:
        raise ProtocolError("non-final ListRecords page without records")

    response_date = _text(root.find("oai:responseDate", NS))
    return ListRecordsPage(
        records=records,
        resumption_token=token,
        complete_list_size=complete_list_size,
        cursor=cursor,
        response_date=parse_utc(response_date) if response_date else None,
    )
