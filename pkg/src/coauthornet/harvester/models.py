"""Data carriers for the OAI-PMH client."""

from __future__ import annotations

import enum
import re
import threading
import uuid
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Dict, List, Optional
from urllib.parse import urlparse

from .errors import ConfigError

DC_ELEMENTS = (
    "title",
    "creator",
    "subject",
    "description",
    "publisher",
    "contributor",
    "date",
    "type",
    "format",
    "identifier",
    "source",
    "language",
    "relation",
    "coverage",
    "rights",
)

_TOKEN_RE = re.compile(r"^[A-Za-z0-9_.!~*'()\-:]+$")
_DAY_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_SECOND_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")

DAY = "YYYY-MM-DD"
SECOND = "YYYY-MM-DDThh:mm:ssZ"


def datestamp_granularity(value: str) -> str:
    """Return the OAI granularity string of ``value`` or raise ConfigError."""
    if _DAY_RE.match(value):
        return DAY
    if _SECOND_RE.match(value):
        return SECOND
    raise ConfigError(f"not an OAI-PMH UTC datestamp: {value!r}")


def parse_datestamp(value: str) -> datetime:
    """Parse a day- or second-granularity UTC datestamp into an aware datetime."""
    value = value.strip()
    granularity = datestamp_granularity(value)
    fmt = "%Y-%m-%d" if granularity == DAY else "%Y-%m-%dT%H:%M:%SZ"
    try:
        return datetime.strptime(value, fmt).replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise ConfigError(f"invalid datestamp {value!r}: {exc}") from None


def format_datestamp(value: datetime, granularity: str = SECOND) -> str:
    value = value.astimezone(timezone.utc)
    if granularity == DAY:
        return value.strftime("%Y-%m-%d")
    return value.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class RepositoryConfig:
    base_url: str
    metadata_prefix: str = "oai_dc"
    set_spec: Optional[str] = None
    from_: Optional[str] = None
    until: Optional[str] = None
    polite_delay_ms: int = 1000
    max_retries: int = 5

    def __post_init__(self):
        parsed = urlparse(self.base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ConfigError(f"base_url must be an absolute http(s) URL: {self.base_url!r}")
        if not self.metadata_prefix or not _TOKEN_RE.match(self.metadata_prefix):
            raise ConfigError(f"invalid metadata_prefix: {self.metadata_prefix!r}")
        if self.set_spec is not None and not _TOKEN_RE.match(self.set_spec):
            raise ConfigError(f"invalid set_spec: {self.set_spec!r}")
        if not isinstance(self.polite_delay_ms, int) or self.polite_delay_ms < 0:
            raise ConfigError("polite_delay_ms must be a non-negative integer")
        if not isinstance(self.max_retries, int) or self.max_retries < 0:
            raise ConfigError("max_retries must be a non-negative integer")
        bounds = [v for v in (self.from_, self.until) if v is not None]
        granularities = {datestamp_granularity(v) for v in bounds}
        if len(granularities) > 1:
            raise ConfigError("from and until must share the same granularity")
        if len(bounds) == 2 and parse_datestamp(self.from_) > parse_datestamp(self.until):
            raise ConfigError("from must not be later than until")

    @classmethod
    def from_dict(cls, data: dict) -> "RepositoryConfig":
        known = {
            "base_url",
            "metadata_prefix",
            "set_spec",
            "from",
            "from_",
            "until",
            "polite_delay_ms",
            "max_retries",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown repository fields: {sorted(unknown)}")
        if "base_url" not in data:
            raise ConfigError("base_url is required")
        kwargs = dict(data)
        if "from" in kwargs:
            kwargs["from_"] = kwargs.pop("from")
        if kwargs.get("metadata_prefix") is None:
            kwargs.pop("metadata_prefix", None)
        for key in ("from_", "until"):
            # YAML loaders turn bare timestamps into date/datetime objects
            value = kwargs.get(key)
            if isinstance(value, datetime):
                kwargs[key] = format_datestamp(value if value.tzinfo else value.replace(tzinfo=timezone.utc))
            elif isinstance(value, date):
                kwargs[key] = value.isoformat()
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {
            "base_url": self.base_url,
            "metadata_prefix": self.metadata_prefix,
            "polite_delay_ms": self.polite_delay_ms,
            "max_retries": self.max_retries,
        }
        for key, value in (("set_spec", self.set_spec), ("from", self.from_), ("until", self.until)):
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class RepositoryInfo:
    repository_name: str
    base_url: str
    protocol_version: str
    earliest_datestamp: str
    granularity: str


@dataclass
class OaiRecord:
    identifier: str
    datestamp: datetime
    set_specs: List[str] = field(default_factory=list)
    deleted: bool = False
    dc_fields: Dict[str, List[str]] = field(default_factory=dict)
    raw_xml: str = ""


@dataclass
class ListRecordsPage:
    records: List[OaiRecord]
    resumption_token: Optional[str] = None
    complete_list_size: Optional[int] = None
    cursor: Optional[int] = None
    response_date: Optional[datetime] = None

    @property
    def is_final(self) -> bool:
        return self.resumption_token is None


class JobState(str, enum.Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    CANCELLED = "cancelled"

    @property
    def terminal(self) -> bool:
        return self in (JobState.COMPLETED, JobState.FAILED, JobState.CANCELLED)


_TRANSITIONS = {
    JobState.PENDING: {JobState.RUNNING},
    JobState.RUNNING: {JobState.COMPLETED, JobState.FAILED, JobState.CANCELLED},
}


class HarvestJob:
    """Mutable status of one harvest run.

    Counters and state are updated by the harvesting thread and may be read
    from others; ``snapshot()`` returns a consistent copy under the lock.
    A job whose ``last_resumption_token`` is preset at construction resumes
    the list from that token instead of issuing a fresh request.
    """

    def __init__(
        self,
        repository: RepositoryConfig,
        job_id: Optional[str] = None,
        last_resumption_token: Optional[str] = None,
        repository_id: Optional[str] = None,
    ):
        self.job_id = job_id or uuid.uuid4().hex
        self.repository = repository
        self.repository_id = repository_id
        self.state = JobState.PENDING
        self.records_received = 0
        self.records_ingested = 0
        self.last_resumption_token = last_resumption_token
        self.error: Optional[str] = None
        self.created_at = datetime.now(timezone.utc)
        self.finished_at: Optional[datetime] = None
        # responseDate of the first page served; the next incremental harvest starts there
        self.response_date: Optional[datetime] = None
        self._lock = threading.Lock()
        self._cancel = threading.Event()

    def transition(self, new_state: JobState, error: Optional[str] = None) -> None:
        with self._lock:
            if new_state not in _TRANSITIONS.get(self.state, ()):
                raise ValueError(f"illegal job transition {self.state.value} -> {new_state.value}")
            self.state = new_state
            if error is not None:
                self.error = error
            if new_state.terminal:
                self.finished_at = datetime.now(timezone.utc)

    def record_received(self) -> None:
        with self._lock:
            self.records_received += 1

    def record_ingested(self) -> None:
        with self._lock:
            if self.records_ingested >= self.records_received:
                raise ValueError("cannot ingest more records than were received")
            self.records_ingested += 1

    def set_token(self, token: Optional[str]) -> None:
        with self._lock:
            self.last_resumption_token = token

    def cancel(self) -> None:
        """Ask the harvest loop to stop at the next page boundary."""
        self._cancel.set()

    @property
    def cancel_requested(self) -> bool:
        return self._cancel.is_set()

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "job_id": self.job_id,
                "repository_id": self.repository_id,
                "state": self.state.value,
                "records_received": self.records_received,
                "records_ingested": self.records_ingested,
                "last_resumption_token": self.last_resumption_token,
                "error": self.error,
                "created_at": format_datestamp(self.created_at),
                "finished_at": format_datestamp(self.finished_at) if self.finished_at else None,
            }
