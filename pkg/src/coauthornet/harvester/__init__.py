"""OAI-PMH 2.0 harvesting client."""

from .client import OaiClient, RequestPacer, harvest, identify
from .errors import (
    BadResumptionToken,
    ConfigError,
    HarvestError,
    NetworkError,
    NoRecordsMatch,
    OaiError,
    ProtocolError,
    RetriesExhausted,
    UnsupportedVersion,
)
from .models import (
    HarvestJob,
    JobState,
    ListRecordsPage,
    OaiRecord,
    RepositoryConfig,
    RepositoryInfo,
)
from .parser import parse_identify, parse_list_records

__all__ = [
    "BadResumptionToken",
    "ConfigError",
    "HarvestError",
    "HarvestJob",
    "JobState",
    "ListRecordsPage",
    "NetworkError",
    "NoRecordsMatch",
    "OaiClient",
    "OaiError",
    "OaiRecord",
    "ProtocolError",
    "RepositoryConfig",
    "RepositoryInfo",
    "RequestPacer",
    "RetriesExhausted",
    "UnsupportedVersion",
    "harvest",
    "identify",
    "parse_identify",
    "parse_list_records",
]
