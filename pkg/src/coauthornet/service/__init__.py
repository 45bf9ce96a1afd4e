"""REST service, configuration and the operations behind them."""

from .config import ServiceConfig, load_config
from .core import CoauthorService, ServiceError, parse_partition
from .responses import CentralityResponse

__all__ = [
    "CentralityResponse",
    "CoauthorService",
    "ServiceConfig",
    "ServiceError",
    "load_config",
    "parse_partition",
]
