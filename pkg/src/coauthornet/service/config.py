"""Service configuration (YAML file plus environment overrides).

Example::

    listen_address: 127.0.0.1:8080
    data_dir: ./data
    default_top_k: 10
    repositories:
      - repository_id: socsci
        base_url: https://repository.example.org/oai
        set_spec: ddc:300
        polite_delay_ms: 1000

``COAUTHORNET_LISTEN_ADDRESS`` and ``COAUTHORNET_DATA_DIR`` override the
corresponding keys.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import yaml

from ..harvester.errors import ConfigError
from ..harvester.models import RepositoryConfig

ENV_LISTEN_ADDRESS = "COAUTHORNET_LISTEN_ADDRESS"
ENV_DATA_DIR = "COAUTHORNET_DATA_DIR"
ENV_CONFIG = "COAUTHORNET_CONFIG"
DEFAULT_CONFIG_PATH = "coauthornet.yaml"

_REPO_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.\-]{0,63}$")


def check_repository_id(repository_id) -> str:
    if not isinstance(repository_id, str) or not _REPO_ID_RE.match(repository_id):
        raise ConfigError(f"invalid repository_id {repository_id!r}")
    return repository_id


def parse_listen_address(value: str) -> Tuple[str, int]:
    host, sep, port = str(value).rpartition(":")
    if not sep or not host or not port.isdigit() or not 0 < int(port) < 65536:
        raise ConfigError(f"listen_address must be host:port, got {value!r}")
    return host, int(port)


@dataclass
class ServiceConfig:
    data_dir: Path
    listen_address: str = "127.0.0.1:8080"
    repositories: Dict[str, RepositoryConfig] = field(default_factory=dict)
    default_top_k: int = 10

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        parse_listen_address(self.listen_address)
        if not isinstance(self.default_top_k, int) or self.default_top_k < 1:
            raise ConfigError("default_top_k must be a positive integer")
        for repository_id in self.repositories:
            check_repository_id(repository_id)

    @property
    def host_port(self) -> Tuple[str, int]:
        return parse_listen_address(self.listen_address)

    @classmethod
    def from_mapping(
        cls,
        data: Mapping,
        base_dir: Optional[Path] = None,
        environ: Optional[Mapping[str, str]] = None,
    ) -> "ServiceConfig":
        environ = os.environ if environ is None else environ
        if not isinstance(data, Mapping):
            raise ConfigError("configuration must be a mapping")
        unknown = set(data) - {"listen_address", "data_dir", "repositories", "default_top_k"}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

        repositories = {}
        for entry in data.get("repositories") or []:
            if not isinstance(entry, Mapping):
                raise ConfigError("repository entries must be mappings")
            entry = dict(entry)
            repository_id = check_repository_id(entry.pop("repository_id", None))
            if repository_id in repositories:
                raise ConfigError(f"duplicate repository_id {repository_id!r}")
            repositories[repository_id] = RepositoryConfig.from_dict(entry)

        data_dir = environ.get(ENV_DATA_DIR) or data.get("data_dir") or "data"
        data_dir = Path(data_dir)
        if not data_dir.is_absolute() and base_dir is not None:
            data_dir = base_dir / data_dir
        return cls(
            data_dir=data_dir,
            listen_address=environ.get(ENV_LISTEN_ADDRESS) or data.get("listen_address") or "127.0.0.1:8080",
            repositories=repositories,
            default_top_k=data.get("default_top_k", 10),
        )


def load_config(path: Union[str, Path, None] = None, environ: Optional[Mapping[str, str]] = None) -> ServiceConfig:
    """Read a YAML config file; relative ``data_dir`` resolves against the file's directory."""
    environ = os.environ if environ is None else environ
    path = Path(path or environ.get(ENV_CONFIG) or DEFAULT_CONFIG_PATH)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return ServiceConfig.from_mapping(data, base_dir=path.resolve().parent, environ=environ)
