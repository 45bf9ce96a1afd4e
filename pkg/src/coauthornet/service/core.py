"""Operations shared by the HTTP API and the command line."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..centrality import EDGE_MODES, UNWEIGHTED, BetweennessResult, betweenness, top_central
from ..extract import Deletion, extract_publication
from ..harvester import HarvestJob, JobState, OaiClient, RepositoryConfig, RequestPacer, harvest
from ..harvester.errors import ConfigError, HarvestError
from ..harvester.models import SECOND, format_datestamp
from ..index import CoauthorIndex, PartitionKey
from ..plot import LayoutConfig, layout, render_png, truncate_for_plot
from .. import snapshot as snapshots
from .config import ServiceConfig, check_repository_id
from .responses import CentralityResponse

logger = logging.getLogger(__name__)

SNAPSHOT_NAME = "index.snapshot"
STATE_NAME = "harvest_state.json"
REGISTRY_NAME = "repositories.json"
CHECKPOINT_INTERVAL = 30.0


class ServiceError(Exception):
    status = 500
    code = "internal_error"


class BadRequest(ServiceError):
    status = 400
    code = "bad_request"


class UnknownRepository(ServiceError):
    status = 404
    code = "unknown_repository"


class UnknownJob(ServiceError):
    status = 404
    code = "unknown_job"


class EmptyPartition(ServiceError):
    status = 404
    code = "empty_partition"


class UpstreamError(ServiceError):
    status = 502
    code = "upstream_error"


class DuplicateRepository(ServiceError):
    status = 409
    code = "duplicate_repository"


class JobAlreadyRunning(ServiceError):
    status = 409
    code = "job_running"


_DDC_PARAM = re.compile(r"^\d(\d\d)?$")


def parse_partition(ddc: Optional[str]) -> PartitionKey:
    """Map a ``ddc`` query value to a partition.

    Absent means repository-wide, a single digit or ``X00`` a main class,
    any other three digits an exact class.
    """
    if ddc is None or ddc == "":
        return PartitionKey.repository_wide()
    if not _DDC_PARAM.match(ddc):
        raise BadRequest(f"ddc must be one or three digits, got {ddc!r}")
    if len(ddc) == 1 or ddc.endswith("00"):
        return PartitionKey.ddc_main(ddc[0] + "00")
    return PartitionKey.ddc_exact(ddc)


def parse_positive_int(value, name: str, default: int) -> int:
    if value is None or value == "":
        return default
    text = str(value)
    if not text.isdigit() or int(text) < 1:
        raise BadRequest(f"{name} must be a positive integer, got {value!r}")
    return int(text)


def parse_seed(value, default: int = 42) -> int:
    if value is None or value == "":
        return default
    text = str(value)
    if not text.isdigit() or int(text) >= 2**64:
        raise BadRequest(f"seed must be an unsigned 64-bit integer, got {value!r}")
    return int(text)


def parse_mode(value) -> str:
    if value is None or value == "":
        return UNWEIGHTED
    if value not in EDGE_MODES:
        raise BadRequest(f"mode must be one of {', '.join(EDGE_MODES)}, got {value!r}")
    return value


@dataclass
class Repository:
    repository_id: str
    config: RepositoryConfig
    index: CoauthorIndex

    def describe(self) -> dict:
        return {
            "repository_id": self.repository_id,
            **self.config.to_dict(),
            "publications": len(self.index),
            "generation": self.index.generation,
        }


@dataclass
class PlotResult:
    png: bytes
    nodes: int
    total_nodes: int

    @property
    def truncated(self) -> bool:
        return self.nodes < self.total_nodes


class CoauthorService:
    """Repositories, their co-author indexes, harvest jobs and cached scores.

    Each repository has at most one running harvest, which is the only
    writer of that repository's index. Queries read point-in-time graph
    views from the index and never see a partially ingested record.
    """

    def __init__(self, config: ServiceConfig, session_factory=None):
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(self.data_dir, os.W_OK):
            raise ConfigError(f"data_dir {self.data_dir} is not writable")
        self._session_factory = session_factory
        self._lock = threading.RLock()
        self._repos: Dict[str, Repository] = {}
        self._jobs: Dict[str, HarvestJob] = {}
        self._running: Dict[str, HarvestJob] = {}
        self._threads: Dict[str, threading.Thread] = {}
        self._scores: Dict[Tuple, BetweennessResult] = {}
        self._pacers: Dict[str, RequestPacer] = {}

        registered = self._read_registry()
        registered.update(config.repositories)
        for repository_id, repo_config in sorted(registered.items()):
            self._repos[repository_id] = Repository(repository_id, repo_config, self._load_index(repository_id))

    # -- persistence -----------------------------------------------------

    def repo_dir(self, repository_id: str) -> Path:
        return self.data_dir / repository_id

    def snapshot_path(self, repository_id: str) -> Path:
        return self.repo_dir(repository_id) / SNAPSHOT_NAME

    def _read_registry(self) -> Dict[str, RepositoryConfig]:
        path = self.data_dir / REGISTRY_NAME
        if not path.exists():
            return {}
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            return {check_repository_id(k): RepositoryConfig.from_dict(v) for k, v in data.items()}
        except (ValueError, TypeError, AttributeError) as exc:
            raise ConfigError(f"unreadable repository registry {path}: {exc}") from None

    def _write_registry(self) -> None:
        path = self.data_dir / REGISTRY_NAME
        data = {rid: repo.config.to_dict() for rid, repo in sorted(self._repos.items())}
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    def _load_index(self, repository_id: str) -> CoauthorIndex:
        path = self.snapshot_path(repository_id)
        if path.exists():
            return CoauthorIndex.from_snapshot(snapshots.load(path))
        return CoauthorIndex(repository_id)

    def harvest_state(self, repository_id: str) -> dict:
        path = self.repo_dir(repository_id) / STATE_NAME
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_state(self, repository_id: str, **updates) -> None:
        state = self.harvest_state(repository_id)
        state.update(updates)
        path = self.repo_dir(repository_id) / STATE_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(state, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    def _checkpoint(self, repo: Repository, job: HarvestJob) -> None:
        snapshots.save(repo.index.snapshot(), self.snapshot_path(repo.repository_id))
        self._write_state(repo.repository_id, last_job=job.snapshot())

    # -- repositories ----------------------------------------------------

    def repository(self, repository_id: str) -> Repository:
        with self._lock:
            repo = self._repos.get(repository_id)
        if repo is None:
            raise UnknownRepository(f"unknown repository {repository_id!r}")
        return repo

    def repositories(self) -> List[Repository]:
        with self._lock:
            return [self._repos[k] for k in sorted(self._repos)]

    def register_repository(self, repository_id: str, config: RepositoryConfig) -> Repository:
        check_repository_id(repository_id)
        with self._lock:
            if repository_id in self._repos:
                raise DuplicateRepository(f"repository {repository_id!r} already exists")
            repo = Repository(repository_id, config, self._load_index(repository_id))
            self._repos[repository_id] = repo
            self._write_registry()
            return repo

    # -- harvesting ------------------------------------------------------

    def _client(self, config: RepositoryConfig, repository_id: Optional[str] = None) -> OaiClient:
        session = self._session_factory() if self._session_factory else None
        pacer = None
        if repository_id is not None:
            with self._lock:
                pacer = self._pacers.setdefault(repository_id, RequestPacer(config.polite_delay_ms))
        return OaiClient(config, session=session, pacer=pacer)

    def new_job(self, repository_id: str, resume: bool = False, incremental: bool = False) -> HarvestJob:
        """Create and register a pending job; raises if one is already running."""
        repo = self.repository(repository_id)
        config = repo.config
        token = None
        state = self.harvest_state(repository_id)
        if resume:
            last = state.get("last_job") or {}
            if last.get("state") in ("cancelled", "failed") and last.get("last_resumption_token"):
                token = last["last_resumption_token"]
        elif incremental and state.get("last_success_response_date"):
            stamp = state["last_success_response_date"]
            try:
                granularity = self._client(config, repository_id).identify().granularity
            except HarvestError as exc:
                raise UpstreamError(f"Identify failed for {repository_id!r}: {exc}") from None
            from_ = stamp if granularity == SECOND else stamp[:10]
            config = RepositoryConfig.from_dict({**config.to_dict(), "from": from_, "until": None})
        job = HarvestJob(config, last_resumption_token=token, repository_id=repository_id)
        with self._lock:
            running = self._running.get(repository_id)
            if running is not None and not running.state.terminal:
                raise JobAlreadyRunning(f"harvest {running.job_id} is still running for {repository_id!r}")
            self._running[repository_id] = job
            self._jobs[job.job_id] = job
        return job

    def run_job(self, job: HarvestJob, client: Optional[OaiClient] = None) -> HarvestJob:
        """Harvest synchronously into the repository index, checkpointing as pages complete."""
        repo = self.repository(job.repository_id)
        client = client or self._client(job.repository, job.repository_id)
        token_seen = job.last_resumption_token
        last_checkpoint = time.monotonic()
        try:
            for record in harvest(job.repository, job, client=client):
                if job.last_resumption_token != token_seen:
                    token_seen = job.last_resumption_token
                    if time.monotonic() - last_checkpoint >= CHECKPOINT_INTERVAL:
                        self._checkpoint(repo, job)
                        last_checkpoint = time.monotonic()
                item = extract_publication(record)
                if isinstance(item, Deletion):
                    repo.index.retract(item.record_id)
                else:
                    repo.index.ingest(item)
                job.record_ingested()
        except HarvestError as exc:
            logger.error("harvest %s of %s failed: %s", job.job_id, job.repository_id, exc)
        except Exception:
            logger.exception("harvest %s of %s crashed", job.job_id, job.repository_id)
            if job.state is JobState.RUNNING:
                job.transition(JobState.FAILED, error="internal error")
        finally:
            self._checkpoint(repo, job)
            if job.state is JobState.COMPLETED and job.response_date is not None:
                self._write_state(
                    repo.repository_id,
                    last_success_response_date=format_datestamp(job.response_date, SECOND),
                )
        return job

    def start_job(self, job: HarvestJob) -> threading.Thread:
        thread = threading.Thread(target=self.run_job, args=(job,), name=f"harvest-{job.job_id}", daemon=True)
        with self._lock:
            self._threads[job.job_id] = thread
        thread.start()
        return thread

    def job(self, job_id: str) -> HarvestJob:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJob(f"unknown job {job_id!r}")
        return job

    def wait(self, job_id: str, timeout: Optional[float] = None) -> HarvestJob:
        with self._lock:
            thread = self._threads.get(job_id)
        if thread is not None:
            thread.join(timeout)
        return self.job(job_id)

    def shutdown(self, timeout: float = 5.0) -> None:
        with self._lock:
            jobs = [j for j in self._jobs.values() if not j.state.terminal]
            threads = list(self._threads.values())
        for job in jobs:
            job.cancel()
        for thread in threads:
            thread.join(timeout)

    # -- queries ---------------------------------------------------------

    def scores(self, repository_id: str, key: PartitionKey, mode: str):
        """Betweenness for one partition, cached per index generation."""
        repo = self.repository(repository_id)
        generation, graph = repo.index.view(key)
        cache_key = (repository_id, key, mode, generation)
        with self._lock:
            cached = self._scores.get(cache_key)
        if cached is None:
            cached = betweenness(graph, mode)
            with self._lock:
                for stale in [k for k in self._scores if k[:3] == cache_key[:3] and k[3] != generation]:
                    del self._scores[stale]
                self._scores[cache_key] = cached
        return graph, cached

    def centrality(
        self,
        repository_id: str,
        ddc: Optional[str] = None,
        top: Optional[str] = None,
        mode: Optional[str] = None,
    ) -> CentralityResponse:
        repo = self.repository(repository_id)
        key = parse_partition(ddc)
        k = parse_positive_int(top, "top", self.config.default_top_k)
        edge_mode = parse_mode(mode)
        graph, result = self.scores(repo.repository_id, key, edge_mode)
        ranking = top_central(result, graph, k, key)
        return CentralityResponse.from_ranking(repo.repository_id, ranking)

    def plot(
        self,
        repository_id: str,
        ddc: Optional[str] = None,
        top: Optional[str] = None,
        seed: Optional[str] = None,
        mode: Optional[str] = None,
    ) -> PlotResult:
        repo = self.repository(repository_id)
        key = parse_partition(ddc)
        label_k = parse_positive_int(top, "top", self.config.default_top_k)
        cfg = LayoutConfig(seed=parse_seed(seed), label_top_k=label_k)
        edge_mode = parse_mode(mode)
        graph, result = self.scores(repo.repository_id, key, edge_mode)
        if len(graph) == 0:
            raise EmptyPartition(f"partition {key} of {repository_id!r} is empty")
        shown, _ = truncate_for_plot(graph, result)
        ranking = top_central(result, shown, label_k, key)
        png = render_png(shown, layout(shown, result, cfg), ranking, cfg)
        return PlotResult(png=png, nodes=len(shown), total_nodes=len(graph))
