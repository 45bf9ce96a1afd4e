"""OAI-PMH 2.0 client: request pacing, retries and ListRecords paging."""

from __future__ import annotations

import logging
import threading
import time
from datetime import datetime, timezone
from email.utils import parsedate_to_datetime
from typing import Callable, Iterator, List, Optional

import requests

from .. import __version__
from .errors import (
    BadResumptionToken,
    HarvestError,
    NetworkError,
    NoRecordsMatch,
    ProtocolError,
    RetriesExhausted,
)
from .models import HarvestJob, JobState, ListRecordsPage, OaiRecord, RepositoryConfig, RepositoryInfo
from .parser import parse_identify, parse_list_records

logger = logging.getLogger(__name__)

USER_AGENT = f"coauthornet/{__version__} (OAI-PMH co-author network harvester)"

BACKOFF_START = 1.0
BACKOFF_CAP = 64.0
REQUEST_TIMEOUT = 60.0


def backoff_delay(attempt: int) -> float:
    """Delay before retry number ``attempt`` (1-based): 1, 2, 4, ... capped at 64 s."""
    return min(BACKOFF_CAP, BACKOFF_START * 2 ** (attempt - 1))


def parse_retry_after(value: Optional[str], now: Optional[datetime] = None) -> Optional[float]:
    if value is None:
        return None
    value = value.strip()
    if value.isdigit():
        return float(value)
    try:
        when = parsedate_to_datetime(value)
    except (TypeError, ValueError):
        return None
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    now = now or datetime.now(timezone.utc)
    return max(0.0, (when - now).total_seconds())


class RequestPacer:
    """Keeps consecutive requests to one repository ``delay_ms`` apart.

    The delay runs from the moment the previous exchange finished, so the
    server never sees two requests closer than ``delay_ms`` regardless of
    network latency. Share one pacer between clients that talk to the same
    repository. ``sent`` records the clock value at which each request was
    released.
    """

    def __init__(
        self,
        delay_ms: int,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.delay = delay_ms / 1000.0
        self.sleep = sleep
        self.clock = clock
        self.sent: List[float] = []
        self._finished: Optional[float] = None
        self._lock = threading.Lock()

    def wait(self) -> None:
        """Block until the next request may be sent."""
        with self._lock:
            if self._finished is not None:
                remaining = self.delay - (self.clock() - self._finished)
                if remaining > 0:
                    self.sleep(remaining)
            self.sent.append(self.clock())

    def done(self) -> None:
        """Mark the end of the exchange started after the last ``wait``."""
        with self._lock:
            self._finished = self.clock()


class OaiClient:
    """Sequential OAI-PMH requester for a single repository.

    Consecutive requests (including retries) are spaced at least
    ``polite_delay_ms`` apart. Transport failures, HTTP 5xx and 429 are
    retried up to ``max_retries`` times per request with exponential backoff,
    honouring ``Retry-After`` when the server sends one.
    """

    def __init__(
        self,
        config: RepositoryConfig,
        session: Optional[requests.Session] = None,
        pacer: Optional[RequestPacer] = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.config = config
        self.session = session or requests.Session()
        self.session.headers["User-Agent"] = USER_AGENT
        self.pacer = pacer or RequestPacer(config.polite_delay_ms, sleep=sleep, clock=clock)
        self._sleep = sleep
        self.requests_sent = 0

    def fetch(self, params: dict) -> bytes:
        url = self.config.base_url
        attempt = 0
        while True:
            self.pacer.wait()
            self.requests_sent += 1
            retry_after = None
            try:
                response = self.session.get(url, params=params, timeout=REQUEST_TIMEOUT)
            except requests.RequestException as exc:
                response = None
                failure = NetworkError(str(exc))
            finally:
                self.pacer.done()

            if response is not None:
                if response.status_code >= 500 or response.status_code == 429:
                    failure = NetworkError(f"HTTP {response.status_code}")
                    retry_after = parse_retry_after(response.headers.get("Retry-After"))
                elif response.status_code != 200 and not response.content.lstrip().startswith(b"<"):
                    raise ProtocolError(f"HTTP {response.status_code} from {url}")
                else:
                    return response.content

            attempt += 1
            if attempt > self.config.max_retries:
                raise RetriesExhausted(url, attempt, failure)
            delay = retry_after if retry_after is not None else backoff_delay(attempt)
            logger.warning("request to %s failed (%s); retry %d in %.1fs", url, failure, attempt, delay)
            self._sleep(delay)

    def identify(self) -> RepositoryInfo:
        return parse_identify(self.fetch({"verb": "Identify"}))

    def list_records(self, resumption_token: Optional[str] = None) -> ListRecordsPage:
        if resumption_token:
            params = {"verb": "ListRecords", "resumptionToken": resumption_token}
        else:
            params = {"verb": "ListRecords", "metadataPrefix": self.config.metadata_prefix}
            if self.config.set_spec:
                params["set"] = self.config.set_spec
            if self.config.from_:
                params["from"] = self.config.from_
            if self.config.until:
                params["until"] = self.config.until
        return parse_list_records(self.fetch(params))


def identify(config: RepositoryConfig, client: Optional[OaiClient] = None) -> RepositoryInfo:
    """Run the Identify verb; raises UnsupportedVersion unless the repository speaks 2.0."""
    return (client or OaiClient(config)).identify()


def harvest(
    config: RepositoryConfig,
    job: HarvestJob,
    client: Optional[OaiClient] = None,
) -> Iterator[OaiRecord]:
    """Yield every record of the configured list, following resumption tokens.

    ``job`` must be pending. If it carries a ``last_resumption_token`` the
    list is resumed from there. The token is stored on the job only after
    all records of a page have been consumed, so a job cancelled between
    pages resumes exactly at the next page. A ``badResumptionToken`` error
    restarts the list from the beginning once (records already delivered
    will then be delivered again); a second one fails the job.
    """
    if job.state is not JobState.PENDING:
        raise ValueError(f"job {job.job_id} is {job.state.value}, expected pending")
    client = client or OaiClient(config)
    job.transition(JobState.RUNNING)
    token = job.last_resumption_token
    restarted = False
    try:
        while True:
            if job.cancel_requested:
                job.transition(JobState.CANCELLED)
                return
            try:
                page = client.list_records(token)
            except NoRecordsMatch:
                job.set_token(None)
                job.transition(JobState.COMPLETED)
                return
            except BadResumptionToken:
                if restarted or token is None:
                    raise
                logger.warning("resumption token %r rejected; restarting harvest of %s", token, config.base_url)
                restarted = True
                token = None
                job.set_token(None)
                continue

            if job.response_date is None:
                job.response_date = page.response_date
            for record in page.records:
                job.record_received()
                yield record

            token = page.resumption_token
            job.set_token(token)
            if token is None:
                job.transition(JobState.COMPLETED)
                return
    except GeneratorExit:
        if job.state is JobState.RUNNING:
            job.transition(JobState.CANCELLED)
        raise
    except HarvestError as exc:
        job.transition(JobState.FAILED, error=str(exc))
        raise
    except Exception as exc:
        job.transition(JobState.FAILED, error=f"internal error: {exc!r}")
        raise
