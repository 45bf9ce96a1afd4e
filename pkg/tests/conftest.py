import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oai_mock import MockOaiRepository  # noqa: E402

from coauthornet.service import CoauthorService, ServiceConfig  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion of the build")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    key = (number, title)
    failed = report.failed or (report.when == "call" and report.skipped)
    passed = report.when == "call" and report.passed
    if failed:
        _acceptance_results[key] = False
    elif passed:
        _acceptance_results.setdefault(key, True)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(_acceptance_results.items()):
        terminalreporter.write_line(f"AC{number} {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def load_manifest(name):
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))


@pytest.fixture
def e2e_manifest():
    return load_manifest("e2e_manifest.json")


@pytest.fixture
def e2e_repo(e2e_manifest):
    with MockOaiRepository(e2e_manifest) as repo:
        yield repo


@pytest.fixture
def make_service(tmp_path):
    services = []

    def factory(repositories=None, data_dir=None, **kwargs):
        config = ServiceConfig(data_dir=data_dir or tmp_path / "data", repositories=repositories or {}, **kwargs)
        service = CoauthorService(config)
        services.append(service)
        return service

    yield factory
    for service in services:
        service.shutdown()


@pytest.fixture
def fixture_service(make_service, e2e_repo):
    """A service whose repository ``fixture`` has harvested the end-to-end manifest."""
    from coauthornet.harvester import RepositoryConfig

    service = make_service({"fixture": RepositoryConfig(e2e_repo.url, polite_delay_ms=0)})
    job = service.run_job(service.new_job("fixture"))
    assert job.state.value == "completed", job.error
    return service
