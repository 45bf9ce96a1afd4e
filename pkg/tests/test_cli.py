import json
import subprocess
import sys

import pytest
from fastapi.testclient import TestClient

from coauthornet.cli import main
from coauthornet.service import CentralityResponse, load_config
from coauthornet.service.api import create_app
from coauthornet.service.core import CoauthorService
from coauthornet.snapshot import load


@pytest.fixture
def config_path(tmp_path, e2e_repo):
    path = tmp_path / "coauthornet.yaml"
    path.write_text(
        "data_dir: data\n"
        "repositories:\n"
        "  - repository_id: fixture\n"
        f"    base_url: {e2e_repo.url}\n"
        "    polite_delay_ms: 0\n",
        encoding="utf-8",
    )
    return path


def run(*args):
    return main([str(a) for a in args])


def test_harvest_writes_snapshot(config_path, e2e_manifest, capsys):
    assert run("harvest", "--repo", "fixture", "--config", config_path) == 0
    snapshot = load(config_path.parent / "data" / "fixture" / "index.snapshot")
    assert sorted(snapshot.publications) == sorted(r["identifier"] for r in e2e_manifest["records"])
    assert "completed: 12 records ingested" in capsys.readouterr().err


def test_centrality_json_matches_http(config_path, capsys):
    assert run("harvest", "--repo", "fixture", "--config", config_path) == 0
    capsys.readouterr()
    assert run("centrality", "--repo", "fixture", "--ddc", "004", "--top", "3", "--format", "json", "--config", config_path) == 0
    from_cli = CentralityResponse.from_json(capsys.readouterr().out)

    service = CoauthorService(load_config(config_path))
    http = TestClient(create_app(service)).get(
        "/repositories/fixture/centrality", params={"ddc": "004", "top": "3", "format": "json"}
    )
    from_http = CentralityResponse.from_json(http.text)
    assert from_cli.entries == from_http.entries
    assert len(from_cli.entries) == 3


def test_centrality_xml_to_stdout(config_path, capfdbinary):
    assert run("harvest", "--repo", "fixture", "--config", config_path) == 0
    capfdbinary.readouterr()
    assert run("centrality", "--repo", "fixture", "--ddc", "300", "--config", config_path) == 0
    out = capfdbinary.readouterr().out
    assert out.startswith(b"<?xml")
    assert CentralityResponse.from_xml(out).partition_code == "300"


def test_plot_writes_png(config_path, tmp_path):
    assert run("harvest", "--repo", "fixture", "--config", config_path) == 0
    out = tmp_path / "plot.png"
    assert run("plot", "--repo", "fixture", "--ddc", "004", "--seed", "7", "--out", out, "--config", config_path) == 0
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_exit_codes(config_path, tmp_path):
    out = tmp_path / "x.png"
    assert run("plot", "--repo", "missing", "--out", out, "--config", config_path) == 3
    assert run("plot", "--repo", "fixture", "--ddc", "830", "--out", out, "--config", config_path) == 3
    assert run("centrality", "--repo", "fixture", "--ddc", "9999", "--config", config_path) == 1
    assert run("centrality", "--repo", "fixture", "--config", tmp_path / "absent.yaml") == 1
    assert run("centrality", "--config", config_path) == 1
    assert not out.exists()


def test_bad_config_exits_1(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("listen_address: nowhere\n", encoding="utf-8")
    assert run("harvest", "--repo", "x", "--config", path) == 1


def test_harvest_failure_exits_2(tmp_path):
    from oai_mock import MockOaiRepository, synthetic_manifest

    manifest = synthetic_manifest(3, faults=[{"page": 0, "count": 99, "status": 503}])
    with MockOaiRepository(manifest) as repo:
        path = tmp_path / "c.yaml"
        path.write_text(
            f"data_dir: d\nrepositories:\n  - repository_id: down\n    base_url: {repo.url}\n"
            "    polite_delay_ms: 0\n    max_retries: 0\n",
            encoding="utf-8",
        )
        assert run("harvest", "--repo", "down", "--config", path) == 2


def test_console_script_entry_point(config_path):
    result = subprocess.run(
        [sys.executable, "-m", "coauthornet.cli", "centrality", "--repo", "fixture", "--format", "json", "--config", str(config_path)],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert result.returncode == 0, result.stderr
    assert json.loads(result.stdout)["entries"] == []
