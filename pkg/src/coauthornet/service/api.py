"""HTTP endpoints."""

from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .. import __version__
from ..harvester import RepositoryConfig
from ..harvester.errors import ConfigError
from .core import BadRequest, CoauthorService, ServiceError
from .responses import schema_text

_REPOSITORY_FIELDS = {
    "repository_id",
    "base_url",
    "set_spec",
    "metadata_prefix",
    "from",
    "until",
    "polite_delay_ms",
    "max_retries",
}


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse({"error": code, "detail": detail}, status_code=status)


def _flag(value: Optional[str], name: str) -> bool:
    if value is None or value in ("", "0", "false"):
        return False
    if value in ("1", "true"):
        return True
    raise BadRequest(f"{name} must be true or false, got {value!r}")


def create_app(service: CoauthorService) -> FastAPI:
    app = FastAPI(title="coauthornet", version=__version__)
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError):
        return _error(exc.status, exc.code, str(exc))

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return _error(400, "invalid_config", str(exc))

    @app.get("/repositories")
    def list_repositories():
        return {"repositories": [r.describe() for r in service.repositories()]}

    @app.post("/repositories", status_code=201)
    async def create_repository(request: Request):
        try:
            body = json.loads(await request.body() or b"null")
        except ValueError:
            raise BadRequest("request body is not valid JSON") from None
        if not isinstance(body, dict):
            raise BadRequest("request body must be a JSON object")
        unknown = set(body) - _REPOSITORY_FIELDS
        if unknown:
            raise BadRequest(f"unknown fields: {sorted(unknown)}")
        fields = dict(body)
        repository_id = fields.pop("repository_id", None)
        config = RepositoryConfig.from_dict(fields)
        repo = service.register_repository(repository_id, config)
        return JSONResponse(
            repo.describe(),
            status_code=201,
            headers={"Location": f"/repositories/{repo.repository_id}"},
        )

    @app.get("/repositories/{repository_id}")
    def get_repository(repository_id: str):
        return service.repository(repository_id).describe()

    @app.post("/repositories/{repository_id}/harvest", status_code=202)
    def start_harvest(repository_id: str, incremental: Optional[str] = None, resume: Optional[str] = None):
        job = service.new_job(
            repository_id,
            resume=_flag(resume, "resume"),
            incremental=_flag(incremental, "incremental"),
        )
        service.start_job(job)
        return JSONResponse(
            {"job_id": job.job_id},
            status_code=202,
            headers={"Location": f"/jobs/{job.job_id}"},
        )

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return service.job(job_id).snapshot()

    @app.get("/repositories/{repository_id}/centrality")
    def centrality(
        repository_id: str,
        ddc: Optional[str] = None,
        top: Optional[str] = None,
        mode: Optional[str] = None,
        format: Optional[str] = None,
    ):
        fmt = format or "xml"
        if fmt not in ("xml", "json"):
            raise BadRequest(f"format must be xml or json, got {format!r}")
        response = service.centrality(repository_id, ddc=ddc, top=top, mode=mode)
        if fmt == "json":
            return Response(response.to_json(), media_type="application/json")
        return Response(response.to_xml(), media_type="application/xml")

    @app.get("/repositories/{repository_id}/network.png")
    def network_png(
        repository_id: str,
        ddc: Optional[str] = None,
        top: Optional[str] = None,
        seed: Optional[str] = None,
        mode: Optional[str] = None,
    ):
        result = service.plot(repository_id, ddc=ddc, top=top, seed=seed, mode=mode)
        headers = {}
        if result.truncated:
            headers["X-Plot-Truncated"] = f"{result.nodes}/{result.total_nodes}"
        return Response(result.png, media_type="image/png", headers=headers)

    @app.get("/schema/centrality")
    def centrality_schema():
        return Response(schema_text(), media_type="application/xml")

    return app
