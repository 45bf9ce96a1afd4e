"""Command line entry point.

Exit codes: 0 success, 1 configuration or usage error, 2 network or harvest
failure, 3 unknown repository or empty partition.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .harvester import JobState
from .harvester.errors import ConfigError
from .service.config import load_config
from .service.core import (
    BadRequest,
    CoauthorService,
    EmptyPartition,
    JobAlreadyRunning,
    UnknownRepository,
    UpstreamError,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_HARVEST = 2
EXIT_NOT_FOUND = 3

logger = logging.getLogger("coauthornet")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coauthornet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p, required=False):
        p.add_argument("--config", required=required, help="YAML configuration file")
        return p

    with_config(sub.add_parser("serve", help="run the HTTP service"), required=True)

    p = with_config(sub.add_parser("harvest", help="harvest one repository synchronously"))
    p.add_argument("--repo", required=True)
    p.add_argument("--resume", action="store_true", help="continue an interrupted harvest")
    p.add_argument("--incremental", action="store_true", help="only records changed since the last harvest")

    p = with_config(sub.add_parser("centrality", help="print the most central authors"))
    p.add_argument("--repo", required=True)
    p.add_argument("--ddc")
    p.add_argument("--top")
    p.add_argument("--mode", choices=["unweighted", "weighted"])
    p.add_argument("--format", choices=["xml", "json"], default="xml")

    p = with_config(sub.add_parser("plot", help="write a PNG network plot"))
    p.add_argument("--repo", required=True)
    p.add_argument("--ddc")
    p.add_argument("--top")
    p.add_argument("--seed")
    p.add_argument("--mode", choices=["unweighted", "weighted"])
    p.add_argument("--out", required=True, type=Path)
    return parser


def _serve(service: CoauthorService) -> int:
    import uvicorn

    from .service.api import create_app

    host, port = service.config.host_port
    try:
        uvicorn.run(create_app(service), host=host, port=port)
    finally:
        service.shutdown()
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        service = CoauthorService(load_config(args.config))
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "serve":
            return _serve(service)

        if args.command == "harvest":
            job = service.new_job(args.repo, resume=args.resume, incremental=args.incremental)
            service.run_job(job)
            status = job.snapshot()
            print(
                f"{status['state']}: {status['records_ingested']} records ingested "
                f"into {service.snapshot_path(args.repo)}",
                file=sys.stderr,
            )
            if job.state is not JobState.COMPLETED:
                if job.error:
                    print(f"harvest failed: {job.error}", file=sys.stderr)
                return EXIT_HARVEST
            return EXIT_OK

        if args.command == "centrality":
            response = service.centrality(args.repo, ddc=args.ddc, top=args.top, mode=args.mode)
            if args.format == "json":
                sys.stdout.write(response.to_json() + "\n")
            else:
                sys.stdout.buffer.write(response.to_xml())
                sys.stdout.flush()
            return EXIT_OK

        if args.command == "plot":
            result = service.plot(args.repo, ddc=args.ddc, top=args.top, seed=args.seed, mode=args.mode)
            args.out.write_bytes(result.png)
            if result.truncated:
                print(f"plot truncated to {result.nodes} of {result.total_nodes} nodes", file=sys.stderr)
            return EXIT_OK
    except (UnknownRepository, EmptyPartition) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (JobAlreadyRunning, UpstreamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HARVEST
    except (ConfigError, BadRequest) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
