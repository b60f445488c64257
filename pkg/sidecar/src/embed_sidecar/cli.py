"""Command-line entry point.

Every setting is a flag with an environment-variable fallback
(precedence: flag > environment > built-in default):

    --model       SIDECAR_MODEL        token-hash-384
    --host        SIDECAR_HOST         127.0.0.1
    --port        SIDECAR_PORT         8099
    --max-batch   SIDECAR_MAX_BATCH    256
    --no-normalize-default  SIDECAR_NORMALIZE_DEFAULT=0
"""

from __future__ import annotations

import argparse
import os
import sys

from .service import EmbedService, ServiceConfig

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off"}


def _env_bool(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    value = raw.strip().lower()
    if value in _TRUTHY:
        return True
    if value in _FALSY:
        return False
    raise SystemExit(f"{name} must be a boolean flag value, got {raw!r}")


def build_config(argv: list[str] | None = None) -> ServiceConfig:
    parser = argparse.ArgumentParser(
        prog="embed-sidecar",
        description="Serve sentence embeddings over POST /embed and GET /healthz.",
    )
    parser.add_argument(
        "--model",
        default=os.environ.get("SIDECAR_MODEL", ServiceConfig.model),
        help="model spec: token-hash[-<dim>] (built-in, default) or st:<checkpoint>",
    )
    parser.add_argument(
        "--host", default=os.environ.get("SIDECAR_HOST", ServiceConfig.host)
    )
    parser.add_argument(
        "--port", type=int,
        default=int(os.environ.get("SIDECAR_PORT", ServiceConfig.port)),
        help="0 picks a free port",
    )
    parser.add_argument(
        "--max-batch", type=int,
        default=int(os.environ.get("SIDECAR_MAX_BATCH", ServiceConfig.max_batch)),
        help="largest accepted texts list; bigger batches answer 413",
    )
    parser.add_argument(
        "--no-normalize-default", action="store_true",
        help='leave vectors unnormalized when a request omits "normalize"',
    )
    args = parser.parse_args(argv)
    normalize_default = _env_bool(
        "SIDECAR_NORMALIZE_DEFAULT", ServiceConfig.normalize_default
    )
    if args.no_normalize_default:
        normalize_default = False
    try:
        return ServiceConfig(
            model=args.model,
            host=args.host,
            port=args.port,
            max_batch=args.max_batch,
            normalize_default=normalize_default,
        )
    except ValueError as exc:
        parser.error(str(exc))
        raise AssertionError("unreachable")  # parser.error always exits


def main(argv: list[str] | None = None) -> int:
    config = build_config(argv)
    service = EmbedService(config).start()
    if not service.wait_ready():
        print(f"error: {service._load_error or 'model load timed out'}", file=sys.stderr)
        service.stop()
        return 1
    print(
        f"embed-sidecar serving model {config.model} on {service.url} "
        f"(max batch {config.max_batch})",
        flush=True,
    )
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
