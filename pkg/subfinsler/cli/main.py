"""Command line entry point."""

import argparse
import logging
from typing import List, Optional

from pydantic import ValidationError

from subfinsler.cli.commands import COMMANDS
from subfinsler.cli.common import common_parser, emit_error
from subfinsler.config import settings
from subfinsler.exceptions import SubFinslerError
from subfinsler.schemas import RunConfig, parse_body_spec
from subfinsler.services.convex_body_service import ConvexBodyService

logger = logging.getLogger(__name__)

USAGE_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Sub-Finsler geometry of the first Heisenberg group",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = common_parser()
    for command in COMMANDS:
        command.register(subparsers, common)
    return parser


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        body=parse_body_spec(args.body),
        field_expr=args.field_expr,
        field_csv=args.field_csv,
        f_expr=args.f_expr,
        step=args.step,
        tol=args.tol,
        cells=args.cells,
        order=args.order,
        seed=args.seed,
        curves=args.curves,
        samples=args.samples,
        out=args.out,
    )


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Returns:
        0 on success, 1 on validation failure, 2 on usage error
    """
    try:
        args = _parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else USAGE_ERROR

    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        config = _run_config(args)
        body = ConvexBodyService.from_spec(config.body)
        logger.info(f"[CLI] {args.command} {args.action} on {body.label}")
        return args.handler(args, config, body)
    except SubFinslerError as exc:
        emit_error(exc.to_dict(), args.json)
        return exc.exit_code
    except ValidationError as exc:
        emit_error({"error": "ValidationError", "detail": str(exc), "errors": exc.errors()}, args.json)
        return 1
    except ValueError as exc:
        emit_error({"error": "ValueError", "detail": str(exc)}, args.json)
        return 1


def main() -> int:
    return run()


if __name__ == "__main__":
    raise SystemExit(main())
