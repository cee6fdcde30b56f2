"""Shared flags and helpers for the command modules."""

import argparse
import json
import logging
import sys
from typing import List, Optional, Tuple

from pydantic import BaseModel

from subfinsler.cli.expression import parse_expression, to_field
from subfinsler.models import GraphField, Rectangle
from subfinsler.services.export_service import ExportService

logger = logging.getLogger(__name__)

DEFAULT_DOMAIN = Rectangle(-1.0, 1.0, -1.0, 1.0)


def float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def float_pair(text: str) -> Tuple[float, float]:
    values = float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma separated numbers, got {text!r}")
    return values[0], values[1]


def rectangle(text: str) -> Rectangle:
    values = float_list(text)
    if len(values) != 4 or values[0] >= values[1] or values[2] >= values[3]:
        raise argparse.ArgumentTypeError(f"expected x0,x1,t0,t1 with x0 < x1 and t0 < t1, got {text!r}")
    return Rectangle(*values)


def common_parser() -> argparse.ArgumentParser:
    """Flags accepted by every command."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--body", default='{"kind": "disk"}', help="JSON body description")
    parser.add_argument("--field", dest="field_csv", help="CSV grid field with header x,t,u")
    parser.add_argument("--expr", dest="field_expr", help="Analytic field u(x, t)")
    parser.add_argument("--domain", type=rectangle, default=None,
                        help="Domain x0,x1,t0,t1 (default -1,1,-1,1; synthesis uses -0.5,0.5,-0.5,0.5)")
    parser.add_argument("--out", help="Output file")
    parser.add_argument("--json", action="store_true", help="Machine readable errors on stderr")
    parser.add_argument("--step", type=float, default=1e-3,
                        help="Leaf step, or s * sup|v| for finite differences of the area")
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--cells", type=int, default=16)
    parser.add_argument("--order", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--curves", type=int, default=64)
    parser.add_argument("--samples", type=int, default=1024)
    parser.add_argument("--span", type=float_pair, default=None, help="Abscissa interval lo,hi")
    parser.add_argument("--start", type=float_pair, default=None, help="Starting point a,b")
    parser.add_argument("--g0", type=float, default=0.0)
    parser.add_argument("--f-expr", dest="f_expr", default=None, help="Prescribed curvature f(x, t)")
    return parser


def load_field(config, domain: Optional[Rectangle]) -> GraphField:
    """Field from --expr on --domain, or from the --field CSV."""
    if domain is None:
        domain = DEFAULT_DOMAIN
    if config.field_csv:
        return ExportService.read_grid_csv(config.field_csv)
    if config.field_expr:
        return to_field(parse_expression(config.field_expr), domain)
    raise ValueError("this command needs --expr or --field")


def prescribed(config, default: str = "1"):
    return parse_expression(config.f_expr or default)


def emit(report: BaseModel, out: Optional[str] = None) -> None:
    """Print a report as JSON, and also write it when ``out`` names a .json file."""
    payload = report.model_dump_json(indent=2)
    print(payload)
    if out and out.endswith(".json"):
        with open(out, "w") as handle:
            handle.write(payload + "\n")


def emit_error(payload: dict, as_json: bool) -> None:
    if as_json:
        sys.stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    else:
        sys.stderr.write(f"error: {payload.get('detail', payload)}\n")
