"""Commands for convex bodies."""

import sys

import numpy as np

from subfinsler.cli.common import emit
from subfinsler.schemas import BodyReport
from subfinsler.services.convex_body_service import ConvexBodyService


def body_report(body) -> BodyReport:
    return BodyReport(
        label=body.label,
        a0=body.a0,
        harmonics=len(body.cos),
        rho_min=body.rho_min,
        h_min=body.h_min,
        area=ConvexBodyService.body_area(body),
        perimeter=ConvexBodyService.perimeter(body),
        F_range=list(ConvexBodyService.F_range(body)),
    )


def validate(args, config, body) -> int:
    """Validate the body and print its summary."""
    emit(body_report(body), config.out)
    return 0


def show(args, config, body) -> int:
    """
    Tables of h, rho and kappa over the normal angle, and of F and F' over x.

    Rows go to --out when given, stdout otherwise.
    """
    n = config.samples
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    x = np.linspace(-10.0, 10.0, n)
    columns = np.column_stack([
        theta,
        ConvexBodyService.support(body, theta),
        ConvexBodyService.radius_of_curvature(body, theta),
        ConvexBodyService.curvature(body, theta),
        x,
        ConvexBodyService.F_value(body, x),
        ConvexBodyService.F_derivative(body, x),
    ])
    header = "theta,h,rho,kappa,x,F,F_prime"
    np.savetxt(config.out or sys.stdout, columns, fmt="%.17g", delimiter=",", header=header, comments="")
    return 0


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("body", help="Convex body commands")
    actions = parser.add_subparsers(dest="action", required=True)
    actions.add_parser("validate", parents=[common], help="Validate a body").set_defaults(handler=validate)
    actions.add_parser("show", parents=[common], help="Tabulate h, kappa and F").set_defaults(handler=show)
