"""Identity verification command."""

from subfinsler.cli.common import emit
from subfinsler.services.identity_service import IdentityService


def identities(args, config, body) -> int:
    report = IdentityService.run_suite(body, seed=config.seed, n_normals=args.normals,
                                       n_curves=8, n_samples=config.samples)
    emit(report, config.out)
    return 0 if report.passed else 1


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("check", help="Verification suites")
    actions = parser.add_subparsers(dest="action", required=True)
    sub = actions.add_parser("identities", parents=[common], help="Curvature and d pi_K identities")
    sub.add_argument("--normals", type=int, default=100)
    sub.set_defaults(handler=identities)
