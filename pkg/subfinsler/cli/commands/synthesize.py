"""Commands for graph synthesis from transversal data."""

from subfinsler.cli.common import float_pair, prescribed
from subfinsler.cli.expression import parse_expression
from subfinsler.config import settings
from subfinsler.models import Rectangle, TransversalData
from subfinsler.schemas import SynthesisReport
from subfinsler.services.export_service import ExportService
from subfinsler.services.graph_service import GraphService
from subfinsler.services.wulff_service import WulffService

# f = 1 on the disk keeps M = x - a inside the range of F for |x - a| < 1.
PATCH_DOMAIN = Rectangle(-0.5, 0.5, -0.5, 0.5)


def patch(args, config, body) -> int:
    """Synthesize a grid patch; --out receives the x,t,u lattice."""
    domain = args.domain if args.domain is not None else PATCH_DOMAIN
    a = args.start[0] if args.start else 0.5 * (domain.x0 + domain.x1)
    f = prescribed(config)
    g_profile = parse_expression(args.g0_expr) if args.g0_expr else None
    u_profile = parse_expression(args.u0_expr)
    transversal = TransversalData(
        a=a,
        t_range=args.transversal,
        g=(lambda t: g_profile(0.0, t)) if g_profile else (lambda t: args.g0 + 0.0 * t),
        u=lambda t: u_profile(0.0, t),
    )
    nx, nt = (int(n) for n in args.shape)
    result = WulffService.synthesize_graph_patch(body, f, transversal, domain, (nx, nt), args.leaves, config.step)
    field = result.field
    if config.out:
        ExportService.write_grid_csv(field, config.out)

    tests = GraphService.default_battery(field.domain, config.cells)
    residuals = GraphService.criticality_report(field, f, body, tests, config.cells, config.order)
    tolerance = config.tol or settings.CRITICALITY_TOL_GRID
    report = SynthesisReport(
        leaves=len(result.leaves),
        shape=[nx, nt],
        max_residual=max(residuals),
        tolerance=tolerance,
        passed=max(residuals) <= tolerance,
        h0_estimate=GraphService.h0_estimate(field, body, tests[0], config.cells, config.order),
    )
    print(report.model_dump_json(indent=2))
    return 0 if report.passed else 1


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("synthesize", help="Prescribed curvature synthesis")
    actions = parser.add_subparsers(dest="action", required=True)
    sub = actions.add_parser("patch", parents=[common], help="Synthesize a graph patch")
    sub.add_argument("--shape", type=float_pair, default=(201, 101), help="Lattice size nx,nt")
    sub.add_argument("--transversal", type=float_pair, default=(-0.6, 0.6), help="Leaf heights lo,hi at x = a")
    sub.add_argument("--leaves", type=int, default=121)
    sub.add_argument("--g0-expr", dest="g0_expr", default=None, help="Transversal slope profile in t")
    sub.add_argument("--u0-expr", dest="u0_expr", default="0", help="Transversal height profile in t")
    sub.set_defaults(handler=patch)
