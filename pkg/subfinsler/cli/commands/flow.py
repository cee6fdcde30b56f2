"""Commands for characteristic curves."""

from subfinsler.cli.common import emit, float_pair, load_field
from subfinsler.schemas import FamilyReport, LeafReport
from subfinsler.services.export_service import ExportService
from subfinsler.services.flow_service import FlowService


def _leaf(args, config, field):
    a, b = args.start or (0.5 * (field.domain.x0 + field.domain.x1), 0.5 * (field.domain.t0 + field.domain.t1))
    span = args.span or (field.domain.x0, field.domain.x1)
    return FlowService.integrate_leaf(field, a, b, span, config.step)


def trace(args, config, body) -> int:
    """Trace one leaf; --out receives the xi,t,g,M,f_est table."""
    field = load_field(config, args.domain)
    leaf = _leaf(args, config, field)
    m = FlowService.m_along(leaf, body)
    if config.out:
        ExportService.write_leaf_csv(leaf, m, FlowService.estimate_f(m), config.out)
    report = LeafReport(
        a=leaf.a,
        b=leaf.b,
        samples=len(leaf.xi),
        method=leaf.method,
        exited=leaf.exited,
        error_estimate=leaf.error_estimate,
        ode_residual=FlowService.ode_residual(field, leaf),
        horizontality_residual=leaf.lifted.horizontality_residual,
    )
    print(report.model_dump_json(indent=2))
    return 0


def family(args, config, body) -> int:
    field = load_field(config, args.domain)
    a, b = args.start or (field.domain.x0, 0.5 * (field.domain.t0 + field.domain.t1))
    span = args.span or (field.domain.x0, field.domain.x1)
    built = FlowService.build_family(field, a, b, args.eps, args.leaves, span, config.step)
    emit(FamilyReport(
        leaves=len(built.leaves),
        samples=len(built.xi),
        min_jacobian=float(built.jacobian.min()),
        max_jacobian=float(built.jacobian.max()),
    ), config.out)
    return 0


def diagnose(args, config, body) -> int:
    """Regularity verdict for a curve CSV (--curve) or a traced leaf."""
    if args.curve:
        target = ExportService.read_curve_csv(args.curve)
    else:
        target = _leaf(args, config, load_field(config, args.domain))
    emit(FlowService.regularity_diagnostic(target), config.out)
    return 0


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("flow", help="Characteristic curves")
    actions = parser.add_subparsers(dest="action", required=True)
    actions.add_parser("trace", parents=[common], help="Trace one leaf").set_defaults(handler=trace)
    sub = actions.add_parser("family", parents=[common], help="Leaf family and chart jacobian")
    sub.add_argument("--eps", type=float_pair, default=(-0.05, 0.05), help="Offset interval lo,hi")
    sub.add_argument("--leaves", type=int, default=21)
    sub.set_defaults(handler=family)
    sub = actions.add_parser("diagnose", parents=[common], help="Second-difference regularity test")
    sub.add_argument("--curve", default=None, help="Curve CSV with header s,x,y,t")
    sub.set_defaults(handler=diagnose)
