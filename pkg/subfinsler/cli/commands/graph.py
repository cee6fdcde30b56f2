"""Commands for intrinsic graphs: area, first variation and criticality."""

from subfinsler.cli.common import emit, float_list, load_field, prescribed
from subfinsler.config import settings
from subfinsler.models import BumpTestField
from subfinsler.schemas import AreaReport, CriticalityReport, VariationReport
from subfinsler.services.graph_service import GraphService


def area(args, config, body) -> int:
    field = load_field(config, args.domain)
    value = GraphService.area_K(field, body, config.cells, config.order)
    emit(AreaReport(body=body.label, field=field.source.label, area=value,
                    cells=config.cells, order=config.order), config.out)
    return 0


def _test_field(args, field) -> BumpTestField:
    if args.bump:
        values = float_list(args.bump)
        if len(values) != 4:
            raise ValueError("--bump expects cx,ct,rx,rt")
        return BumpTestField.normalized(*values)
    return GraphService.default_battery(field.domain, args.cells)[0]


def variation(args, config, body) -> int:
    """First variation against one bump, its finite-difference check and the h0 proxy."""
    field = load_field(config, args.domain)
    v = _test_field(args, field)
    q = GraphService.first_variation_area(field, v, body, config.cells, config.order)
    s = GraphService.relative_step(v, config.step)
    volume = GraphService.volume_variation(v, config.cells, config.order)
    report = VariationReport(
        body=body.label,
        field=field.source.label,
        first_variation=q,
        volume_variation=volume,
        h0_estimate=GraphService.h0_estimate(field, body, v, config.cells, config.order),
        finite_difference=GraphService.area_difference(field, v, body, s, config.cells, config.order),
        step=config.step,
        effective_step=s,
    )
    emit(report, config.out)
    return 0


def critical(args, config, body) -> int:
    """Criticality residual against f over the default and a seeded random battery."""
    field = load_field(config, args.domain)
    f = prescribed(config)
    tests = GraphService.default_battery(field.domain, config.cells)
    tests += GraphService.random_battery(field.domain, 8, config.seed, config.cells)
    residuals = GraphService.criticality_report(field, f, body, tests, config.cells, config.order)
    if config.tol is not None:
        tolerance = config.tol
    else:
        tolerance = settings.CRITICALITY_TOL_GRID if field.is_grid else settings.CRITICALITY_TOL_ANALYTIC
    report = CriticalityReport(
        body=body.label,
        field=field.source.label,
        tests=len(tests),
        residuals=residuals,
        max_residual=max(residuals),
        tolerance=tolerance,
        passed=max(residuals) <= tolerance,
    )
    emit(report, config.out)
    return 0 if report.passed else 1


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("graph", help="Intrinsic graph computations")
    actions = parser.add_subparsers(dest="action", required=True)
    actions.add_parser("area", parents=[common], help="Sub-Finsler area").set_defaults(handler=area)
    sub = actions.add_parser("variation", parents=[common], help="First variation against a bump")
    sub.add_argument("--bump", default=None, help="Test bump cx,ct,rx,rt")
    sub.set_defaults(handler=variation)
    actions.add_parser("critical", parents=[common], help="Criticality residual").set_defaults(handler=critical)
