"""Commands for Pansu-Wulff shapes."""

import logging
import os

import numpy as np

from subfinsler.config import settings
from subfinsler.schemas import WulffReport
from subfinsler.services.convex_body_service import ConvexBodyService
from subfinsler.services.export_service import ExportService
from subfinsler.services.wulff_service import WulffService

logger = logging.getLogger(__name__)


def generate(args, config, body) -> int:
    """Build the Wulff shape; --out receives the OBJ mesh and a sibling channel CSV."""
    shape = WulffService.wulff_shape(body, config.curves, config.samples)
    mesh = shape.mesh

    if config.out:
        ExportService.write_obj(mesh, config.out)
        ExportService.write_channels_csv(mesh, os.path.splitext(config.out)[0] + ".channels.csv")

    report = WulffReport(
        body=body.label,
        n_curves=len(shape.curves),
        n_samples=len(shape.curves[0]),
        period=shape.period,
        area=ConvexBodyService.body_area(body),
        apex=shape.apex.as_array().tolist(),
        apex_gap=shape.apex_gap,
        max_h_k_gap=float(np.max(np.abs(mesh.channels["h_k"] - 1.0))),
        max_horizontality_residual=float(max(c.horizontality_residual for c in shape.curves)),
        vertices=len(mesh.vertices),
        faces=len(mesh.faces),
    )
    print(report.model_dump_json(indent=2))
    if report.apex_gap > settings.APEX_TOL:
        logger.error(f"[CLI] Apex gap {report.apex_gap:.3g} exceeds {settings.APEX_TOL}")
        return 1
    return 0


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("wulff", help="Pansu-Wulff shapes")
    actions = parser.add_subparsers(dest="action", required=True)
    actions.add_parser("generate", parents=[common], help="Generate the shape mesh").set_defaults(handler=generate)
