"""CSV and OBJ export service."""

import logging
from typing import Optional

import numpy as np

from subfinsler.exceptions import GridMismatch
from subfinsler.models import CurveScalar, GraphField, HeisenbergCurve, Leaf, SurfaceMesh
from subfinsler.services.graph_service import GraphService
from subfinsler.services.heisenberg_service import HeisenbergService

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class ExportService:
    """Service for writing and reading sampled objects."""

    @staticmethod
    def _write_columns(path: str, header: str, columns) -> None:
        np.savetxt(path, np.column_stack(columns), fmt=FLOAT_FORMAT, delimiter=",", header=header, comments="")

    @staticmethod
    def write_curve_csv(curve: HeisenbergCurve, path: str) -> None:
        """Write a curve as s,x,y,t rows."""
        ExportService._write_columns(path, "s,x,y,t", [curve.params, curve.x, curve.y, curve.t])
        logger.info(f"[EXPORT] Wrote {len(curve)} curve samples to {path}")

    @staticmethod
    def read_curve_csv(path: str) -> HeisenbergCurve:
        data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
        params, points = data[:, 0], data[:, 1:4]
        residual = HeisenbergService.horizontality_residual(params, points) if len(params) >= 5 else float("nan")
        return HeisenbergCurve(params=params, points=points, horizontality_residual=residual)

    @staticmethod
    def write_grid_csv(field: GraphField, path: str) -> None:
        """Write a grid field as x,t,u rows, t varying fastest."""
        source = field.source
        x, t = np.meshgrid(source.xs, source.ts, indexing="ij")
        ExportService._write_columns(path, "x,t,u", [x.ravel(), t.ravel(), source.values.ravel()])
        logger.info(f"[EXPORT] Wrote {source.values.size} grid samples to {path}")

    @staticmethod
    def read_grid_csv(path: str, label: Optional[str] = None) -> GraphField:
        """
        Read a field sampled on a full regular lattice.

        Args:
            path: CSV file with header x,t,u
            label: Name used in reports, defaults to the path

        Returns:
            Grid GraphField
        """
        data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
        xs = np.unique(data[:, 0])
        ts = np.unique(data[:, 1])
        if len(data) != len(xs) * len(ts):
            raise GridMismatch(
                f"{len(data)} rows do not fill a {len(xs)} x {len(ts)} lattice",
                rows=len(data),
            )
        values = np.full((len(xs), len(ts)), np.nan)
        values[np.searchsorted(xs, data[:, 0]), np.searchsorted(ts, data[:, 1])] = data[:, 2]
        if np.any(np.isnan(values)):
            raise GridMismatch("Lattice has duplicate or missing samples")
        return GraphService.make_grid_field(xs, ts, values, label=label or path)

    @staticmethod
    def write_leaf_csv(leaf: Leaf, m: CurveScalar, f_estimate: CurveScalar, path: str) -> None:
        """Write a leaf as xi,t,g,M,f_est rows."""
        ExportService._write_columns(path, "xi,t,g,M,f_est", [leaf.xi, leaf.t, leaf.g, m.values, f_estimate.values])
        logger.info(f"[EXPORT] Wrote leaf from ({leaf.a}, {leaf.b}) to {path}")

    @staticmethod
    def write_obj(mesh: SurfaceMesh, path: str) -> None:
        """Write vertices and faces, 1-based, as Wavefront OBJ."""
        with open(path, "w") as handle:
            handle.write("# x y t coordinates\n")
            for x, y, t in mesh.vertices:
                handle.write(f"v {x:.17g} {y:.17g} {t:.17g}\n")
            for face in mesh.faces:
                handle.write("f " + " ".join(str(i + 1) for i in face) + "\n")
        logger.info(f"[EXPORT] Wrote {mesh} to {path}")

    @staticmethod
    def write_channels_csv(mesh: SurfaceMesh, path: str) -> None:
        """Write per-vertex scalar channels keyed by 0-based vertex index."""
        names = sorted(mesh.channels)
        index = np.arange(len(mesh.vertices))
        ExportService._write_columns(path, ",".join(["index"] + names), [index] + [mesh.channels[n] for n in names])
