"""Pansu-Wulff shapes, prescribed-curvature characteristics and graph synthesis."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson

from subfinsler.config import settings
from subfinsler.exceptions import CoverageGap, LeafCrossing, OutOfRange, RangeEscape
from subfinsler.models import (
    ConvexBody,
    HeisenbergCurve,
    HeisenbergPoint,
    PlanarCurve,
    Rectangle,
    SurfaceMesh,
    SynthesizedPatch,
    TransversalData,
    WulffShape,
)
from subfinsler.services.convex_body_service import ConvexBodyService
from subfinsler.services.curvature_service import CurvatureService
from subfinsler.services.flow_service import FlowService
from subfinsler.services.graph_service import GraphService
from subfinsler.services.heisenberg_service import HeisenbergService

logger = logging.getLogger(__name__)


class WulffService:
    """Service for the isoperimetric candidates of a convex body."""

    @staticmethod
    def lifted_boundary_curve(body: ConvexBody, v: float, n_samples: int) -> HeisenbergCurve:
        """
        Horizontal lift of the translated boundary arc s -> gamma(s + v) - gamma(v).

        Args:
            body: Convex body
            v: Starting arc length on the boundary
            n_samples: Samples over one period, endpoints included

        Returns:
            HeisenbergCurve from the origin to the apex (0, 0, 2 |K|)
        """
        period = ConvexBodyService.perimeter(body)
        origin, _ = ConvexBodyService.clockwise_point(body, v)
        origin = origin[0]

        def evaluator(s: np.ndarray):
            points, velocity = ConvexBodyService.clockwise_point(body, s + v)
            return (points[:, 0] - origin[0], points[:, 1] - origin[1], velocity[:, 0], velocity[:, 1])

        s = np.linspace(0.0, period, n_samples)
        x, y, dx, dy = evaluator(s)
        planar = PlanarCurve(params=s, x=x, y=y, dx=dx, dy=dy, evaluator=evaluator)
        return HeisenbergService.horizontal_lift(planar, richardson=True)

    @staticmethod
    def curve_h_k(body: ConvexBody, curve: HeisenbergCurve) -> np.ndarray:
        """H_K along a generating curve, listed in the curve's own sample order."""
        framed = CurvatureService.frame_curve(curve, orientation="against")
        return CurvatureService.h_k_along(body, framed).values[::-1]

    @staticmethod
    def _pointwise_horizontality(curve: HeisenbergCurve) -> np.ndarray:
        dt = HeisenbergService.fourth_order_derivative(curve.t, curve.params)
        return np.abs(dt - (curve.y * curve.velocity[:, 0] - curve.x * curve.velocity[:, 1]))

    @staticmethod
    def wulff_shape(body: ConvexBody, n_curves: int = 64, n_samples: int = 1024) -> WulffShape:
        """
        Union of the lifted boundary curves Gamma_v, v over one period.

        Args:
            body: Convex body
            n_curves: Number of generating curves (at least 8)
            n_samples: Samples per curve (at least 64)

        Returns:
            WulffShape with a closed mesh whose poles are the origin and the apex
        """
        if n_curves < 8:
            raise ValueError(f"Need at least 8 generating curves, got {n_curves}")
        if n_samples < 64:
            raise ValueError(f"Need at least 64 samples per curve, got {n_samples}")

        period = ConvexBodyService.perimeter(body)
        area = ConvexBodyService.body_area(body)
        apex = HeisenbergPoint(0.0, 0.0, 2.0 * area)
        v_grid = period * np.arange(n_curves) / n_curves

        with ThreadPoolExecutor(max_workers=max(1, settings.THREADS)) as pool:
            curves = list(pool.map(lambda v: WulffService.lifted_boundary_curve(body, v, n_samples), v_grid))
            h_k = list(pool.map(lambda c: WulffService.curve_h_k(body, c), curves))

        apex_gap = max(float(np.linalg.norm(c.points[-1] - apex.as_array())) for c in curves)
        if apex_gap > settings.APEX_TOL:
            logger.error(f"[WULFF] Generating curves miss the apex by {apex_gap:.3g}")

        mesh = WulffService._mesh(curves, h_k, apex)
        shape = WulffShape(body=body, v_grid=v_grid, curves=curves, mesh=mesh,
                           period=period, apex=apex, apex_gap=apex_gap)
        logger.info(f"[WULFF] {body.label}: {n_curves} curves, {mesh}, apex gap {apex_gap:.3g}")
        return shape

    @staticmethod
    def _mesh(curves: List[HeisenbergCurve], h_k: List[np.ndarray], apex: HeisenbergPoint) -> SurfaceMesh:
        """Quads between consecutive curves; triangle fans at the welded poles 0 (origin) and 1 (apex)."""
        n_curves = len(curves)
        inner = len(curves[0].params) - 2

        def index(j: int, i: int) -> int:
            return 2 + (j % n_curves) * inner + (i - 1)

        vertices = np.vstack([np.zeros((1, 3)), apex.as_array()[None, :]] + [c.points[1:-1] for c in curves])

        faces: List[Tuple[int, ...]] = []
        for j in range(n_curves):
            faces.append((0, index(j, 1), index(j + 1, 1)))
            for i in range(1, inner):
                faces.append((index(j, i), index(j, i + 1), index(j + 1, i + 1), index(j + 1, i)))
            faces.append((index(j, inner), 1, index(j + 1, inner)))

        for face in faces:
            corners = vertices[list(face)]
            normal = np.zeros(3)
            for k in range(1, len(face) - 1):
                normal += np.cross(corners[k] - corners[0], corners[k + 1] - corners[0])
            if np.linalg.norm(normal) <= 1e-15:
                raise ValueError(f"Degenerate mesh face {face}")

        residuals = [WulffService._pointwise_horizontality(c) for c in curves]
        h_k_channel = np.concatenate([
            [np.mean([values[0] for values in h_k]), np.mean([values[-1] for values in h_k])],
            *[values[1:-1] for values in h_k],
        ])
        residual_channel = np.concatenate([
            [max(r[0] for r in residuals), max(r[-1] for r in residuals)],
            *[r[1:-1] for r in residuals],
        ])
        return SurfaceMesh(
            vertices=vertices,
            faces=faces,
            channels={"h_k": h_k_channel, "horizontality_residual": residual_channel},
        )

    @staticmethod
    def prescribed_curve(
        body: ConvexBody,
        f: Callable,
        x0: float,
        y0: float,
        t0: float,
        g0: float,
        span: Tuple[float, float],
        step: float = None,
    ) -> HeisenbergCurve:
        """
        Horizontal curve x -> (x, y(x), t(x)) with H_K = f along it.

        Args:
            body: Convex body
            f: Vectorized prescribed curvature as a function of x
            x0, y0, t0: Point the curve passes through
            g0: Slope y'(x0)
            span: Interval of x containing x0
            step: Grid step

        Returns:
            HeisenbergCurve parameterized by x with (x0, y0, t0) on it
        """
        slope = FlowService.reconstruct_slope(body, f, g0, span, step, anchor=x0)
        xi, g = slope.params, slope.values
        k = int(np.argmin(np.abs(xi - x0)))
        y = cumulative_simpson(g, x=xi, initial=0.0)
        y = y0 + y - y[k]

        lifted = HeisenbergService.horizontal_lift(PlanarCurve(params=xi, x=xi, y=y, dx=np.ones_like(xi), dy=g))
        points = lifted.points.copy()
        points[:, 2] += t0 - points[k, 2]
        logger.debug(f"[WULFF] Prescribed curve through ({x0}, {y0}, {t0}) with {len(xi)} samples")
        return HeisenbergCurve(params=xi, points=points,
                               horizontality_residual=lifted.horizontality_residual, velocity=lifted.velocity)

    @staticmethod
    def synthesize_graph_patch(
        body: ConvexBody,
        f: Callable,
        transversal: TransversalData,
        domain: Rectangle,
        shape: Tuple[int, int],
        n_leaves: int,
        step: float = None,
    ) -> SynthesizedPatch:
        """
        Graph patch whose characteristics carry H_K = f.

        Leaves start on the segment x = a and solve M' = f(xi, t), u' = g,
        t' = 2u with g = F^{-1}(M). Heights are interpolated in t between
        leaves on every lattice column.

        Args:
            body: Convex body
            f: Vectorized function f(x, t)
            transversal: Slope and height on the initial segment
            domain: Lattice rectangle; transversal.a must be a lattice abscissa
            shape: Lattice size (nx, nt)
            n_leaves: Number of leaves across the transversal
            step: Maximal integration step

        Returns:
            SynthesizedPatch with the grid field and the leaves it was built from
        """
        step = step or settings.LEAF_STEP
        nx, nt = shape
        xs = np.linspace(domain.x0, domain.x1, nx)
        ts = np.linspace(domain.t0, domain.t1, nt)
        i_a = int(np.argmin(np.abs(xs - transversal.a)))
        if abs(xs[i_a] - transversal.a) > 1e-9 * max(1.0, domain.width):
            raise ValueError(f"Transversal abscissa {transversal.a} is not a lattice abscissa")

        b_values = np.linspace(transversal.t_range[0], transversal.t_range[1], n_leaves)
        g_start = np.broadcast_to(np.asarray(transversal.g(b_values), dtype=float), b_values.shape)
        u_start = np.broadcast_to(np.asarray(transversal.u(b_values), dtype=float), b_values.shape)

        def slope(xi: float, m: np.ndarray) -> np.ndarray:
            try:
                return np.asarray(ConvexBodyService.F_inverse(body, m))
            except OutOfRange:
                raise RangeEscape(f"M leaves the range of F near xi={xi:.6g}", xi=float(xi)) from None

        def rhs(xi: float, state: np.ndarray) -> np.ndarray:
            m, u, t = state
            f_values = np.broadcast_to(np.asarray(f(xi, t), dtype=float), t.shape)
            return np.stack([f_values, slope(xi, m), 2.0 * u])

        def march(nodes: np.ndarray, state: np.ndarray) -> List[np.ndarray]:
            states = [state]
            for i in range(len(nodes) - 1):
                h_total = nodes[i + 1] - nodes[i]
                substeps = max(1, int(math.ceil(abs(h_total) / step - 1e-9)))
                h = h_total / substeps
                for k in range(substeps):
                    xi = nodes[i] + k * h
                    k1 = rhs(xi, state)
                    k2 = rhs(xi + 0.5 * h, state + 0.5 * h * k1)
                    k3 = rhs(xi + 0.5 * h, state + 0.5 * h * k2)
                    k4 = rhs(xi + h, state + h * k3)
                    state = state + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
                states.append(state)
            return states

        start = np.stack([np.asarray(ConvexBodyService.F_value(body, g_start)), u_start, b_values])
        forward = march(xs[i_a:], start)
        backward = march(xs[: i_a + 1][::-1], start)
        states = np.stack(backward[::-1] + forward[1:], axis=-1)
        M, U, T = states
        G = np.asarray(ConvexBodyService.F_inverse(body, M))

        if np.any(np.diff(T, axis=0) <= 0.0):
            column = int(np.argmax(np.any(np.diff(T, axis=0) <= 0.0, axis=0)))
            raise LeafCrossing(f"Leaves cross near x={xs[column]:.6g}", x=float(xs[column]))

        values = np.empty((nx, nt))
        for i in range(nx):
            slack = 1e-12 * max(1.0, domain.height)
            if T[0, i] > ts[0] + slack or T[-1, i] < ts[-1] - slack:
                raise CoverageGap(
                    f"Leaves cover t in [{T[0, i]:.6g}, {T[-1, i]:.6g}] at x={xs[i]:.6g}, "
                    f"lattice needs [{ts[0]:.6g}, {ts[-1]:.6g}]",
                    x=float(xs[i]),
                )
            values[i] = np.interp(ts, T[:, i], U[:, i])

        field = GraphService.make_grid_field(xs, ts, values, label="synthesized")
        leaves = [
            FlowService.leaf_from_samples(transversal.a, float(b), xs, T[j], U[j], G[j], method="rk4-synthesis")
            for j, b in enumerate(b_values)
        ]
        logger.info(f"[WULFF] Synthesized {nx}x{nt} patch from {n_leaves} leaves")
        return SynthesizedPatch(field=field, leaves=leaves, b_values=b_values)
