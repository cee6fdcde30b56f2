"""Intrinsic graph service: graph geometry, sub-Finsler area and its variations."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import RegularGridInterpolator

from subfinsler.config import settings
from subfinsler.exceptions import (
    NotHRegular,
    OutOfDomain,
    QuadratureFailure,
    SupportViolation,
    ZeroVolumeVariation,
)
from subfinsler.models import (
    AnalyticSource,
    BumpTestField,
    CompositeTestField,
    GraphField,
    GraphPointData,
    GridSource,
    HeisenbergPoint,
    Rectangle,
)
from subfinsler.services.convex_body_service import ConvexBodyService

logger = logging.getLogger(__name__)


def _gauss_grid(box: Rectangle, cells: int, order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor-product Gauss-Legendre nodes and weights on a box split into cells x cells."""
    nodes, weights = leggauss(order)

    def axis(a: float, b: float):
        edges = np.linspace(a, b, cells + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        return (mid[:, None] + half[:, None] * nodes).ravel(), (half[:, None] * weights).ravel()

    xs, wx = axis(box.x0, box.x1)
    ts, wt = axis(box.t0, box.t1)
    x, t = np.meshgrid(xs, ts, indexing="ij")
    return x, t, np.outer(wx, wt)


def _weighted_sum(weights: np.ndarray, values: np.ndarray) -> float:
    products = (weights * values).ravel()
    if not np.all(np.isfinite(products)):
        raise QuadratureFailure("Integrand evaluated to a non-finite value")
    return math.fsum(products)


class GraphService:
    """Service for intrinsic graphs Gr(u) over rectangles of the plane y = 0."""

    @staticmethod
    def _build(domain: Rectangle, source, check_regularity: bool, n: int = 65) -> GraphField:
        if source.kind == "grid":
            u, u_x, u_t = source.values, source.u_x, source.u_t
        else:
            x, t = np.meshgrid(
                np.linspace(domain.x0, domain.x1, n), np.linspace(domain.t0, domain.t1, n), indexing="ij"
            )
            u, u_x, u_t = source.evaluate(x, t)

        if not np.all(np.isfinite(u)):
            raise OutOfDomain("Field is not finite on its domain")

        g = u_x + 2.0 * u * u_t
        jump = max(float(np.max(np.abs(np.diff(g, axis=0)))), float(np.max(np.abs(np.diff(g, axis=1)))))
        lipschitz = float(np.max(np.hypot(u_x, u_t)))
        if check_regularity and jump > settings.SLOPE_JUMP_THRESHOLD:
            raise NotHRegular(
                f"Slope jump statistic {jump:.4g} exceeds {settings.SLOPE_JUMP_THRESHOLD}",
                slope_jump=jump,
            )
        field = GraphField(domain=domain, source=source, lipschitz_estimate=lipschitz, slope_jump=jump)
        logger.debug(f"[GRAPH] Built {field}")
        return field

    @staticmethod
    def make_analytic_field(
        u: Callable,
        u_x: Callable,
        u_t: Callable,
        domain: Rectangle,
        label: str = "analytic",
        check_regularity: bool = False,
    ) -> GraphField:
        """
        Build a field from vectorized callables of (x, t).

        Args:
            u: Height function
            u_x: Its x derivative
            u_t: Its t derivative
            domain: Rectangle of definition
            label: Name used in reports
            check_regularity: Raise NotHRegular when the slope jump statistic is large

        Returns:
            GraphField with an analytic source
        """
        return GraphService._build(domain, AnalyticSource(u, u_x, u_t, label=label), check_regularity)

    @staticmethod
    def make_grid_field(
        xs: Sequence[float],
        ts: Sequence[float],
        values: np.ndarray,
        label: str = "grid",
        check_regularity: bool = False,
    ) -> GraphField:
        """Build a field from lattice samples indexed [i_x, i_t]."""
        xs = np.asarray(xs, dtype=float)
        ts = np.asarray(ts, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (len(xs), len(ts)) or len(xs) < 3 or len(ts) < 3:
            raise OutOfDomain(f"Grid of shape {values.shape} does not match axes ({len(xs)}, {len(ts)})")

        u_x, u_t = np.gradient(values, xs, ts, edge_order=2)
        interpolators = tuple(
            RegularGridInterpolator((xs, ts), arr, method="linear", bounds_error=False, fill_value=None)
            for arr in (values, u_x, u_t)
        )
        source = GridSource(xs=xs, ts=ts, values=values, u_x=u_x, u_t=u_t, interpolators=interpolators, label=label)
        domain = Rectangle(float(xs[0]), float(xs[-1]), float(ts[0]), float(ts[-1]))
        return GraphService._build(domain, source, check_regularity)

    @staticmethod
    def _evaluate(field: GraphField, x, t, check: bool = True):
        if check and not np.all(field.domain.contains(x, t)):
            raise OutOfDomain(f"Point outside the field domain {field.domain}")
        return field.source.evaluate(x, t)

    @staticmethod
    def slope(field: GraphField, x, t) -> np.ndarray:
        """g = u_x + 2 u u_t."""
        u, u_x, u_t = GraphService._evaluate(field, x, t)
        return u_x + 2.0 * u * u_t

    @staticmethod
    def graph_map(field: GraphField, x: float, t: float) -> HeisenbergPoint:
        """Phi(x, t) = (x, u, t - x u)."""
        u, _, _ = GraphService._evaluate(field, x, t)
        u = float(u)
        return HeisenbergPoint(float(x), u, float(t) - float(x) * u)

    @staticmethod
    def graph_map_array(field: GraphField, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        u, _, _ = GraphService._evaluate(field, x, t)
        return np.stack([x, u, t - x * u], axis=-1)

    @staticmethod
    def point_data(field: GraphField, x: float, t: float) -> GraphPointData:
        """Normals and characteristic direction of Gr(u) at Phi(x, t)."""
        u, u_x, u_t = (float(a) for a in GraphService._evaluate(field, x, t))
        g = u_x + 2.0 * u * u_t
        r = math.hypot(g, 1.0)
        return GraphPointData(
            position=(float(x), float(t)),
            g=g,
            N_tilde=(g, -1.0, u_t),
            N_tilde_h=(g, -1.0),
            nu_h=(g / r, -1.0 / r),
            Z_tilde=(1.0, g),
            Z=(1.0 / r, g / r),
            jac=math.sqrt(g * g + 1.0 + u_t * u_t),
        )

    @staticmethod
    def area_K(field: GraphField, body, cells: int = None, order: int = None) -> float:
        """
        Sub-Finsler area of Gr(u).

        Args:
            field: Graph field
            body: Convex body
            cells: Quadrature cells per axis
            order: Gauss-Legendre order per cell

        Returns:
            Integral over the domain of the dual norm of (g, -1)
        """
        cells = cells or settings.QUADRATURE_CELLS
        order = order or settings.QUADRATURE_ORDER
        x, t, w = _gauss_grid(field.domain, cells, order)
        g = GraphService.slope(field, x, t)
        integrand = ConvexBodyService.dual_norm(body, np.stack([g, -np.ones_like(g)], axis=-1))
        return _weighted_sum(w, integrand)

    @staticmethod
    def perturbed(field: GraphField, v, s: float) -> GraphField:
        """The field u + s v on the same domain."""
        source = field.source
        label = f"{source.label}+{s:g}v"
        if field.is_grid:
            x, t = np.meshgrid(source.xs, source.ts, indexing="ij")
            return GraphService.make_grid_field(source.xs, source.ts, source.values + s * v.evaluate(x, t)[0], label=label)
        return GraphService.make_analytic_field(
            lambda x, t: source.u(x, t) + s * v.evaluate(x, t)[0],
            lambda x, t: source.u_x(x, t) + s * v.evaluate(x, t)[1],
            lambda x, t: source.u_t(x, t) + s * v.evaluate(x, t)[2],
            field.domain,
            label=label,
        )

    @staticmethod
    def area_difference(field: GraphField, v, body, s: float, cells: int = None, order: int = None) -> float:
        """Centered difference (A(u + s v) - A(u - s v)) / 2s."""
        plus = GraphService.area_K(GraphService.perturbed(field, v, s), body, cells, order)
        minus = GraphService.area_K(GraphService.perturbed(field, v, -s), body, cells, order)
        return (plus - minus) / (2.0 * s)

    @staticmethod
    def relative_step(v, step: float) -> float:
        """Perturbation size s with s * sup_norm(v) = step."""
        return step / v.sup_norm

    @staticmethod
    def _check_support(field: GraphField, v, cells: int) -> None:
        margin_x = field.domain.width / cells
        margin_t = field.domain.height / cells
        inner = Rectangle(
            field.domain.x0 + margin_x, field.domain.x1 - margin_x,
            field.domain.t0 + margin_t, field.domain.t1 - margin_t,
        )
        for _, bump in v.terms:
            if not inner.contains_box(bump.support):
                raise SupportViolation(
                    f"Test field support {bump.support} reaches the boundary margin of {field.domain}"
                )

    @staticmethod
    def _bump_integral(bump: BumpTestField, integrand: Callable, cells: int, order: int) -> float:
        x, t, w = _gauss_grid(bump.support, cells, order)
        return _weighted_sum(w, integrand(x, t, *bump.evaluate(x, t)))

    @staticmethod
    def first_variation_area(field: GraphField, v, body, cells: int = None, order: int = None) -> float:
        """
        Derivative of area_K(u + s v) at s = 0.

        Integrates (v_x + 2 v u_t + 2 u v_t) F(g) termwise over the support of
        each bump of v.
        """
        cells = cells or settings.QUADRATURE_CELLS
        order = order or settings.QUADRATURE_ORDER
        GraphService._check_support(field, v, cells)

        def integrand(x, t, val, val_x, val_t):
            u, u_x, u_t = GraphService._evaluate(field, x, t, check=False)
            m = ConvexBodyService.F_value(body, u_x + 2.0 * u * u_t)
            return (val_x + 2.0 * val * u_t + 2.0 * u * val_t) * m

        return math.fsum(coef * GraphService._bump_integral(bump, integrand, cells, order) for coef, bump in v.terms)

    @staticmethod
    def volume_variation(v, cells: int = None, order: int = None) -> float:
        """Integral of v."""
        cells = cells or settings.QUADRATURE_CELLS
        order = order or settings.QUADRATURE_ORDER
        return math.fsum(
            coef * GraphService._bump_integral(bump, lambda x, t, val, *_: val, cells, order)
            for coef, bump in v.terms
        )

    @staticmethod
    def l1_norm(v, cells: int = None, order: int = None) -> float:
        cells = cells or settings.QUADRATURE_CELLS
        order = order or settings.QUADRATURE_ORDER
        if len(v.terms) == 1:
            coef, bump = v.terms[0]
            return abs(coef) * abs(GraphService._bump_integral(bump, lambda x, t, val, *_: val, cells, order))
        box = v.support
        x, t, w = _gauss_grid(box, cells * 2, order)
        return _weighted_sum(w, np.abs(v.evaluate(x, t)[0]))

    @staticmethod
    def criticality_report(
        field: GraphField,
        f: Callable,
        body,
        tests: Sequence,
        cells: int = None,
        order: int = None,
    ) -> List[float]:
        """Normalized residual |Q(v) + int f v| / |v|_1 for every test field."""
        if not tests:
            raise ValueError("criticality needs at least one test field")
        cells = cells or settings.QUADRATURE_CELLS
        order = order or settings.QUADRATURE_ORDER

        def residual(v) -> float:
            q = GraphService.first_variation_area(field, v, body, cells, order)
            source = math.fsum(
                coef * GraphService._bump_integral(bump, lambda x, t, val, *_: f(x, t) * val, cells, order)
                for coef, bump in v.terms
            )
            return abs(q + source) / GraphService.l1_norm(v, cells, order)

        with ThreadPoolExecutor(max_workers=max(1, settings.THREADS)) as pool:
            residuals = list(pool.map(residual, tests))
        logger.info(f"[GRAPH] Criticality over {len(tests)} test fields: max residual {max(residuals):.3g}")
        return residuals

    @staticmethod
    def criticality_residual(field: GraphField, f: Callable, body, tests: Sequence, cells: int = None, order: int = None) -> float:
        return max(GraphService.criticality_report(field, f, body, tests, cells, order))

    @staticmethod
    def h0_estimate(field: GraphField, body, v, cells: int = None, order: int = None) -> float:
        """
        Constant mean curvature proxy -Q(v) / int v.

        E is the epigraph of u, so raising u by s v shrinks E at rate int v.
        """
        volume = GraphService.volume_variation(v, cells, order)
        if volume == 0.0:
            raise ZeroVolumeVariation("Test field has zero volume variation")
        return -GraphService.first_variation_area(field, v, body, cells, order) / volume

    @staticmethod
    def default_battery(domain: Rectangle, cells: int = None) -> List[BumpTestField]:
        """
        Bumps at 3 scales on a 3 x 3 grid of centers, supports aligned with cells.

        Supports keep one cell of margin from the boundary.
        """
        cells = cells or settings.QUADRATURE_CELLS
        wx, wt = domain.width / cells, domain.height / cells
        battery = []
        for scale in (1, 2, 4):
            free = cells - 2 - 2 * scale
            if free < 0:
                continue
            offsets = sorted({0, free // 2, free})
            for kx in offsets:
                for kt in offsets:
                    battery.append(BumpTestField.normalized(
                        domain.x0 + (1 + scale + kx) * wx,
                        domain.t0 + (1 + scale + kt) * wt,
                        scale * wx,
                        scale * wt,
                    ))
        return battery

    @staticmethod
    def random_battery(domain: Rectangle, n: int, seed: int, cells: int = None) -> List[BumpTestField]:
        """Cell-aligned bumps with random scale and position drawn from ``seed``."""
        cells = cells or settings.QUADRATURE_CELLS
        rng = np.random.default_rng(seed)
        wx, wt = domain.width / cells, domain.height / cells
        battery = []
        for _ in range(n):
            sx, st = (int(k) for k in rng.integers(1, max(2, cells // 4) + 1, size=2))
            kx = int(rng.integers(0, max(1, cells - 1 - 2 * sx)))
            kt = int(rng.integers(0, max(1, cells - 1 - 2 * st)))
            battery.append(BumpTestField.normalized(
                domain.x0 + (1 + sx + kx) * wx, domain.t0 + (1 + st + kt) * wt, sx * wx, st * wt,
            ))
        return battery

    @staticmethod
    def combine(*pairs: Tuple[float, BumpTestField]) -> CompositeTestField:
        """Linear combination sum c_i v_i of bump test fields."""
        return CompositeTestField(terms=tuple((float(c), v) for c, v in pairs))
