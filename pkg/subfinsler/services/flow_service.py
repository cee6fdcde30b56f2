"""Characteristic flow service: leaves, the epsilon-family chart and curvature along leaves."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import cumulative_simpson, simpson
from scipy.signal import savgol_filter

from subfinsler.config import settings
from subfinsler.exceptions import (
    OrderingViolation,
    OutOfDomain,
    RangeEscape,
    StartOutOfDomain,
    StepTooLarge,
    SupportOutsideChart,
    TooFewSamples,
)
from subfinsler.models import (
    BumpTestField,
    CharacteristicFamily,
    CurveScalar,
    GraphField,
    HeisenbergCurve,
    Leaf,
    Rectangle,
)
from subfinsler.schemas import RegularityReport
from subfinsler.services.convex_body_service import ConvexBodyService
from subfinsler.services.graph_service import GraphService
from subfinsler.services.heisenberg_service import HeisenbergService

logger = logging.getLogger(__name__)


def _uniform_nodes(anchor: float, span: Tuple[float, float], step: float) -> Tuple[np.ndarray, int]:
    """Nodes anchor + k step inside span, and the index of the anchor."""
    lo, hi = float(span[0]), float(span[1])
    if not lo <= anchor <= hi:
        raise OutOfDomain(f"Anchor {anchor} outside span [{lo}, {hi}]")
    k_min = -int(math.floor((anchor - lo) / step + 1e-9))
    k_max = int(math.floor((hi - anchor) / step + 1e-9))
    k = np.arange(k_min, k_max + 1)
    return anchor + k * step, -k_min


def _is_uniform(params: np.ndarray) -> bool:
    steps = np.diff(params)
    return bool(np.max(np.abs(steps - steps.mean())) <= 1e-9 * abs(steps.mean()))


class FlowService:
    """Service for characteristic curves of intrinsic graphs."""

    @staticmethod
    def _rk4(rhs: Callable, xi: float, t: float, h: float) -> float:
        k1 = rhs(xi, t)
        k2 = rhs(xi + 0.5 * h, t + 0.5 * h * k1)
        k3 = rhs(xi + 0.5 * h, t + 0.5 * h * k2)
        k4 = rhs(xi + h, t + h * k3)
        return t + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

    @staticmethod
    def _heun(rhs: Callable, xi: float, t: float, h: float, substeps: int) -> float:
        dh = h / substeps
        for i in range(substeps):
            x = xi + i * dh
            k1 = rhs(x, t)
            k2 = rhs(x + dh, t + dh * k1)
            t = t + 0.5 * dh * (k1 + k2)
        return t

    @staticmethod
    def _heun_richardson(rhs: Callable, xi: float, t: float, h: float) -> Tuple[float, float]:
        """One output step with half-step Richardson control; returns (t, error estimate)."""
        substeps = 1
        coarse = FlowService._heun(rhs, xi, t, h, substeps)
        for _ in range(settings.HEUN_MAX_REFINEMENTS):
            fine = FlowService._heun(rhs, xi, t, h, 2 * substeps)
            error = abs(fine - coarse) / 3.0
            if error <= settings.HEUN_TOL:
                break
            substeps *= 2
            coarse = fine
        else:
            logger.warning(f"[FLOW] Step refinement exhausted at xi={xi:.6g}, error {error:.3g}")
        return fine + (fine - coarse) / 3.0, error

    @staticmethod
    def _march(field: GraphField, nodes: np.ndarray, t0: float) -> Tuple[np.ndarray, bool, float]:
        """Integrate t' = 2u from nodes[0] through the given nodes; stops when leaving the domain."""
        source = field.source

        def rhs(x: float, t: float) -> float:
            return 2.0 * float(source.height(x, t))

        ts = [t0]
        worst = 0.0
        for i in range(len(nodes) - 1):
            h = nodes[i + 1] - nodes[i]
            if field.is_grid:
                t_next, error = FlowService._heun_richardson(rhs, nodes[i], ts[-1], h)
                worst = max(worst, error)
            else:
                t_next = FlowService._rk4(rhs, nodes[i], ts[-1], h)
            if not (np.isfinite(t_next) and field.domain.contains(nodes[i + 1], t_next)):
                return np.array(ts), True, worst
            ts.append(t_next)
        return np.array(ts), False, worst

    @staticmethod
    def leaf_from_samples(
        a: float,
        b: float,
        xi: np.ndarray,
        t: np.ndarray,
        u: np.ndarray,
        g: np.ndarray,
        exited: bool = False,
        error_estimate: float = 0.0,
        method: str = "rk4",
    ) -> Leaf:
        """Assemble a leaf and its lifting xi -> (xi, u, t - xi u)."""
        points = np.stack([xi, u, t - xi * u], axis=-1)
        residual = HeisenbergService.horizontality_residual(xi, points) if len(xi) >= 5 else float("nan")
        lifted = HeisenbergCurve(params=xi, points=points, horizontality_residual=residual)
        return Leaf(a=a, b=b, xi=xi, t=t, u=u, g=g, lifted=lifted,
                    exited=exited, error_estimate=error_estimate, method=method)

    @staticmethod
    def integrate_leaf(
        field: GraphField,
        a: float,
        b: float,
        span: Tuple[float, float],
        step: float = None,
        check_ordering: bool = True,
    ) -> Leaf:
        """
        Integrate the characteristic t' = 2u(xi, t), t(a) = b.

        Args:
            field: Graph field
            a: Base abscissa
            b: Starting height
            span: Interval of abscissas, containing a and inside the domain
            step: Output step; samples are a + k step inside span
            check_ordering: Compare with a neighbor leaf started slightly above

        Returns:
            Leaf sampled on a uniform grid; ``exited`` flags an early stop
        """
        step = step or settings.LEAF_STEP
        if not field.domain.contains(a, b):
            raise StartOutOfDomain(f"Start ({a}, {b}) outside {field.domain}")
        if span[0] < field.domain.x0 - 1e-12 or span[1] > field.domain.x1 + 1e-12:
            raise OutOfDomain(f"Span {span} leaves the domain {field.domain}")

        nodes, i0 = _uniform_nodes(a, span, step)
        forward, exit_f, err_f = FlowService._march(field, nodes[i0:], b)
        backward, exit_b, err_b = FlowService._march(field, nodes[: i0 + 1][::-1], b)
        t = np.concatenate([backward[::-1], forward[1:]])
        start = i0 - (len(backward) - 1)
        xi = nodes[start : start + len(t)]
        exited = exit_f or exit_b
        if exited:
            logger.warning(f"[FLOW] Leaf from ({a:.6g}, {b:.6g}) left the domain after {len(t)} samples")

        u, u_x, u_t = field.source.evaluate(xi, t)
        leaf = FlowService.leaf_from_samples(
            a, b, xi, t, np.array(u), u_x + 2.0 * u * u_t,
            exited=exited, error_estimate=max(err_f, err_b),
            method="heun-richardson" if field.is_grid else "rk4",
        )

        if check_ordering:
            FlowService._check_neighbor(field, leaf, span, step)
        return leaf

    @staticmethod
    def _check_neighbor(field: GraphField, leaf: Leaf, span, step: float) -> None:
        delta = 1e-6 * max(1.0, field.domain.height)
        sign = 1.0 if field.domain.contains(leaf.a, leaf.b + delta) else -1.0
        neighbor = FlowService.integrate_leaf(field, leaf.a, leaf.b + sign * delta, span, step, check_ordering=False)
        k0 = int(round((max(leaf.xi[0], neighbor.xi[0]) - leaf.xi[0]) / step))
        p0 = int(round((max(leaf.xi[0], neighbor.xi[0]) - neighbor.xi[0]) / step))
        n = min(len(leaf.xi) - k0, len(neighbor.xi) - p0)
        gap = sign * (neighbor.t[p0 : p0 + n] - leaf.t[k0 : k0 + n])
        if n > 0 and np.any(gap <= 0.0):
            raise StepTooLarge(f"Neighbor leaf crossed the leaf from ({leaf.a}, {leaf.b}); reduce the step", step=step)

    @staticmethod
    def build_family(
        field: GraphField,
        a: float,
        b: float,
        eps_range: Tuple[float, float],
        n_leaves: int,
        span: Tuple[float, float],
        step: float = None,
    ) -> CharacteristicFamily:
        """
        Leaves t_eps with t_eps(a) = b + eps on a uniform eps grid, and the chart Jacobian.

        The chart is sampled on the abscissas shared by all leaves.
        """
        step = step or settings.LEAF_STEP
        if n_leaves < 2:
            raise ValueError("A family needs at least two leaves")
        eps = np.linspace(eps_range[0], eps_range[1], n_leaves)
        for e in (eps[0], eps[-1]):
            if not field.domain.contains(a, b + e):
                raise StartOutOfDomain(f"Start ({a}, {b + e}) outside {field.domain}")

        def trace(e: float) -> Leaf:
            return FlowService.integrate_leaf(field, a, b + e, span, step, check_ordering=False)

        with ThreadPoolExecutor(max_workers=max(1, settings.THREADS)) as pool:
            leaves = list(pool.map(trace, eps))

        first = max(leaf.xi[0] for leaf in leaves)
        last = min(leaf.xi[-1] for leaf in leaves)
        n = int(round((last - first) / step)) + 1
        rows = []
        for leaf in leaves:
            k = int(round((first - leaf.xi[0]) / step))
            rows.append(leaf.t[k : k + n])
        xi = leaves[0].xi[int(round((first - leaves[0].xi[0]) / step)) :][:n]
        t = np.vstack(rows)

        if np.any(np.diff(t, axis=0) <= 0.0):
            raise OrderingViolation("Leaves of the family are not ordered in eps")
        if n_leaves >= 3:
            jacobian = np.gradient(t, eps, axis=0, edge_order=2)
        else:
            jacobian = np.repeat(np.diff(t, axis=0) / np.diff(eps)[:, None], 2, axis=0)
        if np.any(jacobian <= 0.0):
            raise OrderingViolation("Chart jacobian is not positive")

        family = CharacteristicFamily(a=a, b=b, eps=eps, leaves=leaves, xi=xi, t=t, jacobian=jacobian)
        logger.info(f"[FLOW] Built {family}")
        return family

    @staticmethod
    def change_of_variables_check(family: CharacteristicFamily, psi: BumpTestField) -> Tuple[float, float]:
        """
        Integrate psi over the chart image directly and through the chart.

        Returns:
            (integral over the image, integral of psi(G) times the jacobian)
        """
        box = psi.support
        inside = (family.xi >= box.x0) & (family.xi <= box.x1)
        covers = (
            family.xi[0] <= box.x0
            and family.xi[-1] >= box.x1
            and np.all(family.t[0, inside] < box.t0)
            and np.all(family.t[-1, inside] > box.t1)
        )
        if not covers:
            raise SupportOutsideChart(f"Support {box} is not inside the chart image")

        nodes, weights = leggauss(settings.QUADRATURE_ORDER)
        cells = settings.QUADRATURE_CELLS

        def axis(a: float, b: float):
            edges = np.linspace(a, b, cells + 1)
            mid = 0.5 * (edges[:-1] + edges[1:])
            half = 0.5 * (edges[1:] - edges[:-1])
            return (mid[:, None] + half[:, None] * nodes).ravel(), (half[:, None] * weights).ravel()

        xs, wx = axis(box.x0, box.x1)
        ts, wt = axis(box.t0, box.t1)
        x, t = np.meshgrid(xs, ts, indexing="ij")
        image = math.fsum((np.outer(wx, wt) * psi.evaluate(x, t)[0]).ravel())

        values = psi.evaluate(family.xi[None, :], family.t)[0] * family.jacobian
        chart = float(simpson(simpson(values, x=family.eps, axis=0), x=family.xi))
        return image, chart

    @staticmethod
    def invert_chart(field: GraphField, family: CharacteristicFamily, s: float, t: float, step: float = None) -> float:
        """Parameter eps of the leaf through (s, t), found by flowing back to xi = a."""
        step = step or settings.LEAF_STEP
        if s == family.a:
            return t - family.b
        n = max(1, int(math.ceil(abs(s - family.a) / step)))
        span = (min(s, family.a), max(s, family.a))
        leaf = FlowService.integrate_leaf(field, s, t, span, abs(s - family.a) / n, check_ordering=False)
        if leaf.exited:
            raise SupportOutsideChart(f"Characteristic through ({s}, {t}) leaves the domain before reaching a")
        end = leaf.t[0] if family.a < s else leaf.t[-1]
        return float(end - family.b)

    @staticmethod
    def ode_residual(field: GraphField, leaf: Leaf) -> float:
        """max |t'(xi) - 2u(xi, t(xi))| with t' by fourth-order differences."""
        dt = HeisenbergService.fourth_order_derivative(leaf.t, leaf.xi)
        return float(np.max(np.abs(dt - 2.0 * field.source.height(leaf.xi, leaf.t))))

    @staticmethod
    def exponential_jacobian(field: GraphField, leaf: Leaf) -> np.ndarray:
        """exp of the integral of 2 u_t from a along the leaf."""
        _, _, u_t = field.source.evaluate(leaf.xi, leaf.t)
        integral = cumulative_simpson(2.0 * u_t, x=leaf.xi, initial=0.0)
        k = int(np.argmin(np.abs(leaf.xi - leaf.a)))
        return np.exp(integral - integral[k])

    @staticmethod
    def m_along(leaf: Leaf, body) -> CurveScalar:
        """M = F(g) along the leaf."""
        return CurveScalar(params=leaf.xi, values=np.asarray(ConvexBodyService.F_value(body, leaf.g)))

    @staticmethod
    def estimate_f(m: CurveScalar, window: int = None) -> CurveScalar:
        """
        dM/dxi by local least-squares quadratics over 2 window + 1 samples.

        Args:
            m: Samples of M on the leaf grid
            window: Half width of the fitting window

        Returns:
            CurveScalar of f estimates with the per-point fit residual
        """
        window = window or settings.ESTIMATE_WINDOW
        length = 2 * window + 1
        if len(m.params) < length:
            raise TooFewSamples(f"Need at least {length} samples, got {len(m.params)}", samples=len(m.params))

        values = np.asarray(m.values, dtype=float)
        if _is_uniform(m.params):
            h = float(np.mean(np.diff(m.params)))
            slope = savgol_filter(values, length, 2, deriv=1, delta=h, mode="interp")
            fitted = savgol_filter(values, length, 2, mode="interp")
        else:
            slope = np.empty_like(values)
            fitted = np.empty_like(values)
            n = len(values)
            for i in range(n):
                lo = min(max(0, i - window), n - length)
                c = np.polyfit(m.params[lo : lo + length] - m.params[i], values[lo : lo + length], 2)
                slope[i], fitted[i] = c[1], c[2]
        return CurveScalar(params=m.params, values=slope, residual=np.abs(values - fitted))

    @staticmethod
    def regularity_diagnostic(leaf: Union[Leaf, HeisenbergCurve]) -> RegularityReport:
        """
        Second-difference convergence test on the lifted curve.

        Max second-difference quotients at spacings h, 2h and 4h, taken on the
        same interior centers, stabilize on C^2 curves and grow like 1/h at a corner.
        """
        curve = leaf.lifted if isinstance(leaf, Leaf) else leaf
        points, params = curve.points, curve.params
        if len(params) < 13:
            raise TooFewSamples(f"Need at least 13 samples, got {len(params)}", samples=len(params))
        if not _is_uniform(params):
            raise ValueError("Regularity diagnostic needs a uniform parameter grid")

        h = float(np.mean(np.diff(params)))
        centers = np.arange(4, len(params) - 4)
        quotients = []
        for k in (1, 2, 4):
            second = points[centers + k] - 2.0 * points[centers] + points[centers - k]
            quotients.append(float(np.max(np.abs(second))) / (k * h) ** 2)

        floor = 1e-6 * (1.0 + float(np.max(np.abs(points))))
        ratios = [quotients[0] / max(quotients[1], 1e-300), quotients[1] / max(quotients[2], 1e-300)]
        if quotients[0] <= floor:
            verdict = "C2_CONSISTENT"
        elif max(abs(r - 1.0) for r in ratios) < settings.REGULARITY_DRIFT:
            verdict = "C2_CONSISTENT"
        elif min(ratios) > 1.25:
            verdict = "C2_VIOLATION"
        else:
            verdict = "INCONCLUSIVE"
        return RegularityReport(samples=len(params), quotients=quotients, ratios=ratios, verdict=verdict)

    @staticmethod
    def reconstruct_slope(
        body,
        f: Callable,
        g0: float,
        span: Tuple[float, float],
        step: float = None,
        anchor: float = 0.0,
    ) -> CurveScalar:
        """
        Slope profile with M' = f and g(anchor) = g0.

        Args:
            body: Convex body
            f: Vectorized function of xi
            g0: Slope at the anchor
            span: Interval of abscissas containing the anchor
            step: Grid step
            anchor: Abscissa where the slope is prescribed

        Returns:
            CurveScalar of g on the grid anchor + k step
        """
        step = step or settings.LEAF_STEP
        xi, i0 = _uniform_nodes(anchor, span, step)
        values = np.broadcast_to(np.asarray(f(xi), dtype=float), xi.shape)
        integral = cumulative_simpson(values, x=xi, initial=0.0) if len(xi) > 1 else np.zeros(1)
        m = ConvexBodyService.F_value(body, g0) + integral - integral[i0]

        lo, hi = ConvexBodyService.F_range(body)
        outside = np.flatnonzero((m <= lo) | (m >= hi))
        if len(outside):
            k = outside[np.argmin(np.abs(outside - i0))]
            raise RangeEscape(
                f"M leaves the range of F at xi={xi[k]:.6g}; the characteristic turns vertical",
                xi=float(xi[k]),
            )
        return CurveScalar(params=xi, values=np.asarray(ConvexBodyService.F_inverse(body, m)))

    @staticmethod
    def across_leaf_quotient(leaves: Sequence[Leaf], index: int) -> float:
        """max |g_j+1 - g_j| / |t_j+1 - t_j| between adjacent leaves at one sample index."""
        t = np.array([leaf.t[index] for leaf in leaves])
        g = np.array([leaf.g[index] for leaf in leaves])
        order = np.argsort(t)
        return float(np.max(np.abs(np.diff(g[order])) / np.diff(t[order])))
