"""Convex body service: support function geometry, norms and the function F."""

import logging
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from subfinsler.config import settings
from subfinsler.exceptions import NotConvexPlus, OriginOutside, OutOfRange, ZeroVector
from subfinsler.models import ConvexBody

logger = logging.getLogger(__name__)


def _output(value: np.ndarray, scalar: bool):
    return float(value) if scalar else value


class ConvexBodyService:
    """Service for convex bodies described by a truncated Fourier support function."""

    @staticmethod
    def make_body(
        support_a0: float,
        support_cos: Sequence[float] = (),
        support_sin: Sequence[float] = (),
        samples: int = None,
        label: str = "fourier",
    ) -> ConvexBody:
        """
        Build and validate a convex body.

        Args:
            support_a0: Constant term of the support function
            support_cos: Cosine coefficients a_1, a_2, ...
            support_sin: Sine coefficients b_1, b_2, ...
            samples: Validation sampling resolution (at least 4096)
            label: Name used in reports

        Returns:
            Validated ConvexBody with cached h_min and rho_min
        """
        samples = max(samples or settings.BODY_VALIDATION_SAMPLES, 4096)
        n = max(len(support_cos), len(support_sin))
        cos = np.zeros(n)
        sin = np.zeros(n)
        cos[: len(support_cos)] = np.asarray(support_cos, dtype=float)
        sin[: len(support_sin)] = np.asarray(support_sin, dtype=float)
        a0 = float(support_a0)

        if not (np.isfinite(a0) and np.all(np.isfinite(cos)) and np.all(np.isfinite(sin))):
            raise NotConvexPlus("Support coefficients must be finite")

        draft = ConvexBody(a0=a0, cos=cos, sin=sin, rho_min=0.0, h_min=0.0, label=label)
        theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        h, _, h2 = ConvexBodyService.support_derivatives(draft, theta)
        h_min = float(np.min(h))
        rho_min = float(np.min(h + h2))

        if h_min <= 0.0:
            raise OriginOutside(
                f"Support function reaches {h_min:.6g}; the origin is not interior",
                h_min=h_min,
            )
        if rho_min <= 0.0:
            raise NotConvexPlus(
                f"Radius of curvature reaches {rho_min:.6g}; the body is not C^2_+",
                rho_min=rho_min,
            )

        body = ConvexBody(a0=a0, cos=cos, sin=sin, rho_min=rho_min, h_min=h_min, label=label)
        logger.debug(f"[BODY] Validated {body}")
        return body

    @staticmethod
    def disk(radius: float = 1.0) -> ConvexBody:
        return ConvexBodyService.make_body(radius, label="disk")

    @staticmethod
    def ellipse(a: float, b: float, harmonics: int = None) -> ConvexBody:
        """Ellipse with semi-axes a (along x) and b, expanded by FFT."""
        harmonics = harmonics or settings.ELLIPSE_HARMONICS
        n = max(1024, 8 * harmonics)
        theta = 2.0 * np.pi * np.arange(n) / n
        h = np.sqrt(a * a * np.cos(theta) ** 2 + b * b * np.sin(theta) ** 2)
        coeffs = np.fft.rfft(h) / n
        cos = 2.0 * coeffs.real[1 : harmonics + 1]
        sin = -2.0 * coeffs.imag[1 : harmonics + 1]
        return ConvexBodyService.make_body(coeffs.real[0], cos, sin, label=f"ellipse({a:g},{b:g})")

    @staticmethod
    def from_spec(spec) -> ConvexBody:
        """Build a body from a validated DiskSpec, EllipseSpec or FourierSpec."""
        if spec.kind == "disk":
            return ConvexBodyService.disk(spec.radius)
        if spec.kind == "ellipse":
            return ConvexBodyService.ellipse(spec.a, spec.b)
        return ConvexBodyService.make_body(spec.a0, spec.cos, spec.sin)

    @staticmethod
    def support_derivatives(body: ConvexBody, theta) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return h, h' and h'' at the given angles (same shape as ``theta``)."""
        theta = np.asarray(theta, dtype=float)
        flat = theta.ravel()
        if len(body.cos) == 0:
            h = np.full(flat.shape, body.a0)
            zero = np.zeros(flat.shape)
            return h.reshape(theta.shape), zero.reshape(theta.shape), zero.reshape(theta.shape)

        k = body.harmonics
        kt = np.outer(flat, k)
        c, s = np.cos(kt), np.sin(kt)
        h = body.a0 + c @ body.cos + s @ body.sin
        h1 = -s @ (k * body.cos) + c @ (k * body.sin)
        h2 = -(c @ (k * k * body.cos) + s @ (k * k * body.sin))
        return h.reshape(theta.shape), h1.reshape(theta.shape), h2.reshape(theta.shape)

    @staticmethod
    def support(body: ConvexBody, theta):
        h, _, _ = ConvexBodyService.support_derivatives(body, theta)
        return _output(h, np.ndim(theta) == 0)

    @staticmethod
    def radius_of_curvature(body: ConvexBody, theta):
        h, _, h2 = ConvexBodyService.support_derivatives(body, theta)
        return _output(h + h2, np.ndim(theta) == 0)

    @staticmethod
    def curvature(body: ConvexBody, theta):
        """Curvature 1/(h + h'') of the boundary at the point with normal angle theta."""
        h, _, h2 = ConvexBodyService.support_derivatives(body, theta)
        return _output(1.0 / (h + h2), np.ndim(theta) == 0)

    @staticmethod
    def boundary_point(body: ConvexBody, theta) -> np.ndarray:
        """
        Point of the boundary with outer normal (cos theta, sin theta).

        Args:
            body: Convex body
            theta: Angle or array of angles

        Returns:
            Array of shape theta.shape + (2,)
        """
        theta = np.asarray(theta, dtype=float)
        h, h1, _ = ConvexBodyService.support_derivatives(body, theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([h * c - h1 * s, h * s + h1 * c], axis=-1)

    @staticmethod
    def inverse_gauss(body: ConvexBody, v) -> np.ndarray:
        """pi_K(v): boundary point whose outer normal points along v."""
        v = np.asarray(v, dtype=float)
        if np.any(np.hypot(v[..., 0], v[..., 1]) == 0.0):
            raise ZeroVector("inverse_gauss is undefined at the zero vector")
        return ConvexBodyService.boundary_point(body, np.arctan2(v[..., 1], v[..., 0]))

    @staticmethod
    def dual_norm(body: ConvexBody, v):
        """Support function of K at v, i.e. <v, pi_K(v)>; zero at the origin."""
        v = np.asarray(v, dtype=float)
        r = np.hypot(v[..., 0], v[..., 1])
        h = ConvexBodyService.support(body, np.arctan2(v[..., 1], v[..., 0]))
        return _output(np.where(r > 0.0, r * h, 0.0), v.ndim == 1)

    @staticmethod
    def gauge_norm(body: ConvexBody, v) -> float:
        """
        Minkowski gauge inf{lambda > 0 : v / lambda in K}.

        The boundary point in the direction of v is located by root-finding the
        normal angle whose boundary point has the polar angle of v.
        """
        vx, vy = float(v[0]), float(v[1])
        r = float(np.hypot(vx, vy))
        if r == 0.0:
            return 0.0
        phi = float(np.arctan2(vy, vx))

        def polar_gap(theta: float) -> float:
            p = ConvexBodyService.boundary_point(body, theta)
            gap = np.arctan2(p[1], p[0]) - phi
            return float((gap + np.pi) % (2.0 * np.pi) - np.pi)

        half = 0.5 * np.pi
        theta = brentq(polar_gap, phi - half, phi + half, xtol=1e-15, maxiter=200)
        radial = float(np.hypot(*ConvexBodyService.boundary_point(body, theta)))
        return r / radial

    @staticmethod
    def F_range(body: ConvexBody) -> Tuple[float, float]:
        """Open range of F: the x-extent of the lower boundary arc."""
        return -ConvexBodyService.support(body, np.pi), ConvexBodyService.support(body, 0.0)

    @staticmethod
    def F_value(body: ConvexBody, x):
        """First coordinate of pi_K(x, -1)."""
        x = np.asarray(x, dtype=float)
        theta = np.arctan2(-1.0, x)
        h, h1, _ = ConvexBodyService.support_derivatives(body, theta)
        return _output(h * np.cos(theta) - h1 * np.sin(theta), x.ndim == 0)

    @staticmethod
    def F_derivative(body: ConvexBody, x):
        """dF/dx = rho(theta(x)) (1 + x^2)^(-3/2), theta(x) = atan2(-1, x)."""
        x = np.asarray(x, dtype=float)
        theta = np.arctan2(-1.0, x)
        h, _, h2 = ConvexBodyService.support_derivatives(body, theta)
        return _output((h + h2) / (1.0 + x * x) ** 1.5, x.ndim == 0)

    @staticmethod
    def F_inverse(body: ConvexBody, m):
        """
        Solve F(x) = m.

        The lower arc is parameterized by the normal angle theta in (-pi, 0),
        where the first coordinate of the boundary point increases strictly.
        Bisection brackets the angle and Newton polishes it; x = -cot(theta).

        Args:
            body: Convex body
            m: Target value(s), strictly inside F_range

        Returns:
            x with |F(x) - m| <= ROOT_TOL (1 + |m|)
        """
        m = np.asarray(m, dtype=float)
        lo_m, hi_m = ConvexBodyService.F_range(body)
        if np.any(~np.isfinite(m)) or np.any(m <= lo_m) or np.any(m >= hi_m):
            bad = m[(m <= lo_m) | (m >= hi_m) | ~np.isfinite(m)]
            raise OutOfRange(
                f"Value {float(np.ravel(bad)[0]):.6g} outside the range ({lo_m:.6g}, {hi_m:.6g}) of F",
                range=[lo_m, hi_m],
            )

        flat = m.ravel()

        def first_coordinate(theta):
            h, h1, h2 = ConvexBodyService.support_derivatives(body, theta)
            return h * np.cos(theta) - h1 * np.sin(theta), -(h + h2) * np.sin(theta)

        lo = np.full(flat.shape, -np.pi)
        hi = np.zeros(flat.shape)
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            value, _ = first_coordinate(mid)
            below = value < flat
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)

        theta = 0.5 * (lo + hi)
        for _ in range(6):
            value, slope = first_coordinate(theta)
            step = (value - flat) / slope
            theta = np.clip(theta - step, lo, hi)
            if np.all(np.abs(step) <= 1e-16):
                break

        x = -np.cos(theta) / np.sin(theta)
        return _output(x.reshape(m.shape), m.ndim == 0)

    @staticmethod
    def body_area(body: ConvexBody) -> float:
        """Area 1/2 int (h^2 - h'^2) in closed form."""
        k = body.harmonics
        power = body.cos ** 2 + body.sin ** 2
        return float(np.pi * body.a0 ** 2 + 0.5 * np.pi * np.sum((1.0 - k * k) * power))

    @staticmethod
    def perimeter(body: ConvexBody) -> float:
        return float(2.0 * np.pi * body.a0)

    @staticmethod
    def _rho_antiderivative(body: ConvexBody, theta: np.ndarray) -> np.ndarray:
        # int (h + h'') = int h + h'
        k = body.harmonics
        kt = np.outer(theta, k)
        integral = body.a0 * theta
        if len(k):
            integral = integral + (np.sin(kt) @ (body.cos / k) - np.cos(kt) @ (body.sin / k))
        _, h1, _ = ConvexBodyService.support_derivatives(body, theta)
        return integral + h1

    @staticmethod
    def clockwise_angle(body: ConvexBody, s) -> np.ndarray:
        """
        Normal angle at arc length s along the clockwise boundary parameterization.

        The parameterization starts at the top point (normal angle pi/2) and the
        normal angle decreases, so boundary_point(pi/2 - psi) is traversed
        clockwise as psi grows.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        period = ConvexBodyService.perimeter(body)
        turns = np.floor(s / period)
        rest = s - turns * period
        anchor = ConvexBodyService._rho_antiderivative(body, np.array([0.5 * np.pi]))[0]

        def length(psi):
            return anchor - ConvexBodyService._rho_antiderivative(body, 0.5 * np.pi - psi)

        lo = np.zeros_like(rest)
        hi = np.full_like(rest, 2.0 * np.pi)
        psi = 2.0 * np.pi * rest / period
        for _ in range(60):
            gap = length(psi) - rest
            lo = np.where(gap < 0.0, psi, lo)
            hi = np.where(gap < 0.0, hi, psi)
            rho = ConvexBodyService.radius_of_curvature(body, 0.5 * np.pi - psi)
            trial = psi - gap / rho
            outside = (trial <= lo) | (trial >= hi)
            trial = np.where(outside, 0.5 * (lo + hi), trial)
            done = np.all(np.abs(trial - psi) <= 1e-15)
            psi = trial
            if done:
                break
        return 0.5 * np.pi - (psi + 2.0 * np.pi * turns)

    @staticmethod
    def clockwise_point(body: ConvexBody, s) -> Tuple[np.ndarray, np.ndarray]:
        """Boundary point and unit velocity at arc length s (clockwise)."""
        phi = ConvexBodyService.clockwise_angle(body, s)
        velocity = np.stack([np.sin(phi), -np.cos(phi)], axis=-1)
        return ConvexBodyService.boundary_point(body, phi), velocity

    @staticmethod
    def norm_equivalence(body: ConvexBody, other: ConvexBody, n_directions: int = 1000) -> dict:
        """
        Equivalence constants between the norms of two bodies.

        Returns:
            Dict with alpha, beta (gauge norms) and dual_alpha, dual_beta such that
            alpha |x|_other <= |x|_body <= beta |x|_other, likewise for dual norms.
        """
        theta = np.linspace(0.0, 2.0 * np.pi, n_directions, endpoint=False)
        directions = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        gauge_ratio = np.array([
            ConvexBodyService.gauge_norm(body, d) / ConvexBodyService.gauge_norm(other, d)
            for d in directions
        ])
        dual_ratio = ConvexBodyService.support(body, theta) / ConvexBodyService.support(other, theta)
        return {
            "alpha": float(gauge_ratio.min()),
            "beta": float(gauge_ratio.max()),
            "dual_alpha": float(dual_ratio.min()),
            "dual_beta": float(dual_ratio.max()),
        }
