"""Heisenberg group structure, horizontal lifting and derivatives along curves."""

import logging
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from subfinsler.config import settings
from subfinsler.exceptions import NonMonotoneParam, TooFewSamples
from subfinsler.models import HeisenbergCurve, HeisenbergPoint, HorizontalVector, PlanarCurve

logger = logging.getLogger(__name__)


# Left-invariant frame coordinates: X = (1, 0, y), Y = (0, 1, -x), T = (0, 0, 1).
FRAME_KINDS = ("X", "Y", "T")

# Levi-Civita connection of the left-invariant metric making X, Y, T orthonormal,
# D_U V expressed in the basis (X, Y, T).
LEVI_CIVITA = {
    ("X", "X"): (0, 0, 0),
    ("X", "Y"): (0, 0, -1),
    ("X", "T"): (0, 1, 0),
    ("Y", "X"): (0, 0, 1),
    ("Y", "Y"): (0, 0, 0),
    ("Y", "T"): (-1, 0, 0),
    ("T", "X"): (0, 1, 0),
    ("T", "Y"): (-1, 0, 0),
    ("T", "T"): (0, 0, 0),
}

# Nonzero brackets [U, V] in the same basis.
LIE_BRACKET = {("X", "Y"): (0, 0, -2), ("Y", "X"): (0, 0, 2)}

# Complex structure on the horizontal distribution, extended by J(T) = 0.
J_TABLE = {"X": (0, 1, 0), "Y": (-1, 0, 0), "T": (0, 0, 0)}


class HeisenbergService:
    """Service for group operations and curves in the first Heisenberg group."""

    @staticmethod
    def group_product(p: HeisenbergPoint, q: HeisenbergPoint) -> HeisenbergPoint:
        """(x, y, t) * (x', y', t') = (x + x', y + y', t + t' + x' y - x y')."""
        return HeisenbergPoint(p.x + q.x, p.y + q.y, p.t + q.t + q.x * p.y - p.x * q.y)

    @staticmethod
    def left_translate(p: HeisenbergPoint, points: np.ndarray) -> np.ndarray:
        """Apply L_p to an (n, 3) array of points."""
        points = np.asarray(points, dtype=float)
        out = points.copy()
        out[..., 0] += p.x
        out[..., 1] += p.y
        out[..., 2] += p.t + points[..., 0] * p.y - p.x * points[..., 1]
        return out

    @staticmethod
    def left_translation_differential(p: HeisenbergPoint) -> np.ndarray:
        """Jacobian of q -> p * q (independent of q)."""
        return np.array([
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [p.y, -p.x, 1.0],
        ])

    @staticmethod
    def frame_vector(kind: str, p: HeisenbergPoint) -> np.ndarray:
        if kind == "X":
            return np.array([1.0, 0.0, p.y])
        if kind == "Y":
            return np.array([0.0, 1.0, -p.x])
        if kind == "T":
            return np.array([0.0, 0.0, 1.0])
        raise ValueError(f"Unknown frame vector {kind!r}")

    @staticmethod
    def contact_form(p: HeisenbergPoint, w) -> float:
        """omega = dt - y dx + x dy applied to the coordinate vector w."""
        return float(w[2] - p.y * w[0] + p.x * w[1])

    @staticmethod
    def J(v: HorizontalVector) -> HorizontalVector:
        """J(fX + gY) = -gX + fY."""
        return HorizontalVector(base=v.base, f=-v.g, g=v.f)

    @staticmethod
    def J_field(field: np.ndarray) -> np.ndarray:
        field = np.asarray(field, dtype=float)
        return np.stack([-field[..., 1], field[..., 0]], axis=-1)

    @staticmethod
    def fourth_order_derivative(values: np.ndarray, params: np.ndarray) -> np.ndarray:
        """
        Derivative of samples along axis 0.

        Uniform grids use fourth-order central differences inside and fourth-order
        one-sided stencils at the two first and last samples. Nonuniform grids
        fall back to second-order differences.

        Args:
            values: Samples, shape (n,) or (n, k)
            params: Strictly increasing parameters, shape (n,)

        Returns:
            Derivative samples with the shape of values
        """
        values = np.asarray(values, dtype=float)
        params = np.asarray(params, dtype=float)
        n = len(params)
        if n < 5:
            raise TooFewSamples(f"Need at least 5 samples, got {n}", samples=n)

        steps = np.diff(params)
        h = float(np.mean(steps))
        if np.max(np.abs(steps - h)) > 1e-9 * max(abs(h), 1e-300):
            return np.gradient(values, params, axis=0, edge_order=2)

        d = np.empty_like(values)
        d[2:-2] = (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / (12.0 * h)
        d[0] = (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3] - 3.0 * values[4]) / (12.0 * h)
        d[1] = (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3] + values[4]) / (12.0 * h)
        d[-1] = (25.0 * values[-1] - 48.0 * values[-2] + 36.0 * values[-3] - 16.0 * values[-4] + 3.0 * values[-5]) / (12.0 * h)
        d[-2] = (3.0 * values[-1] + 10.0 * values[-2] - 18.0 * values[-3] + 6.0 * values[-4] - values[-5]) / (12.0 * h)
        return d

    @staticmethod
    def horizontality_residual(
        params: np.ndarray,
        points: np.ndarray,
        velocity: Optional[np.ndarray] = None,
    ) -> float:
        """Max over samples of |omega(velocity)| with differences for missing derivatives."""
        x, y, t = points[:, 0], points[:, 1], points[:, 2]
        if velocity is None:
            velocity = HeisenbergService.fourth_order_derivative(points[:, :2], params)
        dt = HeisenbergService.fourth_order_derivative(t, params)
        residual = dt - (y * velocity[:, 0] - x * velocity[:, 1])
        return float(np.max(np.abs(residual)))

    @staticmethod
    def horizontal_lift(curve: PlanarCurve, t0: float = 0.0, richardson: bool = False) -> HeisenbergCurve:
        """
        Lift a planar curve to the horizontal curve starting at height t0.

        Args:
            curve: Sampled planar curve, velocity optional
            t0: Height of the first sample
            richardson: Refine the Simpson quadrature at midpoints using the
                curve evaluator and extrapolate

        Returns:
            HeisenbergCurve with t(s) = t0 + int (y x' - x y')
        """
        s = np.asarray(curve.params, dtype=float)
        if len(s) < 2 or np.any(np.diff(s) <= 0.0):
            raise NonMonotoneParam("Curve parameters must be strictly increasing")

        x = np.asarray(curve.x, dtype=float)
        y = np.asarray(curve.y, dtype=float)
        if curve.dx is not None and curve.dy is not None:
            velocity = np.stack([curve.dx, curve.dy], axis=-1)
        else:
            velocity = HeisenbergService.fourth_order_derivative(np.stack([x, y], axis=-1), s)

        integrand = y * velocity[:, 0] - x * velocity[:, 1]
        t = cumulative_simpson(integrand, x=s, initial=0.0)

        if richardson:
            if curve.evaluator is None:
                raise ValueError("Richardson refinement needs a curve evaluator")
            fine = np.empty(2 * len(s) - 1)
            fine[::2] = s
            fine[1::2] = 0.5 * (s[:-1] + s[1:])
            fx, fy, fdx, fdy = curve.evaluator(fine)
            fine_t = cumulative_simpson(fy * fdx - fx * fdy, x=fine, initial=0.0)[::2]
            t = fine_t + (fine_t - t) / 15.0

        points = np.stack([x, y, t0 + t], axis=-1)
        residual = HeisenbergService.horizontality_residual(s, points, velocity)
        if residual > settings.HORIZONTALITY_TOL:
            logger.warning(
                f"[LIFT] Horizontality residual {residual:.3g} over {len(s)} samples "
                f"exceeds {settings.HORIZONTALITY_TOL:g}"
            )
        else:
            logger.debug(f"[LIFT] Lifted {len(s)} samples, horizontality residual {residual:.3g}")
        return HeisenbergCurve(params=s, points=points, horizontality_residual=residual, velocity=velocity)

    @staticmethod
    def covariant_derivative_horizontal(curve: HeisenbergCurve, field: np.ndarray) -> np.ndarray:
        """Componentwise derivative of the X, Y coefficients of a field along the curve."""
        field = np.asarray(field, dtype=float)
        if len(field) != len(curve.params):
            raise ValueError("Field must be sampled on the curve's parameter grid")
        return HeisenbergService.fourth_order_derivative(field, curve.params)
