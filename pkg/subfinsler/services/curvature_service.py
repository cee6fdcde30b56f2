"""Curvature service: H_K and H_D along framed horizontal curves, and the differential of pi_K."""

import logging

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from subfinsler.config import settings
from subfinsler.exceptions import GridMismatch, NotUnit, NotUnitSpeed
from subfinsler.models import CurveScalar, FramedCurve, HeisenbergCurve
from subfinsler.schemas import CurvatureReport
from subfinsler.services.convex_body_service import ConvexBodyService
from subfinsler.services.heisenberg_service import HeisenbergService

logger = logging.getLogger(__name__)


class CurvatureService:
    """Service for mean curvature identities along characteristic curves."""

    @staticmethod
    def reverse_curve(curve: HeisenbergCurve) -> HeisenbergCurve:
        """Same points traversed backwards, parameter s -> s_end + s_start - s."""
        params = curve.params[-1] + curve.params[0] - curve.params[::-1]
        velocity = None if curve.velocity is None else -curve.velocity[::-1]
        return HeisenbergCurve(
            params=params,
            points=curve.points[::-1].copy(),
            horizontality_residual=curve.horizontality_residual,
            velocity=velocity,
        )

    @staticmethod
    def planar_velocity(curve: HeisenbergCurve) -> np.ndarray:
        if curve.velocity is not None:
            return curve.velocity
        return HeisenbergService.fourth_order_derivative(curve.points[:, :2], curve.params)

    @staticmethod
    def frame_curve(curve: HeisenbergCurve, orientation: str = "along") -> FramedCurve:
        """
        Frame a horizontal curve by its characteristic direction.

        Args:
            curve: Horizontal curve
            orientation: "along" takes Z as the unit velocity; "against" runs
                the curve backwards first, as for clockwise generating curves

        Returns:
            FramedCurve with Z the unit velocity and nu_h = -J(Z)
        """
        if orientation == "against":
            curve = CurvatureService.reverse_curve(curve)
        elif orientation != "along":
            raise ValueError(f"Unknown orientation {orientation!r}")

        velocity = CurvatureService.planar_velocity(curve)
        Z = velocity / np.hypot(velocity[:, 0], velocity[:, 1])[:, None]
        nu_h = np.stack([Z[:, 1], -Z[:, 0]], axis=-1)
        return FramedCurve(curve=curve, nu_h=nu_h, Z=Z)

    @staticmethod
    def _require_unit_speed(fc: FramedCurve) -> None:
        velocity = CurvatureService.planar_velocity(fc.curve)
        gap = float(np.max(np.abs(np.hypot(velocity[:, 0], velocity[:, 1]) - 1.0)))
        if gap > settings.UNIT_SPEED_TOL:
            raise NotUnitSpeed(f"Curve speed deviates from 1 by {gap:.3g}", gap=gap)

    @staticmethod
    def h_k_along(body, fc: FramedCurve) -> CurveScalar:
        """H_K = <d/ds pi_K(nu_h), Z>."""
        CurvatureService._require_unit_speed(fc)
        pi = ConvexBodyService.inverse_gauss(body, fc.nu_h)
        derivative = HeisenbergService.covariant_derivative_horizontal(fc.curve, pi)
        return CurveScalar(params=fc.curve.params, values=np.sum(derivative * fc.Z, axis=-1))

    @staticmethod
    def h_k_flipped(body, fc: FramedCurve) -> CurveScalar:
        """H_K for the opposite normal -nu_h, keeping Z."""
        CurvatureService._require_unit_speed(fc)
        pi = ConvexBodyService.inverse_gauss(body, -fc.nu_h)
        derivative = HeisenbergService.covariant_derivative_horizontal(fc.curve, pi)
        return CurveScalar(params=fc.curve.params, values=np.sum(derivative * fc.Z, axis=-1))

    @staticmethod
    def h_d_along(fc: FramedCurve) -> CurveScalar:
        """Sub-Riemannian mean curvature <d/ds nu_h, Z>."""
        CurvatureService._require_unit_speed(fc)
        derivative = HeisenbergService.covariant_derivative_horizontal(fc.curve, fc.nu_h)
        return CurveScalar(params=fc.curve.params, values=np.sum(derivative * fc.Z, axis=-1))

    @staticmethod
    def dpi_matrix(body, nu) -> np.ndarray:
        """
        Differential of v -> pi_K(v) at a unit vector.

        At nu = (cos theta, sin theta) it equals rho(theta) w w^T with w = J(nu).
        """
        nu = np.asarray(nu, dtype=float)
        if abs(float(np.hypot(nu[0], nu[1])) - 1.0) > 1e-9:
            raise NotUnit(f"Vector {nu.tolist()} is not a unit vector")
        theta = float(np.arctan2(nu[1], nu[0]))
        w = np.array([-np.sin(theta), np.cos(theta)])
        return ConvexBodyService.radius_of_curvature(body, theta) * np.outer(w, w)

    @staticmethod
    def finite_difference_dpi(body, nu, step: float = None) -> np.ndarray:
        """Central-difference differential of pi_K at nu."""
        step = step or settings.FD_STEP
        nu = np.asarray(nu, dtype=float)
        columns = []
        for e in np.eye(2):
            plus = ConvexBodyService.inverse_gauss(body, nu + step * e)
            minus = ConvexBodyService.inverse_gauss(body, nu - step * e)
            columns.append((plus - minus) / (2.0 * step))
        return np.stack(columns, axis=-1)

    @staticmethod
    def verify_ratio(body, fc: FramedCurve, f: CurveScalar) -> CurvatureReport:
        """
        Gaps of H_K = f and H_D = kappa(pi_K(nu_h)) f along the curve.

        Args:
            body: Convex body
            fc: Framed unit-speed curve
            f: Prescribed curvature on the curve's parameter grid

        Returns:
            CurvatureReport with both sup-norm gaps
        """
        params = fc.curve.params
        if len(f.params) != len(params) or not np.allclose(f.params, params, rtol=0.0, atol=1e-9 * max(1.0, abs(params[-1]))):
            raise GridMismatch("Prescribed curvature is not sampled on the curve grid")

        h_k = CurvatureService.h_k_along(body, fc).values
        h_d = CurvatureService.h_d_along(fc).values
        kappa = ConvexBodyService.curvature(body, np.arctan2(fc.nu_h[:, 1], fc.nu_h[:, 0]))
        report = CurvatureReport(
            max_gap_hd=float(np.max(np.abs(h_d - kappa * f.values))),
            max_gap_hk=float(np.max(np.abs(h_k - f.values))),
            n_samples=len(params),
            body=body.label,
            tolerances={"hd": settings.CURVATURE_TOL, "hk": settings.CURVATURE_TOL},
        )
        logger.info(f"[CURVATURE] H_K gap {report.max_gap_hk:.3g}, H_D gap {report.max_gap_hd:.3g}")
        return report

    @staticmethod
    def reparameterize_to_arclength(curve: HeisenbergCurve, n_samples: int = None) -> HeisenbergCurve:
        """Resample a curve uniformly in planar arc length with cubic splines."""
        n_samples = n_samples or len(curve.params)
        velocity = CurvatureService.planar_velocity(curve)
        length = cumulative_simpson(np.hypot(velocity[:, 0], velocity[:, 1]), x=curve.params, initial=0.0)
        spline = CubicSpline(length, curve.points, axis=0)
        sigma = np.linspace(0.0, length[-1], n_samples)
        points = spline(sigma)
        new_velocity = spline(sigma, 1)[:, :2]
        residual = HeisenbergService.horizontality_residual(sigma, points, new_velocity)
        return HeisenbergCurve(params=sigma, points=points, horizontality_residual=residual, velocity=new_velocity)
