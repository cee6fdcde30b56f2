"""Verification suites for the curvature identities of a body."""

import logging

import numpy as np

from subfinsler.config import settings
from subfinsler.models import ConvexBody, CurveScalar
from subfinsler.schemas import IdentityReport
from subfinsler.services.convex_body_service import ConvexBodyService
from subfinsler.services.curvature_service import CurvatureService
from subfinsler.services.wulff_service import WulffService

logger = logging.getLogger(__name__)


class IdentityService:
    """Service running the pi_K differential, curvature ratio and Wulff checks together."""

    TOLERANCES = {
        "dpi_kernel": 1e-8,
        "dpi_eigen": 1e-6,
        "dpi_symmetry": 1e-8,
        "dpi_finite_difference": 1e-6,
    }

    @staticmethod
    def dpi_gaps(body: ConvexBody, normals: np.ndarray) -> dict:
        """Worst kernel, eigenvector, symmetry and finite-difference gaps of d pi_K over unit normals."""
        gaps = {name: 0.0 for name in IdentityService.TOLERANCES}
        for nu in normals:
            matrix = CurvatureService.dpi_matrix(body, nu)
            Z = np.array([-nu[1], nu[0]])
            kappa = ConvexBodyService.curvature(body, float(np.arctan2(nu[1], nu[0])))
            fd = CurvatureService.finite_difference_dpi(body, nu)
            gaps["dpi_kernel"] = max(gaps["dpi_kernel"], float(np.linalg.norm(matrix @ nu)))
            gaps["dpi_eigen"] = max(gaps["dpi_eigen"], float(np.linalg.norm(matrix @ Z - Z / kappa)))
            gaps["dpi_symmetry"] = max(gaps["dpi_symmetry"], float(np.max(np.abs(matrix - matrix.T))))
            gaps["dpi_finite_difference"] = max(gaps["dpi_finite_difference"], float(np.max(np.abs(matrix - fd))))
        return gaps

    @staticmethod
    def run_suite(
        body: ConvexBody,
        seed: int = 0,
        n_normals: int = 100,
        n_curves: int = 8,
        n_samples: int = 1024,
    ) -> IdentityReport:
        """
        Run every identity check on one body.

        Args:
            body: Convex body
            seed: Seed for the random unit normals
            n_normals: Number of random unit normals for the d pi_K checks
            n_curves: Generating curves of the Wulff shape
            n_samples: Samples per generating curve

        Returns:
            IdentityReport with every gap, its tolerance and the overall verdict
        """
        rng = np.random.default_rng(seed)
        angles = rng.uniform(-np.pi, np.pi, n_normals)
        normals = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        gaps = IdentityService.dpi_gaps(body, normals)

        shape = WulffService.wulff_shape(body, n_curves, n_samples)
        framed = CurvatureService.frame_curve(shape.curves[0], orientation="against")
        ones = CurveScalar(params=framed.curve.params, values=np.ones(len(framed.curve.params)))
        ratio = CurvatureService.verify_ratio(body, framed, ones)
        max_h_k_gap = float(np.max(np.abs(shape.mesh.channels["h_k"] - 1.0)))

        tolerances = dict(IdentityService.TOLERANCES)
        tolerances.update({"apex": settings.APEX_TOL, "h_k": settings.CURVATURE_TOL, "ratio": settings.CURVATURE_TOL})
        passed = (
            all(gaps[name] <= tolerances[name] for name in IdentityService.TOLERANCES)
            and shape.apex_gap <= tolerances["apex"]
            and max_h_k_gap <= tolerances["h_k"]
            and max(ratio.max_gap_hd, ratio.max_gap_hk) <= tolerances["ratio"]
        )
        report = IdentityReport(
            body=body.label,
            dpi_kernel_gap=gaps["dpi_kernel"],
            dpi_eigen_gap=gaps["dpi_eigen"],
            dpi_symmetry_gap=gaps["dpi_symmetry"],
            dpi_finite_difference_gap=gaps["dpi_finite_difference"],
            ratio=ratio,
            apex_gap=shape.apex_gap,
            max_h_k_gap=max_h_k_gap,
            tolerances=tolerances,
            passed=passed,
        )
        logger.info(f"[CURVATURE] Identity suite on {body.label}: {'passed' if passed else 'FAILED'}")
        return report
