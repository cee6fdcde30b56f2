"""Tests for H_K and H_D along framed horizontal curves."""

import numpy as np
import pytest

from subfinsler.exceptions import GridMismatch, NotUnit, NotUnitSpeed
from subfinsler.models import CurveScalar, PlanarCurve
from subfinsler.services.convex_body_service import ConvexBodyService
from subfinsler.services.curvature_service import CurvatureService
from subfinsler.services.heisenberg_service import HeisenbergService
from subfinsler.services.identity_service import IdentityService
from subfinsler.services.wulff_service import WulffService


def _clockwise_circle(radius: float, n: int, by_angle: bool = False):
    """Lifted half circle of the given radius, traversed clockwise from the top."""
    angle = np.linspace(0.0, np.pi, n)
    speed = radius if by_angle else 1.0
    params = angle if by_angle else radius * angle
    planar = PlanarCurve(
        params=params,
        x=radius * np.sin(angle),
        y=radius * np.cos(angle) - radius,
        dx=speed * np.cos(angle),
        dy=-speed * np.sin(angle),
    )
    return HeisenbergService.horizontal_lift(planar)


def _segment(n: int = 401):
    s = np.linspace(-1.0, 1.0, n)
    c, d = np.cos(0.3), np.sin(0.3)
    planar = PlanarCurve(params=s, x=c * s, y=d * s, dx=np.full_like(s, c), dy=np.full_like(s, d))
    return HeisenbergService.horizontal_lift(planar)


class TestCurvatureAlongCurves:
    """Test the mean curvatures of simple curves."""

    def test_straight_line(self, bodies):
        """Test straight lines have zero curvature for every body."""
        framed = CurvatureService.frame_curve(_segment())
        zeros = CurveScalar(params=framed.curve.params, values=np.zeros(len(framed.curve.params)))
        for body in bodies:
            assert np.max(np.abs(CurvatureService.h_k_along(body, framed).values)) <= 1e-10
            report = CurvatureService.verify_ratio(body, framed, zeros)
            assert report.max_gap_hk <= 1e-10
            assert report.max_gap_hd <= 1e-10

    def test_circle(self, disk):
        """Test a circle of radius 1/2 has H_K = 2 for the disk."""
        framed = CurvatureService.frame_curve(_clockwise_circle(0.5, 2001), orientation="against")
        h_k = CurvatureService.h_k_along(disk, framed).values
        assert np.max(np.abs(h_k - 2.0)) <= 1e-8
        flipped = CurvatureService.h_k_flipped(disk, framed).values
        assert np.allclose(flipped, -h_k, atol=1e-12)

    def test_disk_matches_sub_riemannian(self, disk):
        """Test H_K = H_D when K is the unit disk."""
        framed = CurvatureService.frame_curve(_clockwise_circle(0.7, 2001), orientation="against")
        h_k = CurvatureService.h_k_along(disk, framed).values
        h_d = CurvatureService.h_d_along(framed).values
        assert np.max(np.abs(h_k - h_d)) <= 1e-8

    def test_framing_orientation(self):
        """Test nu_h = -J(Z) for both orientations."""
        curve = _clockwise_circle(1.0, 101)
        for orientation in ("along", "against"):
            framed = CurvatureService.frame_curve(curve, orientation=orientation)
            assert np.allclose(framed.nu_h, -HeisenbergService.J_field(framed.Z), atol=1e-15)
        with pytest.raises(ValueError):
            CurvatureService.frame_curve(curve, orientation="sideways")


class TestDifferentialOfPi:
    """Test the differential of the inverse Gauss map."""

    def test_disk_matrix(self, disk):
        """Test d pi at (0, -1) projects on the x axis."""
        assert np.allclose(CurvatureService.dpi_matrix(disk, (0.0, -1.0)), [[1.0, 0.0], [0.0, 0.0]], atol=1e-15)

    def test_not_unit(self, disk):
        """Test vectors off the unit circle are rejected."""
        with pytest.raises(NotUnit):
            CurvatureService.dpi_matrix(disk, (1.0, 1.0))

    def test_identities_on_random_normals(self, bodies):
        """Test kernel, eigenvector, symmetry and finite-difference identities."""
        rng = np.random.default_rng(7)
        angles = rng.uniform(-np.pi, np.pi, 100)
        normals = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        for body in bodies:
            gaps = IdentityService.dpi_gaps(body, normals)
            for name, tolerance in IdentityService.TOLERANCES.items():
                assert gaps[name] <= tolerance, name


class TestCurvatureRatio:
    """Test H_D = kappa(pi_K(nu_h)) H_K."""

    def test_ellipse_generating_curve(self, ellipse):
        """Test the ratio identity along an ellipse generating curve."""
        curve = WulffService.lifted_boundary_curve(ellipse, 0.0, 2049)
        framed = CurvatureService.frame_curve(curve, orientation="against")
        ones = CurveScalar(params=framed.curve.params, values=np.ones(len(framed.curve.params)))
        report = CurvatureService.verify_ratio(ellipse, framed, ones)
        assert report.max_gap_hk <= 1e-4
        assert report.max_gap_hd <= 1e-4
        assert report.n_samples == 2049

        kappa = ConvexBodyService.curvature(ellipse, np.arctan2(framed.nu_h[:, 1], framed.nu_h[:, 0]))
        assert kappa.max() / kappa.min() >= 4.0

    def test_grid_mismatch(self, disk):
        """Test the prescribed curvature must share the curve grid."""
        framed = CurvatureService.frame_curve(_segment(101))
        with pytest.raises(GridMismatch):
            CurvatureService.verify_ratio(disk, framed, CurveScalar(params=np.linspace(0.0, 1.0, 50), values=np.zeros(50)))


class TestArcLength:
    """Test unit speed checks and reparameterization."""

    def test_not_unit_speed(self, disk):
        """Test curves must be parameterized by arc length."""
        framed = CurvatureService.frame_curve(_clockwise_circle(0.5, 2001, by_angle=True), orientation="against")
        with pytest.raises(NotUnitSpeed):
            CurvatureService.h_k_along(disk, framed)

    def test_reparameterized_circle(self, disk):
        """Test reparameterizing restores unit speed and the curvature."""
        curve = CurvatureService.reparameterize_to_arclength(_clockwise_circle(0.5, 2001, by_angle=True))
        assert curve.params[-1] == pytest.approx(0.5 * np.pi, abs=1e-10)
        assert curve.horizontality_residual <= 1e-6
        framed = CurvatureService.frame_curve(curve, orientation="against")
        h_k = CurvatureService.h_k_along(disk, framed).values
        assert np.max(np.abs(h_k[5:-5] - 2.0)) <= 1e-4

    def test_reparameterized_leaf(self, sine_patch, disk):
        """Test H_K along a synthesized leaf matches the prescribed f."""
        leaf = sine_patch.leaves[60]
        curve = CurvatureService.reparameterize_to_arclength(leaf.lifted)
        framed = CurvatureService.frame_curve(curve, orientation="along")
        h_k = CurvatureService.h_k_along(disk, framed).values
        expected = 1.0 + 0.1 * np.sin(curve.x)
        assert np.max(np.abs(h_k[10:-10] - expected[10:-10])) <= 1e-3
