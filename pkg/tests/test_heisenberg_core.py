"""Tests for Heisenberg group operations and horizontal curves."""

import logging

import numpy as np
import pytest

from subfinsler.config import settings
from subfinsler.exceptions import NonMonotoneParam, TooFewSamples
from subfinsler.models import HeisenbergPoint, HorizontalVector, PlanarCurve
from subfinsler.services.heisenberg_service import (
    FRAME_KINDS,
    J_TABLE,
    LEVI_CIVITA,
    LIE_BRACKET,
    HeisenbergService,
)


def _random_points(rng, n):
    return [HeisenbergPoint(*rng.normal(size=3)) for _ in range(n)]


def _circle(n: int) -> PlanarCurve:
    s = np.linspace(0.0, 2.0 * np.pi, n)
    return PlanarCurve(params=s, x=np.sin(s), y=np.cos(s) - 1.0, dx=np.cos(s), dy=-np.sin(s))


class TestGroupStructure:
    """Test the group law and the left-invariant frame."""

    def test_product(self):
        """Test the product at listed points."""
        e = HeisenbergPoint(0.0, 0.0, 0.0)
        q = HeisenbergPoint(0.3, -1.2, 2.5)
        assert HeisenbergService.group_product(e, q) == q
        assert HeisenbergService.group_product(HeisenbergPoint(1, 0, 0), HeisenbergPoint(0, 1, 0)) == HeisenbergPoint(1, 1, -1)
        assert HeisenbergService.group_product(HeisenbergPoint(0, 1, 0), HeisenbergPoint(1, 0, 0)) == HeisenbergPoint(1, 1, 1)

    def test_associativity(self):
        """Test associativity on random triples."""
        rng = np.random.default_rng(0)
        for p, q, r in zip(_random_points(rng, 1000), _random_points(rng, 1000), _random_points(rng, 1000)):
            left = HeisenbergService.group_product(HeisenbergService.group_product(p, q), r)
            right = HeisenbergService.group_product(p, HeisenbergService.group_product(q, r))
            assert np.allclose(left.as_array(), right.as_array(), atol=1e-12)

    def test_left_translate_array(self):
        """Test array translation agrees with the group product."""
        rng = np.random.default_rng(1)
        p = HeisenbergPoint(0.5, -0.25, 1.0)
        points = rng.normal(size=(20, 3))
        moved = HeisenbergService.left_translate(p, points)
        for row, q in zip(moved, points):
            assert np.allclose(row, HeisenbergService.group_product(p, HeisenbergPoint.from_array(q)).as_array())

    def test_frame_vectors(self):
        """Test frame vectors at listed points."""
        assert np.allclose(HeisenbergService.frame_vector("X", HeisenbergPoint(0, 0, 0)), [1, 0, 0])
        assert np.allclose(HeisenbergService.frame_vector("X", HeisenbergPoint(0, 3, 0)), [1, 0, 3])
        assert np.allclose(HeisenbergService.frame_vector("Y", HeisenbergPoint(2, 0, 0)), [0, 1, -2])
        with pytest.raises(ValueError):
            HeisenbergService.frame_vector("W", HeisenbergPoint(0, 0, 0))

    def test_frame_left_invariant(self):
        """Test dL_p pushes the frame at q to the frame at p * q."""
        rng = np.random.default_rng(2)
        for p, q in zip(_random_points(rng, 50), _random_points(rng, 50)):
            d = HeisenbergService.left_translation_differential(p)
            pq = HeisenbergService.group_product(p, q)
            for kind in FRAME_KINDS:
                pushed = d @ HeisenbergService.frame_vector(kind, q)
                assert np.allclose(pushed, HeisenbergService.frame_vector(kind, pq), atol=1e-12)

    def test_contact_form(self):
        """Test the contact form kills X and Y and is one on T."""
        p = HeisenbergPoint(0.7, -1.3, 0.2)
        assert HeisenbergService.contact_form(p, HeisenbergService.frame_vector("X", p)) == pytest.approx(0.0, abs=1e-15)
        assert HeisenbergService.contact_form(p, HeisenbergService.frame_vector("Y", p)) == pytest.approx(0.0, abs=1e-15)
        assert HeisenbergService.contact_form(p, HeisenbergService.frame_vector("T", p)) == 1.0

    def test_complex_structure(self):
        """Test J is a rotation by a right angle."""
        v = HorizontalVector(base=HeisenbergPoint(0, 0, 0), f=0.6, g=-0.8)
        w = HeisenbergService.J(HeisenbergService.J(v))
        assert (w.f, w.g) == pytest.approx((-0.6, 0.8))
        assert HeisenbergService.J(v).norm == pytest.approx(v.norm)

    def test_complex_structure_table(self):
        """Test J acts on the frame as listed in its table."""
        e = HeisenbergPoint(0.0, 0.0, 0.0)
        for name, (f, g) in (("X", (1.0, 0.0)), ("Y", (0.0, 1.0))):
            image = HeisenbergService.J(HorizontalVector(base=e, f=f, g=g))
            assert (image.f, image.g, 0) == J_TABLE[name]
        assert J_TABLE["T"] == (0, 0, 0)
        frame = HeisenbergService.J_field(np.eye(2))
        assert np.array_equal(frame, [J_TABLE["X"][:2], J_TABLE["Y"][:2]])

    def test_connection_is_torsion_free(self):
        """Test D_U V - D_V U equals the bracket for every frame pair."""
        for u in FRAME_KINDS:
            for v in FRAME_KINDS:
                difference = np.subtract(LEVI_CIVITA[(u, v)], LEVI_CIVITA[(v, u)])
                assert tuple(difference) == LIE_BRACKET.get((u, v), (0, 0, 0))


class TestDerivatives:
    """Test differences along sampled curves."""

    def test_fourth_order(self):
        """Test the derivative of sin on a uniform grid."""
        s = np.linspace(0.0, 1.0, 101)
        d = HeisenbergService.fourth_order_derivative(np.sin(s), s)
        assert np.max(np.abs(d - np.cos(s))) <= 1e-7

    def test_too_few_samples(self):
        """Test fewer than five samples are rejected."""
        with pytest.raises(TooFewSamples):
            HeisenbergService.fourth_order_derivative(np.zeros(4), np.arange(4.0))

    def test_covariant_derivative(self):
        """Test covariant derivatives of constant and rotating fields."""
        s = np.linspace(0.0, 2.0, 401)
        curve = HeisenbergService.horizontal_lift(PlanarCurve(params=s, x=s, y=np.zeros_like(s)))
        constant = np.tile([1.0, 0.0], (len(s), 1))
        assert np.allclose(HeisenbergService.covariant_derivative_horizontal(curve, constant), 0.0)

        rotating = np.stack([np.cos(s), np.sin(s)], axis=-1)
        d = HeisenbergService.covariant_derivative_horizontal(curve, rotating)
        assert np.max(np.abs(d - np.stack([-np.sin(s), np.cos(s)], axis=-1))) <= 1e-8
        # Parallel J
        dj = HeisenbergService.covariant_derivative_horizontal(curve, HeisenbergService.J_field(rotating))
        assert np.allclose(dj, HeisenbergService.J_field(d), atol=1e-14)

    def test_field_length_mismatch(self):
        """Test fields must be sampled on the curve grid."""
        s = np.linspace(0.0, 1.0, 11)
        curve = HeisenbergService.horizontal_lift(PlanarCurve(params=s, x=s, y=np.zeros_like(s)))
        with pytest.raises(ValueError):
            HeisenbergService.covariant_derivative_horizontal(curve, np.zeros((5, 2)))


class TestHorizontalLift:
    """Test lifting planar curves to horizontal curves."""

    def test_segment(self):
        """Test a segment on the x axis lifts to t = 0."""
        s = np.linspace(0.0, 1.0, 1001)
        lifted = HeisenbergService.horizontal_lift(PlanarCurve(params=s, x=s, y=np.zeros_like(s)))
        assert np.all(lifted.t == 0.0)

    def test_residual_warning(self, monkeypatch, caplog):
        """Test lifts over the horizontality tolerance are logged as warnings."""
        caplog.set_level(logging.WARNING, logger="subfinsler.services.heisenberg_service")
        s = np.linspace(0.0, 1.0, 101)
        segment = HeisenbergService.horizontal_lift(PlanarCurve(params=s, x=s, y=np.zeros_like(s)))
        assert segment.horizontality_residual <= settings.HORIZONTALITY_TOL
        assert "[LIFT]" not in caplog.text

        monkeypatch.setattr(settings, "HORIZONTALITY_TOL", 1e-12)
        coarse = HeisenbergService.horizontal_lift(_circle(11))
        assert coarse.horizontality_residual > settings.HORIZONTALITY_TOL
        assert "[LIFT]" in caplog.text

    def test_clockwise_circle(self):
        """Test the clockwise unit circle lifts to (sin s, cos s - 1, s - sin s)."""
        lifted = HeisenbergService.horizontal_lift(_circle(4097))
        s = lifted.params
        assert np.max(np.abs(lifted.t - (s - np.sin(s)))) <= 1e-9
        assert lifted.horizontality_residual <= 1e-7

    def test_green_area(self):
        """Test the height gained around a clockwise loop is twice the enclosed area."""
        s = np.linspace(0.0, 2.0 * np.pi, 2001)
        # ellipse with semi-axes 3 and 0.5 traversed clockwise
        planar = PlanarCurve(params=s, x=3.0 * np.sin(s), y=0.5 * np.cos(s),
                             dx=3.0 * np.cos(s), dy=-0.5 * np.sin(s))
        lifted = HeisenbergService.horizontal_lift(planar, t0=1.0)
        assert lifted.t[0] == 1.0
        assert lifted.t[-1] - lifted.t[0] == pytest.approx(2.0 * np.pi * 3.0 * 0.5, abs=1e-9)

    def test_richardson_refinement(self):
        """Test midpoint refinement improves the lift."""
        def evaluator(s):
            return np.sin(s), np.cos(s) - 1.0, np.cos(s), -np.sin(s)

        s = np.linspace(0.0, 2.0 * np.pi, 257)
        x, y, dx, dy = evaluator(s)
        plain = HeisenbergService.horizontal_lift(PlanarCurve(params=s, x=x, y=y, dx=dx, dy=dy))
        refined = HeisenbergService.horizontal_lift(
            PlanarCurve(params=s, x=x, y=y, dx=dx, dy=dy, evaluator=evaluator), richardson=True,
        )
        exact = s - np.sin(s)
        assert np.max(np.abs(refined.t - exact)) < np.max(np.abs(plain.t - exact))
        with pytest.raises(ValueError):
            HeisenbergService.horizontal_lift(PlanarCurve(params=s, x=x, y=y), richardson=True)

    def test_differenced_velocity(self):
        """Test lifting without a velocity uses differences."""
        s = np.linspace(0.0, 2.0 * np.pi, 4097)
        lifted = HeisenbergService.horizontal_lift(PlanarCurve(params=s, x=np.sin(s), y=np.cos(s) - 1.0))
        assert np.max(np.abs(lifted.t - (s - np.sin(s)))) <= 1e-8

    def test_non_monotone(self):
        """Test repeated parameters are rejected."""
        s = np.array([0.0, 0.5, 0.5, 1.0, 1.5])
        with pytest.raises(NonMonotoneParam):
            HeisenbergService.horizontal_lift(PlanarCurve(params=s, x=s, y=s))
