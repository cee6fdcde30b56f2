"""Test configuration and fixtures."""

import numpy as np
import pytest

from subfinsler.models import Rectangle, TransversalData
from subfinsler.services.convex_body_service import ConvexBodyService
from subfinsler.services.graph_service import GraphService
from subfinsler.services.wulff_service import WulffService

PATCH_DOMAIN = Rectangle(-0.5, 0.5, -0.5, 0.5)
PATCH_SHAPE = (201, 101)


@pytest.fixture(scope="session")
def disk():
    """Unit disk."""
    return ConvexBodyService.disk()


@pytest.fixture(scope="session")
def ellipse():
    """Ellipse with semi-axes 2 and 1."""
    return ConvexBodyService.ellipse(2.0, 1.0)


@pytest.fixture(scope="session")
def asymmetric():
    """Body with h = 1 + 0.1 cos 2theta + 0.05 sin 3theta."""
    return ConvexBodyService.make_body(1.0, [0.0, 0.1], [0.0, 0.0, 0.05])


@pytest.fixture(scope="session")
def bodies(disk, ellipse, asymmetric):
    """The three bodies most checks run on."""
    return [disk, ellipse, asymmetric]


@pytest.fixture
def gaussian_field():
    """u = 0.3 exp(-x^2 - t^2) on [-1, 1]^2."""
    def u(x, t):
        return 0.3 * np.exp(-x * x - t * t)

    return GraphService.make_analytic_field(
        u,
        lambda x, t: -2.0 * x * u(x, t),
        lambda x, t: -2.0 * t * u(x, t),
        Rectangle(-1.0, 1.0, -1.0, 1.0),
        label="gaussian",
    )


@pytest.fixture
def linear_t_field():
    """u = t on [0, 1]^2."""
    return GraphService.make_analytic_field(
        lambda x, t: np.asarray(t, dtype=float) + 0.0 * x,
        lambda x, t: 0.0 * (x + t),
        lambda x, t: 1.0 + 0.0 * (x + t),
        Rectangle(0.0, 1.0, 0.0, 1.0),
        label="u=t",
    )


@pytest.fixture
def cylinder_field():
    """u = 1 - sqrt(1 - x^2) on [-0.5, 0.5]^2, critical for the disk with f = 1."""
    return GraphService.make_analytic_field(
        lambda x, t: 1.0 - np.sqrt(1.0 - x * x) + 0.0 * t,
        lambda x, t: x / np.sqrt(1.0 - x * x) + 0.0 * t,
        lambda x, t: 0.0 * (x + t),
        PATCH_DOMAIN,
        label="cylinder",
    )


def flat_transversal(a: float = 0.0, t_range=(-0.6, 0.6)) -> TransversalData:
    """Zero slope and zero height on the segment x = a."""
    return TransversalData(a=a, t_range=t_range, g=lambda t: 0.0 * t, u=lambda t: 0.0 * t)


@pytest.fixture(scope="session")
def unit_patch(disk):
    """Patch synthesized for the disk with f = 1."""
    return WulffService.synthesize_graph_patch(
        disk, lambda x, t: 1.0 + 0.0 * t, flat_transversal(), PATCH_DOMAIN, PATCH_SHAPE, 121,
    )


@pytest.fixture(scope="session")
def sine_patch(disk):
    """Patch synthesized for the disk with f = 1 + 0.1 sin x."""
    return WulffService.synthesize_graph_patch(
        disk, lambda x, t: 1.0 + 0.1 * np.sin(x) + 0.0 * t, flat_transversal(), PATCH_DOMAIN, PATCH_SHAPE, 121,
    )
