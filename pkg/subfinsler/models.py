"""Immutable domain types.

Sampled objects keep their samples as numpy arrays. The dataclasses are frozen
and compare by identity, so they can be shared freely between threads.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Convex body of class C^2_+ given by its support function.

    h(theta) = a0 + sum_k (cos[k-1] cos k theta + sin[k-1] sin k theta).
    """

    a0: float
    cos: np.ndarray
    sin: np.ndarray
    rho_min: float
    h_min: float
    label: str = "fourier"

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(1, len(self.cos) + 1, dtype=float)

    def __repr__(self):
        return f"<ConvexBody(label={self.label}, a0={self.a0}, harmonics={len(self.cos)}, rho_min={self.rho_min:.4g})>"


@dataclass(frozen=True)
class HeisenbergPoint:
    x: float
    y: float
    t: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.t], dtype=float)

    @classmethod
    def from_array(cls, values) -> "HeisenbergPoint":
        return cls(float(values[0]), float(values[1]), float(values[2]))


@dataclass(frozen=True)
class HorizontalVector:
    """The vector fX + gY based at ``base``."""

    base: HeisenbergPoint
    f: float
    g: float

    @property
    def norm(self) -> float:
        return float(np.hypot(self.f, self.g))


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    """Sampled planar curve with optional analytic velocity and evaluator.

    The evaluator maps an array of parameters to ``(x, y, dx, dy)`` and lets the
    lifting refine its quadrature between samples.
    """

    params: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dx: Optional[np.ndarray] = None
    dy: Optional[np.ndarray] = None
    evaluator: Optional[Callable[[np.ndarray], Tuple[np.ndarray, ...]]] = None


@dataclass(frozen=True, eq=False)
class HeisenbergCurve:
    params: np.ndarray
    points: np.ndarray
    horizontality_residual: float
    velocity: Optional[np.ndarray] = None

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def t(self) -> np.ndarray:
        return self.points[:, 2]

    def __len__(self):
        return len(self.params)

    def point(self, index: int) -> HeisenbergPoint:
        return HeisenbergPoint.from_array(self.points[index])

    def __repr__(self):
        return f"<HeisenbergCurve(samples={len(self.params)}, residual={self.horizontality_residual:.3g})>"


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    t0: float
    t1: float

    def contains(self, x, t, slack: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        sx = slack * max(1.0, self.x1 - self.x0)
        st = slack * max(1.0, self.t1 - self.t0)
        return (x >= self.x0 - sx) & (x <= self.x1 + sx) & (t >= self.t0 - st) & (t <= self.t1 + st)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.t1 - self.t0

    def contains_box(self, other: "Rectangle", slack: float = 1e-12) -> bool:
        sx = slack * max(1.0, self.width)
        st = slack * max(1.0, self.height)
        return (
            other.x0 >= self.x0 - sx
            and other.x1 <= self.x1 + sx
            and other.t0 >= self.t0 - st
            and other.t1 <= self.t1 + st
        )


@dataclass(frozen=True, eq=False)
class AnalyticSource:
    """Field given by vectorized callables for u and its first derivatives."""

    u: Callable
    u_x: Callable
    u_t: Callable
    label: str = "analytic"
    kind: str = "analytic"

    def height(self, x, t) -> np.ndarray:
        return np.asarray(self.u(x, t), dtype=float)

    def evaluate(self, x, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast(x, t).shape
        return (
            np.broadcast_to(np.asarray(self.u(x, t), dtype=float), shape),
            np.broadcast_to(np.asarray(self.u_x(x, t), dtype=float), shape),
            np.broadcast_to(np.asarray(self.u_t(x, t), dtype=float), shape),
        )


@dataclass(frozen=True, eq=False)
class GridSource:
    """Regular lattice samples; values are indexed ``[i_x, i_t]``.

    ``interpolators`` are bilinear interpolants of u, u_x and u_t.
    """

    xs: np.ndarray
    ts: np.ndarray
    values: np.ndarray
    u_x: np.ndarray
    u_t: np.ndarray
    interpolators: Tuple[Callable, Callable, Callable]
    label: str = "grid"
    kind: str = "grid"

    def height(self, x, t) -> np.ndarray:
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        pts = np.stack([x.ravel(), t.ravel()], axis=-1)
        return np.asarray(self.interpolators[0](pts)).reshape(x.shape)

    def evaluate(self, x, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        x, t = np.broadcast_arrays(x, t)
        pts = np.stack([x.ravel(), t.ravel()], axis=-1)
        return tuple(np.asarray(f(pts)).reshape(x.shape) for f in self.interpolators)


@dataclass(frozen=True, eq=False)
class GraphField:
    domain: Rectangle
    source: object
    lipschitz_estimate: float
    slope_jump: float

    @property
    def is_grid(self) -> bool:
        return self.source.kind == "grid"

    def __repr__(self):
        return f"<GraphField(source={self.source.label}, domain={self.domain}, lipschitz={self.lipschitz_estimate:.4g})>"


@dataclass(frozen=True)
class GraphPointData:
    position: Tuple[float, float]
    g: float
    N_tilde: Tuple[float, float, float]
    N_tilde_h: Tuple[float, float]
    nu_h: Tuple[float, float]
    Z_tilde: Tuple[float, float]
    Z: Tuple[float, float]
    jac: float


def _bump(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    inside = np.abs(s) < 1.0
    w = np.where(inside, 1.0 - s * s, 0.0)
    return w ** 4, np.where(inside, -8.0 * s * w ** 3, 0.0)


# Integral of (1 - s^2)^4 over [-1, 1].
BUMP_MASS = 256.0 / 315.0
# Maximum of |d/ds (1 - s^2)^4|, reached at s = 1/sqrt(7).
BUMP_SLOPE = 8.0 / np.sqrt(7.0) * (6.0 / 7.0) ** 3


@dataclass(frozen=True)
class BumpTestField:
    """Tensor-product polynomial bump A (1-s^2)^4 (1-r^2)^4."""

    center_x: float
    center_t: float
    radius_x: float
    radius_t: float
    amplitude: float = 1.0

    @property
    def support(self) -> Rectangle:
        return Rectangle(
            self.center_x - self.radius_x,
            self.center_x + self.radius_x,
            self.center_t - self.radius_t,
            self.center_t + self.radius_t,
        )

    @property
    def terms(self) -> Tuple[Tuple[float, "BumpTestField"], ...]:
        return ((1.0, self),)

    @property
    def exact_integral(self) -> float:
        return self.amplitude * self.radius_x * self.radius_t * BUMP_MASS ** 2

    @property
    def sup_norm(self) -> float:
        """Bound on max(|v|, |v_x|, |v_t|)."""
        return abs(self.amplitude) * max(1.0, BUMP_SLOPE / self.radius_x, BUMP_SLOPE / self.radius_t)

    def evaluate(self, x, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return v, v_x and v_t."""
        sx = (np.asarray(x, dtype=float) - self.center_x) / self.radius_x
        st = (np.asarray(t, dtype=float) - self.center_t) / self.radius_t
        bx, dbx = _bump(sx)
        bt, dbt = _bump(st)
        a = self.amplitude
        return a * bx * bt, a * dbx * bt / self.radius_x, a * bx * dbt / self.radius_t

    def scaled(self, factor: float) -> "BumpTestField":
        return BumpTestField(self.center_x, self.center_t, self.radius_x, self.radius_t, self.amplitude * factor)

    @classmethod
    def normalized(cls, center_x, center_t, radius_x, radius_t, mass: float = 1.0) -> "BumpTestField":
        return cls(center_x, center_t, radius_x, radius_t, mass / (radius_x * radius_t * BUMP_MASS ** 2))


@dataclass(frozen=True)
class CompositeTestField:
    """Finite linear combination of bumps; variations are taken termwise."""

    terms: Tuple[Tuple[float, BumpTestField], ...]

    @property
    def support(self) -> Rectangle:
        boxes = [bump.support for _, bump in self.terms]
        return Rectangle(min(b.x0 for b in boxes), max(b.x1 for b in boxes),
                         min(b.t0 for b in boxes), max(b.t1 for b in boxes))

    @property
    def sup_norm(self) -> float:
        return sum(abs(coef) * bump.sup_norm for coef, bump in self.terms)

    def evaluate(self, x, t):
        total = [0.0, 0.0, 0.0]
        for coef, bump in self.terms:
            for k, part in enumerate(bump.evaluate(x, t)):
                total[k] = total[k] + coef * part
        return tuple(total)


@dataclass(frozen=True, eq=False)
class CurveScalar:
    params: np.ndarray
    values: np.ndarray
    residual: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.params)


@dataclass(frozen=True, eq=False)
class Leaf:
    """Characteristic curve xi -> (xi, t(xi)) of a graph field."""

    a: float
    b: float
    xi: np.ndarray
    t: np.ndarray
    u: np.ndarray
    g: np.ndarray
    lifted: HeisenbergCurve
    exited: bool = False
    error_estimate: float = 0.0
    method: str = "rk4"

    def __repr__(self):
        return f"<Leaf(a={self.a}, b={self.b}, samples={len(self.xi)}, method={self.method}, exited={self.exited})>"


@dataclass(frozen=True, eq=False)
class CharacteristicFamily:
    a: float
    b: float
    eps: np.ndarray
    leaves: List[Leaf]
    xi: np.ndarray
    t: np.ndarray
    jacobian: np.ndarray

    def __repr__(self):
        return f"<CharacteristicFamily(leaves={len(self.leaves)}, samples={len(self.xi)})>"


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    vertices: np.ndarray
    faces: List[Tuple[int, ...]]
    channels: Dict[str, np.ndarray] = field(default_factory=dict)

    def __repr__(self):
        return f"<SurfaceMesh(vertices={len(self.vertices)}, faces={len(self.faces)})>"


@dataclass(frozen=True, eq=False)
class WulffShape:
    body: ConvexBody
    v_grid: np.ndarray
    curves: List[HeisenbergCurve]
    mesh: SurfaceMesh
    period: float
    apex: HeisenbergPoint
    apex_gap: float


@dataclass(frozen=True, eq=False)
class FramedCurve:
    curve: HeisenbergCurve
    nu_h: np.ndarray
    Z: np.ndarray


@dataclass(frozen=True)
class TransversalData:
    """Slope and height profiles on the segment x = a, t in t_range."""

    a: float
    t_range: Tuple[float, float]
    g: Callable
    u: Callable


@dataclass(frozen=True, eq=False)
class SynthesizedPatch:
    field: GraphField
    leaves: List[Leaf]
    b_values: np.ndarray
