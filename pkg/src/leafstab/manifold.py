"""Riemannian geometry on the 7-dimensional invariant submanifold of se*(3).

The submanifold is the set of states with P parallel to Gamma, (P, Gamma) not
both zero. It is covered by two charts:

    Gamma-chart: x -> (x1, x2, x3, x4*x7, x5*x7, x6*x7, x4, x5, x6)
    P-chart:     y -> (y1, y2, y3, y4, y5, y6, y4*y7, y5*y7, y6*y7)

and carries the metric induced by the Euclidean metric of R^9. Everything here
works in chart coordinates; derivatives of the metric are taken by central
differences so that the Christoffel symbols stay independent of any closed
form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidChartPoint, SingularMetric, TransitionUndefined

DIM = 7

# central-difference steps
METRIC_STEP = 1e-5
GRAD_STEP = 1e-6
HESS_STEP = 1e-4

SINGULAR_DET = 1e-14


class Chart(enum.Enum):
    GAMMA = "gamma"
    P = "p"


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """Seven chart coordinates tagged with the chart they belong to."""

    chart: Chart
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        if x.shape != (DIM,):
            raise InvalidChartPoint(f"expected {DIM} coordinates, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise InvalidChartPoint("coordinates must be finite")
        if not np.any(x[3:6]):
            raise InvalidChartPoint("coordinates 4-6 must not all vanish")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def gamma(cls, *coords) -> "ChartPoint":
        if len(coords) == 1:
            coords = coords[0]
        return cls(Chart.GAMMA, coords)

    def moved(self, dx) -> "ChartPoint":
        return ChartPoint(self.chart, self.x + np.asarray(dx, dtype=float))

    def __repr__(self):
        return f"ChartPoint({self.chart.value}, {np.array2string(self.x, precision=6)})"


@dataclass(frozen=True, eq=False)
class AmbientState:
    """A point z = (Pi, P, Gamma) of the 9-dimensional phase space."""

    Pi: np.ndarray
    P: np.ndarray
    Gamma: np.ndarray

    def __post_init__(self):
        for name in ("Pi", "P", "Gamma"):
            v = np.array(getattr(self, name), dtype=float).reshape(3)
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_vector(cls, z) -> "AmbientState":
        z = np.asarray(z, dtype=float).reshape(9)
        return cls(z[0:3], z[3:6], z[6:9])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.Pi, self.P, self.Gamma])

    def on_submanifold(self, tol: float = 1e-12) -> bool:
        nonzero = np.any(self.P) or np.any(self.Gamma)
        return bool(nonzero and np.linalg.norm(np.cross(self.P, self.Gamma)) <= tol)


def as_vector(z) -> np.ndarray:
    """Coerce an AmbientState or array-like into a 9-vector."""
    if isinstance(z, AmbientState):
        return z.as_vector()
    return np.asarray(z, dtype=float).reshape(9)


@dataclass(frozen=True)
class MetricAt:
    g: np.ndarray
    g_inv: np.ndarray


@dataclass(frozen=True)
class ChristoffelAt:
    # gamma[k, i, j] is the symbol with upper index k
    gamma: np.ndarray


@dataclass(frozen=True)
class ScalarField:
    """A real function of chart coordinates.

    ``grad`` and ``hess``, when given, return the coordinate partials and are
    used in place of finite differences.
    """

    func: Callable[[np.ndarray], float]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = field(default="f")

    def __call__(self, p) -> float:
        return float(self.func(_coords(p)))

    def differential(self, p, h: float = GRAD_STEP) -> np.ndarray:
        x = _coords(p)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return central_gradient(self.func, x, h)

    def second_partials(self, p, h: float = HESS_STEP) -> np.ndarray:
        x = _coords(p)
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        if self.grad is not None:
            jac = central_jacobian(self.grad, x, h)
            return 0.5 * (jac + jac.T)
        return central_hessian(self.func, x, h)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return linear_combination([(1.0, self), (1.0, other)], name=f"{self.name}+{other.name}")


def linear_combination(terms, name: str = "combo") -> ScalarField:
    """Field sum(c * f) over ``terms``; partials are combined when all are analytic."""
    terms = [(float(c), f) for c, f in terms]

    def func(x):
        return sum(c * f.func(x) for c, f in terms)

    grad = hess = None
    if all(f.grad is not None for _, f in terms):
        def grad(x):
            return sum(c * np.asarray(f.grad(x), dtype=float) for c, f in terms)
    if all(f.hess is not None for _, f in terms):
        def hess(x):
            return sum(c * np.asarray(f.hess(x), dtype=float) for c, f in terms)
    return ScalarField(func, grad, hess, name)


def _coords(p) -> np.ndarray:
    if isinstance(p, ChartPoint):
        return p.x
    return np.asarray(p, dtype=float)


def central_gradient(f, x, h):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def central_jacobian(f, x, h):
    """Columns are d f / d x_i for a vector-valued f."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        cols.append((np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2 * h))
    return np.stack(cols, axis=-1)


def central_hessian(f, x, h):
    x = np.asarray(x, dtype=float)
    n = x.size
    f0 = f(x)
    E = h * np.eye(n)
    hess = np.empty((n, n))
    for i in range(n):
        hess[i, i] = (f(x + E[i]) - 2 * f0 + f(x - E[i])) / h**2
        for j in range(i + 1, n):
            v = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                 - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4 * h**2)
            hess[i, j] = hess[j, i] = v
    return hess


# -- charts -------------------------------------------------------------------

def embed_coords(chart: Chart, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    base, triple, scale = x[0:3], x[3:6], x[6]
    if chart is Chart.GAMMA:
        return np.concatenate([base, triple * scale, triple])
    return np.concatenate([base, triple, triple * scale])


def embed(p: ChartPoint) -> AmbientState:
    """Ambient image of a chart point; always satisfies P x Gamma = 0."""
    if not isinstance(p, ChartPoint):
        raise InvalidChartPoint("embed expects a ChartPoint")
    return AmbientState.from_vector(embed_coords(p.chart, p.x))


def embedding_jacobian(p: ChartPoint) -> np.ndarray:
    """Analytic 9x7 Jacobian of the chart embedding."""
    x = p.x
    J = np.zeros((9, DIM))
    J[0:3, 0:3] = np.eye(3)
    stretched, plain = (slice(3, 6), slice(6, 9)) if p.chart is Chart.GAMMA else (slice(6, 9), slice(3, 6))
    J[stretched, 3:6] = x[6] * np.eye(3)
    J[stretched, 6] = x[3:6]
    J[plain, 3:6] = np.eye(3)
    return J


def transition_gamma_to_p(x) -> np.ndarray:
    """Gamma-chart coordinates to P-chart coordinates of the same point.

    The map is an involution, so it also serves as the inverse transition.
    """
    x = np.asarray(x, dtype=float).reshape(DIM)
    if x[6] == 0.0:
        raise TransitionUndefined("x7 = 0 lies outside the chart overlap")
    if not np.any(x[3:6]):
        raise TransitionUndefined("coordinates 4-6 must not all vanish")
    return np.concatenate([x[0:3], x[3:6] * x[6], [1.0 / x[6]]])


def to_chart(p: ChartPoint, chart: Chart) -> ChartPoint:
    if p.chart is chart:
        return p
    return ChartPoint(chart, transition_gamma_to_p(p.x))


def chart_point_from_ambient(z, chart: Chart = Chart.GAMMA) -> ChartPoint:
    """Inverse of embed for states on the submanifold.

    The scale coordinate is fitted by least squares, so small departures from
    P || Gamma are projected away.
    """
    v = as_vector(z)
    Pi, P, Gamma = v[0:3], v[3:6], v[6:9]
    triple, other = (Gamma, P) if chart is Chart.GAMMA else (P, Gamma)
    nrm2 = triple @ triple
    if nrm2 == 0.0:
        raise InvalidChartPoint(f"state is outside the domain of the {chart.value}-chart")
    scale = (other @ triple) / nrm2
    return ChartPoint(chart, np.concatenate([Pi, triple, [scale]]))


# -- metric and connection -----------------------------------------------------

def metric_matrix(x) -> np.ndarray:
    """Closed-form induced metric; identical in both charts."""
    x = np.asarray(x, dtype=float)
    t, s = x[3:6], x[6]
    g = np.eye(DIM)
    g[3:6, 3:6] *= s * s + 1.0
    g[3:6, 6] = g[6, 3:6] = t * s
    g[6, 6] = t @ t
    return g


def pullback_metric(p: ChartPoint) -> np.ndarray:
    J = embedding_jacobian(p)
    return J.T @ J


def induced_metric(p: ChartPoint) -> MetricAt:
    g = metric_matrix(p.x)
    if np.linalg.det(g) < SINGULAR_DET:
        raise SingularMetric(f"induced metric is degenerate at {p!r}")
    g_inv = np.linalg.inv(g)
    return MetricAt(g, 0.5 * (g_inv + g_inv.T))


def christoffel(p: ChartPoint, h: float = METRIC_STEP) -> ChristoffelAt:
    """Christoffel symbols of the induced metric from central differences."""
    g_inv = induced_metric(p).g_inv
    # dg[l, i, j] = d g_ij / d x_l
    dg = np.empty((DIM, DIM, DIM))
    for l in range(DIM):
        e = np.zeros(DIM)
        e[l] = h
        dg[l] = (metric_matrix(p.x + e) - metric_matrix(p.x - e)) / (2 * h)
    # lowered[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lowered = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    gamma = 0.5 * np.einsum("kl,lij->kij", g_inv, lowered)
    gamma = 0.5 * (gamma + gamma.transpose(0, 2, 1))
    return ChristoffelAt(gamma)


def inner(p: ChartPoint, u, v) -> float:
    return float(np.asarray(u) @ induced_metric(p).g @ np.asarray(v))


def riemannian_gradient(f: ScalarField, p: ChartPoint, h: float = GRAD_STEP) -> np.ndarray:
    return induced_metric(p).g_inv @ f.differential(p, h)


def riemannian_hessian(f: ScalarField, p: ChartPoint, conn: Optional[ChristoffelAt] = None,
                       h_grad: float = GRAD_STEP, h_hess: float = HESS_STEP) -> np.ndarray:
    """Covariant Hessian d2f/dxi dxj - Gamma^k_ij df/dxk."""
    if conn is None:
        conn = christoffel(p)
    d2 = f.second_partials(p, h_hess)
    df = f.differential(p, h_grad)
    hess = d2 - np.einsum("kij,k->ij", conn.gamma, df)
    return 0.5 * (hess + hess.T)
