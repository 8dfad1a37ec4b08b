"""Underwater vehicle with noncoincident centers as a Lie-Poisson system on se*(3).

State z = (Pi, P, Gamma): angular impulse, linear impulse, gravity direction.
The offset vector r from the center of buoyancy to the center of gravity is
fixed to e3, so the coupling block is D = m*l*hat(e3).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import AsymmetricParams, InvalidParams, ZeroSpin
from .manifold import AmbientState, ChartPoint, ScalarField, as_vector, linear_combination

E3 = np.array([0.0, 0.0, 1.0])


def hat(v) -> np.ndarray:
    """Skew matrix with hat(v) @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class VehicleParams:
    m1: float
    m2: float
    m3: float
    I1: float
    I2: float
    I3: float
    m: float
    l: float
    g: float

    def __post_init__(self):
        for name in ("m1", "m2", "m3", "I1", "I2", "I3", "m", "l", "g"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise InvalidParams(f"{name} must be finite")
            object.__setattr__(self, name, v)
        for name in ("m1", "m2", "m3", "I1", "I2", "I3", "m"):
            if getattr(self, name) <= 0:
                raise InvalidParams(f"{name} must be positive")
        if self.l < 0:
            raise InvalidParams("l must be nonnegative")
        if self.m2 * self.I1 - self.coupling**2 <= 0 or self.m1 * self.I2 - self.coupling**2 <= 0:
            raise InvalidParams("need m2*I1 > (m*l)^2 and m1*I2 > (m*l)^2")

    @property
    def coupling(self) -> float:
        """m*l, the size of the off-diagonal block D."""
        return self.m * self.l

    @property
    def mgl(self) -> float:
        return self.m * self.g * self.l

    @property
    def symmetric(self) -> bool:
        return self.m1 == self.m2 and self.I1 == self.I2

    def require_symmetric(self):
        if not self.symmetric:
            raise AsymmetricParams("requires m1 == m2 and I1 == I2")

    def replace(self, **changes) -> "VehicleParams":
        values = {k: getattr(self, k) for k in ("m1", "m2", "m3", "I1", "I2", "I3", "m", "l", "g")}
        values.update(changes)
        return VehicleParams(**values)


REF_PARAMS = VehicleParams(m1=3.0, m2=3.0, m3=1.0, I1=2.0, I2=2.0, I3=1.0, m=1.0, l=0.5, g=10.0)


@dataclass(frozen=True)
class DerivedCoeffs:
    a1: float
    a2: float
    b1: float
    b2: float
    c1: float
    c2: float

    def _alias(self, first, second, name):
        if first != second:
            raise AsymmetricParams(f"{name} is only defined in the symmetric case")
        return first

    @property
    def a(self) -> float:
        return self._alias(self.a1, self.a2, "a")

    @property
    def b(self) -> float:
        return self._alias(self.b1, self.b2, "b")

    @property
    def c(self) -> float:
        return self._alias(self.c1, self.c2, "c")


def derived_coeffs(p: VehicleParams) -> DerivedCoeffs:
    d12 = p.m1 * p.I2 - p.coupling**2
    d21 = p.m2 * p.I1 - p.coupling**2
    if d12 <= 0 or d21 <= 0:
        raise InvalidParams("nonpositive block determinant")
    return DerivedCoeffs(
        a1=p.m2 / d21,
        a2=p.m1 / d12,
        b1=-p.coupling / d12,
        b2=-p.coupling / d21,
        c1=p.I2 / d12,
        c2=p.I1 / d21,
    )


def inertia_matrix(p: VehicleParams) -> np.ndarray:
    """6x6 matrix [[J, D], [D^T, M]] mapping (Omega, v) to (Pi, P)."""
    out = np.zeros((6, 6))
    out[0:3, 0:3] = np.diag([p.I1, p.I2, p.I3])
    out[3:6, 3:6] = np.diag([p.m1, p.m2, p.m3])
    D = p.coupling * hat(E3)
    out[0:3, 3:6] = D
    out[3:6, 0:3] = D.T
    return out


def mobility_blocks(p: VehicleParams):
    """Blocks (A, B, C) of the inverse inertia matrix [[A, B^T], [B, C]]."""
    k = derived_coeffs(p)
    A = np.diag([k.a1, k.a2, 1.0 / p.I3])
    B = np.array([[0.0, k.b1, 0.0], [-k.b2, 0.0, 0.0], [0.0, 0.0, 0.0]])
    C = np.diag([k.c1, k.c2, 1.0 / p.m3])
    return A, B, C


def mobility_matrix(p: VehicleParams) -> np.ndarray:
    A, B, C = mobility_blocks(p)
    return np.block([[A, B.T], [B, C]])


def velocities(z, p: VehicleParams):
    """(Omega, v) from (Pi, P)."""
    v = as_vector(z)
    A, B, C = mobility_blocks(p)
    Pi, P = v[0:3], v[3:6]
    return A @ Pi + B.T @ P, B @ Pi + C @ P


def hamiltonian(z, p: VehicleParams) -> float:
    v = as_vector(z)
    A, B, C = mobility_blocks(p)
    Pi, P, Gamma = v[0:3], v[3:6], v[6:9]
    return 0.5 * (Pi @ A @ Pi + 2 * Pi @ B.T @ P + P @ C @ P - 2 * p.mgl * (Gamma @ E3))


def hamiltonian_gradient(z, p: VehicleParams) -> np.ndarray:
    Omega, vel = velocities(z, p)
    return np.concatenate([Omega, vel, -p.mgl * E3])


class Invariants(NamedTuple):
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float


def invariants_eval(z) -> Invariants:
    """Casimirs C1-C3 and sub-Casimirs C4, C5."""
    v = as_vector(z)
    Pi, P, Gamma = v[0:3], v[3:6], v[6:9]
    return Invariants(
        float(P @ Gamma), 0.5 * float(P @ P), 0.5 * float(Gamma @ Gamma),
        float(Pi @ P), float(Pi @ Gamma),
    )


def invariant_gradients(z) -> np.ndarray:
    """Rows are the ambient gradients of C1..C5."""
    v = as_vector(z)
    Pi, P, Gamma = v[0:3], v[3:6], v[6:9]
    zero = np.zeros(3)
    return np.array([
        np.concatenate([zero, Gamma, P]),
        np.concatenate([zero, P, zero]),
        np.concatenate([zero, zero, Gamma]),
        np.concatenate([P, Pi, zero]),
        np.concatenate([Gamma, zero, Pi]),
    ])


def poisson_tensor(z) -> np.ndarray:
    v = as_vector(z)
    Pi, P, Gamma = hat(v[0:3]), hat(v[3:6]), hat(v[6:9])
    O = np.zeros((3, 3))
    return np.block([[Pi, P, Gamma], [P, O, O], [Gamma, O, O]])


def vector_field(z, p: VehicleParams) -> np.ndarray:
    """Equations of motion in cross-product form."""
    v = as_vector(z)
    Pi, P, Gamma = v[0:3], v[3:6], v[6:9]
    Omega, vel = velocities(v, p)
    return np.concatenate([
        np.cross(Pi, Omega) + np.cross(P, vel) - p.mgl * np.cross(Gamma, E3),
        np.cross(P, Omega),
        np.cross(Gamma, Omega),
    ])


def poisson_vector_field(z, p: VehicleParams) -> np.ndarray:
    """Lambda(z) grad H(z); must agree with vector_field."""
    return poisson_tensor(z) @ hamiltonian_gradient(z, p)


def field_function(p: VehicleParams):
    """rhs(t, Z) for an ODE integrator; Z may hold any number of stacked states with the mobility coefficients bound once."""
    k = derived_coeffs(p)
    a1, a2, b1, b2, c1, c2 = k.a1, k.a2, k.b1, k.b2, k.c1, k.c2
    iI3, im3, mgl = 1.0 / p.I3, 1.0 / p.m3, p.mgl

    def rhs(t, Z):
        Pi1, Pi2, Pi3, P1, P2, P3, G1, G2, G3 = np.moveaxis(Z, -1, 0)
        W1 = a1 * Pi1 - b2 * P2
        W2 = a2 * Pi2 + b1 * P1
        W3 = iI3 * Pi3
        v1 = b1 * Pi2 + c1 * P1
        v2 = c2 * P2 - b2 * Pi1
        v3 = im3 * P3
        return np.stack([
            Pi2 * W3 - Pi3 * W2 + P2 * v3 - P3 * v2 - mgl * G2,
            Pi3 * W1 - Pi1 * W3 + P3 * v1 - P1 * v3 + mgl * G1,
            Pi1 * W2 - Pi2 * W1 + P1 * v2 - P2 * v1,
            P2 * W3 - P3 * W2,
            P3 * W1 - P1 * W3,
            P1 * W2 - P2 * W1,
            G2 * W3 - G3 * W2,
            G3 * W1 - G1 * W3,
            G1 * W2 - G2 * W1,
        ], axis=-1)

    return rhs


def batch_vector_field(Z: np.ndarray, p: VehicleParams) -> np.ndarray:
    """vector_field applied to an array of states with last axis of length 9."""
    return field_function(p)(0.0, np.asarray(Z, dtype=float))


@dataclass(frozen=True)
class EquilibriumSpec:
    Pi_e: float
    P_e: float

    def __post_init__(self):
        object.__setattr__(self, "Pi_e", float(self.Pi_e))
        object.__setattr__(self, "P_e", float(self.P_e))
        if self.Pi_e == 0.0:
            raise ZeroSpin("nongeneric equilibria need nonzero spin Pi_e")

    def chart_point(self) -> ChartPoint:
        return ChartPoint.gamma(0.0, 0.0, self.Pi_e, 0.0, 0.0, 1.0, self.P_e)


def equilibrium_state(e: EquilibriumSpec) -> AmbientState:
    return AmbientState(E3 * e.Pi_e, E3 * e.P_e, E3)


# -- fields in the Gamma-chart ------------------------------------------------

@dataclass(frozen=True)
class ChartFields:
    H: ScalarField
    C1: ScalarField
    C2: ScalarField
    C3: ScalarField
    C4: ScalarField
    C5: ScalarField
    K: ScalarField | None
    G: ScalarField | None
    lam: float

    def constraints(self):
        return [self.C1, self.C3, self.C5]


def _chart_hamiltonian(p: VehicleParams) -> ScalarField:
    k = derived_coeffs(p)
    aI3, am3, mgl = 1.0 / p.I3, 1.0 / p.m3, p.mgl

    # cross term <Pi, B^T P> = b1*Pi2*P1 - b2*Pi1*P2, with P = x7*(x4, x5, x6)
    def func(x):
        x1, x2, x3, x4, x5, x6, x7 = x
        return (0.5 * (k.a1 * x1**2 + k.a2 * x2**2 + aI3 * x3**2)
                + (k.b1 * x2 * x4 - k.b2 * x1 * x5) * x7
                + 0.5 * (k.c1 * x4**2 + k.c2 * x5**2 + am3 * x6**2) * x7**2
                - mgl * x6)

    def grad(x):
        x1, x2, x3, x4, x5, x6, x7 = x
        return np.array([
            k.a1 * x1 - k.b2 * x5 * x7,
            k.a2 * x2 + k.b1 * x4 * x7,
            aI3 * x3,
            k.b1 * x2 * x7 + k.c1 * x4 * x7**2,
            -k.b2 * x1 * x7 + k.c2 * x5 * x7**2,
            am3 * x6 * x7**2 - mgl,
            k.b1 * x2 * x4 - k.b2 * x1 * x5 + (k.c1 * x4**2 + k.c2 * x5**2 + am3 * x6**2) * x7,
        ])

    def hess(x):
        x1, x2, x3, x4, x5, x6, x7 = x
        h = np.zeros((7, 7))
        h[0, 0], h[1, 1], h[2, 2] = k.a1, k.a2, aI3
        h[0, 4] = h[4, 0] = -k.b2 * x7
        h[0, 6] = h[6, 0] = -k.b2 * x5
        h[1, 3] = h[3, 1] = k.b1 * x7
        h[1, 6] = h[6, 1] = k.b1 * x4
        h[3, 3] = k.c1 * x7**2
        h[4, 4] = k.c2 * x7**2
        h[5, 5] = am3 * x7**2
        h[3, 6] = h[6, 3] = k.b1 * x2 + 2 * k.c1 * x4 * x7
        h[4, 6] = h[6, 4] = -k.b2 * x1 + 2 * k.c2 * x5 * x7
        h[5, 6] = h[6, 5] = 2 * am3 * x6 * x7
        h[6, 6] = k.c1 * x4**2 + k.c2 * x5**2 + am3 * x6**2
        return h

    return ScalarField(func, grad, hess, "H")


def _c1():
    def func(x):
        return (x[3:6] @ x[3:6]) * x[6]

    def grad(x):
        return np.concatenate([np.zeros(3), 2 * x[3:6] * x[6], [x[3:6] @ x[3:6]]])

    def hess(x):
        h = np.zeros((7, 7))
        h[3:6, 3:6] = 2 * x[6] * np.eye(3)
        h[3:6, 6] = h[6, 3:6] = 2 * x[3:6]
        return h

    return ScalarField(func, grad, hess, "C1")


def _c2():
    def func(x):
        return 0.5 * (x[3:6] @ x[3:6]) * x[6] ** 2

    def grad(x):
        return np.concatenate([np.zeros(3), x[3:6] * x[6] ** 2, [(x[3:6] @ x[3:6]) * x[6]]])

    def hess(x):
        h = np.zeros((7, 7))
        h[3:6, 3:6] = x[6] ** 2 * np.eye(3)
        h[3:6, 6] = h[6, 3:6] = 2 * x[3:6] * x[6]
        h[6, 6] = x[3:6] @ x[3:6]
        return h

    return ScalarField(func, grad, hess, "C2")


def _c3():
    def func(x):
        return 0.5 * (x[3:6] @ x[3:6])

    def grad(x):
        return np.concatenate([np.zeros(3), x[3:6], [0.0]])

    def hess(x):
        h = np.zeros((7, 7))
        h[3:6, 3:6] = np.eye(3)
        return h

    return ScalarField(func, grad, hess, "C3")


def _c4():
    def func(x):
        return (x[0:3] @ x[3:6]) * x[6]

    def grad(x):
        return np.concatenate([x[3:6] * x[6], x[0:3] * x[6], [x[0:3] @ x[3:6]]])

    def hess(x):
        h = np.zeros((7, 7))
        h[0:3, 3:6] = h[3:6, 0:3] = x[6] * np.eye(3)
        h[0:3, 6] = h[6, 0:3] = x[3:6]
        h[3:6, 6] = h[6, 3:6] = x[0:3]
        return h

    return ScalarField(func, grad, hess, "C4")


def _c5():
    def func(x):
        return x[0:3] @ x[3:6]

    def grad(x):
        return np.concatenate([x[3:6], x[0:3], [0.0]])

    def hess(x):
        h = np.zeros((7, 7))
        h[0:3, 3:6] = h[3:6, 0:3] = np.eye(3)
        return h

    return ScalarField(func, grad, hess, "C5")


def _k():
    e = np.zeros(7)
    e[2] = 1.0
    return ScalarField(lambda x: x[2], lambda x: e.copy(), lambda x: np.zeros((7, 7)), "K")


def chart_fields(p: VehicleParams, lam: float = 0.0, require_symmetric: bool = True) -> ChartFields:
    """Restrictions of H, C1..C5, K and G = H + lam*K to the Gamma-chart.

    K and G are only conserved in the symmetric case. With
    ``require_symmetric=False`` they are returned as None for asymmetric
    parameters instead of raising.
    """
    if not p.symmetric and require_symmetric:
        raise AsymmetricParams("K and G_lambda need m1 == m2 and I1 == I2")
    H = _chart_hamiltonian(p)
    K = G = None
    if p.symmetric:
        K = _k()
        G = linear_combination([(1.0, H), (float(lam), K)], name="G")
    return ChartFields(H, _c1(), _c2(), _c3(), _c4(), _c5(), K, G, float(lam))
