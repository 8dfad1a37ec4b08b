"""Trajectory integration, conservation diagnostics and empirical stability probes."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import MaxStepsExceeded, ProjectionFailed, StepSizeUnderflow, ValidationError
from .manifold import ChartPoint, embed_coords, embedding_jacobian, Chart
from .vehicle_model import (
    EquilibriumSpec,
    VehicleParams,
    field_function,
    chart_fields,
    equilibrium_state,
    hamiltonian,
    invariants_eval,
)
from . import stability_core as core


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1.0
    t_final: float = 100.0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValidationError("integrator tolerances must be positive")
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValidationError("need 0 < dt_min <= dt_init <= dt_max")
        if self.t_final < 0:
            raise ValidationError("t_final must be nonnegative")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n_times, *state_shape)
    accepted: int = 0
    rejected: int = 0


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [np.array(row) for row in (
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
)]
_B5 = np.append(_A[6], 0.0)
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def dopri54(rhs: Callable[[float, np.ndarray], np.ndarray], y0, cfg: IntegratorConfig,
            observer: Optional[Callable[[float, np.ndarray], None]] = None, record: bool = True) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) integration of y' = rhs(t, y) on [0, t_final].

    The scaled error max|err| / (abs_tol + rel_tol * max(|y|, |y_new|)) must be
    at most 1 for a step to be accepted. ``y0`` may have any shape.
    """
    y = np.array(y0, dtype=float)
    t, T = 0.0, float(cfg.t_final)
    dt = min(cfg.dt_init, cfg.dt_max)
    times, states = [t], [y.copy()]
    if observer is not None:
        observer(t, y)
    K = np.empty((7,) + y.shape)
    K[0] = rhs(t, y)
    accepted = rejected = 0
    while t < T:
        if accepted + rejected >= cfg.max_steps:
            raise MaxStepsExceeded(f"gave up at t={t:.6g} after {cfg.max_steps} steps")
        last = t + dt >= T
        h = T - t if last else dt
        for i in range(1, 7):
            K[i] = rhs(t + _C[i] * h, y + h * np.tensordot(_A[i], K[:i], 1))
        y_new = y + h * np.tensordot(_B5, K, 1)
        err = h * np.tensordot(_E, K, 1)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale))
        if err_norm <= 1.0:
            t = T if last else t + h
            y = y_new
            K[0] = K[6]  # first-same-as-last
            accepted += 1
            if record:
                times.append(t)
                states.append(y)
            if observer is not None:
                observer(t, y)
            factor = 5.0 if err_norm == 0.0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
            if not last:
                dt = min(h * factor, cfg.dt_max)
        else:
            rejected += 1
            dt = h * max(0.2, 0.9 * err_norm ** -0.2)
            if dt < cfg.dt_min:
                raise StepSizeUnderflow(f"step size {dt:.3e} fell below dt_min at t={t:.6g}")
    if not record:
        times, states = [t], [y.copy()]
    return Trajectory(np.array(times), np.array(states), accepted, rejected)


def integrate(z0, p: VehicleParams, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the vehicle equations from a 9-vector (or a stack of them)."""
    z0 = np.asarray(z0.as_vector() if hasattr(z0, "as_vector") else z0, dtype=float)
    single = z0.ndim == 1
    Z0 = z0.reshape(-1, 9)

    traj = dopri54(field_function(p), Z0, cfg)
    if single:
        traj.states = traj.states[:, 0, :]
    return traj


# -- diagnostics ----------------------------------------------------------------

def conservation_report(traj: Trajectory, p: VehicleParams) -> dict:
    """Maximum absolute drift of each conserved quantity along ``traj``.

    K is included only for symmetric parameters. C4 and C5 are conserved only
    on the invariant submanifold; their drift is informational elsewhere.
    """
    states = traj.states.reshape(len(traj.times), 9)
    H = np.array([hamiltonian(z, p) for z in states])
    C = np.array([invariants_eval(z) for z in states])
    report = {"H": float(np.abs(H - H[0]).max())}
    for i, name in enumerate(("C1", "C2", "C3", "C4", "C5")):
        report[name] = float(np.abs(C[:, i] - C[0, i]).max())
    if p.symmetric:
        report["K"] = float(np.abs(states[:, 2] - states[0, 2]).max())
    return report


def invariance_report(traj: Trajectory) -> float:
    """max |P x Gamma| along the trajectory."""
    states = traj.states.reshape(len(traj.times), 9)
    return float(np.linalg.norm(np.cross(states[:, 3:6], states[:, 6:9]), axis=1).max())


TRAJECTORY_HEADER = ["t", "Pi1", "Pi2", "Pi3", "P1", "P2", "P3", "G1", "G2", "G3"]


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for t, z in zip(traj.times, traj.states.reshape(len(traj.times), 9)):
        w.writerow([format(v, ".17g") for v in (t, *z)])
    return buf.getvalue()


# -- empirical Lyapunov probes ----------------------------------------------------

class ProbeMode(enum.Enum):
    LEAF = "leaf"
    SUBMANIFOLD = "submanifold"
    FULL_SPACE = "fullspace"


@dataclass
class ProbeReport:
    mode: ProbeMode
    epsilon: float
    samples: int
    max_deviation: float
    escaped: bool
    escape_radius: float
    sample_deviations: list = field(default_factory=list)
    initial_states: Optional[np.ndarray] = None
    exploratory: bool = False

    def summary(self) -> str:
        lines = [
            f"mode={self.mode.value}",
            f"epsilon={self.epsilon:.6g}",
            f"samples={self.samples}",
            f"max_deviation={self.max_deviation:.6e}",
            f"escape_radius={self.escape_radius:.6g}",
            f"escaped={str(self.escaped).lower()}",
        ]
        if self.exploratory:
            lines.append("status=EXPLORATORY (evidence only, not a stability certificate)")
        return "\n".join(lines)

    def samples_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample", "max_deviation", "escaped"] + [f"z0_{i}" for i in range(1, 10)])
        for i, dev in enumerate(self.sample_deviations):
            z0 = self.initial_states[i]
            w.writerow([i, format(dev, ".17g"), int(dev > self.escape_radius)] + [format(v, ".17g") for v in z0])
        return buf.getvalue()


def project_to_leaf(x, targets, constraints, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    """Newton iteration with the pseudo-inverse of the constraint Jacobian."""
    x = np.array(x, dtype=float)
    for _ in range(max_iter):
        r = np.array([f.func(x) for f in constraints]) - targets
        if np.abs(r).max() <= tol:
            return x
        D = np.array([f.grad(x) for f in constraints])
        x = x - np.linalg.pinv(D) @ r
    r = np.array([f.func(x) for f in constraints]) - targets
    if np.abs(r).max() <= tol:
        return x
    raise ProjectionFailed(f"leaf projection did not converge (residual {np.abs(r).max():.3e})")


def _chart_perturbation(rng, x0, directions, epsilon):
    """Random combination of ``directions`` whose ambient image has norm epsilon."""
    J = embedding_jacobian(ChartPoint(Chart.GAMMA, x0))
    coeffs = rng.standard_normal(len(directions))
    v = coeffs @ directions
    return epsilon * v / np.linalg.norm(J @ v)


def perturbed_states(e: EquilibriumSpec, p: VehicleParams, mode: ProbeMode, epsilon: float,
                     samples: int, rng: np.random.Generator) -> np.ndarray:
    """Initial conditions near the equilibrium, one row per sample."""
    ze = equilibrium_state(e).as_vector()
    out = np.empty((samples, 9))
    if mode is ProbeMode.FULL_SPACE:
        for i in range(samples):
            d = rng.standard_normal(9)
            out[i] = ze + epsilon * d / np.linalg.norm(d)
        return out
    p.require_symmetric()
    x0 = e.chart_point().x
    if mode is ProbeMode.SUBMANIFOLD:
        for i in range(samples):
            out[i] = embed_coords(Chart.GAMMA, x0 + _chart_perturbation(rng, x0, np.eye(7), epsilon))
        return out
    fields = chart_fields(p)
    constraints = fields.constraints()
    targets = np.array([f.func(x0) for f in constraints])
    cs = core.ConstraintSet(constraints, fields.H)
    basis = core.tangent_basis(cs, e.chart_point())
    for i in range(samples):
        x = project_to_leaf(x0 + _chart_perturbation(rng, x0, basis, epsilon), targets, constraints)
        out[i] = embed_coords(Chart.GAMMA, x)
    return out


def stability_probe(e: EquilibriumSpec, p: VehicleParams, mode: ProbeMode = ProbeMode.FULL_SPACE,
                    epsilon: float = 1e-3, samples: int = 20, cfg: IntegratorConfig = None,
                    seed: int = 0, escape_radius: float = 0.1, exploratory: bool = False) -> ProbeReport:
    """Integrate random perturbations and record the largest excursion from the equilibrium.

    All samples are advanced together as one batch, so the result depends only
    on the seed.
    """
    if cfg is None:
        cfg = IntegratorConfig(t_final=200.0, rel_tol=1e-9, abs_tol=1e-12)
    mode = ProbeMode(mode)
    rng = np.random.default_rng(seed)
    Z0 = perturbed_states(e, p, mode, epsilon, samples, rng)
    ze = equilibrium_state(e).as_vector()
    worst = np.zeros(samples)

    def observe(t, Z):
        np.maximum(worst, np.linalg.norm(Z - ze, axis=1), out=worst)

    dopri54(field_function(p), Z0, cfg, observer=observe, record=False)
    max_dev = float(worst.max()) if samples else 0.0
    return ProbeReport(mode, epsilon, samples, max_dev, max_dev > escape_radius, escape_radius,
                       [float(w) for w in worst], Z0, exploratory)
