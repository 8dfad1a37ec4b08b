"""Stability classification of the spinning equilibria (0,0,Pi_e, 0,0,P_e, 0,0,1).

The reduced Hessian on the leaf has leading minors a, a^2, Theta3 and
Theta3^2/a^2, so everything hinges on the sign of Theta3(lambda), a downward
parabola in the augmentation parameter lambda. Its vertex is positive exactly
when

    mgl > (1/m3 - 1/m1) P_e^2 - (a/4) Pi_e^2.

Closed forms here are always cross-checked against the numeric pipeline of
``stability_core``; see :func:`validate_transcription`.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import stability_core as core
from .errors import NumericalError
from .vehicle_model import EquilibriumSpec, VehicleParams, chart_fields, derived_coeffs

BOUNDARY_TOL = 1e-9


class RegionLabel(enum.Enum):
    STABLE_FULL = "StableFull"
    STABLE_ON_SUBMANIFOLD = "StableOnSubmanifold"
    UNSTABLE = "Unstable"
    BOUNDARY = "Boundary"

    @property
    def code(self) -> int:
        return _LABEL_CODES[self]


_LABEL_CODES = {
    RegionLabel.STABLE_FULL: 2,
    RegionLabel.STABLE_ON_SUBMANIFOLD: 1,
    RegionLabel.UNSTABLE: -1,
    RegionLabel.BOUNDARY: 0,
}


class TranscriptionMismatch(NumericalError):
    """Closed-form expressions disagree with the numeric Hessian pipeline."""


@dataclass(frozen=True)
class ThetaQuadratic:
    q2: float
    q1: float
    q0: float

    def __call__(self, lam):
        return (self.q2 * lam + self.q1) * lam + self.q0


class LambdaStar(NamedTuple):
    lam: float
    theta_max: float
    exists_positive: bool


class StabilityInequality(NamedTuple):
    lhs: float
    rhs: float
    margin: float


def _shorthand(p: VehicleParams):
    p.require_symmetric()
    return p.m1, p.m3, p.I1, p.I3, p.coupling**2, p.m1 * p.I1 - p.coupling**2


def theta_quadratic(e: EquilibriumSpec, p: VehicleParams) -> ThetaQuadratic:
    """Coefficients of the third leading minor as a polynomial in lambda."""
    m1, m3, I1, I3, ml2, den = _shorthand(p)
    Pi, P, mgl = e.Pi_e, e.P_e, p.mgl
    a = derived_coeffs(p).a
    scale = -a**2 / (m1 * m3 * I3**2)
    r2 = m3 * I3**2 * den
    r1 = 2 * Pi * m3 * I3 * m1 * I1 - m1 * Pi * m3 * I3**2 - 2 * Pi * m3 * I3 * ml2
    r0 = (Pi**2 * m3 * m1 * I1 + m1 * P**2 * I3**2 - m1 * I3**2 * mgl * m3
          - m1 * I3 * Pi**2 * m3 - Pi**2 * m3 * ml2 - P**2 * m3 * I3**2)
    return ThetaQuadratic(scale * r2, scale * r1, scale * r0)


def lambda_star(e: EquilibriumSpec, p: VehicleParams) -> LambdaStar:
    q = theta_quadratic(e, p)
    lam = -q.q1 / (2 * q.q2)
    theta_max = float(q(lam))
    return LambdaStar(float(lam), theta_max, theta_max > 0)


def stability_inequality(e: EquilibriumSpec, p: VehicleParams) -> StabilityInequality:
    p.require_symmetric()
    a = derived_coeffs(p).a
    rhs = (1 / p.m3 - 1 / p.m1) * e.P_e**2 - a / 4 * e.Pi_e**2
    return StabilityInequality(p.mgl, rhs, p.mgl - rhs)


def margins(e: EquilibriumSpec, p: VehicleParams):
    """(margin_full, margin_leaf): distances of mgl above the two thresholds."""
    p.require_symmetric()
    full = p.mgl - (1 / p.m3 - 1 / p.m1) * e.P_e**2
    return full, stability_inequality(e, p).margin


def classify(e: EquilibriumSpec, p: VehicleParams, boundary_tol: float = BOUNDARY_TOL,
             validate: bool = True) -> RegionLabel:
    if validate:
        validate_transcription(e, p)
    full, leaf = margins(e, p)
    if full > boundary_tol:
        return RegionLabel.STABLE_FULL
    # here full <= tol, so mgl lies at or left of the closed right end of region (ii)
    if leaf > boundary_tol:
        return RegionLabel.STABLE_ON_SUBMANIFOLD
    if leaf < -boundary_tol:
        return RegionLabel.UNSTABLE
    return RegionLabel.BOUNDARY


def closed_form_multipliers(e: EquilibriumSpec, p: VehicleParams, lam: float) -> np.ndarray:
    """Multipliers of (C1, C3, C5) for G = H + lam*K at the equilibrium."""
    p.require_symmetric()
    Pi, P, m3, I3 = e.Pi_e, e.P_e, p.m3, p.I3
    return np.array([
        P / m3,
        -(I3 * P**2 + m3 * Pi**2 + lam * I3 * m3 * Pi + p.mgl * I3 * m3) / (I3 * m3),
        (lam * I3 + Pi) / I3,
    ])


def closed_form_hessian(e: EquilibriumSpec, p: VehicleParams, lam: float) -> np.ndarray:
    """Reduced Hessian in the basis e1, e2, e4, e5 of the leaf tangent space."""
    m1, m3, I1, I3, ml2, den = _shorthand(p)
    Pi, P, g, ml = e.Pi_e, e.P_e, p.g, p.coupling
    h11 = m1 / den
    h13 = -(lam * I3 + Pi) / I3
    h14 = ml * P / den
    h33 = ((P**2 * I1 * m3 * I3 + ml2 * P**2 * I3 - m1 * I1 * P**2 * I3 - I3 * g * ml**3 * m3
            - Pi * m3 * lam * I3 * ml2 + Pi * m3 * lam * I3 * m1 * I1)
           + (p.mgl * m3 * m1 * I1 * I3 - Pi**2 * m3 * ml2 + Pi**2 * m3 * m1 * I1)) / (den * I3 * m3)
    return np.array([
        [h11, 0.0, h13, h14],
        [0.0, h11, -h14, h13],
        [h13, -h14, h33, 0.0],
        [h14, h13, 0.0, h33],
    ])


LEAF_BASIS = np.eye(7)[[0, 1, 3, 4]]


def numeric_reduced_hessian(e: EquilibriumSpec, p: VehicleParams, lam: float,
                            tol: core.Tolerances = core.DEFAULT_TOL) -> np.ndarray:
    fields = chart_fields(p, lam)
    cs = core.ConstraintSet(fields.constraints(), fields.G)
    return core.projected_hessian(cs, e.chart_point(), LEAF_BASIS, tol).matrix


def validate_transcription(e: EquilibriumSpec, p: VehicleParams, lams=(-1.0, 0.0, 1.0), rtol: float = 1e-7):
    """Fail fast if Theta3 or h_ij disagree with the numeric pipeline."""
    q = theta_quadratic(e, p)
    for lam in lams:
        numeric = numeric_reduced_hessian(e, p, lam)
        minor = core.leading_minors(numeric)[2]
        scale = max(abs(minor), abs(q(lam)), 1e-300)
        if abs(minor - q(lam)) > rtol * max(scale, 1.0):
            raise TranscriptionMismatch(
                f"Theta3({lam}) = {q(lam)!r} but numeric minor is {minor!r} at {e}"
            )
        closed = closed_form_hessian(e, p, lam)
        if np.abs(closed - numeric).max() > rtol * max(1.0, np.abs(numeric).max()):
            raise TranscriptionMismatch(f"closed-form reduced Hessian disagrees at {e}, lambda={lam}")


# -- parameter scans -----------------------------------------------------------

@dataclass(frozen=True)
class ScanGrid:
    Pi_min: float
    Pi_max: float
    Pi_step: float
    P_min: float
    P_max: float
    P_step: float
    params: VehicleParams

    def __post_init__(self):
        if self.Pi_step <= 0 or self.P_step <= 0:
            raise ValueError("scan steps must be positive")

    @staticmethod
    def _axis(lo, hi, step):
        if hi < lo:
            return np.zeros(0)
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(n)

    def Pi_values(self):
        return self._axis(self.Pi_min, self.Pi_max, self.Pi_step)

    def P_values(self):
        return self._axis(self.P_min, self.P_max, self.P_step)


class ScanRow(NamedTuple):
    Pi_e: float
    P_e: float
    margin_full: float
    margin_leaf: float
    label: RegionLabel


def scan(grid: ScanGrid, boundary_tol: float = BOUNDARY_TOL) -> list:
    p = grid.params
    Pis = [v for v in grid.Pi_values() if v != 0.0]
    Ps = list(grid.P_values())
    if not Pis or not Ps:
        return []
    validate_transcription(EquilibriumSpec(Pis[0], Ps[-1]), p)
    rows = []
    for Pi in Pis:
        for P in Ps:
            e = EquilibriumSpec(Pi, P)
            full, leaf = margins(e, p)
            rows.append(ScanRow(float(Pi), float(P), full, leaf,
                                classify(e, p, boundary_tol, validate=False)))
    return rows


SCAN_HEADER = ["Pi_e", "P_e", "margin_full", "margin_leaf", "label"]


def _g17(v: float) -> str:
    return format(v, ".17g")


def scan_csv(rows: Iterable[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for r in rows:
        w.writerow([_g17(r.Pi_e), _g17(r.P_e), _g17(r.margin_full), _g17(r.margin_leaf), r.label.value])
    return buf.getvalue()


def plot_data_csv(rows: Iterable[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "z"])
    for r in rows:
        w.writerow([_g17(r.P_e), _g17(r.Pi_e), r.label.code])
    return buf.getvalue()


_SVG_COLORS = {
    RegionLabel.STABLE_FULL: "#2b8a3e",
    RegionLabel.STABLE_ON_SUBMANIFOLD: "#f2c94c",
    RegionLabel.UNSTABLE: "#c92a2a",
    RegionLabel.BOUNDARY: "#495057",
}


def region_map_svg(rows, cell: int = 12) -> str:
    """Region map with P_e on the x axis and Pi_e on the y axis."""
    rows = list(rows)
    xs = sorted({r.P_e for r in rows})
    ys = sorted({r.Pi_e for r in rows}, reverse=True)
    width, height = cell * max(len(xs), 1), cell * max(len(ys), 1)
    col = {v: i for i, v in enumerate(xs)}
    row = {v: i for i, v in enumerate(ys)}
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    for r in rows:
        parts.append(
            f'<rect x="{col[r.P_e] * cell}" y="{row[r.Pi_e] * cell}" width="{cell}" height="{cell}" '
            f'fill="{_SVG_COLORS[r.label]}"><title>Pi_e={r.Pi_e:g} P_e={r.P_e:g} {r.label.value}</title></rect>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
