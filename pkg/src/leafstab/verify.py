"""Closed-form versus numeric cross-checks, run by ``leafstab verify``.

Each check draws its random inputs from a generator seeded by the caller, so a
report is reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import classifier as cl
from . import stability_core as core
from .manifold import (
    Chart,
    ChartPoint,
    central_jacobian,
    christoffel,
    embed,
    embed_coords,
    metric_matrix,
    pullback_metric,
    transition_gamma_to_p,
)
from .simulator import IntegratorConfig, conservation_report, integrate
from .vehicle_model import (
    REF_PARAMS,
    EquilibriumSpec,
    VehicleParams,
    chart_fields,
    derived_coeffs,
    hamiltonian,
    inertia_matrix,
    invariant_gradients,
    mobility_matrix,
    poisson_tensor,
    poisson_vector_field,
    vector_field,
    velocities,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<30} worst={self.worst:.3e}  tol={self.tol:.1e}"


def random_params(rng: np.random.Generator, symmetric: bool = True) -> VehicleParams:
    m1, I1 = rng.uniform(1.0, 5.0), rng.uniform(0.5, 5.0)
    m2, I2 = (m1, I1) if symmetric else (rng.uniform(1.0, 5.0), rng.uniform(0.5, 5.0))
    m = rng.uniform(0.5, 3.0)
    lmax = np.sqrt(min(m1 * I2, m2 * I1)) / m
    return VehicleParams(m1=m1, m2=m2, m3=rng.uniform(0.5, 5.0), I1=I1, I2=I2,
                         I3=rng.uniform(0.5, 5.0), m=m, l=rng.uniform(0.0, 0.9) * lmax,
                         g=rng.uniform(1.0, 20.0))


def random_equilibrium(rng: np.random.Generator, scale: float = 4.0) -> EquilibriumSpec:
    Pi = rng.uniform(0.2, scale) * rng.choice([-1.0, 1.0])
    return EquilibriumSpec(Pi, rng.uniform(-scale, scale))


def random_gamma_point(rng: np.random.Generator) -> ChartPoint:
    x = rng.uniform(-2.0, 2.0, 7)
    while np.linalg.norm(x[3:6]) < 0.1:
        x[3:6] = rng.uniform(-2.0, 2.0, 3)
    return ChartPoint(Chart.GAMMA, x)


def leaf_constraints(p: VehicleParams, lam: float) -> core.ConstraintSet:
    f = chart_fields(p, lam)
    return core.ConstraintSet(f.constraints(), f.G)


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)))


# -- individual checks, each returning the worst observed error -------------------

def check_block_inverse(rng):
    worst = 0.0
    for _ in range(10):
        p = random_params(rng, symmetric=bool(rng.integers(2)))
        worst = max(worst, _rel(mobility_matrix(p), np.linalg.inv(inertia_matrix(p))))
    return worst


def check_hamiltonian_identity(rng, p=REF_PARAMS):
    worst = 0.0
    for _ in range(20):
        z = rng.standard_normal(9)
        Omega, v = velocities(z, p)
        kinetic = 0.5 * (z[0:3] @ Omega + z[3:6] @ v) - p.mgl * z[8]
        worst = max(worst, abs(hamiltonian(z, p) - kinetic))
    return worst


def check_vector_field_forms(rng):
    worst = 0.0
    for _ in range(100):
        p = random_params(rng, symmetric=False)
        z = rng.standard_normal(9)
        worst = max(worst, float(np.abs(vector_field(z, p) - poisson_vector_field(z, p)).max()))
    return worst


def check_casimir_kernel(rng):
    worst = 0.0
    for _ in range(20):
        z = rng.standard_normal(9)
        worst = max(worst, float(np.abs(poisson_tensor(z) @ invariant_gradients(z)[:3].T).max()))
    return worst


def check_multipliers(rng, p=REF_PARAMS):
    worst = 0.0
    for _ in range(20):
        e, lam = random_equilibrium(rng), rng.uniform(-5, 5)
        numeric = core.lagrange_multipliers(leaf_constraints(p, lam), e.chart_point()).sigma
        worst = max(worst, _rel(numeric, cl.closed_form_multipliers(e, p, lam)))
    return worst


def check_determinant_ratio(rng, p=REF_PARAMS):
    worst = 0.0
    for _ in range(10):
        e, lam = random_equilibrium(rng), rng.uniform(-5, 5)
        cs = leaf_constraints(p, lam)
        x = e.chart_point()
        worst = max(worst, _rel(core.multipliers_by_determinants(cs, x), core.lagrange_multipliers(cs, x).sigma))
    return worst


def check_first_order(rng, p=REF_PARAMS):
    worst = 0.0
    for _ in range(20):
        e, lam = random_equilibrium(rng), rng.uniform(-5, 5)
        worst = max(worst, core.first_order_residual(leaf_constraints(p, lam), e.chart_point()))
    return worst


def check_reduced_hessian(rng, p=REF_PARAMS):
    worst = 0.0
    for _ in range(10):
        e, lam = random_equilibrium(rng), rng.uniform(-5, 5)
        diff = cl.numeric_reduced_hessian(e, p, lam) - cl.closed_form_hessian(e, p, lam)
        worst = max(worst, float(np.abs(diff).max()))
    return worst


def check_theta3(rng, p=REF_PARAMS):
    worst = 0.0
    for _ in range(10):
        e, lam = random_equilibrium(rng), rng.uniform(-5, 5)
        minor = core.leading_minors(cl.numeric_reduced_hessian(e, p, lam))[2]
        q = cl.theta_quadratic(e, p)(lam)
        worst = max(worst, abs(minor - q) / max(abs(minor), 1.0))
    return worst


def check_minor_chain(rng, p=REF_PARAMS):
    a = derived_coeffs(p).a
    worst = 0.0
    for _ in range(10):
        e, lam = random_equilibrium(rng), rng.uniform(-5, 5)
        d1, d2, d3, d4 = core.leading_minors(cl.numeric_reduced_hessian(e, p, lam))
        errs = [abs(d1 - a) / a, abs(d2 - a * a) / a**2]
        if abs(d3) > 1e-6:
            errs.append(abs(d4 * a * a - d3 * d3) / (d3 * d3))
        worst = max(worst, *errs)
    return worst


def check_inequality_equivalence(rng):
    disagreements = 0
    for _ in range(500):
        p, e = random_params(rng), random_equilibrium(rng)
        margin = cl.stability_inequality(e, p).margin
        if abs(margin) <= 1e-9:
            continue
        if cl.lambda_star(e, p).exists_positive != (margin > 0):
            disagreements += 1
    return float(disagreements)


def check_christoffel(rng):
    worst = 0.0
    for _ in range(5):
        e = random_equilibrium(rng)
        expected = np.zeros((7, 7, 7))
        r = e.P_e / (e.P_e**2 + 1)
        expected[3, 3, 6] = expected[3, 6, 3] = expected[4, 4, 6] = expected[4, 6, 4] = r
        expected[6, 5, 6] = expected[6, 6, 5] = 1.0
        worst = max(worst, float(np.abs(christoffel(e.chart_point()).gamma - expected).max()))
    return worst


def check_metric_pullback(rng):
    worst = 0.0
    for _ in range(20):
        x = random_gamma_point(rng)
        # the embedding is bilinear, so central differences carry no truncation error
        J = central_jacobian(lambda y: embed_coords(Chart.GAMMA, y), x.x, 1e-3)
        worst = max(worst, float(np.abs(metric_matrix(x.x) - J.T @ J).max()))
        worst = max(worst, float(np.abs(metric_matrix(x.x) - pullback_metric(x)).max()))
    return worst


def check_chart_compatibility(rng):
    worst = 0.0
    for _ in range(20):
        x = random_gamma_point(rng)
        if x.x[6] == 0.0:
            continue
        y = ChartPoint(Chart.P, transition_gamma_to_p(x.x))
        worst = max(worst, float(np.abs(embed(y).as_vector() - embed(x).as_vector()).max()))
    return worst


def check_reference_labels(rng):
    expected = {(1.0, 2.0): cl.RegionLabel.STABLE_FULL,
                (3.0, 3.0): cl.RegionLabel.STABLE_ON_SUBMANIFOLD,
                (1.0, 3.0): cl.RegionLabel.UNSTABLE}
    wrong = sum(cl.classify(EquilibriumSpec(*k), REF_PARAMS) is not v for k, v in expected.items())
    return float(wrong)


def check_conservation(rng, p=REF_PARAMS):
    z0 = rng.standard_normal(9)
    report = conservation_report(integrate(z0, p, IntegratorConfig(t_final=10.0)), p)
    return max(report[k] for k in ("H", "C1", "C2", "C3", "K"))


CHECKS: List[tuple] = [
    ("coefficients vs block inverse", check_block_inverse, 1e-12),
    ("hamiltonian kinetic identity", check_hamiltonian_identity, 1e-12),
    ("vector field vs Lambda grad H", check_vector_field_forms, 1e-11),
    ("Casimir kernel", check_casimir_kernel, 1e-12),
    ("multipliers closed vs Gramian", check_multipliers, 1e-10),
    ("multipliers det-ratio vs solve", check_determinant_ratio, 1e-10),
    ("first-order condition on E", check_first_order, 1e-9),
    ("reduced Hessian h_ij", check_reduced_hessian, 1e-8),
    ("Theta3 vs numeric minor", check_theta3, 1e-7),
    ("minor chain a, a^2, Theta3^2/a^2", check_minor_chain, 1e-8),
    ("inequality equivalence (count)", check_inequality_equivalence, 0.5),
    ("Christoffel symbols on E", check_christoffel, 1e-6),
    ("metric pullback", check_metric_pullback, 1e-10),
    ("chart compatibility", check_chart_compatibility, 1e-14),
    ("reference labels (count)", check_reference_labels, 0.5),
    ("conservation t=10", check_conservation, 1e-8),
]


def run_checks(seed: int = 0, checks=CHECKS) -> List[CheckResult]:
    results = []
    for i, (name, fn, tol) in enumerate(checks):
        rng = np.random.default_rng([seed, i])
        try:
            worst = float(fn(rng))
        except Exception as exc:  # a crashing check is a failed check
            results.append(CheckResult(f"{name} [{type(exc).__name__}]", float("inf"), tol, False))
            continue
        results.append(CheckResult(name, worst, tol, bool(worst < tol)))
    return results


def format_report(results: List[CheckResult], seed: int) -> str:
    lines = [f"leafstab verify (seed={seed})"]
    lines += [r.line() for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
