"""Constrained second-order stability test on a Riemannian chart.

Given conserved constraint fields F_1..F_q and a conserved objective G on the
submanifold, an equilibrium is certified when

* grad G lies in the span of the grad F_s (first-order condition), with
  multipliers sigma obtained from Gramian matrices of the gradients, and
* the covariant Hessian of G - sum(sigma_s F_s), restricted to the common
  null space of the dF_s, is positive definite.

All gradients and Hessians use the induced metric of ``manifold``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BasisNotTangent, NumericalAmbiguity, RankDeficient
from .manifold import (
    GRAD_STEP,
    HESS_STEP,
    METRIC_STEP,
    ChartPoint,
    ScalarField,
    christoffel,
    induced_metric,
    riemannian_hessian,
)


@dataclass(frozen=True)
class Tolerances:
    regularity: float = 1e-8  # smallest singular value of the gradient matrix
    gram_det: float = 1e-12
    tangent: float = 1e-8
    definite: float = 1e-12
    symmetry: float = 1e-9
    fd_metric: float = METRIC_STEP
    fd_grad: float = GRAD_STEP
    fd_hess: float = HESS_STEP


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class ConstraintSet:
    constraints: Sequence[ScalarField]
    objective: ScalarField


@dataclass(frozen=True)
class MultiplierVector:
    sigma: np.ndarray
    residual: float


@dataclass(frozen=True)
class ProjectedHessian:
    basis: np.ndarray  # rows are tangent vectors
    matrix: np.ndarray


@dataclass(frozen=True)
class DefinitenessReport:
    positive_definite: bool
    leading_minors: list = field(default_factory=list)
    min_eigenvalue: float = 0.0


def _differentials(fields, p, tol: Tolerances = DEFAULT_TOL):
    if not fields:
        return np.zeros((0, 7))
    return np.array([f.differential(p, tol.fd_grad) for f in fields])


def gramian(g_list, f_list, p: ChartPoint, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Matrix with entry (r, s) = <grad g_s, grad f_r>."""
    g_inv = induced_metric(p).g_inv
    dg = _differentials(g_list, p, tol)
    df = _differentials(f_list, p, tol)
    return df @ g_inv @ dg.T


def check_regularity(cs: ConstraintSet, p: ChartPoint, tol: Tolerances = DEFAULT_TOL):
    """Raise RankDeficient unless the constraint gradients are independent."""
    if not cs.constraints:
        return
    metric = induced_metric(p)
    grads = metric.g_inv @ _differentials(cs.constraints, p, tol).T
    # singular values taken in a metric-orthonormal frame
    L = np.linalg.cholesky(metric.g)
    smin = np.linalg.svd(L.T @ grads, compute_uv=False).min()
    if smin <= tol.regularity:
        raise RankDeficient(f"constraint gradients are dependent (smallest singular value {smin:.3e})")


def lagrange_multipliers(cs: ConstraintSet, p: ChartPoint, tol: Tolerances = DEFAULT_TOL) -> MultiplierVector:
    """Multipliers from the Gramian normal system."""
    check_regularity(cs, p, tol)
    F = list(cs.constraints)
    if not F:
        return MultiplierVector(np.zeros(0), 0.0)
    S = gramian(F, F, p, tol)
    if abs(np.linalg.det(S)) < tol.gram_det:
        raise RankDeficient("Gramian of the constraints is singular")
    rhs = gramian([cs.objective], F, p, tol)[:, 0]
    sigma = np.linalg.solve(S, rhs)
    return MultiplierVector(sigma, float(np.linalg.norm(S @ sigma - rhs)))


def multipliers_by_determinants(cs: ConstraintSet, p: ChartPoint, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Cramer-rule form: replace the s-th constraint by the objective in the lower list."""
    F = list(cs.constraints)
    denom = np.linalg.det(gramian(F, F, p, tol))
    if abs(denom) < tol.gram_det:
        raise RankDeficient("Gramian of the constraints is singular")
    sigma = np.empty(len(F))
    for s in range(len(F)):
        lower = F[:s] + [cs.objective] + F[s + 1:]
        sigma[s] = np.linalg.det(gramian(lower, F, p, tol)) / denom
    return sigma


def first_order_residual(cs: ConstraintSet, p: ChartPoint, tol: Tolerances = DEFAULT_TOL) -> float:
    """Metric norm of grad G - sum(sigma_s grad F_s)."""
    sigma = lagrange_multipliers(cs, p, tol).sigma
    dr = cs.objective.differential(p, tol.fd_grad) - sigma @ _differentials(cs.constraints, p, tol)
    g_inv = induced_metric(p).g_inv
    return float(np.sqrt(max(dr @ g_inv @ dr, 0.0)))


def _metric_gram_schmidt(vectors, g):
    basis = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for _ in range(2):
            for b in basis:
                w = w - (b @ g @ w) * b
        nrm = np.sqrt(w @ g @ w)
        if nrm > 1e-12:
            basis.append(w / nrm)
    return np.array(basis).reshape(len(basis), g.shape[0])


def tangent_basis(cs: ConstraintSet, p: ChartPoint, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Metric-orthonormal basis (rows) of the common kernel of the dF_s."""
    g = induced_metric(p).g
    n = g.shape[0]
    if not cs.constraints:
        return _metric_gram_schmidt(np.eye(n), g)
    check_regularity(cs, p, tol)
    D = _differentials(cs.constraints, p, tol)
    _, _, Vt = np.linalg.svd(D)
    kernel = Vt[D.shape[0]:]
    return _metric_gram_schmidt(kernel, g)


def lagrangian_hessian(cs: ConstraintSet, p: ChartPoint, sigma: Optional[np.ndarray] = None,
                       tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Full 7x7 covariant Hessian of G - sum(sigma_s F_s)."""
    if sigma is None:
        sigma = lagrange_multipliers(cs, p, tol).sigma
    conn = christoffel(p, tol.fd_metric)
    steps = dict(h_grad=tol.fd_grad, h_hess=tol.fd_hess)
    L = riemannian_hessian(cs.objective, p, conn, **steps)
    for s, f in zip(sigma, cs.constraints):
        L = L - s * riemannian_hessian(f, p, conn, **steps)
    return L


def projected_hessian(cs: ConstraintSet, p: ChartPoint, basis=None,
                      tol: Tolerances = DEFAULT_TOL) -> ProjectedHessian:
    sigma = lagrange_multipliers(cs, p, tol).sigma
    if basis is None:
        basis = tangent_basis(cs, p, tol)
    else:
        basis = np.atleast_2d(np.asarray(basis, dtype=float))
        D = _differentials(cs.constraints, p, tol)
        if D.size:
            worst = np.abs(basis @ D.T).max()
            if worst > tol.tangent:
                raise BasisNotTangent(f"supplied vector leaves the leaf (|dF(v)| = {worst:.3e})")
    L = lagrangian_hessian(cs, p, sigma, tol)
    M = basis @ L @ basis.T
    return ProjectedHessian(basis, 0.5 * (M + M.T))


def leading_minors(m: np.ndarray) -> list:
    """Leading principal minors from Gaussian elimination without pivoting."""
    m = np.asarray(m, dtype=float)
    U = m.copy()
    n = U.shape[0]
    minors = []
    det = 1.0
    for k in range(n):
        pivot = U[k, k]
        if pivot == 0.0:
            # elimination breaks down; finish with explicit determinants
            minors.extend(float(np.linalg.det(m[:j, :j])) for j in range(k + 1, n + 1))
            return minors
        det *= pivot
        minors.append(float(det))
        U[k + 1:, k:] -= np.outer(U[k + 1:, k] / pivot, U[k, k:])
    return minors


def definiteness(m, tol: Tolerances = DEFAULT_TOL) -> DefinitenessReport:
    """Sylvester's criterion cross-checked against the smallest eigenvalue."""
    m = np.asarray(m, dtype=float)
    if m.size and np.abs(m - m.T).max() >= tol.symmetry:
        raise ValueError("matrix is not symmetric")
    m = 0.5 * (m + m.T)
    minors = leading_minors(m)
    min_eig = float(np.linalg.eigvalsh(m).min()) if m.size else np.inf
    by_minors = all(d > tol.definite for d in minors)
    by_eig = min_eig > tol.definite
    if by_minors != by_eig:
        raise NumericalAmbiguity(
            f"Sylvester minors say {by_minors}, eigenvalues say {by_eig} (min eigenvalue {min_eig:.3e})"
        )
    return DefinitenessReport(by_minors, minors, min_eig)
