import numpy as np
import pytest

from leafstab import stability_core as core
from leafstab.errors import BasisNotTangent, NumericalAmbiguity, RankDeficient
from leafstab.manifold import ChartPoint, ScalarField, induced_metric, linear_combination
from leafstab.vehicle_model import EquilibriumSpec, chart_fields
from leafstab.verify import leaf_constraints, random_equilibrium, random_gamma_point


def coord(i):
    grad = np.zeros(7)
    grad[i] = 1.0
    return ScalarField(lambda x: x[i], grad=lambda x: grad, hess=lambda x: np.zeros((7, 7)), name=f"x{i + 1}")


E12 = EquilibriumSpec(1.0, 2.0)


def test_gramian_single_c3(ref):
    C3 = chart_fields(ref).C3
    x = E12.chart_point()
    G = core.gramian([C3], [C3], x)
    assert G.shape == (1, 1)
    assert G[0, 0] == pytest.approx(induced_metric(x).g_inv[5, 5], rel=1e-12)
    g = np.eye(7)
    g[3:6, 3:6] *= 5
    g[5, 6] = g[6, 5] = 2
    assert G[0, 0] == pytest.approx(np.linalg.inv(g)[5, 5], rel=1e-12)


def test_gramian_euclidean_block_and_transpose(ref, rng):
    x = random_gamma_point(rng)
    np.testing.assert_allclose(core.gramian([coord(0), coord(1)], [coord(0), coord(1)], x), np.eye(2), atol=1e-15)
    f = chart_fields(ref, lam=0.4)
    A = core.gramian([f.C1, f.H], [f.C3, f.C5, f.G], x)
    B = core.gramian([f.C3, f.C5, f.G], [f.C1, f.H], x)
    np.testing.assert_allclose(A, B.T, rtol=1e-12, atol=1e-12)


def test_reference_multipliers(ref):
    sigma = core.lagrange_multipliers(leaf_constraints(ref, 0.0), E12.chart_point()).sigma
    np.testing.assert_allclose(sigma, [2.0, -10.0, 1.0], rtol=1e-10)


def test_multiplier_trivial_cases(ref, rng):
    f = chart_fields(ref)
    x = random_gamma_point(rng)
    cs = core.ConstraintSet([f.C1, f.C3, f.C5], f.C1)
    np.testing.assert_allclose(core.lagrange_multipliers(cs, x).sigma, [1, 0, 0], atol=1e-10)
    cs = core.ConstraintSet([coord(3), coord(4)], coord(0))
    np.testing.assert_allclose(core.lagrange_multipliers(cs, x).sigma, 0, atol=1e-14)


def test_determinant_ratio_agrees(ref, rng):
    for _ in range(5):
        cs = leaf_constraints(ref, rng.uniform(-3, 3))
        x = random_equilibrium(rng).chart_point()
        np.testing.assert_allclose(core.multipliers_by_determinants(cs, x),
                                   core.lagrange_multipliers(cs, x).sigma, rtol=1e-10, atol=1e-10)


def test_rank_deficient(ref):
    f = chart_fields(ref)
    doubled = linear_combination([(2.0, f.C3)], name="2C3")
    cs = core.ConstraintSet([f.C3, doubled], f.H)
    with pytest.raises(RankDeficient):
        core.lagrange_multipliers(cs, E12.chart_point())


def test_first_order_residual(ref, rng):
    for _ in range(5):
        assert core.first_order_residual(leaf_constraints(ref, rng.uniform(-3, 3)),
                                         random_equilibrium(rng).chart_point()) < 1e-9
    f = chart_fields(ref)
    combo = linear_combination([(1.5, f.C1), (-0.7, f.C5)], name="combo")
    x = random_gamma_point(rng)
    assert core.first_order_residual(core.ConstraintSet([f.C1, f.C3, f.C5], combo), x) < 1e-12
    # x1 against constraints living in slots 4-7: the residual is the full metric norm of grad x1
    x = ChartPoint.gamma(0.3, 0.1, 0.2, 0.5, -0.4, 1.0, 0.8)
    cs = core.ConstraintSet([coord(3), coord(6)], coord(0))
    expected = np.sqrt(induced_metric(x).g_inv[0, 0])
    assert core.first_order_residual(cs, x) == pytest.approx(expected, rel=1e-12)


def test_tangent_basis_contains_leaf_directions(ref):
    cs = leaf_constraints(ref, 0.0)
    x = EquilibriumSpec(3.0, 3.0).chart_point()
    B = core.tangent_basis(cs, x)
    g = induced_metric(x).g
    assert B.shape == (4, 7)
    np.testing.assert_allclose(B @ g @ B.T, np.eye(4), atol=1e-12)
    # the span is g-orthonormal, so g-projection onto it reproduces w
    for i in (0, 1, 3, 4):
        w = np.eye(7)[i]
        proj = B.T @ (B @ g @ w)
        assert np.abs(proj - w).max() < 1e-10
    D = np.array([c.differential(x) for c in cs.constraints])
    assert np.abs(B @ D.T).max() < 1e-10


def test_tangent_basis_without_constraints(ref, rng):
    x = random_gamma_point(rng)
    B = core.tangent_basis(core.ConstraintSet([], chart_fields(ref).H), x)
    g = induced_metric(x).g
    np.testing.assert_allclose(B @ g @ B.T, np.eye(7), atol=1e-10)


def test_projected_hessian_reference_entries(ref):
    ph = core.projected_hessian(leaf_constraints(ref, 0.0), E12.chart_point(), np.eye(7)[[0, 1, 3, 4]])
    m = ph.matrix
    assert m[0, 0] == pytest.approx(3 / 5.75, rel=1e-8)
    assert m[0, 3] == pytest.approx(1 / 5.75, rel=1e-8)
    assert abs(m[0, 1]) < 1e-9
    assert abs(m[2, 3]) < 1e-9
    np.testing.assert_array_equal(m, m.T)


def test_projected_hessian_rejects_off_leaf_basis(ref):
    with pytest.raises(BasisNotTangent):
        core.projected_hessian(leaf_constraints(ref, 0.0), E12.chart_point(), np.eye(7)[[0, 5]])


def test_projected_hessian_independent_of_basis(ref):
    cs = leaf_constraints(ref, 0.5)
    x = EquilibriumSpec(3.0, 3.0).chart_point()
    auto = core.projected_hessian(cs, x).matrix
    fixed = core.projected_hessian(cs, x, np.eye(7)[[0, 1, 3, 4]]).matrix
    # the fixed basis is orthogonal but not normalised; compare spectra of the g-normalised form
    g = induced_metric(x).g
    W = np.eye(7)[[0, 1, 3, 4]]
    gram = W @ g @ W.T
    Linv = np.linalg.inv(np.linalg.cholesky(gram))
    np.testing.assert_allclose(np.linalg.eigvalsh(auto), np.linalg.eigvalsh(Linv @ fixed @ Linv.T), atol=1e-8)


def test_leading_minors_and_definiteness():
    assert core.leading_minors(np.eye(4)) == [1, 1, 1, 1]
    assert core.definiteness(np.eye(4)).positive_definite
    r = core.definiteness(np.diag([1.0, -1.0]))
    assert r.leading_minors[1] == -1
    assert not r.positive_definite
    m = np.array([[0.0, 1.0], [1.0, 2.0]])
    assert core.leading_minors(m) == pytest.approx([0.0, -1.0])


def test_definiteness_ambiguity():
    with pytest.raises(NumericalAmbiguity):
        core.definiteness(np.diag([10.0, 5e-13]))  # minor 5e-12 passes, eigenvalue fails


def test_reference_minor_chain(ref):
    from leafstab.classifier import lambda_star
    e = EquilibriumSpec(3.0, 3.0)
    lam = lambda_star(e, ref).lam
    m = core.projected_hessian(leaf_constraints(ref, lam), e.chart_point(), np.eye(7)[[0, 1, 3, 4]]).matrix
    d1, d2, d3, d4 = core.leading_minors(m)
    a = 3 / 5.75
    assert d1 == pytest.approx(a, rel=1e-8)
    assert d2 == pytest.approx(a * a, rel=1e-8)
    assert d4 == pytest.approx(d3 * d3 / (a * a), rel=1e-8)
    assert core.definiteness(m).positive_definite
