import numpy as np
import pytest

from leafstab import classifier as cl
from leafstab.errors import AsymmetricParams
from leafstab.stability_core import leading_minors
from leafstab.vehicle_model import EquilibriumSpec

A = 3 / 5.75
LABEL = cl.RegionLabel


@pytest.mark.parametrize("Pi,P,label", [
    (1.0, 2.0, LABEL.STABLE_FULL),
    (3.0, 3.0, LABEL.STABLE_ON_SUBMANIFOLD),
    (1.0, 3.0, LABEL.UNSTABLE),
])
def test_reference_labels(ref, Pi, P, label):
    assert cl.classify(EquilibriumSpec(Pi, P), ref) is label


def test_reference_margins(ref):
    full, leaf = cl.margins(EquilibriumSpec(3.0, 3.0), ref)
    assert full == pytest.approx(5 - 6, abs=1e-12)
    assert leaf == pytest.approx(5 - (6 - A / 4 * 9), abs=1e-12)
    assert leaf == pytest.approx(0.1739130434782608, abs=1e-12)
    assert cl.stability_inequality(EquilibriumSpec(1.0, 3.0), ref).margin == pytest.approx(-0.8695652173913047,
                                                                                            abs=1e-12)


def test_boundary_label(ref):
    # mgl = 6 - a/4 * Pi^2 exactly at Pi^2 = 4/a
    e = EquilibriumSpec(np.sqrt(4 / A), 3.0)
    assert abs(cl.margins(e, ref)[1]) < 1e-12
    assert cl.classify(e, ref) is LABEL.BOUNDARY


def test_lambda_star_examples(ref):
    assert cl.lambda_star(EquilibriumSpec(3.0, 3.0), ref).exists_positive
    assert not cl.lambda_star(EquilibriumSpec(1.0, 3.0), ref).exists_positive


def test_theta_max_matches_margin(ref, rng):
    for _ in range(20):
        e = EquilibriumSpec(rng.uniform(0.2, 4), rng.uniform(-4, 4))
        assert cl.lambda_star(e, ref).theta_max == pytest.approx(A * A * cl.margins(e, ref)[1], rel=1e-9, abs=1e-12)


def test_vertex_against_grid(ref):
    e = EquilibriumSpec(3.0, 3.0)
    q = cl.theta_quadratic(e, ref)
    lams = np.linspace(-20, 20, 400001)
    star = cl.lambda_star(e, ref)
    assert abs(q(lams).max() - star.theta_max) < 1e-5
    assert q.q2 < 0


def test_theta_quadratic_sign_and_parity(ref, rng):
    for _ in range(10):
        Pi, P, lam = rng.uniform(0.2, 4), rng.uniform(0.1, 4), rng.uniform(-5, 5)
        qp = cl.theta_quadratic(EquilibriumSpec(Pi, P), ref)
        qm = cl.theta_quadratic(EquilibriumSpec(Pi, -P), ref)
        assert qp.q2 < 0
        assert abs(qp(lam) - qm(lam)) < 1e-12


def test_theta_against_numeric_minor(ref):
    e = EquilibriumSpec(1.0, 2.0)
    minor = leading_minors(cl.numeric_reduced_hessian(e, ref, 0.0))[2]
    assert cl.theta_quadratic(e, ref)(0.0) == pytest.approx(minor, rel=1e-7)


def test_closed_form_multipliers(ref):
    np.testing.assert_allclose(cl.closed_form_multipliers(EquilibriumSpec(1.0, 2.0), ref, 0.0), [2, -10, 1])
    e = EquilibriumSpec(2.5, 1.0)
    assert cl.closed_form_multipliers(e, ref, -2.5 / ref.I3)[2] == 0.0


def test_closed_form_hessian_entries(ref, rng):
    h = cl.closed_form_hessian(EquilibriumSpec(1.0, 2.0), ref, 0.0)
    assert h[0, 0] == pytest.approx(A, rel=1e-15)
    assert h[0, 3] == pytest.approx(1 / 5.75, rel=1e-15)
    for _ in range(5):
        e, lam = EquilibriumSpec(rng.uniform(0.2, 3), rng.uniform(-3, 3)), rng.uniform(-3, 3)
        h = cl.closed_form_hessian(e, ref, lam)
        assert h[0, 2] == pytest.approx(-cl.closed_form_multipliers(e, ref, lam)[2], rel=1e-15)
    h = cl.closed_form_hessian(EquilibriumSpec(1.0, 2.0), ref.replace(l=0.0), 0.3)
    assert h[0, 3] == 0 and h[1, 2] == 0


def test_validate_transcription_passes(ref):
    cl.validate_transcription(EquilibriumSpec(3.0, 3.0), ref)


def test_asymmetric_rejected(ref):
    with pytest.raises(AsymmetricParams):
        cl.classify(EquilibriumSpec(1.0, 1.0), ref.replace(m2=5.0))


def test_l_zero_limit_is_continuous(ref):
    e = EquilibriumSpec(2.0, 1.5)
    rhs0 = (1 / ref.m3 - 1 / ref.m1) * 1.5**2 - 4 / (4 * ref.I1)
    assert cl.stability_inequality(e, ref.replace(l=0.0)).rhs == pytest.approx(rhs0, rel=1e-15)
    near = cl.stability_inequality(e, ref.replace(l=1e-6)).rhs
    assert near == pytest.approx(rhs0, abs=1e-9)


def _ref_grid(ref):
    return cl.ScanGrid(0.5, 4.0, 0.5, 0.5, 4.0, 0.5, ref)


def test_scan_reference_grid(ref):
    rows = cl.scan(_ref_grid(ref))
    assert len(rows) == 64
    by_point = {(r.Pi_e, r.P_e): r.label for r in rows}
    assert by_point[(1.0, 2.0)] is LABEL.STABLE_FULL
    assert by_point[(3.0, 3.0)] is LABEL.STABLE_ON_SUBMANIFOLD
    assert by_point[(1.0, 3.0)] is LABEL.UNSTABLE
    for r in rows:
        if (1 / ref.m3 - 1 / ref.m1) * r.P_e**2 < ref.mgl:
            assert r.label is LABEL.STABLE_FULL


def test_scan_empty_and_zero_spin(ref):
    assert cl.scan(cl.ScanGrid(1.0, 0.5, 0.5, 0.5, 4.0, 0.5, ref)) == []
    rows = cl.scan(cl.ScanGrid(-1.0, 1.0, 1.0, 1.0, 1.0, 1.0, ref))
    assert [r.Pi_e for r in rows] == [-1.0, 1.0]


def test_scan_outputs(ref):
    rows = cl.scan(_ref_grid(ref))
    text = cl.scan_csv(rows).splitlines()
    assert text[0] == "Pi_e,P_e,margin_full,margin_leaf,label"
    assert len(text) == 65
    plot = cl.plot_data_csv(rows).splitlines()
    assert plot[0] == "x,y,z"
    assert {line.rsplit(",", 1)[1] for line in plot[1:]} <= {"2", "1", "0", "-1"}
    svg = cl.region_map_svg(rows)
    assert svg.startswith("<svg") and svg.count("<rect") == 64
