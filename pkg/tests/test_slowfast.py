import math

import numpy as np
import pytest

from popnet import DomainError, MeanFieldModel, SigmoidSpec
from popnet.slowfast import (
    ReducedSystem,
    constraint_F,
    critical_manifold_patch,
    dF_du1,
    fold_line,
    folded_singularities,
    fsn2_locus,
    reduced_rhs,
    _desingularized_field,
)

J = np.array([[3.0, -2.0], [1.0, 0.0]])
GAMMA = -6.5


def wc3d(k=-5.613, gamma=GAMMA, s1=2.0, eps=0.005):
    return MeanFieldModel.wc3d(J, (SigmoidSpec(3.0, s1), SigmoidSpec(1.0, 0.0)),
                               k=k, gamma=gamma, epsilon=eps)


@pytest.fixture(scope="module")
def sys2():
    return ReducedSystem(wc3d())


def test_requires_nonzero_cross_coupling():
    Jbad = np.array([[3.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        ReducedSystem(MeanFieldModel.wc3d(Jbad, (SigmoidSpec(3.0, 1.0), SigmoidSpec(1.0)),
                                          k=-1.0, gamma=-1.0, epsilon=0.01))


def test_constraint_identity(sys2):
    from popnet import effective_gain
    rng = np.random.default_rng(5)
    spec1 = sys2.sigmoid1
    for _ in range(1000):
        u1 = rng.uniform(-0.99, 0.99)
        ze = rng.uniform(-2.0, 2.0)
        F = constraint_F(u1, ze, sys2)
        h = J[0, 0] * u1 + J[0, 1] * F + ze
        assert abs(effective_gain(h, spec1) - u1) < 1e-10
    assert constraint_F(0.0, 0.0, sys2) == 0.0


def test_constraint_affine_in_drive(sys2):
    u1 = 0.3
    vals = [constraint_F(u1, z, sys2) for z in (-1.0, 0.0, 1.0, 2.0)]
    diffs = np.diff(vals)
    np.testing.assert_allclose(diffs, -1.0 / J[0, 1], atol=1e-12)


def test_slope_at_origin_closed_form():
    # no noise, unit gain: the inverse-sigmoid slope at 0 is sqrt(pi)/2
    m = MeanFieldModel.wc3d(J, (SigmoidSpec(1.0, 0.0), SigmoidSpec(1.0, 0.0)),
                            k=-1.0, gamma=-1.0, epsilon=0.01)
    s = ReducedSystem(m)
    expected = (math.sqrt(math.pi) / 2.0 - J[0, 0]) / J[0, 1]
    assert dF_du1(0.0, s) == pytest.approx(expected, rel=1e-12)


def test_slope_matches_finite_differences(sys2):
    h = 1e-7
    for u1 in (-0.6, -0.2, 0.1, 0.5):
        fd = (constraint_F(u1 + h, 0.0, sys2) - constraint_F(u1 - h, 0.0, sys2)) / (2 * h)
        assert dF_du1(u1, sys2) == pytest.approx(fd, rel=1e-6)


def test_slope_blows_up_near_saturation(sys2):
    assert abs(dF_du1(0.99995, sys2)) > 1e2
    with pytest.raises(DomainError):
        dF_du1(1.0, sys2)
    with pytest.raises(DomainError):
        constraint_F(-1.0, 0.0, sys2)


def test_fold_line_pair_and_brute_force(sys2):
    roots = fold_line(sys2)
    assert len(roots) == 2
    assert roots[0] == pytest.approx(-roots[1], abs=1e-10)
    # brute-force oracle on a dense grid
    us = np.linspace(-0.999, 0.999, 10**6)
    c = sys2.sigmoid1.slope_factor
    from popnet import erfinv
    w = erfinv(us) / c
    gp = (2.0 / math.sqrt(math.pi)) * c * np.exp(-((c * w) ** 2))
    slope = (1.0 / gp - J[0, 0]) / J[0, 1]
    idx = np.where(np.sign(slope[:-1]) != np.sign(slope[1:]))[0]
    assert idx.size == 2
    for r, i in zip(roots, idx):
        assert abs(r - us[i]) < 1e-5
        assert abs(dF_du1(r, sys2)) < 1e-9


def test_fold_line_empty_when_flat():
    # strong noise flattens the transfer function below the folding threshold
    s = ReducedSystem(wc3d(s1=4.0))
    assert fold_line(s) == []


def test_reduced_rhs_drive_nullcline_sign(sys2):
    k, gamma = -5.613, GAMMA
    u1 = -0.3
    F = constraint_F(u1, 0.0, sys2)
    # solve k + gamma z - u1 - F(u1,z) = 0 for z (F affine in z)
    Fz = -1.0 / J[0, 1]
    z_null = (u1 + F - k) / (gamma - Fz)
    _, below = reduced_rhs(u1, z_null - 0.1, sys2, (k, gamma))
    _, above = reduced_rhs(u1, z_null + 0.1, sys2, (k, gamma))
    assert below * above < 0


def test_folded_singularity_classification(sys2):
    sings = folded_singularities(sys2, (-5.613, GAMMA))
    assert len(sings) >= 1
    s = sings[0]
    assert s.fold_residual < 1e-9
    assert s.flow_residual < 1e-9
    assert s.kind == "folded-node"
    e1, e2 = s.eigenvalues
    assert e1.real * e2.real > 0 and abs(e1.imag) < 1e-9

    # local-flow oracle: integrate the desingularized field itself and
    # eigendecompose the time-t flow-map differential; a node must give two
    # real multipliers on the same side of 1
    field = _desingularized_field(sys2, (-5.613, GAMMA))
    x_star = np.array([s.u1, s.ze])

    def flow(x, t_total=0.5, h=1e-3):
        x = x.copy()
        for _ in range(int(t_total / h)):
            k1 = field(*x)
            k2 = field(*(x + 0.5 * h * k1))
            k3 = field(*(x + 0.5 * h * k2))
            k4 = field(*(x + h * k3))
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return x

    delta = 1e-6
    M = np.column_stack([
        (flow(x_star + delta * np.array([1.0, 0.0])) - x_star) / delta,
        (flow(x_star + delta * np.array([0.0, 1.0])) - x_star) / delta,
    ])
    mult = np.linalg.eigvals(M)
    assert np.all(np.abs(mult.imag) < 1e-6)       # no rotation: not a focus
    assert np.all(mult.real > 1.0) or np.all(mult.real < 1.0)  # node, not saddle
    # multipliers agree with exp(eigenvalue * t) from the classification
    expected = sorted(np.exp(np.array([e1.real, e2.real]) * 0.5))
    np.testing.assert_allclose(sorted(mult.real), expected, rtol=1e-3)


def test_fsn2_candidate_on_curve():
    curve = fsn2_locus(lambda s1: wc3d(s1=s1), k_range=(-20.0, 0.0), sigma1_values=[2.0])
    assert curve.k.size == 1
    assert curve.residuals[0] < 1e-8
    k_star = float(curve.k[0])
    sings = folded_singularities(ReducedSystem(wc3d(k=k_star)), (k_star, GAMMA))
    assert any(s.kind == "fsn2-candidate" for s in sings)


def test_fsn2_curve_residuals_and_gaps():
    grid = [0.8, 1.4, 2.0, 3.5]
    curve = fsn2_locus(lambda s1: wc3d(s1=s1), k_range=(-20.0, 0.0), sigma1_values=grid)
    # folding disappears at strong noise: recorded as a gap, not an error
    assert 3.5 in curve.gaps
    assert np.all(curve.residuals < 1e-8)
    for s1, u1, ze, k in zip(curve.sigma1, curve.u1, curve.ze, curve.k):
        s = ReducedSystem(wc3d(s1=float(s1)))
        r1, r2 = reduced_rhs(float(u1), float(ze), s, (float(k), GAMMA))
        assert abs(r1) < 1e-8 and abs(r2) < 1e-8
        assert abs(dF_du1(float(u1), s)) < 1e-8


def test_hopf_approaches_fold_crossing_monotonically():
    # the full-system Hopf point converges onto the fold-crossing value as
    # the timescale ratio shrinks: monotone over three ratios
    from popnet.experiments import hopf_fsn2_distances
    from popnet.presets import load_preset

    res = hopf_fsn2_distances(load_preset("3d-mmo"), eps_values=(0.05, 0.02, 0.005),
                              sigma1=2.0, k_scan=(-6.6, -3.6))
    d = [res["hopf"][e]["distance"] for e in (0.05, 0.02, 0.005)]
    assert all(x is not None for x in d)
    assert d[0] > d[1] > d[2] > 0


def test_manifold_patch_matches_constraint(sys2):
    u1g = [-0.5, 0.0, 0.5]
    zeg = [-1.0, 0.0]
    patch = critical_manifold_patch(sys2, u1g, zeg)
    for i, u1 in enumerate(u1g):
        for j, ze in enumerate(zeg):
            assert patch[i, j] == constraint_F(u1, ze, sys2)
