import math

import numpy as np
import pytest

from popnet import MeanFieldModel, SigmoidSpec, StiffnessError, integrate, jacobian, rhs

J2 = np.array([[3.0, -2.0], [1.0, 0.0]])
SIGMOIDS = (SigmoidSpec(3.0, 1.0), SigmoidSpec(1.0, 0.0))


def wc2d(ze=-0.1, eps=0.05):
    return MeanFieldModel.wc2d(J2, SIGMOIDS, ze=ze, epsilon=eps)


def wc3d(k=-1.0, gamma=-0.5, eps=0.05):
    return MeanFieldModel.wc3d(J2, SIGMOIDS, k=k, gamma=gamma, epsilon=eps)


def test_rhs_zero_at_origin_without_drive():
    m = MeanFieldModel.wc2d(np.zeros((2, 2)), SIGMOIDS, ze=0.0, epsilon=0.1)
    np.testing.assert_array_equal(rhs(m, np.zeros(2)), np.zeros(2))


def test_rhs_matches_hand_evaluation():
    m = wc2d(ze=0.3, eps=0.02)
    u = np.array([0.2, -0.4])
    c1, c2 = (s.slope_factor for s in SIGMOIDS)
    d1 = (-0.2 + math.erf(c1 * (3.0 * 0.2 - 2.0 * (-0.4) + 0.3))) / 0.02
    d2 = (0.4 + math.erf(c2 * (1.0 * 0.2))) / 1.0
    np.testing.assert_allclose(rhs(m, u), [d1, d2], rtol=1e-14)


def test_general_p2_reproduces_wc2d_bitwise():
    m2 = wc2d(ze=0.17, eps=0.03)
    mg = MeanFieldModel(kind="general", coupling=J2, sigmoids=SIGMOIDS,
                        time_constants=(0.03, 1.0), inputs=(0.17, 0.0),
                        lambdas=(0.0, 0.0))
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = rng.uniform(-1, 1, 2)
        assert np.array_equal(rhs(m2, u), rhs(mg, u))


def test_wc3d_slow_line():
    m = wc3d(k=-1.2, gamma=-0.4)
    y = np.array([0.1, -0.2, 0.5])
    d = rhs(m, y)
    assert d[2] == pytest.approx(-1.2 + (-0.4) * 0.5 - 0.1 + 0.2, abs=1e-15)
    J = jacobian(m, y)
    np.testing.assert_array_equal(J[2], [-1.0, -1.0, -0.4])


def test_jacobian_decoupled_diagonal():
    m = MeanFieldModel.wc2d(np.zeros((2, 2)), SIGMOIDS, ze=0.0, epsilon=0.25)
    J = jacobian(m, np.array([0.3, -0.6]))
    np.testing.assert_allclose(J, np.diag([-4.0, -1.0]), atol=1e-15)


@pytest.mark.parametrize("model", [wc2d(), wc3d()])
def test_jacobian_matches_finite_differences(model):
    rng = np.random.default_rng(7)
    h = 1e-6
    f = model.rhs_callable()
    for _ in range(20):
        y = rng.uniform(-0.8, 0.8, model.dimension)
        J = jacobian(model, y)
        for j in range(model.dimension):
            e = np.zeros(model.dimension)
            e[j] = h
            col = (f(0.0, y + e) - f(0.0, y - e)) / (2 * h)
            np.testing.assert_allclose(J[:, j], col, rtol=1e-5, atol=1e-7)


def test_integrate_linear_decay():
    m = MeanFieldModel(kind="general", coupling=np.zeros((1, 1)),
                       sigmoids=(SigmoidSpec(1.0),), time_constants=(1.0,),
                       inputs=(0.0,), lambdas=(0.0,))
    sol = integrate(m, np.array([1.0]), horizon=10.0, tolerances=(1e-12, 1e-10))
    expected = np.exp(-sol.times)
    assert np.max(np.abs(sol.states[:, 0] - expected)) < 1e-8
    assert sol.steps > 0 and sol.nfev > sol.steps


def test_integrate_tolerance_scaling():
    m = MeanFieldModel(kind="general", coupling=np.zeros((1, 1)),
                       sigmoids=(SigmoidSpec(1.0),), time_constants=(1.0,),
                       inputs=(0.0,), lambdas=(0.0,))
    errs = []
    for tol in (1e-6, 1e-9):
        sol = integrate(m, np.array([1.0]), horizon=5.0, tolerances=(tol, tol))
        errs.append(np.max(np.abs(sol.states[:, 0] - np.exp(-sol.times))))
    # global error tracks the tolerance within a generous factor
    assert errs[1] < errs[0]
    assert errs[0] < 1e-6 * 100


def test_forward_invariance_box():
    m = wc2d(ze=0.0, eps=0.05)
    sol = integrate(m, np.array([0.9, -0.9]), horizon=30.0)
    tail = sol.states[sol.times > 10.0 * 1.0]
    assert np.all(np.abs(tail) <= 1.0 + 1e-6)


def test_limit_cycle_period_converges():
    # relaxation regime: successive periods agree to 0.1%
    m = wc2d(ze=0.0, eps=0.05)
    sol = integrate(m, np.array([0.5, 0.1]), horizon=120.0, output_dt=0.002)
    u2 = sol.states[:, 1]
    t = sol.times
    mask = t > 40.0
    u2m, tm = u2[mask], t[mask]
    peaks = np.where((u2m[1:-1] > u2m[:-2]) & (u2m[1:-1] >= u2m[2:])
                     & (u2m[1:-1] > 0.5 * u2m.max()))[0] + 1
    peak_times = tm[peaks]
    periods = np.diff(peak_times)
    periods = periods[periods > 0.5]
    assert len(periods) >= 3
    assert abs(periods[-1] - periods[-2]) / periods[-1] < 1e-3


def test_frozen_slow_variable_recovers_wc2d():
    z0 = -0.08
    m2 = wc2d(ze=z0, eps=0.05)
    m3 = MeanFieldModel(kind="general", coupling=J2, sigmoids=SIGMOIDS,
                        time_constants=(0.05, 1.0), inputs=(0.0, 0.0),
                        lambdas=(1.0, 0.0), adaptation=(-1.0, -0.5),
                        adaptation_rate=0.0)
    tol = (1e-10, 1e-9)
    s2 = integrate(m2, np.array([0.3, 0.2]), horizon=20.0, tolerances=tol)
    s3 = integrate(m3, np.array([0.3, 0.2, z0]), horizon=20.0, tolerances=tol)
    assert np.max(np.abs(s2.states - s3.states[:, :2])) < 1e-6
    # interpolation weights sum to 1 only up to rounding
    assert np.max(np.abs(s3.states[:, 2] - z0)) < 1e-13


def test_stiffness_error_reported():
    # an artificial blow-up: gain so extreme the controller underflows
    class Bomb:
        dimension = 1

        def rhs_callable(self):
            def f(t, y):
                return np.array([y[0] ** 2 * 1e8 + 1.0])
            return f

    with pytest.raises(StiffnessError) as exc:
        integrate(Bomb(), np.array([1.0]), horizon=10.0)
    assert exc.value.time >= 0.0


def test_dimension_checks():
    m = wc2d()
    with pytest.raises(ValueError):
        rhs(m, np.zeros(3))
    with pytest.raises(ValueError):
        jacobian(m, np.zeros(1))
