"""rolling のユニットテスト

運動方程式の積分、閉形式のローリング、Lie 群と対称対の特殊ケース、
滑りなし・ねじれなし条件の検証のテスト
"""

import numpy as np
import pytest

from lie import Ad, ad_operator, group_exp
from matcore import NonFiniteError, mat_exp
from reductive import AlphaMap, alpha_operator
from rolling import (
    ConstantControl,
    ControlDomainError,
    RollingState,
    RollingTrajectory,
    SampledControl,
    SpecialControl,
    StateInvariantViolatedError,
    closed_form_can1,
    closed_form_can2,
    closed_form_trajectory,
    compare_trajectories,
    horizontality_residual,
    integrate_rolling,
    kinematic_rhs,
    lie_group_rolling,
    symmetric_pair_rolling,
    verify_no_slip,
    verify_no_twist,
)
from spaces import make_group_as_reductive, make_so_n, make_sphere, make_stiefel, make_symmetric_pair

CAN1 = AlphaMap.canonical_first()
CAN2 = AlphaMap.canonical_second()


@pytest.fixture(scope="module")
def sphere():
    return make_sphere(2).space


@pytest.fixture(scope="module")
def stiefel():
    return make_stiefel(4, 2, 1.0).space


@pytest.fixture(scope="module")
def so3_space():
    return make_group_as_reductive(make_so_n(3))


def _generic_xi(space, norm: float = 1.5):
    rng = np.random.default_rng(21)
    c = rng.standard_normal(space.group.dim)
    xi = space.group.element(norm * c / np.linalg.norm(c))
    assert np.linalg.norm(space.to_h(xi.coords)) > 0.1
    return xi


def _unit(rng: np.random.Generator, dim: int, norm: float) -> np.ndarray:
    c = rng.standard_normal(dim)
    return norm * c / np.linalg.norm(c)


def _smooth_sampled_control(dim: int, seed: int) -> SampledControl:
    rng = np.random.default_rng(seed)
    offset, slope, wave = _unit(rng, dim, 0.5), _unit(rng, dim, 0.3), _unit(rng, dim, 0.3)
    times = np.linspace(0.0, 1.0, 101)
    values = offset + np.outer(times, slope) + np.outer(np.sin(np.pi * times), wave)
    return SampledControl(times, values)


def _control(space, kind: str, alpha):
    rng = np.random.default_rng(31)
    if kind == "constant":
        return ConstantControl(_unit(rng, space.dim_m, 0.8))
    if kind == "sampled":
        return _smooth_sampled_control(space.dim_m, 32)
    return SpecialControl(space, space.group.element(_unit(rng, space.group.dim, 0.8)), alpha)


ACCEPTANCE_SPACES = {
    "SO(3)/{e}": lambda: make_group_as_reductive(make_so_n(3)),
    "St(3,1)": lambda: make_stiefel(3, 1, 1.0).space,
    "St(4,2)": lambda: make_stiefel(4, 2, 1.0).space,
}


class TestControls:
    """制御曲線のテスト"""

    def test_constant_control_domain(self):
        """定義域の外で ControlDomainError が発生すること"""
        u = ConstantControl(np.array([1.0, 2.0]), t1=2.0)
        np.testing.assert_array_equal(u(2.0), [1.0, 2.0])
        with pytest.raises(ControlDomainError):
            u(2.5)

    def test_empty_domain_rejected(self):
        """空の定義域が拒否されること"""
        with pytest.raises(ValueError, match="empty"):
            ConstantControl(np.zeros(2), t1=0.0)

    def test_sampled_control_interpolates_linearly(self):
        """サンプル間が線形補間されること"""
        u = SampledControl(np.array([0.0, 1.0, 2.0]), np.array([[0.0, 1.0], [2.0, 1.0], [2.0, 3.0]]))
        np.testing.assert_allclose(u(0.5), [1.0, 1.0])
        np.testing.assert_allclose(u(1.5), [2.0, 2.0])
        assert (u.t0, u.t1) == (0.0, 2.0)

    @pytest.mark.parametrize(
        ("times", "values", "message"),
        [
            ([0.0], [[1.0]], "two sample times"),
            ([0.0, 0.0], [[1.0], [1.0]], "increasing"),
            ([0.0, 1.0], [[1.0]], "sample rows"),
            ([0.0, 1.0], [[1.0], [np.nan]], "finite"),
        ],
    )
    def test_sampled_control_validation(self, times, values, message):
        """不正なサンプルが拒否されること"""
        with pytest.raises(ValueError, match=message):
            SampledControl(np.array(times), np.array(values))

    def test_special_control_needs_canonical_alpha(self, sphere):
        """カスタム α で特殊制御を作ると ValueError が発生すること"""
        xi = sphere.group.element(np.ones(sphere.group.dim))
        with pytest.raises(ValueError, match="canonical"):
            SpecialControl(sphere, xi, AlphaMap.custom(np.zeros((2, 2, 2))))


class TestRollingState:
    """RollingState の不変条件のテスト"""

    def test_singular_s_rejected(self, sphere):
        """特異な S で StateInvariantViolatedError が発生すること"""
        with pytest.raises(StateInvariantViolatedError):
            RollingState(0.0, np.zeros(2), sphere.group.identity(), np.diag([1.0, 1e-10]))

    def test_s_shape_checked(self, sphere):
        """S の次元が m と一致しない場合に ValueError が発生すること"""
        with pytest.raises(ValueError, match="2x2"):
            RollingState(0.0, np.zeros(2), sphere.group.identity(), np.eye(3))

    def test_trajectory_needs_increasing_times(self, sphere):
        """時刻が増加しない軌道が拒否されること"""
        state = RollingState.initial(sphere)
        with pytest.raises(ValueError, match="increasing"):
            RollingTrajectory.from_states(sphere, [state, state])


class TestKinematicRhs:
    """kinematic_rhs のテスト"""

    def test_zero_control(self, stiefel):
        """u = 0 で全成分が0になること"""
        state = RollingState.initial(stiefel)
        v_dot, g_dot, s_dot = kinematic_rhs(CAN1, stiefel, 0.0, state, ConstantControl(np.zeros(5)))
        assert not np.any(v_dot) and not np.any(g_dot) and not np.any(s_dot)

    def test_second_kind_keeps_s(self, stiefel):
        """第二種標準微分で S' = 0 となること"""
        rng = np.random.default_rng(1)
        state = RollingState(0.3, rng.standard_normal(5), stiefel.group.identity(), np.eye(5))
        _, _, s_dot = kinematic_rhs(CAN2, stiefel, 0.3, state, ConstantControl(rng.standard_normal(5)))
        np.testing.assert_array_equal(s_dot, 0.0)

    def test_first_kind_at_initial_state(self, so3_space):
        """初期状態で g' = mat(X0), S' = -ad_X0 / 2 となること"""
        x0 = np.array([0.4, -0.2, 0.9])
        state = RollingState.initial(so3_space)
        v_dot, g_dot, s_dot = kinematic_rhs(CAN1, so3_space, 0.0, state, ConstantControl(x0))
        np.testing.assert_array_equal(v_dot, x0)
        np.testing.assert_allclose(g_dot, so3_space.group.matrix(x0), atol=1e-15)
        np.testing.assert_allclose(s_dot, -0.5 * ad_operator(so3_space.group.element(x0)), atol=1e-15)

    def test_non_finite_control_raises(self, sphere):
        """制御が有限でない場合に NonFiniteError が発生すること"""
        with pytest.raises(NonFiniteError):
            kinematic_rhs(CAN1, sphere, 0.0, RollingState.initial(sphere), ConstantControl(np.array([np.inf, 0.0])))


class TestIntegrateRolling:
    """integrate_rolling のテスト"""

    def test_zero_control_is_constant(self, stiefel):
        """u = 0 で軌道が初期状態のまま変わらないこと"""
        traj = integrate_rolling(CAN1, stiefel, ConstantControl(np.zeros(5)), steps=10)
        assert len(traj.states) == 11
        for state in traj.states:
            np.testing.assert_allclose(state.v, 0.0)
            np.testing.assert_allclose(state.g.mat, np.eye(6), atol=1e-15)
            np.testing.assert_allclose(state.S, np.eye(5), atol=1e-15)

    def test_symmetric_space_keeps_s(self):
        """対称空間では任意の制御で S が単位行列のままであること"""
        space = make_symmetric_pair(make_so_n(3))
        u = SampledControl(np.array([0.0, 0.5, 1.0]), np.array([[1.0, 0.0, 0.5], [0.0, -1.0, 1.0], [0.3, 0.2, 0.1]]))
        traj = integrate_rolling(CAN1, space, u, steps=100)
        for state in traj.states:
            np.testing.assert_allclose(state.S, np.eye(3), atol=1e-10)

    def test_sphere_matches_closed_form(self, sphere):
        """S^2 で一定制御の展開曲線が閉形式と t=1 で1e-6以内に一致すること"""
        z = np.array([0.8, -0.6])
        traj = integrate_rolling(CAN1, sphere, ConstantControl(z), steps=1000)
        closed = closed_form_can1(sphere, sphere.m_element(z), 1.0)
        np.testing.assert_allclose(
            sphere.into_ambient(traj.final.g.mat), sphere.into_ambient(closed.g.mat), atol=1e-6
        )
        np.testing.assert_allclose(traj.final.v, closed.v, atol=1e-6)

    def test_special_control_reproduces_closed_form(self, stiefel):
        """特殊制御の積分が閉形式の状態を1e-6(1+|ξ|)以内で再現すること"""
        xi = _generic_xi(stiefel)
        traj = integrate_rolling(CAN1, stiefel, SpecialControl(stiefel, xi, CAN1), steps=1000)
        closed = closed_form_can1(stiefel, xi, 1.0)
        tol = 1e-6 * (1 + xi.norm())
        np.testing.assert_allclose(traj.final.v, closed.v, atol=tol)
        np.testing.assert_allclose(traj.final.g.mat, closed.g.mat, atol=tol)
        np.testing.assert_allclose(traj.final.S, closed.S, atol=tol)

    def test_metric_drift_is_recorded(self, stiefel):
        """計量的な α で補正前後の S のずれが記録され閾値以下であること"""
        xi = _generic_xi(stiefel)
        traj = integrate_rolling(CAN1, stiefel, SpecialControl(stiefel, xi, CAN1), steps=1000)
        diagnostics = traj.diagnostics
        assert diagnostics.metric
        assert diagnostics.s_drift <= 1e-8
        assert diagnostics.s_drift_raw <= 1e-5
        assert diagnostics.g_drift <= 1e-9
        for s in traj.S:
            np.testing.assert_allclose(s.T @ stiefel.m_gram @ s, stiefel.m_gram, atol=1e-8)

    def test_fourth_order_convergence(self, so3_space):
        """ステップ数を10倍にすると誤差が250分の1以下になること"""
        xi = so3_space.group.element(np.array([1.2, -0.8, 1.3]))
        closed = closed_form_can1(so3_space, xi, 1.0)
        errors = []
        for steps in (10, 100):
            traj = integrate_rolling(CAN1, so3_space, ConstantControl(xi.coords), steps=steps)
            errors.append(np.linalg.norm(traj.final.g.mat - closed.g.mat) + np.linalg.norm(traj.final.S - closed.S))
        assert errors[0] / errors[1] >= 250

    def test_horizontality(self, stiefel):
        """積分した軌道で g^-1 g' の h 成分が1e-7以下であること"""
        direction = np.array([1.0, 0.0, -1.0, 0.5, 0.0])
        u = ConstantControl(0.5 * direction / np.linalg.norm(direction))
        traj = integrate_rolling(CAN1, stiefel, u, steps=1000)
        assert horizontality_residual(traj) <= 1e-7

    def test_det_s_keeps_its_sign(self):
        """軌道に沿って det S の符号が変わらないこと"""
        space = make_stiefel(4, 2, 0.5).space
        traj = integrate_rolling(CAN1, space, _smooth_sampled_control(space.dim_m, 33), steps=200)
        dets = np.linalg.det(traj.S)
        assert dets[0] == pytest.approx(1.0)
        assert np.all(dets > 0.0)

    def test_blow_up_raises(self, so3_space):
        """巨大な制御で NonFiniteError が発生すること"""
        with pytest.raises(NonFiniteError):
            integrate_rolling(CAN1, so3_space, ConstantControl(np.array([1e300, 0.0, 0.0])), steps=4)

    def test_invalid_steps(self, sphere):
        """ステップ数が1未満の場合に ValueError が発生すること"""
        with pytest.raises(ValueError, match="steps"):
            integrate_rolling(CAN1, sphere, ConstantControl(np.ones(2)), steps=0)


class TestClosedForms:
    """closed_form_can1 と closed_form_can2 のテスト"""

    def test_time_zero_is_initial_state(self, stiefel):
        """t = 0 で (0, e, id) となること"""
        xi = _generic_xi(stiefel)
        for closed_form in (closed_form_can1, closed_form_can2):
            state = closed_form(stiefel, xi, 0.0)
            np.testing.assert_array_equal(state.v, 0.0)
            np.testing.assert_array_equal(state.g.mat, np.eye(6))
            np.testing.assert_array_equal(state.S, np.eye(5))

    def test_negative_time_rejected(self, stiefel):
        """負の時刻で ValueError が発生すること"""
        with pytest.raises(ValueError, match="t >= 0"):
            closed_form_can1(stiefel, _generic_xi(stiefel), -1.0)

    def test_first_kind_for_xi_in_m(self, so3_space):
        """ξ ∈ m で g = exp(tξ), S = exp(-t ad_ξ / 2), v = tξ となること"""
        xi = so3_space.group.element(np.array([0.3, 1.1, -0.4]))
        t = 0.7
        state = closed_form_can1(so3_space, xi, t)
        np.testing.assert_allclose(state.g.mat, mat_exp(t * xi.mat), atol=1e-14)
        np.testing.assert_allclose(state.S, mat_exp(-0.5 * t * ad_operator(xi)), atol=1e-14)
        np.testing.assert_allclose(state.v, t * xi.coords, atol=1e-12)

    def test_second_kind_for_xi_in_m(self, sphere):
        """ξ ∈ m で第二種の S が単位行列で v = tξ_m となること"""
        z = np.array([0.5, 1.5])
        state = closed_form_can2(sphere, sphere.m_element(z), 2.0)
        np.testing.assert_allclose(state.S, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(state.v, 2.0 * z, atol=1e-12)
        np.testing.assert_allclose(state.g.mat, mat_exp(2.0 * sphere.m_matrix(z)), atol=1e-13)

    def test_first_kind_s_solves_its_ode(self, stiefel):
        """閉形式の S が S' = -α(S u, .) S を差分で1e-6以内で満たすこと"""
        xi = _generic_xi(stiefel)
        u = SpecialControl(stiefel, xi, CAN1, t1=2.0)
        h = 1e-5
        for t in (0.3, 1.0, 1.7):
            s_minus = closed_form_can1(stiefel, xi, t - h).S
            s_plus = closed_form_can1(stiefel, xi, t + h).S
            s = closed_form_can1(stiefel, xi, t).S
            s_dot = (s_plus - s_minus) / (2 * h)
            residual = s_dot + alpha_operator(CAN1, s @ u(t), stiefel) @ s
            assert np.linalg.norm(residual) <= 1e-6

    @pytest.mark.parametrize("alpha_param", [0.5, 1.0, 3.0])
    def test_first_kind_s_ode_for_random_generators(self, alpha_param):
        """ランダムな ξ (|ξ| <= 2) と t で閉形式の S が S' = -α(S u, .) S を1e-6以内で満たすこと"""
        space = make_stiefel(4, 2, alpha_param).space
        rng = np.random.default_rng(int(10 * alpha_param))
        h = 1e-5
        for _ in range(20):
            xi = space.group.element(_unit(rng, space.group.dim, rng.uniform(0.0, 2.0)))
            u = SpecialControl(space, xi, CAN1)
            for t in rng.uniform(0.01, 0.99, size=3):
                s_minus = closed_form_can1(space, xi, t - h).S
                s_plus = closed_form_can1(space, xi, t + h).S
                s = closed_form_can1(space, xi, t).S
                residual = (s_plus - s_minus) / (2 * h) + alpha_operator(CAN1, s @ u(t), space) @ s
                assert np.linalg.norm(residual) <= 1e-6

    def test_second_kind_g_is_horizontal_lift(self, stiefel):
        """第二種の g が g' = g Ad_{exp(tξ_h)} ξ_m を差分で1e-6以内で満たすこと"""
        xi = _generic_xi(stiefel)
        xi_h = stiefel.group.element(stiefel.pr_h @ xi.coords)
        xi_m = stiefel.group.element(stiefel.pr_m @ xi.coords)
        h = 1e-5
        for t in (0.5, 1.5):
            g_dot = (closed_form_can2(stiefel, xi, t + h).g.mat - closed_form_can2(stiefel, xi, t - h).g.mat) / (2 * h)
            g = closed_form_can2(stiefel, xi, t).g.mat
            expected = g @ Ad(group_exp(t * xi_h), xi_m).mat
            assert np.linalg.norm(g_dot - expected) <= 1e-6

    def test_development_is_projected_subgroup(self, stiefel):
        """展開曲線が pr(exp(tξ)) と1e-9以内で一致すること"""
        xi = _generic_xi(stiefel)
        for t in (0.4, 1.0):
            g = closed_form_can1(stiefel, xi, t).g.mat
            np.testing.assert_allclose(stiefel.into_ambient(g), stiefel.into_ambient(mat_exp(t * xi.mat)), atol=1e-9)

    def test_trajectory_matches_pointwise_closed_form(self, stiefel):
        """格子上の閉形式軌道が各時刻の閉形式と一致すること"""
        xi = _generic_xi(stiefel)
        traj = closed_form_trajectory(stiefel, xi, CAN1, 1.0, 20)
        state = closed_form_can1(stiefel, xi, 1.0, quad_panels=80)
        np.testing.assert_allclose(traj.final.v, state.v, atol=1e-12)
        np.testing.assert_allclose(traj.final.S, state.S, atol=1e-12)
        assert traj.development is not None
        assert traj.development.shape == (21, 4, 2)


class TestLieGroupRolling:
    """lie_group_rolling のテスト"""

    def test_zero_control(self, so3_space):
        """u = 0 で g = g0, S = id のままであること"""
        g0 = group_exp(so3_space.group.element(np.array([0.1, 0.2, 0.3])))
        traj = lie_group_rolling(so3_space, ConstantControl(np.zeros(3)), g0=g0, steps=10)
        for state in traj.states:
            np.testing.assert_allclose(state.g.mat, g0.mat, atol=1e-14)
            np.testing.assert_allclose(state.S, np.eye(3), atol=1e-14)

    def test_constant_control_gives_one_parameter_subgroup(self, so3_space):
        """一定制御 X0 で g(t) = g0 exp(t X0) となること"""
        group = so3_space.group
        g0 = group_exp(group.element(np.array([-0.5, 0.2, 0.7])))
        x0 = np.array([0.6, 0.9, -0.3])
        traj = lie_group_rolling(so3_space, ConstantControl(x0), g0=g0, steps=200)
        for state in traj.states:
            np.testing.assert_allclose(state.g.mat, g0.mat @ mat_exp(state.t * group.matrix(x0)), atol=1e-8)

    def test_agrees_with_kinematic_integration(self, so3_space):
        """運動方程式の積分と一致すること"""
        u = SampledControl(np.array([0.0, 1.0]), np.array([[1.0, 0.0, 0.5], [0.0, 1.0, -0.5]]))
        a = lie_group_rolling(so3_space, u, steps=500)
        b = integrate_rolling(CAN1, so3_space, u, steps=500)
        assert compare_trajectories(a, b).deviation <= 1e-8

    def test_satisfies_kinematic_equation(self, so3_space):
        """差分で運動方程式を1e-6以内で満たすこと"""
        u = ConstantControl(np.array([0.3, -0.8, 0.5]))
        traj = lie_group_rolling(so3_space, u, steps=1000)
        h = traj.times[1] - traj.times[0]
        for i in (100, 500, 900):
            v_dot, g_dot, s_dot = kinematic_rhs(CAN1, so3_space, traj.times[i], traj.states[i], u)
            assert np.linalg.norm((traj.v[i + 1] - traj.v[i - 1]) / (2 * h) - v_dot) <= 1e-6
            assert np.linalg.norm((traj.g[i + 1] - traj.g[i - 1]) / (2 * h) - g_dot) <= 1e-6
            assert np.linalg.norm((traj.S[i + 1] - traj.S[i - 1]) / (2 * h) - s_dot) <= 1e-6

    @pytest.mark.parametrize("seed", [40, 41, 42])
    def test_sampled_control_satisfies_kinematic_equation(self, so3_space, seed):
        """滑らかなサンプル制御でも差分で運動方程式を1e-6以内で満たすこと"""
        u = _smooth_sampled_control(3, seed)
        traj = lie_group_rolling(so3_space, u, steps=1000)
        h = traj.times[1] - traj.times[0]
        # sample knots sit on every tenth grid point; the stencils stay inside one linear piece
        for i in (105, 455, 905):
            v_dot, g_dot, s_dot = kinematic_rhs(CAN1, so3_space, traj.times[i], traj.states[i], u)
            assert np.linalg.norm((traj.v[i + 1] - traj.v[i - 1]) / (2 * h) - v_dot) <= 1e-6
            assert np.linalg.norm((traj.g[i + 1] - traj.g[i - 1]) / (2 * h) - g_dot) <= 1e-6
            assert np.linalg.norm((traj.S[i + 1] - traj.S[i - 1]) / (2 * h) - s_dot) <= 1e-6

    def test_non_trivial_h_rejected(self, sphere):
        """h が0でない空間で ValueError が発生すること"""
        with pytest.raises(ValueError, match="h = 0"):
            lie_group_rolling(sphere, ConstantControl(np.ones(2)))


class TestSymmetricPairRolling:
    """symmetric_pair_rolling のテスト"""

    def test_zero_control(self):
        """u = 0 で両方の軌道が変わらないこと"""
        pair, group = symmetric_pair_rolling(make_so_n(3), ConstantControl(np.zeros(3)), steps=5)
        for traj in (pair, group):
            for state in traj.states:
                np.testing.assert_allclose(state.v, 0.0)
                np.testing.assert_allclose(state.g.mat, np.eye(state.g.mat.shape[0]), atol=1e-15)

    def test_group_side_matches_lie_group_rolling(self):
        """群側の軌道が lie_group_rolling と1e-9以内で一致すること"""
        so3 = make_so_n(3)
        u = SampledControl(np.array([0.0, 0.5, 1.0]), np.array([[0.2, 1.0, 0.0], [1.0, 0.0, -0.4], [0.0, 0.3, 0.3]]))
        _, group_traj = symmetric_pair_rolling(so3, u, steps=200)
        direct = lie_group_rolling(make_group_as_reductive(so3), u, steps=200)
        assert compare_trajectories(group_traj, direct).deviation <= 1e-9

    def test_relation_and_identity_s(self):
        """両ローリングの関係式が成り立ち対称対側の S が単位行列であること"""
        pair, group = symmetric_pair_rolling(make_so_n(3), ConstantControl(np.array([0.7, -0.1, 0.4])), steps=100)
        assert pair.diagnostics.extra["relation_residual"] <= 1e-8
        assert group.diagnostics.extra["relation_residual"] <= 1e-8
        for state in pair.states:
            np.testing.assert_array_equal(state.S, np.eye(3))
        np.testing.assert_allclose(pair.final.v, 0.5 * np.array([0.7, -0.1, 0.4]), atol=1e-12)


class TestVerifiers:
    """verify_no_slip, verify_no_twist, compare_trajectories のテスト"""

    def test_no_slip_on_sphere(self, sphere):
        """S^2 上の単位制御の積分で滑りなし残差が1e-5以下であること"""
        traj = integrate_rolling(CAN1, sphere, ConstantControl(np.array([0.6, 0.8])), steps=1000)
        assert verify_no_slip(traj) <= 1e-5

    def test_no_slip_zero_control(self, stiefel):
        """u = 0 で滑りなし残差が1e-12以下であること"""
        traj = integrate_rolling(CAN1, stiefel, ConstantControl(np.zeros(5)), steps=10)
        assert verify_no_slip(traj) <= 1e-12

    def test_no_slip_detects_perturbed_s(self, sphere):
        """S を1.01倍に乱すと滑りなし残差が1e-3を超えること"""
        traj = integrate_rolling(CAN1, sphere, ConstantControl(np.array([0.6, 0.8])), steps=200)
        perturbed = [RollingState(s.t, s.v, s.g, 1.01 * s.S) for s in traj.states]
        assert verify_no_slip(RollingTrajectory.from_states(sphere, perturbed)) > 1e-3

    def test_no_twist_second_kind(self, stiefel):
        """第二種標準微分でねじれなし残差が1e-10以下であること"""
        traj = integrate_rolling(CAN2, stiefel, ConstantControl(np.array([1.0, 0.5, 0.0, -0.5, 0.2])), steps=100)
        assert verify_no_twist(traj, stiefel, CAN2) <= 1e-10

    def test_no_twist_first_kind_on_sphere(self, sphere):
        """S^2 上の第一種標準微分でねじれなし残差が1e-5以下であること"""
        traj = integrate_rolling(CAN1, sphere, ConstantControl(np.array([0.6, 0.8])), steps=1000)
        assert verify_no_twist(traj, sphere, CAN1) <= 1e-5

    def test_no_twist_closed_form(self, stiefel):
        """閉形式の状態で m 基底に対するねじれなし残差が1e-5以下であること"""
        traj = closed_form_trajectory(stiefel, _generic_xi(stiefel, norm=1.0), CAN1, 1.0, 1000)
        assert verify_no_twist(traj, None, CAN1) <= 1e-5

    def test_verification_needs_three_samples(self, sphere):
        """サンプルが3未満の場合に ValueError が発生すること"""
        traj = integrate_rolling(CAN1, sphere, ConstantControl(np.ones(2)), steps=1)
        with pytest.raises(ValueError, match="three samples"):
            verify_no_slip(traj)

    def test_compare_identical(self, sphere):
        """同じ軌道の比較で偏差が0であること"""
        traj = integrate_rolling(CAN1, sphere, ConstantControl(np.ones(2)), steps=4)
        assert compare_trajectories(traj, traj).deviation == 0.0

    def test_compare_requires_shared_grid(self, sphere):
        """時間格子が異なる軌道の比較で ValueError が発生すること"""
        a = integrate_rolling(CAN1, sphere, ConstantControl(np.ones(2)), steps=4)
        b = integrate_rolling(CAN1, sphere, ConstantControl(np.ones(2)), steps=5)
        with pytest.raises(ValueError, match="time grid"):
            compare_trajectories(a, b)


class TestAcceptanceMatrix:
    """空間、標準微分、制御の全組合せでの滑りなし・ねじれなしのテスト"""

    @pytest.mark.parametrize("kind", ["constant", "sampled", "special"])
    @pytest.mark.parametrize("alpha", [CAN1, CAN2], ids=["canonical_first", "canonical_second"])
    @pytest.mark.parametrize("name", list(ACCEPTANCE_SPACES))
    def test_rolling_conditions_hold(self, name, alpha, kind):
        """1000ステップの積分で滑りなし・ねじれなし残差が1e-5以下であること"""
        space = ACCEPTANCE_SPACES[name]()
        traj = integrate_rolling(alpha, space, _control(space, kind, alpha), steps=1000)
        assert verify_no_slip(traj) <= 1e-5
        assert verify_no_twist(traj, space, alpha) <= 1e-5
