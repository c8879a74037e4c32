"""Intrinsic rolling

The kinematic equation on ``m x G x GL(m)``::

    v' = u,    S' = -alpha(S u, .) o S,    g' = g mat(S u)

its fixed-step integrator with drift correction, closed-form rollings along
projected one-parameter subgroups, the Lie-group and symmetric-pair special
cases, and verifiers for the no-slip and no-twist conditions.
"""

import logging
import time
from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from lie import (
    AlgebraElement,
    GroupElement,
    LieGroupDescriptor,
    Retraction,
    ad_operator,
    adjoint_matrix,
    retract_to_group,
)
from matcore import (
    TOLERANCES,
    HomrollError,
    NonFiniteError,
    mat_exp,
    nearest_gram_orthogonal,
    quad_simpson,
    rk4_step,
)
from reductive import (
    AlphaKind,
    AlphaMap,
    ReductiveSpace,
    alpha_operator,
    is_metric_alpha,
    parallel_transport_path,
    project_h,
    project_m,
)
from spaces import (
    NotSkewError,
    StiefelAlphaSpace,
    make_group_as_reductive,
    make_symmetric_pair,
    require_skew,
    symmetric_pair_lift,
)

logger = logging.getLogger(__name__)


class StateInvariantViolatedError(HomrollError):
    """Raised when a rolling state leaves its invariant set after correction"""

    pass


class ControlDomainError(HomrollError):
    """Raised when a control curve is evaluated outside its time domain"""

    pass


class ControlCurve(ABC):
    """A control ``u: [t0, t1] -> m`` in m-coordinates."""

    t0: float
    t1: float

    @abstractmethod
    def value(self, t: float) -> np.ndarray:
        pass

    def __call__(self, t: float) -> np.ndarray:
        slack = 1e-12 * max(1.0, abs(self.t1))
        if t < self.t0 - slack or t > self.t1 + slack:
            raise ControlDomainError(f"control evaluated at t={t:.6g} outside [{self.t0:.6g}, {self.t1:.6g}]")
        return self.value(t)


class ConstantControl(ControlCurve):
    def __init__(self, x: np.ndarray, t1: float = 1.0, t0: float = 0.0) -> None:
        if not t1 > t0:
            raise ValueError(f"control domain is empty: [{t0}, {t1}]")
        self.x = np.asarray(x, dtype=float)
        self.t0 = float(t0)
        self.t1 = float(t1)

    def value(self, t: float) -> np.ndarray:
        return self.x


class SampledControl(ControlCurve):
    """Componentwise linear interpolation of samples on a time grid."""

    def __init__(self, times: np.ndarray, values: np.ndarray) -> None:
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("a sampled control needs at least two sample times")
        if values.ndim != 2 or values.shape[0] != len(times):
            raise ValueError(f"expected {len(times)} sample rows, got shape {values.shape}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("control samples must be finite")
        self.times = times
        self.values = values
        self.t0 = float(times[0])
        self.t1 = float(times[-1])

    def value(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.values[:, j]) for j in range(self.values.shape[1])])


@dataclass(frozen=True, eq=False)
class _SpecialParts:
    xi: AlgebraElement
    xi_h: AlgebraElement
    xi_m: AlgebraElement
    xi_m_coords: np.ndarray
    ad_h: np.ndarray
    generator: np.ndarray


def _special_parts(space: ReductiveSpace, xi: AlgebraElement) -> _SpecialParts:
    if xi.group is not space.group:
        raise ValueError(f"xi belongs to {xi.group.name}, the space is built on {space.group.name}")
    xi_h = project_h(xi, space)
    xi_m = project_m(xi, space)
    ad_h = ad_operator(xi_h)
    generator = space.restrict(ad_h + 0.5 * ad_operator(xi_m))
    return _SpecialParts(xi, xi_h, xi_m, space.to_m(xi_m.coords), ad_h, generator)


def _canonical_kind(alpha: AlphaMap) -> AlphaKind:
    if alpha.kind is AlphaKind.CUSTOM:
        raise ValueError("closed-form rollings exist only for the canonical derivatives")
    return alpha.kind


class SpecialControl(ControlCurve):
    """The control of the closed-form rolling along ``t -> pr(exp(t xi))``.

    For the first-kind derivative ``u(t) = exp(t M) xi_m`` with
    ``M = pr_m o ad_{xi_h + xi_m / 2}`` on ``m``; for the second kind
    ``u(t) = Ad_{exp(t xi_h)} xi_m``.
    """

    def __init__(self, space: ReductiveSpace, xi: AlgebraElement, alpha: AlphaMap, t1: float = 1.0) -> None:
        if not t1 > 0:
            raise ValueError(f"control domain is empty: [0, {t1}]")
        self.kind = _canonical_kind(alpha)
        self.space = space
        self.parts = _special_parts(space, xi)
        self.t0 = 0.0
        self.t1 = float(t1)

    @property
    def xi_h(self) -> AlgebraElement:
        return self.parts.xi_h

    @property
    def xi_m(self) -> AlgebraElement:
        return self.parts.xi_m

    def value(self, t: float) -> np.ndarray:
        p = self.parts
        if self.kind is AlphaKind.CANONICAL_FIRST:
            return mat_exp(t * p.generator) @ p.xi_m_coords
        return self.space.to_m(mat_exp(t * p.ad_h) @ p.xi_m.coords)


@dataclass(frozen=True, eq=False)
class RollingState:
    """One configuration ``(v, g, S)``; ``S`` acts on m-coordinates."""

    t: float
    v: np.ndarray
    g: GroupElement
    S: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.S, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] != len(self.v):
            raise ValueError(f"S must be {len(self.v)}x{len(self.v)}, got shape {s.shape}")
        if s.size and abs(np.linalg.det(s)) < TOLERANCES.det_floor:
            raise StateInvariantViolatedError(f"S is numerically singular at t={self.t:.6g}")
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    @classmethod
    def initial(cls, space: ReductiveSpace, t: float = 0.0) -> "RollingState":
        """``(0, e, id)``."""
        return cls(t, np.zeros(space.dim_m), space.group.identity(), np.eye(space.dim_m))


@dataclass
class TrajectoryDiagnostics:
    """Drift records of an integration.

    ``*_raw`` values are maxima measured after each step before correction,
    the others after correction. S drifts are only measured for metric
    derivatives.
    """

    s_drift_raw: float = 0.0
    s_drift: float = 0.0
    g_drift_raw: float = 0.0
    g_drift: float = 0.0
    metric: bool = False
    extra: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class RollingTrajectory:
    space: ReductiveSpace
    states: tuple[RollingState, ...]
    development: np.ndarray | None
    diagnostics: TrajectoryDiagnostics

    def __post_init__(self) -> None:
        if len(self.states) < 2:
            raise ValueError("a trajectory needs at least two states")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @classmethod
    def from_states(
        cls, space: ReductiveSpace, states: list[RollingState], diagnostics: TrajectoryDiagnostics | None = None
    ) -> "RollingTrajectory":
        development = None
        if space.embedding is not None:
            development = np.stack([space.into_ambient(s.g.mat) for s in states])
        return cls(space, tuple(states), development, diagnostics or TrajectoryDiagnostics())

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def v(self) -> np.ndarray:
        return np.stack([s.v for s in self.states])

    @property
    def g(self) -> np.ndarray:
        return np.stack([s.g.mat for s in self.states])

    @property
    def S(self) -> np.ndarray:  # noqa: N802
        return np.stack([s.S for s in self.states])

    @property
    def final(self) -> RollingState:
        return self.states[-1]


def _require_finite(a: np.ndarray, label: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{label} is not finite")


def kinematic_rhs(
    alpha: AlphaMap, space: ReductiveSpace, t: float, state: RollingState, u: ControlCurve
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-hand side ``(v', g', S')`` of the kinematic equation at ``state``.

    Raises
    ------
    NonFiniteError
        If the control or the resulting derivatives are not finite.
    """
    ut = np.asarray(u(t), dtype=float)
    x = state.S @ ut
    s_dot = -alpha_operator(alpha, x, space) @ state.S
    g_dot = state.g.mat @ space.m_matrix(x)
    for label, value in (("control", ut), ("S derivative", s_dot), ("g derivative", g_dot)):
        _require_finite(value, label)
    return ut, g_dot, s_dot


class _StateLayout:
    """Flat packing of ``(v, g, S)`` for the RK4 stepper."""

    def __init__(self, dim_m: int, n: int) -> None:
        self.dim_m = dim_m
        self.n = n
        self.g_end = dim_m + n * n

    def pack(self, v: np.ndarray, g: np.ndarray, s: np.ndarray) -> np.ndarray:
        return np.concatenate([v, g.ravel(), s.ravel()])

    def unpack(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        dm, n = self.dim_m, self.n
        return y[:dm], y[dm : self.g_end].reshape(n, n), y[self.g_end :].reshape(dm, dm)


def _gram_drift(s: np.ndarray, gram: np.ndarray) -> float:
    return float(np.linalg.norm(s.T @ gram @ s - gram)) if s.size else 0.0


def _orthogonality_drift(g: np.ndarray) -> float:
    return float(np.linalg.norm(g.T @ g - np.eye(g.shape[0])))


def _time_grid(t0: float, t1: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    if not t1 > t0:
        raise ValueError(f"integration interval is empty: [{t0}, {t1}]")
    return np.linspace(t0, t1, steps + 1)


def integrate_rolling(
    alpha: AlphaMap,
    space: ReductiveSpace,
    u: ControlCurve,
    initial: RollingState | None = None,
    steps: int = 1000,
) -> RollingTrajectory:
    """Integrate the kinematic equation over the control's domain with RK4.

    After every step ``g`` is retracted onto the group and, when ``alpha`` is
    metric, ``S`` is replaced by its nearest Gram-orthogonal factor. Drifts
    before and after correction are recorded in the diagnostics.

    Parameters
    ----------
    alpha : AlphaMap
        Invariant covariant derivative.
    space : ReductiveSpace
        The rolled space.
    u : ControlCurve
        Control in m-coordinates; integration runs from ``initial.t`` to ``u.t1``.
    initial : RollingState, optional
        Defaults to ``(0, e, id)`` at ``u.t0``.
    steps : int
        Number of uniform RK4 steps.

    Raises
    ------
    NonFiniteError
        If the solution blows up.
    StateInvariantViolatedError
        If the corrected state drifts beyond the limit or ``det S`` changes sign.
    """
    initial = initial if initial is not None else RollingState.initial(space, u.t0)
    times = _time_grid(initial.t, u.t1, steps)
    group = space.group
    layout = _StateLayout(space.dim_m, group.ambient_dim)
    table = alpha.table(space)
    gram = space.m_gram
    metric = is_metric_alpha(alpha, space)
    diagnostics = TrajectoryDiagnostics(metric=metric)
    det_sign = np.sign(np.linalg.det(initial.S)) if initial.S.size else 1.0

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        _, g, s = layout.unpack(y)
        ut = u(t)
        x = s @ ut
        a = np.einsum("i,ijk->kj", x, table)
        return layout.pack(ut, g @ space.m_matrix(x), -a @ s)

    logger.info(
        f"Integrating rolling of {space.name} ({alpha.kind.value}) with {steps} steps on [{times[0]:g}, {times[-1]:g}]"
    )
    started = time.perf_counter()
    states = [initial]
    y = layout.pack(initial.v, initial.g.mat, initial.S)
    for i in range(steps):
        y = rk4_step(rhs, float(times[i]), y, float(times[i + 1] - times[i]))
        v, g_raw, s = layout.unpack(y)
        if group.retraction is not Retraction.NONE:
            diagnostics.g_drift_raw = max(diagnostics.g_drift_raw, _orthogonality_drift(g_raw))
        g = retract_to_group(g_raw, group)
        diagnostics.g_drift = max(diagnostics.g_drift, group.membership_residual(g.mat))
        if metric and s.size:
            raw = _gram_drift(s, gram)
            diagnostics.s_drift_raw = max(diagnostics.s_drift_raw, raw)
            s = nearest_gram_orthogonal(s, gram)
            post = _gram_drift(s, gram)
            diagnostics.s_drift = max(diagnostics.s_drift, post)
            if raw > 0.1 * TOLERANCES.drift_limit:
                logger.debug(f"S drift {raw:.3e} before correction at t={times[i + 1]:.6g}")
            if post > TOLERANCES.drift_limit:
                raise StateInvariantViolatedError(
                    f"S drift {post:.3e} after correction exceeds {TOLERANCES.drift_limit:.1e} at t={times[i + 1]:.6g}"
                )
        if s.size and np.sign(np.linalg.det(s)) != det_sign:
            raise StateInvariantViolatedError(f"det S changed sign at t={times[i + 1]:.6g}")
        state = RollingState(float(times[i + 1]), v.copy(), g, s.copy())
        states.append(state)
        y = layout.pack(state.v, state.g.mat, state.S)
    elapsed = time.perf_counter() - started
    logger.info(f"Finished {space.name} rolling in {elapsed:.3f}s (S drift {diagnostics.s_drift_raw:.2e} raw)")
    return RollingTrajectory.from_states(space, states, diagnostics)


def _ad_exp_on_m(space: ReductiveSpace, parts: _SpecialParts, t: float) -> np.ndarray:
    """``Ad_{exp(t xi_h)}`` restricted to ``m``."""
    return space.restrict(mat_exp(t * parts.ad_h))


def _special_group_element(space: ReductiveSpace, parts: _SpecialParts, t: float) -> GroupElement:
    """``g(t) = exp(t xi) exp(-t xi_h)``."""
    return GroupElement(space.group, mat_exp(t * parts.xi.mat) @ mat_exp(-t * parts.xi_h.mat))


def _special_integrand(
    space: ReductiveSpace, parts: _SpecialParts, kind: AlphaKind
) -> Callable[[float], np.ndarray]:
    if kind is AlphaKind.CANONICAL_FIRST:
        return lambda s: mat_exp(s * parts.generator) @ parts.xi_m_coords
    return lambda s: space.to_m(mat_exp(s * parts.ad_h) @ parts.xi_m.coords)


def _special_s(space: ReductiveSpace, parts: _SpecialParts, kind: AlphaKind, t: float) -> np.ndarray:
    if kind is AlphaKind.CANONICAL_SECOND:
        return np.eye(space.dim_m)
    return _ad_exp_on_m(space, parts, t) @ mat_exp(-t * parts.generator)


def _closed_form(
    space: ReductiveSpace, xi: AlgebraElement, t: float, quad_panels: int, kind: AlphaKind
) -> RollingState:
    if t < 0:
        raise ValueError(f"closed forms are evaluated for t >= 0, got {t}")
    if t == 0:
        return RollingState.initial(space)
    parts = _special_parts(space, xi)
    v = quad_simpson(_special_integrand(space, parts, kind), 0.0, t, quad_panels)
    s = _special_s(space, parts, kind, t)
    _require_finite(v, "rolling curve")
    return RollingState(t, v, _special_group_element(space, parts, t), s)


def closed_form_can1(space: ReductiveSpace, xi: AlgebraElement, t: float, quad_panels: int = 64) -> RollingState:
    """Rolling along ``pr(exp(t xi))`` for the first-kind canonical derivative.

    ``g(t) = exp(t xi) exp(-t xi_h)``, ``S(t) = Ad_{exp(t xi_h)} exp(-t M)`` and
    ``v(t) = int_0^t exp(s M) xi_m ds`` with ``M = pr_m o ad_{xi_h + xi_m / 2}``.
    """
    return _closed_form(space, xi, t, quad_panels, AlphaKind.CANONICAL_FIRST)


def closed_form_can2(space: ReductiveSpace, xi: AlgebraElement, t: float, quad_panels: int = 64) -> RollingState:
    """Rolling along ``pr(exp(t xi))`` for the second-kind canonical derivative.

    ``S`` stays the identity and ``v(t) = int_0^t Ad_{exp(s xi_h)} xi_m ds``.
    """
    return _closed_form(space, xi, t, quad_panels, AlphaKind.CANONICAL_SECOND)


def closed_form_trajectory(
    space: ReductiveSpace,
    xi: AlgebraElement,
    alpha: AlphaMap,
    t1: float,
    steps: int,
    panels_per_step: int = 4,
) -> RollingTrajectory:
    """Sample the closed-form rolling on a uniform grid of ``steps`` intervals.

    The rolling curve is accumulated interval by interval with Simpson's rule.
    """
    kind = _canonical_kind(alpha)
    times = _time_grid(0.0, t1, steps)
    parts = _special_parts(space, xi)
    integrand = _special_integrand(space, parts, kind)
    logger.info(f"Sampling closed-form rolling of {space.name} ({kind.value}) at {steps + 1} times")
    states = [RollingState.initial(space)]
    v = np.zeros(space.dim_m)
    for i in range(steps):
        a, b = float(times[i]), float(times[i + 1])
        v = v + quad_simpson(integrand, a, b, panels_per_step)
        states.append(RollingState(b, v, _special_group_element(space, parts, b), _special_s(space, parts, kind, b)))
    diagnostics = TrajectoryDiagnostics(metric=is_metric_alpha(alpha, space))
    diagnostics.g_drift = max(space.group.membership_residual(s.g.mat) for s in states)
    if diagnostics.metric:
        diagnostics.s_drift = max(_gram_drift(s.S, space.m_gram) for s in states)
    return RollingTrajectory.from_states(space, states, diagnostics)


@dataclass(frozen=True)
class StiefelRolling:
    """A special-curve rolling of ``St(n, k)`` in embedded coordinates.

    ``gamma`` is the development curve ``e^{t xi1} X0 e^{-t xi2}``,
    ``rolling_curve`` is ``V(t) = v1(t) X0 - X0 v2(t)`` and
    ``rolling_velocity`` its time derivative.
    """

    trajectory: RollingTrajectory
    gamma: np.ndarray
    rolling_curve: np.ndarray
    rolling_velocity: np.ndarray


def stiefel_special_rolling(
    sp: StiefelAlphaSpace,
    xi1: np.ndarray,
    xi2: np.ndarray,
    t1: float,
    samples: int,
    alpha: AlphaMap | None = None,
    panels_per_step: int = 4,
) -> StiefelRolling:
    """Closed-form rolling along ``t -> pr(exp(t (xi1, xi2)))`` sampled at ``samples`` times."""
    if samples < 2:
        raise ValueError(f"need at least two samples, got {samples}")
    xi1 = require_skew(xi1, "xi1")
    xi2 = require_skew(xi2, "xi2")
    if xi1.shape != (sp.n, sp.n) or xi2.shape != (sp.k, sp.k):
        raise NotSkewError(f"expected {sp.n}x{sp.n} and {sp.k}x{sp.k} generators")
    alpha = alpha if alpha is not None else AlphaMap.canonical_first()
    xi = sp.space.group.element_from_matrix(sp.join(xi1, xi2))
    trajectory = closed_form_trajectory(sp.space, xi, alpha, t1, samples - 1, panels_per_step)
    control = SpecialControl(sp.space, xi, alpha, t1)

    x = sp.x0
    gamma = np.stack([mat_exp(t * xi1) @ x @ mat_exp(-t * xi2) for t in trajectory.times])
    curve = []
    velocity = []
    for state in trajectory.states:
        v1, v2 = sp.from_m_coords(state.v)
        curve.append(v1 @ x - x @ v2)
        u1, u2 = sp.from_m_coords(control(state.t))
        velocity.append(u1 @ x - x @ u2)
    return StiefelRolling(trajectory, gamma, np.stack(curve), np.stack(velocity))



def _integrate_group_pair(
    group: LieGroupDescriptor,
    u: ControlCurve,
    first0: np.ndarray,
    second0: np.ndarray,
    steps: int,
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray], list[np.ndarray], TrajectoryDiagnostics]:
    """Integrate ``v' = u``, ``a' = a U / 2``, ``b' = -b U / 2`` with retraction of ``a`` and ``b``."""
    d, n = group.dim, group.ambient_dim
    times = _time_grid(u.t0, u.t1, steps)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        ut = u(t)
        half = 0.5 * group.matrix(ut)
        a = y[d : d + n * n].reshape(n, n)
        b = y[d + n * n :].reshape(n, n)
        return np.concatenate([ut, (a @ half).ravel(), (-b @ half).ravel()])

    diagnostics = TrajectoryDiagnostics(metric=True)
    y = np.concatenate([np.zeros(d), first0.ravel(), second0.ravel()])
    vs, firsts, seconds = [np.zeros(d)], [first0], [second0]
    for i in range(steps):
        y = rk4_step(rhs, float(times[i]), y, float(times[i + 1] - times[i]))
        a_raw = y[d : d + n * n].reshape(n, n)
        b_raw = y[d + n * n :].reshape(n, n)
        if group.retraction is not Retraction.NONE:
            raw = max(_orthogonality_drift(a_raw), _orthogonality_drift(b_raw))
            diagnostics.g_drift_raw = max(diagnostics.g_drift_raw, raw)
        a = retract_to_group(a_raw, group).mat
        b = retract_to_group(b_raw, group).mat
        y = np.concatenate([y[:d], a.ravel(), b.ravel()])
        vs.append(y[:d].copy())
        firsts.append(a)
        seconds.append(b)
    return times, np.stack(vs), firsts, seconds, diagnostics


def _group_states(
    space: ReductiveSpace, times: np.ndarray, vs: np.ndarray, ks: list[np.ndarray], ws: list[np.ndarray]
) -> list[RollingState]:
    """States ``(v, k w^-1, Ad_w)`` of ``G/{e}``."""
    group = space.group
    states = []
    for t, v, k, w in zip(times, vs, ks, ws, strict=True):
        w_elem = GroupElement(group, w)
        s = space.restrict(adjoint_matrix(w_elem))
        states.append(RollingState(float(t), v, GroupElement(group, k @ np.linalg.inv(w)), s))
    return states


def _record_state_drift(space: ReductiveSpace, states: list[RollingState], diagnostics: TrajectoryDiagnostics) -> None:
    diagnostics.g_drift = max(space.group.membership_residual(s.g.mat) for s in states)
    diagnostics.s_drift = max(_gram_drift(s.S, space.m_gram) for s in states)
    diagnostics.s_drift_raw = diagnostics.s_drift


def lie_group_rolling(
    space: ReductiveSpace,
    u: ControlCurve,
    g0: GroupElement | None = None,
    steps: int = 1000,
) -> RollingTrajectory:
    """First-kind canonical rolling of ``G/{e}`` through ``g = k W^-1``.

    ``k' = k U / 2`` with ``k(0) = g0`` and ``W' = -W U / 2`` with
    ``W(0) = e``; the state is ``(v, k W^-1, Ad_W)``. The integration runs
    over the control's domain.
    """
    if space.dim_h:
        raise ValueError(f"{space.name}: the Lie-group rolling needs h = 0, got dim h = {space.dim_h}")
    group = space.group
    g0 = g0 if g0 is not None else group.identity()
    logger.info(f"Integrating Lie-group rolling of {space.name} with {steps} steps")
    times, vs, ks, ws, diagnostics = _integrate_group_pair(group, u, g0.mat, np.eye(group.ambient_dim), steps)
    states = _group_states(space, times, vs, ks, ws)
    _record_state_drift(space, states, diagnostics)
    return RollingTrajectory.from_states(space, states, diagnostics)


def symmetric_pair_rolling(
    group: LieGroupDescriptor,
    u: ControlCurve,
    g0: GroupElement | None = None,
    steps: int = 1000,
) -> tuple[RollingTrajectory, RollingTrajectory]:
    """Rolling of ``(G x G)/diag(G)`` and the induced rolling of ``G``.

    Integrates ``g1' = g1 U / 2`` and ``g2' = -g2 U / 2`` with ``g1(0) = g0``
    and ``g2(0) = e``. The pair rolling is ``((v/2, -v/2), (g1, g2), id)``,
    the group rolling is ``(v, g1 g2^-1, Ad_{g2})``. Both are related through
    ``phi(g1, g2) = g1 g2^-1``; the relation is checked on every algebra basis
    vector and state.

    Raises
    ------
    StateInvariantViolatedError
        If the two rollings disagree beyond the relation tolerance.
    """
    pair_space = make_symmetric_pair(group)
    group_space = make_group_as_reductive(group)
    g0 = g0 if g0 is not None else group.identity()
    n = group.ambient_dim
    logger.info(f"Integrating symmetric-pair rolling of {pair_space.name} with {steps} steps")
    times, vs, firsts, seconds, diagnostics = _integrate_group_pair(group, u, g0.mat, np.eye(n), steps)

    group_states = _group_states(group_space, times, vs, firsts, seconds)
    pair_states = []
    identity_m = np.eye(pair_space.dim_m)
    for t, v, g1, g2 in zip(times, vs, firsts, seconds, strict=True):
        block = np.zeros((2 * n, 2 * n))
        block[:n, :n] = g1
        block[n:, n:] = g2
        pair_states.append(
            RollingState(
                float(t), symmetric_pair_lift(pair_space, v), GroupElement(pair_space.group, block), identity_m
            )
        )

    relation = 0.0
    basis = np.eye(group.dim)
    for pair_state, group_state in zip(pair_states, group_states, strict=True):
        for z in basis:
            direct = group_space.push_tangent(group_state.g.mat, group_state.S @ z)
            induced = pair_space.push_tangent(pair_state.g.mat, pair_state.S @ symmetric_pair_lift(pair_space, z))
            relation = max(relation, float(np.linalg.norm(direct - induced)))
    if relation > TOLERANCES.relation:
        raise StateInvariantViolatedError(
            f"symmetric-pair relation residual {relation:.3e} exceeds {TOLERANCES.relation:.1e}"
        )
    logger.debug(f"symmetric-pair relation residual {relation:.3e}")

    extra = {"relation_residual": relation}
    pair_diag = TrajectoryDiagnostics(metric=True, g_drift_raw=diagnostics.g_drift_raw, extra=dict(extra))
    _record_state_drift(pair_space, pair_states, pair_diag)
    group_diag = TrajectoryDiagnostics(metric=True, g_drift_raw=diagnostics.g_drift_raw, extra=dict(extra))
    _record_state_drift(group_space, group_states, group_diag)
    return (
        RollingTrajectory.from_states(pair_space, pair_states, pair_diag),
        RollingTrajectory.from_states(group_space, group_states, group_diag),
    )


def _uniform_step(traj: RollingTrajectory) -> float:
    if len(traj.states) < 3:
        raise ValueError("verification needs at least three samples")
    return float(traj.times[1] - traj.times[0])


def verify_no_slip(traj: RollingTrajectory, space: ReductiveSpace | None = None) -> float:
    """Max deviation between the development velocity and ``q(t) v'(t)``.

    Both derivatives are central differences on the trajectory grid, taken at
    interior samples; ``q(t) Z`` is the push of ``S Z`` by ``g`` into the
    embedding.
    """
    space = space if space is not None else traj.space
    h = _uniform_step(traj)
    gamma = traj.development if traj.development is not None else np.stack([space.into_ambient(g) for g in traj.g])
    v = traj.v
    worst = 0.0
    for i in range(1, len(traj.states) - 1):
        gamma_dot = (gamma[i + 1] - gamma[i - 1]) / (2 * h)
        v_dot = (v[i + 1] - v[i - 1]) / (2 * h)
        state = traj.states[i]
        pushed = space.push_tangent(state.g.mat, state.S @ v_dot)
        worst = max(worst, float(np.linalg.norm(gamma_dot - pushed)))
    return worst


def verify_no_twist(
    traj: RollingTrajectory,
    space: ReductiveSpace | None,
    alpha: AlphaMap,
    probes: np.ndarray | None = None,
) -> float:
    """Max deviation between parallel transport of ``q(t0) Z`` and ``q(t) Z``.

    The transport velocity ``x(t) = S(t) v'(t)`` uses second-order
    differences of the rolling curve and a cubic spline between samples.
    Probes default to the m-basis; deviations are measured in m-coordinates.
    """
    space = space if space is not None else traj.space
    _uniform_step(traj)
    times = traj.times
    s_all = traj.S
    v_dot = np.gradient(traj.v, times, axis=0, edge_order=2)
    x = np.einsum("nij,nj->ni", s_all, v_dot)
    spline = CubicSpline(times, x, axis=0)
    probes = np.eye(space.dim_m) if probes is None else np.atleast_2d(np.asarray(probes, dtype=float))

    def x_curve(t: float) -> np.ndarray:
        return np.asarray(spline(t))

    worst = 0.0
    for z0 in probes:
        path = parallel_transport_path(
            alpha, x_curve, s_all[0] @ z0, float(times[0]), float(times[-1]), len(times) - 1, space
        )
        for state, transported in zip(traj.states, path, strict=True):
            worst = max(worst, float(np.linalg.norm(transported.z - state.S @ z0)))
    if worst > TOLERANCES.no_twist:
        logger.warning(f"{space.name}: no-twist residual {worst:.3e} above {TOLERANCES.no_twist:.1e}")
    return worst


def horizontality_residual(traj: RollingTrajectory) -> float:
    """Max ``||pr_h(g^-1 g')||`` with ``g'`` by central differences."""
    space = traj.space
    if not space.dim_h:
        return 0.0
    h = _uniform_step(traj)
    g = traj.g
    worst = 0.0
    for i in range(1, len(g) - 1):
        log_derivative = np.linalg.solve(g[i], (g[i + 1] - g[i - 1]) / (2 * h))
        c = space.group.coords(log_derivative, strict=False)
        worst = max(worst, float(np.linalg.norm(space.pr_h @ c)))
    return worst


@dataclass(frozen=True)
class TrajectoryComparison:
    deviation: float
    time: float
    component: str


def compare_trajectories(a: RollingTrajectory, b: RollingTrajectory) -> TrajectoryComparison:
    """Maximal state deviation between two trajectories on the same grid.

    Each sample contributes the largest of ``|v_a - v_b|``, ``||g_a - g_b||_F``
    and ``||S_a - S_b||_F``.
    """
    if len(a.states) != len(b.states) or not np.allclose(a.times, b.times, rtol=0.0, atol=1e-12):
        raise ValueError("trajectories must share the time grid")
    best = TrajectoryComparison(0.0, float(a.times[0]), "v")
    for sa, sb in zip(a.states, b.states, strict=True):
        parts = {
            "v": float(np.linalg.norm(sa.v - sb.v)),
            "g": float(np.linalg.norm(sa.g.mat - sb.g.mat)),
            "S": float(np.linalg.norm(sa.S - sb.S)),
        }
        component = max(parts, key=lambda k: parts[k])
        if parts[component] > best.deviation:
            best = TrajectoryComparison(parts[component], sa.t, component)
    return best
