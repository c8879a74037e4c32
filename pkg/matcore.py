"""Dense matrix core

Matrix exponential, fixed-step Runge-Kutta integration and composite Simpson
quadrature shared by the Lie group, reductive space and rolling modules.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

logger = logging.getLogger(__name__)


class HomrollError(Exception):
    """Base exception for all homroll errors"""

    pass


class NonSquareError(HomrollError):
    """Raised when a square matrix is required"""

    pass


class NonFiniteError(HomrollError):
    """Raised when a matrix or an ODE right-hand side contains NaN or Inf"""

    pass


class OddPanelsError(HomrollError):
    """Raised when composite Simpson quadrature gets an odd panel count"""

    pass


@dataclass(frozen=True)
class Tolerances:
    """Default thresholds used across the library and the CLI report."""

    expm_rel: float = 1e-12
    closure: float = 1e-9
    coords: float = 1e-10
    membership: float = 1e-9
    nullspace: float = 1e-10
    subalgebra: float = 1e-9
    reductive: float = 1e-8
    alpha_invariance: float = 1e-8
    metric_skew: float = 1e-9
    det_floor: float = 1e-8
    drift_limit: float = 1e-6
    retraction_reach: float = 0.5
    no_slip: float = 1e-5
    no_twist: float = 1e-5
    s_orthogonality: float = 1e-8
    g_group: float = 1e-9
    relation: float = 1e-8


TOLERANCES = Tolerances()

Vector = np.ndarray
RHS = Callable[[float, np.ndarray], np.ndarray]


def as_matrix(a: np.ndarray | list, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float array.

    Raises
    ------
    NonFiniteError
        If an entry is NaN or Inf.
    ValueError
        If ``a`` is not two-dimensional or has an empty side.
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return m


def one_norm(a: np.ndarray) -> float:
    """Maximum absolute column sum."""
    return float(np.max(np.sum(np.abs(a), axis=0)))


# Pade(13, 13) numerator coefficients and the matching one-norm bound.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def _pade13(a: np.ndarray, ident: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE13
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    return u, v


def mat_exp(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a degree-13 Pade core.

    The number of squarings is the smallest ``s >= 0`` with
    ``||a||_1 / 2**s <= theta_13``.

    Parameters
    ----------
    a : np.ndarray
        Square matrix with finite entries.

    Returns
    -------
    np.ndarray
        ``e**a``.

    Raises
    ------
    NonSquareError
        If ``a`` is not square.
    """
    m = as_matrix(a, "exponent")
    if m.shape[0] != m.shape[1]:
        raise NonSquareError(f"mat_exp needs a square matrix, got {m.shape[0]}x{m.shape[1]}")
    ident = np.eye(m.shape[0])
    norm = one_norm(m)
    if norm == 0.0:
        return ident
    s = max(0, math.ceil(math.log2(norm / _THETA13))) if norm > _THETA13 else 0
    scaled = m / (2.0**s)
    u, v = _pade13(scaled, ident)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def rk4_step(f: RHS, t: float, y: Vector, h: float) -> Vector:
    """One classical fourth-order Runge-Kutta step.

    Raises
    ------
    ValueError
        If ``h`` is not positive.
    NonFiniteError
        If any stage evaluation is not finite.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    y = np.asarray(y, dtype=float)

    def stage(ts: float, ys: np.ndarray) -> np.ndarray:
        k = np.asarray(f(ts, ys), dtype=float)
        if not np.all(np.isfinite(k)):
            raise NonFiniteError(f"right-hand side is not finite at t={ts:.6g}")
        return k

    k1 = stage(t, y)
    k2 = stage(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = stage(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = stage(t + h, y + h * k3)
    y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise NonFiniteError(f"state is not finite after step at t={t + h:.6g}")
    return y_next


@dataclass(frozen=True)
class SteppedSolution:
    """States of a fixed-step integration on a uniform time grid."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self) -> None:
        if len(self.times) < 2 or len(self.times) != len(self.states):
            raise ValueError("a stepped solution needs matching times and states, at least two of each")
        steps = np.diff(self.times)
        if np.any(steps <= 0):
            raise ValueError("times must be strictly increasing")
        if np.max(np.abs(steps - steps[0])) > 1e-12 * max(1.0, abs(steps[0])):
            raise ValueError("times must form a uniform grid")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate_fixed(f: RHS, t0: float, t1: float, y0: Vector, steps: int) -> SteppedSolution:
    """Integrate ``y' = f(t, y)`` with ``steps`` RK4 steps from ``t0`` to ``t1``.

    All intermediate states are returned, endpoints included.
    """
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    if not t1 > t0:
        raise ValueError(f"integration interval is empty: [{t0}, {t1}]")
    times = np.linspace(t0, t1, steps + 1)
    y = np.asarray(y0, dtype=float)
    states = np.empty((steps + 1, *y.shape))
    states[0] = y
    for i in range(steps):
        y = rk4_step(f, float(times[i]), y, float(times[i + 1] - times[i]))
        states[i + 1] = y
    return SteppedSolution(times=times, states=states)


def quad_simpson(f: Callable[[float], np.ndarray], t0: float, t1: float, panels: int) -> np.ndarray:
    """Composite Simpson rule with ``panels`` subintervals (must be even).

    Raises
    ------
    OddPanelsError
        If ``panels`` is odd or not positive.
    """
    if panels < 2 or panels % 2:
        raise OddPanelsError(f"Simpson quadrature needs a positive even panel count, got {panels}")
    nodes = np.linspace(t0, t1, panels + 1)
    width = (t1 - t0) / panels
    weights = np.ones(panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    total = sum(w * np.asarray(f(float(s)), dtype=float) for w, s in zip(weights, nodes, strict=True))
    return np.asarray(total * (width / 3.0))


def nearest_orthogonal(a: np.ndarray) -> np.ndarray:
    """Orthogonal polar factor ``U`` of ``a = U P``."""
    u, _ = la.polar(as_matrix(a, "polar input"))
    return u


def nearest_gram_orthogonal(a: np.ndarray, gram: np.ndarray, iterations: int = 8) -> np.ndarray:
    """Correct ``a`` towards the group ``{S : S^T G S = G}``.

    The Gram matrix is normalized as ``G = L^T J L`` with ``J`` a signature
    matrix. For definite ``J`` the orthogonal polar factor of ``L a L^-1`` is
    used; otherwise the Newton iteration ``T <- (T + J T^-T J) / 2`` of the
    generalized polar decomposition.
    """
    evals, evecs = np.linalg.eigh(gram)
    if np.min(np.abs(evals)) <= 0.0:
        raise np.linalg.LinAlgError("Gram matrix is singular")
    scale = np.sqrt(np.abs(evals))
    lift = scale[:, None] * evecs.T
    lift_inv = evecs / scale[None, :]
    signature = np.sign(evals)
    t = lift @ a @ lift_inv
    if np.all(signature > 0):
        t = nearest_orthogonal(t)
    else:
        j = np.diag(signature)
        for _ in range(iterations):
            t_next = 0.5 * (t + j @ np.linalg.inv(t).T @ j)
            done = np.linalg.norm(t_next - t) <= 1e-15 * max(1.0, np.linalg.norm(t))
            t = t_next
            if done:
                break
    return lift_inv @ t @ lift
