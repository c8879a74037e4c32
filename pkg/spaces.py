"""Concrete spaces

Factories for orthogonal groups, Lie groups viewed as ``G/{e}`` and as the
symmetric space ``(G x G)/diag(G)``, and Stiefel manifolds ``St(n, k)`` with
alpha-metrics, together with their embeddings into matrix spaces.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from lie import LieGroupDescriptor, Retraction
from matcore import TOLERANCES, HomrollError
from reductive import AlphaMap, InvalidSpaceError, ReductiveSpace, sample_subgroup, validate_space

logger = logging.getLogger(__name__)


class BadAlphaError(HomrollError):
    """Raised for alpha-metric parameters 0 and -1"""

    pass


class BadBasePointError(HomrollError):
    """Raised when the Stiefel base point is not orthonormal"""

    pass


class NotSkewError(HomrollError):
    """Raised when a skew-symmetric matrix is expected"""

    pass


class NotTangentError(HomrollError):
    """Raised when a matrix is not tangent to the Stiefel manifold at the base point"""

    pass


def _skew_basis(n: int) -> tuple[np.ndarray, ...]:
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n))
            e[i, j] = 1.0
            e[j, i] = -1.0
            basis.append(e)
    return tuple(basis)


def make_so_n(n: int) -> LieGroupDescriptor:
    """SO(n) with the basis ``E_ij = e_i e_j^T - e_j e_i^T`` for ``i < j``."""
    if n < 2:
        raise ValueError(f"SO(n) needs n >= 2, got {n}")
    return LieGroupDescriptor(f"SO({n})", n, _skew_basis(n), special=True)


def make_o_n(n: int) -> LieGroupDescriptor:
    """O(n); the algebra of O(1) is zero-dimensional."""
    if n < 1:
        raise ValueError(f"O(n) needs n >= 1, got {n}")
    return LieGroupDescriptor(f"O({n})", n, _skew_basis(n))


def make_product_group(first: LieGroupDescriptor, second: LieGroupDescriptor) -> LieGroupDescriptor:
    """Block-diagonal realization of ``first x second``."""
    n1, n2 = first.ambient_dim, second.ambient_dim
    basis = []
    for b in first.algebra_basis:
        e = np.zeros((n1 + n2, n1 + n2))
        e[:n1, :n1] = b
        basis.append(e)
    for b in second.algebra_basis:
        e = np.zeros((n1 + n2, n1 + n2))
        e[n1:, n1:] = b
        basis.append(e)
    polar = first.retraction is Retraction.POLAR_ORTHOGONAL and second.retraction is Retraction.POLAR_ORTHOGONAL
    return LieGroupDescriptor(
        f"{first.name}x{second.name}",
        n1 + n2,
        tuple(basis),
        membership_tol=max(first.membership_tol, second.membership_tol),
        retraction=Retraction.POLAR_ORTHOGONAL if polar else Retraction.NONE,
        factors=(first, second),
    )


def _trace_form(group: LieGroupDescriptor, weights: np.ndarray | None = None) -> np.ndarray:
    """``-tr(b_i b_j)``, optionally scaled per basis element pair by ``weights``."""
    basis = group.algebra_basis
    form = np.array([[-np.trace(a @ b) for b in basis] for a in basis]).reshape(group.dim, group.dim)
    return form if weights is None else form * weights


@dataclass(frozen=True)
class GroupEmbedding:
    """``G/{e}`` realized as ``G``."""

    def into_ambient(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g)

    def tangent_push(self, g: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return np.asarray(g) @ xi


@dataclass(frozen=True)
class QuotientEmbedding:
    """``(G x G)/diag(G) -> G`` by ``(g1, g2) -> g1 g2^-1``."""

    n: int

    def into_ambient(self, g: np.ndarray) -> np.ndarray:
        n = self.n
        return g[:n, :n] @ np.linalg.inv(g[n:, n:])

    def tangent_push(self, g: np.ndarray, xi: np.ndarray) -> np.ndarray:
        n = self.n
        return g[:n, :n] @ (xi[:n, :n] - xi[n:, n:]) @ np.linalg.inv(g[n:, n:])


@dataclass(frozen=True, eq=False)
class StiefelEmbedding:
    """``(O(n) x O(k))/H -> St(n, k)`` by ``(R, theta) -> R X0 theta^T``."""

    x0: np.ndarray

    def into_ambient(self, g: np.ndarray) -> np.ndarray:
        n = self.x0.shape[0]
        return g[:n, :n] @ self.x0 @ g[n:, n:].T

    def tangent_push(self, g: np.ndarray, xi: np.ndarray) -> np.ndarray:
        n = self.x0.shape[0]
        r, theta = g[:n, :n], g[n:, n:]
        return r @ (xi[:n, :n] @ self.x0 - self.x0 @ xi[n:, n:]) @ theta.T


def make_group_as_reductive(group: LieGroupDescriptor) -> ReductiveSpace:
    """``G/{e}`` with ``h = 0``, ``m = g`` and the form ``-tr(XY)``."""
    return ReductiveSpace(
        f"{group.name}/{{e}}",
        group,
        np.zeros((group.dim, 0)),
        np.eye(group.dim),
        _trace_form(group),
        (group.identity(),),
        GroupEmbedding(),
    )


def make_symmetric_pair(group: LieGroupDescriptor, rng: np.random.Generator | None = None) -> ReductiveSpace:
    """``(G x G)/diag(G)`` with ``h = {(X, X)}`` and ``m = {(X, -X)}``."""
    pair = make_product_group(group, group)
    d = group.dim
    eye = np.eye(d)
    h_basis = np.vstack([eye, eye])
    m_basis = np.vstack([eye, -eye])
    rng = rng if rng is not None else np.random.default_rng(0)
    return ReductiveSpace(
        f"({group.name}x{group.name})/diag",
        pair,
        h_basis,
        m_basis,
        _trace_form(pair),
        sample_subgroup(pair, h_basis, rng),
        QuotientEmbedding(group.ambient_dim),
    )


def symmetric_pair_lift(space: ReductiveSpace, x: np.ndarray) -> np.ndarray:
    """m-coordinates of ``(X/2, -X/2)``, the preimage of ``X`` under ``T phi`` at ``(e, e)``."""
    x = np.asarray(x, dtype=float)
    return space.to_m(np.concatenate([0.5 * x, -0.5 * x]))


@dataclass(frozen=True, eq=False)
class StiefelAlphaSpace:
    """``St(n, k)`` as ``(O(n) x O(k))/Stab(X0)`` with an alpha-metric."""

    n: int
    k: int
    alpha_param: float
    x0: np.ndarray
    space: ReductiveSpace

    def split(self, mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        return mat[:n, :n], mat[n:, n:]

    def join(self, omega: np.ndarray, eta: np.ndarray) -> np.ndarray:
        n, k = self.n, self.k
        out = np.zeros((n + k, n + k))
        out[:n, :n] = omega
        out[n:, n:] = eta
        return out

    def to_m_coords(self, omega: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """m-coordinates of ``pr_m(omega, eta)``."""
        return self.space.to_m(self.space.group.coords(self.join(omega, eta)))

    def from_m_coords(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.split(self.space.m_matrix(z))


def _check_alpha(alpha_param: float) -> None:
    if abs(alpha_param) < 1e-12 or abs(alpha_param + 1.0) < 1e-12:
        raise BadAlphaError(f"alpha-metric parameter must differ from 0 and -1, got {alpha_param}")


def make_stiefel(
    n: int,
    k: int,
    alpha_param: float,
    x0: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> StiefelAlphaSpace:
    """Build ``St(n, k)`` with the alpha-metric at base point ``x0``.

    Parameters
    ----------
    n, k : int
        Dimensions with ``1 <= k <= n``.
    alpha_param : float
        Metric parameter, not 0 or -1.
    x0 : np.ndarray, optional
        Base point with orthonormal columns, defaults to the first ``k``
        columns of the identity.
    rng : np.random.Generator, optional
        Source for the sampled stabilizer elements.

    Raises
    ------
    BadAlphaError
        If ``alpha_param`` is 0 or -1.
    BadBasePointError
        If ``x0`` has the wrong shape or is not orthonormal.
    """
    if not 1 <= k <= n:
        raise ValueError(f"Stiefel manifold needs 1 <= k <= n, got n={n}, k={k}")
    _check_alpha(alpha_param)
    base = np.eye(n)[:, :k] if x0 is None else np.asarray(x0, dtype=float)
    if base.shape != (n, k):
        raise BadBasePointError(f"base point must be {n}x{k}, got {base.shape}")
    if np.linalg.norm(base.T @ base - np.eye(k)) > 1e-12:
        raise BadBasePointError("base point columns are not orthonormal")

    group = make_product_group(make_o_n(n), make_o_n(k))
    kernel_map = np.stack([(b[:n, :n] @ base - base @ b[n:, n:]).ravel() for b in group.algebra_basis], axis=1)
    h_basis = la.null_space(kernel_map, rcond=TOLERANCES.nullspace)
    weights = np.ones((group.dim, group.dim))
    so_n_dim = n * (n - 1) // 2
    weights[so_n_dim:, so_n_dim:] = 1.0 / alpha_param
    space = ReductiveSpace.orthogonal_complement(
        f"St({n},{k};alpha={alpha_param:g})",
        group,
        h_basis,
        _trace_form(group, weights),
        StiefelEmbedding(base),
        rng,
    )
    report = validate_space(space, AlphaMap.canonical_first())
    if not report.passed:
        names = ", ".join(c.name for c in report.failures())
        raise InvalidSpaceError(f"{space.name} failed validation: {names}")
    logger.info(f"Built {space.name}: dim h = {space.dim_h}, dim m = {space.dim_m}")
    return StiefelAlphaSpace(n, k, float(alpha_param), base, space)


def make_sphere(d: int, alpha_param: float = 1.0, rng: np.random.Generator | None = None) -> StiefelAlphaSpace:
    """The sphere ``S^d`` as ``St(d + 1, 1)``."""
    return make_stiefel(d + 1, 1, alpha_param, rng=rng)


def require_skew(mat: np.ndarray, label: str) -> np.ndarray:
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSkewError(f"{label} must be a square matrix, got shape {m.shape}")
    if np.linalg.norm(m + m.T) > 1e-10 * max(1.0, float(np.linalg.norm(m))):
        raise NotSkewError(f"{label} is not skew-symmetric")
    return m


def stiefel_project_m(sp: StiefelAlphaSpace, omega: np.ndarray, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form orthogonal projection of ``(omega, eta)`` onto ``m``."""
    omega = require_skew(omega, "omega")
    eta = require_skew(eta, "eta")
    if omega.shape != (sp.n, sp.n) or eta.shape != (sp.k, sp.k):
        raise NotSkewError(f"expected {sp.n}x{sp.n} and {sp.k}x{sp.k} blocks")
    a = sp.alpha_param
    x = sp.x0
    p = x @ x.T
    omega_perp = (
        p @ omega + omega @ p - (2 * a + 1) / (a + 1) * p @ omega @ p - 1.0 / (a + 1) * x @ eta @ x.T
    )
    eta_perp = a / (a + 1) * (eta - x.T @ omega @ x)
    return omega_perp, eta_perp


def stiefel_tangent_lift(sp: StiefelAlphaSpace, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The element of ``m`` pushed to the tangent vector ``v`` at ``X0``."""
    v = np.asarray(v, dtype=float)
    x = sp.x0
    if v.shape != x.shape:
        raise NotTangentError(f"tangent vector must be {x.shape[0]}x{x.shape[1]}, got {v.shape}")
    if np.linalg.norm(x.T @ v + v.T @ x) > 1e-10 * max(1.0, float(np.linalg.norm(v))):
        raise NotTangentError("X0^T V is not skew-symmetric")
    a = sp.alpha_param
    omega = v @ x.T - x @ v.T + (2 * a + 1) / (a + 1) * x @ v.T @ x @ x.T
    eta = -a / (a + 1) * x.T @ v
    return omega, eta
