"""Reductive homogeneous spaces

A reductive space fixes a splitting ``g = h + m`` of the algebra of a matrix
group together with a scalar product. Invariant covariant derivatives are
represented by Ad(H)-invariant bilinear maps ``alpha: m x m -> m`` and vector
fields are transported along curves by integrating ``z' = -alpha(x, z)``.

All vectors are coordinate arrays: algebra coordinates (length ``dim g``) or
m-coordinates (length ``dim m``) with respect to the space's fixed m-basis.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np
import scipy.linalg as la

from lie import AlgebraElement, GroupElement, LieGroupDescriptor, adjoint_matrix, group_exp
from matcore import TOLERANCES, HomrollError, integrate_fixed

logger = logging.getLogger(__name__)


class SingularSplitError(HomrollError):
    """Raised when h and m do not form a non-degenerate direct sum"""

    pass


class InvalidSpaceError(HomrollError):
    """Raised when a constructed space fails validation"""

    pass


class Embedding(Protocol):
    """Realization of ``G/H`` inside a matrix space.

    ``into_ambient`` maps a coset representative to its point, ``tangent_push``
    maps ``(g, xi)`` with ``xi`` an ambient algebra matrix to the derivative of
    ``s -> into_ambient(g exp(s xi))`` at ``s = 0``.
    """

    def into_ambient(self, g: np.ndarray) -> np.ndarray: ...

    def tangent_push(self, g: np.ndarray, xi: np.ndarray) -> np.ndarray: ...


def sample_subgroup(
    group: LieGroupDescriptor, h_basis: np.ndarray, rng: np.random.Generator, count: int = 8
) -> tuple[GroupElement, ...]:
    """Exponentials of ``count`` random unit-norm vectors of ``h``."""
    if h_basis.shape[1] == 0:
        return (group.identity(),)
    samples = []
    for _ in range(count):
        c = rng.standard_normal(h_basis.shape[1])
        x = h_basis @ c
        samples.append(group_exp(group.element(x / np.linalg.norm(x))))
    return tuple(samples)


def _relative_rank_gap(mat: np.ndarray) -> float:
    if mat.size == 0:
        return 1.0
    s = np.linalg.svd(mat, compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


@dataclass(frozen=True, eq=False)
class ReductiveSpace:
    """``G/H`` with the splitting ``g = h + m`` given by coordinate bases.

    ``h_basis`` and ``m_basis`` hold basis vectors as columns in algebra
    coordinates; ``scalar_product`` is the matrix of a symmetric bilinear form
    on ``g`` in algebra coordinates.
    """

    name: str
    group: LieGroupDescriptor
    h_basis: np.ndarray
    m_basis: np.ndarray
    scalar_product: np.ndarray
    h_samples: tuple[GroupElement, ...]
    embedding: Embedding | None = None
    _joint_inv: np.ndarray = field(init=False, repr=False)
    _m_gram: np.ndarray = field(init=False, repr=False)
    _m_bracket: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        d = self.group.dim
        h = np.asarray(self.h_basis, dtype=float).reshape(d, -1)
        m = np.asarray(self.m_basis, dtype=float).reshape(d, -1)
        object.__setattr__(self, "h_basis", h)
        object.__setattr__(self, "m_basis", m)
        if h.shape[1] + m.shape[1] != d:
            raise SingularSplitError(f"{self.name}: dim h + dim m = {h.shape[1] + m.shape[1]} != dim g = {d}")
        joint = np.hstack([h, m])
        normalized = joint / np.linalg.norm(joint, axis=0) if d else joint
        if _relative_rank_gap(normalized) < 1e-10:
            raise SingularSplitError(f"{self.name}: h and m bases are not jointly independent")
        b = np.asarray(self.scalar_product, dtype=float)
        if not np.allclose(b, b.T, atol=1e-12):
            raise ValueError(f"{self.name}: scalar product must be symmetric")
        for label, basis in (("h", h), ("m", m)):
            gram = basis.T @ b @ basis
            if gram.size and _relative_rank_gap(gram) < 1e-12:
                raise SingularSplitError(f"{self.name}: scalar product is degenerate on {label}")
        object.__setattr__(self, "_joint_inv", np.linalg.inv(joint) if d else np.zeros((0, 0)))
        object.__setattr__(self, "_m_gram", m.T @ b @ m)
        c = self.group.structure_constants
        brackets = np.einsum("ai,bj,abk->ijk", m, m, c)
        object.__setattr__(self, "_m_bracket", np.einsum("ijk,lk->ijl", brackets, self._joint_inv[h.shape[1] :]))

    @classmethod
    def orthogonal_complement(
        cls,
        name: str,
        group: LieGroupDescriptor,
        h_basis: np.ndarray,
        scalar_product: np.ndarray,
        embedding: Embedding | None = None,
        rng: np.random.Generator | None = None,
    ) -> "ReductiveSpace":
        """Build the space with ``m`` the orthogonal complement of ``h``.

        ``m = {X : <X, h> = 0}`` is computed as a null space (orthogonal
        factorization); a degenerate ``h`` is rejected.
        """
        h = np.asarray(h_basis, dtype=float).reshape(group.dim, -1)
        b = np.asarray(scalar_product, dtype=float)
        if h.shape[1]:
            h_gram = h.T @ b @ h
            if _relative_rank_gap(h_gram) < 1e-12:
                raise SingularSplitError(f"{name}: h is degenerate under the scalar product")
            m = la.null_space(h.T @ b, rcond=TOLERANCES.nullspace)
        else:
            m = np.eye(group.dim)
        rng = rng if rng is not None else np.random.default_rng(0)
        return cls(name, group, h, m, b, sample_subgroup(group, h, rng), embedding)

    @property
    def dim_h(self) -> int:
        return self.h_basis.shape[1]

    @property
    def dim_m(self) -> int:
        return self.m_basis.shape[1]

    @property
    def m_gram(self) -> np.ndarray:
        return self._m_gram

    @property
    def m_bracket(self) -> np.ndarray:
        """``K[i, j]`` is the m-coordinate vector of ``pr_m [m_i, m_j]``."""
        return self._m_bracket

    @property
    def pr_m(self) -> np.ndarray:
        """Projection onto ``m`` along ``h`` in algebra coordinates."""
        return self.m_basis @ self._joint_inv[self.dim_h :]

    @property
    def pr_h(self) -> np.ndarray:
        return self.h_basis @ self._joint_inv[: self.dim_h]

    def to_m(self, x: np.ndarray) -> np.ndarray:
        """m-coordinates of ``pr_m(x)`` for algebra coordinates ``x``."""
        return self._joint_inv[self.dim_h :] @ np.asarray(x, dtype=float)

    def to_h(self, x: np.ndarray) -> np.ndarray:
        return self._joint_inv[: self.dim_h] @ np.asarray(x, dtype=float)

    def from_m(self, z: np.ndarray) -> np.ndarray:
        """Algebra coordinates of the m-vector with m-coordinates ``z``."""
        return self.m_basis @ np.asarray(z, dtype=float)

    def m_element(self, z: np.ndarray) -> AlgebraElement:
        return self.group.element(self.from_m(z))

    def m_matrix(self, z: np.ndarray) -> np.ndarray:
        return self.group.matrix(self.from_m(z))

    def restrict(self, op: np.ndarray) -> np.ndarray:
        """``pr_m o op`` restricted to ``m`` in m-coordinates, ``op`` in algebra coordinates."""
        return self._joint_inv[self.dim_h :] @ op @ self.m_basis

    def into_ambient(self, g: np.ndarray) -> np.ndarray:
        return self._require_embedding().into_ambient(g)

    def push_tangent(self, g: np.ndarray, z: np.ndarray) -> np.ndarray:
        """``(T_g pr o T_e l_g) z`` in the embedding, ``z`` in m-coordinates."""
        return self._require_embedding().tangent_push(g, self.m_matrix(z))

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Scalar product of two m-coordinate vectors."""
        return float(np.asarray(a) @ self._m_gram @ np.asarray(b))

    def _require_embedding(self) -> Embedding:
        if self.embedding is None:
            raise ValueError(f"{self.name}: no embedding attached to this space")
        return self.embedding


def project_m(x: AlgebraElement, space: ReductiveSpace) -> AlgebraElement:
    """Projection onto ``m`` along ``h``."""
    return space.group.element(space.pr_m @ x.coords)


def project_h(x: AlgebraElement, space: ReductiveSpace) -> AlgebraElement:
    """Projection onto ``h`` along ``m``."""
    return space.group.element(space.pr_h @ x.coords)


class AlphaKind(Enum):
    CANONICAL_FIRST = "canonical_first"
    CANONICAL_SECOND = "canonical_second"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class AlphaMap:
    """Bilinear map ``alpha: m x m -> m`` defining an invariant covariant derivative.

    Custom maps carry ``custom_table[i, j]``, the m-coordinates of
    ``alpha(m_i, m_j)``. They are accepted without an invariance proof;
    ``validate_space`` reports violations.
    """

    kind: AlphaKind
    custom_table: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind is AlphaKind.CUSTOM:
            if self.custom_table is None or np.asarray(self.custom_table).ndim != 3:
                raise ValueError("a custom alpha map needs a three-index table")
            object.__setattr__(self, "custom_table", np.asarray(self.custom_table, dtype=float))

    @classmethod
    def canonical_first(cls) -> "AlphaMap":
        return cls(AlphaKind.CANONICAL_FIRST)

    @classmethod
    def canonical_second(cls) -> "AlphaMap":
        return cls(AlphaKind.CANONICAL_SECOND)

    @classmethod
    def custom(cls, table: np.ndarray) -> "AlphaMap":
        return cls(AlphaKind.CUSTOM, np.asarray(table, dtype=float))

    def table(self, space: ReductiveSpace) -> np.ndarray:
        dm = space.dim_m
        if self.kind is AlphaKind.CANONICAL_FIRST:
            return 0.5 * space.m_bracket
        if self.kind is AlphaKind.CANONICAL_SECOND:
            return np.zeros((dm, dm, dm))
        assert self.custom_table is not None
        if self.custom_table.shape != (dm, dm, dm):
            raise ValueError(f"custom alpha table has shape {self.custom_table.shape}, expected {(dm, dm, dm)}")
        return self.custom_table


def alpha_apply(alpha: AlphaMap, x: np.ndarray, y: np.ndarray, space: ReductiveSpace) -> np.ndarray:
    """``alpha(X, Y)`` in m-coordinates."""
    return np.einsum("i,j,ijk->k", x, y, alpha.table(space))


def alpha_operator(alpha: AlphaMap, x: np.ndarray, space: ReductiveSpace) -> np.ndarray:
    """Matrix of ``Y -> alpha(X, Y)`` in m-coordinates."""
    return np.einsum("i,ijk->kj", x, alpha.table(space))


@dataclass(frozen=True)
class TransportState:
    t: float
    x: np.ndarray
    z: np.ndarray


def parallel_transport_path(
    alpha: AlphaMap,
    x_curve: Callable[[float], np.ndarray],
    z0: np.ndarray,
    t0: float,
    t1: float,
    steps: int,
    space: ReductiveSpace,
) -> list[TransportState]:
    """Transport ``z0`` along the curve with left-logarithmic derivative ``x_curve``.

    Integrates ``z' = -alpha(x(t), z)`` with RK4 and returns every grid state.
    """
    table = alpha.table(space)

    def rhs(t: float, z: np.ndarray) -> np.ndarray:
        return -np.einsum("i,j,ijk->k", x_curve(t), z, table)

    solution = integrate_fixed(rhs, t0, t1, np.asarray(z0, dtype=float), steps)
    return [
        TransportState(float(t), np.asarray(x_curve(float(t)), dtype=float), z)
        for t, z in zip(solution.times, solution.states, strict=True)
    ]


def parallel_transport(
    alpha: AlphaMap,
    x_curve: Callable[[float], np.ndarray],
    z0: np.ndarray,
    t0: float,
    t1: float,
    steps: int,
    space: ReductiveSpace,
) -> np.ndarray:
    """Parallel transport of ``z0`` from ``t0`` to ``t1``; see ``parallel_transport_path``."""
    return parallel_transport_path(alpha, x_curve, z0, t0, t1, steps, space)[-1].z


@dataclass(frozen=True)
class CheckResult:
    """One validation check.

    ``value`` is a residual for inclusion checks and a relative singular value
    for non-degeneracy checks; ``passed`` already accounts for the direction.
    """

    name: str
    passed: bool
    value: float
    limit: float


@dataclass(frozen=True)
class ValidationReport:
    space: str
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict[str, dict[str, float | bool]]:
        return {c.name: {"passed": c.passed, "value": c.value, "limit": c.limit} for c in self.checks}


def _ad_h_on_m(space: ReductiveSpace, h: GroupElement) -> tuple[np.ndarray, float]:
    """``Ad_h`` restricted to ``m`` and the size of its h-component."""
    ad = adjoint_matrix(h) if space.group.dim else np.zeros((0, 0))
    images = ad @ space.m_basis
    leak = float(np.max(np.abs(space.to_h(images)))) if images.size and space.dim_h else 0.0
    return space.to_m(images), leak


def validate_space(space: ReductiveSpace, alpha: AlphaMap) -> ValidationReport:
    """Run the structural checks of ``space`` and the Ad(H)-invariance of ``alpha``."""
    checks: list[CheckResult] = []
    tol = TOLERANCES

    joint = np.hstack([space.h_basis, space.m_basis])
    joint_gap = _relative_rank_gap(joint / np.linalg.norm(joint, axis=0)) if joint.size else 1.0
    checks.append(CheckResult("joint_basis", joint_gap >= 1e-10, joint_gap, 1e-10))

    c = space.group.structure_constants
    leak = 0.0
    if space.dim_h:
        hh = np.einsum("ai,bj,abk->ijk", space.h_basis, space.h_basis, c)
        d = space.group.dim
        leak = float(np.max(np.abs(space.to_m(hh.reshape(-1, d).T)), initial=0.0))
    checks.append(CheckResult("h_subalgebra", leak <= tol.subalgebra, leak, tol.subalgebra))

    reductive_leak = 0.0
    restricted = []
    for h in space.h_samples:
        ad_m, h_leak = _ad_h_on_m(space, h)
        restricted.append(ad_m)
        reductive_leak = max(reductive_leak, h_leak)
    checks.append(CheckResult("reductivity", reductive_leak <= tol.reductive, reductive_leak, tol.reductive))

    gram_gap = _relative_rank_gap(space.m_gram) if space.dim_m else 1.0
    checks.append(CheckResult("m_gram", gram_gap >= 1e-12, gram_gap, 1e-12))

    table = alpha.table(space)
    invariance = 0.0
    for a in restricted:
        if not table.size:
            break
        lhs = np.einsum("kl,ijl->ijk", a, table)
        rhs = np.einsum("ai,bj,abk->ijk", a, a, table)
        invariance = max(invariance, float(np.max(np.abs(lhs - rhs))))
    checks.append(CheckResult("alpha_invariance", invariance <= tol.alpha_invariance, invariance, tol.alpha_invariance))

    report = ValidationReport(space.name, tuple(checks))
    for check in checks:
        logger.debug(f"{space.name}: {check.name} value={check.value:.3e} limit={check.limit:.1e}")
    for check in report.failures():
        logger.warning(f"{space.name}: check {check.name} failed (value {check.value:.3e}, limit {check.limit:.1e})")
    return report


def is_metric_alpha(alpha: AlphaMap, space: ReductiveSpace) -> bool:
    """Whether every ``alpha(m_i, .)`` is skew-adjoint for the m-Gram."""
    gram = space.m_gram
    scale = max(1.0, float(np.max(np.abs(gram)))) if gram.size else 1.0
    for i in range(space.dim_m):
        a = alpha_operator(alpha, np.eye(space.dim_m)[i], space)
        if np.max(np.abs(gram @ a + a.T @ gram)) > TOLERANCES.metric_skew * scale:
            return False
    return True


def natural_reductivity_residual(space: ReductiveSpace, rng: np.random.Generator, samples: int = 20) -> float:
    """Max of ``|<[X,Y]_m, Z> - <X, [Y,Z]_m>|`` over random m-triples."""
    worst = 0.0
    k = space.m_bracket
    for _ in range(samples):
        x, y, z = (rng.standard_normal(space.dim_m) for _ in range(3))
        xy = np.einsum("i,j,ijk->k", x, y, k)
        yz = np.einsum("i,j,ijk->k", y, z, k)
        worst = max(worst, abs(space.inner(xy, z) - space.inner(x, yz)))
    return worst
