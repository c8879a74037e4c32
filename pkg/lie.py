"""Matrix Lie groups

Group descriptors with their algebra basis, exponential, adjoint actions and
the polar retraction used to remove integration drift.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from matcore import TOLERANCES, HomrollError, as_matrix, mat_exp, nearest_orthogonal

logger = logging.getLogger(__name__)


class NotClosedError(HomrollError):
    """Raised when a matrix is not in the span of the algebra basis"""

    pass


class TooFarFromGroupError(HomrollError):
    """Raised when a matrix is too far from the group to be retracted"""

    pass


class NotInGroupError(HomrollError):
    """Raised when a group element fails the membership test"""

    pass


class Retraction(Enum):
    POLAR_ORTHOGONAL = "polar_orthogonal"
    NONE = "none"


@dataclass(frozen=True, eq=False)
class LieGroupDescriptor:
    """A matrix Lie group given by an algebra basis of ``n x n`` matrices.

    Simple groups check ``||g^T g - I||_F`` (and ``det g > 0`` when ``special``)
    for membership. Product groups built from ``factors`` are block diagonal
    and check each block plus the vanishing of the off-diagonal blocks.
    """

    name: str
    ambient_dim: int
    algebra_basis: tuple[np.ndarray, ...]
    membership_tol: float = TOLERANCES.membership
    retraction: Retraction = Retraction.POLAR_ORTHOGONAL
    special: bool = False
    factors: tuple["LieGroupDescriptor", ...] = ()
    _basis_matrix: np.ndarray = field(init=False, repr=False)
    _basis_pinv: np.ndarray = field(init=False, repr=False)
    _structure: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.ambient_dim
        basis = tuple(as_matrix(b, "algebra basis element") for b in self.algebra_basis)
        if any(b.shape != (n, n) for b in basis):
            raise ValueError(f"{self.name}: every basis element must be {n}x{n}")
        object.__setattr__(self, "algebra_basis", basis)
        mat = np.stack([b.ravel() for b in basis], axis=1) if basis else np.zeros((n * n, 0))
        if basis:
            normalized = mat / np.linalg.norm(mat, axis=0)
            det = np.linalg.det(normalized.T @ normalized)
            if det < 1e-12:
                raise ValueError(f"{self.name}: algebra basis is linearly dependent (Gram det {det:.3e})")
        object.__setattr__(self, "_basis_matrix", mat)
        object.__setattr__(self, "_basis_pinv", np.linalg.pinv(mat) if basis else np.zeros((0, n * n)))
        object.__setattr__(self, "_structure", self._structure_constants())
        self._check_exponentials()

    @property
    def dim(self) -> int:
        return len(self.algebra_basis)

    @property
    def structure_constants(self) -> np.ndarray:
        """``C[i, j, k]`` with ``[b_i, b_j] = sum_k C[i, j, k] b_k``."""
        return self._structure

    def identity(self) -> "GroupElement":
        return GroupElement(self, np.eye(self.ambient_dim))

    def matrix(self, coords: np.ndarray) -> np.ndarray:
        """Ambient matrix ``sum_i coords_i b_i``."""
        c = np.asarray(coords, dtype=float)
        return (self._basis_matrix @ c).reshape(self.ambient_dim, self.ambient_dim)

    def coords(self, mat: np.ndarray, strict: bool = True) -> np.ndarray:
        """Least-squares coordinates of ``mat`` in the algebra basis.

        With ``strict=False`` the residual is not checked, which is used for
        finite-difference quotients that leave the algebra at truncation order.

        Raises
        ------
        NotClosedError
            If the projection residual exceeds the closure tolerance.
        """
        vec = np.asarray(mat, dtype=float).ravel()
        c = self._basis_pinv @ vec
        if not strict:
            return c
        residual = float(np.linalg.norm(self._basis_matrix @ c - vec))
        if residual > TOLERANCES.closure * max(1.0, float(np.linalg.norm(vec))):
            raise NotClosedError(f"{self.name}: matrix leaves the algebra span (residual {residual:.3e})")
        return c

    def element(self, coords: np.ndarray) -> "AlgebraElement":
        c = np.asarray(coords, dtype=float)
        return AlgebraElement(self, self.matrix(c), c)

    def element_from_matrix(self, mat: np.ndarray) -> "AlgebraElement":
        c = self.coords(as_matrix(mat, "algebra element"))
        return AlgebraElement(self, self.matrix(c), c)

    def membership_residual(self, g: np.ndarray) -> float:
        """Distance of ``g`` from the group as used by the membership test."""
        g = np.asarray(g, dtype=float)
        if self.factors:
            residual = 0.0
            offset = 0
            mask = np.ones_like(g, dtype=bool)
            for factor in self.factors:
                size = factor.ambient_dim
                block = g[offset : offset + size, offset : offset + size]
                residual = max(residual, factor.membership_residual(block))
                mask[offset : offset + size, offset : offset + size] = False
                offset += size
            return max(residual, float(np.linalg.norm(g[mask])))
        if self.retraction is Retraction.NONE:
            return 0.0 if abs(np.linalg.det(g)) > 0.0 else np.inf
        residual = float(np.linalg.norm(g.T @ g - np.eye(self.ambient_dim)))
        if self.special and np.linalg.det(g) <= 0.0:
            return max(residual, 1.0)
        return residual

    def is_member(self, g: np.ndarray) -> bool:
        return self.membership_residual(g) <= self.membership_tol

    def _structure_constants(self) -> np.ndarray:
        d = self.dim
        c = np.zeros((d, d, d))
        for i in range(d):
            for j in range(i + 1, d):
                bi, bj = self.algebra_basis[i], self.algebra_basis[j]
                c[i, j] = self.coords(bi @ bj - bj @ bi)
                c[j, i] = -c[i, j]
        return c

    def _check_exponentials(self) -> None:
        for i, b in enumerate(self.algebra_basis):
            for t in (0.25, 0.5, 1.0):
                if not self.is_member(mat_exp(t * b)):
                    raise ValueError(f"{self.name}: exp({t} * basis[{i}]) fails the membership test")


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    group: LieGroupDescriptor
    mat: np.ndarray
    coords: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.mat, dtype=float)
        residual = float(np.linalg.norm(mat - self.group.matrix(self.coords)))
        if residual > TOLERANCES.coords * max(1.0, float(np.linalg.norm(mat))):
            raise NotClosedError(f"{self.group.name}: coordinates do not match the matrix (residual {residual:.3e})")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_group(self, other)
        return self.group.element(self.coords + other.coords)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_group(self, other)
        return self.group.element(self.coords - other.coords)

    def __mul__(self, scalar: float) -> "AlgebraElement":
        return self.group.element(scalar * self.coords)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))


@dataclass(frozen=True, eq=False)
class GroupElement:
    group: LieGroupDescriptor
    mat: np.ndarray

    def __post_init__(self) -> None:
        g = as_matrix(self.mat, "group element")
        residual = self.group.membership_residual(g)
        if residual > self.group.membership_tol:
            raise NotInGroupError(f"{self.group.name}: matrix is not a group element (residual {residual:.3e})")
        object.__setattr__(self, "mat", g)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        _same_group(self, other)
        return GroupElement(self.group, self.mat @ other.mat)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.group, np.linalg.inv(self.mat))


def _same_group(a: Any, b: Any) -> None:
    if a.group is not b.group:
        raise ValueError(f"elements belong to different groups: {a.group.name} and {b.group.name}")


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """Matrix commutator ``XY - YX`` with recomputed coordinates."""
    _same_group(x, y)
    return x.group.element_from_matrix(x.mat @ y.mat - y.mat @ x.mat)


def Ad(g: GroupElement, x: AlgebraElement) -> AlgebraElement:  # noqa: N802
    """Adjoint action ``g X g^-1``."""
    _same_group(g, x)
    return x.group.element_from_matrix(g.mat @ x.mat @ np.linalg.inv(g.mat))


def ad_operator(x: AlgebraElement) -> np.ndarray:
    """Matrix of ``Y -> [X, Y]`` in algebra coordinates."""
    return np.einsum("i,ijk->kj", x.coords, x.group.structure_constants)


def adjoint_matrix(g: GroupElement) -> np.ndarray:
    """Matrix of ``Ad_g`` in algebra coordinates."""
    group = g.group
    g_inv = np.linalg.inv(g.mat)
    cols = [group.coords(g.mat @ b @ g_inv) for b in group.algebra_basis]
    return np.stack(cols, axis=1) if cols else np.zeros((0, 0))


def group_exp(x: AlgebraElement) -> GroupElement:
    return GroupElement(x.group, mat_exp(x.mat))


def retract_to_group(g_raw: np.ndarray, group: LieGroupDescriptor) -> GroupElement:
    """Map a drifted matrix back onto the group.

    For ``PolarOrthogonal`` groups this is the orthogonal polar factor, the
    nearest orthogonal matrix in Frobenius norm; otherwise ``g_raw`` is kept.

    Raises
    ------
    TooFarFromGroupError
        If ``||g^T g - I||_F`` exceeds the retraction reach.
    """
    g = as_matrix(g_raw, "retraction input")
    if group.retraction is Retraction.NONE:
        return GroupElement(group, g)
    drift = float(np.linalg.norm(g.T @ g - np.eye(group.ambient_dim)))
    if drift > TOLERANCES.retraction_reach:
        raise TooFarFromGroupError(f"{group.name}: drift {drift:.3e} is beyond the retraction reach")
    return GroupElement(group, nearest_orthogonal(g))
