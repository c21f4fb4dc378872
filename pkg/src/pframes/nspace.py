"""Finite-dimensional linear n-normed spaces.

The n-norm is the Gram-determinant volume of the parallelotope spanned by
the arguments. Fixing the last ``n - 1`` slots to an anchor tuple
``(a_2, ..., a_n)`` yields the anchored seminorm

    x -> ||x, a_2, ..., a_n|| = ||P_U x||_2 * vol(a_2, ..., a_n),

where ``U`` is the orthogonal complement of the anchor span. The seminorm
vanishes exactly on ``span(a_2, ..., a_n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSpaceError, InputError

__all__ = [
    "RANK_RTOL",
    "AnchorTuple",
    "NSpace",
    "as_vector",
    "gram_volume",
    "n_norm",
    "anchored_seminorm",
    "project_complement",
]

# Singular values below RANK_RTOL * s_max count as zero.
RANK_RTOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def as_vector(x, dimension: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float array, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise InputError(f"expected a 1-D coordinate vector, got shape {v.shape}")
    if dimension is not None and v.shape[0] != dimension:
        raise InputError(f"expected dimension {dimension}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise InputError("vector has non-finite entries")
    return v


def _stack(vectors: Sequence) -> np.ndarray:
    if len(vectors) == 0:
        raise InputError("need at least one vector")
    rows = [as_vector(v) for v in vectors]
    d = rows[0].shape[0]
    for r in rows[1:]:
        if r.shape[0] != d:
            raise InputError(f"dimension mismatch: {d} vs {r.shape[0]}")
    return np.vstack(rows)


def gram_volume(vectors: Sequence) -> float:
    """Volume ``sqrt(det G)`` of the parallelotope spanned by ``vectors``.

    ``G`` is the matrix of pairwise inner products. The volume is computed as
    the product of the singular values of the stacked vectors, and is 0 when
    the family is rank deficient at relative threshold ``RANK_RTOL``.
    """
    X = _stack(vectors)
    r, d = X.shape
    if r > d:
        raise InputError(f"{r} vectors in dimension {d} are always dependent")
    s = np.linalg.svd(X, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= RANK_RTOL * s[0]:
        return 0.0
    return float(np.prod(s))


@dataclass(frozen=True)
class AnchorTuple:
    """The fixed vectors ``a_2, ..., a_n`` and their Gram volume."""

    anchors: np.ndarray  # shape (n - 1, d)
    volume: float

    @classmethod
    def from_vectors(cls, vectors: Sequence) -> "AnchorTuple":
        A = _stack(vectors)
        if A.shape[0] > A.shape[1]:
            raise DegenerateSpaceError("more anchors than the ambient dimension")
        vol = gram_volume(list(A))
        if vol <= 0.0:
            raise DegenerateSpaceError("anchors are linearly dependent")
        return cls(_frozen(A), vol)

    def __len__(self) -> int:
        return self.anchors.shape[0]


@dataclass(frozen=True, eq=False)
class NSpace:
    """R^d with the volume n-norm and a fixed anchor tuple.

    Attributes
    ----------
    dimension : int
        Ambient dimension ``d``.
    order : int
        ``n``, the number of slots of the n-norm.
    anchors : AnchorTuple
        ``(a_2, ..., a_n)``.
    complement_basis : ndarray, shape (d, d - n + 1)
        Orthonormal basis (as columns) of the complement ``U`` of the
        anchor span.
    """

    dimension: int
    order: int
    anchors: AnchorTuple
    complement_basis: np.ndarray

    @classmethod
    def from_anchors(cls, anchors: Sequence, dimension: int | None = None) -> "NSpace":
        tup = AnchorTuple.from_vectors(anchors)
        d = tup.anchors.shape[1]
        if dimension is not None and dimension != d:
            raise InputError(f"anchors have dimension {d}, expected {dimension}")
        n = len(tup) + 1
        if n < 2:
            raise InputError("order must be at least 2")
        k = d - (n - 1)
        if k < 1:
            raise DegenerateSpaceError(
                "anchors span the whole space; the anchored seminorm is identically zero"
            )
        # Right singular vectors past the anchor rank span the complement.
        _, _, vt = np.linalg.svd(tup.anchors, full_matrices=True)
        basis = vt[n - 1:].T
        return cls(d, n, tup, _frozen(basis))

    @property
    def volume(self) -> float:
        return self.anchors.volume

    @property
    def complement_dim(self) -> int:
        return self.complement_basis.shape[1]

    def to_complement(self, x) -> np.ndarray:
        """Coordinates of ``P_U x`` in :attr:`complement_basis`."""
        return self.complement_basis.T @ as_vector(x, self.dimension)

    def from_complement(self, u) -> np.ndarray:
        return self.complement_basis @ np.asarray(u, dtype=float)

    def __repr__(self) -> str:
        return (
            f"NSpace(dimension={self.dimension}, order={self.order}, "
            f"volume={self.volume:.6g})"
        )


def n_norm(space: NSpace, *vectors) -> float:
    """The volume n-norm ``||x_1, ..., x_n||`` of exactly ``space.order`` vectors."""
    if len(vectors) != space.order:
        raise InputError(f"n-norm of order {space.order} got {len(vectors)} arguments")
    for v in vectors:
        as_vector(v, space.dimension)
    return gram_volume(list(vectors))


def anchored_seminorm(space: NSpace, x) -> float:
    """``||x, a_2, ..., a_n||`` evaluated through the n-norm itself."""
    return n_norm(space, x, *space.anchors.anchors)


def seminorm_by_projection(space: NSpace, x) -> float:
    """Same quantity as :func:`anchored_seminorm` via ``||P_U x|| * volume``."""
    return float(np.linalg.norm(space.to_complement(x))) * space.volume


def project_complement(space: NSpace, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto the anchor complement ``U``."""
    return space.from_complement(space.to_complement(x))
