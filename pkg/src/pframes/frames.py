"""Finite p-frames of bounded b-linear functionals.

A family ``{T_i}`` is stored as the ``m x d`` matrix of coefficient vectors.
With ``C = coeffs @ B_U`` (the members in complement coordinates) the frame
ratio on the unit sphere of ``U`` is

    sum_i |<t_i, x>|^p / ||x, a_2, ..., a_n||^p = sum_i |(C u)_i|^p / V^p,

so the optimal bounds are extremes of a power sum on a sphere of dimension
``k = dim U``. For ``p = 2`` they are the extreme eigenvalues of ``C^T C / V^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateSpaceError, InputError, NotAFrameError, PreconditionError
from .functionals import BFunctional, make_functional
from .nspace import NSpace, as_vector, n_norm, project_complement
from .optimizer import (
    OptimizerConfig,
    PowerSum,
    SphereProblem,
    lp_operator_norm,
    sphere_extremum,
)

__all__ = [
    "FRAME_RTOL",
    "PFrameFamily",
    "FrameBounds",
    "QDualFamily",
    "ProductSpace",
    "ProductFamily",
    "conjugate_exponent",
    "frame_sum",
    "optimal_bounds",
    "is_p_frame",
    "is_p_bessel",
    "parseval_rescale",
    "sum_families",
    "scale_family",
    "linear_combination",
    "analysis_sequence",
    "synthesis_apply",
    "synthesis_norm",
    "canonical_dual",
    "reconstruct",
    "q_frame_bounds",
    "cartesian_product",
    "product_bounds",
]

# A family is a frame when A > FRAME_RTOL * B.
FRAME_RTOL = 1e-9
TIGHT_RTOL = 1e-8

Method = Literal["auto", "spectral", "optimizer"]


def conjugate_exponent(p: float) -> float:
    if not (p > 1.0 and math.isfinite(p)):
        raise InputError(f"exponent must lie in (1, inf), got {p}")
    return p / (p - 1.0)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PFrameFamily:
    """An ordered family of functionals on one space, with exponent ``p``."""

    space: NSpace
    coeffs: np.ndarray  # (m, d)
    p: float

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] != self.space.dimension:
            raise InputError(
                f"coefficients must have shape (m >= 1, {self.space.dimension}), got {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise InputError("coefficients have non-finite entries")
        conjugate_exponent(self.p)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def from_functionals(cls, members: Sequence[BFunctional], p: float) -> "PFrameFamily":
        if len(members) == 0:
            raise InputError("a family needs at least one member")
        space = members[0].space
        if any(T.space is not space for T in members):
            raise InputError("all members must act on the same space")
        return cls(space, np.vstack([T.coeffs for T in members]), p)

    @classmethod
    def from_coeffs(cls, space: NSpace, coeffs, p: float, policy: str = "strict") -> "PFrameFamily":
        rows = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if rows.ndim != 2:
            raise InputError("coefficients must be a list of vectors")
        members = [make_functional(space, t, policy) for t in rows]
        return cls.from_functionals(members, p)

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @property
    def members(self) -> list[BFunctional]:
        return [BFunctional(_readonly(t), self.space) for t in self.coeffs]

    @cached_property
    def analysis_matrix(self) -> np.ndarray:
        """Members in complement coordinates, ``coeffs @ B_U`` (m x k)."""
        return _readonly(self.coeffs @ self.space.complement_basis)

    def __len__(self) -> int:
        return self.m

    def __repr__(self) -> str:
        return f"PFrameFamily(m={self.m}, p={self.p:g}, space={self.space!r})"


@dataclass(frozen=True)
class FrameBounds:
    """Optimal frame constants with certifying unit directions in ``U``.

    ``arg_lower`` and ``arg_upper`` are ambient vectors with seminorm 1
    (``||P_U x|| = 1/V``) at which the ratio attains ``lower`` and ``upper``.
    """

    lower: float
    upper: float
    arg_lower: np.ndarray
    arg_upper: np.ndarray
    method: Literal["spectral", "optimizer", "grid"]
    certified_margin: float = 0.0

    @property
    def tight(self) -> bool:
        return abs(self.upper - self.lower) <= TIGHT_RTOL * max(self.upper, 0.0)

    def as_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "method": self.method}


@dataclass(frozen=True, eq=False)
class QDualFamily:
    """Vectors ``f_i`` of the ambient space paired against functionals with exponent ``q``."""

    vectors: np.ndarray  # (m, d)
    q: float

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if v.ndim != 2 or not np.all(np.isfinite(v)):
            raise InputError("dual vectors must be a finite (m, d) array")
        conjugate_exponent(self.q)
        object.__setattr__(self, "vectors", _readonly(v))
        object.__setattr__(self, "q", float(self.q))

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return self.m


def _resolve(method: str, exponent: float) -> str:
    if method == "auto":
        return "spectral" if exponent == 2.0 else "optimizer"
    if method == "spectral" and exponent != 2.0:
        raise InputError("the spectral path needs exponent 2")
    if method not in ("spectral", "optimizer"):
        raise InputError(f"unknown bounds method {method!r}")
    return method


def _sphere_bounds(rows: np.ndarray, exponent: float, method: str, config: OptimizerConfig | None):
    """Extremes of ``sum_i |rows_i . u|^exponent`` over unit ``u``; returns (lo, hi, ulo, uhi, tag, margin)."""
    k = rows.shape[1]
    if k < 1:
        raise DegenerateSpaceError("complement is trivial")
    method = _resolve(method, exponent)
    if method == "spectral":
        w, v = np.linalg.eigh(rows.T @ rows)
        lo, hi = max(float(w[0]), 0.0), max(float(w[-1]), 0.0)
        return lo, hi, v[:, 0], v[:, -1], "spectral", 0.0
    cfg = replace(config or OptimizerConfig(), spectral_quadratic=False)
    obj = PowerSum(rows, 1.0, exponent)
    rmin = sphere_extremum(SphereProblem(k, obj, "min", cfg))
    rmax = sphere_extremum(SphereProblem(k, obj, "max", cfg))
    lo, hi = max(rmin.value, 0.0), max(rmax.value, 0.0)
    lo = min(lo, hi)
    tag = "grid" if k == 1 else "optimizer"
    margin = min(rmin.certified_margin, rmax.certified_margin)
    return lo, hi, rmin.argument, rmax.argument, tag, margin


def frame_sum(F: PFrameFamily, x) -> float:
    """``sum_i |T_i(x, a_2, ..., a_n)|^p``."""
    a = analysis_sequence(F, x)
    return float(np.sum(np.abs(a) ** F.p))


def optimal_bounds(
    F: PFrameFamily, method: Method = "auto", config: OptimizerConfig | None = None
) -> FrameBounds:
    """Best constants ``A <= B`` in the p-frame inequality of ``F``."""
    V = F.space.volume
    rows = F.analysis_matrix / V
    lo, hi, ulo, uhi, tag, margin = _sphere_bounds(rows, F.p, method, config)
    B = F.space.complement_basis
    return FrameBounds(lo, hi, _readonly(B @ ulo / V), _readonly(B @ uhi / V), tag, margin)


def is_p_frame(F: PFrameFamily, bounds: FrameBounds | None = None,
               config: OptimizerConfig | None = None) -> bool:
    b = bounds or optimal_bounds(F, config=config)
    return b.upper > 0.0 and b.lower > FRAME_RTOL * b.upper


def is_p_bessel(F: PFrameFamily, claimed_B: float | None = None,
                bounds: FrameBounds | None = None, config: OptimizerConfig | None = None) -> bool:
    b = bounds or optimal_bounds(F, config=config)
    if not math.isfinite(b.upper):
        return False
    return claimed_B is None or b.upper <= claimed_B * (1.0 + 1e-9)


def scale_family(F: PFrameFamily, c: float) -> PFrameFamily:
    return PFrameFamily(F.space, float(c) * F.coeffs, F.p)


def parseval_rescale(F: PFrameFamily, config: OptimizerConfig | None = None) -> PFrameFamily:
    """Scale a tight frame by ``A^(-1/p)`` so that both bounds become 1."""
    b = optimal_bounds(F, config=config)
    if b.upper <= 0.0 or not b.tight:
        raise PreconditionError(
            f"family is not a tight frame (A={b.lower:.6g}, B={b.upper:.6g})"
        )
    A = 0.5 * (b.lower + b.upper)
    if abs(A - 1.0) <= 1e-12:
        return F
    return scale_family(F, A ** (-1.0 / F.p))


def _compatible(F: PFrameFamily, G: PFrameFamily) -> None:
    if F.space is not G.space:
        raise InputError("families act on different spaces")
    if F.p != G.p:
        raise InputError(f"exponents differ: {F.p} vs {G.p}")
    if F.m != G.m:
        raise InputError(f"cardinalities differ: {F.m} vs {G.m}")


def sum_families(F: PFrameFamily, G: PFrameFamily) -> PFrameFamily:
    """Member-wise sum ``{T_i + U_i}``."""
    _compatible(F, G)
    return PFrameFamily(F.space, F.coeffs + G.coeffs, F.p)


def linear_combination(families: Sequence[PFrameFamily], coefficients: Sequence[float]) -> PFrameFamily:
    """Member-wise ``sum_k alpha_k T_{k,i}``."""
    if len(families) == 0 or len(families) != len(coefficients):
        raise InputError("need one coefficient per family")
    for G in families[1:]:
        _compatible(families[0], G)
    coeffs = sum(float(a) * G.coeffs for a, G in zip(coefficients, families))
    return PFrameFamily(families[0].space, coeffs, families[0].p)


def analysis_sequence(F: PFrameFamily, x) -> np.ndarray:
    """``{T_i(x, a_2, ..., a_n)}_i``."""
    return F.coeffs @ as_vector(x, F.space.dimension)


def synthesis_apply(F: PFrameFamily, d) -> BFunctional:
    """``sum_i d_i T_i`` as a functional."""
    d = as_vector(d)
    if d.shape[0] != F.m:
        raise InputError(f"expected {F.m} coefficients, got {d.shape[0]}")
    return BFunctional(_readonly(d @ F.coeffs), F.space)


def synthesis_norm(F: PFrameFamily, config: OptimizerConfig | None = None) -> float:
    """Norm of ``d -> sum_i d_i T_i`` from the l^q unit sphere to functional norm."""
    C = F.analysis_matrix
    return lp_operator_norm(C.T, F.q, "euclidean_over_V", F.space.volume, config)


def canonical_dual(
    F: PFrameFamily, bounds: FrameBounds | None = None, config: OptimizerConfig | None = None
) -> QDualFamily:
    """Dual vectors ``f_i in U`` with ``P_U x = sum_i T_i(x) f_i``.

    ``f_i`` is column ``i`` of ``B_U pinv(C)``, the minimum-norm left inverse
    of the analysis map restricted to ``U``.
    """
    if not is_p_frame(F, bounds, config):
        raise NotAFrameError("family has no positive lower frame bound; no dual exists")
    C = F.analysis_matrix
    vectors = (F.space.complement_basis @ np.linalg.pinv(C)).T
    return QDualFamily(vectors, F.q)


def reconstruct(F: PFrameFamily, D: QDualFamily, x) -> np.ndarray:
    """``sum_i T_i(x) P_U f_i``; equals ``P_U x`` when ``D`` is a dual of ``F``."""
    if D.m != F.m:
        raise InputError(f"dual has {D.m} vectors, family has {F.m}")
    if D.vectors.shape[1] != F.space.dimension:
        raise InputError("dual vectors live in a different dimension")
    return project_complement(F.space, analysis_sequence(F, x) @ D.vectors)


def q_frame_bounds(
    D: QDualFamily, space: NSpace, method: Method = "auto", config: OptimizerConfig | None = None
) -> FrameBounds:
    """Extremes of ``sum_i |T(f_i)|^q / ||T||^q`` over nonzero bounded functionals ``T``.

    Certificates are unit coefficient vectors ``t in U``.
    """
    if D.vectors.shape[1] != space.dimension:
        raise InputError("dual vectors live in a different dimension")
    B = space.complement_basis
    rows = (D.vectors @ B) * space.volume
    lo, hi, ulo, uhi, tag, margin = _sphere_bounds(rows, D.q, method, config)
    return FrameBounds(lo, hi, _readonly(B @ ulo), _readonly(B @ uhi), tag, margin)


# --- Cartesian products -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProductSpace:
    """``X (+) Y`` with the n-norm combined additively in p-th powers.

    Anchors are the pairs ``a_j (+) b_j``; the anchored seminorm is
    ``(||x, a..||_X^p + ||y, b..||_Y^p)^(1/p)``.
    """

    first: NSpace
    second: NSpace
    p: float

    def __post_init__(self):
        if self.first.order != self.second.order:
            raise InputError("factor spaces must have the same order n")
        conjugate_exponent(self.p)

    @property
    def dimension(self) -> int:
        return self.first.dimension + self.second.dimension

    @property
    def order(self) -> int:
        return self.first.order

    @property
    def anchors(self) -> np.ndarray:
        return np.hstack([self.first.anchors.anchors, self.second.anchors.anchors])

    def split(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = as_vector(z, self.dimension)
        return z[: self.first.dimension], z[self.first.dimension:]

    def n_norm(self, *vectors) -> float:
        if len(vectors) != self.order:
            raise InputError(f"n-norm of order {self.order} got {len(vectors)} arguments")
        parts = [self.split(z) for z in vectors]
        nx = n_norm(self.first, *[a for a, _ in parts])
        ny = n_norm(self.second, *[b for _, b in parts])
        return float((nx ** self.p + ny ** self.p) ** (1.0 / self.p))

    def seminorm(self, z) -> float:
        return self.n_norm(z, *self.anchors)


@dataclass(frozen=True, eq=False)
class ProductFamily:
    """Members ``T_i (+) U_i`` acting by ``(T_i (+) U_i)(x (+) y) = T_i x + U_i y``."""

    space: ProductSpace
    first: PFrameFamily
    second: PFrameFamily

    @property
    def p(self) -> float:
        return self.space.p

    @property
    def m(self) -> int:
        return self.first.m

    @property
    def coeffs(self) -> np.ndarray:
        return np.hstack([self.first.coeffs, self.second.coeffs])

    def frame_sum(self, z) -> float:
        """``sum_i |T_i x|^p + sum_i |U_i y|^p``, the additive pairing of the factors."""
        x, y = self.space.split(z)
        return frame_sum(self.first, x) + frame_sum(self.second, y)


def cartesian_product(F: PFrameFamily, G: PFrameFamily) -> ProductFamily:
    if F.p != G.p:
        raise InputError(f"exponents differ: {F.p} vs {G.p}")
    if F.m != G.m:
        raise InputError(f"cardinalities differ: {F.m} vs {G.m}")
    return ProductFamily(ProductSpace(F.space, G.space, F.p), F, G)


def product_bounds(
    P: ProductFamily, method: Method = "auto", config: OptimizerConfig | None = None
) -> FrameBounds:
    """Optimal bounds of a product family over the product of the two complements.

    The ratio is ``(|C_X w_X|_p^p + |C_Y w_Y|_p^p) / (V_X^p |w_X|^p + V_Y^p |w_Y|^p)``.
    At ``p = 2`` this is a generalized symmetric eigenproblem.
    """
    X, Y = P.space.first, P.space.second
    Cx, Cy = P.first.analysis_matrix, P.second.analysis_matrix
    kx, ky = Cx.shape[1], Cy.shape[1]
    Vx, Vy = X.volume, Y.volume
    p = P.p
    method = _resolve(method, p)
    margin = 0.0
    if method == "spectral":
        N = scipy.linalg.block_diag(Cx.T @ Cx, Cy.T @ Cy)
        M = np.diag(np.concatenate([np.full(kx, Vx * Vx), np.full(ky, Vy * Vy)]))
        w, v = scipy.linalg.eigh(N, M)
        lo, hi = max(float(w[0]), 0.0), max(float(w[-1]), 0.0)
        ulo, uhi, tag = v[:, 0], v[:, -1], "spectral"
    else:
        cfg = replace(config or OptimizerConfig(), spectral_quadratic=False)
        rows = scipy.linalg.block_diag(Cx, Cy)
        obj = PowerSum(rows, 1.0, p, blocks=[0] * kx + [1] * ky,
                       bcoef=[Vx ** p, Vy ** p], bexp=p)
        # For p < 2 the ratio is not smooth where one component vanishes, which
        # is where the extremes tend to sit; start there as well.
        seeds = np.zeros((4, kx + ky))
        for j, (fam, sp, lo_hi) in enumerate(((P.first, X, slice(0, kx)), (P.second, Y, slice(kx, kx + ky)))):
            fb = optimal_bounds(fam, "optimizer", cfg)
            seeds[2 * j, lo_hi] = sp.to_complement(fb.arg_lower)
            seeds[2 * j + 1, lo_hi] = sp.to_complement(fb.arg_upper)
        rmin = sphere_extremum(SphereProblem(kx + ky, obj, "min", cfg, seeds))
        rmax = sphere_extremum(SphereProblem(kx + ky, obj, "max", cfg, seeds))
        lo, hi = max(rmin.value, 0.0), max(rmax.value, 0.0)
        lo = min(lo, hi)
        ulo, uhi, tag = rmin.argument, rmax.argument, "optimizer"
        margin = min(rmin.certified_margin, rmax.certified_margin)

    def lift(w):
        z = np.concatenate([X.complement_basis @ w[:kx], Y.complement_basis @ w[kx:]])
        s = P.space.seminorm(z)
        return _readonly(z / s if s > 0 else z)

    return FrameBounds(lo, hi, lift(ulo), lift(uhi), tag, margin)
