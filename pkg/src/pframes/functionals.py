"""Bounded b-linear functionals on X x <a_2> x ... x <a_n>.

Every evaluation in the theory fixes the tail slots to the anchors, so a
functional is stored as one coefficient vector ``t`` with
``T(x, a_2, ..., a_n) = <t, x>``. Boundedness against the anchored
seminorm forces ``t`` to annihilate the anchors, i.e. ``t`` lies in the
complement ``U``, and then ``||T|| = ||t|| / vol(a_2, ..., a_n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .errors import DegenerateInputError, InputError, UnboundedFunctionalError
from .nspace import NSpace, anchored_seminorm, as_vector
from .optimizer import BatchObjective, OptimizerConfig, PowerSum, SphereProblem, sphere_extremum

__all__ = [
    "ANNIHILATION_RTOL",
    "BFunctional",
    "make_functional",
    "evaluate",
    "functional_norm",
    "functional_norm_estimate",
    "dual_norm_identity_check",
]

ANNIHILATION_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class BFunctional:
    coeffs: np.ndarray
    space: NSpace

    def __call__(self, x) -> float:
        return evaluate(self, x)

    @property
    def norm(self) -> float:
        return functional_norm(self)

    def __add__(self, other: "BFunctional") -> "BFunctional":
        _same_space(self, other)
        return _wrap(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "BFunctional") -> "BFunctional":
        _same_space(self, other)
        return _wrap(self.space, self.coeffs - other.coeffs)

    def __mul__(self, c: float) -> "BFunctional":
        return _wrap(self.space, float(c) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "BFunctional":
        return _wrap(self.space, -self.coeffs)


def _same_space(a: BFunctional, b: BFunctional) -> None:
    if a.space is not b.space:
        raise InputError("functionals act on different spaces")


def _wrap(space: NSpace, t: np.ndarray) -> BFunctional:
    t = np.array(t, dtype=float)
    t.setflags(write=False)
    return BFunctional(t, space)


def make_functional(
    space: NSpace, t, policy: Literal["strict", "project"] = "strict"
) -> BFunctional:
    """Wrap ``t`` as a bounded functional on ``space``.

    ``policy="project"`` replaces ``t`` by its projection onto ``U``;
    ``policy="strict"`` raises :class:`UnboundedFunctionalError` when ``t``
    has a component along an anchor.
    """
    t = as_vector(t, space.dimension)
    if policy == "project":
        return _wrap(space, space.from_complement(space.to_complement(t)))
    if policy != "strict":
        raise InputError(f"unknown policy {policy!r}")
    A = space.anchors.anchors
    leak = np.abs(A @ t)
    limit = ANNIHILATION_RTOL * np.linalg.norm(t) * np.linalg.norm(A, axis=1)
    if np.any(leak > limit):
        j = int(np.argmax(leak - limit))
        raise UnboundedFunctionalError(
            f"coefficients pair to {A[j] @ t:.3e} with anchor {j + 2}; "
            "the functional is unbounded against the anchored seminorm"
        )
    return _wrap(space, t)


def evaluate(T: BFunctional, x) -> float:
    """``T(x, a_2, ..., a_n)``."""
    return float(T.coeffs @ as_vector(x, T.space.dimension))


def functional_norm(T: BFunctional) -> float:
    """Closed form ``||t||_2 / vol(anchors)``."""
    return float(np.linalg.norm(T.coeffs)) / T.space.volume


def functional_norm_estimate(
    T: BFunctional,
    formula: Literal["i", "ii", "iii"] = "ii",
    config: OptimizerConfig | None = None,
) -> float:
    """Optimizer estimate of ``||T||`` through one of the three sup formulas.

    ``"i"``   sup |T(x)| over seminorm(x) <= 1, searched on the unit ball of U
              (the ball is the shadow of the sphere in U + R),
    ``"ii"``  sup |T(x)| over seminorm(x) = 1, searched on the sphere of U,
    ``"iii"`` sup |T(x)| / seminorm(x) over the ambient sphere of R^d.
    """
    # The estimate exists to cross-check the closed form, so never take the
    # exact eigen shortcut here.
    cfg = replace(config or OptimizerConfig(), spectral_quadratic=False)
    space = T.space
    V = space.volume
    c = space.to_complement(T.coeffs) / V
    k = c.shape[0]
    if not np.any(T.coeffs):
        return 0.0
    if formula == "ii":
        obj = PowerSum(c[None, :], 1.0, 2.0)
        res = sphere_extremum(SphereProblem(k, obj, "max", cfg))
    elif formula == "i":
        obj = PowerSum(np.append(c, 0.0)[None, :], 1.0, 2.0)
        res = sphere_extremum(SphereProblem(k + 1, obj, "max", cfg))
    elif formula == "iii":
        B = space.complement_basis
        # t lies in U, so <t, x> = <B^T t, B^T x>; sharing B^T x between the
        # numerator and the denominator keeps the ratio consistent near the kernel.
        ct = B.T @ T.coeffs
        t = B @ ct

        def ratio_sq(X):
            # (<t,x> / (V ||P_U x||))^2 with its gradient; kernel directions clamp to 0.
            Y = X @ B
            num = Y @ ct
            den = V * V * np.sum(Y * Y, axis=1)
            ok = den > 1e-300
            safe = np.where(ok, den, 1.0)
            val = np.where(ok, num * num / safe, 0.0)
            grad = (2 * num / safe)[:, None] * t[None, :] - (
                2 * V * V * (num * num) / safe**2
            )[:, None] * (Y @ B.T)
            return val, np.where(ok[:, None], grad, 0.0)

        obj = BatchObjective(ratio_sq, space.dimension, grad=True, even=True)
        res = sphere_extremum(SphereProblem(space.dimension, obj, "max", cfg))
    else:
        raise InputError(f"unknown norm formula {formula!r}")
    return float(np.sqrt(max(res.value, 0.0)))


def dual_norm_identity_check(
    space: NSpace, x, samples: int, seed: int = 0
) -> tuple[float, float]:
    """Both sides of ``||x, a_2..a_n|| = sup_{T != 0} |T(x)| / ||T||``.

    The right side is the maximum over ``samples`` random functionals and
    the analytic maximizer ``t = P_U x``.
    """
    if samples < 1:
        raise InputError("samples must be positive")
    x = as_vector(x, space.dimension)
    lhs = anchored_seminorm(space, x)
    if lhs == 0.0:
        raise DegenerateInputError("x lies in the anchor span; both sides vanish")
    rng = np.random.default_rng(seed)
    k = space.complement_dim
    coeffs = rng.standard_normal((samples, k)) @ space.complement_basis.T
    coeffs = np.vstack([coeffs, space.from_complement(space.to_complement(x))])
    norms = np.linalg.norm(coeffs, axis=1) / space.volume
    keep = norms > 0
    ratios = np.abs(coeffs[keep] @ x) / norms[keep]
    return lhs, float(np.max(ratios))
