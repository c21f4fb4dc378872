"""Deterministic extremum engine on Euclidean unit spheres.

Every "sup/inf over ||x, a_2, ..., a_n|| = 1" quantifier in the package is
reduced to an extremum of a scalar field on the unit sphere of some R^k.
The workhorse objective is a weighted power sum

    f(u) = const + sum_r w_r |<m_r, phi(u)>|^{e_r},   phi(u)_j = sign(u_j) |u_j|^s,

which covers frame sums, differences of frame sums (hypothesis margins)
and, through the ``s = 2/p`` reparameterization of the l^p sphere, operator
norms between sequence spaces. Power sums run on the compiled kernel when
it is available; arbitrary batched objectives run on the numpy kernel.

Search: multi-start projected gradient with backtracking from a scrambled
Halton design, plus an angular grid when the sphere has dimension <= 3. The
best grid point is refined as an extra start and the gap between refined
and grid values is reported as the certified margin. For exponents below 2
the winner is polished on the null space of the rows that vanish there.
"""

from __future__ import annotations

import math
import os
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from . import _kernel_py
from .errors import InputError

try:
    from . import _kernel as _kernel_c
except ImportError:  # pragma: no cover - depends on the build
    _kernel_c = None

__all__ = [
    "OptimizerConfig",
    "PowerSum",
    "BatchObjective",
    "SphereProblem",
    "ExtremumResult",
    "sphere_extremum",
    "lp_operator_norm",
    "backend",
    "available_backends",
    "use_backend",
]

_BACKENDS = {"python": _kernel_py}
if _kernel_c is not None:
    _BACKENDS["compiled"] = _kernel_c

_active = "compiled" if _kernel_c is not None else "python"
if os.environ.get("PFRAMES_BACKEND") in _BACKENDS:
    _active = os.environ["PFRAMES_BACKEND"]


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend() -> str:
    """Name of the kernel currently used for power-sum objectives."""
    return _active


@contextmanager
def use_backend(name: str):
    """Temporarily switch the power-sum kernel (``"compiled"`` or ``"python"``)."""
    global _active
    if name not in _BACKENDS:
        raise InputError(f"backend {name!r} not available; have {available_backends()}")
    prev, _active = _active, name
    try:
        yield
    finally:
        _active = prev


@dataclass(frozen=True)
class OptimizerConfig:
    starts: int = 32
    max_iters: int = 500
    step_shrink: float = 0.5
    tol: float = 1e-10
    seed: int = 0
    grid_resolution: float = 1e-3
    # Caps the 3-sphere grid; 4*pi/h^2 points at h = 1e-3 would be ~1.3e7.
    grid_max_points: int = 4096
    # Quadratic power sums (all exponents 2, no reparameterization) are
    # solved exactly by a symmetric eigendecomposition.
    spectral_quadratic: bool = True

    def __post_init__(self):
        if self.starts < 1 or self.max_iters < 1:
            raise InputError("starts and max_iters must be positive")
        if not 0.0 < self.step_shrink < 1.0:
            raise InputError("step_shrink must lie in (0, 1)")
        if self.tol <= 0 or self.grid_resolution <= 0 or self.grid_max_points < 1:
            raise InputError("tol, grid_resolution and grid_max_points must be positive")

    def with_seed(self, seed: int) -> "OptimizerConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True, eq=False)
class PowerSum:
    """``const + sum_r weights[r] * |rows[r] . phi(u)|**exps[r]``.

    With ``blocks`` set, the sum is divided by
    ``sum_b bcoef[b] * ||u_b||**bexp`` where ``u_b`` collects the coordinates
    labelled ``b``; this is the frame-bound ratio on a product sphere.
    """

    rows: np.ndarray
    weights: np.ndarray
    exps: np.ndarray
    const: float = 0.0
    inner: float = 1.0
    blocks: np.ndarray | None = None
    bcoef: np.ndarray | None = None
    bexp: float = 2.0

    def __post_init__(self):
        rows = np.ascontiguousarray(np.atleast_2d(np.asarray(self.rows, dtype=float)))
        r = rows.shape[0]
        w = np.ascontiguousarray(np.broadcast_to(np.asarray(self.weights, float), (r,)))
        e = np.ascontiguousarray(np.broadcast_to(np.asarray(self.exps, float), (r,)))
        if np.any(e < 1.0):
            raise InputError("power-sum exponents must be >= 1")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "exps", e)
        if self.blocks is not None:
            bl = np.ascontiguousarray(self.blocks, dtype=np.int64)
            bc = np.ascontiguousarray(self.bcoef, dtype=float)
            if bl.shape != (rows.shape[1],) or bl.min() < 0 or bl.max() >= bc.shape[0]:
                raise InputError("blocks must label every coordinate with a valid block")
            if np.any(bc <= 0):
                raise InputError("denominator coefficients must be positive")
            object.__setattr__(self, "blocks", bl)
            object.__setattr__(self, "bcoef", bc)

    @classmethod
    def of(cls, terms, const: float = 0.0, inner: float = 1.0) -> "PowerSum":
        """Build from ``[(weight, rows, exponent), ...]`` blocks."""
        rows, w, e = [], [], []
        for weight, block, exp in terms:
            block = np.atleast_2d(np.asarray(block, dtype=float))
            rows.append(block)
            w.append(np.full(block.shape[0], float(weight)))
            e.append(np.full(block.shape[0], float(exp)))
        return cls(np.vstack(rows), np.concatenate(w), np.concatenate(e), const, inner)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def even(self) -> bool:
        return True

    @property
    def quadratic(self) -> bool:
        return self.inner == 1.0 and self.blocks is None and bool(np.all(self.exps == 2.0))

    def _den(self):
        return self.blocks, self.bcoef, self.bexp

    def quadratic_form(self) -> np.ndarray:
        """Symmetric ``S`` with ``f(u) = const + u^T S u`` for quadratic sums."""
        return (self.rows.T * self.weights) @ self.rows

    def scale(self) -> float:
        """Cheap upper bound on ``sum |w_r| |.|^e_r`` over the unit sphere."""
        norms = np.linalg.norm(self.rows, axis=1)
        if self.inner != 1.0:
            # ||phi(u)||_2 <= k^{max(0, 1/2 - s/2)} on the unit sphere.
            norms = norms * self.dim ** max(0.0, 0.5 - self.inner / 2.0)
        total = float(np.sum(np.abs(self.weights) * norms ** self.exps) + abs(self.const))
        if self.blocks is not None:
            # D(u) >= min_b bcoef[b] * (1/nb)^(bexp/2) on the unit sphere.
            nb = self.bcoef.shape[0]
            total /= float(np.min(self.bcoef)) * nb ** (-max(self.bexp, 2.0) / 2.0)
        return total

    def __call__(self, u) -> float:
        return float(_kernel_py.power_sum_values(
            self.rows, self.weights, self.exps, self.const, self.inner,
            np.asarray(u, float), *self._den()
        )[0])

    def values(self, points) -> np.ndarray:
        return _BACKENDS[_active].grid_values(
            self.rows, self.weights, self.exps, self.const, self.inner, points, *self._den()
        )

    def value_and_grad(self, U):
        return _kernel_py.power_sum_eval(
            self.rows, self.weights, self.exps, self.const, self.inner, U, *self._den()
        )


@dataclass(frozen=True, eq=False)
class BatchObjective:
    """Arbitrary objective given as ``fun(U) -> (values, gradients)`` on a batch.

    When ``fun`` only returns values (``grad=False``), gradients come from
    central differences.
    """

    fun: Callable
    dim: int
    grad: bool = True
    even: bool = False
    fd_step: float = 1e-7

    def __call__(self, u) -> float:
        return float(self.values(np.atleast_2d(u))[0])

    def values(self, points) -> np.ndarray:
        out = self.fun(np.atleast_2d(points))
        return np.asarray(out[0] if self.grad else out, dtype=float)

    def value_and_grad(self, U):
        U = np.atleast_2d(U)
        if self.grad:
            v, g = self.fun(U)
            return np.asarray(v, float), np.asarray(g, float)
        v = np.asarray(self.fun(U), float)
        G = np.empty_like(U)
        for j in range(U.shape[1]):
            E = np.zeros_like(U)
            E[:, j] = self.fd_step
            G[:, j] = (np.asarray(self.fun(U + E)) - np.asarray(self.fun(U - E))) / (2 * self.fd_step)
        return v, G


@dataclass(frozen=True)
class SphereProblem:
    intrinsic_dim: int
    objective: object
    mode: Literal["min", "max"] = "max"
    config: OptimizerConfig = field(default_factory=OptimizerConfig)
    # Extra starting points, tried in addition to the quasi-random ones.
    starts: np.ndarray | None = None

    def __post_init__(self):
        if self.intrinsic_dim < 1:
            raise InputError("intrinsic_dim must be >= 1")
        if self.mode not in ("min", "max"):
            raise InputError(f"mode must be 'min' or 'max', got {self.mode!r}")
        if getattr(self.objective, "dim", self.intrinsic_dim) != self.intrinsic_dim:
            raise InputError("objective dimension does not match intrinsic_dim")
        if self.starts is not None and np.shape(np.atleast_2d(self.starts))[1] != self.intrinsic_dim:
            raise InputError("extra starts must have intrinsic_dim coordinates")


@dataclass(frozen=True)
class ExtremumResult:
    value: float
    argument: np.ndarray
    certified_margin: float
    iterations_used: int
    grid_value: float | None = None


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(u) > 0)
    if nz.size and u[nz[0]] < 0:
        return -u
    return u


@lru_cache(maxsize=256)
def _halton_directions(k: int, n: int, seed: int) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = qmc.Halton(d=k, scramble=True, seed=np.random.default_rng(seed)).random(n)
    z = _normal.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    nrm = np.linalg.norm(z, axis=1, keepdims=True)
    z = np.where(nrm > 0, z / np.where(nrm > 0, nrm, 1.0), np.eye(k)[0])
    z.setflags(write=False)
    return z


def _starts(k: int, n: int, seed: int, even: bool) -> np.ndarray:
    if even:
        return np.array(_halton_directions(k, n, seed))
    half = max(1, n // 2)
    base = np.array(_halton_directions(k, half, seed))
    return np.vstack([base, -base])[:n] if n > 1 else base


@lru_cache(maxsize=64)
def _grid(k: int, resolution: float, max_points: int, even: bool) -> np.ndarray | None:
    if k == 1:
        g = np.array([[1.0]]) if even else np.array([[1.0], [-1.0]])
    elif k == 2:
        span = math.pi if even else 2 * math.pi
        n = min(max(8, int(math.ceil(span / resolution))), max_points)
        th = np.arange(n) * (span / n)
        g = np.column_stack([np.cos(th), np.sin(th)])
    elif k == 3:
        n = min(max(64, int(math.ceil(4 * math.pi / resolution**2))), max_points)
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        th = math.pi * (3.0 - math.sqrt(5.0)) * i
        g = np.column_stack([r * np.cos(th), r * np.sin(th), z])
    else:
        return None
    g.setflags(write=False)
    return g


def _pick(values: np.ndarray, args: np.ndarray, sign: float) -> int:
    """Index of the best value; exact ties go to the lexicographically smallest argument."""
    best = np.max(sign * values)
    cand = np.flatnonzero(sign * values == best)
    if cand.size == 1:
        return int(cand[0])
    order = np.lexsort(args[cand].T[::-1])
    return int(cand[order[0]])


# A row counts as vanishing at u when |row . u| <= KINK_RTOL * ||row||.
KINK_RTOL = 1e-3


def _polish_kinks(obj: PowerSum, u: np.ndarray, sign: float, cfg: OptimizerConfig):
    """Re-solve with the nearly vanishing rows of exponent < 2 pinned to zero.

    |t|^e with e < 2 has unbounded curvature at t = 0, so ascent zigzags across
    such rows and stalls short of an extremum sitting on them. On the null space
    of those rows the objective is smooth again. Returns ``(value, u)`` or None.
    """
    if obj.inner != 1.0:
        return None
    k = obj.dim
    r = obj.rows @ u
    rn = np.linalg.norm(obj.rows, axis=1)
    act = (obj.exps < 2.0) & (rn > 0) & (np.abs(r) <= KINK_RTOL * rn)
    if not act.any():
        return None
    A = obj.rows[act]
    labels = np.zeros(k, dtype=np.int64) if obj.blocks is None else obj.blocks
    touched = np.stack([np.any(A[:, labels == b] != 0, axis=1) for b in np.unique(labels)])
    # Pinning a row that spans two blocks would not keep the denominator separable.
    if np.any(touched.sum(axis=0) > 1):
        return None
    cols, new_labels = [], []
    for j, b in enumerate(np.unique(labels)):
        idx = np.flatnonzero(labels == b)
        Ab = A[touched[j]][:, idx]
        if Ab.shape[0] == 0:
            Nb = np.eye(idx.size)
        else:
            _, s, vt = np.linalg.svd(Ab)
            rank = int(np.sum(s > 1e-12 * s[0]))
            Nb = vt[rank:].T
        block = np.zeros((k, Nb.shape[1]))
        block[idx] = Nb
        cols.append(block)
        new_labels += [int(b)] * Nb.shape[1]
    N = np.hstack(cols)
    kk = N.shape[1]
    if kk == 0 or kk >= k:
        return None
    blocks = bcoef = None
    if obj.blocks is not None:
        used = sorted(set(new_labels))
        remap = {b: j for j, b in enumerate(used)}
        blocks = [remap[b] for b in new_labels]
        bcoef = obj.bcoef[used]
    sub = PowerSum(obj.rows @ N, obj.weights, obj.exps, obj.const, 1.0, blocks, bcoef, obj.bexp)
    v0 = N.T @ u
    if np.linalg.norm(v0) == 0:
        return None
    res = sphere_extremum(SphereProblem(kk, sub, "max" if sign > 0 else "min",
                                        replace(cfg, starts=1, spectral_quadratic=False), v0[None, :]))
    w = N @ res.argument
    w /= np.linalg.norm(w)
    return float(obj(w)), _canonical_sign(w)


def sphere_extremum(problem: SphereProblem) -> ExtremumResult:
    """Global min or max of ``problem.objective`` on the unit sphere of R^k."""
    cfg = problem.config
    k = problem.intrinsic_dim
    obj = problem.objective
    sign = 1.0 if problem.mode == "max" else -1.0
    even = bool(getattr(obj, "even", False))

    if cfg.spectral_quadratic and isinstance(obj, PowerSum) and obj.quadratic and k > 1:
        evals, evecs = np.linalg.eigh(obj.quadratic_form())
        j = -1 if sign > 0 else 0
        arg = _canonical_sign(evecs[:, j].copy())
        return ExtremumResult(float(obj.const + evals[j]), arg, 0.0, 0, None)

    grid = _grid(k, cfg.grid_resolution, cfg.grid_max_points, even)
    grid_best = None
    starts = _starts(k, cfg.starts, cfg.seed, even) if k > 1 else np.empty((0, 1))
    if problem.starts is not None and k > 1:
        extra = np.atleast_2d(np.asarray(problem.starts, dtype=float))
        nrm = np.linalg.norm(extra, axis=1)
        starts = np.vstack([starts, extra[nrm > 0] / nrm[nrm > 0, None]])
    if grid is not None:
        gv = np.asarray(obj.values(grid), dtype=float)
        gi = _pick(gv, np.asarray(grid), sign)
        grid_best = float(gv[gi])
        starts = np.vstack([starts, grid[gi][None, :]])
    if k == 1:
        pts = np.array([[1.0], [-1.0]])
        vals = np.asarray(obj.values(pts), float)
        i = _pick(vals, pts, sign)
        return ExtremumResult(float(vals[i]), pts[i].copy(), 0.0, 0, grid_best)

    if isinstance(obj, PowerSum):
        kern = _BACKENDS[_active]
        vals, args, its = kern.run_starts(
            obj.rows, obj.weights, obj.exps, obj.const, obj.inner, starts,
            sign, cfg.max_iters, cfg.tol, cfg.step_shrink, *obj._den(),
        )
    else:
        vals, args, its = _kernel_py.run_starts_generic(
            obj.value_and_grad, starts, sign, cfg.max_iters, cfg.tol, cfg.step_shrink
        )
    args = np.asarray(args)
    if even:
        args = np.array([_canonical_sign(a) for a in args])
    i = _pick(np.asarray(vals), args, sign)
    value = float(vals[i])
    if isinstance(obj, PowerSum):
        polished = _polish_kinks(obj, args[i], sign, cfg)
        if polished is not None and sign * (polished[0] - value) > 0:
            value = polished[0]
            args = np.vstack([args, polished[1][None, :]])
            i = args.shape[0] - 1
    margin = 0.0 if grid_best is None else sign * (value - grid_best)
    return ExtremumResult(value, args[i].copy(), float(margin), int(np.sum(its)), grid_best)


def lp_operator_norm(
    matrix,
    p: float,
    out_norm: Literal["lp", "euclidean_over_V"] = "lp",
    volume: float = 1.0,
    config: OptimizerConfig | None = None,
) -> float:
    """Operator norm of ``matrix`` from the l^p sphere of its column space.

    ``out_norm="lp"`` measures outputs in l^p; ``"euclidean_over_V"`` measures
    them with the Euclidean norm divided by ``volume``.
    """
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    if not (p > 1.0 and math.isfinite(p)):
        raise InputError(f"domain exponent must lie in (1, inf), got {p}")
    if out_norm not in ("lp", "euclidean_over_V"):
        raise InputError(f"unknown out_norm {out_norm!r}")
    scale = volume if out_norm == "euclidean_over_V" else 1.0
    out_exp = 2.0 if out_norm == "euclidean_over_V" else p
    if A.size == 0 or not np.any(A):
        return 0.0
    if p == 2.0 and out_exp == 2.0:
        return float(np.linalg.norm(A, 2)) / scale
    if A.shape[1] == 1:
        col = np.abs(A[:, 0])
        return float(np.sum(col**out_exp) ** (1.0 / out_exp)) / scale
    obj = PowerSum(A, 1.0, out_exp, 0.0, 2.0 / p)
    res = sphere_extremum(SphereProblem(A.shape[1], obj, "max", config or OptimizerConfig()))
    return max(res.value, 0.0) ** (1.0 / out_exp) / scale
