"""Pure numpy implementation of the sphere-ascent kernel.

Mirrors ``_kernel.pyx`` step for step; all starts advance together as one
batch. The per-start state machine is:

    trial = normalize(u + sign * h * pg / |pg|)
    accept if sign * (f(trial) - f(u)) >= ARMIJO * h * |pg|, then take the
        Barzilai-Borwein angle h = |pg'| * |s|^2 / |s . (pg' - pg)|, s = trial - u
        (2h when the denominator vanishes), capped at H_MAX
    else h *= shrink
    stop when |pg| <= tol * (1 + |f|), h < H_MIN, max_iters trials are spent,
    or a rejected trial changed f only at roundoff level

where ``pg`` is the tangential (projected) gradient at ``u``.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

ARMIJO = 1e-4
H_INIT = 0.25
H_MAX = 1.0
H_MIN = 1e-15
# |u_i| floor inside the derivative of sign(u)|u|^s for s < 1.
INNER_FLOOR = 1e-14
# A rejected trial whose value moved by less than this (relative) ends the start.
ROUNDOFF = 8.0 * np.finfo(float).eps


def _block_norms(U, blocks, nb):
    sq = np.zeros((U.shape[0], nb))
    np.add.at(sq.T, blocks, (U * U).T)
    return np.sqrt(sq)


def power_sum_eval(rows, weights, exps, const, inner, U, blocks=None, bcoef=None, bexp=2.0):
    """Batched value and ambient gradient of ``const + sum_r w_r |rows_r . phi(u)|^e_r``.

    With ``blocks`` given, the sum is divided by
    ``D(u) = sum_b bcoef[b] * ||u restricted to block b||^bexp``.
    """
    U = np.atleast_2d(U)
    if inner == 1.0:
        phi = U
    else:
        phi = np.sign(U) * np.abs(U) ** inner
    Y = phi @ rows.T  # (S, r)
    aY = np.abs(Y)
    pm1 = aY ** (exps - 1.0)
    vals = const + (pm1 * aY) @ weights
    coef = weights * exps * pm1 * np.sign(Y)
    G = coef @ rows
    if inner != 1.0:
        G = G * (inner * np.maximum(np.abs(U), INNER_FLOOR) ** (inner - 1.0))
    if blocks is None:
        return vals, G
    blocks = np.asarray(blocks)
    bcoef = np.asarray(bcoef, dtype=float)
    bn = _block_norms(U, blocks, bcoef.shape[0])
    D = (bn ** bexp) @ bcoef
    with np.errstate(divide="ignore", invalid="ignore"):
        dcoef = np.where(bn > 0, bcoef * bexp * bn ** (bexp - 2.0), 0.0)
    dD = dcoef[:, blocks] * U
    G = (G - (vals / D)[:, None] * dD) / D[:, None]
    return vals / D, G


def power_sum_values(rows, weights, exps, const, inner, points, blocks=None, bcoef=None, bexp=2.0):
    U = np.atleast_2d(points)
    phi = U if inner == 1.0 else np.sign(U) * np.abs(U) ** inner
    vals = const + (np.abs(phi @ rows.T) ** exps) @ weights
    if blocks is None:
        return vals
    bcoef = np.asarray(bcoef, dtype=float)
    bn = _block_norms(U, np.asarray(blocks), bcoef.shape[0])
    return vals / ((bn ** bexp) @ bcoef)


def _tangent(U, G):
    PG = G - np.sum(G * U, axis=1, keepdims=True) * U
    return PG, np.linalg.norm(PG, axis=1)


def run_starts_generic(evaluate, starts, sign, max_iters, tol, shrink):
    """Run the ascent state machine for every start using a batched ``evaluate``.

    Returns ``(values, arguments, iterations)``.
    """
    U = np.array(starts, dtype=float)
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    S = U.shape[0]
    f, G = evaluate(U)
    f = np.array(f, dtype=float)
    if not np.all(np.isfinite(f)):
        bad = int(np.argmin(np.isfinite(f)))
        raise NumericError("objective is not finite at a start point", U[bad].copy())
    PG, gn = _tangent(U, G)
    h = np.full(S, H_INIT)
    iters = np.zeros(S, dtype=np.int64)
    active = np.ones(S, dtype=bool)
    while True:
        active &= (iters < max_iters) & (gn > tol * (1.0 + np.abs(f))) & (h >= H_MIN)
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        step = (sign * h[idx] / gn[idx])[:, None]
        T = U[idx] + step * PG[idx]
        T /= np.linalg.norm(T, axis=1, keepdims=True)
        ft, Gt = evaluate(T)
        iters[idx] += 1
        if not np.all(np.isfinite(ft)):
            bad = int(np.argmin(np.isfinite(ft)))
            raise NumericError("objective is not finite", T[bad].copy())
        ok = sign * (ft - f[idx]) >= ARMIJO * h[idx] * gn[idx]
        acc = idx[ok]
        rej = idx[~ok]
        flat = np.abs(ft - f[idx]) <= ROUNDOFF * (1.0 + np.abs(f[idx]))
        active[idx[~ok & flat]] = False
        if acc.size:
            Ta = T[ok]
            PGa, gna = _tangent(Ta, Gt[ok])
            D = Ta - U[acc]
            ss = np.sum(D * D, axis=1)
            sy = np.abs(np.sum(D * (PGa - PG[acc]), axis=1))
            safe = np.where(sy > 0, sy, 1.0)
            hn = np.where(sy > 0, ss / safe * gna, 2.0 * h[acc])
            U[acc] = Ta
            f[acc] = ft[ok]
            PG[acc], gn[acc] = PGa, gna
            h[acc] = np.minimum(hn, H_MAX)
        h[rej] *= shrink
    return f, U, iters


def run_starts(rows, weights, exps, const, inner, starts, sign, max_iters, tol, shrink,
               blocks=None, bcoef=None, bexp=2.0):
    def evaluate(U):
        return power_sum_eval(rows, weights, exps, const, inner, U, blocks, bcoef, bexp)

    return run_starts_generic(evaluate, starts, sign, max_iters, tol, shrink)


def grid_values(rows, weights, exps, const, inner, points, blocks=None, bcoef=None, bexp=2.0):
    return power_sum_values(rows, weights, exps, const, inner, points, blocks, bcoef, bexp)
