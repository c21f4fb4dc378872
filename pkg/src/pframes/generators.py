"""Random instances that satisfy each theorem's hypothesis by construction.

Generators never call the optimizer. They size perturbations against
conservative frame constants obtained from one SVD: for ``y in R^m``,

    m^{min(0, 1 - p/2)} ||y||_2^p <= ||y||_p^p <= m^{max(0, 1 - p/2)} ||y||_2^p,

so ``A >= m^{min(0,1-p/2)} s_min^p / V^p`` and ``B <= m^{max(0,1-p/2)} s_max^p / V^p``
where ``s`` are the singular values of the analysis matrix. Every hypothesis
is met with a relative slack of at least one half, which keeps the checker's
certified margin far above the optimizer tolerance.
"""

from __future__ import annotations

import numpy as np

from .instance import Instance

__all__ = ["P_CHOICES", "P_WEIGHTS", "generate", "cheap_bounds", "GENERATORS"]

P_CHOICES = (1.5, 2.0, 3.0)
P_WEIGHTS = (0.25, 0.5, 0.25)
# Generated frames have condition number at most this (in the 2-norm sense).
MAX_COND = 1e3


def _l(a) -> list:
    return np.asarray(a, dtype=float).tolist()


class _Space:
    """Random anchors and the matching complement basis."""

    def __init__(self, rng: np.random.Generator, dim_max: int, dim: int | None = None,
                 order: int | None = None):
        d = dim if dim is not None else int(rng.integers(2, max(dim_max, 2) + 1))
        n = order if order is not None else int(rng.integers(2, min(3, d) + 1))
        while True:
            A = rng.standard_normal((n - 1, d))
            s = np.linalg.svd(A, compute_uv=False)
            if s[-1] > 1e-3 * s[0]:
                break
        _, _, vt = np.linalg.svd(A, full_matrices=True)
        self.d, self.n, self.anchors = d, n, A
        self.basis = vt[n - 1:].T
        self.k = self.basis.shape[1]
        self.V = float(np.prod(s))

    def members(self, rng, m: int, frame: bool = True) -> np.ndarray:
        """``m`` functionals in ``U``; a well-conditioned frame when ``frame`` and ``m >= k``."""
        while True:
            C = rng.standard_normal((m, self.k)) * np.exp(rng.uniform(-1.0, 1.0))
            if not frame:
                return C @ self.basis.T
            s = np.linalg.svd(C, compute_uv=False)
            if s[-1] > s[0] / MAX_COND:
                return C @ self.basis.T

    def instance(self, p: float, F: np.ndarray, **extra) -> Instance:
        inst = Instance(self.d, self.n, _l(self.anchors), float(p), _l(F))
        for key, val in extra.items():
            setattr(inst, key, val)
        return inst


def cheap_bounds(coeffs: np.ndarray, basis: np.ndarray, V: float, p: float) -> tuple[float, float]:
    """Conservative ``(A_low, B_high)`` for the family ``coeffs`` from singular values."""
    C = coeffs @ basis
    m = C.shape[0]
    s = np.linalg.svd(C, compute_uv=False)
    smin = s[-1] if C.shape[0] >= C.shape[1] else 0.0
    lo = m ** min(0.0, 1.0 - p / 2.0) * smin ** p / V ** p
    hi = m ** max(0.0, 1.0 - p / 2.0) * s[0] ** p / V ** p
    return float(lo), float(hi)


def _p(rng) -> float:
    return float(rng.choice(P_CHOICES, p=P_WEIGHTS))


def _m(rng, k: int, extra: int = 3) -> int:
    return int(rng.integers(k, k + extra + 1))


def _bounded_noise(rng, S: _Space, m: int, p: float, target_B: float) -> np.ndarray:
    """Random family in ``U`` rescaled so its conservative upper bound equals ``target_B``."""
    E = S.members(rng, m, frame=False)
    _, hi = cheap_bounds(E, S.basis, S.V, p)
    if hi <= 0 or target_B <= 0:
        return np.zeros_like(E)
    return E * (target_B / hi) ** (1.0 / p)


def gen_bessel_sum(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    m = int(rng.integers(1, S.k + 4))
    F = S.members(rng, m, frame=False)
    G = -F if rng.random() < 0.05 else S.members(rng, m, frame=False)
    return S.instance(p, F, second_family=_l(G))


def gen_duality(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    return S.instance(p, S.members(rng, _m(rng, S.k)))


def gen_synthesis(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    m = int(rng.integers(1, S.k + 4))
    return S.instance(p, S.members(rng, m, frame=False))


def gen_product(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    Y = _Space(rng, dim_max, dim=int(rng.integers(S.n, dim_max + 1)), order=S.n)
    m = max(_m(rng, S.k), Y.k)
    F = S.members(rng, m)
    G = Y.members(rng, m)
    prod = {"dimension": Y.d, "anchors": _l(Y.anchors), "functionals": _l(G)}
    return S.instance(p, F, product=prod)


def gen_rank_one(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    m = _m(rng, S.k)
    F = S.members(rng, m)
    A, _ = cheap_bounds(F, S.basis, S.V, p)
    R = S.members(rng, 1, frame=False)[0]
    nR = np.linalg.norm(R) / S.V
    share = 0.0 if rng.random() < 0.05 else float(rng.uniform(0.0, 0.9))
    c = rng.standard_normal(m)
    c *= (share * A / nR ** p) ** (1.0 / p) / np.sum(np.abs(c) ** p) ** (1.0 / p)
    return S.instance(p, F, perturbation={"rank_one": {"c": _l(c), "R": _l(R)}})


def gen_confined(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    m = _m(rng, S.k)
    F = S.members(rng, m)
    A, _ = cheap_bounds(F, S.basis, S.V, p)
    alpha = rng.uniform(0.5, 2.0, m)
    beta = rng.uniform(0.5, 2.0, m)
    lam = mu = 0.5 * 2.0 ** (-p)
    # alpha_i T_i - beta_i R_i = -eps E_i with eps^p B_E <= lam M1^p A / 2.
    E = _bounded_noise(rng, S, m, p, 0.5 * lam * alpha.min() ** p * A * rng.uniform(0.0, 1.0))
    R = (alpha / beta)[:, None] * F + E / beta[:, None]
    pert = {"confined": {"alpha": _l(alpha), "beta": _l(beta), "lambda": lam, "mu": mu}}
    return S.instance(p, F, second_family=_l(R), perturbation=pert)


def _stability(rng, dim_max, simple: bool):
    S = _Space(rng, dim_max)
    p = _p(rng)
    m = _m(rng, S.k)
    F = S.members(rng, m)
    A, _ = cheap_bounds(F, S.basis, S.V, p)
    alpha = 0.0 if simple else float(rng.uniform(0.0, 0.5))
    beta = float(rng.uniform(0.05, 0.9)) * (1.0 - alpha) * A
    # sum |E x|^p <= B_E ||x||^p <= (alpha A + beta) ||x||^p / 2.
    E = _bounded_noise(rng, S, m, p, 0.5 * (alpha * A + beta) * rng.uniform(0.0, 1.0))
    pert = {"stability": {"alpha": alpha, "beta": beta}}
    return S.instance(p, F, second_family=_l(F + E), perturbation=pert)


def gen_stability(rng, dim_max):
    return _stability(rng, dim_max, simple=False)


def gen_stability_simple(rng, dim_max):
    return _stability(rng, dim_max, simple=True)


def gen_equivalence(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    m = _m(rng, S.k)
    F = S.members(rng, m)
    AF, _ = cheap_bounds(F, S.basis, S.V, p)
    while True:
        E = _bounded_noise(rng, S, m, p, float(rng.uniform(0.01, 0.5)) * AF)
        R = F + E
        AR, _ = cheap_bounds(R, S.basis, S.V, p)
        if AR > 0:
            break
    _, BE = cheap_bounds(E, S.basis, S.V, p)
    M = 2.0 * BE / min(AF, AR)
    if M <= 0:
        M = 1.0
    # The min-combined converse constant is reported by the checker
    # but never asserted by generated instances.
    pert = {"equivalence": {"M": float(M), "combiner": "sound_max"}}
    return S.instance(p, F, second_family=_l(R), perturbation=pert)


def gen_finite_sum(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    l = int(rng.integers(1, 4))
    m = _m(rng, S.k)
    while True:
        fams = [S.members(rng, m) for _ in range(l)]
        alpha = rng.uniform(0.5, 1.5, l) * rng.choice([-1.0, 1.0], l)
        comb = sum(a * G for a, G in zip(alpha, fams))
        Ac, _ = cheap_bounds(comb, S.basis, S.V, p)
        if Ac > 0:
            break
    mi = int(rng.integers(1, l + 1))
    _, Bm = cheap_bounds(fams[mi - 1], S.basis, S.V, p)
    beta = 0.5 * Ac / Bm
    pert = {"finite_sum": {"coefficients": _l(alpha), "m": mi, "beta": float(beta),
                           "extra_families": [_l(G) for G in fams[1:]]}}
    return S.instance(p, fams[0], perturbation=pert)


def gen_operator_sum(rng, dim_max):
    S = _Space(rng, dim_max)
    p = _p(rng)
    l = int(rng.integers(1, 4))
    m = _m(rng, S.k)
    lam = float(rng.uniform(0.05, 1.0))
    while True:
        Ts = [S.members(rng, m) for _ in range(l)]
        Rs = []
        for T in Ts:
            A, _ = cheap_bounds(T, S.basis, S.V, p)
            Rs.append(T + _bounded_noise(rng, S, m, p, 0.5 * lam * A * rng.uniform(0.0, 1.0)))
        CR = sum(Rs) @ S.basis
        s = np.linalg.svd(CR, compute_uv=False)
        if s[-1] > s[0] / MAX_COND:
            break
    mi = int(rng.integers(1, l + 1))
    Q = (Ts[mi - 1] @ S.basis) @ np.linalg.pinv(CR)
    pert = {"operator_sum": {"Q": _l(Q), "lambda": lam, "m": mi,
                             "extra_families": [_l(T) for T in Ts[1:]],
                             "base_families": [_l(R) for R in Rs]}}
    return S.instance(p, Ts[0], perturbation=pert)


GENERATORS = {
    "thm3.4": gen_bessel_sum,
    "thm3.8": gen_duality,
    "thm3.9": gen_synthesis,
    "thm3.11": gen_product,
    "thm4.1": gen_rank_one,
    "thm4.2": gen_confined,
    "thm5.1": gen_stability,
    "cor5.2": gen_stability_simple,
    "thm5.3": gen_equivalence,
    "thm5.4": gen_finite_sum,
    "thm5.5": gen_operator_sum,
}


def generate(theorem_id: str, rng: np.random.Generator, dim_max: int = 5) -> Instance:
    """A random instance for ``theorem_id`` with ambient dimension at most ``dim_max``."""
    if dim_max < 2:
        raise ValueError("dim_max must be at least 2")
    return GENERATORS[theorem_id](rng, dim_max)
