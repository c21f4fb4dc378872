"""Checkers for the quantitative frame theorems.

Each checker evaluates the theorem's hypothesis on a concrete instance,
computes the constants the theorem predicts, recomputes the optimal bounds
of the concluded family, and compares. "For all x" hypotheses of the form
``L(x) <= R(x)`` with ``L, R`` power sums in the analysis coefficients are
decided by maximizing ``L - R`` over the unit sphere of the complement.

Hypothesis outcomes, with ``margin = -max(L - R) / scale``:

* ``margin >= 10 * tol``: holds, certified.
* ``L - R`` vanishes identically at roundoff level: holds with equality.
* ``margin <= -10 * tol``: fails; the theorem says nothing.
* anything else: inconclusive.

Verdict status is ``"pass"``, ``"fail"`` (a sound violation of a conclusion),
or ``"inconclusive"`` (hypothesis failed, infeasible, or undecided).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import InputError, NotAFrameError
from .frames import (
    FrameBounds,
    PFrameFamily,
    canonical_dual,
    cartesian_product,
    is_p_frame,
    linear_combination,
    optimal_bounds,
    product_bounds,
    q_frame_bounds,
    reconstruct,
    sum_families,
    synthesis_norm,
)
from .functionals import BFunctional, functional_norm
from .nspace import project_complement
from .optimizer import OptimizerConfig, PowerSum, SphereProblem, lp_operator_norm, sphere_extremum

__all__ = [
    "THEOREM_IDS",
    "RankOnePerturbation",
    "ConfinedPerturbation",
    "StabilitySpec",
    "EquivalenceSpec",
    "FiniteSumSpec",
    "OperatorSumSpec",
    "HypothesisResult",
    "TheoremVerdict",
    "decide_inequality",
    "two_power_gap",
    "check_bessel_sum",
    "check_duality",
    "check_synthesis",
    "check_product",
    "check_rank_one",
    "check_confined",
    "check_stability",
    "check_stability_simple",
    "check_equivalence",
    "check_finite_sum",
    "check_operator_sum",
]

THEOREM_IDS = (
    "thm3.4", "thm3.8", "thm3.9", "thm3.11", "thm4.1", "thm4.2",
    "thm5.1", "cor5.2", "thm5.3", "thm5.4", "thm5.5",
)

# Relative tolerances of the conclusions.
BOUND_RTOL = 1e-6
BESSEL_RTOL = 1e-8
RESIDUAL_TOL = 1e-9
INTERTWINE_TOL = 1e-8
# |L - R| below this fraction of the scale counts as identically zero.
EQUALITY_BAND = 1e-12


# --- specs ------------------------------------------------------------------


@dataclass(frozen=True)
class RankOnePerturbation:
    c: np.ndarray
    R: BFunctional

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise InputError("c must be a finite list of scalars")
        if not np.any(self.R.coeffs):
            raise InputError("R must be a nonzero functional")
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class ConfinedPerturbation:
    alpha: np.ndarray
    beta: np.ndarray
    lam: float
    mu: float

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        b = np.asarray(self.beta, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise InputError("alpha and beta must be lists of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InputError("alpha and beta must be finite")
        if np.any(a <= 0) or np.any(b <= 0):
            raise InputError("alpha and beta must be positively confined")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    def validate(self, p: float) -> None:
        cap = 2.0 ** (-p)
        if not (0.0 <= self.lam < cap and 0.0 <= self.mu < cap):
            raise InputError(f"lambda and mu must lie in [0, 2^-p) = [0, {cap:.6g})")

    @property
    def M(self) -> float:
        return float(self.beta.min())

    @property
    def N(self) -> float:
        return float(self.alpha.max())

    @property
    def M1(self) -> float:
        return float(self.alpha.min())

    @property
    def N1(self) -> float:
        return float(self.beta.max())


@dataclass(frozen=True)
class StabilitySpec:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha >= 0 and self.beta >= 0):
            raise InputError("alpha and beta must be nonnegative")


@dataclass(frozen=True)
class EquivalenceSpec:
    M: float
    combiner: Literal["paper_min", "sound_max"] = "sound_max"

    def __post_init__(self):
        if not self.M > 0:
            raise InputError("M must be positive")
        if self.combiner not in ("paper_min", "sound_max"):
            raise InputError(f"unknown combiner {self.combiner!r}")


@dataclass(frozen=True)
class FiniteSumSpec:
    coefficients: tuple[float, ...]
    m_index: int
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(a) for a in self.coefficients))
        if len(self.coefficients) < 1:
            raise InputError("need at least one coefficient")
        if not 1 <= self.m_index <= len(self.coefficients):
            raise InputError("m_index must lie in 1..l")
        if not self.beta > 0:
            raise InputError("beta must be positive")


@dataclass(frozen=True)
class OperatorSumSpec:
    Q: np.ndarray
    lam: float
    m_index: int = 1

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or not np.all(np.isfinite(Q)):
            raise InputError("Q must be a finite square matrix")
        if not self.lam >= 0:
            raise InputError("lambda must be nonnegative")
        object.__setattr__(self, "Q", Q)


# --- verdicts ---------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisResult:
    holds: bool | None  # None: undecided
    margin: float
    exact: bool = False

    @property
    def status(self) -> str:
        if self.holds is None:
            return "inconclusive"
        return "holds" if self.holds else "fails"


@dataclass
class TheoremVerdict:
    theorem_id: str
    hypothesis_holds: bool
    hypothesis_margin: float | None
    predicted_lower: float | None
    predicted_upper: float | None
    empirical: FrameBounds | None
    passed: bool
    status: Literal["pass", "fail", "inconclusive"]
    notes: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        emp = self.empirical
        return {
            "theorem_id": self.theorem_id,
            "hypothesis": {"holds": self.hypothesis_holds, "margin": _num(self.hypothesis_margin)},
            "predicted": {"lower": _num(self.predicted_lower), "upper": _num(self.predicted_upper)},
            "empirical": {
                "lower": None if emp is None else _num(emp.lower),
                "upper": None if emp is None else _num(emp.upper),
            },
            "passed": self.passed,
            "status": self.status,
            "notes": self.notes,
            "details": _jsonable(self.details),
        }


def _num(v):
    if v is None:
        return None
    v = float(v) + 0.0  # folds -0.0 into 0.0
    return v if math.isfinite(v) else str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _verdict(tid, hyp: HypothesisResult | bool, lo, hi, emp, ok: bool, notes="", **details):
    if isinstance(hyp, HypothesisResult):
        holds, margin = hyp.holds is True, hyp.margin
        if hyp.exact:
            details.setdefault("hypothesis_exact", True)
    else:
        holds, margin = bool(hyp), None
    if not holds:
        status, passed = "inconclusive", False
        if not notes:
            notes = "hypothesis not established; the theorem makes no claim"
    else:
        ok = bool(ok)
        status, passed = ("pass" if ok else "fail"), ok
    return TheoremVerdict(tid, holds, margin, lo, hi, emp, passed, status, notes, details)


def _hyp_merge(*hs: HypothesisResult) -> HypothesisResult:
    """Conjunction: fails if any fails, undecided if any is undecided."""
    margin = min(h.margin for h in hs)
    if any(h.holds is False for h in hs):
        return HypothesisResult(False, margin)
    if any(h.holds is None for h in hs):
        return HypothesisResult(None, margin)
    return HypothesisResult(True, margin, all(h.exact for h in hs))


# --- shared machinery -------------------------------------------------------


def _config(config: OptimizerConfig | None) -> OptimizerConfig:
    return config or OptimizerConfig()


def _rows(F: PFrameFamily) -> np.ndarray:
    """Analysis rows on the seminorm-1 sphere: ``T_i(B_U u / V) = (C u)_i / V``."""
    return F.analysis_matrix / F.space.volume


def decide_inequality(terms, p: float, k: int, config: OptimizerConfig | None = None,
                      const: float = 0.0) -> HypothesisResult:
    """Decide ``sum_j w_j sum_i |rows_j[i] . u|^p + const <= 0`` for every unit ``u`` in R^k.

    ``terms`` is a list of ``(w_j, rows_j)``; positive weights form the left
    side and negative weights the right side of the original inequality.
    """
    cfg = _config(config)
    obj = PowerSum.of([(w, rows, p) for w, rows in terms], const=const)
    scale = max(obj.scale(), np.finfo(float).tiny)
    res = sphere_extremum(SphereProblem(k, obj, "max", cfg))
    margin = -res.value / scale
    thresh = 10.0 * cfg.tol
    if margin >= thresh:
        return HypothesisResult(True, margin)
    if margin <= -thresh:
        return HypothesisResult(False, margin)
    if margin >= -EQUALITY_BAND:
        low = sphere_extremum(SphereProblem(k, obj, "min", cfg))
        if low.value / scale >= -EQUALITY_BAND:
            return HypothesisResult(True, margin, exact=True)
    return HypothesisResult(None, margin)


def two_power_gap(a: float, b: float, p: float) -> float:
    """``2^p (|a|^p + |b|^p) - |a + b|^p``, nonnegative for p >= 1."""
    return 2.0 ** p * (abs(a) ** p + abs(b) ** p) - abs(a + b) ** p


def _le(value: float, bound: float, rtol: float) -> bool:
    return value <= bound * (1.0 + rtol) + 0.0


def _ge(value: float, bound: float, rtol: float) -> bool:
    return value >= bound * (1.0 - rtol)


def _same_setting(families: Sequence[PFrameFamily]) -> None:
    F0 = families[0]
    for G in families[1:]:
        if G.space is not F0.space or G.p != F0.p or G.m != F0.m:
            raise InputError("families must share space, exponent and cardinality")


# --- sums, duals, synthesis, products ---------------------------------------


def check_bessel_sum(F: PFrameFamily, G: PFrameFamily,
                     config: OptimizerConfig | None = None) -> TheoremVerdict:
    """Member-wise sum of two Bessel families is Bessel with bound ``2^p max(B_F, B_G)``."""
    _same_setting([F, G])
    bF, bG = optimal_bounds(F, config=config), optimal_bounds(G, config=config)
    bS = optimal_bounds(sum_families(F, G), config=config)
    pred = 2.0 ** F.p * max(bF.upper, bG.upper)
    ok = _le(bS.upper, pred, BESSEL_RTOL)
    return _verdict("thm3.4", True, None, pred, bS, ok,
                    bessel_first=bF.upper, bessel_second=bG.upper)


def check_duality(F: PFrameFamily, config: OptimizerConfig | None = None,
                  seed: int = 0, samples: int = 16) -> TheoremVerdict:
    """Canonical dual of a p-frame: reconstruction, both duality floors, functional identity."""
    bF = optimal_bounds(F, config=config)
    if not is_p_frame(F, bF):
        raise NotAFrameError("duality checks need a p-frame")
    D = canonical_dual(F, bF)
    bD = q_frame_bounds(D, F.space, config=config)
    p, q = F.p, F.q
    space = F.space
    rng = np.random.default_rng(np.random.SeedSequence([seed, 38]))

    # (a) reconstruction on a spanning set of U plus random ambient points.
    X = np.vstack([space.complement_basis.T, rng.standard_normal((samples, space.dimension))])
    recon = 0.0
    for x in X:
        target = project_complement(space, x)
        err = np.linalg.norm(reconstruct(F, D, x) - target)
        recon = max(recon, err / max(np.linalg.norm(x), 1.0))

    # (b) lower p-frame floor from the dual's upper q-bound.
    floor_p = bD.upper ** (-p / q) if bD.upper > 0 else math.inf
    ok_b = _ge(bF.lower, floor_p, BOUND_RTOL)
    # (c) lower q-frame floor of the dual from F's upper bound.
    floor_q = bF.upper ** (-q / p)
    ok_c = _ge(bD.lower, floor_q, BOUND_RTOL)

    # (d) R = sum_i R(f_i) T_i for random functionals R in U.
    Rs = rng.standard_normal((samples, space.complement_dim)) @ space.complement_basis.T
    ident = 0.0
    for t in Rs:
        back = (D.vectors @ t) @ F.coeffs
        ident = max(ident, np.linalg.norm(back - t) / max(np.linalg.norm(t), 1.0))

    ok_a, ok_d = recon <= RESIDUAL_TOL, ident <= RESIDUAL_TOL
    ok = ok_a and ok_b and ok_c and ok_d
    return _verdict(
        "thm3.8", True, floor_p, None, bF, ok,
        reconstruction_residual=recon, lower_floor_p=floor_p, lower_floor_q=floor_q,
        dual_bounds=[bD.lower, bD.upper], identity_residual=ident,
        subchecks={"reconstruction": ok_a, "lower_p": ok_b, "lower_q": ok_c, "identity": ok_d},
    )


def check_synthesis(F: PFrameFamily, config: OptimizerConfig | None = None) -> TheoremVerdict:
    """``||synthesis||^p`` equals the optimal Bessel bound, both directions at 1e-6."""
    b = optimal_bounds(F, config=config)
    s = synthesis_norm(F, config)
    sp = s ** F.p
    ok = _le(sp, b.upper, BOUND_RTOL) and _le(b.upper, sp, BOUND_RTOL)
    return _verdict("thm3.9", True, None, b.upper, b, ok,
                    synthesis_norm=s, synthesis_norm_p=sp)


def check_product(F: PFrameFamily, G: PFrameFamily,
                  config: OptimizerConfig | None = None) -> TheoremVerdict:
    """Product family has bounds within ``[min(A, C), max(B, D)]``; equality is reported."""
    P = cartesian_product(F, G)
    bF, bG = optimal_bounds(F, config=config), optimal_bounds(G, config=config)
    bP = product_bounds(P, config=config)
    lo, hi = min(bF.lower, bG.lower), max(bF.upper, bG.upper)
    ok = _ge(bP.lower, lo, BOUND_RTOL) and _le(bP.upper, hi, BOUND_RTOL)
    tol = BOUND_RTOL * max(hi, np.finfo(float).tiny)
    eq_lo, eq_hi = abs(bP.lower - lo) <= tol, abs(bP.upper - hi) <= tol
    return _verdict("thm3.11", True, lo, hi, bP, ok,
                    factor_bounds=[[bF.lower, bF.upper], [bG.lower, bG.upper]],
                    equality={"lower": eq_lo, "upper": eq_hi})


# --- perturbations ------------------------------------------------------------


def check_rank_one(F: PFrameFamily, P: RankOnePerturbation,
                   config: OptimizerConfig | None = None) -> TheoremVerdict:
    """``{T_i + c_i R}`` stays a frame when ``sum |c_i|^p < A / ||R||^p``."""
    if P.c.shape[0] != F.m:
        raise InputError(f"c has {P.c.shape[0]} entries, family has {F.m}")
    if P.R.space is not F.space:
        raise InputError("R acts on a different space")
    p = F.p
    b = optimal_bounds(F, config=config)
    nR = functional_norm(P.R)
    cap = b.lower / nR ** p
    sc = float(np.sum(np.abs(P.c) ** p))
    rel = (cap - sc) / cap if cap > 0 else -math.inf
    thresh = 10.0 * _config(config).tol
    if rel >= thresh:
        hyp = HypothesisResult(True, cap - sc)
    elif rel <= -thresh:
        hyp = HypothesisResult(False, cap - sc)
    else:
        hyp = HypothesisResult(None, cap - sc)
    pert = PFrameFamily(F.space, F.coeffs + np.outer(P.c, P.R.coeffs), p)
    bP = optimal_bounds(pert, config=config)
    # Minkowski on l^p gives a two-sided envelope for the perturbed sums.
    shift = sc ** (1.0 / p) * nR
    floor = max(b.lower ** (1.0 / p) - shift, 0.0) ** p
    ceil = (b.upper ** (1.0 / p) + shift) ** p
    frame = is_p_frame(pert, bP)
    ok = frame and _ge(bP.lower, floor, BOUND_RTOL) and _le(bP.upper, ceil, BOUND_RTOL)
    return _verdict("thm4.1", hyp, floor, ceil, bP, ok,
                    lower_bound_A=b.lower, R_norm=nR, c_p_sum=sc, is_frame=frame)


def check_confined(F: PFrameFamily, R: PFrameFamily, spec: ConfinedPerturbation,
                   config: OptimizerConfig | None = None) -> TheoremVerdict:
    """Perturbation by positively confined weights, with envelope from both directions."""
    _same_setting([F, R])
    p = F.p
    spec.validate(p)
    if spec.alpha.shape[0] != F.m:
        raise InputError("alpha and beta need one entry per member")
    CT, CR = _rows(F), _rows(R)
    aT, bR = spec.alpha[:, None] * CT, spec.beta[:, None] * CR
    hyp = decide_inequality(
        [(1.0, aT - bR), (-spec.lam, aT), (-spec.mu, bR)], p, CT.shape[1], config
    )
    bF, bRb = optimal_bounds(F, config=config), optimal_bounds(R, config=config)
    tp = 2.0 ** p
    lo = (1 - tp * spec.lam) * spec.M1 ** p * bF.lower / (tp * (1 + spec.mu) * spec.N1 ** p)
    hi = tp * (1 + spec.lam) * spec.N ** p * bF.upper / ((1 - tp * spec.mu) * spec.M ** p)
    ok = _ge(bRb.lower, lo, BOUND_RTOL) and _le(bRb.upper, hi, BOUND_RTOL)
    return _verdict("thm4.2", hyp, lo, hi, bRb, ok, base_bounds=[bF.lower, bF.upper])


def check_stability(F: PFrameFamily, R: PFrameFamily, spec: StabilitySpec,
                    config: OptimizerConfig | None = None, theorem_id: str = "thm5.1") -> TheoremVerdict:
    """Stability under ``sum |T_i - R_i|^p <= alpha sum |T_i|^p + beta ||x||^p``."""
    _same_setting([F, R])
    p = F.p
    bF = optimal_bounds(F, config=config)
    A, B = bF.lower, bF.upper
    s = spec.alpha + spec.beta / A if A > 0 else math.inf
    if not s < 1.0:
        return TheoremVerdict(
            theorem_id, False, None, None, None, None, False, "inconclusive",
            "hypothesis infeasible: alpha + beta/A >= 1", {"alpha_plus_beta_over_A": s},
        )
    CT, CR = _rows(F), _rows(R)
    hyp = decide_inequality([(1.0, CT - CR), (-spec.alpha, CT)], p, CT.shape[1], config,
                            const=-spec.beta)
    bR = optimal_bounds(R, config=config)
    lo = (1.0 - s ** (1.0 / p)) ** p * A
    hi = ((spec.alpha * B + spec.beta) ** (1.0 / p) + B ** (1.0 / p)) ** p
    ok = _ge(bR.lower, lo, BOUND_RTOL) and _le(bR.upper, hi, BOUND_RTOL)
    return _verdict(theorem_id, hyp, lo, hi, bR, ok, base_bounds=[A, B],
                    alpha_plus_beta_over_A=s)


def check_stability_simple(F: PFrameFamily, R: PFrameFamily, R_const: float,
                           config: OptimizerConfig | None = None) -> TheoremVerdict:
    """Special case ``alpha = 0``: ``sum |T_i - R_i|^p <= R ||x||^p`` with ``0 < R < A``."""
    if not R_const > 0:
        raise InputError("the perturbation constant must be positive")
    return check_stability(F, R, StabilitySpec(0.0, R_const), config, theorem_id="cor5.2")


def check_equivalence(F: PFrameFamily, R: PFrameFamily, spec: EquivalenceSpec,
                      config: OptimizerConfig | None = None) -> TheoremVerdict:
    """Two-sided domination ``sum |T_i - R_i|^p <= M min(S_T, S_R)`` in both directions."""
    _same_setting([F, R])
    p = F.p
    CT, CR = _rows(F), _rows(R)
    k = CT.shape[1]
    diff = CT - CR

    def domination(M):
        return _hyp_merge(
            decide_inequality([(1.0, diff), (-M, CT)], p, k, config),
            decide_inequality([(1.0, diff), (-M, CR)], p, k, config),
        )

    hyp = domination(spec.M)
    bF, bR = optimal_bounds(F, config=config), optimal_bounds(R, config=config)
    root = spec.M ** (1.0 / p) + 1.0
    lo, hi = bF.lower / root ** p, root ** p * bF.upper
    ok_forward = _ge(bR.lower, lo, BOUND_RTOL) and _le(bR.upper, hi, BOUND_RTOL)

    # Converse: constants from the empirical bounds (A, B) of F and (C, D) of R.
    A, B, C, D = bF.lower, bF.upper, bR.lower, bR.upper
    converse: dict = {}
    ok_converse = True
    if A > 0 and C > 0:
        M1 = (1.0 + (D / A) ** (1.0 / p)) ** p
        M2 = (1.0 + (B / C) ** (1.0 / p)) ** p
        for name, Mc in (("paper_min", min(M1, M2)), ("sound_max", max(M1, M2))):
            h = domination(Mc)
            converse[name] = {"M": Mc, "holds": h.status, "margin": h.margin}
        ok_converse = converse[spec.combiner]["holds"] != "fails"
    else:
        converse["skipped"] = "one family has a zero lower bound"
    notes = "" if ok_converse else f"converse domination fails with the {spec.combiner} constant"
    v = _verdict("thm5.3", hyp, lo, hi, bR, ok_forward and ok_converse, notes,
                 base_bounds=[A, B], converse=converse, combiner=spec.combiner)
    if not hyp.holds and not ok_converse:
        # The converse needs no hypothesis beyond both families being frames.
        v.status, v.passed = "fail", False
    return v


def _sum_upper(Bs: Sequence[float], l: int, p: float, factor: float) -> tuple[float, float]:
    paper = factor * float(np.sum(Bs))
    return paper, l ** (p - 1.0) * paper


def check_finite_sum(families: Sequence[PFrameFamily], spec: FiniteSumSpec,
                     config: OptimizerConfig | None = None) -> TheoremVerdict:
    """``{sum_k alpha_k T_{k,i}}`` under ``beta sum |T_{m,i}|^p <= sum |sum_k alpha_k T_{k,i}|^p``."""
    if len(families) != len(spec.coefficients):
        raise InputError("need one coefficient per family")
    _same_setting(list(families))
    p = families[0].p
    l = len(families)
    Tm = families[spec.m_index - 1]
    comb = linear_combination(families, spec.coefficients)
    hyp = decide_inequality([(spec.beta, _rows(Tm)), (-1.0, _rows(comb))], p,
                            Tm.space.complement_dim, config)
    bounds = [optimal_bounds(G, config=config) for G in families]
    bC = optimal_bounds(comb, config=config)
    lo = bounds[spec.m_index - 1].lower * spec.beta
    amax = max(abs(a) for a in spec.coefficients) ** p
    paper_hi, sound_hi = _sum_upper([b.upper for b in bounds], l, p, amax)
    ok = _ge(bC.lower, lo, BOUND_RTOL) and _le(bC.upper, sound_hi, BOUND_RTOL)
    return _verdict("thm5.4", hyp, lo, sound_hi, bC, ok,
                    paper_upper=paper_hi, paper_upper_respected=_le(bC.upper, paper_hi, BOUND_RTOL))


def check_operator_sum(families: Sequence[PFrameFamily], perturbed: Sequence[PFrameFamily],
                       spec: OperatorSumSpec, config: OptimizerConfig | None = None) -> TheoremVerdict:
    """``{sum_k R_{k,i}}`` when ``Q`` maps its analysis sequence onto that of ``T_m``."""
    l = len(families)
    if l < 1 or len(perturbed) != l:
        raise InputError("need l frames and l perturbations")
    _same_setting(list(families) + list(perturbed))
    if not 1 <= spec.m_index <= l:
        raise InputError("m_index must lie in 1..l")
    T0 = families[0]
    p, m = T0.p, T0.m
    if spec.Q.shape != (m, m):
        raise InputError(f"Q must be {m} x {m}")
    comb = PFrameFamily(T0.space, sum(R.coeffs for R in perturbed), p)
    CTm = families[spec.m_index - 1].analysis_matrix
    resid = np.linalg.norm(spec.Q @ comb.analysis_matrix - CTm)
    resid /= max(np.linalg.norm(CTm), 1.0)
    if resid > INTERTWINE_TOL:
        return TheoremVerdict(
            "thm5.5", False, None, None, None, None, False, "inconclusive",
            "hypothesis infeasible: Q does not intertwine the analysis maps",
            {"intertwining_residual": float(resid)},
        )
    k = T0.space.complement_dim
    hyp = _hyp_merge(*[
        decide_inequality([(1.0, _rows(T) - _rows(R)), (-spec.lam, _rows(T))], p, k, config)
        for T, R in zip(families, perturbed)
    ])
    bounds = [optimal_bounds(T, config=config) for T in families]
    bC = optimal_bounds(comb, config=config)
    qn = lp_operator_norm(spec.Q, p, "lp", 1.0, config)
    lo = bounds[spec.m_index - 1].lower / qn ** p if qn > 0 else math.inf
    paper_hi, sound_hi = _sum_upper([b.upper for b in bounds], l, p,
                                    (1.0 + spec.lam ** (1.0 / p)) ** p)
    ok = _ge(bC.lower, lo, BOUND_RTOL) and _le(bC.upper, sound_hi, BOUND_RTOL)
    return _verdict("thm5.5", hyp, lo, sound_hi, bC, ok,
                    intertwining_residual=float(resid), Q_norm=qn, paper_upper=paper_hi,
                    paper_upper_respected=_le(bC.upper, paper_hi, BOUND_RTOL))
