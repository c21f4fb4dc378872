"""Build library objects from instances, dispatch checkers, run fuzz campaigns."""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import theorems as th
from .errors import InputError
from .frames import PFrameFamily
from .functionals import make_functional
from .generators import generate
from .instance import Instance, parse_instance
from .nspace import NSpace
from .optimizer import OptimizerConfig

__all__ = ["Built", "build", "config_from_run", "run_check", "FuzzOutcome", "fuzz", "trial_seeds", "trial_instance"]


@dataclass
class Built:
    space: NSpace
    family: PFrameFamily

    def fam(self, coeffs) -> PFrameFamily:
        return PFrameFamily.from_coeffs(self.space, coeffs, self.family.p)


def build(inst: Instance) -> Built:
    space = NSpace.from_anchors(inst.anchors, inst.dimension)
    if space.order != inst.order:
        raise InputError(f"order {inst.order} needs {inst.order - 1} anchors")
    return Built(space, PFrameFamily.from_coeffs(space, inst.functionals, inst.p))


def config_from_run(run: dict, base: OptimizerConfig | None = None) -> OptimizerConfig:
    cfg = base or OptimizerConfig()
    upd = {k: run[k] for k in ("seed", "starts", "max_iters", "tol", "grid_resolution") if k in run}
    return replace(cfg, **upd)


def _second(inst: Instance, b: Built) -> PFrameFamily:
    if inst.second_family is None:
        raise InputError("this check needs a second_family")
    return b.fam(inst.second_family)


def run_check(inst: Instance, theorem_id: str, config: OptimizerConfig | None = None,
              checker_seed: int | None = None) -> th.TheoremVerdict:
    """Run one theorem checker on an instance."""
    if theorem_id not in th.THEOREM_IDS:
        raise InputError(f"unknown theorem id {theorem_id!r}; expected one of {th.THEOREM_IDS}")
    cfg = config or config_from_run(inst.run)
    seed = checker_seed if checker_seed is not None else int(inst.run.get("checker_seed", 0))
    b = build(inst)
    F = b.family
    if theorem_id == "thm3.4":
        return th.check_bessel_sum(F, _second(inst, b), cfg)
    if theorem_id == "thm3.8":
        return th.check_duality(F, cfg, seed=seed)
    if theorem_id == "thm3.9":
        return th.check_synthesis(F, cfg)
    if theorem_id == "thm3.11":
        if inst.product is None:
            raise InputError("thm3.11 needs a product block")
        pr = inst.product
        Y = NSpace.from_anchors(pr["anchors"], pr["dimension"])
        G = PFrameFamily.from_coeffs(Y, pr["functionals"], inst.p)
        return th.check_product(F, G, cfg)
    if theorem_id == "thm4.1":
        blk = inst.block("rank_one")
        P = th.RankOnePerturbation(blk["c"], make_functional(b.space, blk["R"]))
        return th.check_rank_one(F, P, cfg)
    if theorem_id == "thm4.2":
        blk = inst.block("confined")
        spec = th.ConfinedPerturbation(blk["alpha"], blk["beta"], blk["lambda"], blk["mu"])
        return th.check_confined(F, _second(inst, b), spec, cfg)
    if theorem_id == "thm5.1":
        blk = inst.block("stability")
        return th.check_stability(F, _second(inst, b), th.StabilitySpec(blk["alpha"], blk["beta"]), cfg)
    if theorem_id == "cor5.2":
        blk = inst.block("stability")
        if blk["alpha"] != 0.0:
            raise InputError("cor5.2 takes a stability block with alpha = 0")
        return th.check_stability_simple(F, _second(inst, b), blk["beta"], cfg)
    if theorem_id == "thm5.3":
        blk = inst.block("equivalence")
        return th.check_equivalence(F, _second(inst, b), th.EquivalenceSpec(blk["M"], blk["combiner"]), cfg)
    if theorem_id == "thm5.4":
        blk = inst.block("finite_sum")
        fams = [F] + [b.fam(G) for G in blk["extra_families"]]
        spec = th.FiniteSumSpec(tuple(blk["coefficients"]), blk["m"], blk["beta"])
        return th.check_finite_sum(fams, spec, cfg)
    # thm5.5
    blk = inst.block("operator_sum")
    Ts = [F] + [b.fam(G) for G in blk["extra_families"]]
    Rs = [b.fam(G) for G in blk["base_families"]]
    spec = th.OperatorSumSpec(blk["Q"], blk["lambda"], blk["m"])
    return th.check_operator_sum(Ts, Rs, spec, cfg)


# --- fuzzing ----------------------------------------------------------------


@dataclass
class FuzzOutcome:
    index: int
    status: str
    digest: str
    repro: str | None = None
    error: str | None = None


def trial_seeds(seed: int, index: int) -> tuple[np.random.Generator, int]:
    """Generator for trial ``index`` and the checker seed drawn from the same stream."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    return rng, int(rng.integers(0, 2**31 - 1))


def trial_instance(theorem_id: str, seed: int, index: int, dim_max: int,
                   config: OptimizerConfig) -> Instance:
    """The instance of fuzz trial ``index``, with its run block filled in.

    The instance goes through its own serialization so that a reproducer
    file replays bit for bit.
    """
    rng, checker_seed = trial_seeds(seed, index)
    inst = generate(theorem_id, rng, dim_max)
    cfg = config
    inst.run = {"seed": cfg.seed, "checker_seed": checker_seed, "starts": cfg.starts,
                "max_iters": cfg.max_iters, "tol": cfg.tol, "grid_resolution": cfg.grid_resolution}
    return parse_instance(json.loads(inst.dumps()))


def _trial(args) -> FuzzOutcome:
    theorem_id, index, seed, dim_max, cfg, repro_dir = args
    inst = trial_instance(theorem_id, seed, index, dim_max, cfg)
    try:
        verdict = run_check(inst, theorem_id)
        status, error = verdict.status, None
    except Exception as exc:  # a crash on a generated instance is a bug worth keeping
        status, error = "error", f"{type(exc).__name__}: {exc}"
    repro = None
    if status in ("fail", "error") and repro_dir is not None:
        path = Path(repro_dir) / f"{theorem_id}-seed{seed}-trial{index}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(inst.dumps())
        repro = str(path)
    return FuzzOutcome(index, status, inst.digest(), repro, error)


def fuzz(theorem_id: str, trials: int, seed: int = 0, dim_max: int = 5,
         config: OptimizerConfig | None = None, repro_dir: str | os.PathLike | None = None,
         jobs: int = 1) -> list[FuzzOutcome]:
    """Run ``trials`` generated instances through the checker; results sorted by index."""
    if theorem_id not in th.THEOREM_IDS:
        raise InputError(f"unknown theorem id {theorem_id!r}")
    if trials < 1:
        raise InputError("trials must be positive")
    cfg = replace(config or OptimizerConfig(), seed=int(seed))
    args = [(theorem_id, i, seed, dim_max, cfg, repro_dir) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_trial, args, chunksize=max(1, trials // (8 * jobs))))
    else:
        out = [_trial(a) for a in args]
    return sorted(out, key=lambda o: o.index)
