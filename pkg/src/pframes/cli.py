"""Command-line front end.

Exit codes: 0 pass/ok, 1 a checked conclusion failed (or fuzzing found a
failure), 2 malformed or degenerate input, 3 inconclusive (hypothesis not
met or undecided).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .errors import NumericError, PFrameError
from .frames import (
    PFrameFamily,
    canonical_dual,
    cartesian_product,
    is_p_frame,
    optimal_bounds,
    product_bounds,
    q_frame_bounds,
)
from .instance import load_instance
from .nspace import NSpace, anchored_seminorm, project_complement
from .runner import build, config_from_run, fuzz, run_check
from .theorems import THEOREM_IDS

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3


def _floats(a) -> list:
    return [float(v) + 0.0 for v in np.asarray(a, dtype=float).ravel()]


def _bounds_dict(b) -> dict:
    return {
        "lower": b.lower + 0.0,
        "upper": b.upper + 0.0,
        "arg_lower": _floats(b.arg_lower),
        "arg_upper": _floats(b.arg_upper),
        "method": b.method,
    }


def _parse_vector(text: str) -> list[float]:
    text = text.strip()
    try:
        v = json.loads(text) if text.startswith("[") else [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse vector {text!r}") from exc
    return v


def _config(args, run: dict | None = None):
    cfg = config_from_run(run or {})
    upd = {}
    for flag, key in (("seed", "seed"), ("starts", "starts"), ("max_iters", "max_iters"),
                      ("tol", "tol"), ("grid_res", "grid_resolution")):
        v = getattr(args, flag, None)
        if v is not None:
            upd[key] = v
    return replace(cfg, **upd)


# --- commands -----------------------------------------------------------------


def cmd_norm(args):
    inst = load_instance(args.file)
    b = build(inst)
    x = np.asarray(args.x, dtype=float)
    if x.ndim != 1 or x.shape[0] != inst.dimension:
        raise_input(f"x must have {inst.dimension} coordinates")
    s = anchored_seminorm(b.space, x)
    res = {
        "seminorm": s,
        "projection": _floats(project_complement(b.space, x)),
        "anchor_volume": b.space.volume,
        "kernel": s == 0.0,
    }
    return inst, res, EXIT_OK


def cmd_bounds(args):
    inst = load_instance(args.file)
    b = build(inst)
    cfg = _config(args, inst.run)
    fb = optimal_bounds(b.family, args.method, cfg)
    frame = is_p_frame(b.family, fb)
    res = {"p": inst.p, "m": inst.m, "bounds": _bounds_dict(fb), "is_frame": frame}
    if not frame:
        res["note"] = "not a frame: the lower bound vanishes"
    return inst, res, EXIT_OK


def cmd_dual(args):
    inst = load_instance(args.file)
    b = build(inst)
    cfg = _config(args, inst.run)
    fb = optimal_bounds(b.family, config=cfg)
    D = canonical_dual(b.family, fb)
    qb = q_frame_bounds(D, b.space, config=cfg)
    res = {
        "p": inst.p,
        "q": b.family.q,
        "frame_bounds": _bounds_dict(fb),
        "dual": [_floats(f) for f in D.vectors],
        "dual_q_bounds": _bounds_dict(qb),
    }
    return inst, res, EXIT_OK


def cmd_product(args):
    inst = load_instance(args.file)
    if inst.product is None:
        raise_input("instance has no product block")
    b = build(inst)
    cfg = _config(args, inst.run)
    pr = inst.product
    Y = NSpace.from_anchors(pr["anchors"], pr["dimension"])
    G = PFrameFamily.from_coeffs(Y, pr["functionals"], inst.p)
    P = cartesian_product(b.family, G)
    bF, bG = optimal_bounds(b.family, config=cfg), optimal_bounds(G, config=cfg)
    bP = product_bounds(P, config=cfg)
    res = {
        "first": _bounds_dict(bF),
        "second": _bounds_dict(bG),
        "product": _bounds_dict(bP),
        "predicted": {"lower": min(bF.lower, bG.lower), "upper": max(bF.upper, bG.upper)},
    }
    return inst, res, EXIT_OK


def cmd_check(args):
    inst = load_instance(args.file)
    cfg = _config(args, inst.run)
    seed = inst.run.get("checker_seed", args.seed if args.seed is not None else 0)
    v = run_check(inst, args.theorem_id, cfg, checker_seed=seed)
    code = {"pass": EXIT_OK, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}[v.status]
    return inst, v.to_dict(), code


def cmd_fuzz(args):
    if args.trials < 1:
        raise_input("--trials must be at least 1")
    if args.dim_max < 2:
        raise_input("--dim-max must be at least 2")
    cfg = _config(args)
    seed = args.seed if args.seed is not None else 0
    outs = fuzz(args.theorem_id, args.trials, seed, args.dim_max, cfg, args.repro_dir, args.jobs)
    counts = {k: 0 for k in ("pass", "fail", "inconclusive", "error")}
    for o in outs:
        counts[o.status] += 1
    bad = [{"trial": o.index, "status": o.status, "digest": o.digest, "reproducer": o.repro,
            "error": o.error} for o in outs if o.status in ("fail", "error")]
    res = {"theorem_id": args.theorem_id, "trials": args.trials, "dim_max": args.dim_max,
           "counts": counts, "failures": bad}
    code = EXIT_FAIL if bad else EXIT_OK
    return None, res, code


class UsageError(Exception):
    """Bad command-line values; reported with exit code 2."""


def raise_input(msg: str):
    raise UsageError(msg)


# --- plumbing -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, optimizer: bool = True) -> None:
    p.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", help="JSON report (default)")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text", help="plain text report")
    p.set_defaults(fmt="json")
    p.add_argument("--out", default=None, help="write the report to this path")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings")
    if optimizer:
        p.add_argument("--starts", type=int, default=None)
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--grid-res", type=float, default=None)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pframes", description="p-frames of b-linear functionals in n-normed spaces")
    ap.add_argument("--version", action="version", version=f"pframes {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="anchored seminorm of a vector")
    p.add_argument("file")
    p.add_argument("--x", type=_parse_vector, required=True, help="coordinates, e.g. 1,2,3")
    _common(p, optimizer=False)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("bounds", help="optimal frame bounds")
    p.add_argument("file")
    p.add_argument("--method", choices=("auto", "spectral", "optimizer"), default="auto")
    _common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("dual", help="canonical dual and its q-frame bounds")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("product", help="Cartesian product bounds")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("check", help="run one theorem checker on an instance")
    p.add_argument("theorem_id", choices=THEOREM_IDS)
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fuzz", help="random hypothesis-satisfying instances through a checker")
    p.add_argument("theorem_id", choices=THEOREM_IDS)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dim-max", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--repro-dir", default="repro")
    _common(p)
    p.set_defaults(func=cmd_fuzz)
    return ap


def _text(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    for k, v in obj.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.extend(_text(v, indent + 1))
        else:
            lines.append(f"{pad}{k}: {v}")
    return lines


def _emit(report: dict, args) -> None:
    if args.fmt == "text":
        out = "\n".join(_text(report)) + "\n"
    else:
        out = json.dumps(report, indent=2, allow_nan=False) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    t0 = time.perf_counter()
    report = {"tool": "pframes", "version": __version__, "command": args.command}
    if getattr(args, "theorem_id", None):
        report["theorem_id"] = args.theorem_id
    report["seed"] = args.seed if args.seed is not None else 0
    try:
        inst, results, code = args.func(args)
    except (PFrameError, UsageError) as exc:
        code = EXIT_INPUT
        kind = "numeric" if isinstance(exc, NumericError) else "input"
        report["error"] = {"kind": kind, "type": type(exc).__name__, "message": str(exc)}
        inst, results = None, None
    if inst is not None:
        report["instance_digest"] = inst.digest()
    if results is not None:
        report["results"] = results
    report["exit_code"] = code
    if args.timings:
        report["timings"] = {"wall_seconds": time.perf_counter() - t0}
    _emit(report, args)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
