"""JSON instance files: parsing, validation, canonical serialization.

An instance fixes one space, one exponent and a primary family, plus the
optional blocks a theorem checker needs::

    {
      "dimension": 3, "order": 2, "anchors": [[0, 0, 1]], "p": 2.0,
      "functionals": [[1, 0, 0], [0, 1, 0]],
      "second_family": [[...], ...],
      "perturbation": {"rank_one": {"c": [...], "R": [...]}},
      "product": {"dimension": 2, "anchors": [[0, 1]], "functionals": [[...], ...]},
      "run": {"seed": 0, "checker_seed": 0, "starts": 32, ...}
    }

Perturbation kinds: ``rank_one {c, R}``, ``confined {alpha, beta, lambda, mu}``,
``stability {alpha, beta}``, ``equivalence {M, combiner}``,
``finite_sum {coefficients, m, beta, extra_families}`` and
``operator_sum {Q, lambda, m, extra_families, base_families}``. For operator
sums the frames are the primary family followed by ``extra_families`` and the
perturbations summed by ``Q`` are ``base_families``.

Serialization emits keys in a fixed order and floats as shortest round-trip
decimals, so parse -> serialize -> parse is the identity and the digest is a
stable content hash.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import InputError

__all__ = ["Instance", "PERTURBATION_KINDS", "load_instance", "parse_instance", "dump_instance"]

PERTURBATION_KINDS = ("rank_one", "confined", "stability", "equivalence", "finite_sum", "operator_sum")

_RUN_KEYS = ("seed", "checker_seed", "starts", "max_iters", "tol", "grid_resolution")


def _float(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"{what} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise InputError(f"{what} must be finite")
    return v


def _int(v, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise InputError(f"{what} must be an integer, got {v!r}")
    return v


def _vec(v, what: str, dim: int | None = None) -> list[float]:
    if not isinstance(v, list):
        raise InputError(f"{what} must be a list of numbers")
    out = [_float(x, what) for x in v]
    if dim is not None and len(out) != dim:
        raise InputError(f"{what} has length {len(out)}, expected {dim}")
    return out


def _family(v, what: str, dim: int, m: int | None = None) -> list[list[float]]:
    if not isinstance(v, list) or not v:
        raise InputError(f"{what} must be a nonempty list of coefficient arrays")
    out = [_vec(row, what, dim) for row in v]
    if m is not None and len(out) != m:
        raise InputError(f"{what} has {len(out)} members, expected {m}")
    return out


def _families(v, what: str, dim: int, m: int) -> list[list[list[float]]]:
    if not isinstance(v, list):
        raise InputError(f"{what} must be a list of families")
    return [_family(f, what, dim, m) for f in v]


def _obj(v, what: str) -> dict:
    if not isinstance(v, dict):
        raise InputError(f"{what} must be an object")
    return v


def _need(d: dict, key: str, what: str):
    if key not in d:
        raise InputError(f"{what} is missing {key!r}")
    return d[key]


@dataclass
class Instance:
    dimension: int
    order: int
    anchors: list
    p: float
    functionals: list
    second_family: list | None = None
    perturbation: dict | None = None
    product: dict | None = None
    run: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.functionals)

    def perturbation_kind(self) -> str | None:
        return None if self.perturbation is None else next(iter(self.perturbation))

    def block(self, kind: str) -> dict:
        if self.perturbation is None or kind not in self.perturbation:
            raise InputError(f"instance has no {kind!r} perturbation block")
        return self.perturbation[kind]

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or (f.name == "run" and not v):
                continue
            out[f.name] = v
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, allow_nan=False) + "\n"

    def digest(self) -> str:
        """SHA-256 of the canonical serialization, excluding the ``run`` block."""
        body = self.to_json()
        body.pop("run", None)
        text = json.dumps(body, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(text.encode()).hexdigest()


def _parse_perturbation(raw, dim: int, m: int) -> dict:
    raw = _obj(raw, "perturbation")
    if len(raw) != 1:
        raise InputError("perturbation must hold exactly one block")
    kind, b = next(iter(raw.items()))
    b = _obj(b, kind)
    if kind == "rank_one":
        body = {"c": _vec(_need(b, "c", kind), "c", m), "R": _vec(_need(b, "R", kind), "R", dim)}
    elif kind == "confined":
        body = {
            "alpha": _vec(_need(b, "alpha", kind), "alpha", m),
            "beta": _vec(_need(b, "beta", kind), "beta", m),
            "lambda": _float(_need(b, "lambda", kind), "lambda"),
            "mu": _float(_need(b, "mu", kind), "mu"),
        }
    elif kind == "stability":
        body = {
            "alpha": _float(b.get("alpha", 0.0), "alpha"),
            "beta": _float(_need(b, "beta", kind), "beta"),
        }
    elif kind == "equivalence":
        comb = b.get("combiner", "sound_max")
        if comb not in ("paper_min", "sound_max"):
            raise InputError(f"unknown combiner {comb!r}")
        body = {"M": _float(_need(b, "M", kind), "M"), "combiner": comb}
    elif kind == "finite_sum":
        extra = _families(b.get("extra_families", []), "extra_families", dim, m)
        coeffs = _vec(_need(b, "coefficients", kind), "coefficients", 1 + len(extra))
        body = {
            "coefficients": coeffs,
            "m": _int(_need(b, "m", kind), "m"),
            "beta": _float(_need(b, "beta", kind), "beta"),
            "extra_families": extra,
        }
    elif kind == "operator_sum":
        extra = _families(b.get("extra_families", []), "extra_families", dim, m)
        base = _families(_need(b, "base_families", kind), "base_families", dim, m)
        if len(base) != 1 + len(extra):
            raise InputError("base_families needs one family per frame")
        Q = _need(b, "Q", kind)
        if not isinstance(Q, list) or len(Q) != m:
            raise InputError(f"Q must be a {m} x {m} matrix")
        body = {
            "Q": [_vec(row, "Q", m) for row in Q],
            "lambda": _float(_need(b, "lambda", kind), "lambda"),
            "m": _int(b.get("m", 1), "m"),
            "extra_families": extra,
            "base_families": base,
        }
    else:
        raise InputError(f"unknown perturbation kind {kind!r}; expected one of {PERTURBATION_KINDS}")
    return {kind: body}


def parse_instance(raw) -> Instance:
    """Validate a decoded JSON object and return an :class:`Instance`."""
    raw = _obj(raw, "instance")
    known = {f.name for f in fields(Instance)}
    extra = set(raw) - known
    if extra:
        raise InputError(f"unknown instance fields: {sorted(extra)}")
    dim = _int(_need(raw, "dimension", "instance"), "dimension")
    order = _int(_need(raw, "order", "instance"), "order")
    if dim < 1 or not 2 <= order <= dim:
        raise InputError("need dimension >= order >= 2")
    anchors = _family(_need(raw, "anchors", "instance"), "anchors", dim, order - 1)
    p = _float(_need(raw, "p", "instance"), "p")
    if not p > 1.0:
        raise InputError("p must exceed 1")
    funcs = _family(_need(raw, "functionals", "instance"), "functionals", dim)
    m = len(funcs)
    inst = Instance(dim, order, anchors, p, funcs)
    if raw.get("second_family") is not None:
        inst.second_family = _family(raw["second_family"], "second_family", dim, m)
    if raw.get("perturbation") is not None:
        inst.perturbation = _parse_perturbation(raw["perturbation"], dim, m)
    if raw.get("product") is not None:
        pr = _obj(raw["product"], "product")
        pdim = _int(_need(pr, "dimension", "product"), "product dimension")
        if pdim < order:
            raise InputError("product space dimension must be at least the order")
        inst.product = {
            "dimension": pdim,
            "anchors": _family(_need(pr, "anchors", "product"), "product anchors", pdim, order - 1),
            "functionals": _family(_need(pr, "functionals", "product"), "product functionals", pdim, m),
        }
    run = _obj(raw.get("run", {}), "run")
    for key in run:
        if key not in _RUN_KEYS:
            raise InputError(f"unknown run field {key!r}")
    inst.run = {
        k: (_float(run[k], k) if k in ("tol", "grid_resolution") else _int(run[k], k))
        for k in _RUN_KEYS if k in run
    }
    return inst


def load_instance(path) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return parse_instance(raw)


def dump_instance(inst: Instance, path) -> None:
    Path(path).write_text(inst.dumps())
