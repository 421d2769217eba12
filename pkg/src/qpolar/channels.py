"""Built-in example channels and the JSON channel-specification format.

A spec is a small JSON object::

    {"kind": "bitflip", "p": 0.9}
    {"kind": "phaseflip", "p": 0.9}
    {"kind": "identity"}
    {"kind": "btpm", "probs": [[0.9, 0.1], [0.1, 0.9]]}
    {"kind": "kraus", "operators": [[[[0.7, 0], [0, 0]], ...], ...], "input_basis": ...}

``p`` is the stay probability and may also sit under ``"parameters"``.
Matrix entries are real numbers or ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .btpm import Btpm, NoBtpm, channel_kraus, extract_btpm
from .errors import ContractError, SpecParseError
from .quantum import I2, H, X, Z, KrausSet

KINDS = ("bitflip", "phaseflip", "identity", "btpm", "kraus")


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"stay probability must lie in [0, 1], got {p!r}")


def bitflip(p: float) -> KrausSet:
    """``{sqrt(p) I, sqrt(1-p) X}``; ``p`` is the probability the state is left alone."""
    _check_p(p)
    return KrausSet(np.stack([np.sqrt(p) * I2, np.sqrt(1 - p) * X]))


def phaseflip(p: float, basis: str = "x") -> KrausSet:
    """``{sqrt(p) I, sqrt(1-p) Z}``, by default designated in the ``|+>, |->`` basis."""
    _check_p(p)
    ops = np.stack([np.sqrt(p) * I2, np.sqrt(1 - p) * Z])
    if basis == "x":
        return KrausSet(ops, H)
    if basis == "z":
        return KrausSet(ops)
    raise ContractError(f"basis must be 'x' or 'z', got {basis!r}")


def identity(dim: int = 2) -> KrausSet:
    return KrausSet(np.eye(dim, dtype=complex)[None])


@dataclass(frozen=True)
class ChannelSpec:
    kind: str
    p: Optional[float] = None
    kraus_set: Optional[KrausSet] = None
    probs: Optional[Btpm] = None

    def kraus(self) -> KrausSet:
        if self.kraus_set is not None:
            return self.kraus_set
        return channel_kraus(self.probs)

    def btpm(self, seed: int = 42):
        """The channel's BTPM, or :class:`NoBtpm` when the basis images do not commute."""
        if self.probs is not None:
            return self.probs
        return extract_btpm(self.kraus_set, seed=seed)

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.p is not None:
            d["p"] = self.p
        return d


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SpecParseError(f"expected a number, got {json.dumps(x)}", where)
    return float(x)


def _entry(x, where):
    if isinstance(x, list):
        if len(x) != 2:
            raise SpecParseError("complex entries must be [re, im] pairs", where)
        return complex(_number(x[0], f"{where}[0]"), _number(x[1], f"{where}[1]"))
    return complex(_number(x, where))


def _matrix(x, where, real=False):
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise SpecParseError("expected a non-empty list of rows", where)
    width = len(x[0])
    rows = []
    for i, r in enumerate(x):
        if len(r) != width:
            raise SpecParseError(f"row has {len(r)} entries, expected {width}", f"{where}[{i}]")
        if real:
            rows.append([_number(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)])
        else:
            rows.append([_entry(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)])
    return np.array(rows, dtype=float if real else complex)


def _stay(obj):
    params = obj.get("parameters", {})
    if not isinstance(params, dict):
        raise SpecParseError("expected an object", "parameters")
    if "p" in obj:
        return _number(obj["p"], "p"), "p"
    if "p" in params:
        return _number(params["p"], "parameters.p"), "parameters.p"
    raise SpecParseError("missing stay probability", "p")


def spec_from_dict(obj) -> ChannelSpec:
    if not isinstance(obj, dict):
        raise SpecParseError("top level must be a JSON object", "$")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise SpecParseError(f"unknown kind {json.dumps(kind)}; expected one of {', '.join(KINDS)}", "kind")
    try:
        if kind in ("bitflip", "phaseflip"):
            p, where = _stay(obj)
            if not 0.0 <= p <= 1.0:
                raise SpecParseError(f"stay probability must lie in [0, 1], got {p!r}", where)
            if kind == "bitflip":
                return ChannelSpec(kind, p, kraus_set=bitflip(p))
            basis = obj.get("basis", "x")
            if basis not in ("x", "z"):
                raise SpecParseError("expected \"x\" or \"z\"", "basis")
            return ChannelSpec(kind, p, kraus_set=phaseflip(p, basis))
        if kind == "identity":
            dim = obj.get("dim", 2)
            if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
                raise SpecParseError("expected a positive integer", "dim")
            return ChannelSpec(kind, kraus_set=identity(dim))
        if kind == "btpm":
            if "probs" not in obj:
                raise SpecParseError("missing matrix", "probs")
            A = _matrix(obj["probs"], "probs", real=True)
            try:
                return ChannelSpec(kind, probs=Btpm(A))
            except ContractError as e:
                raise SpecParseError(str(e), "probs") from None
        ops = obj.get("operators")
        if not isinstance(ops, list) or not ops:
            raise SpecParseError("expected a non-empty list of matrices", "operators")
        mats = [_matrix(m, f"operators[{k}]") for k, m in enumerate(ops)]
        if len({m.shape for m in mats}) != 1:
            raise SpecParseError("operators differ in shape", "operators")
        basis = None
        if "input_basis" in obj:
            basis = _matrix(obj["input_basis"], "input_basis")
        try:
            return ChannelSpec(kind, kraus_set=KrausSet(np.stack(mats), basis))
        except ContractError as e:
            raise SpecParseError(str(e), "operators") from None
    except SpecParseError:
        raise
    except ContractError as e:
        raise SpecParseError(str(e), kind) from None


def parse_spec(text: str) -> ChannelSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecParseError(e.msg, f"line {e.lineno}, column {e.colno}") from None
    return spec_from_dict(obj)


def load_spec(path) -> ChannelSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(e.strerror or str(e), str(path)) from None
    return parse_spec(text)


def is_btpm(b) -> bool:
    return not isinstance(b, NoBtpm)
