"""JSON model files.

A model file has top-level keys ``waiting``, ``potential`` and ``reward``
(plus optional ``name`` and ``description``) and is validated against
``model.schema.json`` shipped with the package. A constant potential may
give ``"beta": "critical"`` with an optional ``"offset"``, which resolves
to ``beta_c + offset`` of the waiting law at load time; rounded decimal
literals of ``beta_c`` would otherwise land a hair off criticality.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import CritpinError, ModelError
from .model import ModelSpec, PotentialSpec, PowerTail, RewardSpec, WaitingTimeSpec


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("critpin").joinpath("model.schema.json").read_text()
    return json.loads(text)


def _line_of(text: str, path) -> int:
    """Best-effort line of a JSON path: follows successive object keys in the text."""
    pos = 0
    for key in path:
        if isinstance(key, str):
            idx = text.find(json.dumps(key), pos)
            if idx >= 0:
                pos = idx
    return text.count("\n", 0, pos) + 1


def _where(path) -> str:
    return "".join(f"[{k}]" if isinstance(k, int) else f".{k}" for k in path) or "<root>"


def _tail(d: dict) -> PowerTail:
    return PowerTail(d["kappa"], d.get("log_power", 0.0), d.get("scale", 1.0))


def _waiting(d: dict) -> WaitingTimeSpec:
    fam = d["family"]
    if fam == "power":
        return WaitingTimeSpec.power(d["kappa"], d.get("log_power", 0.0), d.get("scale", 1.0))
    if fam == "finite":
        return WaitingTimeSpec.finite(d["mass"])
    return WaitingTimeSpec.hybrid(d["head"], _tail(d["tail"]), d["tail_start"])


def _potential(d: dict, waiting: WaitingTimeSpec) -> PotentialSpec:
    if d["kind"] == "table":
        return PotentialSpec(d["beta"], d["values"])
    beta = d["beta"]
    if beta == "critical":
        if waiting.is_finite:
            raise ModelError("beta 'critical' needs a waiting law with a power tail")
        beta = -math.log(waiting.normalization.value)
    elif "offset" in d:
        raise ModelError("offset is only allowed with beta 'critical'")
    return PotentialSpec(beta + d.get("offset", 0.0))


def _reward(d: dict) -> RewardSpec:
    if d["kind"] == "table":
        return RewardSpec.from_table(d["values"], d["slope"], d.get("intercept", 0.0))
    return RewardSpec(d["kind"])


def model_from_dict(doc: dict, name: str = "", text: str | None = None, source: str = "<model>") -> ModelSpec:
    """Validate and build a model from a parsed document."""
    validator = jsonschema.Draft202012Validator(schema())
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        path = list(err.absolute_path)
        line = _line_of(text, path) if text is not None else 0
        raise ModelError(f"{source}:{line}: {_where(path)}: {err.message}")
    section = "waiting"
    try:
        waiting = _waiting(doc["waiting"])
        section = "potential"
        potential = _potential(doc["potential"], waiting)
        section = "reward"
        reward = _reward(doc["reward"])
    except CritpinError as exc:
        line = _line_of(text, [section]) if text is not None else 0
        raise ModelError(f"{source}:{line}: {section}: {exc}") from exc
    return ModelSpec(waiting, potential, reward, name=doc.get("name", name))


def load_model(path: str | Path) -> ModelSpec:
    """Read a model file; errors are :class:`ModelError` with ``file:line`` anchors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelError(f"{path}: cannot read model file: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    return model_from_dict(doc, name=path.stem, text=text, source=str(path))
