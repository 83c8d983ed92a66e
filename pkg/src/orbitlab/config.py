"""Experiment and suite configs (YAML, strict keys).

Experiment grammar::

    label: str                   # optional, defaults to the handle name
    action: {family: ..., ...}   # optional; must match the embedding's action
    embedding:
      name: str                  # see catalog.EMBEDDINGS
      params: {...}
    samples: int                 # number of sampled pairs
    mix: [w_independent, w_near_diagonal, w_near_orbit]
    restarts: int                # adversarial restarts (0 skips the search)
    seed: int
    claim: {alpha: float, beta: float, kappa: float | [lo, hi], exact: bool}   # optional override
    output: {json: path, csv: path, vectors: path}                            # optional

A suite is ``{name: str, experiments: [experiment, ...]}``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from . import group_actions as ga
from .errors import ConfigError, InvalidAction

EXPERIMENT_KEYS = {"label", "action", "embedding", "samples", "mix", "restarts", "seed", "claim", "output"}
EMBEDDING_KEYS = {"name", "params"}
CLAIM_KEYS = {"alpha", "beta", "kappa", "exact"}
OUTPUT_KEYS = {"json", "csv", "vectors"}
SUITE_KEYS = {"name", "experiments"}


@dataclass
class ExperimentConfig:
    embedding: str
    params: dict[str, Any] = field(default_factory=dict)
    label: str | None = None
    action: dict[str, Any] | None = None
    samples: int = 20000
    mix: tuple[float, float, float] = (0.4, 0.3, 0.3)
    restarts: int = 20
    seed: int = 0
    claim: dict[str, Any] | None = None
    output: dict[str, str] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "embedding": {"name": self.embedding, "params": dict(self.params)},
            "samples": self.samples,
            "mix": list(self.mix),
            "restarts": self.restarts,
            "seed": self.seed,
        }
        if self.label is not None:
            rec["label"] = self.label
        if self.action is not None:
            rec["action"] = self.action
        if self.claim is not None:
            rec["claim"] = dict(self.claim)
        if self.output:
            rec["output"] = dict(self.output)
        return rec

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_record(), sort_keys=True)


@dataclass
class SuiteConfig:
    name: str
    experiments: list[ExperimentConfig]

    def dumps(self) -> str:
        return yaml.safe_dump({"name": self.name, "experiments": [e.to_record() for e in self.experiments]}, sort_keys=True)


def _check_keys(rec: Any, allowed: set[str], where: str) -> dict:
    if not isinstance(rec, dict):
        raise ConfigError(f"{where or 'config'} must be a mapping", key=where or None)
    for key in rec:
        if key not in allowed:
            path = f"{where}.{key}" if where else str(key)
            raise ConfigError(f"unknown key {path!r}", key=path)
    return rec


def _int(rec, key, where, minimum=0) -> int:
    v = rec[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{where}{key} must be an integer >= {minimum}", key=f"{where}{key}")
    return v


def parse_experiment(rec: Any, where: str = "") -> ExperimentConfig:
    prefix = f"{where}." if where else ""
    rec = _check_keys(rec, EXPERIMENT_KEYS, where)
    if "embedding" not in rec:
        raise ConfigError(f"missing key {prefix}embedding", key=f"{prefix}embedding")
    emb = _check_keys(rec["embedding"], EMBEDDING_KEYS, f"{prefix}embedding")
    if not isinstance(emb.get("name"), str):
        raise ConfigError("embedding.name must be a string", key=f"{prefix}embedding.name")
    params = emb.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("embedding.params must be a mapping", key=f"{prefix}embedding.params")
    cfg = ExperimentConfig(embedding=emb["name"], params=dict(params))
    if "label" in rec:
        if not isinstance(rec["label"], str):
            raise ConfigError("label must be a string", key=f"{prefix}label")
        cfg.label = rec["label"]
    if "action" in rec:
        try:
            ga.spec_from_record(rec["action"])
        except InvalidAction as exc:
            raise ConfigError(f"bad action record: {exc}", key=f"{prefix}action") from None
        cfg.action = rec["action"]
    for key in ("samples", "restarts", "seed"):
        if key in rec:
            setattr(cfg, key, _int(rec, key, prefix))
    if "mix" in rec:
        mix = rec["mix"]
        if not isinstance(mix, list) or len(mix) != 3 or not all(isinstance(w, (int, float)) for w in mix):
            raise ConfigError("mix must be a list of three numbers", key=f"{prefix}mix")
        cfg.mix = tuple(float(w) for w in mix)
    if "claim" in rec:
        claim = _check_keys(rec["claim"], CLAIM_KEYS, f"{prefix}claim")
        cfg.claim = dict(claim)
    if "output" in rec:
        out = _check_keys(rec["output"], OUTPUT_KEYS, f"{prefix}output")
        cfg.output = {k: str(v) for k, v in out.items()}
    return cfg


def _load_yaml(path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None


def load_experiment(path) -> ExperimentConfig:
    return parse_experiment(_load_yaml(path))


def parse_suite(rec: Any) -> SuiteConfig:
    rec = _check_keys(rec, SUITE_KEYS, "")
    items = rec.get("experiments") or []
    if not isinstance(items, list):
        raise ConfigError("experiments must be a list", key="experiments")
    return SuiteConfig(
        name=str(rec.get("name", "suite")),
        experiments=[parse_experiment(item, f"experiments[{i}]") for i, item in enumerate(items)],
    )


def load_suite(path) -> SuiteConfig:
    return parse_suite(_load_yaml(path))


def as_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    return asdict(cfg)
