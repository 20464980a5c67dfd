"""Run configuration: a YAML document describing space, strategy and evaluator.

Schema (all keys optional unless noted)::

    space:
      conv:  {values: [0, 2, 3, 4]}   # enumerated, or {lo: 2, hi: 8} range
      dense: {values: [1, 2]}
      genome: {total_bits: 8, conv_bits: 4, dense_bits: 4}
    strategy:
      kind: grid | random | ga        # required
      iterations: 5                   # random
      dedup: false                    # random
      population_size: 2              # ga (and the other GAConfig fields)
    evaluator:
      kind: surrogate | table | param_count | external   # required
      ...kind-specific settings, validity, penalty_fitness
    seed: 0
    cache: true
    workers: 1

Fixture configs shipped with the package can be referenced by bare name
(e.g. ``grid-4x2``) instead of a file path.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .evaluators import EvaluatorSpec
from .space import GenomeLayout, IntDomain, SearchSpace
from .strategies import GAConfig, GridConfig, RandomConfig

StrategyConfig = GridConfig | RandomConfig | GAConfig

_GA_KEYS = {
    "population_size",
    "generations",
    "genome_length",
    "init_bit_probability",
    "tournament_size",
    "crossover_probability",
    "mutation_rate",
    "elitism",
}
_RANDOM_KEYS = {"iterations", "dedup"}


@dataclass
class RunConfig:
    space: SearchSpace
    strategy: StrategyConfig
    evaluator: EvaluatorSpec
    seed: int
    cache: bool
    workers: int
    raw: dict[str, Any]

    @property
    def strategy_name(self) -> str:
        if isinstance(self.strategy, GridConfig):
            return "grid"
        if isinstance(self.strategy, RandomConfig):
            return "random"
        return "ga"


def resolve_config_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.is_file():
        return p
    stem = name_or_path if name_or_path.endswith(".yaml") else f"{name_or_path}.yaml"
    shipped = resources.files("cellsearch").joinpath("data", "configs", stem)
    with resources.as_file(shipped) as fp:
        if fp.is_file():
            return fp
    raise ConfigError(f"config {name_or_path!r}: no such file or shipped fixture")


def _parse_domain(name: str, node: Any) -> IntDomain:
    if not isinstance(node, dict):
        raise ConfigError(f"space.{name} must be a mapping with 'values' or 'lo'/'hi'")
    if "values" in node:
        return IntDomain.enumerated(name, [int(v) for v in node["values"]])
    if "lo" in node and "hi" in node:
        return IntDomain.bounded(name, int(node["lo"]), int(node["hi"]))
    raise ConfigError(f"space.{name} needs either 'values' or 'lo'/'hi'")


def _parse_space(node: dict[str, Any] | None) -> SearchSpace:
    node = node or {}
    genome_node = node.get("genome") or {}
    layout = GenomeLayout(
        total_bits=int(genome_node.get("total_bits", 8)),
        conv_bits=int(genome_node.get("conv_bits", 4)),
        dense_bits=int(genome_node.get("dense_bits", 4)),
    )
    if "conv" not in node or "dense" not in node:
        raise ConfigError("space config needs both 'conv' and 'dense' domains")
    return SearchSpace(
        conv_domain=_parse_domain("conv", node["conv"]),
        dense_domain=_parse_domain("dense", node["dense"]),
        genome_layout=layout,
    )


def _parse_strategy(node: dict[str, Any] | None, space: SearchSpace, seed: int) -> StrategyConfig:
    if not node or "kind" not in node:
        raise ConfigError("strategy config needs a 'kind' (grid | random | ga)")
    kind = str(node["kind"])
    extra = set(node) - {"kind"}
    if kind == "grid":
        if extra:
            raise ConfigError(f"unknown grid strategy keys: {sorted(extra)}")
        return GridConfig(conv=space.conv_domain, dense=space.dense_domain)
    if kind == "random":
        unknown = extra - _RANDOM_KEYS
        if unknown:
            raise ConfigError(f"unknown random strategy keys: {sorted(unknown)}")
        return RandomConfig(
            conv=space.conv_domain,
            dense=space.dense_domain,
            n_iterations=int(node.get("iterations", 0)),
            seed=seed,
            dedup=bool(node.get("dedup", False)),
        )
    if kind == "ga":
        unknown = extra - _GA_KEYS
        if unknown:
            raise ConfigError(f"unknown ga strategy keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {k: node[k] for k in _GA_KEYS if k in node}
        return GAConfig(seed=seed, **kwargs)
    raise ConfigError(f"unknown strategy kind {kind!r}")


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def parse_config(raw: dict[str, Any]) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a mapping")
    space = _parse_space(raw.get("space"))
    seed = int(raw.get("seed", 0))
    strategy = _parse_strategy(raw.get("strategy"), space, seed)
    evaluator_node = raw.get("evaluator")
    if not evaluator_node:
        raise ConfigError("config needs an 'evaluator' section")
    evaluator = EvaluatorSpec.from_dict(evaluator_node)
    return RunConfig(
        space=space,
        strategy=strategy,
        evaluator=evaluator,
        seed=seed,
        cache=bool(raw.get("cache", True)),
        workers=int(raw.get("workers", 1)),
        raw=raw,
    )


def load_config(name_or_path: str, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Load a config file (or shipped fixture name), apply overrides, parse."""
    path = resolve_config_path(name_or_path)
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path}: invalid YAML ({exc})") from exc
    if raw is None:
        raw = {}
    if overrides:
        raw = _merge(raw, overrides)
    return parse_config(raw)
