"""Configuration loading: YAML parsing, fixture names, override precedence."""

import pytest

from cellsearch.config import load_config, parse_config, resolve_config_path
from cellsearch.errors import ConfigError
from cellsearch.strategies import GAConfig, GridConfig, RandomConfig


def minimal_raw(**overrides):
    raw = {
        "space": {
            "conv": {"lo": 0, "hi": 8},
            "dense": {"lo": 0, "hi": 4},
        },
        "strategy": {"kind": "random", "iterations": 3},
        "evaluator": {"kind": "surrogate"},
    }
    raw.update(overrides)
    return raw


class TestShippedFixtures:
    def test_grid_fixture(self):
        config = load_config("grid-4x2")
        assert isinstance(config.strategy, GridConfig)
        assert config.strategy_name == "grid"
        assert config.strategy.conv.values == (0, 2, 3, 4)
        assert config.strategy.dense.values == (1, 2)
        assert config.evaluator.kind == "table"

    def test_random_fixture(self):
        config = load_config("random-5")
        assert isinstance(config.strategy, RandomConfig)
        assert config.strategy.n_iterations == 5
        assert (config.strategy.conv.lo, config.strategy.conv.hi) == (2, 8)
        assert (config.strategy.dense.lo, config.strategy.dense.hi) == (1, 4)
        assert config.strategy.seed == config.seed

    def test_ga_fixture(self):
        config = load_config("ga-2x8")
        assert isinstance(config.strategy, GAConfig)
        assert config.strategy.population_size == 2
        assert config.strategy.generations == 8
        assert config.strategy.genome_length == 8

    def test_unknown_fixture_name(self):
        with pytest.raises(ConfigError):
            resolve_config_path("no-such-config")


class TestParsing:
    def test_minimal(self):
        config = parse_config(minimal_raw())
        assert config.seed == 0
        assert config.cache is True
        assert config.workers == 1

    def test_seed_flows_into_strategy(self):
        config = parse_config(minimal_raw(seed=42))
        assert config.seed == 42
        assert config.strategy.seed == 42

    def test_genome_layout_defaults(self):
        config = parse_config(minimal_raw())
        assert config.space.genome_layout.total_bits == 8

    def test_custom_genome_layout(self):
        raw = minimal_raw()
        raw["space"]["genome"] = {"total_bits": 6, "conv_bits": 3, "dense_bits": 3}
        raw["space"]["conv"] = {"lo": 0, "hi": 7}
        raw["space"]["dense"] = {"lo": 0, "hi": 7}
        config = parse_config(raw)
        assert config.space.genome_layout.conv_max == 7

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda raw: raw.pop("space"),
            lambda raw: raw.pop("strategy"),
            lambda raw: raw.pop("evaluator"),
            lambda raw: raw["space"].pop("conv"),
            lambda raw: raw["strategy"].pop("kind"),
            lambda raw: raw["strategy"].update(kind="annealing"),
            lambda raw: raw["strategy"].update(population_size=4),  # not a random key
            lambda raw: raw["space"].update(conv={"between": [0, 4]}),
        ],
    )
    def test_rejects_malformed(self, mutate):
        raw = minimal_raw()
        mutate(raw)
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_grid_rejects_stray_keys(self):
        raw = minimal_raw()
        raw["space"] = {"conv": {"values": [0, 2]}, "dense": {"values": [1]}}
        raw["strategy"] = {"kind": "grid", "iterations": 5}
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_non_mapping_document(self):
        with pytest.raises(ConfigError):
            parse_config(["not", "a", "mapping"])


class TestLoading:
    def test_file_path(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text(
            "space:\n"
            "  conv: {values: [0, 1]}\n"
            "  dense: {values: [1]}\n"
            "strategy: {kind: grid}\n"
            "evaluator: {kind: param_count}\n"
        )
        config = load_config(str(p))
        assert config.evaluator.kind == "param_count"

    def test_invalid_yaml(self, tmp_path):
        p = tmp_path / "broken.yaml"
        p.write_text("strategy: {kind: grid\n")
        with pytest.raises(ConfigError):
            load_config(str(p))

    def test_overrides_take_precedence(self):
        config = load_config("random-5", overrides={"seed": 99, "cache": False})
        assert config.seed == 99
        assert config.strategy.seed == 99
        assert config.cache is False

    def test_nested_override_merges(self):
        config = load_config("random-5", overrides={"strategy": {"iterations": 2}})
        assert config.strategy.n_iterations == 2
        assert isinstance(config.strategy, RandomConfig)  # kind untouched
