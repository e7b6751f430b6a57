import pytest

from skullstrip.config import (LossSpec, PipelineConfig, config_from_sections,
                               dump_defaults, load_config, parse_config_text,
                               require)
from skullstrip.errors import ConfigError


class TestParser:
    def test_sections_and_scalars(self):
        text = """
        seed = 42
        [synth]
        rotation_range = 30.0     # trailing comment
        scale_range = [0.9, 1.2]
        downsample_factors = [2, 4]
        [net]
        head = "sdt1"
        """
        sections = parse_config_text(text)
        assert sections[""]["seed"] == 42
        assert sections["synth"]["rotation_range"] == 30.0
        assert sections["synth"]["scale_range"] == [0.9, 1.2]
        assert sections["net"]["head"] == "sdt1"

    def test_booleans_and_negative_numbers(self):
        sections = parse_config_text("a = true\nb = false\nc = -3\nd = -0.5\n")
        top = sections[""]
        assert top["a"] is True and top["b"] is False
        assert top["c"] == -3 and top["d"] == -0.5

    def test_hash_inside_string_kept(self):
        sections = parse_config_text('s = "a#b"\n')
        assert sections[""]["s"] == "a#b"

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("a = 1\na = 2\n")

    def test_garbage_line_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("not a key value\n")

    def test_unparseable_value(self):
        with pytest.raises(ConfigError, match="cannot parse"):
            parse_config_text("a = bare_string\n")


class TestPipelineConfig:
    def test_defaults_when_empty(self):
        cfg = config_from_sections({"": {}})
        assert cfg == PipelineConfig()

    def test_unknown_key_named_in_error(self):
        with pytest.raises(ConfigError, match="synth.rotaton_range"):
            config_from_sections({"": {}, "synth": {"rotaton_range": 3.0}})

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="bogus"):
            config_from_sections({"": {}, "bogus": {"a": 1}})

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError):
            config_from_sections({"": {"sed": 1}})

    def test_type_coercion_and_validation(self):
        cfg = config_from_sections({
            "": {"seed": 5},
            "net": {"levels": 2, "features_per_level": [4, 8], "input_size": 16},
            "loss": {"kind": "wsdt", "b": 0.001},
        })
        assert cfg.net.features_per_level == (4, 8)
        assert cfg.loss.kind == "wsdt"
        assert cfg.settings_with_loss().sdt_weight == 0.001

    def test_wrong_type_rejected(self):
        with pytest.raises(ConfigError, match="must be an integer"):
            config_from_sections({"": {}, "net": {"levels": 2.5}})

    def test_missing_required_key_named(self):
        cfg = config_from_sections({"": {}})
        with pytest.raises(ConfigError, match="paths.workdir"):
            require(cfg, "paths.workdir")

    def test_dump_defaults_round_trips(self):
        text = dump_defaults()
        cfg = config_from_sections(parse_config_text(text))
        assert cfg == PipelineConfig()

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text('seed = 9\n[paths]\nworkdir = "out"\n')
        cfg = load_config(path)
        assert cfg.seed == 9
        assert require(cfg, "paths.workdir") == "out"
