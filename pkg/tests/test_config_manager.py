import json

import pytest

from components.experiments import ConfigError, ExperimentConfig
from utils.config_manager import ConfigManager


@pytest.fixture
def manager(tmp_path):
    return ConfigManager(config_dir=str(tmp_path / "configs"))


class TestDefaults:
    def test_no_directory_until_saved(self, manager, tmp_path):
        manager.config_from_dict({})
        assert not (tmp_path / "configs").exists()

    @pytest.mark.parametrize("experiment", ["NmseVsSnr", "NmseVsQ", "SumRateVsDlSnr", "PeakDetection"])
    def test_defaults_validate(self, manager, experiment):
        cfg = manager.config_from_dict({'experiment': experiment})
        assert cfg.experiment == experiment

    def test_defaults_match_dataclass(self, manager):
        assert manager.config_from_dict({}).to_dict() == ExperimentConfig().to_dict()

    def test_q_sweep_defaults(self, manager):
        cfg = manager.config_from_dict({'experiment': 'NmseVsQ'})
        assert cfg.q_values() == [48, 72, 96, 120, 144, 168, 192]

    def test_unknown_experiment(self, manager):
        with pytest.raises(ConfigError, match="unknown experiment"):
            manager.get_default_config('Fig7')


class TestLoading:
    def test_missing_keys_are_filled(self, manager, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({'N': 64, 'K': 4, 'N_RF': 4, 'V': 4, 'Q': 32}))
        cfg = manager.load_config(str(path))
        assert (cfg.N, cfg.K, cfg.V, cfg.Q) == (64, 4, 4, 32)
        assert cfg.trials == 500 and cfg.seed == 2017

    def test_unknown_key(self, manager):
        with pytest.raises(ConfigError, match="unknown configuration keys: antennas"):
            manager.config_from_dict({'antennas': 64})

    def test_not_an_object(self, manager):
        with pytest.raises(ConfigError, match="JSON object"):
            manager.config_from_dict([1, 2])

    def test_malformed_json(self, manager, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"N\": 64,")
        with pytest.raises(ConfigError, match="cannot read config"):
            manager.load_config(str(path))

    def test_missing_file(self, manager, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            manager.load_config(str(tmp_path / "absent.json"))

    def test_invalid_values_are_rejected(self, manager):
        with pytest.raises(ConfigError, match="multiple of K"):
            manager.config_from_dict({'Q': 100})


class TestSaving:
    def test_round_trip(self, manager, small_config):
        result = manager.save_config(small_config)
        assert result['success']
        assert result['config_hash'] == small_config.config_hash()
        assert result['file_path'].endswith("NmseVsSnr_config.json")
        assert manager.load_config(result['file_path']).to_dict() == small_config.to_dict()

    def test_explicit_path(self, manager, small_config, tmp_path):
        path = str(tmp_path / "mine.json")
        assert manager.save_config(small_config, path)['file_path'] == path

    def test_named_file_in_new_directory(self, manager, small_config, tmp_path):
        result = manager.save_config(small_config, name="run a.b")
        assert result['file_path'] == str(tmp_path / "configs" / "run_a_b_config.json")
        assert (tmp_path / "configs" / "run_a_b_config.json").exists()

    def test_unwritable_path(self, manager, small_config, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        result = manager.save_config(small_config, str(blocker / "c.json"))
        assert not result['success']
        assert 'error' in result
