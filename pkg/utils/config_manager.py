import os
import json
from dataclasses import fields
from datetime import datetime
from typing import Dict

from components.experiments import ConfigError, ExperimentConfig, ExperimentKind

class ConfigManager:
    def __init__(self, config_dir: str = "configs"):
        self.config_dir = config_dir

    def get_config_file_path(self, name: str) -> str:
        """Get config file path for a named experiment"""
        safe_name = name.replace(".", "_").replace("/", "_").replace(" ", "_")
        return os.path.join(self.config_dir, f"{safe_name}_config.json")

    def get_default_config(self, experiment: str = ExperimentKind.NMSE_VS_SNR.value) -> Dict:
        """Get default configuration for an experiment kind"""
        try:
            kind = ExperimentKind(experiment)
        except ValueError:
            raise ConfigError(f"unknown experiment '{experiment}'")

        config = {
            'experiment': kind.value,
            'N': 256,
            'K': 16,
            'N_RF': 16,
            'L': 2,
            'V': 8,
            'Q': 96,
            'snr_ul_db': [float(s) for s in range(-10, 31, 5)],
            'snr_dl_db': [float(s) for s in range(0, 41, 5)],
            'trials': 500,
            'seed': 2017,
            'estimators': ['SD', 'OMP', 'SMD'],
            'noise_mode': 'Faithful',
            'rho': 1.0,
            'selection_snr_db': 20.0,
            'omp_sparsity': None,
            'smd_keep': None,
            'alpha': 1.0,
            'los_gain_var': 1.0,
            'nlos_gain_var': 10 ** -0.5
        }

        if kind == ExperimentKind.NMSE_VS_Q:
            config['Q'] = list(range(48, 193, 24))
            config['snr_ul_db'] = [10.0]
        elif kind == ExperimentKind.SUM_RATE_VS_DL_SNR:
            config['snr_ul_db'] = [10.0]
            config['estimators'] = ['SD', 'OMP', 'SMD', 'PerfectCSI']
        elif kind == ExperimentKind.PEAK_DETECTION:
            config['trials'] = 2000
            config['estimators'] = ['SD']
            config['noise_mode'] = 'WhiteNoise'

        return config

    def config_from_dict(self, data: Dict) -> ExperimentConfig:
        """Fill missing keys from the experiment's defaults and validate"""
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")

        config = self.get_default_config(data.get('experiment', ExperimentKind.NMSE_VS_SNR.value))
        config.update(data)
        try:
            cfg = ExperimentConfig(**config)
        except TypeError as e:
            raise ConfigError(str(e))
        return cfg.validate()

    def load_config(self, path: str) -> ExperimentConfig:
        """Load an experiment configuration from a JSON file"""
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}")
        return self.config_from_dict(data)

    def save_config(self, cfg: ExperimentConfig, path: str = None, name: str = None) -> Dict:
        """Save an experiment configuration as JSON; the directory is created on demand"""
        try:
            config_path = path or self.get_config_file_path(name or cfg.experiment)
            directory = os.path.dirname(config_path)
            if directory and not os.path.exists(directory):
                os.makedirs(directory)

            with open(config_path, 'w', encoding='utf-8') as f:
                json.dump(cfg.to_dict(), f, indent=2)

            return {
                'success': True,
                'message': f'Configuration saved for {cfg.experiment}',
                'saved_at': datetime.now().strftime('%Y-%m-%d %H:%M:%S'),
                'file_path': config_path,
                'config_hash': self.config_hash(cfg)
            }
        except Exception as e:
            return {
                'success': False,
                'error': str(e)
            }

    def config_hash(self, cfg: ExperimentConfig) -> str:
        """Stable digest of a configuration, seed excluded"""
        return cfg.config_hash()

