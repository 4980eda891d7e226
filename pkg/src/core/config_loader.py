"""
Configuration management for atomchip
"""

import copy
import os
from typing import Any, Dict, Optional

import yaml

from src.core.errors import ConfigError

DEFAULTS: Dict[str, Any] = {
    'species': 'Rb87',
    'numerics': {
        'threads': 1,
        'richardson': False,
    },
    'minimizer': {
        'max_iterations': 200,
        'gradient_tolerance': 1e-10,
        'step_tolerance': 1e-9,
        'sanity_half_width_mm': 5.0,
    },
    'profile': {
        'samples': 401,
    },
    'dynamics': {
        'dt_us': 10.0,
        'record_interval_ms': 1.0,
        'seed': 12345,
        'ensemble_size': 0,
        'temperature_uK': 1.0,
    },
    'limits': {
        'j_max_A_per_cm2': 4.6e6,
        'adiabaticity_factor': 10.0,
    },
    'output': {
        'directory': 'results',
    },
    'logging': {
        'level': 'INFO',
        'file': None,
    },
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigLoader:
    """Loads configuration from a YAML file on top of built-in defaults"""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration loader

        Args:
            config_path: Path to configuration YAML file; None uses the defaults
        """
        self.config_path = config_path
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        if self.config_path is None:
            return copy.deepcopy(DEFAULTS)
        if not os.path.exists(self.config_path):
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")

        with open(self.config_path, 'r', encoding='utf-8') as f:
            try:
                config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Configuration file {self.config_path} is not valid YAML: {e}") from e
        if not isinstance(config, dict):
            raise ConfigError(f"Configuration file {self.config_path} must hold a mapping")

        return _merge(DEFAULTS, config)

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value by dot-notation key

        Args:
            key: Configuration key (e.g., 'dynamics.seed')
            default: Default value if key not found

        Returns:
            Configuration value
        """
        value = self.config
        for k in key.split('.'):
            if not isinstance(value, dict):
                return default
            value = value.get(k)
            if value is None:
                return default
        return value

    def get_numerics_config(self) -> Dict:
        return self.config.get('numerics', {})

    def get_minimizer_config(self) -> Dict:
        return self.config.get('minimizer', {})

    def get_dynamics_config(self) -> Dict:
        return self.config.get('dynamics', {})

    def get_output_config(self) -> Dict:
        return self.config.get('output', {})

    def get_logging_config(self) -> Dict:
        return self.config.get('logging', {})
