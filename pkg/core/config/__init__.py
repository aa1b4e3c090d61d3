"""场景配置子模块"""
from .scenario import (
    Scenario, HomSettings, SCHEMA, MODES, PRESET_DIR, default_settings, parse_scenario,
    load_scenario, load_preset, list_presets, resolve_scenario
)

__all__ = [
    'Scenario', 'HomSettings', 'SCHEMA', 'MODES', 'PRESET_DIR', 'default_settings', 'parse_scenario',
    'load_scenario', 'load_preset', 'list_presets', 'resolve_scenario'
]
