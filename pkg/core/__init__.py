"""核心功能模块"""
from .api.service import ExperimentService
from .config.scenario import Scenario, load_preset, parse_scenario
from .document_processing.export_manager import ExportManager

__all__ = ['ExperimentService', 'Scenario', 'load_preset', 'parse_scenario', 'ExportManager']
