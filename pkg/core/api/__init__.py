"""服务编排模块"""
from .service import ExperimentService, ScanOutcome, DEFAULT_BW_A, DEFAULT_BW_B

__all__ = ['ExperimentService', 'ScanOutcome', 'DEFAULT_BW_A', 'DEFAULT_BW_B']
