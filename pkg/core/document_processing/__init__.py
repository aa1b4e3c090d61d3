"""结果文件子模块"""
from .export_manager import ExportManager
from .formatters import (
    BaseFormatter, InterferogramCsvFormatter, VisibilityPointsFormatter, FitResultJsonFormatter,
    ReportJsonFormatter, TimetagFormatter, INTERFEROGRAM_HEADER, POINTS_HEADER
)

__all__ = [
    'ExportManager', 'BaseFormatter', 'InterferogramCsvFormatter', 'VisibilityPointsFormatter',
    'FitResultJsonFormatter', 'ReportJsonFormatter', 'TimetagFormatter', 'INTERFEROGRAM_HEADER',
    'POINTS_HEADER'
]
