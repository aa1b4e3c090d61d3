"""导出管理器模块"""
import logging
import os
import re
import tempfile
from pathlib import Path
from typing import Dict, List, Optional

from ..exceptions import ConfigurationError, FileOperationError
from .formatters import (
    BaseFormatter, FitResultJsonFormatter, InterferogramCsvFormatter, ReportJsonFormatter,
    TimetagFormatter, VisibilityPointsFormatter
)

_SAFE_FILENAME = re.compile(r'[^A-Za-z0-9_.-]')


class ExportManager:
    """导出管理器 - 统一的结果文件接口"""

    def __init__(self):
        self.formatters: Dict[str, BaseFormatter] = {
            'interferogram': InterferogramCsvFormatter(),
            'points': VisibilityPointsFormatter(),
            'fit': FitResultJsonFormatter(),
            'report': ReportJsonFormatter(),
            'timetags': TimetagFormatter(),
        }

    def get_supported_formats(self) -> List[str]:
        return list(self.formatters.keys())

    def is_format_supported(self, format_name: str) -> bool:
        if not isinstance(format_name, str):
            return False
        return format_name.lower().strip() in self.formatters

    def _formatter(self, format_type: str) -> BaseFormatter:
        if not self.is_format_supported(format_type):
            raise ConfigurationError(
                f"Unsupported format '{format_type}'. Supported formats: {', '.join(self.get_supported_formats())}",
                field_name='format', field_value=format_type, error_code='UNSUPPORTED_FORMAT'
            )
        return self.formatters[format_type.lower().strip()]

    def render(self, format_type: str, obj) -> str:
        """把结果对象转为文件文本"""
        return self._formatter(format_type).render(obj)

    def parse(self, format_type: str, text: str, **kwargs):
        formatter = self._formatter(format_type)
        if not hasattr(formatter, 'parse'):
            raise ConfigurationError(f"Format '{format_type}' cannot be parsed", field_name='format',
                                     field_value=format_type)
        return formatter.parse(text, **kwargs)

    def read(self, format_type: str, path, **kwargs):
        """读取并解析文件"""
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise FileOperationError(f"Cannot read {path}", operation='read', filepath=str(path), original_error=e)
        return self.parse(format_type, text, **kwargs)

    def write(self, format_type: str, obj, out_dir, stem: str) -> Path:
        """写出结果文件，返回文件路径

        Args:
            format_type: interferogram / points / fit / report / timetags
            obj: 对应的结果对象
            out_dir: 输出目录，不存在时创建
            stem: 不含扩展名的文件名

        Returns:
            Path: 写出的文件路径
        """
        formatter = self._formatter(format_type)
        content = formatter.render(obj)
        filepath = Path(out_dir) / f"{self._safe_stem(stem)}{formatter.extension}"
        try:
            filepath.parent.mkdir(parents=True, exist_ok=True)
            # newline=''避免平台换行差异，保证逐字节可复现
            with open(filepath, 'w', encoding='utf-8', newline='') as f:
                f.write(content)
        except OSError as e:
            raise FileOperationError("Failed to write result file", operation='write',
                                     filepath=str(filepath), original_error=e)
        logging.info(f"Wrote {format_type} to {filepath}")
        return filepath

    def create_download_file(self, content: str, format_type: str, filename: Optional[str] = None) -> Dict:
        """在临时目录创建下载文件

        Returns:
            Dict: filepath、filename、content_type、file_size、format
        """
        formatter = self._formatter(format_type)
        if not isinstance(content, str):
            raise ConfigurationError("Content must be a string", field_name='content',
                                     field_value=type(content).__name__)
        stem = self._safe_stem(os.path.splitext(filename)[0] if filename else f"hom_{format_type}")
        filename = f"{stem}{formatter.extension}"
        filepath = os.path.join(tempfile.gettempdir(), filename)
        try:
            with open(filepath, 'w', encoding='utf-8', newline='') as f:
                f.write(content)
            file_size = os.path.getsize(filepath)
        except OSError as e:
            raise FileOperationError("Failed to create download file", operation='create_file',
                                     filepath=filepath, original_error=e)
        return {
            'filepath': filepath,
            'filename': filename,
            'content_type': formatter.content_type,
            'file_size': file_size,
            'format': format_type,
        }

    def cleanup_download_file(self, filepath: str) -> bool:
        try:
            if os.path.exists(filepath):
                os.remove(filepath)
                return True
            return False
        except OSError:
            return False

    @staticmethod
    def _safe_stem(stem: str) -> str:
        cleaned = _SAFE_FILENAME.sub('_', stem).strip('._')
        return cleaned or 'result'
