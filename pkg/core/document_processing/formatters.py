"""结果文件格式：干涉图CSV、拟合结果JSON、时间标签文本"""
import json
import math
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Tuple

import numpy as np

from ..analysis.interferogram import Interferogram, InterferogramPoint, poisson_sigma
from ..analysis.least_squares import FitResult
from ..exceptions import ScenarioValidationError
from ..physics.units import PS
from ..simulation.acquisition import TimetagStream

INTERFEROGRAM_HEADER = 'delay_ps,counts,sigma'
POINTS_HEADER = 'n_bar,visibility,sigma'


def format_number(value: float) -> str:
    """固定格式的数字文本，保证输出逐字节可复现"""
    return format(float(value), '.12g')


class BaseFormatter(ABC):
    """格式转换器基类"""
    extension = '.txt'
    content_type = 'text/plain'

    @abstractmethod
    def render(self, obj) -> str:
        """对象 → 文件文本"""
        pass


class InterferogramCsvFormatter(BaseFormatter):
    """干涉图CSV：表头 delay_ps,counts,sigma，每点一行"""
    extension = '.csv'
    content_type = 'text/csv'

    def render(self, interferogram: Interferogram) -> str:
        lines = [INTERFEROGRAM_HEADER]
        for point in interferogram.points:
            lines.append(f"{format_number(point.delay / PS)},{format_number(point.counts)},"
                         f"{format_number(point.sigma)}")
        return '\n'.join(lines) + '\n'

    def parse(self, text: str, integration_time: float = 60.0) -> Interferogram:
        """解析CSV；sigma列缺省时取泊松误差。错误信息带行号"""
        rows = _numeric_rows(text, INTERFEROGRAM_HEADER, min_columns=2, max_columns=3)
        points = []
        for line_number, values in rows:
            delay_ps, counts = values[0], values[1]
            if counts < 0:
                raise ScenarioValidationError("counts must be non-negative", line_number=line_number,
                                              field_name='counts', field_value=counts)
            sigma = values[2] if len(values) == 3 else poisson_sigma(counts)
            if not (sigma > 0):
                raise ScenarioValidationError("sigma must be positive", line_number=line_number,
                                              field_name='sigma', field_value=sigma)
            if points and delay_ps * PS <= points[-1].delay:
                raise ScenarioValidationError("delays must be strictly increasing", line_number=line_number,
                                              field_name='delay_ps', field_value=delay_ps)
            points.append(InterferogramPoint(delay_ps * PS, counts, sigma))
        return Interferogram(points, integration_time, {'source': 'csv'})


class VisibilityPointsFormatter(BaseFormatter):
    """可见度数据点CSV：n_bar,visibility,sigma"""
    extension = '.csv'
    content_type = 'text/csv'

    def render(self, points: List[Tuple[float, float, float]]) -> str:
        lines = [POINTS_HEADER] + [','.join(format_number(v) for v in point) for point in points]
        return '\n'.join(lines) + '\n'

    def parse(self, text: str) -> List[Tuple[float, float, float]]:
        rows = _numeric_rows(text, POINTS_HEADER, min_columns=3, max_columns=3)
        points = []
        for line_number, (n_bar, visibility, sigma) in rows:
            if not (n_bar > 0):
                raise ScenarioValidationError("n_bar must be positive", line_number=line_number,
                                              field_name='n_bar', field_value=n_bar)
            if not (sigma > 0):
                raise ScenarioValidationError("sigma must be positive", line_number=line_number,
                                              field_name='sigma', field_value=sigma)
            points.append((n_bar, visibility, sigma))
        return points


class FitResultJsonFormatter(BaseFormatter):
    """拟合结果JSON：params、std_errors、ci95、reduced_chi2、converged"""
    extension = '.json'
    content_type = 'application/json'

    def render(self, result: FitResult) -> str:
        return json.dumps(result.to_dict(), indent=2) + '\n'


class ReportJsonFormatter(BaseFormatter):
    """通用报告JSON（oracle、链路预算等）"""
    extension = '.json'
    content_type = 'application/json'

    def render(self, report: Dict[str, Any]) -> str:
        return json.dumps(_json_safe(report), indent=2) + '\n'


class TimetagFormatter(BaseFormatter):
    """时间标签文件：表头 bin_width_ps=..,total_bins=..,detector=..，之后每行一个格序号"""
    extension = '.tags'
    content_type = 'text/plain'

    def render(self, stream: TimetagStream) -> str:
        header = f"bin_width_ps={repr(stream.bin_width / PS)},total_bins={stream.total_bins},detector={stream.detector}"
        return '\n'.join([header] + [str(int(b)) for b in stream.bins]) + '\n'

    def parse(self, text: str) -> TimetagStream:
        lines = text.splitlines()
        if not lines:
            raise ScenarioValidationError("Empty timetag file", line_number=1)
        fields = {}
        for item in lines[0].split(','):
            key, sep, value = item.partition('=')
            if not sep:
                raise ScenarioValidationError(f"Malformed timetag header item '{item}'", line_number=1)
            fields[key.strip()] = value.strip()
        missing = {'bin_width_ps', 'total_bins', 'detector'} - set(fields)
        if missing:
            raise ScenarioValidationError(f"Timetag header lacks {', '.join(sorted(missing))}", line_number=1)
        try:
            bin_width = float(fields['bin_width_ps']) * PS
            total_bins = int(fields['total_bins'])
        except ValueError:
            raise ScenarioValidationError("Unparsable timetag header values", line_number=1)
        bins = []
        for number, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                value = int(line.strip())
            except ValueError:
                raise ScenarioValidationError(f"Expected an integer bin index, got '{line.strip()}'",
                                              line_number=number)
            if bins and value <= bins[-1]:
                raise ScenarioValidationError("Bin indices must be strictly increasing", line_number=number)
            if value < 0 or value >= total_bins:
                raise ScenarioValidationError("Bin index outside [0, total_bins)", line_number=number)
            bins.append(value)
        return TimetagStream(fields['detector'], np.array(bins, dtype=np.int64), bin_width, total_bins)


def _numeric_rows(text: str, header: str, min_columns: int, max_columns: int) -> List[Tuple[int, List[float]]]:
    """读取数值行；首个非空行若不是数字则视为表头且必须与header一致"""
    rows = []
    header_seen = False
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        cells = [c.strip() for c in line.split(',')]
        if not rows and not header_seen and not _is_number(cells[0]):
            expected = header.split(',')
            if not (min_columns <= len(cells) <= max_columns) or cells != expected[:len(cells)]:
                raise ScenarioValidationError(f"Unexpected header '{line}', expected '{header}'", line_number=number)
            header_seen = True
            continue
        if not (min_columns <= len(cells) <= max_columns):
            raise ScenarioValidationError(f"Expected {min_columns}-{max_columns} columns, got {len(cells)}",
                                          line_number=number)
        try:
            values = [float(c) for c in cells]
        except ValueError:
            raise ScenarioValidationError(f"Malformed row '{line}'", line_number=number)
        if not all(math.isfinite(v) for v in values):
            raise ScenarioValidationError(f"Non-finite value in row '{line}'", line_number=number)
        rows.append((number, values))
    return rows


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value
