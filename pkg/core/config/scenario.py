"""场景文件：分节键值格式的解析、校验、序列化与预设加载

格式::

    # 注释
    [section]
    key_with_unit = value   # 行尾注释

键名带单位后缀（_ps、_hz、_s、_m、_db、_dbm、_ghz），内部统一换算为SI单位。
"""
import hashlib
import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..exceptions import ConfigurationError, FileOperationError, ScenarioValidationError
from ..physics.units import PS, AngularBandwidth, effective_bandwidth, pulse_to_angular_bandwidth
from ..simulation.acquisition import DETECTOR_LABELS, DetectorConfig, bin_width_from_rate
from ..simulation.link import ClassicalChannel, FiberLink
from ..simulation.sources import EpsSourceConfig, WcsSourceConfig
from ..simulation.sync import ClockModel

PRESET_DIR = Path(__file__).resolve().parents[2] / 'presets'
SCENARIO_SUFFIX = '.scenario'
MODES = ('heralded', 'direct')

_NAME_PATTERN = re.compile(r'^[A-Za-z0-9_.-]+$')
_SECTION_PATTERN = re.compile(r'^\[([A-Za-z0-9_.]+)\]$')


@dataclass(frozen=True)
class FieldSpec:
    """单个字段的类型、缺省值与取值范围"""
    kind: type
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    requirement: str = ''
    choices: Tuple[str, ...] = ()


def _positive(requirement='must be positive'):
    return dict(check=lambda v: v > 0, requirement=requirement)


def _non_negative(requirement='must be non-negative'):
    return dict(check=lambda v: v >= 0, requirement=requirement)


def _probability(closed=True):
    if closed:
        return dict(check=lambda v: 0.0 <= v <= 1.0, requirement='must lie in [0, 1]')
    return dict(check=lambda v: 0.0 <= v < 1.0, requirement='must lie in [0, 1)')


def _detector_section(efficiency: float) -> Dict[str, FieldSpec]:
    return {
        'efficiency': FieldSpec(float, efficiency, **_probability()),
        'dark_prob_per_bin': FieldSpec(float, 0.0, **_probability(closed=False)),
    }


SCHEMA: Dict[str, Dict[str, FieldSpec]] = {
    'scenario': {
        'name': FieldSpec(str, 'scenario', check=lambda v: bool(_NAME_PATTERN.match(v)),
                          requirement='must contain only letters, digits, "_", "." or "-"'),
        'seed': FieldSpec(int, 0, **_non_negative()),
        'integration_time_s': FieldSpec(float, 60.0, **_positive()),
        'pulse_fraction': FieldSpec(float, 1.0, check=lambda v: 0.0 < v <= 1.0, requirement='must lie in (0, 1]'),
        'mode': FieldSpec(str, 'heralded', choices=MODES),
    },
    'wcs': {
        'n_bar': FieldSpec(float, 0.01, **_probability(closed=False)),
        'pulse_fwhm_ps': FieldSpec(float, 80.0, **_positive()),
        'rep_rate_hz': FieldSpec(float, 100e6, **_positive()),
        'center_offset_ps': FieldSpec(float, 0.0),
        'background_prob': FieldSpec(float, 0.0, **_probability(closed=False)),
    },
    'eps': {
        'pair_prob': FieldSpec(float, None, check=lambda v: 0.0 < v < 1.0, requirement='must lie in (0, 1)'),
        'car': FieldSpec(float, 40.0, check=lambda v: v > 2.0, requirement='must exceed 2'),
        'pump_delay_steps': FieldSpec(int, 0),
        'delay_step_ps': FieldSpec(float, 10.0, **_positive()),
        'herald_efficiency': FieldSpec(float, 0.05, **_probability()),
        'signal_efficiency': FieldSpec(float, 0.04, **_probability()),
        'accidental_herald_prob': FieldSpec(float, 0.0, **_probability(closed=False)),
        'scan_range_steps': FieldSpec(int, 20, **_non_negative()),
    },
    'link': {
        'length_m': FieldSpec(float, 0.0, **_non_negative()),
        'loss_db': FieldSpec(float, 0.0, **_non_negative()),
        'raman_coeff': FieldSpec(float, 0.0, **_non_negative()),
        'co_multiplier': FieldSpec(float, 1.0, **_non_negative()),
    },
    'classical': {
        'launch_power_dbm': FieldSpec(float, -21.0),
        'direction': FieldSpec(str, 'counter', choices=('co', 'counter')),
    },
    'clock': {
        'rep_rate_hz': FieldSpec(float, 100e6, **_positive()),
        'jitter_rms_ps': FieldSpec(float, 0.0, **_non_negative()),
        'static_offset_ps': FieldSpec(float, 0.0),
    },
    'hom': {
        'filter_a_ghz': FieldSpec(float, 10.0, **_positive()),
        'filter_b_ghz': FieldSpec(float, 5.0, **_positive()),
        'herald_pulse_fwhm_ps': FieldSpec(float, 60.0, **_positive()),
        'alignment': FieldSpec(float, 1.0, **_probability()),
    },
    'detector.herald': _detector_section(0.2),
    'detector.snspd1': _detector_section(0.72),
    'detector.snspd2': _detector_section(0.72),
    'acquisition': {
        'sample_rate_hz': FieldSpec(float, 1.2e9, **_positive()),
        'window_bins': FieldSpec(int, 0, **_non_negative()),
    },
    'scan': {
        'steps_min': FieldSpec(int, -20),
        'steps_max': FieldSpec(int, 20),
    },
}

Settings = Dict[str, Dict[str, Any]]
LineMap = Dict[Tuple[str, str], int]


def default_settings() -> Settings:
    return {section: {key: spec.default for key, spec in fields.items()} for section, fields in SCHEMA.items()}


def _convert(spec: FieldSpec, text: str, key: str, line: Optional[int]):
    """按字段类型解析文本值"""
    try:
        if spec.kind is int:
            value = int(text)
        elif spec.kind is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
        else:
            value = text
    except ValueError:
        raise ScenarioValidationError(f"'{key}' expects {spec.kind.__name__}, got '{text}'",
                                      line_number=line, field_name=key, field_value=text)
    return value


def _check_field(section: str, key: str, value, line: Optional[int] = None):
    spec = SCHEMA[section][key]
    if value is None:
        return
    if spec.kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if spec.kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ScenarioValidationError(f"[{section}] {key} must be an integer", line_number=line,
                                      field_name=key, field_value=value)
    if spec.kind is float and not isinstance(value, float):
        raise ScenarioValidationError(f"[{section}] {key} must be a number", line_number=line,
                                      field_name=key, field_value=value)
    if spec.choices and value not in spec.choices:
        raise ScenarioValidationError(f"[{section}] {key} must be one of {', '.join(spec.choices)}",
                                      line_number=line, field_name=key, field_value=value)
    if spec.check is not None and not spec.check(value):
        raise ScenarioValidationError(f"[{section}] {key} {spec.requirement}", line_number=line,
                                      field_name=key, field_value=value)


def _validate_cross_fields(settings: Settings, lines: LineMap):
    """跨字段一致性校验"""
    def line_of(*keys):
        found = [lines[k] for k in keys if k in lines]
        return max(found) if found else None

    wcs_rate = settings['wcs']['rep_rate_hz']
    clock_rate = settings['clock']['rep_rate_hz']
    if not math.isclose(wcs_rate, clock_rate, rel_tol=1e-12):
        raise ScenarioValidationError(
            f"WCS repetition rate {wcs_rate:g} Hz differs from clock rate {clock_rate:g} Hz",
            line_number=line_of(('wcs', 'rep_rate_hz'), ('clock', 'rep_rate_hz')), field_name='rep_rate_hz'
        )
    if settings['acquisition']['sample_rate_hz'] < clock_rate:
        raise ScenarioValidationError(
            "Sample rate must be at least the repetition rate",
            line_number=line_of(('acquisition', 'sample_rate_hz'), ('clock', 'rep_rate_hz')),
            field_name='sample_rate_hz'
        )
    eps = settings['eps']
    if eps['pair_prob'] is not None and eps['car'] is not None:
        raise ScenarioValidationError("Specify only one of pair_prob and car",
                                      line_number=line_of(('eps', 'pair_prob'), ('eps', 'car')),
                                      field_name='pair_prob')
    if eps['pair_prob'] is None and eps['car'] is None:
        raise ScenarioValidationError("One of pair_prob and car is required", field_name='pair_prob')

    scan = settings['scan']
    if scan['steps_min'] > scan['steps_max']:
        raise ScenarioValidationError("steps_min must not exceed steps_max",
                                      line_number=line_of(('scan', 'steps_min'), ('scan', 'steps_max')),
                                      field_name='steps_min')
    limit = eps['scan_range_steps']
    for section, key in (('scan', 'steps_min'), ('scan', 'steps_max'), ('eps', 'pump_delay_steps')):
        if abs(settings[section][key]) > limit:
            raise ScenarioValidationError(f"[{section}] {key} outside the configured scan range ±{limit}",
                                          line_number=line_of((section, key), ('eps', 'scan_range_steps')),
                                          field_name=key, field_value=settings[section][key])


@dataclass(frozen=True)
class HomSettings:
    """HOM干涉带宽与偏振对准"""
    filter_a: AngularBandwidth
    filter_b: AngularBandwidth
    herald_pulse_fwhm: float
    alignment: float


@dataclass(frozen=True, eq=True)
class Scenario:
    """一次完整实验的配置；settings以文件单位保存，保证序列化无损"""
    settings: Settings = field(default_factory=default_settings)

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_settings(cls, settings: Settings, lines: Optional[LineMap] = None) -> 'Scenario':
        merged = default_settings()
        for section, values in settings.items():
            if section not in SCHEMA:
                raise ScenarioValidationError(f"Unknown section [{section}]", field_name=section)
            for key, value in values.items():
                if key not in SCHEMA[section]:
                    raise ScenarioValidationError(f"Unknown key '{key}' in [{section}]", field_name=key)
                merged[section][key] = float(value) if SCHEMA[section][key].kind is float and \
                    isinstance(value, int) and not isinstance(value, bool) else value
        if 'pair_prob' in settings.get('eps', {}) and 'car' not in settings.get('eps', {}):
            merged['eps']['car'] = None
        scenario = cls.__new__(cls)
        object.__setattr__(scenario, 'settings', merged)
        scenario.validate(lines or {})
        return scenario

    def validate(self, lines: Optional[LineMap] = None):
        lines = lines or {}
        for section, values in self.settings.items():
            for key, value in values.items():
                _check_field(section, key, value, lines.get((section, key)))
        _validate_cross_fields(self.settings, lines)

    def with_settings(self, section: str, **values) -> 'Scenario':
        """返回修改若干字段后的新场景"""
        updated = {s: dict(v) for s, v in self.settings.items()}
        if section not in SCHEMA:
            raise ConfigurationError(f"Unknown section [{section}]", field_name=section)
        updated[section].update(values)
        if section == 'eps' and 'pair_prob' in values and 'car' not in values:
            updated['eps']['car'] = None
        if section == 'eps' and 'car' in values and 'pair_prob' not in values:
            updated['eps']['pair_prob'] = None
        return Scenario.from_settings(updated)

    # 基本字段
    @property
    def name(self) -> str:
        return self.settings['scenario']['name']

    @property
    def seed(self) -> int:
        return self.settings['scenario']['seed']

    @property
    def integration_time(self) -> float:
        return self.settings['scenario']['integration_time_s']

    @property
    def pulse_fraction(self) -> float:
        return self.settings['scenario']['pulse_fraction']

    @property
    def mode(self) -> str:
        return self.settings['scenario']['mode']

    # 组件配置
    @cached_property
    def wcs(self) -> WcsSourceConfig:
        s = self.settings['wcs']
        return WcsSourceConfig(n_bar=s['n_bar'], pulse_fwhm=s['pulse_fwhm_ps'] * PS, rep_rate=s['rep_rate_hz'],
                               center_offset=s['center_offset_ps'] * PS, background_prob=s['background_prob'])

    @cached_property
    def eps(self) -> EpsSourceConfig:
        s = self.settings['eps']
        step = s['delay_step_ps'] * PS
        kwargs = dict(pump_delay=s['pump_delay_steps'] * step, delay_step=step,
                      herald_efficiency=s['herald_efficiency'], signal_efficiency=s['signal_efficiency'],
                      accidental_herald_prob=s['accidental_herald_prob'],
                      scan_range_steps=s['scan_range_steps'], rep_rate=self.clock.rep_rate)
        if s['pair_prob'] is not None:
            return EpsSourceConfig(pair_prob=s['pair_prob'], car=1.0 + 1.0 / s['pair_prob'], **kwargs)
        return EpsSourceConfig.from_car(s['car'], **kwargs)

    @cached_property
    def link(self) -> FiberLink:
        s = self.settings['link']
        return FiberLink(length=s['length_m'], loss_db=s['loss_db'], raman_coeff=s['raman_coeff'],
                         co_multiplier=s['co_multiplier'])

    @cached_property
    def classical(self) -> ClassicalChannel:
        s = self.settings['classical']
        return ClassicalChannel(launch_power_dbm=s['launch_power_dbm'], direction=s['direction'])

    @cached_property
    def clock(self) -> ClockModel:
        s = self.settings['clock']
        return ClockModel(rep_rate=s['rep_rate_hz'], recovered_jitter_rms=s['jitter_rms_ps'] * PS,
                          static_offset=s['static_offset_ps'] * PS)

    @cached_property
    def detectors(self) -> Dict[str, DetectorConfig]:
        return {
            label: DetectorConfig(efficiency=self.settings[f'detector.{label}']['efficiency'],
                                  dark_prob_per_bin=self.settings[f'detector.{label}']['dark_prob_per_bin'],
                                  label=label)
            for label in DETECTOR_LABELS
        }

    @cached_property
    def hom(self) -> HomSettings:
        s = self.settings['hom']
        return HomSettings(filter_a=AngularBandwidth.from_ghz(s['filter_a_ghz']),
                           filter_b=AngularBandwidth.from_ghz(s['filter_b_ghz']),
                           herald_pulse_fwhm=s['herald_pulse_fwhm_ps'] * PS, alignment=s['alignment'])

    def bandwidths(self) -> Tuple[AngularBandwidth, AngularBandwidth]:
        """两路有效带宽：WCS脉冲与HOM滤波器取窄者，预示光子由泵浦脉冲与预示滤波器取窄者"""
        bw_a = effective_bandwidth(pulse_to_angular_bandwidth(self.wcs.pulse_fwhm), self.hom.filter_a)
        bw_b = effective_bandwidth(pulse_to_angular_bandwidth(self.hom.herald_pulse_fwhm), self.hom.filter_b)
        return bw_a, bw_b

    # 采集
    @property
    def sample_rate(self) -> float:
        return self.settings['acquisition']['sample_rate_hz']

    @property
    def bin_width(self) -> float:
        return bin_width_from_rate(self.sample_rate)

    @property
    def window_bins(self) -> int:
        return self.settings['acquisition']['window_bins']

    @property
    def bins_per_pulse(self) -> int:
        return max(1, int(round(self.sample_rate / self.clock.rep_rate)))

    @property
    def scan_steps(self) -> List[int]:
        return list(range(self.settings['scan']['steps_min'], self.settings['scan']['steps_max'] + 1))

    @property
    def pulses_per_point(self) -> int:
        return int(round(self.integration_time * self.clock.rep_rate))

    def to_text(self) -> str:
        """序列化为场景文件文本（不保留注释）"""
        lines = []
        for section, fields in SCHEMA.items():
            lines.append(f"[{section}]")
            for key in fields:
                value = self.settings[section][key]
                if value is None:
                    continue
                lines.append(f"{key} = {_format_value(value)}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode('utf-8')).hexdigest()[:16]


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_scenario(text: str) -> Scenario:
    """解析场景文本；任何错误都带行号"""
    settings: Settings = {}
    lines: LineMap = {}
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        match = _SECTION_PATTERN.match(line)
        if match:
            section = match.group(1)
            if section not in SCHEMA:
                raise ScenarioValidationError(f"Unknown section [{section}]", line_number=number, field_name=section)
            settings.setdefault(section, {})
            continue
        if '=' not in line:
            raise ScenarioValidationError(f"Expected 'key = value', got '{line}'", line_number=number)
        if section is None:
            raise ScenarioValidationError("Key outside of any section", line_number=number)
        key, _, value_text = (part.strip() for part in line.partition('='))
        if key not in SCHEMA[section]:
            raise ScenarioValidationError(f"Unknown key '{key}' in [{section}]", line_number=number, field_name=key)
        if (section, key) in lines:
            raise ScenarioValidationError(f"Duplicate key '{key}' in [{section}]", line_number=number,
                                          field_name=key)
        if not value_text:
            raise ScenarioValidationError(f"Missing value for '{key}'", line_number=number, field_name=key)
        value = _convert(SCHEMA[section][key], value_text, key, number)
        _check_field(section, key, value, number)
        settings[section][key] = value
        lines[(section, key)] = number
    return Scenario.from_settings(settings, lines)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise FileOperationError(f"Cannot read scenario file: {path}", operation='read',
                                 filepath=str(path), original_error=e)
    scenario = parse_scenario(text)
    logging.info(f"Loaded scenario '{scenario.name}' from {path} (digest {scenario.digest()})")
    return scenario


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob(f'*{SCENARIO_SUFFIX}'))


def load_preset(name: str) -> Scenario:
    if not _NAME_PATTERN.match(name or '') or name not in list_presets():
        raise ConfigurationError(f"Unknown preset '{name}'", field_name='preset', field_value=name,
                                 error_code='PRESET_NOT_FOUND')
    return load_scenario(PRESET_DIR / f'{name}{SCENARIO_SUFFIX}')


def resolve_scenario(reference: str) -> Scenario:
    """接受场景文件路径或预设名"""
    path = Path(reference)
    if path.suffix == SCENARIO_SUFFIX or path.exists():
        return load_scenario(path)
    return load_preset(reference)
