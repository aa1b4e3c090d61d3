"""时间标签采集：阈值探测、三重符合计数与CAR统计"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..exceptions import ConfigurationError, DomainError

DETECTOR_LABELS = ('herald', 'snspd1', 'snspd2')


@dataclass(frozen=True)
class DetectorConfig:
    """单个阈值探测器：探测效率与每时间格暗计数概率"""
    efficiency: float
    dark_prob_per_bin: float = 0.0
    label: str = 'snspd1'

    def __post_init__(self):
        if not (0.0 <= self.efficiency <= 1.0):
            raise DomainError("Detector efficiency must lie in [0, 1]", parameter="efficiency",
                              value=self.efficiency)
        if not (0.0 <= self.dark_prob_per_bin < 1.0):
            raise DomainError("Dark count probability must lie in [0, 1)", parameter="dark_prob_per_bin",
                              value=self.dark_prob_per_bin)


@dataclass(frozen=True)
class TimetagStream:
    """探测事件的时间格序号，严格递增"""
    detector: str
    bins: np.ndarray
    bin_width: float
    total_bins: int

    def __post_init__(self):
        if not (self.bin_width > 0):
            raise DomainError("bin_width must be positive", parameter="bin_width", value=self.bin_width)
        bins = np.asarray(self.bins, dtype=np.int64)
        if bins.size:
            if np.any(np.diff(bins) <= 0):
                raise DomainError("Timetag bins must be strictly increasing", parameter="bins")
            if bins[0] < 0 or bins[-1] >= self.total_bins:
                raise DomainError("Timetag bins outside [0, total_bins)", parameter="bins",
                                  value=(int(bins[0]), int(bins[-1])))
        object.__setattr__(self, 'bins', bins)

    def __len__(self):
        return int(self.bins.size)

    @property
    def duration(self) -> float:
        return self.total_bins * self.bin_width


@dataclass
class CoincidenceResult:
    """符合计数结果"""
    threefolds: int
    pairs: Dict[str, int] = field(default_factory=dict)
    singles: Dict[str, int] = field(default_factory=dict)
    duration: float = 0.0

    def rates(self) -> Dict[str, float]:
        """各类计数换算为每秒速率"""
        if self.duration <= 0:
            return {}
        rates = {'threefolds': self.threefolds / self.duration}
        rates.update({f"pair:{k}": v / self.duration for k, v in self.pairs.items()})
        rates.update({f"single:{k}": v / self.duration for k, v in self.singles.items()})
        return rates


@dataclass
class CarResult:
    """符合-偶然比；defined为False表示输入为空，infinite表示偶然计数为零"""
    car: float
    coincidences: int
    accidentals: int
    defined: bool = True
    infinite: bool = False


@dataclass
class HeraldingEstimate:
    mu: float
    consistent: bool = True


def bin_width_from_rate(sample_rate: float) -> float:
    if not (sample_rate > 0):
        raise DomainError("Sample rate must be positive", parameter="sample_rate", value=sample_rate)
    return 1.0 / sample_rate


def detect(arrival_times, config: DetectorConfig, bin_width: float, duration: float,
           rng: np.random.Generator) -> TimetagStream:
    """每个到达光子以效率η独立响应，再叠加均匀分布的暗计数

    同一时间格内的多次响应合并为一次（阈值探测器）。
    """
    if not (duration > 0):
        raise DomainError("Acquisition duration must be positive", parameter="duration", value=duration)
    if not (bin_width > 0):
        raise DomainError("bin_width must be positive", parameter="bin_width", value=bin_width)
    total_bins = int(math.ceil(duration / bin_width - 1e-9))
    times = np.asarray(arrival_times, dtype=float).ravel()
    if times.size and (times.min() < 0 or times.max() >= duration):
        raise DomainError("Arrival times outside the acquisition window", parameter="arrival_times")

    detected = times[rng.random(times.size) < config.efficiency]
    photon_bins = np.floor(detected / bin_width).astype(np.int64)
    n_dark = rng.binomial(total_bins, config.dark_prob_per_bin) if config.dark_prob_per_bin > 0 else 0
    dark_bins = rng.integers(0, total_bins, size=n_dark, dtype=np.int64)
    bins = np.unique(np.concatenate([photon_bins, dark_bins]))
    bins = bins[bins < total_bins]
    return TimetagStream(config.label, bins, bin_width, total_bins)


def _check_compatible(*streams: TimetagStream):
    reference = streams[0]
    for stream in streams[1:]:
        if not math.isclose(stream.bin_width, reference.bin_width, rel_tol=1e-12):
            raise ConfigurationError(
                f"Bin width mismatch between '{reference.detector}' and '{stream.detector}'",
                field_name="bin_width", field_value=stream.bin_width
            )


def _has_partner(anchor: np.ndarray, other: np.ndarray, window_bins: int) -> np.ndarray:
    """anchor中每个事件在±window_bins内是否存在other事件"""
    lo = np.searchsorted(other, anchor - window_bins, side='left')
    hi = np.searchsorted(other, anchor + window_bins, side='right')
    return hi > lo


def count_threefold(herald: TimetagStream, d1: TimetagStream, d2: TimetagStream,
                    window_bins: int = 0) -> CoincidenceResult:
    """以预示事件为锚统计三重符合，两路SNSPD互换不影响结果"""
    if window_bins < 0:
        raise DomainError("Coincidence window must be non-negative", parameter="window_bins", value=window_bins)
    _check_compatible(herald, d1, d2)
    with_d1 = _has_partner(herald.bins, d1.bins, window_bins)
    with_d2 = _has_partner(herald.bins, d2.bins, window_bins)
    threefolds = int(np.count_nonzero(with_d1 & with_d2))
    pairs = {
        f"{herald.detector}-{d1.detector}": int(np.count_nonzero(with_d1)),
        f"{herald.detector}-{d2.detector}": int(np.count_nonzero(with_d2)),
        f"{d1.detector}-{d2.detector}": int(np.count_nonzero(_has_partner(d1.bins, d2.bins, window_bins))),
    }
    singles = {s.detector: len(s) for s in (herald, d1, d2)}
    return CoincidenceResult(threefolds, pairs, singles, herald.duration)


def compute_car(signal: TimetagStream, herald: TimetagStream, offset_bins: int, period_bins: int = 1) -> CarResult:
    """同一脉冲格的符合与相隔offset_bins的偶然符合之比

    offset_bins不得小于一个重复周期period_bins，否则偶然窗口会落在同一脉冲内。
    """
    if period_bins <= 0:
        raise DomainError("Repetition period must be positive", parameter="period_bins", value=period_bins)
    if offset_bins < period_bins:
        raise DomainError(f"Accidental offset must be at least one repetition period ({period_bins} bins)",
                          parameter="offset_bins", value=offset_bins)
    _check_compatible(signal, herald)
    if len(signal) == 0 or len(herald) == 0:
        logging.warning("CAR undefined: empty timetag stream")
        return CarResult(float('nan'), 0, 0, defined=False)
    coincidences = int(np.intersect1d(herald.bins, signal.bins, assume_unique=True).size)
    accidentals = int(np.intersect1d(herald.bins + offset_bins, signal.bins, assume_unique=True).size)
    if accidentals == 0:
        logging.warning(f"CAR unbounded: {coincidences} coincidences and no accidentals")
        return CarResult(float('inf'), coincidences, 0, infinite=True)
    return CarResult(coincidences / accidentals, coincidences, accidentals)


def estimate_heralding_efficiency(p_cc: float, p_h: float, eta_s: float) -> HeraldingEstimate:
    """μ = P_cc / (P_h · η_s)；结果超过1时标记为不一致"""
    if not (p_h > 0):
        raise DomainError("Herald probability must be positive", parameter="p_h", value=p_h)
    if not (eta_s > 0):
        raise DomainError("Detector efficiency must be positive", parameter="eta_s", value=eta_s)
    if p_cc < 0:
        raise DomainError("Coincidence probability must be non-negative", parameter="p_cc", value=p_cc)
    mu = p_cc / (p_h * eta_s)
    consistent = mu <= 1.0
    if not consistent:
        logging.warning(f"Heralding efficiency estimate {mu:.4g} exceeds 1")
    return HeraldingEstimate(mu, consistent)
