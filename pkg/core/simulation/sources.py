"""光源模型：弱相干态(WCS)与预示光子对源(EPS)的逐脉冲抽样"""
import logging
import math
import numbers
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.stats import binom, poisson

from ..exceptions import DomainError
from .acquisition import DetectorConfig

WCS_N_BAR_WARNING = 0.1


@dataclass(frozen=True)
class WcsSourceConfig:
    """WCS源配置；n_bar为分束器输入端每脉冲平均光子数"""
    n_bar: float = 0.01
    pulse_fwhm: float = 80e-12
    rep_rate: float = 100e6
    center_offset: float = 0.0
    background_prob: float = 0.0  # 激光消光比/ASE泄漏产生的可区分背景光子

    def __post_init__(self):
        if not (self.n_bar >= 0):
            raise DomainError("n_bar must be non-negative", parameter="n_bar", value=self.n_bar)
        if not (self.pulse_fwhm > 0):
            raise DomainError("pulse_fwhm must be positive", parameter="pulse_fwhm", value=self.pulse_fwhm)
        if not (self.rep_rate > 0):
            raise DomainError("rep_rate must be positive", parameter="rep_rate", value=self.rep_rate)
        if not (self.background_prob >= 0):
            raise DomainError("background_prob must be non-negative", parameter="background_prob",
                              value=self.background_prob)
        if self.n_bar > WCS_N_BAR_WARNING:
            logging.warning(f"WCS mean photon number {self.n_bar} is above {WCS_N_BAR_WARNING}; "
                            f"multi-photon events will dominate")


@dataclass(frozen=True)
class EpsSourceConfig:
    """光子对源配置，泵浦延迟必须是步长的整数倍"""
    pair_prob: float = 1.0 / 39.0
    car: float = 40.0
    pump_delay: float = 0.0
    delay_step: float = 10e-12
    herald_efficiency: float = 0.05
    signal_efficiency: float = 0.04
    accidental_herald_prob: float = 0.0
    scan_range_steps: int = 20
    rep_rate: float = 100e6

    def __post_init__(self):
        if not (0.0 < self.pair_prob < 1.0):
            raise DomainError("pair_prob must lie in (0, 1)", parameter="pair_prob", value=self.pair_prob)
        if not (self.car >= 1.0):
            raise DomainError("CAR must be at least 1", parameter="car", value=self.car)
        if not (self.delay_step > 0):
            raise DomainError("delay_step must be positive", parameter="delay_step", value=self.delay_step)
        for name in ('herald_efficiency', 'signal_efficiency'):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1]", parameter=name, value=value)
        if not (0.0 <= self.accidental_herald_prob < 1.0):
            raise DomainError("accidental_herald_prob must lie in [0, 1)", parameter="accidental_herald_prob",
                              value=self.accidental_herald_prob)
        steps = self.pump_delay / self.delay_step
        if abs(steps - round(steps)) > 1e-6:
            raise DomainError("pump_delay must be an integer multiple of delay_step",
                              parameter="pump_delay", value=self.pump_delay)

    @classmethod
    def from_car(cls, car: float, **kwargs) -> 'EpsSourceConfig':
        """由CAR推算对产生概率"""
        return cls(pair_prob=car_to_pair_prob(car), car=car, **kwargs)

    @property
    def pump_delay_steps(self) -> int:
        return int(round(self.pump_delay / self.delay_step))


@dataclass
class EmissionRecord:
    """一批脉冲的发射结果（数组按脉冲序号对齐）"""
    source: str
    pulse_index: np.ndarray
    emission_time: np.ndarray
    photons_a: np.ndarray = None
    background: np.ndarray = None
    pairs: np.ndarray = None
    herald_photons: np.ndarray = None
    signal_photons: np.ndarray = None
    accidental_heralds: np.ndarray = None

    def __post_init__(self):
        zeros = np.zeros(len(self.pulse_index), dtype=np.int64)
        for name in ('photons_a', 'background', 'pairs', 'herald_photons', 'signal_photons',
                     'accidental_heralds'):
            if getattr(self, name) is None:
                setattr(self, name, zeros.copy())

    def __len__(self):
        return len(self.pulse_index)


def _as_index(pulse_index) -> np.ndarray:
    index = np.atleast_1d(np.asarray(pulse_index, dtype=np.int64))
    if index.size and index.min() < 0:
        raise DomainError("Pulse indices must be non-negative", parameter="pulse_index", value=int(index.min()))
    return index


def sample_wcs(config: WcsSourceConfig, pulse_index, rng: np.random.Generator) -> EmissionRecord:
    """WCS逐脉冲光子数 ~ Poisson(n̄)"""
    index = _as_index(pulse_index)
    photons = rng.poisson(config.n_bar, size=index.size)
    background = rng.poisson(config.background_prob, size=index.size)
    emission_time = index / config.rep_rate + config.center_offset
    return EmissionRecord('wcs', index, emission_time, photons_a=photons, background=background)


def sample_eps(config: EpsSourceConfig, pulse_index, rng: np.random.Generator) -> EmissionRecord:
    """EPS逐脉冲抽样：对数 ~ Poisson(p)，预示与信号光子分别做二项稀疏"""
    index = _as_index(pulse_index)
    pairs = rng.poisson(config.pair_prob, size=index.size)
    herald_photons = rng.binomial(pairs, config.herald_efficiency)
    signal_photons = rng.binomial(pairs, config.signal_efficiency)
    accidental = (rng.random(index.size) < config.accidental_herald_prob).astype(np.int64)
    emission_time = index / config.rep_rate + config.pump_delay
    return EmissionRecord('eps', index, emission_time, pairs=pairs, herald_photons=herald_photons,
                          signal_photons=signal_photons, accidental_heralds=accidental)


def _click_given_pairs(config: EpsSourceConfig, detector: Optional[DetectorConfig], pairs):
    """给定对数k时预示探测器响应的概率"""
    eta = config.herald_efficiency * (detector.efficiency if detector else 1.0)
    dark = detector.dark_prob_per_bin if detector else 0.0
    no_click = (1.0 - eta) ** np.asarray(pairs) * (1.0 - config.accidental_herald_prob) * (1.0 - dark)
    return 1.0 - no_click


def herald_probability(config: EpsSourceConfig, detector: Optional[DetectorConfig] = None) -> float:
    """每脉冲预示响应概率（泊松多对统计下的闭式解）"""
    eta = config.herald_efficiency * (detector.efficiency if detector else 1.0)
    dark = detector.dark_prob_per_bin if detector else 0.0
    return 1.0 - math.exp(-config.pair_prob * eta) * (1.0 - config.accidental_herald_prob) * (1.0 - dark)


def sample_eps_heralded(config: EpsSourceConfig, detector: Optional[DetectorConfig], pulse_index,
                        rng: np.random.Generator) -> EmissionRecord:
    """以预示响应为条件的EPS抽样

    P(k | click) ∝ Poisson(k; p) · P(click | k)。
    accidental_heralds标记没有真实预示光子被探测到的脉冲。
    """
    index = _as_index(pulse_index)
    k_max = int(poisson.ppf(1.0 - 1e-15, config.pair_prob)) + 3
    ks = np.arange(k_max + 1)
    weights = poisson.pmf(ks, config.pair_prob) * _click_given_pairs(config, detector, ks)
    if weights.sum() <= 0:
        raise DomainError("Herald click probability is zero", parameter="herald_efficiency",
                          value=config.herald_efficiency)
    pairs = rng.choice(ks, size=index.size, p=weights / weights.sum())

    eta = config.herald_efficiency * (detector.efficiency if detector else 1.0)
    dark = detector.dark_prob_per_bin if detector else 0.0
    p_click = _click_given_pairs(config, detector, pairs)
    p_background_only = (1.0 - eta) ** pairs * (1.0 - (1.0 - config.accidental_herald_prob) * (1.0 - dark))
    accidental = (rng.random(index.size) * p_click < p_background_only).astype(np.int64)
    herald_photons = np.where(accidental == 1, 0, _zero_truncated_binomial(pairs, eta, rng))

    signal_photons = rng.binomial(pairs, config.signal_efficiency)
    emission_time = index / config.rep_rate + config.pump_delay
    return EmissionRecord('eps', index, emission_time, pairs=pairs, herald_photons=herald_photons,
                          signal_photons=signal_photons, accidental_heralds=accidental)


def _zero_truncated_binomial(trials: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """Binomial(trials, p) 以结果≥1为条件的逆CDF抽样；trials=0 时返回0"""
    p_zero = (1.0 - p) ** trials
    u = p_zero + (1.0 - p_zero) * (1.0 - rng.random(np.shape(trials)))
    return binom.ppf(u, trials, p).astype(np.int64)


def car_to_pair_prob(car: float) -> float:
    """CAR = 1 + 1/p 的反解"""
    if not (car > 1.0):
        raise DomainError("CAR must exceed 1", parameter="car", value=car)
    pair_prob = 1.0 / (car - 1.0)
    if pair_prob >= 1.0:
        raise DomainError("CAR implies a pair probability of at least 1", parameter="car", value=car)
    return pair_prob


def set_pump_delay(config: EpsSourceConfig, steps: int) -> EpsSourceConfig:
    """设置泵浦延迟为steps个步长"""
    if isinstance(steps, bool) or not isinstance(steps, numbers.Integral):
        raise DomainError("Pump delay steps must be an integer", parameter="steps", value=steps)
    if abs(steps) > config.scan_range_steps:
        raise DomainError(f"Pump delay steps outside ±{config.scan_range_steps}", parameter="steps", value=steps)
    return replace(config, pump_delay=int(steps) * config.delay_step)
