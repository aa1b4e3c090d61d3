"""时钟恢复：经典时钟下发到远端后的脉冲时刻与抖动"""
import math
from dataclasses import dataclass, replace

import numpy as np

from ..exceptions import DomainError
from ..physics.hom_model import DipModelParams


@dataclass(frozen=True)
class ClockModel:
    rep_rate: float = 100e6
    recovered_jitter_rms: float = 0.0
    static_offset: float = 0.0

    def __post_init__(self):
        if not (self.rep_rate > 0):
            raise DomainError("Clock rate must be positive", parameter="rep_rate", value=self.rep_rate)
        if self.recovered_jitter_rms < 0:
            raise DomainError("Jitter must be non-negative", parameter="recovered_jitter_rms",
                              value=self.recovered_jitter_rms)

    @property
    def period(self) -> float:
        return 1.0 / self.rep_rate


def jitter_samples(clock: ClockModel, size: int, rng: np.random.Generator) -> np.ndarray:
    """零均值高斯抖动；σ为0时不消耗随机数"""
    if clock.recovered_jitter_rms == 0:
        return np.zeros(size)
    return rng.normal(0.0, clock.recovered_jitter_rms, size=size)


def recovered_pulse_time(clock: ClockModel, pulse_index, rng: np.random.Generator):
    """t = i/f + static_offset + jitter_i"""
    index = np.asarray(pulse_index, dtype=np.int64)
    if index.size and index.min() < 0:
        raise DomainError("Pulse indices must be non-negative", parameter="pulse_index")
    times = index / clock.rep_rate + clock.static_offset + jitter_samples(clock, index.size, rng).reshape(index.shape)
    return float(times) if times.ndim == 0 else times


def jitter_corrected_dip(params: DipModelParams, jitter_rms: float) -> DipModelParams:
    """高斯抖动与高斯凹陷卷积：τ' = √(τ² + 2σ²)，V' = V·τ/τ'"""
    if jitter_rms < 0:
        raise DomainError("Jitter must be non-negative", parameter="jitter_rms", value=jitter_rms)
    tau_eff = math.sqrt(params.tau ** 2 + 2.0 * jitter_rms ** 2)
    return replace(params, tau=tau_eff, visibility=params.visibility * params.tau / tau_eff)
