"""光纤链路：插入损耗、经典信道功率与拉曼噪声"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions import DomainError
from ..physics.units import dbm_to_mw

GROUP_DELAY_PER_M = 4.9e-9  # 标准单模光纤 ~4.9 µs/km
DIRECTIONS = ('co', 'counter')


@dataclass(frozen=True)
class FiberLink:
    """光纤回路；loss_db为包含熔接与连接器的总损耗"""
    length: float = 0.0
    loss_db: float = 0.0
    raman_coeff: float = 0.0  # 光子/(s·mW)，折算到探测带宽内
    co_multiplier: float = 1.0

    def __post_init__(self):
        if self.length < 0:
            raise DomainError("Fiber length must be non-negative", parameter="length", value=self.length)
        if self.loss_db < 0:
            raise DomainError("Link loss must be non-negative", parameter="loss_db", value=self.loss_db)
        if self.raman_coeff < 0:
            raise DomainError("Raman coefficient must be non-negative", parameter="raman_coeff",
                              value=self.raman_coeff)
        if self.co_multiplier < 0:
            raise DomainError("co_multiplier must be non-negative", parameter="co_multiplier",
                              value=self.co_multiplier)

    @property
    def prop_delay(self) -> float:
        return self.length * GROUP_DELAY_PER_M


@dataclass(frozen=True)
class ClassicalChannel:
    """与量子信号共纤传输的经典时钟信道"""
    launch_power_dbm: float = -21.0
    direction: str = 'counter'

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise DomainError(f"Direction must be one of {DIRECTIONS}", parameter="direction", value=self.direction)


def transmittance(loss_db: float) -> float:
    """10^(−loss/10)"""
    if loss_db < 0:
        raise DomainError("Loss must be non-negative", parameter="loss_db", value=loss_db)
    return 10.0 ** (-loss_db / 10.0)


def apply_loss_dbm(power_dbm: float, loss_db: float) -> float:
    if loss_db < 0:
        raise DomainError("Loss must be non-negative", parameter="loss_db", value=loss_db)
    return power_dbm - loss_db


def received_power_dbm(channel: ClassicalChannel, link: FiberLink) -> float:
    return apply_loss_dbm(channel.launch_power_dbm, link.loss_db)


def direction_multiplier(channel: ClassicalChannel, link: FiberLink) -> float:
    """同向传输时拉曼散射按co_multiplier放大"""
    return link.co_multiplier if channel.direction == 'co' else 1.0


def _window(rep_rate: float, detection_window: Optional[float]) -> float:
    if not (rep_rate > 0):
        raise DomainError("Repetition rate must be positive", parameter="rep_rate", value=rep_rate)
    window = detection_window if detection_window is not None else 1.0 / rep_rate
    if not (window > 0):
        raise DomainError("Detection window must be positive", parameter="detection_window", value=window)
    return window


def raman_noise_prob_per_pulse(channel: ClassicalChannel, link: FiberLink, rep_rate: float,
                               detection_window: Optional[float] = None) -> float:
    """每个探测窗口内的拉曼噪声概率：raman_coeff · P_launch(mW) · window，截断到[0, 1]

    窗口缺省为一个重复周期。
    """
    window = _window(rep_rate, detection_window)
    power_mw = dbm_to_mw(channel.launch_power_dbm)
    prob = link.raman_coeff * power_mw * window * direction_multiplier(channel, link)
    return min(max(prob, 0.0), 1.0)


def calibrate_raman_coeff(target_prob: float, channel: ClassicalChannel, link: FiberLink,
                          detection_window: float) -> float:
    """反推得到指定每窗口噪声概率所需的拉曼系数"""
    if not (0.0 <= target_prob <= 1.0):
        raise DomainError("Target noise probability must lie in [0, 1]", parameter="target_prob",
                          value=target_prob)
    if not (detection_window > 0):
        raise DomainError("Detection window must be positive", parameter="detection_window",
                          value=detection_window)
    power_mw = dbm_to_mw(channel.launch_power_dbm)
    multiplier = direction_multiplier(channel, link)
    if multiplier == 0:
        raise DomainError("Zero direction multiplier cannot produce noise", parameter="co_multiplier")
    coeff = target_prob / (power_mw * detection_window * multiplier)
    logging.info(f"Raman coefficient {coeff:.4g} photons/s/mW at {channel.launch_power_dbm:.2f} dBm launch "
                 f"gives {target_prob:.3g} per window")
    return coeff


def thin_photons(counts, transmittance_value: float, rng: np.random.Generator) -> np.ndarray:
    """按透过率对光子数做二项稀疏"""
    if not (0.0 <= transmittance_value <= 1.0):
        raise DomainError("Transmittance must lie in [0, 1]", parameter="transmittance",
                          value=transmittance_value)
    return rng.binomial(np.asarray(counts, dtype=np.int64), transmittance_value)
