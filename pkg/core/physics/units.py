"""单位换算与谱带宽计算"""
import math
from dataclasses import dataclass

from ..exceptions import DomainError

# 变换极限高斯脉冲的时间-带宽积
TIME_BANDWIDTH_PRODUCT = 0.441

PS = 1e-12
GHZ = 1e9


@dataclass(frozen=True)
class AngularBandwidth:
    """角频率带宽 (rad/s)"""
    value: float

    def __post_init__(self):
        if not (self.value > 0) or not math.isfinite(self.value):
            raise DomainError("Angular bandwidth must be positive", parameter="value", value=self.value)

    @classmethod
    def from_ghz(cls, fwhm_ghz: float) -> 'AngularBandwidth':
        """由频率FWHM (GHz) 构造"""
        return cls(2.0 * math.pi * fwhm_ghz * GHZ)

    @property
    def ghz(self) -> float:
        return self.value / (2.0 * math.pi * GHZ)


def pulse_to_angular_bandwidth(fwhm_duration: float) -> AngularBandwidth:
    """变换极限高斯脉冲的时域FWHM (s) 转为角频率带宽

    Args:
        fwhm_duration: 脉冲时域半高全宽，单位秒

    Returns:
        AngularBandwidth: 2π × 0.441 / fwhm_duration
    """
    if not (fwhm_duration > 0):
        raise DomainError("Pulse duration must be positive", parameter="fwhm_duration", value=fwhm_duration)
    return AngularBandwidth(2.0 * math.pi * TIME_BANDWIDTH_PRODUCT / fwhm_duration)


def effective_bandwidth(pulse_bw: AngularBandwidth, filter_bw: AngularBandwidth) -> AngularBandwidth:
    """较窄的元件决定有效带宽"""
    return pulse_bw if pulse_bw.value <= filter_bw.value else filter_bw


def dbm_to_mw(power_dbm: float) -> float:
    return 10.0 ** (power_dbm / 10.0)
