"""HOM干涉解析模型：凹陷函数、谱因子与可见度预测"""
import math
from dataclasses import dataclass

import numpy as np

from ..exceptions import DomainError
from .units import AngularBandwidth


@dataclass(frozen=True)
class DipModelParams:
    """凹陷模型参数 C·(1 − V·exp(−((t−t₀)/τ)²))"""
    c_max: float
    visibility: float
    tau: float  # 秒
    center: float = 0.0  # 秒

    def __post_init__(self):
        if self.c_max < 0:
            raise DomainError("c_max must be non-negative", parameter="c_max", value=self.c_max)
        if not (0.0 <= self.visibility <= 1.0):
            raise DomainError("Visibility must lie in [0, 1]", parameter="visibility", value=self.visibility)
        if not (self.tau > 0):
            raise DomainError("tau must be positive", parameter="tau", value=self.tau)


@dataclass(frozen=True)
class VisibilityModelParams:
    """可见度模型参数：μ、N_sys与两路带宽"""
    mu: float
    n_sys: float
    bw_a: AngularBandwidth
    bw_b: AngularBandwidth

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0):
            raise DomainError("mu must lie in [0, 1]", parameter="mu", value=self.mu)
        if self.n_sys < 0:
            raise DomainError("n_sys must be non-negative", parameter="n_sys", value=self.n_sys)


def _decay_rate(bw_a: AngularBandwidth, bw_b: AngularBandwidth) -> float:
    a2 = bw_a.value ** 2
    b2 = bw_b.value ** 2
    return a2 * b2 / (a2 + b2)


def spectral_factor(bw_a: AngularBandwidth, bw_b: AngularBandwidth, delay):
    """4ab/(a²+b²) · exp(−a²b²t²/(a²+b²))，t=0且带宽相等时取最大值2

    delay可以是标量或numpy数组。
    """
    a = bw_a.value
    b = bw_b.value
    prefactor = 4.0 * a * b / (a * a + b * b)
    delay = np.asarray(delay, dtype=float)
    value = prefactor * np.exp(-_decay_rate(bw_a, bw_b) * delay ** 2)
    return float(value) if value.ndim == 0 else value


def mode_overlap(bw_a: AngularBandwidth, bw_b: AngularBandwidth, delay, alignment: float = 1.0):
    """两高斯模式的重叠概率 |⟨A|B⟩|²，含偏振对准因子"""
    if not (0.0 <= alignment <= 1.0):
        raise DomainError("alignment must lie in [0, 1]", parameter="alignment", value=alignment)
    return alignment * 0.5 * spectral_factor(bw_a, bw_b, delay)


def dip_tau_from_bandwidths(bw_a: AngularBandwidth, bw_b: AngularBandwidth) -> float:
    """谱因子指数项对应的1/e半宽 τ (s)"""
    return 1.0 / math.sqrt(_decay_rate(bw_a, bw_b))


def dip_model(t, params: DipModelParams):
    """计算凹陷曲线的期望计数"""
    t = np.asarray(t, dtype=float)
    x = (t - params.center) / params.tau
    return params.c_max * (1.0 - params.visibility * np.exp(-x * x))


def predict_visibility(n_bar: float, params: VisibilityModelParams, delay: float = 0.0) -> float:
    """WCS与预示单光子干涉可见度模型

    V = spectral_factor / (n̄/μ + 2 + N_sys/(n̄·μ))
    """
    if not (n_bar > 0):
        raise DomainError("Mean photon number must be positive", parameter="n_bar", value=n_bar)
    if not (params.mu > 0):
        raise DomainError("mu must be positive", parameter="mu", value=params.mu)
    denominator = n_bar / params.mu + 2.0 + params.n_sys / (n_bar * params.mu)
    return spectral_factor(params.bw_a, params.bw_b, delay) / denominator


def optimal_n_bar(params: VisibilityModelParams) -> float:
    """使可见度最大的平均光子数 √N_sys（μ相消）"""
    if not (params.n_sys > 0):
        raise DomainError("No interior optimum without system noise", parameter="n_sys", value=params.n_sys)
    return math.sqrt(params.n_sys)
