"""干涉图数据结构与基于极值的可见度计算"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..exceptions import DomainError
from ..physics.hom_model import DipModelParams, dip_model


def poisson_sigma(counts: float) -> float:
    """泊松误差 √counts，零计数取1"""
    return math.sqrt(counts) if counts > 0 else 1.0


@dataclass(frozen=True)
class InterferogramPoint:
    delay: float  # 秒
    counts: float
    sigma: float


@dataclass
class Interferogram:
    """三重符合计数随泵浦延迟的变化"""
    points: List[InterferogramPoint]
    integration_time: float
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        delays = [p.delay for p in self.points]
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise DomainError("Interferogram delays must be strictly increasing", parameter="delays")
        for point in self.points:
            if not (point.sigma > 0):
                raise DomainError("Interferogram sigma must be positive", parameter="sigma", value=point.sigma)
            if point.counts < 0:
                raise DomainError("Counts must be non-negative", parameter="counts", value=point.counts)
        if not (self.integration_time > 0):
            raise DomainError("Integration time must be positive", parameter="integration_time",
                              value=self.integration_time)

    @classmethod
    def from_counts(cls, delays: Sequence[float], counts: Sequence[float], integration_time: float,
                    meta: Optional[Dict[str, Any]] = None, sigmas: Optional[Sequence[float]] = None) -> 'Interferogram':
        if len(delays) != len(counts) or (sigmas is not None and len(sigmas) != len(counts)):
            raise DomainError("Delays, counts and sigmas must have equal length", parameter="points")
        if sigmas is None:
            sigmas = [poisson_sigma(c) for c in counts]
        points = [InterferogramPoint(float(d), float(c), float(s)) for d, c, s in zip(delays, counts, sigmas)]
        return cls(points, integration_time, dict(meta or {}))

    def __len__(self):
        return len(self.points)

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.points])

    @property
    def counts(self) -> np.ndarray:
        return np.array([p.counts for p in self.points])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])

    def plateau_counts(self) -> float:
        """两端各八分之一点（合计四分之一）的平均计数"""
        n_edge = max(1, len(self.points) // 8)
        counts = self.counts
        return float(np.mean(np.concatenate([counts[:n_edge], counts[-n_edge:]])))

    def plateau_rate(self) -> float:
        return self.plateau_counts() / self.integration_time


def visibility_from_extrema(c_max: float, c_min: float) -> float:
    """V = (C_max − C_min)/C_max"""
    if not (c_max > 0):
        raise DomainError("c_max must be positive", parameter="c_max", value=c_max)
    if c_min < 0:
        raise DomainError("c_min must be non-negative", parameter="c_min", value=c_min)
    if c_min > c_max:
        raise DomainError("c_min exceeds c_max", parameter="c_min", value=c_min)
    return (c_max - c_min) / c_max


def sigma_from_tau(tau: float) -> float:
    """高斯标准差 σ = 2τ√ln2"""
    if not (tau > 0):
        raise DomainError("tau must be positive", parameter="tau", value=tau)
    return 2.0 * tau * math.sqrt(math.log(2.0))


def interferogram_visibility(interferogram: Interferogram) -> float:
    """用平台均值与最小计数直接估计可见度"""
    plateau = interferogram.plateau_counts()
    c_min = min(float(interferogram.counts.min()), plateau)
    return visibility_from_extrema(plateau, c_min)


def synthetic_interferogram(params: DipModelParams, delays: Sequence[float], integration_time: float = 60.0,
                            rng: Optional[np.random.Generator] = None, meta: Optional[Dict[str, Any]] = None
                            ) -> Interferogram:
    """按凹陷模型生成干涉图；给定rng时做泊松抽样，否则为无噪声期望值"""
    expected = dip_model(np.asarray(delays, dtype=float), params)
    counts = rng.poisson(expected).astype(float) if rng is not None else expected
    return Interferogram.from_counts(list(delays), list(counts), integration_time, meta)
