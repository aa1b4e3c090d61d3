"""截断Fock空间分束器穷举计算，作为HOM物理的参考结果

两路输入在50:50分束器上干涉。输入B按 overlap·(A模式) + √(1−overlap²)·(正交模式)
分解；探测器不分辨内部模式，因此不同分解分支之间没有干涉项，可按二项分布混合。
相干态按随机相位处理，即Fock态的泊松混合。
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict

import numpy as np
from scipy.stats import binom, poisson

from ..exceptions import ConfigurationError, DomainError

TRUNCATION_TAIL_LIMIT = 1e-6
DEFAULT_N_MAX = 4
_N_MAX_CEILING = 60

SOURCE_KINDS = ('vacuum', 'single', 'fock', 'coherent')


@dataclass(frozen=True)
class PhotonSource:
    """光源描述：vacuum | single | fock:n | coherent:n̄"""
    kind: str
    n_bar: float = 0.0
    n: int = 0

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise DomainError(f"Unknown source kind '{self.kind}'", parameter="kind", value=self.kind)
        if self.kind == 'coherent' and not (self.n_bar >= 0):
            raise DomainError("Coherent mean photon number must be non-negative", parameter="n_bar", value=self.n_bar)
        if self.kind == 'fock' and self.n < 0:
            raise DomainError("Fock photon number must be non-negative", parameter="n", value=self.n)

    @classmethod
    def single(cls) -> 'PhotonSource':
        return cls('single')

    @classmethod
    def coherent(cls, n_bar: float) -> 'PhotonSource':
        return cls('coherent', n_bar=float(n_bar))

    @classmethod
    def parse(cls, text: str) -> 'PhotonSource':
        """解析 'single'、'vacuum'、'coherent:0.01'、'fock:2' 形式的描述"""
        if not isinstance(text, str) or not text.strip():
            raise DomainError("Source spec must be a non-empty string", parameter="source", value=text)
        kind, _, arg = text.strip().lower().partition(':')
        try:
            if kind == 'coherent':
                return cls.coherent(float(arg))
            if kind == 'fock':
                return cls('fock', n=int(arg))
        except ValueError:
            raise DomainError(f"Malformed source spec '{text}'", parameter="source", value=text)
        if arg:
            raise DomainError(f"Source '{kind}' takes no argument", parameter="source", value=text)
        return cls(kind)

    @property
    def max_photons(self) -> int:
        """确定光子数态的光子数；相干态返回0"""
        return {'vacuum': 0, 'single': 1, 'fock': self.n}.get(self.kind, 0)

    def tail_probability(self, n_max: int) -> float:
        """截断到n_max以上的概率"""
        if self.kind == 'coherent':
            return float(poisson.sf(n_max, self.n_bar))
        return 0.0 if self.max_photons <= n_max else 1.0

    def weights(self, n_max: int) -> np.ndarray:
        """截断并归一化后的光子数分布"""
        w = np.zeros(n_max + 1)
        if self.kind == 'coherent':
            w[:] = poisson.pmf(np.arange(n_max + 1), self.n_bar)
            return w / w.sum()
        w[self.max_photons] = 1.0
        return w

    def describe(self) -> str:
        if self.kind == 'coherent':
            return f"coherent:{self.n_bar:g}"
        if self.kind == 'fock':
            return f"fock:{self.n}"
        return self.kind


@dataclass(frozen=True)
class FockOracleInput:
    """穷举计算的输入"""
    input_a: PhotonSource
    input_b: PhotonSource
    overlap: float
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if not (0.0 <= self.overlap <= 1.0):
            raise DomainError("Overlap amplitude must lie in [0, 1]", parameter="overlap", value=self.overlap)
        if self.n_max < 2:
            raise ConfigurationError("n_max must be at least 2", field_name="n_max", field_value=self.n_max)
        for label, source in (('input_a', self.input_a), ('input_b', self.input_b)):
            tail = source.tail_probability(self.n_max)
            if tail >= TRUNCATION_TAIL_LIMIT:
                raise ConfigurationError(
                    f"Truncation at n_max={self.n_max} drops probability {tail:.3g} of {label} "
                    f"({source.describe()}); increase n_max",
                    field_name="n_max", field_value=self.n_max
                )


@dataclass(frozen=True)
class OracleResult:
    """输出端口统计（探测效率为1的阈值探测器）"""
    p_coincidence: float
    p_bunch_a: float
    p_bunch_b: float
    p_vacuum_or_single: float

    @property
    def total(self) -> float:
        return self.p_coincidence + self.p_bunch_a + self.p_bunch_b + self.p_vacuum_or_single

    def to_dict(self) -> Dict[str, float]:
        return {
            'p_coincidence': self.p_coincidence,
            'p_bunch_a': self.p_bunch_a,
            'p_bunch_b': self.p_bunch_b,
            'p_vacuum_or_single': self.p_vacuum_or_single,
        }


@lru_cache(maxsize=None)
def beamsplitter_output(m: int, k: int) -> tuple:
    """|m⟩_a|k⟩_b 经50:50分束器后输出端口c含p个光子的概率，p=0..m+k

    a† → (c† + d†)/√2, b† → (c† − d†)/√2
    """
    total = m + k
    probs = []
    for p in range(total + 1):
        q = total - p
        amplitude_sum = 0
        for i in range(max(0, p - k), min(m, p) + 1):
            j = p - i
            sign = -1 if (k - j) % 2 else 1
            amplitude_sum += sign * math.comb(m, i) * math.comb(k, j)
        weight = math.factorial(p) * math.factorial(q) / (math.factorial(m) * math.factorial(k) * 2.0 ** total)
        probs.append(amplitude_sum * amplitude_sum * weight)
    return tuple(probs)


def _binomial_half(n: int) -> np.ndarray:
    return binom.pmf(np.arange(n + 1), n, 0.5)


def output_distribution(oracle_input: FockOracleInput) -> np.ndarray:
    """联合输出光子数分布 P(n_c, n_d)"""
    n_max = oracle_input.n_max
    wa = oracle_input.input_a.weights(n_max)
    wb = oracle_input.input_b.weights(n_max)
    matched = oracle_input.overlap ** 2
    joint = np.zeros((2 * n_max + 1, 2 * n_max + 1))

    for m in range(n_max + 1):
        if wa[m] == 0.0:
            continue
        for s in range(n_max + 1):
            if wb[s] == 0.0:
                continue
            weight_ms = wa[m] * wb[s]
            for k in range(s + 1):
                p_k = math.comb(s, k) * matched ** k * (1.0 - matched) ** (s - k)
                if p_k == 0.0:
                    continue
                interfered = np.array(beamsplitter_output(m, k))
                orthogonal = _binomial_half(s - k)
                # 匹配模式的输出与正交模式的随机分配互相独立
                split = np.outer(interfered, orthogonal)
                for p in range(m + k + 1):
                    for j in range(s - k + 1):
                        n_c = p + j
                        n_d = (m + k - p) + (s - k - j)
                        joint[n_c, n_d] += weight_ms * p_k * split[p, j]
    return joint


def fock_hom_oracle(oracle_input: FockOracleInput) -> OracleResult:
    """穷举输入光子数态，给出符合、两种聚束及其余事件的概率"""
    joint = output_distribution(oracle_input)
    p_coincidence = float(joint[1:, 1:].sum())
    p_bunch_a = float(joint[2:, 0].sum())
    p_bunch_b = float(joint[0, 2:].sum())
    p_rest = float(joint[0, 0] + joint[1, 0] + joint[0, 1])
    return OracleResult(p_coincidence, p_bunch_a, p_bunch_b, p_rest)


def oracle_visibility(input_a: PhotonSource, input_b: PhotonSource, n_max: int = DEFAULT_N_MAX) -> float:
    """凹陷可见度 1 − P_c(完全重叠)/P_c(完全可区分)"""
    p_aligned = fock_hom_oracle(FockOracleInput(input_a, input_b, 1.0, n_max)).p_coincidence
    p_distinct = fock_hom_oracle(FockOracleInput(input_a, input_b, 0.0, n_max)).p_coincidence
    if p_distinct <= 0.0:
        raise DomainError("No coincidences for distinguishable inputs; visibility undefined",
                          parameter="inputs", value=f"{input_a.describe()}, {input_b.describe()}")
    return 1.0 - p_aligned / p_distinct


def required_n_max(*sources: PhotonSource, minimum: int = DEFAULT_N_MAX) -> int:
    """满足截断尾部要求的最小n_max"""
    n_max = max([minimum] + [s.max_photons for s in sources])
    while any(s.tail_probability(n_max) >= TRUNCATION_TAIL_LIMIT for s in sources):
        n_max += 1
        if n_max > _N_MAX_CEILING:
            raise ConfigurationError("Mean photon number too large for Fock truncation",
                                     field_name="n_max", field_value=n_max)
    return n_max
