"""可复现的随机数子流"""
import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    """由 (seed, keys...) 派生独立的随机数发生器

    同一组键总是得到同一序列，与线程调度顺序无关。
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(v < 0 for v in entropy):
        raise ValueError("Seed and stream keys must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence(entropy))
