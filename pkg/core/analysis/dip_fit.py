"""HOM凹陷拟合：C·(1 − V·exp(−((t−t₀)/τ)²))"""
import logging
import math
from typing import Optional

import numpy as np

from ..exceptions import FitError
from ..physics.hom_model import DipModelParams
from ..physics.units import PS
from .interferogram import Interferogram
from .least_squares import FitResult, covariance_from_normal, damped_gauss_newton, normal_matrix

DIP_PARAM_NAMES = ('c_max', 'visibility', 'tau', 'center')
MIN_POINTS = 6
VISIBILITY_FLAG_RANGE = (-0.1, 1.1)
# 平滑最低点低于平台的深度（以该点误差计）不到此值时视为没有可分辨的凹陷
RESOLVE_SIGNIFICANCE = 3.5

# 内部以ps为时间单位，输出换回秒
_SI_SCALE = np.array([1.0, 1.0, PS, PS])


def _model(x, p):
    c_max, visibility, tau, center = p
    u = (x - center) / tau
    return c_max * (1.0 - visibility * np.exp(-u * u))


def _jacobian(x, p):
    c_max, visibility, tau, center = p
    u = (x - center) / tau
    e = np.exp(-u * u)
    return np.column_stack([
        1.0 - visibility * e,
        -c_max * e,
        -c_max * visibility * e * 2.0 * u * u / tau,
        -c_max * visibility * e * 2.0 * u / tau,
    ])


def _smoothed_minimum(data: Interferogram):
    smoothed = np.convolve(data.counts, np.ones(3) / 3.0, mode='same')
    i_min = int(np.argmin(smoothed[1:-1])) + 1
    return smoothed, i_min


def dip_significance(data: Interferogram) -> float:
    """三点平滑后最低点低于平台的深度，以该平滑点的统计误差为单位"""
    smoothed, i_min = _smoothed_minimum(data)
    noise = math.sqrt(float(np.sum(data.sigmas[i_min - 1:i_min + 2] ** 2))) / 3.0
    return (data.plateau_counts() - smoothed[i_min]) / noise


def initial_guess(data: Interferogram) -> np.ndarray:
    """由平台均值、平滑后的最低点和半深度宽度估计初值（ps单位）

    凹陷不显著时从V=0、扫描中点、τ=跨度/8出发。
    """
    x = data.delays / PS
    c0 = data.plateau_counts()
    if not (c0 > 0):
        raise FitError("Plateau has no counts; dip fit needs a non-empty interferogram", model='dip')
    span = float(x[-1] - x[0])
    tau0 = span / 8.0
    if dip_significance(data) < RESOLVE_SIGNIFICANCE:
        return np.array([c0, 0.0, tau0, float(x[0] + x[-1]) / 2.0])

    smoothed, i_min = _smoothed_minimum(data)
    v0 = float(np.clip(1.0 - smoothed[i_min] / c0, 0.0, 1.0))
    t0 = float(x[i_min])
    if v0 > 0:
        level = c0 * (1.0 - v0 / 2.0)
        left = i_min
        while left > 0 and smoothed[left] < level:
            left -= 1
        right = i_min
        while right < len(x) - 1 and smoothed[right] < level:
            right += 1
        half_width = (x[right] - x[left]) / 2.0
        if half_width > 0:
            tau0 = half_width / math.sqrt(math.log(2.0))
    return np.array([c0, v0, tau0, t0])


def fitted_dip_params(result: FitResult) -> DipModelParams:
    """拟合结果转为模型参数（可见度截断到[0, 1]）"""
    p = result.params
    return DipModelParams(c_max=max(p['c_max'], 0.0), visibility=min(max(p['visibility'], 0.0), 1.0),
                          tau=abs(p['tau']), center=p['center'])


def fit_dip(data: Interferogram, init: Optional[DipModelParams] = None, bootstrap: int = 0,
            rng: Optional[np.random.Generator] = None, max_iterations: int = 200) -> FitResult:
    """加权最小二乘拟合凹陷，权重1/σ²

    未给初值且凹陷深度不显著时，τ与中心固定在初值，只拟合 c_max 与 V，
    结果标记 dip_not_resolved 且不视为收敛。

    Args:
        data: 干涉图，至少6个点
        init: 初值；缺省时由数据估计
        bootstrap: 参数自助法重采样次数，0表示不做
        rng: 自助法随机数发生器

    Returns:
        FitResult: 参数为 c_max、visibility、tau(s)、center(s)
    """
    if len(data) < MIN_POINTS:
        raise FitError(f"Dip fit needs at least {MIN_POINTS} points, got {len(data)}", model='dip')
    x = data.delays / PS
    y = data.counts
    sigma = data.sigmas
    if init is not None:
        p0 = np.array([init.c_max, init.visibility, init.tau / PS, init.center / PS])
    else:
        p0 = initial_guess(data)
    scale = np.array([abs(p0[0]), 1.0, abs(p0[2]), abs(p0[2])])

    resolved = init is not None or dip_significance(data) >= RESOLVE_SIGNIFICANCE
    flags = []
    if resolved:
        outcome = damped_gauss_newton(_model, _jacobian, x, y, sigma, p0, scale=scale,
                                      max_iterations=max_iterations)
        p = outcome.params.copy()
        p[2] = abs(p[2])  # 模型只依赖τ²
        cov_internal, singular = covariance_from_normal(normal_matrix(_jacobian(x, p), sigma))
        free = len(p)
        converged = outcome.converged
        message = outcome.message
    else:
        outcome, p, cov_internal, singular = _fit_fixed_shape(x, y, sigma, p0, max_iterations)
        free = 2
        flags.append('dip_not_resolved')
        converged = False
        message = 'no dip resolved above noise; tau and center held at their start values'
        logging.warning(f"No dip resolved above noise; fitting C and V with tau={p[2]:.1f} ps, "
                        f"center={p[3]:.1f} ps held")

    covariance = cov_internal * np.outer(_SI_SCALE, _SI_SCALE)
    if singular:
        flags.append('singular')
        converged = False
        message = 'singular normal equations'
    if not np.all(np.isfinite(covariance[:free, :free])):
        converged = False
    visibility = float(p[1])
    if not (VISIBILITY_FLAG_RANGE[0] <= visibility <= VISIBILITY_FLAG_RANGE[1]):
        flags.append('visibility_out_of_range')
        logging.warning(f"Fitted visibility {visibility:.4f} outside {VISIBILITY_FLAG_RANGE}")

    result = FitResult.from_covariance(DIP_PARAM_NAMES, p * _SI_SCALE, covariance, outcome.chi2,
                                       len(y) - free, converged, iterations=outcome.iterations,
                                       message=message, flags=flags)
    logging.info(f"Dip fit: V={result.params['visibility']:.4f}±{result.std_errors['visibility']:.4f}, "
                 f"tau={result.params['tau'] / PS:.2f} ps, converged={result.converged} "
                 f"after {outcome.iterations} iterations")

    if bootstrap > 0:
        if resolved:
            _bootstrap(result, x, p, scale, bootstrap, rng or np.random.default_rng(0), max_iterations)
        else:
            logging.info("Bootstrap skipped: dip shape not resolved")
    return result


def _fit_fixed_shape(x: np.ndarray, y: np.ndarray, sigma: np.ndarray, p0: np.ndarray, max_iterations: int):
    """τ与中心固定，只拟合 c_max 与 V；被固定参数的协方差记为NaN"""
    shape = np.asarray(p0[2:], dtype=float)

    def full(q):
        return np.concatenate([q, shape])

    outcome = damped_gauss_newton(lambda xv, q: _model(xv, full(q)),
                                  lambda xv, q: _jacobian(xv, full(q))[:, :2],
                                  x, y, sigma, p0[:2], scale=[abs(p0[0]), 1.0], max_iterations=max_iterations)
    p = full(outcome.params)
    cov_free, singular = covariance_from_normal(normal_matrix(_jacobian(x, p)[:, :2], sigma))
    covariance = np.full((len(p), len(p)), np.nan)
    covariance[:2, :2] = cov_free
    return outcome, p, covariance, singular


def _bootstrap(result: FitResult, x: np.ndarray, p: np.ndarray, scale: np.ndarray, resamples: int,
               rng: np.random.Generator, max_iterations: int):
    """对拟合曲线做泊松重采样，给出百分位置信区间"""
    expected = np.clip(_model(x, p), 0.0, None)
    samples = []
    for _ in range(resamples):
        counts = rng.poisson(expected).astype(float)
        sigma = np.where(counts > 0, np.sqrt(counts), 1.0)
        outcome = damped_gauss_newton(_model, _jacobian, x, counts, sigma, p, scale=scale,
                                      max_iterations=max_iterations)
        if outcome.converged:
            estimate = outcome.params.copy()
            estimate[2] = abs(estimate[2])
            samples.append(estimate * _SI_SCALE)
    if not samples:
        logging.warning("No bootstrap resample converged")
        return
    samples = np.array(samples)
    low, high = np.percentile(samples, [2.5, 97.5], axis=0)
    result.extras['bootstrap_ci95'] = {n: (float(lo), float(hi))
                                       for n, lo, hi in zip(result.param_names, low, high)}
    result.extras['bootstrap_samples'] = len(samples)
