"""可见度随平均光子数变化的模型拟合，得到预示效率μ与系统噪声N_sys

约束通过参数变换实现：μ = (1 + sin u)/2 ∈ [0, 1]，N_sys = v² ≥ 0。
"""
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DomainError
from ..physics.hom_model import spectral_factor
from ..physics.units import AngularBandwidth
from .least_squares import FitResult, covariance_from_normal, damped_gauss_newton, normal_matrix

MODEL_PARAM_NAMES = ('mu', 'n_sys')
_MU_FLOOR = 1e-4
_BOUNDARY_TOLERANCE = 1e-6

VisibilityPoint = Tuple[float, float, float]


def _natural(q):
    u, v = q
    return 0.5 * (1.0 + math.sin(u)), v * v


def _curve(n_bar, mu, n_sys, s0):
    return s0 / (2.0 + n_bar / mu + n_sys / (n_bar * mu))


def _natural_jacobian(n_bar, mu, n_sys, s0):
    denominator = 2.0 + n_bar / mu + n_sys / (n_bar * mu)
    d_mu = s0 / denominator ** 2 * (n_bar / mu ** 2 + n_sys / (n_bar * mu ** 2))
    d_n = -s0 / denominator ** 2 / (n_bar * mu)
    return np.column_stack([d_mu, d_n])


def _linear_start(n_bar, vis, sigma, s0) -> Tuple[float, float]:
    """由 S0/V − 2 = n̄/μ + N_sys/(n̄μ) 的加权线性解给出初值"""
    y = s0 / vis - 2.0
    sigma_y = s0 * sigma / vis ** 2
    design = np.column_stack([n_bar, 1.0 / n_bar]) / sigma_y[:, None]
    coeffs = np.linalg.lstsq(design, y / sigma_y, rcond=None)[0]
    a, b = coeffs
    mu0 = 1.0 / a if a > 0 else 0.5
    mu0 = float(np.clip(mu0, _MU_FLOOR, 1.0 - 1e-3))
    n0 = float(max(b * mu0, 0.0))
    return mu0, n0


def fit_visibility_model(points: Sequence[VisibilityPoint], bw_a: AngularBandwidth, bw_b: AngularBandwidth,
                         init: Optional[Tuple[float, float]] = None, scale_covariance: bool = False,
                         max_iterations: int = 200) -> FitResult:
    """对 (n̄, V, σ_V) 数据点拟合 (μ, N_sys)，带宽固定

    scale_covariance为True时协方差乘以约化χ²。
    """
    if len(points) < 2:
        logging.warning("Visibility model fit needs at least 2 points")
        return FitResult.failed(MODEL_PARAM_NAMES, 'underdetermined: fewer than 2 points', ['underdetermined'])
    data = np.asarray(points, dtype=float)
    n_bar, vis, sigma = data[:, 0], data[:, 1], data[:, 2]
    if np.any(n_bar <= 0):
        raise DomainError("Mean photon numbers must be positive", parameter="n_bar", value=float(n_bar.min()))
    if np.any(sigma <= 0):
        raise DomainError("Visibility errors must be positive", parameter="sigma", value=float(sigma.min()))
    s0 = spectral_factor(bw_a, bw_b, 0.0)

    if init is not None:
        mu0, n0 = init
    elif np.all(vis > 0):
        mu0, n0 = _linear_start(n_bar, vis, sigma, s0)
    else:
        mu0, n0 = 0.05, 1e-4
    mu0 = min(max(mu0, _MU_FLOOR), 1.0 - 1e-9)
    q0 = np.array([math.asin(2.0 * mu0 - 1.0), math.sqrt(max(n0, 0.0))])

    def model(x, q):
        mu, n_sys = _natural(q)
        return _curve(x, mu, n_sys, s0)

    def jacobian(x, q):
        u, v = q
        mu, n_sys = _natural(q)
        natural = _natural_jacobian(x, mu, n_sys, s0)
        return natural * np.array([0.5 * math.cos(u), 2.0 * v])

    outcome = damped_gauss_newton(model, jacobian, n_bar, vis, sigma, q0, scale=[1.0, abs(q0[1])],
                                  max_iterations=max_iterations)
    mu, n_sys = _natural(outcome.params)

    flags = []
    if mu >= 1.0 - _BOUNDARY_TOLERANCE or n_sys <= _BOUNDARY_TOLERANCE * max(n0, 1e-10) or mu <= _MU_FLOOR:
        flags.append('boundary_pinned')
        logging.warning(f"Visibility model fit pinned at a boundary: mu={mu:.4g}, n_sys={n_sys:.4g}")

    covariance, singular = covariance_from_normal(normal_matrix(_natural_jacobian(n_bar, mu, n_sys, s0), sigma))
    dof = len(n_bar) - 2
    if scale_covariance and dof > 0:
        covariance = covariance * (outcome.chi2 / dof)
    converged = outcome.converged and not singular and bool(np.all(np.isfinite(covariance)))
    message = outcome.message
    if singular:
        flags.append('singular')
        message = 'singular normal equations'

    result = FitResult.from_covariance(MODEL_PARAM_NAMES, [mu, n_sys], covariance, outcome.chi2, dof,
                                       converged, iterations=outcome.iterations, message=message, flags=flags)
    logging.info(f"Visibility model fit: mu={mu:.4g}±{result.std_errors['mu']:.2g}, "
                 f"N_sys={n_sys:.4g}±{result.std_errors['n_sys']:.2g}, converged={converged}")
    return result
