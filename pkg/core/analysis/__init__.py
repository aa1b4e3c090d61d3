"""分析子模块：干涉图、加权最小二乘拟合与蒙特卡洛流水线"""
from .interferogram import (
    Interferogram, InterferogramPoint, poisson_sigma, visibility_from_extrema, sigma_from_tau,
    interferogram_visibility, synthetic_interferogram
)
from .least_squares import FitResult, damped_gauss_newton, Z_95
from .dip_fit import DIP_PARAM_NAMES, fit_dip, fitted_dip_params, initial_guess
from .visibility_fit import MODEL_PARAM_NAMES, fit_visibility_model
from .pipeline import (
    PointResult, SourceCharacterization, build_interferogram, simulate_point, simulate_timetags,
    characterize_source, interfere
)

__all__ = [
    'Interferogram', 'InterferogramPoint', 'poisson_sigma', 'visibility_from_extrema', 'sigma_from_tau',
    'interferogram_visibility', 'synthetic_interferogram',
    'FitResult', 'damped_gauss_newton', 'Z_95',
    'DIP_PARAM_NAMES', 'fit_dip', 'fitted_dip_params', 'initial_guess',
    'MODEL_PARAM_NAMES', 'fit_visibility_model',
    'PointResult', 'SourceCharacterization', 'build_interferogram', 'simulate_point', 'simulate_timetags',
    'characterize_source', 'interfere'
]
