"""加权非线性最小二乘：带Levenberg-Marquardt阻尼的Gauss-Newton迭代"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

Z_95 = float(norm.ppf(0.975))

DEFAULT_MAX_ITERATIONS = 200
DEFAULT_XTOL = 1e-8
_LAMBDA_START = 1e-3
_LAMBDA_CEILING = 1e12
_CONDITION_LIMIT = 1e12


@dataclass
class FitResult:
    """拟合结果；协方差按参数名顺序排列"""
    param_names: Tuple[str, ...]
    params: Dict[str, float]
    std_errors: Dict[str, float]
    ci95: Dict[str, Tuple[float, float]]
    reduced_chi2: float
    converged: bool
    covariance: np.ndarray
    chi2: float = float('nan')
    dof: int = 0
    iterations: int = 0
    message: str = ''
    flags: List[str] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_covariance(cls, names: Sequence[str], values: Sequence[float], covariance: np.ndarray,
                        chi2: float, dof: int, converged: bool, **kwargs) -> 'FitResult':
        names = tuple(names)
        errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
        params = {n: float(v) for n, v in zip(names, values)}
        std_errors = {n: float(e) for n, e in zip(names, errors)}
        ci95 = {n: (params[n] - Z_95 * std_errors[n], params[n] + Z_95 * std_errors[n]) for n in names}
        reduced = chi2 / dof if dof > 0 else float('nan')
        return cls(names, params, std_errors, ci95, reduced, converged, np.asarray(covariance, dtype=float),
                   chi2=chi2, dof=dof, **kwargs)

    @classmethod
    def failed(cls, names: Sequence[str], message: str, flags: Optional[List[str]] = None) -> 'FitResult':
        names = tuple(names)
        nan = float('nan')
        return cls(names, {n: nan for n in names}, {n: nan for n in names}, {n: (nan, nan) for n in names},
                   nan, False, np.full((len(names), len(names)), nan), message=message, flags=list(flags or []))

    def to_dict(self) -> Dict[str, Any]:
        """导出字段：params、std_errors、ci95、reduced_chi2、converged"""
        return {
            'params': {n: _json_float(self.params[n]) for n in self.param_names},
            'std_errors': {n: _json_float(self.std_errors[n]) for n in self.param_names},
            'ci95': {n: [_json_float(v) for v in self.ci95[n]] for n in self.param_names},
            'reduced_chi2': _json_float(self.reduced_chi2),
            'converged': bool(self.converged),
        }


def _json_float(value: float):
    return float(value) if math.isfinite(value) else None


@dataclass
class SolverOutcome:
    params: np.ndarray
    chi2: float
    iterations: int
    converged: bool
    message: str


def damped_gauss_newton(model: Callable, jacobian: Callable, x: np.ndarray, y: np.ndarray, sigma: np.ndarray,
                        p0: Sequence[float], scale: Optional[Sequence[float]] = None,
                        max_iterations: int = DEFAULT_MAX_ITERATIONS, xtol: float = DEFAULT_XTOL) -> SolverOutcome:
    """最小化 Σ((y − model(x, p))/σ)²

    阻尼矩阵为 α·(1 + λI)，即按α对角元缩放；λ失败时×10、成功时÷10。
    收敛判据：每个参数 |Δp| ≤ xtol · max(|p|, scale)。
    """
    weight = 1.0 / np.asarray(sigma, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    scale = np.zeros_like(p) if scale is None else np.abs(np.asarray(scale, dtype=float))
    residual = (y - model(x, p)) * weight
    chi2 = float(residual @ residual)
    flambda = _LAMBDA_START

    for iteration in range(1, max_iterations + 1):
        jw = jacobian(x, p) * weight[:, None]
        alpha0 = jw.T @ jw
        beta = jw.T @ residual
        while True:
            alpha = alpha0 * (1.0 + flambda * np.identity(len(p)))
            delta = np.linalg.lstsq(alpha, beta, rcond=None)[0]
            trial = p + delta
            trial_residual = (y - model(x, trial)) * weight
            trial_chi2 = float(trial_residual @ trial_residual)
            if math.isfinite(trial_chi2) and trial_chi2 <= chi2:
                flambda = max(flambda / 10.0, 1e-12)
                break
            flambda *= 10.0
            if flambda > _LAMBDA_CEILING:
                return SolverOutcome(p, chi2, iteration, True, 'chi-square cannot be reduced further')
        small = np.all(np.abs(delta) <= xtol * np.maximum(np.abs(trial), scale))
        p, residual, chi2 = trial, trial_residual, trial_chi2
        if small:
            return SolverOutcome(p, chi2, iteration, True, 'relative parameter change below tolerance')
    logging.warning(f"Least squares stopped after {max_iterations} iterations without converging")
    return SolverOutcome(p, chi2, max_iterations, False, 'maximum iterations reached')


def normal_matrix(jacobian: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    jw = jacobian / np.asarray(sigma, dtype=float)[:, None]
    return jw.T @ jw


def covariance_from_normal(alpha: np.ndarray) -> Tuple[np.ndarray, bool]:
    """α⁻¹；α按对角元归一化后条件数过大时视为奇异，退化为伪逆"""
    diag = np.sqrt(np.diag(alpha))
    if np.any(diag <= 0) or not np.all(np.isfinite(alpha)):
        return np.linalg.pinv(alpha), True
    correlation = alpha / np.outer(diag, diag)
    if np.linalg.cond(correlation) > _CONDITION_LIMIT:
        return np.linalg.pinv(alpha), True
    return np.linalg.inv(alpha), False
