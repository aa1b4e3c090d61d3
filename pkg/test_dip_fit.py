"""干涉图与凹陷拟合测试"""
import math
import unittest
import sys
import os

import numpy as np

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.analysis.dip_fit import RESOLVE_SIGNIFICANCE, dip_significance, fit_dip, fitted_dip_params, initial_guess
from core.analysis.interferogram import (
    Interferogram, interferogram_visibility, sigma_from_tau, synthetic_interferogram, visibility_from_extrema
)
from core.exceptions import DomainError, FitError
from core.physics.hom_model import DipModelParams
from core.physics.units import PS
from core.simulation.rng import substream

DELAYS = np.arange(-20, 21) * 10 * PS
TRUE = DipModelParams(c_max=260.0, visibility=0.61, tau=51.5 * PS, center=12 * PS)


class TestInterferogram(unittest.TestCase):
    """干涉图数据结构测试"""

    def test_visibility_from_extrema(self):
        """测试极值可见度"""
        self.assertAlmostEqual(visibility_from_extrema(100, 37), 0.63)
        self.assertEqual(visibility_from_extrema(50, 50), 0.0)
        with self.assertRaises(DomainError):
            visibility_from_extrema(0, 0)
        with self.assertRaises(DomainError):
            visibility_from_extrema(10, 12)
        with self.assertRaises(DomainError):
            visibility_from_extrema(10, -1)

    def test_sigma_from_tau(self):
        """测试 τ=10 ps 对应 σ≈16.65 ps"""
        self.assertAlmostEqual(sigma_from_tau(10 * PS) / PS, 16.65, delta=0.01)
        with self.assertRaises(DomainError):
            sigma_from_tau(0.0)

    def test_validation(self):
        """测试延迟递增、误差为正"""
        with self.assertRaises(DomainError):
            Interferogram.from_counts([0.0, 0.0], [1, 2], 60)
        with self.assertRaises(DomainError):
            Interferogram.from_counts([0.0, 1e-12], [1, 2], 60, sigmas=[1.0, 0.0])
        with self.assertRaises(DomainError):
            Interferogram.from_counts([0.0, 1e-12], [1, -2], 60)
        with self.assertRaises(DomainError):
            Interferogram.from_counts([0.0], [1, 2], 60)

    def test_plateau_and_extrema_visibility(self):
        """测试平台计数与极值可见度"""
        data = synthetic_interferogram(DipModelParams(100.0, 0.6, 20 * PS), DELAYS, integration_time=50.0)
        self.assertAlmostEqual(data.plateau_counts(), 100.0, places=6)
        self.assertAlmostEqual(data.plateau_rate(), 2.0, places=6)
        self.assertAlmostEqual(interferogram_visibility(data), 0.6, places=6)

    def test_zero_count_sigma(self):
        """测试零计数点误差取1"""
        data = Interferogram.from_counts([0.0, 1e-12], [0, 4], 60)
        self.assertEqual(data.sigmas.tolist(), [1.0, 2.0])


class TestDipFit(unittest.TestCase):
    """凹陷拟合测试"""

    def test_noiseless_recovery(self):
        """测试无噪声数据精确恢复参数"""
        data = synthetic_interferogram(TRUE, DELAYS)
        result = fit_dip(data)
        self.assertTrue(result.converged)
        for name, expected in (('c_max', TRUE.c_max), ('visibility', TRUE.visibility), ('tau', TRUE.tau),
                               ('center', TRUE.center)):
            with self.subTest(param=name):
                self.assertAlmostEqual(result.params[name] / expected, 1.0, delta=1e-6)
        self.assertLess(result.reduced_chi2, 1e-10)

    def test_initial_guess_near_truth(self):
        """测试初值估计落在真实值附近"""
        c0, v0, tau0, t0 = initial_guess(synthetic_interferogram(TRUE, DELAYS))
        self.assertAlmostEqual(c0, TRUE.c_max, delta=5.0)
        self.assertAlmostEqual(v0, TRUE.visibility, delta=0.1)
        self.assertAlmostEqual(t0, 12.0, delta=15.0)
        self.assertGreater(tau0, 20.0)
        self.assertLess(tau0, 100.0)

    def test_confidence_interval_coverage(self):
        """测试泊松噪声下95%置信区间的覆盖率"""
        rng = substream(2024)
        hits = 0
        trials = 400
        for _ in range(trials):
            result = fit_dip(synthetic_interferogram(TRUE, DELAYS, rng=rng))
            low, high = result.ci95['visibility']
            hits += low <= TRUE.visibility <= high
        coverage = hits / trials
        self.assertGreaterEqual(coverage, 0.90)
        self.assertLessEqual(coverage, 0.99)

    def test_too_few_points(self):
        """测试点数不足时报拟合错误"""
        data = synthetic_interferogram(TRUE, DELAYS[:5])
        with self.assertRaises(FitError):
            fit_dip(data)

    def test_flat_data_not_resolved(self):
        """测试没有凹陷的平坦数据：宽度与中心不可辨识，V=0且误差有限"""
        data = Interferogram.from_counts(DELAYS, [200.0] * len(DELAYS), 60)
        result = fit_dip(data)
        self.assertIn('dip_not_resolved', result.flags)
        self.assertFalse(result.converged)
        self.assertAlmostEqual(result.params['visibility'], 0.0, places=9)
        self.assertAlmostEqual(result.params['c_max'], 200.0, places=6)
        self.assertTrue(math.isfinite(result.std_errors['visibility']))
        self.assertEqual(result.dof, len(DELAYS) - 2)
        exported = result.to_dict()
        self.assertFalse(exported['converged'])
        self.assertIsNone(exported['std_errors']['tau'])
        self.assertIsNone(exported['std_errors']['center'])

    def test_noisy_flat_data_consistent_with_zero(self):
        """测试泊松噪声下的平坦数据：V̂在2倍标准误差内与0一致"""
        flat = DipModelParams(c_max=252.0, visibility=0.0, tau=43 * PS, center=0.0)
        rng = substream(77)
        trials = 200
        within = 0
        for _ in range(trials):
            data = synthetic_interferogram(flat, DELAYS, rng=rng)
            result = fit_dip(data)
            z = result.params['visibility'] / result.std_errors['visibility']
            within += abs(z) <= 2.0
        self.assertGreaterEqual(within / trials, 0.88)

    def test_flat_start_and_significance(self):
        """测试无显著凹陷时初值取V=0、扫描中点与跨度/8"""
        flat = synthetic_interferogram(DipModelParams(252.0, 0.0, 43 * PS), DELAYS)
        self.assertLess(dip_significance(flat), RESOLVE_SIGNIFICANCE)
        c0, v0, tau0, t0 = initial_guess(flat)
        self.assertAlmostEqual(c0, 252.0)
        self.assertEqual(v0, 0.0)
        self.assertAlmostEqual(tau0, 50.0)
        self.assertAlmostEqual(t0, 0.0)
        self.assertGreater(dip_significance(synthetic_interferogram(TRUE, DELAYS)), 10.0)

    def test_invariant_to_count_scaling(self):
        """测试计数与误差同乘k时V̂、τ̂不变"""
        data = synthetic_interferogram(TRUE, DELAYS, rng=substream(9))
        scaled = Interferogram.from_counts(DELAYS, data.counts * 7.0, 60, sigmas=data.sigmas * 7.0)
        base = fit_dip(data)
        result = fit_dip(scaled)
        self.assertAlmostEqual(result.params['visibility'], base.params['visibility'], delta=1e-9)
        self.assertAlmostEqual(result.params['tau'] / base.params['tau'], 1.0, delta=1e-9)
        self.assertAlmostEqual(result.params['c_max'] / base.params['c_max'], 7.0, delta=1e-9)
        self.assertAlmostEqual(result.std_errors['visibility'], base.std_errors['visibility'], delta=1e-9)

    def test_inverted_dip_flagged(self):
        """测试向上的峰得到超出范围的可见度并被标记"""
        bump = 100.0 * (1.0 + 0.5 * np.exp(-((DELAYS - 0.0) / (40 * PS)) ** 2))
        data = Interferogram.from_counts(DELAYS, bump, 60)
        with self.assertLogs(level='WARNING'):
            result = fit_dip(data, init=DipModelParams(100.0, 0.01, 40 * PS, 0.0))
        self.assertAlmostEqual(result.params['visibility'], -0.5, delta=1e-4)
        self.assertIn('visibility_out_of_range', result.flags)
        self.assertEqual(fitted_dip_params(result).visibility, 0.0)

    def test_bootstrap_interval(self):
        """测试参数自助法给出包含估计值的区间"""
        data = synthetic_interferogram(TRUE, DELAYS, rng=substream(3))
        result = fit_dip(data, bootstrap=50, rng=substream(4))
        low, high = result.extras['bootstrap_ci95']['visibility']
        self.assertLess(low, result.params['visibility'])
        self.assertGreater(high, result.params['visibility'])
        self.assertGreater(result.extras['bootstrap_samples'], 40)

    def test_export_fields(self):
        """测试导出字段"""
        exported = fit_dip(synthetic_interferogram(TRUE, DELAYS, rng=substream(5))).to_dict()
        self.assertEqual(set(exported), {'params', 'std_errors', 'ci95', 'reduced_chi2', 'converged'})
        self.assertEqual(set(exported['params']), {'c_max', 'visibility', 'tau', 'center'})
        self.assertEqual(len(exported['ci95']['tau']), 2)
        self.assertTrue(math.isfinite(exported['reduced_chi2']))


if __name__ == '__main__':
    unittest.main()
