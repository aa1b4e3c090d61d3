"""光源抽样测试：WCS、EPS与预示条件抽样"""
import math
import unittest
import sys
import os

import numpy as np
from scipy.stats import ks_2samp

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.exceptions import DomainError
from core.simulation.acquisition import DetectorConfig
from core.simulation.rng import substream
from core.simulation.sources import (
    EpsSourceConfig, WcsSourceConfig, car_to_pair_prob, herald_probability, sample_eps, sample_eps_heralded,
    sample_wcs, set_pump_delay
)


class TestWcsSource(unittest.TestCase):
    """WCS抽样测试"""

    def test_poisson_statistics(self):
        """测试光子数均值与方差"""
        config = WcsSourceConfig(n_bar=0.05)
        record = sample_wcs(config, np.arange(400_000), substream(1))
        mean = record.photons_a.mean()
        self.assertAlmostEqual(mean, 0.05, delta=0.002)
        self.assertAlmostEqual(record.photons_a.var() / mean, 1.0, delta=0.05)

    def test_emission_time_includes_offset(self):
        """测试发射时刻含中心偏移"""
        config = WcsSourceConfig(n_bar=0.01, center_offset=12e-12)
        record = sample_wcs(config, [0, 3], substream(2))
        self.assertAlmostEqual(record.emission_time[1], 3e-8 + 12e-12)
        self.assertEqual(record.background.tolist(), [0, 0])

    def test_high_mean_warns(self):
        """测试n̄过大时记录警告"""
        with self.assertLogs(level='WARNING'):
            WcsSourceConfig(n_bar=0.5)

    def test_validation(self):
        """测试参数校验"""
        with self.assertRaises(DomainError):
            WcsSourceConfig(n_bar=-0.1)
        with self.assertRaises(DomainError):
            WcsSourceConfig(pulse_fwhm=0.0)
        with self.assertRaises(DomainError):
            sample_wcs(WcsSourceConfig(), [-1], substream(0))


class TestEpsSource(unittest.TestCase):
    """EPS抽样测试"""

    def test_car_to_pair_prob(self):
        """测试CAR反解对产生概率"""
        self.assertAlmostEqual(car_to_pair_prob(40), 1 / 39)
        self.assertAlmostEqual(car_to_pair_prob(101), 0.01)
        for car in (1.0, 0.5, 2.0):
            with self.subTest(car=car):
                with self.assertRaises(DomainError):
                    car_to_pair_prob(car)

    def test_from_car(self):
        """测试由CAR构造配置"""
        config = EpsSourceConfig.from_car(40, herald_efficiency=0.1)
        self.assertAlmostEqual(config.pair_prob, 1 / 39)
        self.assertEqual(config.herald_efficiency, 0.1)

    def test_pair_statistics(self):
        """测试对数与两臂稀疏"""
        config = EpsSourceConfig(pair_prob=0.05, herald_efficiency=0.5, signal_efficiency=0.25)
        record = sample_eps(config, np.arange(400_000), substream(3))
        self.assertAlmostEqual(record.pairs.mean(), 0.05, delta=0.002)
        self.assertAlmostEqual(record.herald_photons.mean(), 0.025, delta=0.0015)
        self.assertAlmostEqual(record.signal_photons.mean(), 0.0125, delta=0.001)
        self.assertTrue(np.all(record.herald_photons <= record.pairs))
        self.assertTrue(np.all(record.signal_photons <= record.pairs))
        self.assertEqual(int(record.accidental_heralds.sum()), 0)

    def test_pump_delay_shifts_emission(self):
        """测试泵浦延迟平移发射时刻"""
        config = set_pump_delay(EpsSourceConfig(), -3)
        self.assertEqual(config.pump_delay_steps, -3)
        record = sample_eps(config, [2], substream(4))
        self.assertAlmostEqual(record.emission_time[0], 2e-8 - 30e-12)

    def test_photon_numbers_independent_of_pump_delay(self):
        """测试泵浦延迟只改变发射时刻，光子数分布不变（KS检验）"""
        base = EpsSourceConfig(pair_prob=0.1, herald_efficiency=0.5, signal_efficiency=0.5, scan_range_steps=20)
        index = np.arange(100_000)
        reference = sample_eps(base, index, substream(40))
        for key, steps in enumerate((-20, 7, 20)):
            with self.subTest(steps=steps):
                shifted = sample_eps(set_pump_delay(base, steps), index, substream(41, key))
                for name in ('pairs', 'herald_photons', 'signal_photons'):
                    p_value = ks_2samp(getattr(reference, name), getattr(shifted, name)).pvalue
                    self.assertGreater(p_value, 1e-3, name)

    def test_set_pump_delay_validation(self):
        """测试延迟步数校验"""
        config = EpsSourceConfig(scan_range_steps=20)
        self.assertEqual(set_pump_delay(config, 20).pump_delay_steps, 20)
        for steps in (21, -21, 1.5, True, '3'):
            with self.subTest(steps=steps):
                with self.assertRaises(DomainError):
                    set_pump_delay(config, steps)
        self.assertEqual(set_pump_delay(config, np.int64(4)).pump_delay_steps, 4)

    def test_pump_delay_must_be_step_multiple(self):
        """测试泵浦延迟必须是步长整数倍"""
        with self.assertRaises(DomainError):
            EpsSourceConfig(pump_delay=15e-12, delay_step=10e-12)


class TestHeraldedSampling(unittest.TestCase):
    """预示条件抽样测试"""

    def setUp(self):
        """测试前准备"""
        self.config = EpsSourceConfig(pair_prob=0.05, herald_efficiency=0.3, signal_efficiency=0.4)
        self.detector = DetectorConfig(efficiency=0.5, dark_prob_per_bin=0.0, label='herald')

    def test_herald_probability_closed_form(self):
        """测试预示概率闭式解"""
        expected = 1 - math.exp(-0.05 * 0.3 * 0.5)
        self.assertAlmostEqual(herald_probability(self.config, self.detector), expected)
        self.assertAlmostEqual(herald_probability(self.config), 1 - math.exp(-0.05 * 0.3))

    def test_conditional_signal_matches_direct(self):
        """测试条件抽样与逐脉冲抽样中预示脉冲的信号光子统计一致"""
        n = 5_000_000
        rng = substream(5)
        direct = sample_eps(self.config, np.arange(n), rng)
        clicked = rng.binomial(direct.herald_photons, self.detector.efficiency) > 0
        direct_mean = direct.signal_photons[clicked].mean()

        heralded = sample_eps_heralded(self.config, self.detector, np.arange(200_000), substream(6))
        self.assertTrue(np.all(heralded.pairs >= 1))
        self.assertAlmostEqual(heralded.signal_photons.mean(), direct_mean, delta=0.01)
        # 以预示为条件时对数至少为1
        self.assertGreater(heralded.signal_photons.mean(), 0.39)

    def test_herald_photon_count_matches_direct(self):
        """测试真实预示脉冲的预示光子数分布与逐脉冲抽样中响应脉冲一致"""
        config = EpsSourceConfig(pair_prob=0.5, herald_efficiency=0.5, signal_efficiency=0.5)
        direct = sample_eps(config, np.arange(2_000_000), substream(12))
        clicked = direct.herald_photons[direct.herald_photons > 0]

        heralded = sample_eps_heralded(config, None, np.arange(200_000), substream(13))
        self.assertEqual(int(heralded.accidental_heralds.sum()), 0)
        self.assertTrue(np.all(heralded.herald_photons >= 1))
        self.assertTrue(np.all(heralded.herald_photons <= heralded.pairs))
        self.assertAlmostEqual(heralded.herald_photons.mean(), clicked.mean(), delta=0.006)
        self.assertAlmostEqual(np.mean(heralded.herald_photons == 1), np.mean(clicked == 1), delta=0.006)

    def test_accidental_heralds_flagged(self):
        """测试暗预示被标记且不含真实预示光子"""
        config = EpsSourceConfig(pair_prob=0.01, herald_efficiency=0.1, accidental_herald_prob=0.01)
        record = sample_eps_heralded(config, None, np.arange(100_000), substream(7))
        accidental = record.accidental_heralds == 1
        self.assertGreater(accidental.mean(), 0.8)
        self.assertTrue(np.all(record.herald_photons[accidental] == 0))
        self.assertTrue(np.all(record.herald_photons[~accidental] >= 1))

    def test_zero_herald_efficiency_rejected(self):
        """测试预示效率为零时无法条件抽样"""
        config = EpsSourceConfig(herald_efficiency=0.0)
        with self.assertRaises(DomainError):
            sample_eps_heralded(config, None, np.arange(10), substream(8))


if __name__ == '__main__':
    unittest.main()
