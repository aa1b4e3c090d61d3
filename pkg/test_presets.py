#!/usr/bin/env python3
"""
预设场景端到端测试
完整运行基线与两个光纤回环场景的扫描与凹陷拟合，检查可见度与平台计数率
"""

import unittest
import sys
import os
import tempfile

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.api.service import ExperimentService
from core.physics.units import PS

# (期望可见度, 允许偏差)
EXPECTED_VISIBILITY = {
    'baseline': (0.63, 0.06),
    'loop1': (0.58, 0.08),
    'loop2': (0.49, 0.10),
}


class TestPresetScans(unittest.TestCase):
    """三个预设的完整扫描"""

    @classmethod
    def setUpClass(cls):
        cls.service = ExperimentService()
        cls.tmpdir = tempfile.TemporaryDirectory()
        cls.outcomes = {
            name: cls.service.run_scan(cls.service.preset(name), threads=4, out_dir=cls.tmpdir.name)
            for name in EXPECTED_VISIBILITY
        }

    @classmethod
    def tearDownClass(cls):
        cls.tmpdir.cleanup()

    def test_fitted_visibility(self):
        """测试拟合可见度落在测量值附近"""
        for name, (expected, tolerance) in EXPECTED_VISIBILITY.items():
            with self.subTest(preset=name):
                fit = self.outcomes[name].fit
                self.assertTrue(fit.converged, fit.flags)
                self.assertAlmostEqual(fit.params['visibility'], expected, delta=tolerance)

    def test_visibility_ordering(self):
        """测试回环1高于回环2"""
        loop1 = self.outcomes['loop1'].fit.params['visibility']
        loop2 = self.outcomes['loop2'].fit.params['visibility']
        self.assertGreater(loop1, loop2)

    def test_loop1_plateau_rate(self):
        """测试回环1平台三重符合率约4.2/s"""
        rate = self.outcomes['loop1'].interferogram.plateau_rate()
        self.assertAlmostEqual(rate, 4.2, delta=0.6)

    def test_dip_width_includes_jitter(self):
        """测试拟合宽度接近43 ps经20 ps抖动展宽后的值"""
        for name, outcome in self.outcomes.items():
            with self.subTest(preset=name):
                self.assertAlmostEqual(outcome.fit.params['tau'] / PS, 51.5, delta=10.0)
                self.assertAlmostEqual(outcome.fit.params['center'] / PS, 12.0, delta=10.0)

    def test_files_written(self):
        """测试干涉图CSV与拟合JSON写出且可读回"""
        for name, outcome in self.outcomes.items():
            with self.subTest(preset=name):
                self.assertTrue(outcome.paths['interferogram'].exists())
                self.assertTrue(outcome.paths['fit'].name.endswith('_dip_fit.json'))
                data = self.service.export_manager.read('interferogram', outcome.paths['interferogram'])
                self.assertEqual(len(data), 41)
                summary = outcome.summary()
                self.assertEqual(summary['points'], 41)
                self.assertEqual(summary['digest'], outcome.scenario.digest())


if __name__ == '__main__':
    unittest.main()
