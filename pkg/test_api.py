#!/usr/bin/env python3
"""
HTTP接口测试
覆盖扫描、拟合、Fock参考计算、链路预算、预设与下载接口的正常路径
"""

import json
import math
import unittest
import sys
import os
from unittest.mock import patch

import numpy as np

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app import app, service
from core.analysis.interferogram import synthetic_interferogram
from core.api.service import ScanOutcome
from core.analysis.dip_fit import fit_dip
from core.config import load_preset
from core.physics.hom_model import DipModelParams
from core.physics.units import PS

DELAYS = np.arange(-20, 21) * 10 * PS


class TestAPI(unittest.TestCase):
    """HTTP接口测试"""

    def setUp(self):
        app.config['TESTING'] = True
        self.client = app.test_client()

    def post(self, url, payload):
        return self.client.post(url, data=json.dumps(payload), content_type='application/json')

    def test_health(self):
        """测试健康检查"""
        response = self.client.get('/health')
        self.assertEqual(response.status_code, 200)
        data = json.loads(response.data)
        self.assertEqual(data['status'], 'healthy')
        self.assertGreaterEqual(data['presets'], 3)

    def test_presets(self):
        """测试预设列表与预设文本"""
        data = json.loads(self.client.get('/api/presets').data)
        self.assertTrue({'baseline', 'loop1', 'loop2'} <= set(data['data']['presets']))

        response = self.client.get('/api/presets/loop1')
        self.assertEqual(response.status_code, 200)
        body = json.loads(response.data)['data']
        self.assertEqual(body['name'], 'loop1')
        self.assertEqual(body['digest'], load_preset('loop1').digest())
        self.assertIn('[link]', body['scenario'])

    def test_run_scan(self):
        """测试扫描接口（仿真由桩替代）"""
        scenario = load_preset('baseline')
        interferogram = synthetic_interferogram(DipModelParams(260.0, 0.62, 51 * PS, 12 * PS), DELAYS)
        outcome = ScanOutcome(scenario, interferogram, fit_dip(interferogram))
        with patch.object(service, 'run_scan', return_value=outcome) as mock_run:
            response = self.post('/api/run-scan', {'preset': 'baseline', 'seed': 5, 'threads': 64})
        self.assertEqual(response.status_code, 200)
        _, kwargs = mock_run.call_args
        self.assertEqual(kwargs['seed'], 5)
        self.assertEqual(kwargs['threads'], app.config['MAX_SCAN_THREADS'])

        data = json.loads(response.data)['data']
        self.assertEqual(data['scenario'], 'baseline')
        self.assertEqual(data['points'], 41)
        self.assertAlmostEqual(data['fit']['params']['visibility'], 0.62, places=6)
        self.assertTrue(data['interferogram_csv'].startswith('delay_ps,counts,sigma\n'))
        self.assertIn('elapsed_s', data)

    def test_run_scan_with_scenario_text(self):
        """测试以场景文本运行短扫描"""
        scenario_text = "\n".join([
            "[scenario]", "name = tiny", "integration_time_s = 0.01",
            "[eps]", "car = 10", "herald_efficiency = 1", "signal_efficiency = 1",
            "[wcs]", "n_bar = 0.05",
            "[detector.herald]", "efficiency = 1",
            "[scan]", "steps_min = -5", "steps_max = 5",
        ])
        response = self.post('/api/run-scan', {'scenario': scenario_text, 'threads': 2})
        self.assertEqual(response.status_code, 200)
        data = json.loads(response.data)['data']
        self.assertEqual(data['scenario'], 'tiny')
        self.assertEqual(data['points'], 11)
        self.assertEqual(len(data['interferogram_csv'].strip().splitlines()), 12)

    def test_fit_dip(self):
        """测试干涉图CSV拟合"""
        interferogram = synthetic_interferogram(DipModelParams(200.0, 0.6, 45 * PS), DELAYS)
        csv_text = service.export_manager.render('interferogram', interferogram)
        response = self.post('/api/fit-dip', {'csv': csv_text, 'integration_time': 60})
        self.assertEqual(response.status_code, 200)
        data = json.loads(response.data)['data']
        self.assertEqual(data['points'], 41)
        self.assertTrue(data['fit']['converged'])
        self.assertAlmostEqual(data['fit']['params']['tau'] / PS, 45.0, places=3)

    def test_fit_model(self):
        """测试可见度模型拟合接口"""
        points = [[0.007, 0.63, 0.02], [0.012, 0.58, 0.04], [0.003, 0.49, 0.06]]
        response = self.post('/api/fit-model', {'points': points})
        self.assertEqual(response.status_code, 200)
        fit = json.loads(response.data)['data']['fit']
        self.assertEqual(set(fit['params']), {'mu', 'n_sys'})
        self.assertGreater(fit['params']['mu'], 0)

        response = self.post('/api/fit-model', {'points': [[0.007, 0.63]]})
        self.assertEqual(response.status_code, 400)
        response = self.post('/api/fit-model', {'points': [[0.007, 0.63, 0.02]]})
        self.assertEqual(response.status_code, 400)

    def test_oracle(self):
        """测试Fock空间参考计算"""
        response = self.post('/api/oracle', {'a': 'single', 'b': 'single', 'overlap': 1.0})
        self.assertEqual(response.status_code, 200)
        data = json.loads(response.data)['data']
        self.assertAlmostEqual(data['p_coincidence'], 0.0, places=12)
        self.assertAlmostEqual(data['visibility'], 1.0, places=12)
        self.assertAlmostEqual(data['total'], 1.0, places=9)

        response = self.post('/api/oracle', {'a': 'coherent:0.01', 'b': 'single', 'overlap': 0.0})
        data = json.loads(response.data)['data']
        self.assertEqual(data['input_a'], 'coherent:0.01')
        self.assertGreater(data['p_coincidence'], 0.0)

    def test_link_budget(self):
        """测试链路预算"""
        response = self.post('/api/link-budget', {'preset': 'loop1'})
        self.assertEqual(response.status_code, 200)
        data = json.loads(response.data)['data']
        self.assertAlmostEqual(data['received_power_dbm'], -27.0)
        self.assertAlmostEqual(data['transmittance'], 0.2512, places=4)
        self.assertAlmostEqual(data['dip_tau_ps'], 43.0, delta=0.5)
        self.assertTrue(math.isfinite(data['raman_noise_prob_per_pulse']))

    def test_download_result(self):
        """测试结果下载"""
        response = self.post('/api/download-result', {
            'content': 'delay_ps,counts,sigma\n0,10,3\n',
            'format': 'interferogram',
            'filename': 'scan.csv'
        })
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.headers['X-File-Format'], 'interferogram')
        self.assertIn('scan.csv', response.headers['Content-Disposition'])
        self.assertEqual(response.data, b'delay_ps,counts,sigma\n0,10,3\n')
        response.close()


if __name__ == '__main__':
    unittest.main()
