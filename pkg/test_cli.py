"""命令行入口测试：输出文件、JSON报告与退出码"""
import io
import json
import unittest
import sys
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli import EXIT_INPUT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main

TINY_SCENARIO = """[scenario]
name = tiny
integration_time_s = 0.001
[eps]
car = 10
"""

# 单点一百次以上三重符合，凹陷清晰可辨
SCAN_SCENARIO = """[scenario]
name = scan
seed = 5
integration_time_s = 0.02
[wcs]
n_bar = 0.02
[eps]
car = 10
herald_efficiency = 0.5
signal_efficiency = 0.5
scan_range_steps = 10
[detector.herald]
efficiency = 1
[detector.snspd1]
efficiency = 1
[detector.snspd2]
efficiency = 1
[scan]
steps_min = -10
steps_max = 10
"""


class TestCli(unittest.TestCase):
    """命令行测试"""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.out_dir = Path(self.tmpdir.name) / 'results'

    def tearDown(self):
        self.tmpdir.cleanup()

    def run_cli(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = main(['--out-dir', str(self.out_dir), *argv])
        return code, stdout.getvalue(), stderr.getvalue()

    def write(self, name, text):
        path = Path(self.tmpdir.name) / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def test_oracle(self):
        """测试Fock参考计算输出"""
        code, out, _ = self.run_cli('oracle', '--a', 'single', '--b', 'single', '--overlap', '1')
        self.assertEqual(code, EXIT_OK)
        report = json.loads(out)
        self.assertAlmostEqual(report['visibility'], 1.0, places=12)
        self.assertTrue((self.out_dir / 'oracle.json').exists())

    def test_run_scan_reproducible_across_threads(self):
        """测试run-scan写出干涉图与拟合文件，单线程与多线程输出逐字节一致"""
        path = self.write('scan.scenario', SCAN_SCENARIO)
        outputs = []
        for threads in ('1', '4'):
            out_dir = Path(self.tmpdir.name) / f"threads{threads}"
            with redirect_stdout(io.StringIO()) as stdout, redirect_stderr(io.StringIO()):
                code = main(['--out-dir', str(out_dir), '--threads', threads, 'run-scan', path])
            self.assertEqual(code, EXIT_OK)
            summary = json.loads(stdout.getvalue())
            self.assertTrue(summary['fit']['converged'])
            csv_path = out_dir / 'scan_interferogram.csv'
            fit_path = out_dir / 'scan_dip_fit.json'
            self.assertTrue(csv_path.exists())
            self.assertTrue(fit_path.exists())
            outputs.append((csv_path.read_bytes(), fit_path.read_bytes()))
        self.assertEqual(outputs[0][0], outputs[1][0])
        self.assertEqual(outputs[0][1], outputs[1][1])
        self.assertTrue(outputs[0][0].decode('utf-8').startswith('delay_ps,counts,sigma'))

    def test_fit_model(self):
        """测试可见度模型拟合写出结果文件"""
        path = self.write('points.csv', "n_bar,visibility,sigma\n0.007,0.63,0.02\n0.012,0.58,0.04\n0.003,0.49,0.06\n")
        code, out, _ = self.run_cli('fit-model', path)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(json.loads(out)['fit']['converged'])
        written = json.loads((self.out_dir / 'points_model_fit.json').read_text(encoding='utf-8'))
        self.assertEqual(set(written['params']), {'mu', 'n_sys'})

    def test_fit_model_underdetermined(self):
        """测试单点数据按输入错误退出"""
        path = self.write('one.csv', "0.007,0.63,0.02\n")
        code, _, err = self.run_cli('fit-model', path)
        self.assertEqual(code, EXIT_INPUT_ERROR)
        self.assertIn('at least 2 points', err)

    def test_fit_dip_not_converged(self):
        """测试平坦干涉图拟合未收敛时退出码为2"""
        rows = ''.join(f"{d},200\n" for d in range(-200, 201, 10))
        path = self.write('flat.csv', "delay_ps,counts\n" + rows)
        code, out, _ = self.run_cli('fit-dip', path)
        self.assertEqual(code, EXIT_NOT_CONVERGED)
        self.assertFalse(json.loads(out)['fit']['converged'])
        self.assertTrue((self.out_dir / 'flat_dip_fit.json').exists())

    def test_input_errors(self):
        """测试缺失文件、场景错误与线程数"""
        code, _, err = self.run_cli('fit-dip', str(Path(self.tmpdir.name) / 'missing.csv'))
        self.assertEqual(code, EXIT_INPUT_ERROR)
        self.assertIn('Cannot read', err)

        bad = self.write('bad.scenario', "[wcs]\nn_bar = 0.01\nfoo = 1\n")
        code, _, err = self.run_cli('link-budget', bad)
        self.assertEqual(code, EXIT_INPUT_ERROR)
        self.assertIn('line 3:', err)

        code, _, _ = self.run_cli('--threads', '0', 'link-budget', 'baseline')
        self.assertEqual(code, EXIT_INPUT_ERROR)

    def test_argument_errors_exit_with_one(self):
        """测试参数错误以1退出"""
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(['oracle', '--a', 'single'])
        self.assertEqual(ctx.exception.code, EXIT_INPUT_ERROR)

    def test_link_budget(self):
        """测试链路预算报告"""
        code, out, _ = self.run_cli('link-budget', 'loop1')
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(json.loads(out)['received_power_dbm'], -27.0)
        self.assertTrue((self.out_dir / 'loop1_link_budget.json').exists())

    def test_export_timetags(self):
        """测试导出三路时间标签文件"""
        path = self.write('tiny.scenario', TINY_SCENARIO)
        code, out, _ = self.run_cli('--seed', '3', 'export-timetags', path, '--pulses', '10000')
        self.assertEqual(code, EXIT_OK)
        report = json.loads(out)
        files = report['files']
        self.assertEqual(sorted(Path(f).name for f in files),
                         ['tiny_herald.tags', 'tiny_snspd1.tags', 'tiny_snspd2.tags'])
        header = Path(files[0]).read_text(encoding='utf-8').splitlines()[0]
        self.assertIn('total_bins=120000', header)

        # 10000个脉冲 = 100 μs
        tags = Path(next(f for f in files if f.endswith('tiny_herald.tags'))).read_text(encoding='utf-8')
        herald_events = len(tags.splitlines()) - 1
        self.assertEqual(report['singles']['herald'], herald_events)
        self.assertAlmostEqual(report['rates']['single:herald'], herald_events / 1e-4, delta=1e-6)
        self.assertAlmostEqual(report['rates']['threefolds'], report['threefolds'] / 1e-4, delta=1e-6)

    def test_characterize_source(self):
        """测试光源表征报告"""
        path = self.write('tiny.scenario', TINY_SCENARIO)
        code, out, _ = self.run_cli('characterize-source', path, '--pulses', '200000')
        self.assertEqual(code, EXIT_OK)
        report = json.loads(out)
        self.assertEqual(report['pulses'], 200000)
        self.assertGreater(report['p_herald'], 0.0)
        self.assertTrue((self.out_dir / 'tiny_source.json').exists())


if __name__ == '__main__':
    unittest.main()
