#!/usr/bin/env python3
"""
HOM干涉仿真命令行
子命令：run-scan、fit-dip、fit-model、oracle、link-budget、export-timetags、characterize-source
退出码：0 成功，1 输入错误，2 拟合未收敛
"""
import argparse
import logging
import sys

from core.api.service import ExperimentService
from core.config.scenario import MODES, resolve_scenario
from core.exceptions import SimulationError
from core.physics.units import AngularBandwidth

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2


class CliArgumentParser(argparse.ArgumentParser):
    """参数错误按输入错误退出（1），与拟合未收敛（2）区分"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _fit_exit_code(fit) -> int:
    return EXIT_OK if fit.converged else EXIT_NOT_CONVERGED


def _emit(service: ExperimentService, report) -> None:
    sys.stdout.write(service.export_manager.render('report', report))


def cmd_run_scan(service: ExperimentService, args) -> int:
    scenario = resolve_scenario(args.scenario)
    outcome = service.run_scan(scenario, seed=args.seed, threads=args.threads, mode=args.mode,
                               bootstrap=args.bootstrap, out_dir=args.out_dir)
    _emit(service, outcome.summary())
    return _fit_exit_code(outcome.fit)


def cmd_fit_dip(service: ExperimentService, args) -> int:
    fit, path = service.fit_dip_file(args.csv, integration_time=args.integration_time,
                                     bootstrap=args.bootstrap, out_dir=args.out_dir)
    _emit(service, {'fit': fit.to_dict(), 'flags': fit.flags, 'file': str(path)})
    return _fit_exit_code(fit)


def cmd_fit_model(service: ExperimentService, args) -> int:
    bw_a = AngularBandwidth(args.bw_a) if args.bw_a is not None else None
    bw_b = AngularBandwidth(args.bw_b) if args.bw_b is not None else None
    fit, path = service.fit_model_file(args.csv, bw_a, bw_b, scale_covariance=args.scale_covariance,
                                       out_dir=args.out_dir)
    _emit(service, {'fit': fit.to_dict(), 'flags': fit.flags, 'file': str(path)})
    return _fit_exit_code(fit)


def cmd_oracle(service: ExperimentService, args) -> int:
    report = service.oracle(args.a, args.b, args.overlap, args.n_max)
    service.export_manager.write('report', report, args.out_dir, 'oracle')
    _emit(service, report)
    return EXIT_OK


def cmd_link_budget(service: ExperimentService, args) -> int:
    scenario = resolve_scenario(args.scenario)
    report = service.link_budget(scenario)
    service.export_manager.write('report', report, args.out_dir, f"{scenario.name}_link_budget")
    _emit(service, report)
    return EXIT_OK


def cmd_export_timetags(service: ExperimentService, args) -> int:
    scenario = resolve_scenario(args.scenario)
    report = service.export_timetags(scenario, args.out_dir, step=args.step, n_pulses=args.pulses, seed=args.seed)
    _emit(service, report)
    return EXIT_OK


def cmd_characterize_source(service: ExperimentService, args) -> int:
    scenario = resolve_scenario(args.scenario)
    report = service.characterize_source(scenario, args.pulses, seed=args.seed)
    service.export_manager.write('report', report, args.out_dir, f"{scenario.name}_source")
    _emit(service, report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(prog='hom-sim', description='HOM interference simulation and analysis')
    parser.add_argument('--seed', type=int, default=None, help='override the scenario seed')
    parser.add_argument('--threads', type=int, default=1, help='worker threads for delay points')
    parser.add_argument('--out-dir', default='results', help='directory for result files')
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run-scan', help='simulate a pump-delay scan and fit the dip')
    p.add_argument('scenario', help='scenario file or preset name')
    p.add_argument('--mode', choices=MODES, default=None)
    p.add_argument('--bootstrap', type=int, default=0, help='parametric bootstrap resamples')
    p.set_defaults(handler=cmd_run_scan)

    p = sub.add_parser('fit-dip', help='fit an interferogram CSV')
    p.add_argument('csv')
    p.add_argument('--integration-time', type=float, default=60.0, help='seconds per point')
    p.add_argument('--bootstrap', type=int, default=0)
    p.set_defaults(handler=cmd_fit_dip)

    p = sub.add_parser('fit-model', help='fit visibility versus mean photon number')
    p.add_argument('csv', help='rows of n_bar,visibility,sigma')
    p.add_argument('--bw-a', type=float, default=None, help='rad/s')
    p.add_argument('--bw-b', type=float, default=None, help='rad/s')
    p.add_argument('--scale-covariance', action='store_true')
    p.set_defaults(handler=cmd_fit_model)

    p = sub.add_parser('oracle', help='truncated Fock-space beamsplitter calculation')
    p.add_argument('--a', required=True, help='single | vacuum | coherent:<n_bar> | fock:<n>')
    p.add_argument('--b', required=True)
    p.add_argument('--overlap', type=float, required=True, help='mode overlap amplitude in [0, 1]')
    p.add_argument('--n-max', type=int, default=None)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser('link-budget', help='loss and Raman noise report')
    p.add_argument('scenario')
    p.set_defaults(handler=cmd_link_budget)

    p = sub.add_parser('export-timetags', help='write per-detector timetag files')
    p.add_argument('scenario')
    p.add_argument('--step', type=int, default=0)
    p.add_argument('--pulses', type=int, default=None)
    p.set_defaults(handler=cmd_export_timetags)

    p = sub.add_parser('characterize-source', help='measure CAR and heralding efficiency')
    p.add_argument('scenario')
    p.add_argument('--pulses', type=int, default=10_000_000)
    p.set_defaults(handler=cmd_characterize_source)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format='%(asctime)s %(levelname)s %(message)s')
    if args.threads < 1:
        sys.stderr.write("error: --threads must be at least 1\n")
        return EXIT_INPUT_ERROR
    service = ExperimentService()
    try:
        return args.handler(service, args)
    except SimulationError as e:
        logging.error(e.message)
        sys.stderr.write(f"error: {e.message}\n")
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())
