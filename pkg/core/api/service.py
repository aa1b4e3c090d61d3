"""实验服务：命令行与HTTP接口共用的编排层"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..analysis.dip_fit import fit_dip
from ..analysis.interferogram import Interferogram, interferogram_visibility
from ..analysis.least_squares import FitResult
from ..analysis.pipeline import build_interferogram, characterize_source, simulate_timetags
from ..analysis.visibility_fit import fit_visibility_model
from ..config.scenario import Scenario, list_presets, load_preset
from ..document_processing.export_manager import ExportManager
from ..exceptions import DomainError
from ..physics.fock_oracle import FockOracleInput, PhotonSource, fock_hom_oracle, oracle_visibility, required_n_max
from ..physics.hom_model import dip_tau_from_bandwidths
from ..physics.units import PS, AngularBandwidth
from ..simulation.acquisition import count_threefold
from ..simulation.link import raman_noise_prob_per_pulse, received_power_dbm, transmittance
from ..simulation.sources import herald_probability

# 可见度模型拟合的缺省带宽 (11π, 10π)×10⁹ rad/s
DEFAULT_BW_A = AngularBandwidth(11.0 * math.pi * 1e9)
DEFAULT_BW_B = AngularBandwidth(10.0 * math.pi * 1e9)


@dataclass
class ScanOutcome:
    """一次扫描的干涉图与凹陷拟合"""
    scenario: Scenario
    interferogram: Interferogram
    fit: FitResult
    paths: Dict[str, Path] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        return {
            'scenario': self.scenario.name,
            'digest': self.scenario.digest(),
            'points': len(self.interferogram),
            'plateau_rate': self.interferogram.plateau_rate(),
            'extrema_visibility': interferogram_visibility(self.interferogram),
            'fit': self.fit.to_dict(),
            'flags': list(self.fit.flags),
            'files': {k: str(v) for k, v in self.paths.items()},
        }


class ExperimentService:
    """编排扫描、拟合、Fock参考计算、链路预算与时间标签导出"""

    def __init__(self, export_manager: Optional[ExportManager] = None):
        self.export_manager = export_manager or ExportManager()

    def run_scan(self, scenario: Scenario, seed: Optional[int] = None, threads: int = 1,
                 mode: Optional[str] = None, bootstrap: int = 0, out_dir=None) -> ScanOutcome:
        interferogram = build_interferogram(scenario, seed=seed, threads=threads, mode=mode)
        fit = self.fit_dip(interferogram, bootstrap)
        outcome = ScanOutcome(scenario, interferogram, fit)
        if out_dir is not None:
            outcome.paths['interferogram'] = self.export_manager.write(
                'interferogram', interferogram, out_dir, f"{scenario.name}_interferogram")
            outcome.paths['fit'] = self.export_manager.write('fit', fit, out_dir, f"{scenario.name}_dip_fit")
        return outcome

    def fit_dip(self, interferogram: Interferogram, bootstrap: int = 0) -> FitResult:
        if bootstrap < 0:
            raise DomainError("bootstrap must be non-negative", parameter="bootstrap", value=bootstrap)
        return fit_dip(interferogram, bootstrap=bootstrap)

    def fit_dip_file(self, path, integration_time: float = 60.0, bootstrap: int = 0,
                     out_dir=None) -> Tuple[FitResult, Optional[Path]]:
        interferogram = self.export_manager.read('interferogram', path, integration_time=integration_time)
        fit = self.fit_dip(interferogram, bootstrap)
        written = None
        if out_dir is not None:
            written = self.export_manager.write('fit', fit, out_dir, f"{Path(path).stem}_dip_fit")
        return fit, written

    def fit_model(self, points: Sequence[Tuple[float, float, float]], bw_a: Optional[AngularBandwidth] = None,
                  bw_b: Optional[AngularBandwidth] = None, scale_covariance: bool = False) -> FitResult:
        if len(points) < 2:
            raise DomainError("Visibility model fit needs at least 2 points", parameter="points", value=len(points))
        return fit_visibility_model(points, bw_a or DEFAULT_BW_A, bw_b or DEFAULT_BW_B,
                                    scale_covariance=scale_covariance)

    def fit_model_file(self, path, bw_a: Optional[AngularBandwidth] = None, bw_b: Optional[AngularBandwidth] = None,
                       scale_covariance: bool = False, out_dir=None) -> Tuple[FitResult, Optional[Path]]:
        points = self.export_manager.read('points', path)
        fit = self.fit_model(points, bw_a, bw_b, scale_covariance)
        written = None
        if out_dir is not None:
            written = self.export_manager.write('fit', fit, out_dir, f"{Path(path).stem}_model_fit")
        return fit, written

    def oracle(self, input_a: str, input_b: str, overlap: float, n_max: Optional[int] = None) -> Dict[str, Any]:
        """Fock空间参考计算，返回各输出事件概率与凹陷可见度"""
        source_a = PhotonSource.parse(input_a)
        source_b = PhotonSource.parse(input_b)
        if n_max is None:
            n_max = required_n_max(source_a, source_b)
        result = fock_hom_oracle(FockOracleInput(source_a, source_b, overlap, n_max))
        try:
            visibility = oracle_visibility(source_a, source_b, n_max)
        except DomainError as e:
            logging.warning(f"Oracle visibility undefined: {e.message}")
            visibility = None
        report = {'input_a': source_a.describe(), 'input_b': source_b.describe(), 'overlap': overlap,
                  'n_max': n_max}
        report.update(result.to_dict())
        report['total'] = result.total
        report['visibility'] = visibility
        return report

    def link_budget(self, scenario: Scenario) -> Dict[str, Any]:
        link, channel = scenario.link, scenario.classical
        bw_a, bw_b = scenario.bandwidths()
        return {
            'scenario': scenario.name,
            'length_m': link.length,
            'prop_delay_s': link.prop_delay,
            'loss_db': link.loss_db,
            'transmittance': transmittance(link.loss_db),
            'launch_power_dbm': channel.launch_power_dbm,
            'received_power_dbm': received_power_dbm(channel, link),
            'direction': channel.direction,
            'detection_window_s': scenario.bin_width,
            'raman_noise_prob_per_pulse': raman_noise_prob_per_pulse(channel, link, scenario.clock.rep_rate,
                                                                     scenario.bin_width),
            'herald_probability': herald_probability(scenario.eps, scenario.detectors['herald']),
            'dip_tau_ps': dip_tau_from_bandwidths(bw_a, bw_b) / PS,
        }

    def export_timetags(self, scenario: Scenario, out_dir, step: int = 0, n_pulses: Optional[int] = None,
                        seed: Optional[int] = None) -> Dict[str, Any]:
        """写出三路时间标签文件，并报告这些流上的符合计数与速率"""
        streams = simulate_timetags(scenario, step=step, n_pulses=n_pulses, seed=seed)
        paths = [self.export_manager.write('timetags', stream, out_dir, f"{scenario.name}_{label}")
                 for label, stream in streams.items()]
        coincidences = count_threefold(streams['herald'], streams['snspd1'], streams['snspd2'],
                                       scenario.window_bins)
        return {
            'files': [str(p) for p in paths],
            'step': step,
            'threefolds': coincidences.threefolds,
            'singles': coincidences.singles,
            'rates': coincidences.rates(),
        }

    def characterize_source(self, scenario: Scenario, n_pulses: int, seed: Optional[int] = None) -> Dict[str, Any]:
        result = characterize_source(scenario, n_pulses, seed)
        return {
            'pulses': result.pulses,
            'car': result.car.car,
            'car_defined': result.car.defined,
            'car_infinite': result.car.infinite,
            'coincidences': result.car.coincidences,
            'accidentals': result.car.accidentals,
            'p_herald': result.p_herald,
            'p_coincidence': result.p_coincidence,
            'heralding_efficiency': result.heralding.mu,
            'heralding_consistent': result.heralding.consistent,
        }

    def preset(self, name: str) -> Scenario:
        return load_preset(name)

    def presets(self) -> List[str]:
        return list_presets()
