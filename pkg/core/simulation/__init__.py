"""蒙特卡洛仿真子模块：光源、链路、时钟同步与探测采集"""
from .rng import substream
from .acquisition import (
    DETECTOR_LABELS, DetectorConfig, TimetagStream, CoincidenceResult, CarResult,
    HeraldingEstimate, bin_width_from_rate, detect, count_threefold, compute_car,
    estimate_heralding_efficiency
)
from .sources import (
    WcsSourceConfig, EpsSourceConfig, EmissionRecord, sample_wcs, sample_eps,
    sample_eps_heralded, herald_probability, car_to_pair_prob, set_pump_delay
)
from .link import (
    FiberLink, ClassicalChannel, transmittance, apply_loss_dbm, received_power_dbm,
    raman_noise_prob_per_pulse, calibrate_raman_coeff, thin_photons
)
from .sync import ClockModel, jitter_samples, recovered_pulse_time, jitter_corrected_dip

__all__ = [
    'substream',
    'DETECTOR_LABELS', 'DetectorConfig', 'TimetagStream', 'CoincidenceResult', 'CarResult',
    'HeraldingEstimate', 'bin_width_from_rate', 'detect', 'count_threefold', 'compute_car',
    'estimate_heralding_efficiency',
    'WcsSourceConfig', 'EpsSourceConfig', 'EmissionRecord', 'sample_wcs', 'sample_eps',
    'sample_eps_heralded', 'herald_probability', 'car_to_pair_prob', 'set_pump_delay',
    'FiberLink', 'ClassicalChannel', 'transmittance', 'apply_loss_dbm', 'received_power_dbm',
    'raman_noise_prob_per_pulse', 'calibrate_raman_coeff', 'thin_photons',
    'ClockModel', 'jitter_samples', 'recovered_pulse_time', 'jitter_corrected_dip'
]
