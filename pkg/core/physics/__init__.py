"""物理模型子模块：单位、谱因子、HOM模型与Fock空间参考计算"""
from .units import (
    AngularBandwidth, pulse_to_angular_bandwidth, effective_bandwidth,
    dbm_to_mw, PS, GHZ, TIME_BANDWIDTH_PRODUCT
)
from .hom_model import (
    DipModelParams, VisibilityModelParams, spectral_factor, mode_overlap,
    dip_tau_from_bandwidths, dip_model, predict_visibility, optimal_n_bar
)
from .fock_oracle import (
    PhotonSource, FockOracleInput, OracleResult, fock_hom_oracle,
    oracle_visibility, required_n_max, beamsplitter_output
)

__all__ = [
    'AngularBandwidth', 'pulse_to_angular_bandwidth', 'effective_bandwidth',
    'dbm_to_mw', 'PS', 'GHZ', 'TIME_BANDWIDTH_PRODUCT',
    'DipModelParams', 'VisibilityModelParams', 'spectral_factor', 'mode_overlap',
    'dip_tau_from_bandwidths', 'dip_model', 'predict_visibility', 'optimal_n_bar',
    'PhotonSource', 'FockOracleInput', 'OracleResult', 'fock_hom_oracle',
    'oracle_visibility', 'required_n_max', 'beamsplitter_output'
]
