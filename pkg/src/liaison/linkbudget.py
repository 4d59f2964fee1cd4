"""Closed-form radiometric error models for crosslink ranging and Doppler.

All SNR-like inputs are linear (not dB); use :func:`db_to_linear` once at the
boundary.  Outputs are one-sigma values in SI units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT


class FeasibilityError(ValueError):
    """Requested accuracy cannot be supported by the interferometer baseline."""


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def _require_positive(obj, *names):
    for name in names:
        if not getattr(obj, name) > 0:
            raise ValueError(f"{type(obj).__name__}.{name} must be positive, got {getattr(obj, name)}")


@dataclass(frozen=True)
class PnRangingConfig:
    f_rc: float = 1e6  # ranging clock (Hz)
    B_L: float = 1.0  # one-sided loop bandwidth (Hz)
    Prc_N0: float = 1e4  # ranging clock power / noise density (Hz)
    f_chip: float = 1e6  # chip rate (Hz)
    delta_f_chip: float = 0.0  # chip rate mismatch (Hz)
    T: float = 1.0  # integration time (s)

    def __post_init__(self):
        _require_positive(self, "f_rc", "B_L", "Prc_N0", "f_chip", "T")
        if self.delta_f_chip < 0:
            raise ValueError("delta_f_chip must be non-negative")


@dataclass(frozen=True)
class TmRangingConfig:
    T_sd: float  # channel symbol duration (s)
    T_l: float = 1.0  # correlator integration time (s)
    Es_N0: float = 1.0  # symbol SNR
    v: float = 0.0  # relative speed (m/s)
    clock: PnRangingConfig = PnRangingConfig()

    def __post_init__(self):
        _require_positive(self, "T_sd", "T_l", "Es_N0")
        if not 0 <= self.v < SPEED_OF_LIGHT:
            raise ValueError("relative speed must lie in [0, c)")


@dataclass(frozen=True)
class TdRangingConfig:
    T_sd_up: float
    T_sd_down: float
    T_l: float = 1.0
    Es_N0: float = 1.0
    v: float = 0.0

    def __post_init__(self):
        _require_positive(self, "T_sd_up", "T_sd_down", "T_l", "Es_N0")
        if not 0 <= self.v < SPEED_OF_LIGHT:
            raise ValueError("relative speed must lie in [0, c)")


@dataclass(frozen=True)
class DopplerConfig:
    f_c: float = 8.4e9  # downlink carrier (Hz)
    T: float = 60.0  # integration time (s)
    rho_L: float = 100.0  # carrier loop SNR
    G: float = 880.0 / 749.0  # turn-around ratio
    B_L: float = 10.0  # loop bandwidth (Hz)
    Pc_N0: float = 1e3  # carrier power / noise density (Hz)

    def __post_init__(self):
        _require_positive(self, "f_c", "T", "rho_L", "G", "B_L", "Pc_N0")


@dataclass(frozen=True)
class ToneConfig:
    Bn: float = 0.1  # loop bandwidth (Hz)
    S_N0: float = 1e3  # tone SNR (Hz)
    lambda_mt: float = 201.0  # major-tone wavelength (m)
    f_t: float = 2.2e9  # carrier (Hz)
    f_mt: float = 1.49e6  # major tone (Hz)
    t_c: float = 1.0  # count time (s)
    G: float = 1.0  # transponding ratio

    def __post_init__(self):
        _require_positive(self, "Bn", "S_N0", "lambda_mt", "f_t", "f_mt", "t_c", "G")


@dataclass(frozen=True)
class InterferometerGeometry:
    b: float = 1.0  # baseline (m)
    wavelength: float = SPEED_OF_LIGHT / 2.2e9  # carrier wavelength (m)

    def __post_init__(self):
        _require_positive(self, "b", "wavelength")


def _clock_loop_term(cfg: PnRangingConfig) -> float:
    return SPEED_OF_LIGHT / (8.0 * cfg.f_rc) * np.sqrt(cfg.B_L / cfg.Prc_N0)


def pn_range_sigma(cfg: PnRangingConfig) -> float:
    """One-way PN ranging jitter from the chip tracking loop (m)."""
    return float(_clock_loop_term(cfg))


def pn_range_bias(cfg: PnRangingConfig) -> float:
    """Range bias accumulated from a chip-rate mismatch (m)."""
    return SPEED_OF_LIGHT * cfg.delta_f_chip * cfg.T / (4.0 * cfg.f_chip)


def tm_range_sigma(cfg: TmRangingConfig) -> float:
    """Telemetry-based ranging error: symbol-timing term plus clock-loop term (m)."""
    symbol = 4.0 * SPEED_OF_LIGHT * cfg.T_sd**2 / (np.pi * cfg.T_l * cfg.Es_N0)
    return float((1.0 - 2.0 * cfg.v / SPEED_OF_LIGHT) * (symbol + _clock_loop_term(cfg.clock)))


def td_range_sigma(cfg: TdRangingConfig) -> float:
    """Time-derived ranging error with symbol timing on both link directions (m)."""
    num = 4.0 * SPEED_OF_LIGHT * np.sqrt(cfg.T_sd_up**4 + cfg.T_sd_down**4)
    return float((1.0 - 2.0 * cfg.v / SPEED_OF_LIGHT) * num / (np.pi * cfg.T_l * cfg.Es_N0))


def doppler_sigma(cfg: DopplerConfig) -> float:
    """Two-way Doppler range-rate error due to thermal noise (m/s)."""
    scale = SPEED_OF_LIGHT / (2.0 * np.sqrt(2.0) * np.pi * cfg.f_c * cfg.T)
    return float(scale * np.sqrt(1.0 / cfg.rho_L + cfg.G**2 * cfg.B_L / cfg.Pc_N0))


def tone_phase_sigma(cfg: ToneConfig) -> float:
    """Phase jitter on the major ranging tone (rad)."""
    return float(np.sqrt(2.0 * cfg.Bn / (2.0 * cfg.S_N0)))


def tone_range_sigma(cfg: ToneConfig) -> float:
    """Tone ranging error, phase jitter scaled by the major-tone wavelength (m)."""
    return tone_phase_sigma(cfg) * cfg.lambda_mt / (2.0 * np.pi)


def doppler_from_phase(cfg: ToneConfig, sigma_phi: float) -> float:
    """Range-rate error from carrier phase noise ``sigma_phi`` (m/s)."""
    if sigma_phi < 0:
        raise ValueError("phase noise must be non-negative")
    return float(np.sqrt(2.0) * SPEED_OF_LIGHT / (2.0 * cfg.G * cfg.f_t * cfg.t_c) * sigma_phi / (2.0 * np.pi))


def zeta(cfg: ToneConfig) -> float:
    """Ratio of range to range-rate error on the same transponder (s)."""
    return float(np.sqrt(2.0) * cfg.G * cfg.f_t / cfg.f_mt * cfg.t_c)


def _spread(sigma_psi):
    return np.sqrt((1.0 - np.exp(-2.0 * sigma_psi**2)) / 2.0)


def _inverse_spread(ratio):
    return np.sqrt(np.log(1.0 / np.sqrt(1.0 - 2.0 * ratio**2)))


def los_sigma_convert(geom: InterferometerGeometry, *, sigma_psi=None, sigma_rho=None,
                      sigma_tau=None, to: str = "psi") -> float:
    """Convert between LOS angle error and interferometric delay/phase error.

    Exactly one of ``sigma_psi`` (rad), ``sigma_rho`` (m, path-length form of
    the time delay) or ``sigma_tau`` (rad, phase-shift form) is given; ``to``
    selects the output among ``"psi"``, ``"rho"`` and ``"tau"``.  A Gaussian
    angle error maps onto delay through ``Var[cos psi]`` or ``Var[sin psi]``,
    whose supremum is 1/2, so delay errors at or beyond ``b / sqrt(2)`` (or
    ``sqrt(2) pi b / lambda`` in phase) have no angle equivalent and raise
    :class:`FeasibilityError`.
    """
    given = [(k, v) for k, v in (("psi", sigma_psi), ("rho", sigma_rho), ("tau", sigma_tau)) if v is not None]
    if len(given) != 1:
        raise ValueError("give exactly one of sigma_psi, sigma_rho, sigma_tau")
    kind, value = given[0]
    if value < 0:
        raise ValueError("sigma must be non-negative")
    phase_scale = 2.0 * np.pi * geom.b / geom.wavelength

    if kind == "psi":
        psi = float(value)
    else:
        ratio = value / geom.b if kind == "rho" else value / phase_scale
        if ratio >= 1.0 / np.sqrt(2.0):
            bound = geom.b / np.sqrt(2.0) if kind == "rho" else phase_scale / np.sqrt(2.0)
            raise FeasibilityError(
                f"sigma_{kind} = {value:g} is at or beyond {bound:g}; the baseline cannot resolve the angle"
            )
        psi = float(_inverse_spread(ratio))

    if to == "psi":
        return psi
    if to == "rho":
        return float(geom.b * _spread(psi))
    if to == "tau":
        return float(phase_scale * _spread(psi))
    raise ValueError(f"unknown target {to!r}")


def ranging_sweep(data_rates_bps, pn: PnRangingConfig, T_l: float = 1.0, Es_N0: float = 1.0, v: float = 0.0):
    """PN, telemetry-based and time-derived ranging errors versus data rate.

    Symbol duration is ``1 / data_rate`` on both directions.  Returns an array
    with columns ``(data_rate_bps, sigma_pn_m, sigma_tm_m, sigma_td_m)``.
    """
    rows = []
    for rate in np.asarray(data_rates_bps, dtype=float):
        t_sd = 1.0 / rate
        rows.append((
            rate,
            pn_range_sigma(pn),
            tm_range_sigma(TmRangingConfig(t_sd, T_l, Es_N0, v, pn)),
            td_range_sigma(TdRangingConfig(t_sd, t_sd, T_l, Es_N0, v)),
        ))
    return np.array(rows)
