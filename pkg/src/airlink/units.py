"""Physical parameters, unit conversions and the two reference system presets.

Everything downstream consumes SI values only: attenuation in Np/m (power),
dispersion in s^2/m and s^3/m, gamma and the Raman gain coefficient in
1/(W m), frequencies in Hz, lengths in m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

SPEED_OF_LIGHT = 299_792_458.0  # m/s
PLANCK = 6.62607015e-34  # J s
REFERENCE_WAVELENGTH = 1550e-9  # m


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``errors`` holds every violation found, not just the first.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ---------------------------------------------------------------- conversions


def dispersion_to_beta2(dispersion: float, lambda_ref: float = REFERENCE_WAVELENGTH) -> float:
    """Convert a dispersion parameter D (s/m^2) to beta2 (s^2/m)."""
    if not lambda_ref > 0:
        raise ValueError(f"reference wavelength must be positive, got {lambda_ref}")
    return -dispersion * lambda_ref**2 / (2 * math.pi * SPEED_OF_LIGHT)


def beta2_to_dispersion(beta2: float, lambda_ref: float = REFERENCE_WAVELENGTH) -> float:
    if not lambda_ref > 0:
        raise ValueError(f"reference wavelength must be positive, got {lambda_ref}")
    return -beta2 * 2 * math.pi * SPEED_OF_LIGHT / lambda_ref**2


def slope_to_beta3(slope: float, dispersion: float, lambda_ref: float = REFERENCE_WAVELENGTH) -> float:
    """Convert dispersion slope S (s/m^3) and D (s/m^2) to beta3 (s^3/m)."""
    if not lambda_ref > 0:
        raise ValueError(f"reference wavelength must be positive, got {lambda_ref}")
    scale = lambda_ref**2 / (2 * math.pi * SPEED_OF_LIGHT)
    return scale**2 * (slope + 2 * dispersion / lambda_ref)


def attenuation_db_km_to_np_m(a_db_km: float) -> float:
    """Power attenuation from dB/km to Np/m (1/m)."""
    if a_db_km < 0:
        raise ValueError(f"attenuation must be non-negative, got {a_db_km}")
    return a_db_km * math.log(10) / (10 * 1000)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def watt_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p / 1e-3)


def dbm_to_watt(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


# D in ps/(nm km) -> s/m^2 and S in ps/(nm^2 km) -> s/m^3
PS_NM_KM = 1e-12 / (1e-9 * 1e3)
PS_NM2_KM = 1e-12 / (1e-9 * 1e-9 * 1e3)


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class FiberParams:
    alpha: float  # Np/m, signal power attenuation
    alpha_p: float  # Np/m, pump power attenuation
    beta2: float  # s^2/m
    beta3: float  # s^3/m
    gamma: float  # 1/(W m)
    c_r: float = 0.0  # 1/(W m), Raman gain coefficient


@dataclass(frozen=True)
class SpanPlan:
    span_length: float  # m
    num_spans: int

    @property
    def distance(self) -> float:
        return self.span_length * self.num_spans


@dataclass(frozen=True)
class ChannelGrid:
    num_channels: int
    symbol_rate: float  # Hz
    spacing: float  # Hz
    center_frequency: float = SPEED_OF_LIGHT / REFERENCE_WAVELENGTH

    @property
    def total_bandwidth(self) -> float:
        return self.num_channels * self.spacing

    @property
    def k_max(self) -> int:
        return (self.num_channels - 1) // 2

    @property
    def indices(self) -> range:
        return range(-self.k_max, self.k_max + 1)

    def offset(self, k):
        """Centre frequency of channel ``k`` relative to the band centre (Hz)."""
        return k * self.spacing


@dataclass(frozen=True)
class Edfa:
    noise_figure: float  # linear

    kind = "edfa"


@dataclass(frozen=True)
class Raman:
    total_pump_power: float  # W
    phonon_factor: float = 1.13
    transparency_calibrated: bool = True

    kind = "raman"


AmplifierScheme = Union[Edfa, Raman]


@dataclass(frozen=True)
class QuadratureSettings:
    """Numerical knobs. None of these change the physics, only the accuracy/cost."""

    psd_rtol: float = 1e-3
    rho_rtol: float = 1e-6
    channel_order: int = 6  # Gauss-Legendre nodes across one channel band
    panel_order: int = 10  # Gauss-Legendre nodes per panel of the hyperbolic integral
    full_spectrum: bool = False
    sample_count: int = 41  # symmetric sample indices for interpolated spectra
    gh_order: int = 32
    threads: int = 1


@dataclass(frozen=True)
class SystemConfig:
    fiber: FiberParams
    spans: SpanPlan
    grid: ChannelGrid
    amplifier: AmplifierScheme
    include_beta3: bool = False
    quad: QuadratureSettings = field(default_factory=QuadratureSettings)

    @property
    def scheme(self) -> str:
        return self.amplifier.kind

    def with_spans(self, num_spans: int) -> "SystemConfig":
        return replace(self, spans=replace(self.spans, num_spans=num_spans))

    def with_quad(self, **changes) -> "SystemConfig":
        return replace(self, quad=replace(self.quad, **changes))


# ---------------------------------------------------------------- validation


def config_errors(cfg: SystemConfig) -> list[str]:
    """Return every invariant violation of ``cfg`` (empty list if valid)."""
    errs: list[str] = []

    def check(ok, msg):
        try:
            good = bool(ok)
        except Exception:  # NaN comparisons, wrong types
            good = False
        if not good or (isinstance(ok, float) and math.isnan(ok)):
            errs.append(msg)

    fb = cfg.fiber
    check(fb.alpha > 0, "alpha must be positive")
    check(fb.alpha_p > 0, "alpha_p must be positive")
    check(fb.gamma > 0, "gamma must be positive")
    check(fb.c_r >= 0, "c_r must be non-negative")
    check(fb.beta2 != 0 and math.isfinite(fb.beta2), "beta2 must be non-zero and finite")
    check(math.isfinite(fb.beta3), "beta3 must be finite")

    sp = cfg.spans
    check(sp.span_length > 0, "span_length must be positive")
    check(isinstance(sp.num_spans, int) and sp.num_spans >= 1, "num_spans must be an integer >= 1")

    gr = cfg.grid
    if not (isinstance(gr.num_channels, int) and gr.num_channels >= 1):
        errs.append("num_channels must be a positive integer")
    elif gr.num_channels % 2 == 0:
        errs.append("num_channels must be odd")
    check(gr.symbol_rate > 0, "symbol_rate must be positive")
    check(gr.spacing >= gr.symbol_rate, "spacing must be >= symbol_rate")
    check(gr.center_frequency > 0, "center_frequency must be positive")

    amp = cfg.amplifier
    if isinstance(amp, Edfa):
        check(amp.noise_figure >= 1, "noise_figure must be >= 1 (linear)")
    elif isinstance(amp, Raman):
        check(amp.total_pump_power > 0, "total_pump_power must be positive")
        check(amp.phonon_factor >= 1, "phonon_factor must be >= 1")
    else:
        errs.append(f"unknown amplifier scheme {amp!r}")

    q = cfg.quad
    check(q.psd_rtol > 0, "psd_rtol must be positive")
    check(q.rho_rtol > 0, "rho_rtol must be positive")
    check(q.channel_order >= 4, "channel_order must be >= 4")
    check(q.panel_order >= 4, "panel_order must be >= 4")
    check(q.sample_count >= 9, "sample_count must be >= 9")
    check(q.gh_order >= 8, "gh_order must be >= 8")
    check(q.threads >= 1, "threads must be >= 1")
    return errs


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` unchanged if valid, else raise ConfigError listing all problems."""
    errs = config_errors(cfg)
    if errs:
        raise ConfigError(errs)
    return cfg


# ---------------------------------------------------------------- presets


def transparency_gain_coefficient(fiber: FiberParams, pump_power: float, span_length: float) -> float:
    """Raman gain coefficient that makes the on-off gain equal the span loss.

    Solves C_R * P_p0 * (1 - exp(-alpha_p L)) / alpha_p = alpha * L.
    """
    pump_eff_length = -math.expm1(-fiber.alpha_p * span_length) / fiber.alpha_p
    return fiber.alpha * span_length / (pump_power * pump_eff_length)


def calibrate_raman(cfg: SystemConfig) -> SystemConfig:
    """Set c_r for span transparency if the amplifier asks for it."""
    amp = cfg.amplifier
    if not (isinstance(amp, Raman) and amp.transparency_calibrated):
        return cfg
    c_r = transparency_gain_coefficient(cfg.fiber, amp.total_pump_power, cfg.spans.span_length)
    return replace(cfg, fiber=replace(cfg.fiber, c_r=c_r))


def ssmf_fiber(lambda_ref: float = REFERENCE_WAVELENGTH) -> FiberParams:
    d = 17.0 * PS_NM_KM
    s = 0.067 * PS_NM2_KM
    return FiberParams(
        alpha=attenuation_db_km_to_np_m(0.20),
        alpha_p=attenuation_db_km_to_np_m(0.25),
        beta2=dispersion_to_beta2(d, lambda_ref),
        beta3=slope_to_beta3(s, d, lambda_ref),
        gamma=1.20e-3,
    )


def preset_edfa(num_spans: int = 25) -> SystemConfig:
    cfg = SystemConfig(
        fiber=ssmf_fiber(),
        spans=SpanPlan(span_length=80e3, num_spans=num_spans),
        grid=ChannelGrid(num_channels=501, symbol_rate=10e9, spacing=10e9),
        amplifier=Edfa(noise_figure=db_to_linear(4.5)),
    )
    return validate_config(cfg)


def preset_raman(num_spans: int = 25) -> SystemConfig:
    cfg = SystemConfig(
        fiber=ssmf_fiber(),
        spans=SpanPlan(span_length=80e3, num_spans=num_spans),
        grid=ChannelGrid(num_channels=1251, symbol_rate=10e9, spacing=10e9),
        amplifier=Raman(total_pump_power=5 * 0.680, phonon_factor=1.13, transparency_calibrated=True),
    )
    return validate_config(calibrate_raman(cfg))


PRESETS = {"edfa": preset_edfa, "raman": preset_raman}
