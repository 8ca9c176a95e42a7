"""INI configuration files.

Values are written in the units engineers quote (dB/km, ps/(nm km), GHz, km)
and converted to SI here.  A file may start from a preset and override any
key; unknown sections or keys are errors, not silently ignored.

    [base]
    preset = edfa                 ; edfa | raman | none

    [fiber]
    attenuation_db_km = 0.20
    pump_attenuation_db_km = 0.25
    dispersion_ps_nm_km = 17
    slope_ps_nm2_km = 0.067
    gamma_per_w_km = 1.2
    raman_gain_per_w_km = 0.063   ; only used when transparency_calibrated = false
    reference_wavelength_nm = 1550

    [spans]
    span_length_km = 80
    num_spans = 25

    [grid]
    num_channels = 501
    symbol_rate_ghz = 10
    spacing_ghz = 10
    center_frequency_thz = 193.414   ; default c / reference wavelength

    [amplifier]
    scheme = edfa                 ; edfa | raman
    noise_figure_db = 4.5
    pump_power_w = 3.4
    phonon_factor = 1.13
    transparency_calibrated = true

    [run]
    include_beta3 = false
    full_spectrum = false
    sample_count = 41
    psd_rtol = 1e-3
    rho_rtol = 1e-6
    gh_order = 32
    threads = 1
"""

from __future__ import annotations

import configparser
import math
from dataclasses import replace
from pathlib import Path

from .units import (
    PRESETS,
    REFERENCE_WAVELENGTH,
    PS_NM2_KM,
    PS_NM_KM,
    SPEED_OF_LIGHT,
    ChannelGrid,
    ConfigError,
    Edfa,
    FiberParams,
    QuadratureSettings,
    Raman,
    SpanPlan,
    SystemConfig,
    attenuation_db_km_to_np_m,
    beta2_to_dispersion,
    calibrate_raman,
    config_errors,
    db_to_linear,
    dispersion_to_beta2,
    slope_to_beta3,
)

KNOWN_KEYS = {
    "base": {"preset"},
    "fiber": {"attenuation_db_km", "pump_attenuation_db_km", "dispersion_ps_nm_km", "slope_ps_nm2_km",
              "gamma_per_w_km", "raman_gain_per_w_km", "reference_wavelength_nm"},
    "spans": {"span_length_km", "num_spans"},
    "grid": {"num_channels", "symbol_rate_ghz", "spacing_ghz", "center_frequency_thz"},
    "amplifier": {"scheme", "noise_figure_db", "pump_power_w", "phonon_factor", "transparency_calibrated"},
    "run": {"include_beta3", "full_spectrum", "sample_count", "psd_rtol", "rho_rtol", "gh_order", "threads"},
}


def _slope_from_beta3(beta3: float, d: float, lam: float) -> float:
    scale = lam**2 / (2 * math.pi * SPEED_OF_LIGHT)
    return beta3 / scale**2 - 2 * d / lam


def _boolean(raw: str) -> bool:
    v = str(raw).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


_boolean.__name__ = "boolean"


def load_config(path: str | Path | None = None, preset: str | None = None) -> SystemConfig:
    """Build a validated SystemConfig from a preset, an INI file, or both.

    Keys present in the file override the preset; absent keys keep the
    preset's SI values untouched.  Raises ConfigError listing every problem
    found (parse errors, unknown keys, bad values, invariant violations).
    """
    errors: list[str] = []
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError([f"config file {str(p)!r} not found"])
        try:
            parser.read_string(p.read_text(encoding="utf-8"), source=str(p))
        except configparser.Error as exc:
            raise ConfigError([f"cannot parse {p}: {exc}"]) from None
    for section in parser.sections():
        if section not in KNOWN_KEYS:
            errors.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in KNOWN_KEYS[section]:
                errors.append(f"unknown key {key!r} in [{section}]")

    chosen = (preset or parser.get("base", "preset", fallback="none")).strip().lower()
    base = None
    if chosen in PRESETS:
        base = PRESETS[chosen]()
    elif chosen != "none":
        errors.append(f"unknown preset {chosen!r}; expected edfa, raman or none")
    elif path is None:
        raise ConfigError(["either a config file or a preset is required"])

    def get(section, key, conv):
        if not parser.has_option(section, key):
            return None
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError:
            errors.append(f"[{section}] {key} = {raw!r} is not a valid {conv.__name__}")
            return None

    def need(section, key):
        if base is None and not parser.has_option(section, key):
            errors.append(f"[{section}] {key} is required")

    v = {sec: {key: None for key in keys} for sec, keys in KNOWN_KEYS.items()}
    conv = {"num_spans": int, "num_channels": int, "sample_count": int, "gh_order": int, "threads": int,
            "scheme": str, "preset": str, "include_beta3": _boolean, "full_spectrum": _boolean,
            "transparency_calibrated": _boolean}
    for sec, keys in KNOWN_KEYS.items():
        for key in keys:
            v[sec][key] = get(sec, key, conv.get(key, float))

    fb_in, sp_in, gr_in, amp_in, run_in = v["fiber"], v["spans"], v["grid"], v["amplifier"], v["run"]
    for sec, key in (("fiber", "attenuation_db_km"), ("fiber", "dispersion_ps_nm_km"), ("fiber", "gamma_per_w_km"),
                     ("spans", "span_length_km"), ("spans", "num_spans"), ("grid", "num_channels"),
                     ("grid", "symbol_rate_ghz"), ("grid", "spacing_ghz"), ("amplifier", "scheme")):
        need(sec, key)
    for key in ("attenuation_db_km", "pump_attenuation_db_km"):
        if fb_in[key] is not None and fb_in[key] < 0:
            errors.append(f"{key} must be non-negative")
    lam_nm = fb_in["reference_wavelength_nm"]
    if lam_nm is not None and not lam_nm > 0:
        errors.append("reference_wavelength_nm must be positive")
    if errors:
        raise ConfigError(errors)

    # fiber
    if base is not None:
        fiber = base.fiber
        lam_base = SPEED_OF_LIGHT / base.grid.center_frequency
    else:
        fiber = FiberParams(alpha=1.0, alpha_p=attenuation_db_km_to_np_m(0.25), beta2=0.0, beta3=0.0, gamma=1.0)
        lam_base = REFERENCE_WAVELENGTH
    lam = lam_nm * 1e-9 if lam_nm is not None else lam_base
    changes = {}
    if fb_in["attenuation_db_km"] is not None:
        changes["alpha"] = attenuation_db_km_to_np_m(fb_in["attenuation_db_km"])
    if fb_in["pump_attenuation_db_km"] is not None:
        changes["alpha_p"] = attenuation_db_km_to_np_m(fb_in["pump_attenuation_db_km"])
    if fb_in["gamma_per_w_km"] is not None:
        changes["gamma"] = fb_in["gamma_per_w_km"] / 1e3
    if fb_in["raman_gain_per_w_km"] is not None:
        changes["c_r"] = fb_in["raman_gain_per_w_km"] / 1e3
    if any(fb_in[k] is not None for k in ("dispersion_ps_nm_km", "slope_ps_nm2_km", "reference_wavelength_nm")):
        d_old = beta2_to_dispersion(fiber.beta2, lam_base) if fiber.beta2 else 0.0
        s_old = _slope_from_beta3(fiber.beta3, d_old, lam_base) if base is not None else 0.0
        d = fb_in["dispersion_ps_nm_km"] * PS_NM_KM if fb_in["dispersion_ps_nm_km"] is not None else d_old
        slope = fb_in["slope_ps_nm2_km"] * PS_NM2_KM if fb_in["slope_ps_nm2_km"] is not None else s_old
        changes["beta2"] = dispersion_to_beta2(d, lam)
        changes["beta3"] = slope_to_beta3(slope, d, lam)
    fiber = replace(fiber, **changes)

    # spans and grid
    spans = base.spans if base is not None else SpanPlan(0.0, 0)
    if sp_in["span_length_km"] is not None:
        spans = replace(spans, span_length=sp_in["span_length_km"] * 1e3)
    if sp_in["num_spans"] is not None:
        spans = replace(spans, num_spans=sp_in["num_spans"])
    grid = base.grid if base is not None else ChannelGrid(0, 0.0, 0.0, SPEED_OF_LIGHT / lam)
    gchanges = {}
    if gr_in["num_channels"] is not None:
        gchanges["num_channels"] = gr_in["num_channels"]
    if gr_in["symbol_rate_ghz"] is not None:
        gchanges["symbol_rate"] = gr_in["symbol_rate_ghz"] * 1e9
    if gr_in["spacing_ghz"] is not None:
        gchanges["spacing"] = gr_in["spacing_ghz"] * 1e9
    if gr_in["center_frequency_thz"] is not None:
        gchanges["center_frequency"] = gr_in["center_frequency_thz"] * 1e12
    elif lam_nm is not None:
        gchanges["center_frequency"] = SPEED_OF_LIGHT / lam
    grid = replace(grid, **gchanges)

    # amplifier
    amp = base.amplifier if base is not None else None
    scheme = (amp_in["scheme"] or (amp.kind if amp is not None else "")).strip().lower()
    if scheme == "edfa":
        nf = amp_in["noise_figure_db"]
        if nf is not None:
            amp = Edfa(noise_figure=db_to_linear(nf))
        elif not isinstance(amp, Edfa):
            errors.append("[amplifier] noise_figure_db is required for scheme edfa")
    elif scheme == "raman":
        old = amp if isinstance(amp, Raman) else None
        pp = amp_in["pump_power_w"] if amp_in["pump_power_w"] is not None else (old and old.total_pump_power)
        if pp is None:
            errors.append("[amplifier] pump_power_w is required for scheme raman")
        else:
            phi = amp_in["phonon_factor"]
            cal = amp_in["transparency_calibrated"]
            amp = Raman(
                total_pump_power=pp,
                phonon_factor=phi if phi is not None else (old.phonon_factor if old else 1.13),
                transparency_calibrated=cal if cal is not None else (old.transparency_calibrated if old else True),
            )
    else:
        errors.append(f"unknown amplifier scheme {scheme!r}; expected edfa or raman")

    quad = base.quad if base is not None else QuadratureSettings()
    include_beta3 = base.include_beta3 if base is not None else False
    qchanges = {}
    for key, val in run_in.items():
        if val is None:
            continue
        if key == "include_beta3":
            include_beta3 = val
        else:
            qchanges[key] = val
    quad = replace(quad, **qchanges)
    if errors:
        raise ConfigError(errors)

    cfg = SystemConfig(fiber, spans, grid, amp, include_beta3, quad)
    errs = config_errors(cfg)
    if errs:
        raise ConfigError(errs)
    return calibrate_raman(cfg)
