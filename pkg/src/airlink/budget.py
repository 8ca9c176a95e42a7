"""ASE noise, per-channel SNR and launch-power optimisation.

SNR = P / (P_n + P_ss + P_sn) with
  P_ss = N_s^(1+eps) eta P^3            (signal-signal NLI)
  P_sn = 3 xi eta P_n1 P^2              (signal-ASE NLI)
where P_n is the total ASE after N_s spans and P_n1 the ASE added per span.

EDC keeps only the signal-signal term (P_sn = 0), FF-NLC only the
signal-ASE term (P_ss = 0), ASE-only neither.  Both closed-form optima are
then exact stationary points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .gn import NliSpectrum, RamanProfile
from .numerics import NumericalError, golden_section_max
from .units import PLANCK, Edfa, Raman, SystemConfig, watt_to_dbm


class Mode(str, enum.Enum):
    EDC = "edc"
    FFNLC = "ffnlc"
    ASE_ONLY = "ase"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        key = text.strip().lower().replace("-", "").replace("_", "")
        aliases = {"edc": cls.EDC, "ffnlc": cls.FFNLC, "nlc": cls.FFNLC, "ase": cls.ASE_ONLY, "aseonly": cls.ASE_ONLY}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown mode {text!r}; expected edc, ffnlc or ase") from None


@dataclass(frozen=True)
class AseBudget:
    p_n_span: float  # W per channel, both polarisations, in R_s
    p_n_total: float  # W
    num_spans: int
    scheme: str

    def for_spans(self, num_spans: int) -> "AseBudget":
        return AseBudget(self.p_n_span, self.p_n_span * num_spans, num_spans, self.scheme)


@dataclass(frozen=True)
class SnrRecord:
    k: int
    f_offset: float  # Hz
    eta: float  # 1/W^2
    launch_power: float  # W per channel
    p_ss: float
    p_sn: float
    snr_edc: float
    snr_nlc: float
    snr_ase: float


def ase_span_edfa(cfg: SystemConfig) -> float:
    """ASE power per channel added by one lumped amplifier: F_n h nu (G - 1) R_s."""
    amp = cfg.amplifier
    if not isinstance(amp, Edfa):
        raise TypeError("ase_span_edfa needs an EDFA configuration")
    gain = math.exp(cfg.fiber.alpha * cfg.spans.span_length)
    return amp.noise_figure * PLANCK * cfg.grid.center_frequency * (gain - 1.0) * cfg.grid.symbol_rate


def ase_span_raman(cfg: SystemConfig, rtol: float = 1e-6) -> float:
    """Spontaneous Raman noise per span, referred to the span output after the
    (noiseless) lumped element that restores unit net gain.

    2 phi h nu R_s C_R int_0^L P_p(z) g(L)/g(z) dz, times 1/g(L).
    """
    amp = cfg.amplifier
    if not isinstance(amp, Raman):
        raise TypeError("ase_span_raman needs a Raman configuration")
    fb = cfg.fiber
    if fb.c_r == 0.0:
        return 0.0
    prof = RamanProfile(fb, amp.total_pump_power, cfg.spans.span_length)
    val, err = integrate.quad(lambda z: fb.c_r * prof.pump(z) / prof.g(z), 0.0, cfg.spans.span_length,
                              epsrel=rtol, epsabs=0.0, limit=200)
    if err > rtol * abs(val):
        raise NumericalError(f"Raman ASE integral: error {err:.3g} above rtol {rtol:g}")
    return 2.0 * amp.phonon_factor * PLANCK * cfg.grid.center_frequency * cfg.grid.symbol_rate * val


def ase_budget(cfg: SystemConfig) -> AseBudget:
    if isinstance(cfg.amplifier, Raman):
        p1 = ase_span_raman(cfg, cfg.quad.rho_rtol)
    else:
        p1 = ase_span_edfa(cfg)
    n = cfg.spans.num_spans
    return AseBudget(p1, n * p1, n, cfg.scheme)


def _snr(eta, power, spectrum: NliSpectrum, ase: AseBudget, mode: Mode):
    eta = np.asarray(eta, dtype=float)
    power = np.asarray(power, dtype=float)
    noise = ase.p_n_total
    if mode is Mode.ASE_ONLY:
        return power / noise + 0.0 * eta
    if mode is Mode.EDC:
        p_ss = spectrum.accumulation * eta * power**3
        return power / (noise + p_ss)
    p_sn = 3.0 * spectrum.xi * eta * ase.p_n_span * power**2
    return power / (noise + p_sn)


def snr_channel(k: int, power: float, spectrum: NliSpectrum, ase: AseBudget, mode: Mode) -> float:
    """Linear SNR of channel k at per-channel launch power ``power`` (W)."""
    if not power > 0:
        raise ValueError("launch power must be positive")
    return float(_snr(spectrum.eta_at(k), power, spectrum, ase, Mode(mode)))


def optimal_power_closed_form(k: int, spectrum: NliSpectrum, ase: AseBudget, mode: Mode) -> float:
    """Stationary point of the SNR of channel k.

    EDC:    (P_n / (2 N_s^(1+eps) eta))^(1/3)
    FF-NLC: (P_n / (3 xi eta P_n1))^(1/2)
    """
    mode = Mode(mode)
    eta = float(spectrum.eta_at(k))
    if eta <= 0:
        raise ValueError("closed-form optimum needs eta > 0")
    if mode is Mode.EDC:
        return (ase.p_n_total / (2.0 * spectrum.accumulation * eta)) ** (1.0 / 3.0)
    if mode is Mode.FFNLC:
        return math.sqrt(ase.p_n_total / (3.0 * spectrum.xi * eta * ase.p_n_span))
    raise ValueError("ASE-only SNR has no finite optimum")


def total_capacity(power: float, spectrum: NliSpectrum, ase: AseBudget, mode: Mode) -> float:
    """Sum over channels of log2(1 + SNR) at a uniform launch power (bit per symbol per pol.)."""
    return float(np.sum(np.log2(1.0 + _snr(spectrum.eta, power, spectrum, ase, mode))))


def optimize_uniform_power(spectrum: NliSpectrum, ase: AseBudget, mode: Mode, tol_db: float = 0.01) -> float:
    """Single per-channel launch power maximising the summed Gaussian capacity.

    Golden-section search in dBm over +-10 dB around the central-channel closed form.
    """
    mode = Mode(mode)
    seed = watt_to_dbm(optimal_power_closed_form(0, spectrum, ase, mode))
    p_dbm, _ = golden_section_max(
        lambda x: total_capacity(1e-3 * 10 ** (x / 10), spectrum, ase, mode),
        seed - 10.0, seed + 10.0, xtol=tol_db,
    )
    return 1e-3 * 10 ** (p_dbm / 10)


def snr_records(cfg: SystemConfig, spectrum: NliSpectrum, ase: AseBudget, power: float) -> list[SnrRecord]:
    """SNR of every channel in all three modes at one uniform launch power."""
    eta = spectrum.eta
    p_ss = spectrum.accumulation * eta * power**3
    p_sn = 3.0 * spectrum.xi * eta * ase.p_n_span * power**2
    edc = _snr(eta, power, spectrum, ase, Mode.EDC)
    nlc = _snr(eta, power, spectrum, ase, Mode.FFNLC)
    ase_only = _snr(eta, power, spectrum, ase, Mode.ASE_ONLY)
    return [
        SnrRecord(int(k), float(cfg.grid.offset(int(k))), float(eta[i]), float(power), float(p_ss[i]),
                  float(p_sn[i]), float(edc[i]), float(nlc[i]), float(ase_only[i]))
        for i, k in enumerate(spectrum.k)
    ]


def snr_spectrum(cfg: SystemConfig, spectrum: NliSpectrum, mode: Mode, ase: AseBudget | None = None) -> list[SnrRecord]:
    """Per-channel SNR records at the uniform launch power that is optimal for ``mode``."""
    ase = ase or ase_budget(cfg)
    mode = Mode(mode)
    opt_mode = Mode.FFNLC if mode is Mode.ASE_ONLY else mode
    power = optimize_uniform_power(spectrum, ase, opt_mode)
    return snr_records(cfg, spectrum, ase, power)
