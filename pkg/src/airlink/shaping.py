"""QAM constellations, Maxwell-Boltzmann shaping, mutual information and AIR totals.

Square QAM with a Maxwell-Boltzmann pmf is a product of two identical PAM
alphabets (exp(-lam |x|^2) factorises over the real and imaginary parts), and
circular complex AWGN is two independent real channels.  The symbol-wise MI
therefore equals twice the MI of the per-dimension PAM, and the tensor
Gauss-Hermite rule collapses exactly to a 1-D rule.  ``mi_gauss_hermite``
uses that route for product constellations and the full 2-D rule otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .budget import AseBudget, Mode, ase_budget, optimize_uniform_power, snr_records
from .gn import NliSpectrum
from .numerics import gauss_hermite, golden_section_max
from .units import SystemConfig

LN2 = math.log(2.0)
SUPPORTED_ORDERS = (4, 16, 64, 256, 1024)


@dataclass(frozen=True)
class ShapedConstellation:
    points: np.ndarray  # complex, unit average power under probs
    probs: np.ndarray
    order: int
    lam: float = 0.0
    # per-dimension PAM factors when the constellation is a product (square QAM)
    pam_levels: Optional[np.ndarray] = field(default=None, repr=False)
    pam_probs: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def energy(self) -> float:
        return float(np.sum(self.probs * np.abs(self.points) ** 2))

    @property
    def entropy(self) -> float:
        return entropy_bits(self.probs)


def entropy_bits(probs) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _raw_pam(side: int) -> np.ndarray:
    return np.arange(-(side - 1), side, 2, dtype=float)


def _build(order: int, lam: float) -> ShapedConstellation:
    side = int(round(math.sqrt(order)))
    raw = _raw_pam(side)
    logp = -lam * raw**2
    # floor far-tail masses (e^-350 per dimension, e^-700 per complex point)
    # so every probability stays positive
    logp = np.maximum(logp, -350.0)
    p1 = np.exp(logp - logsumexp(logp))
    p1 /= p1.sum()
    # unit average complex power: 2 * E[x_dim^2] = 1
    scale = 1.0 / math.sqrt(2.0 * float(np.sum(p1 * raw**2)))
    levels = raw * scale
    re, im = np.meshgrid(levels, levels, indexing="ij")
    pr, pi = np.meshgrid(p1, p1, indexing="ij")
    return ShapedConstellation(
        points=(re + 1j * im).ravel(),
        probs=(pr * pi).ravel(),
        order=order,
        lam=float(lam),
        pam_levels=levels,
        pam_probs=p1,
    )


def square_qam(order: int) -> ShapedConstellation:
    """Uniform square QAM on odd-integer coordinates, scaled to unit average power."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; choose from {SUPPORTED_ORDERS}")
    return _build(order, 0.0)


def apply_mb(c: ShapedConstellation, lam: float) -> ShapedConstellation:
    """Maxwell-Boltzmann pmf exp(-lam |x_raw|^2) on the unscaled grid, then renormalise power."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if c.pam_levels is None:
        raise ValueError("Maxwell-Boltzmann shaping needs a square QAM constellation")
    return _build(c.order, lam)


# ---------------------------------------------------------------- mutual information


def _mi_pam(levels: np.ndarray, probs: np.ndarray, sigma: float, order: int) -> float:
    """MI (bit) of a real PAM channel with noise std sigma/sqrt(2), 1-D Gauss-Hermite."""
    t, w = gauss_hermite(order)
    logp = np.log(probs)
    # y = x_i + sigma t ; exponent -(y - x_m)^2 / sigma^2
    d = (levels[:, None, None] - levels[None, None, :]) / sigma + t[None, :, None]  # (i, a, m)
    lse = logsumexp(logp[None, None, :] - d**2, axis=2)
    inner = -t[None, :] ** 2 - lse  # log q(y|x_i) - log sum_m p_m q(y|x_m)
    return float(np.sum(probs[:, None] * w[None, :] * inner) / math.sqrt(math.pi) / LN2)


def mi_gauss_hermite_full(c: ShapedConstellation, snr: float, order: int = 32, chunk: int = 64) -> float:
    """Complex 2-D Gauss-Hermite MI (bit per complex symbol) for an arbitrary constellation."""
    sigma = math.sqrt(1.0 / snr)
    t, w = gauss_hermite(order)
    ta, tb = np.meshgrid(t, t, indexing="ij")
    noise = (ta + 1j * tb).ravel()  # n / sigma
    ww = np.outer(w, w).ravel() / math.pi
    logp = np.log(c.probs)
    pts = c.points / sigma
    total = 0.0
    for i0 in range(0, len(pts), chunk):
        xi = pts[i0:i0 + chunk]
        diff = xi[:, None, None] + noise[None, :, None] - pts[None, None, :]
        lse = logsumexp(logp[None, None, :] - (diff.real**2 + diff.imag**2), axis=2)
        inner = -np.abs(noise) ** 2 - lse
        total += float(np.sum(c.probs[i0:i0 + chunk, None] * ww[None, :] * inner))
    return total / LN2


def mi_gauss_hermite(c: ShapedConstellation, snr: float, order: int = 32) -> float:
    """Symbol-wise MI (bit per complex symbol, one polarisation) over complex AWGN.

    Noise variance per complex symbol is 1/snr (unit-power constellation).
    """
    if not snr > 0:
        raise ValueError("snr must be positive")
    if order < 8:
        raise ValueError("Gauss-Hermite order must be >= 8")
    if c.pam_levels is not None:
        mi = 2.0 * _mi_pam(c.pam_levels, c.pam_probs, math.sqrt(1.0 / snr), order)
    else:
        mi = mi_gauss_hermite_full(c, snr, order)
    return min(max(mi, 0.0), math.log2(c.order))


def mi_monte_carlo(c: ShapedConstellation, snr: float, n_samples: int = 1_000_000, seed: int = 0,
                   chunk: int = 1 << 16) -> tuple[float, float]:
    """Monte-Carlo estimate of the same MI; returns (bit, standard error).

    Uses the full complex likelihoods (no product shortcut), so it is an
    independent check on the quadrature.
    """
    if n_samples < 100_000:
        raise ValueError("n_samples must be >= 1e5")
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(1.0 / snr)
    logp = np.log(c.probs)
    pts = c.points / sigma
    s1 = s2 = 0.0
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        idx = rng.choice(len(pts), size=n, p=c.probs)
        z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)  # n / sigma
        diff = pts[idx, None] + z[:, None] - pts[None, :]
        lse = logsumexp(logp[None, :] - (diff.real**2 + diff.imag**2), axis=1)
        vals = (-np.abs(z) ** 2 - lse) / LN2
        s1 += float(np.sum(vals))
        s2 += float(np.sum(vals**2))
        done += n
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean**2, 0.0)
    return mean, math.sqrt(var / n_samples)


def gaussian_capacity(snr):
    """log2(1 + snr), bit per complex symbol."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise ValueError("snr must be non-negative")
    out = np.log2(1.0 + snr)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def lambda_upper(order: int, entropy_drop: float = 4.0) -> float:
    """Smallest power-of-two multiple of a base lambda whose MB entropy is below log2 M - drop.

    MB entropy never falls below 2 bit (the four innermost points), so the
    target is floored at 2.5 bit for small alphabets.
    """
    target = max(math.log2(order) - entropy_drop, 2.5)
    lam = 1.0 / (math.sqrt(order) - 1.0) ** 2
    while entropy_bits(_build(order, lam).probs) >= target:
        lam *= 2.0
    return lam


def optimize_lambda(order: int, snr: float, gh_order: int = 32) -> tuple[float, float]:
    """MB parameter maximising the GH mutual information at ``snr``; returns (lam*, MI*)."""
    if not snr > 0:
        raise ValueError("snr must be positive")
    hi = lambda_upper(order)
    lam, mi = golden_section_max(lambda x: mi_gauss_hermite(_build(order, x), snr, gh_order),
                                 0.0, hi, xtol=1e-4 * hi)
    mi0 = mi_gauss_hermite(_build(order, 0.0), snr, gh_order)
    if mi0 >= mi:
        return 0.0, mi0
    return lam, mi


def shaping_gain_db(order: int, snr: float, gh_order: int = 32) -> float:
    """SNR-equivalent gain of optimised MB shaping over uniform QAM at ``snr``.

    The uniform constellation's MI is inverted (bracketed root find in dB) to
    the SNR at which it matches the shaped MI; the gain is that SNR over ``snr``.
    """
    from scipy.optimize import brentq

    _, shaped = optimize_lambda(order, snr, gh_order)
    uniform = _build(order, 0.0)
    snr_db = 10.0 * math.log10(snr)
    if shaped >= math.log2(order) - 1e-12:
        raise ValueError("shaped MI is saturated; no equivalent uniform SNR")

    def excess(x_db):
        return mi_gauss_hermite(uniform, 10.0 ** (x_db / 10.0), gh_order) - shaped

    if excess(snr_db) >= 0.0:
        return 0.0
    hi = snr_db + 0.5
    while excess(hi) < 0.0:
        hi += 0.5
    return brentq(excess, snr_db, hi, xtol=1e-6) - snr_db


# ---------------------------------------------------------------- AIR aggregation


@dataclass(frozen=True)
class MiResult:
    k: int
    mi_per_pol: float
    snr_used: float
    gh_order: int
    lam: float = 0.0

    @property
    def mi_dp(self) -> float:
        return 2.0 * self.mi_per_pol


@dataclass
class AirEntry:
    mode: Mode
    order: int
    shaping: str
    launch_power: float
    channels: list
    air_total: float  # bit/s


@dataclass
class AirReport:
    entries: dict  # (mode, order, shaping) -> AirEntry
    limit_signal_ase: float  # bit/s
    limit_ase_only: float  # bit/s
    powers: dict  # mode -> uniform launch power (W)
    metadata: dict = field(default_factory=dict)

    def air(self, mode, order: int, shaping: str = "uniform") -> float:
        return self.entries[(Mode(mode), order, shaping)].air_total


def per_channel_mi(snrs: Sequence[float], ks: Sequence[int], order: int, shaping: str, gh_order: int) -> list[MiResult]:
    """MI for each channel; identical SNR values (mirrored channels) are computed once."""
    memo: dict[float, tuple[float, float]] = {}
    out = []
    for k, s in zip(ks, snrs):
        s = float(s)
        if s not in memo:
            if shaping == "mb":
                lam, mi = optimize_lambda(order, s, gh_order)
            else:
                lam, mi = 0.0, mi_gauss_hermite(_build(order, 0.0), s, gh_order)
            memo[s] = (lam, mi)
        lam, mi = memo[s]
        out.append(MiResult(int(k), mi, s, gh_order, lam))
    return out


def air_report(cfg: SystemConfig, spectrum: NliSpectrum, modes: Iterable = (Mode.EDC, Mode.FFNLC),
               formats: Iterable[int] = (1024,), shapings: Iterable[str] = ("uniform", "mb"),
               ase: Optional[AseBudget] = None) -> AirReport:
    """Per-channel MI and total AIR = sum_k 2 R_s MI_k for each (mode, format, shaping).

    Each mode uses its own capacity-optimal uniform launch power.  Both limits
    are evaluated at the FF-NLC optimum power.
    """
    ase = ase or ase_budget(cfg)
    rs = cfg.grid.symbol_rate
    gh = cfg.quad.gh_order
    modes = [Mode(m) for m in modes]
    shapings = list(shapings)
    for s in shapings:
        if s not in ("uniform", "mb"):
            raise ValueError(f"unknown shaping {s!r}")
    powers = {}
    records = {}
    for m in {Mode.FFNLC, *[m for m in modes if m is not Mode.ASE_ONLY]}:
        powers[m] = optimize_uniform_power(spectrum, ase, m)
        records[m] = snr_records(cfg, spectrum, ase, powers[m])
    nlc = records[Mode.FFNLC]
    limit_sa = float(sum(2.0 * rs * math.log2(1.0 + r.snr_nlc) for r in nlc))
    limit_ase = float(sum(2.0 * rs * math.log2(1.0 + r.snr_ase) for r in nlc))
    entries = {}
    for m in modes:
        if m is Mode.ASE_ONLY:
            continue
        recs = records[m]
        snrs = [r.snr_edc if m is Mode.EDC else r.snr_nlc for r in recs]
        ks = [r.k for r in recs]
        for order in formats:
            for s in shapings:
                chans = per_channel_mi(snrs, ks, int(order), s, gh)
                total = float(sum(2.0 * rs * c.mi_per_pol for c in chans))
                entries[(m, int(order), s)] = AirEntry(m, int(order), s, powers[m], chans, total)
    meta = {
        "epsilon": spectrum.epsilon,
        "xi": spectrum.xi,
        "num_spans": spectrum.num_spans,
        "gh_order": gh,
        "limit_power_mode": "ffnlc",
    }
    return AirReport(entries, limit_sa, limit_ase, {m.value: p for m, p in powers.items()}, meta)
