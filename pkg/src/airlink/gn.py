"""First-order perturbation (GN-type) nonlinear interference coefficients.

The single-span NLI power spectral density is a double integral over the two
pump frequencies.  With the dispersion-slope term switched off the integrand
depends on (f1, f2) only through the product u = (f1 - f)(f2 - f), so the
double integral collapses exactly to a one-dimensional integral against the
length density m_f(u) of the level curves {u = const} inside the integration
domain.  That density has a closed form (see ``hyperbolic_density``), which
turns every PSD evaluation into a cheap 1-D quadrature.

Beyond a cut-off phase mismatch the span field response splits into two
slowly varying endpoint terms times e^{j kappa L}; there the rapidly
oscillating fringes are replaced by their exact period average.  Below the
cut-off the integrand is resolved panel by panel.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline, PchipInterpolator

from .numerics import NumericalError, cap_widths, gauss_legendre, graded_edges, panel_nodes
from .units import FiberParams, Raman, SystemConfig

SPECTRUM_FORMAT_VERSION = 1

# kappa_cut = CUTOFF_FACTOR * (fastest decay/growth rate of the span power profile)
CUTOFF_FACTOR = 60.0
ENDPOINT_TERMS = 8
TABLE_POINTS_PER_PERIOD = 32


# ---------------------------------------------------------------- phase mismatch and span response


def kappa(f1, f2, f, fiber: FiberParams, include_beta3: bool = False):
    """Phase mismatch 4 pi^2 (f1-f)(f2-f)[beta2 + pi beta3 (f1+f2)] in rad/m."""
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    disp = fiber.beta2
    if include_beta3:
        disp = disp + math.pi * fiber.beta3 * (f1 + f2)
    return 4 * math.pi**2 * ((f1 - f) * (f2 - f)) * disp


def rho_edfa(kappa, alpha: float, span_length: float):
    """FWM efficiency |(1 - e^{-aL} e^{j k L}) / (a - j k)|^2 of a passive span, in m^2."""
    k = np.asarray(kappa, dtype=float)
    decay = math.exp(-alpha * span_length)
    # |1 - d e^{jkL}|^2 = 1 + d^2 - 2 d cos(kL)
    num = 1.0 + decay**2 - 2.0 * decay * np.cos(k * span_length)
    return num / (alpha**2 + k**2)


class RamanProfile:
    """Normalised signal power profile g(z) of a backward-pumped span, g(0) = 1."""

    def __init__(self, fiber: FiberParams, pump_power: float, span_length: float):
        self.alpha = fiber.alpha
        self.alpha_p = fiber.alpha_p
        self.span_length = span_length
        self.pump_power = pump_power
        self.c_r = fiber.c_r
        self.strength = fiber.c_r * pump_power / fiber.alpha_p  # C_R P_p0 / alpha_p

    def pump(self, z):
        return self.pump_power * np.exp(-self.alpha_p * (self.span_length - np.asarray(z, dtype=float)))

    def log_g(self, z):
        z = np.asarray(z, dtype=float)
        L, ap = self.span_length, self.alpha_p
        return -self.alpha * z + self.strength * (np.exp(-ap * (L - z)) - math.exp(-ap * L))

    def g(self, z):
        return np.exp(self.log_g(z))

    @property
    def end_gain(self) -> float:
        """Net span power gain g(L); 1 for a transparent span."""
        return float(self.g(self.span_length))

    @property
    def rate_scale(self) -> float:
        """Upper bound on the exponential rates appearing in g and its derivatives."""
        return self.alpha + self.c_r * self.pump_power + self.alpha_p

    def derivatives(self, z0: float, count: int) -> np.ndarray:
        """g(z0), g'(z0), ..., g^{(count-1)}(z0) via the exp-of-series recurrence."""
        L, ap = self.span_length, self.alpha_p
        pump_term = self.strength * math.exp(-ap * (L - z0))
        h = np.zeros(count)
        if count > 1:
            h[1] = -self.alpha + pump_term * ap
        for n in range(2, count):
            h[n] = pump_term * ap**n / math.factorial(n)
        e = np.zeros(count)
        e[0] = 1.0
        for n in range(1, count):
            e[n] = sum(k * h[k] * e[n - k] for k in range(1, n + 1)) / n
        fact = np.array([math.factorial(n) for n in range(count)], dtype=float)
        return float(self.g(z0)) * e * fact


def rho_raman(kappa: float, fiber: FiberParams, pump_power: float, span_length: float,
              rtol: float = 1e-6) -> float:
    """FWM efficiency |int_0^L g(z) e^{j kappa z} dz|^2 of a backward-pumped Raman span (m^2).

    Direct adaptive quadrature (QUADPACK QAWO for the oscillatory weight).
    Raises NumericalError if the requested relative tolerance is not met.
    """
    prof = RamanProfile(fiber, pump_power, span_length)
    return _raman_field_direct(abs(float(kappa)), prof, rtol)[0]


def _raman_field_direct(k: float, prof: RamanProfile, rtol: float):
    L = prof.span_length
    g = prof.g
    if k == 0.0:
        re, err = integrate.quad(g, 0.0, L, epsrel=rtol, epsabs=0.0, limit=200)
        im, err_im = 0.0, 0.0
    else:
        re, err = integrate.quad(g, 0.0, L, weight="cos", wvar=k, epsrel=rtol, epsabs=0.0, limit=400)
        im, err_im = integrate.quad(g, 0.0, L, weight="sin", wvar=k, epsrel=rtol, epsabs=0.0, limit=400)
    mag = math.hypot(re, im)
    achieved = math.hypot(err, err_im)
    # absolute floor: the field can pass through (near) zero between fringes
    floor = 1e-12 * L
    if achieved > max(rtol * mag, floor):
        raise NumericalError(
            f"Raman span integral at kappa={k:.6g} rad/m: error estimate {achieved:.3g} "
            f"exceeds tolerance {rtol:g} (|F|={mag:.6g})"
        )
    return mag**2, complex(re, im), achieved


# ---------------------------------------------------------------- kernel


@dataclass
class KappaKernel:
    """Span field response F(kappa) = int_0^L g(z) e^{j kappa z} dz as a fast accessor.

    EDFA spans use the closed form everywhere.  Raman spans use a cubic-spline
    table for |kappa| <= kappa_cut and the endpoint (integration by parts)
    expansion above it.  rho(kappa) = |F(kappa)|^2.
    """

    scheme: str
    alpha: float
    span_length: float
    kappa_cut: float
    kappa_max: float
    end_gain: float = 1.0
    endpoint_derivs: tuple = ()  # (g^(n)(0), g^(n)(L)) arrays for Raman
    spline: Optional[CubicSpline] = None
    table_error: float = 0.0

    def endpoint_terms(self, k):
        """(P_L, P_0) with F = e^{j k L} P_L - P_0, valid for |k| >= kappa_cut."""
        k = np.asarray(k, dtype=float)
        if self.scheme == "edfa":
            denom = self.alpha - 1j * k
            return -math.exp(-self.alpha * self.span_length) / denom, -1.0 / denom
        d0, dL = self.endpoint_derivs
        inv = 1.0 / (1j * k)
        p0 = np.zeros(k.shape, dtype=complex)
        pL = np.zeros(k.shape, dtype=complex)
        power = inv.copy()
        for n in range(len(d0)):
            sign = -1.0 if n % 2 else 1.0
            p0 += sign * d0[n] * power
            pL += sign * dL[n] * power
            power = power * inv
        return pL, p0

    def field(self, k):
        k = np.asarray(k, dtype=float)
        if self.scheme == "edfa":
            L = self.span_length
            return (1.0 - math.exp(-self.alpha * L) * np.exp(1j * k * L)) / (self.alpha - 1j * k)
        ak = np.abs(k)
        out = np.empty(ak.shape, dtype=complex)
        low = ak <= self.kappa_cut
        if np.any(low):
            out[low] = self.spline(ak[low])
        high = ~low
        if np.any(high):
            pL, p0 = self.endpoint_terms(ak[high])
            out[high] = np.exp(1j * ak[high] * self.span_length) * pL - p0
        # g is real, so F(-k) = conj F(k)
        return np.where(k < 0, np.conj(out), out)

    def rho(self, k):
        if self.scheme == "edfa":
            return rho_edfa(k, self.alpha, self.span_length)
        F = self.field(k)
        return F.real**2 + F.imag**2

    def averaged(self, k, n_spans: int):
        """Fringe-averaged rho * chi for |k| >= kappa_cut.

        Averaging |e^{jkL}P_L - P_0|^2 against the Fejer kernel of order N over
        one period of kL leaves N(|P_L|^2 + |P_0|^2) - 2(N-1) Re(P_L conj(P_0)).
        """
        pL, p0 = self.endpoint_terms(np.abs(k))
        mags = (pL.real**2 + pL.imag**2) + (p0.real**2 + p0.imag**2)
        cross = (pL * np.conj(p0)).real
        return n_spans * mags - 2.0 * (n_spans - 1) * cross


def max_kappa(cfg: SystemConfig) -> float:
    """Largest |kappa| over the integration domain (corner f1 = -f2 = B/2, f = -+B/2)."""
    B = cfg.grid.total_bandwidth
    vals = [abs(float(kappa(B / 2, -B / 2, s * B / 2, cfg.fiber, cfg.include_beta3))) for s in (-1, 1)]
    vals += [abs(float(kappa(-B / 2, -B / 2, B / 2, cfg.fiber, cfg.include_beta3))),
             abs(float(kappa(B / 2, B / 2, -B / 2, cfg.fiber, cfg.include_beta3)))]
    return max(vals)


def _raman_table(prof: RamanProfile, kappa_cut: float, span_length: float):
    period = 2 * math.pi / span_length
    n_pts = int(math.ceil(kappa_cut / period * TABLE_POINTS_PER_PERIOD)) + 1
    grid = np.linspace(0.0, kappa_cut, n_pts)
    # composite Gauss-Legendre in z: each panel spans at most half an oscillation
    n_panels = int(math.ceil(kappa_cut * span_length / math.pi)) + 8
    z, w = panel_nodes(np.linspace(0.0, span_length, n_panels + 1), 12)
    gw = prof.g(z) * w
    out = np.empty(n_pts, dtype=complex)
    block = 256
    for i in range(0, n_pts, block):
        kk = grid[i:i + block, None]
        out[i:i + block] = np.exp(1j * kk * z[None, :]) @ gw
    return CubicSpline(grid, out)


def build_kappa_kernel(cfg: SystemConfig, probes: int = 64, seed: int = 0) -> KappaKernel:
    """Prepare the span response accessor for ``cfg``.

    For Raman spans the table is checked against direct adaptive quadrature at
    ``probes`` random phase mismatches; any relative error above 1e-3 is a hard
    error naming the worst probe.
    """
    fb, L = cfg.fiber, cfg.spans.span_length
    kmax = max_kappa(cfg)
    if not isinstance(cfg.amplifier, Raman):
        return KappaKernel("edfa", fb.alpha, L, kappa_cut=CUTOFF_FACTOR * fb.alpha, kappa_max=kmax,
                           end_gain=math.exp(-fb.alpha * L))
    prof = RamanProfile(fb, cfg.amplifier.total_pump_power, L)
    cut = CUTOFF_FACTOR * prof.rate_scale
    derivs = (prof.derivatives(0.0, ENDPOINT_TERMS), prof.derivatives(L, ENDPOINT_TERMS))
    kern = KappaKernel("raman", fb.alpha, L, kappa_cut=cut, kappa_max=kmax, end_gain=prof.end_gain,
                       endpoint_derivs=derivs, spline=_raman_table(prof, cut, L))
    rng = np.random.default_rng(seed)
    hi = max(kmax, 2 * cut)
    lo = 1e-3 * 2 * math.pi / L
    ks = np.concatenate(([0.0], np.exp(rng.uniform(math.log(lo), math.log(hi), probes - 1))))
    direct = np.array([_raman_field_direct(k, prof, cfg.quad.rho_rtol)[0] for k in ks])
    approx = kern.rho(ks)
    # relative to the local fringe envelope so fringe zeros do not blow up the ratio
    envelope = np.maximum(direct, kern.rho(0.0) / (1.0 + (ks / prof.rate_scale) ** 2) * 1e-2)
    rel = np.abs(approx - direct) / envelope
    worst = int(np.argmax(rel))
    if rel[worst] > 1e-3:
        raise NumericalError(
            f"kappa table accuracy check failed at kappa={ks[worst]:.6g} rad/m: "
            f"relative error {rel[worst]:.3g} > 1e-3"
        )
    kern.table_error = float(rel[worst])
    return kern


# ---------------------------------------------------------------- phased-array factor


def chi_theta(theta, n_spans: int):
    """sin^2(N theta) / sin^2(theta) with the analytic limit N^2 at theta = m pi."""
    theta = np.asarray(theta, dtype=float)
    # reduce to [-pi/2, pi/2): chi has period pi
    t = theta - math.pi * np.round(theta / math.pi)
    small = np.abs(t) < 1e-9
    s = np.sin(np.where(small, 1.0, t))
    val = np.sin(n_spans * t) ** 2 / s**2
    series = n_spans**2 * (1.0 - (n_spans**2 - 1) * t**2 / 3.0)
    return np.where(small, series, val)


def phased_array_chi(f1, f2, f, cfg: SystemConfig):
    """Multi-span interference factor for N_s identical spans."""
    k = kappa(f1, f2, f, cfg.fiber, cfg.include_beta3)
    return chi_theta(0.5 * k * cfg.spans.span_length, cfg.spans.num_spans)


# ---------------------------------------------------------------- hyperbolic reduction


def hyperbolic_density(u, f: float, bandwidth: float):
    """Density m_f(u) = d/du area{(x, y) in D_f : x y <= u}, x = f1 - f, y = f2 - f.

    D_f = {|f + x| <= B/2, |f + y| <= B/2, |f + x + y| <= B/2}.  Along the
    branch x > 0 of x y = u the allowed x form a single interval, giving
      u < 0:  2 ln(a b / |u|)               for |u| <= a b
      u > 0:  h(u, a) + h(u, b),  h = 2 atanh(sqrt(1 - 4u/a^2)) for u <= a^2/4
    with a = B/2 - f, b = B/2 + f.
    """
    u = np.asarray(u, dtype=float)
    a = 0.5 * bandwidth - f
    b = 0.5 * bandwidth + f
    out = np.zeros(u.shape)
    neg = (u < 0) & (-u < a * b)
    out[neg] = 2.0 * np.log(a * b / -u[neg])
    pos = u > 0
    for c in (a, b):
        sel = pos & (u < 0.25 * c * c)
        q = 4.0 * u[sel] / (c * c)
        s = np.sqrt(1.0 - q)
        # 2 atanh(s) = ln((1+s)/(1-s)) with 1-s = q/(1+s), stable as u -> 0
        out[sel] += np.log((1.0 + s) ** 2 / q)
    return out


def _side_breakpoints(sign: int, f: float, bandwidth: float, t_cut: float):
    a = 0.5 * bandwidth - f
    b = 0.5 * bandwidth + f
    if sign < 0:
        top = a * b
        pts = {0.0, top}
    else:
        top = 0.25 * max(a, b) ** 2
        pts = {0.0, 0.25 * a * a, 0.25 * b * b}
    if t_cut < top:
        pts.add(t_cut)
    return np.array(sorted(p for p in pts if 0.0 <= p <= top)), top


def _psd_integral_1d(f: float, kern: KappaKernel, cfg: SystemConfig, n_spans: int, refine: int = 0):
    """int m_f(u) rho chi du over both signs of u; returns (value, error estimate)."""
    B = cfg.grid.total_bandwidth
    L = cfg.spans.span_length
    scale = 4 * math.pi**2 * abs(cfg.fiber.beta2)  # kappa = scale * |u|
    k_cut = kern.kappa_cut * 2**refine
    t_cut = k_cut / scale
    # panel width in |u|: half a period of cos(N kappa L)
    w_osc = math.pi / (scale * n_spans * L) / 2**refine
    hi_order = cfg.quad.panel_order
    lo_order = max(4, hi_order - 4)
    total_hi = total_lo = 0.0
    tail_err = 0.0
    for sign in (-1, 1):
        pts, top = _side_breakpoints(sign, f, B, t_cut)
        edges = []
        for p, q in zip(pts[:-1], pts[1:]):
            e = graded_edges(p, q, levels=44 + 4 * refine)
            if q <= t_cut * (1 + 1e-12):
                e = cap_widths(e, w_osc)
            else:
                # envelope varies on the scale of |u| itself
                e = cap_widths(e, max(q - p, 0.0) / (8 * 2**refine))
            edges.append(e if not edges else e[1:])
        edges = np.concatenate(edges)
        for order in (hi_order, lo_order):
            t, w = panel_nodes(edges, order)
            m = hyperbolic_density(sign * t, f, B)
            k = scale * t
            vals = np.empty_like(t)
            low = t <= t_cut
            if np.any(low):
                r = kern.rho(k[low])
                if n_spans > 1:
                    r = r * chi_theta(0.5 * k[low] * L, n_spans)
                vals[low] = r
            if np.any(~low):
                vals[~low] = kern.averaged(k[~low], n_spans)
            s = float(np.dot(w, m * vals))
            if order == hi_order:
                total_hi += s
            else:
                total_lo += s
        if t_cut < top:
            # dropped fringe terms cos(m kappa L), m = 1..N-1, with amplitude ~2(N-m)/N of the
            # averaged envelope, integrate to at most envelope * sum_m 2/(m w): ~2(ln N + 1)/w
            env = float(hyperbolic_density(np.array([sign * t_cut]), f, B)[0]
                        * kern.averaged(np.array([k_cut]), n_spans)[0])
            tail_err += abs(env) * 2.0 * (math.log(n_spans) + 1.0) / (scale * L)
    return total_hi, abs(total_hi - total_lo) + tail_err


def _psd_integral_2d(f: float, kern: KappaKernel, cfg: SystemConfig, n_spans: int, panels: int):
    """Tensor Gauss-Legendre over the clipped diamond; used when beta3 is enabled."""
    B = cfg.grid.total_bandwidth
    L = cfg.spans.span_length
    order = 8
    f2, w2 = panel_nodes(np.linspace(-B / 2, B / 2, panels + 1), order)
    x, wx = gauss_legendre(order)
    total = 0.0
    for y, wy in zip(f2, w2):
        lo = max(-B / 2, f - y - B / 2)
        hi = min(B / 2, f - y + B / 2)
        if hi <= lo:
            continue
        f1, w1 = panel_nodes(np.linspace(lo, hi, panels + 1), order)
        k = kappa(f1, y, f, cfg.fiber, cfg.include_beta3)
        r = kern.rho(k)
        if n_spans > 1:
            r = r * chi_theta(0.5 * k * L, n_spans)
        total += wy * float(np.dot(w1, r))
    return total


def psd_integral(f: float, kern: KappaKernel, cfg: SystemConfig, n_spans: int = 1):
    """Unscaled double integral of rho (times chi for n_spans > 1); returns (value, error).

    Refines deterministically up to three times if the error estimate exceeds
    the configured PSD tolerance.
    """
    rtol = cfg.quad.psd_rtol
    if cfg.include_beta3:
        panels = 48
        coarse = _psd_integral_2d(f, kern, cfg, n_spans, panels)
        fine = _psd_integral_2d(f, kern, cfg, n_spans, 2 * panels)
        err = abs(fine - coarse)
        if err > rtol * abs(fine):
            raise NumericalError(
                f"PSD at f={f:.6g} Hz (beta3 path): error {err / abs(fine):.3g} exceeds rtol {rtol:g}")
        return fine, err
    for refine in range(4):
        val, err = _psd_integral_1d(f, kern, cfg, n_spans, refine)
        if err <= rtol * abs(val):
            return val, err
    raise NumericalError(
        f"PSD at f={f:.6g} Hz: relative error {err / abs(val):.3g} exceeds rtol {rtol:g} after refinement")


def _psd_prefactor(cfg: SystemConfig) -> float:
    return 16.0 * cfg.fiber.gamma**2 / (27.0 * cfg.grid.symbol_rate**2)


def nli_psd(f: float, kern: KappaKernel, cfg: SystemConfig, n_spans: int = 1) -> float:
    """Single-span (chi = 1) NLI spectral density at offset f, normalised so that
    eta = (1/R_s) * int_channel S df is in 1/W^2."""
    B = cfg.grid.total_bandwidth
    if abs(f) > B / 2:
        raise ValueError(f"|f| = {abs(f):g} Hz lies outside the band B/2 = {B / 2:g} Hz")
    return _psd_prefactor(cfg) * psd_integral(f, kern, cfg, n_spans)[0]


def eta_channel_with_error(k: int, kern: KappaKernel, cfg: SystemConfig, n_spans: int = 1):
    grid = cfg.grid
    if not -grid.k_max <= k <= grid.k_max:
        raise ValueError(f"channel {k} outside grid +-{grid.k_max}")
    x, w = gauss_legendre(cfg.quad.channel_order)
    centre = grid.offset(k)
    half = 0.5 * grid.symbol_rate
    total = err = 0.0
    for xi, wi in zip(x, w):
        try:
            v, e = psd_integral(centre + half * xi, kern, cfg, n_spans)
        except NumericalError as exc:
            raise NumericalError(f"channel {k}: {exc}") from exc
        total += wi * half * v
        err += wi * half * e
    scale = _psd_prefactor(cfg) / grid.symbol_rate
    return scale * total, scale * err


def eta_channel(k: int, kern: KappaKernel, cfg: SystemConfig, n_spans: int = 1) -> float:
    """Single-span NLI coefficient of channel k (1/W^2), averaged over the channel band."""
    return eta_channel_with_error(k, kern, cfg, n_spans)[0]


# ---------------------------------------------------------------- accumulation


def xi_factor(num_spans: int, epsilon: float) -> float:
    """Signal-ASE accumulation sum over k = 1..N_s of k^(1 + epsilon)."""
    if num_spans < 1 or epsilon < 0:
        raise ValueError("need num_spans >= 1 and epsilon >= 0")
    k = np.arange(1, num_spans + 1, dtype=float)
    return float(np.sum(k ** (1.0 + epsilon)))


@dataclass(frozen=True)
class EpsilonFit:
    epsilon: float
    spans: tuple
    etas: tuple
    residual: float
    clamped: bool
    warning: str = ""


def epsilon_fit(cfg: SystemConfig, kern: Optional[KappaKernel] = None, residual_warn: float = 0.02) -> EpsilonFit:
    """Fit the coherence factor from multi-span central-channel coefficients.

    log(eta_N / eta_1) = (1 + eps) log N, least squares through the origin,
    for N in {1, 2, 4, N_s}.  eps is clamped to [0, 0.5].
    """
    ns = cfg.spans.num_spans
    if ns < 2:
        raise ValueError("coherence factor needs num_spans >= 2")
    kern = kern or build_kappa_kernel(cfg)
    spans = tuple(sorted({1, 2, 4, ns} & set(range(1, ns + 1))))
    etas = tuple(eta_channel(0, kern, cfg, n) for n in spans)
    logn = np.log(np.array(spans[1:], dtype=float))
    logr = np.log(np.array(etas[1:]) / etas[0])
    slope = float(np.dot(logn, logr) / np.dot(logn, logn))
    resid = float(np.sqrt(np.mean((logr - slope * logn) ** 2)))
    eps = slope - 1.0
    clamped = not 0.0 <= eps <= 0.5
    eps_c = min(max(eps, 0.0), 0.5)
    warning = ""
    if resid > residual_warn:
        warning = f"epsilon fit residual {resid:.3g} (log units) above {residual_warn}"
    if clamped:
        warning = (warning + "; " if warning else "") + f"epsilon {eps:.4g} clamped to {eps_c:.4g}"
    return EpsilonFit(eps_c, spans, etas, resid, clamped, warning)


def fit_epsilon(cfg: SystemConfig, kern: Optional[KappaKernel] = None) -> float:
    return epsilon_fit(cfg, kern).epsilon


# ---------------------------------------------------------------- spectrum


@dataclass
class NliSpectrum:
    """Per-channel single-span NLI coefficients plus multi-span accumulation factors."""

    k: np.ndarray
    eta: np.ndarray  # 1/W^2, single span
    epsilon: float
    xi: float
    num_spans: int
    metadata: dict = field(default_factory=dict)

    def eta_at(self, k):
        kmax = (len(self.k) - 1) // 2
        return self.eta[np.asarray(k) + kmax]

    @property
    def eta_central(self) -> float:
        return float(self.eta_at(0))

    @property
    def accumulation(self) -> float:
        """N_s^(1 + epsilon): signal-signal NLI growth over the link."""
        return float(self.num_spans ** (1.0 + self.epsilon))

    def with_accumulation(self, num_spans: int, epsilon: float, **meta) -> "NliSpectrum":
        md = dict(self.metadata)
        md.update(meta)
        return NliSpectrum(self.k.copy(), self.eta.copy(), epsilon, xi_factor(num_spans, epsilon), num_spans, md)

    def to_json(self) -> str:
        doc = {
            "format_version": SPECTRUM_FORMAT_VERSION,
            "k": [int(v) for v in self.k],
            "eta": [float(v).hex() for v in self.eta],
            "epsilon": float(self.epsilon).hex(),
            "xi": float(self.xi).hex(),
            "num_spans": int(self.num_spans),
            "metadata": self.metadata,
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NliSpectrum":
        doc = json.loads(text)
        if doc.get("format_version") != SPECTRUM_FORMAT_VERSION:
            raise ValueError(f"unsupported spectrum format {doc.get('format_version')!r}")
        return cls(
            k=np.array(doc["k"], dtype=np.int64),
            eta=np.array([float.fromhex(v) for v in doc["eta"]]),
            epsilon=float.fromhex(doc["epsilon"]),
            xi=float.fromhex(doc["xi"]),
            num_spans=int(doc["num_spans"]),
            metadata=doc["metadata"],
        )


def sample_indices(k_max: int, count: int) -> np.ndarray:
    """Non-negative channel indices for a symmetric sample set of size ~count, denser at the band edge."""
    m = max(2, (count + 1) // 2)
    j = np.arange(m)
    ks = np.round(k_max * np.sin(0.5 * math.pi * j / (m - 1))).astype(np.int64)
    return np.unique(ks)


def _map_channels(func, ks, threads: int):
    if threads <= 1:
        return [func(int(k)) for k in ks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda k: func(int(k)), ks))


def eta_spectrum(cfg: SystemConfig, sampling: Optional[int] = None, kern: Optional[KappaKernel] = None,
                 fit_accumulation: bool = True) -> NliSpectrum:
    """NLI coefficients for every channel of ``cfg``.

    ``sampling=None`` follows the config (full for N_ch <= 101 or when
    ``quad.full_spectrum`` is set, otherwise ``quad.sample_count`` samples);
    ``sampling=0`` forces full evaluation; ``sampling=n`` evaluates n symmetric
    indices and fills the rest by monotone cubic interpolation of log eta.
    """
    kern = kern or build_kappa_kernel(cfg)
    grid = cfg.grid
    kmax = grid.k_max
    if sampling is None:
        full = cfg.quad.full_spectrum or grid.num_channels <= 101
        sampling = 0 if full else cfg.quad.sample_count
    elif sampling and sampling < 9:
        raise ValueError("sampled spectra need at least 9 sample indices")
    symmetric = not cfg.include_beta3
    if sampling == 0:
        computed = np.arange(0 if symmetric else -kmax, kmax + 1)
    else:
        half = sample_indices(kmax, sampling)
        computed = half if symmetric else np.unique(np.concatenate((-half, half)))

    results = _map_channels(lambda k: eta_channel_with_error(k, kern, cfg), computed, cfg.quad.threads)
    vals = np.array([r[0] for r in results])
    errs = np.array([r[1] for r in results])
    if symmetric:
        # computed[0] == 0 here; mirror the positive side
        ks_known = np.concatenate((-computed[:0:-1], computed))
        eta_known = np.concatenate((vals[:0:-1], vals))
    else:
        ks_known, eta_known = computed, vals
    all_k = np.arange(-kmax, kmax + 1)
    if len(ks_known) == len(all_k):
        eta = eta_known
    else:
        interp = PchipInterpolator(ks_known.astype(float), np.log(eta_known))
        eta = np.exp(interp(all_k.astype(float)))
        # keep computed values exactly
        eta[ks_known + kmax] = eta_known

    meta = {
        "scheme": cfg.scheme,
        "sampling": "full" if sampling == 0 else f"sampled({sampling})",
        "computed_indices": [int(v) for v in computed],
        "psd_rtol": cfg.quad.psd_rtol,
        "rho_rtol": cfg.quad.rho_rtol,
        "channel_order": cfg.quad.channel_order,
        "panel_order": cfg.quad.panel_order,
        "max_relative_error": float(np.max(errs / vals)),
        "kappa_cut": kern.kappa_cut,
        "kappa_max": kern.kappa_max,
        "kappa_table_error": kern.table_error,
    }
    spec = NliSpectrum(all_k, eta, 0.0, xi_factor(cfg.spans.num_spans, 0.0), cfg.spans.num_spans, meta)
    if fit_accumulation:
        spec = accumulate(spec, cfg, kern)
    return spec


def accumulate(spectrum: NliSpectrum, cfg: SystemConfig, kern: Optional[KappaKernel] = None) -> NliSpectrum:
    """Attach epsilon and xi for ``cfg.spans.num_spans`` to a single-span spectrum."""
    ns = cfg.spans.num_spans
    if ns == 1:
        return spectrum.with_accumulation(1, 0.0, epsilon_spans=[1], epsilon_residual=0.0, epsilon_warning="")
    fit = epsilon_fit(cfg, kern)
    return spectrum.with_accumulation(
        ns, fit.epsilon,
        epsilon_spans=list(fit.spans),
        epsilon_etas=[float(v) for v in fit.etas],
        epsilon_residual=fit.residual,
        epsilon_warning=fit.warning,
    )


def config_hash(cfg: SystemConfig, *, exclude_spans: bool = False) -> str:
    """Content hash of every physical and numerical parameter (threads excluded)."""
    from dataclasses import asdict

    doc = asdict(cfg)
    doc["amplifier"] = {"kind": cfg.scheme, **doc["amplifier"]}
    doc["quad"].pop("threads", None)
    if exclude_spans:
        doc["spans"].pop("num_spans")
    doc["format_version"] = SPECTRUM_FORMAT_VERSION
    text = json.dumps(doc, sort_keys=True, default=lambda o: float(o).hex() if isinstance(o, float) else str(o))
    # floats inside lists/dicts are serialised via repr which round-trips exactly
    return hashlib.sha256(text.encode()).hexdigest()[:16]
