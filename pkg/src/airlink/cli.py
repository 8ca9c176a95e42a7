"""Command-line front end.

    airlink eta     --preset edfa --out out/
    airlink snr     --config link.ini --modes edc,ffnlc,ase
    airlink air     --preset raman --formats 64,256,1024 --shaping uniform,mb
    airlink sweep   --preset edfa --distances 1000:8000:480
    airlink record-check
    airlink cache   inspect | clear [--key HASH]

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
import uuid
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import __version__
from .budget import Mode, ase_budget, optimize_uniform_power, snr_records
from .cache import SpectrumCache
from .configfile import load_config
from .gn import NliSpectrum, accumulate, build_kappa_kernel, config_hash, eta_spectrum
from .numerics import NumericalError
from .shaping import SUPPORTED_ORDERS, AirReport, air_report
from .units import (
    SPEED_OF_LIGHT,
    ChannelGrid,
    ConfigError,
    SystemConfig,
    linear_to_db,
    preset_edfa,
    validate_config,
    watt_to_dbm,
)

log = logging.getLogger("airlink")

CROSSOVER_THRESHOLD = 0.005
DEFAULT_DISTANCES_KM = tuple(range(1040, 10001, 480))

ETA_HEADER = ["k", "f_offset_hz", "eta_w2", "eta_rel_db", "snr_edc_db", "snr_nlc_db"]
SNR_HEADER = ["k", "f_offset_hz", "eta_w2", "p_opt_dbm", "snr_edc_db", "snr_nlc_db", "snr_ase_db"]
AIR_SUMMARY_HEADER = ["mode", "format", "shaping", "air_tbps", "limit_signal_ase_tbps", "limit_ase_only_tbps"]
AIR_CHANNEL_HEADER = ["k", "snr_db", "mi_dp_bits", "lambda"]
SWEEP_HEADER = ["distance_km", "num_spans", "mode", "format", "shaping", "air_tbps", "limit_signal_ase_tbps",
                "limit_ase_only_tbps", "epsilon", "p_opt_dbm"]
CROSSOVER_HEADER = ["scheme", "threshold_pct", "status", "crossover_km", "crossover_spans", "gap_pct"]


# ---------------------------------------------------------------- manifest and output


@dataclass
class RunManifest:
    command: str
    argv: list
    config: dict
    config_hash: str
    run_id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])
    outputs: list = field(default_factory=list)
    cache_hits: int = 0
    cache_misses: int = 0
    wall_time_s: float = 0.0
    tool_version: str = __version__
    decisions: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def append_to(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(asdict(self), sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, float):
        return repr(o)
    if hasattr(o, "item"):
        return o.item()
    return str(o)


def config_dict(cfg: SystemConfig) -> dict:
    doc = asdict(cfg)
    doc["amplifier"] = {"kind": cfg.scheme, **doc["amplifier"]}
    return doc


def decision_flags(cfg: SystemConfig) -> dict:
    amp = cfg.amplifier
    return {
        "center_frequency_hz": cfg.grid.center_frequency,
        "reference_wavelength_m": SPEED_OF_LIGHT / cfg.grid.center_frequency,
        "raman_gain_calibrated_for_transparency": bool(getattr(amp, "transparency_calibrated", False)),
        "raman_gain_per_w_m": cfg.fiber.c_r,
        "signal_ase_nli_noise": "per-span ASE power P_n,1 with xi = sum k^(1+eps)",
        "capacity_limits_power": "FF-NLC optimum uniform launch power",
        "spectrum_sampling": "full" if (cfg.quad.full_spectrum or cfg.grid.num_channels <= 101)
        else f"sampled({cfg.quad.sample_count}) + monotone cubic interpolation of log eta",
    }


def fmt(x) -> str:
    """Deterministic text for one CSV cell; non-finite numbers are a bug, not data."""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int) or (hasattr(x, "dtype") and x.dtype.kind in "iu"):
        return str(int(x))
    v = float(x)
    if not math.isfinite(v):
        raise NumericalError(f"non-finite value {v} in output")
    return repr(v)


class Outputs:
    """Writes result files into one directory and remembers what it wrote."""

    def __init__(self, root: Path, manifest: RunManifest):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        self.paths: list[str] = []

    def _register(self, path: Path) -> Path:
        self.paths.append(str(path))
        return path

    def csv(self, name: str, header: list[str], rows) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(c) for c in row])
        path = self.root / name
        path.write_text(buf.getvalue(), encoding="utf-8")
        return self._register(path)

    def text(self, name: str, body: str) -> Path:
        path = self.root / name
        path.write_text(body, encoding="utf-8")
        return self._register(path)

    def dat(self, name: str, columns: list[str], rows) -> Path:
        lines = [f"# written by airlink; see manifest.jsonl, config {self.manifest.config_hash}",
                 "# " + " ".join(columns)]
        lines += [" ".join(fmt(c) for c in row) for row in rows]
        return self.text(name, "\n".join(lines) + "\n")

    def gnuplot(self, name: str, body: str) -> Path:
        head = f"# written by airlink; see manifest.jsonl, config {self.manifest.config_hash}\n"
        return self.text(name, head + body)


# ---------------------------------------------------------------- pipelines


class Pipeline:
    """Spectra for one base configuration, memoised in memory and on disk."""

    def __init__(self, cfg: SystemConfig, cache: SpectrumCache | None):
        self.cfg = cfg
        self.cache = cache
        self._kernel = None
        self.hits = 0
        self.misses = 0

    @property
    def kernel(self):
        if self._kernel is None:
            self._kernel = build_kappa_kernel(self.cfg)
        return self._kernel

    def _cached(self, cfg: SystemConfig, compute) -> NliSpectrum:
        key = config_hash(cfg)
        if self.cache is not None:
            spec = self.cache.load(key)
            if spec is not None:
                self.hits += 1
                log.info("cache hit %s", key)
                return spec
        self.misses += 1
        spec = compute()
        if self.cache is not None:
            self.cache.store(key, spec, label=f"{cfg.scheme} {cfg.grid.num_channels}ch {cfg.spans.num_spans} spans")
        return spec

    def spectrum(self, num_spans: int | None = None) -> NliSpectrum:
        cfg = self.cfg if num_spans is None else self.cfg.with_spans(num_spans)
        if cfg.spans.num_spans == 1:
            return self._cached(cfg, lambda: self._single(cfg))
        return self._cached(cfg, lambda: accumulate(self.spectrum(1), cfg, self.kernel))

    def _single(self, cfg):
        log.info("computing single-span NLI spectrum (%d channels)", cfg.grid.num_channels)
        return eta_spectrum(cfg, kern=self.kernel, fit_accumulation=False)


def _db(x):
    return linear_to_db(x)


def run_eta(cfg: SystemConfig, pipe: Pipeline, out: Outputs) -> dict:
    spec = pipe.spectrum()
    ase = ase_budget(cfg)
    p_edc = optimize_uniform_power(spec, ase, Mode.EDC)
    p_nlc = optimize_uniform_power(spec, ase, Mode.FFNLC)
    edc = snr_records(cfg, spec, ase, p_edc)
    nlc = snr_records(cfg, spec, ase, p_nlc)
    eta0 = spec.eta_central
    rows = [(a.k, a.f_offset, a.eta, _db(a.eta / eta0), _db(a.snr_edc), _db(b.snr_nlc)) for a, b in zip(edc, nlc)]
    out.csv("eta.csv", ETA_HEADER, rows)
    out.dat("eta.dat", ["k", "f_offset_thz", "eta_rel_db", "snr_edc_db", "snr_nlc_db"],
            [(r[0], r[1] / 1e12, r[3], r[4], r[5]) for r in rows])
    out.gnuplot("eta.gp", _ETA_GP)
    return {
        "eta_central_w2": eta0,
        "epsilon": spec.epsilon,
        "p_opt_edc_dbm": watt_to_dbm(p_edc),
        "p_opt_ffnlc_dbm": watt_to_dbm(p_nlc),
        "spectrum": spec.metadata,
    }


def run_snr(cfg: SystemConfig, pipe: Pipeline, out: Outputs, modes: list[Mode]) -> dict:
    spec = pipe.spectrum()
    ase = ase_budget(cfg)
    info = {"p_n_span_w": ase.p_n_span, "p_n_total_w": ase.p_n_total, "epsilon": spec.epsilon, "xi": spec.xi}
    plot_cols = {}
    for mode in modes:
        power = optimize_uniform_power(spec, ase, Mode.FFNLC if mode is Mode.ASE_ONLY else mode)
        recs = snr_records(cfg, spec, ase, power)
        p_dbm = watt_to_dbm(power)
        out.csv(f"snr_{mode.value}.csv", SNR_HEADER,
                [(r.k, r.f_offset, r.eta, p_dbm, _db(r.snr_edc), _db(r.snr_nlc), _db(r.snr_ase)) for r in recs])
        pick = {Mode.EDC: "snr_edc", Mode.FFNLC: "snr_nlc", Mode.ASE_ONLY: "snr_ase"}[mode]
        plot_cols[mode] = (recs, pick)
        info[f"p_opt_{mode.value}_dbm"] = p_dbm
    first = next(iter(plot_cols.values()))[0]
    out.dat("snr.dat", ["k", "f_offset_thz"] + [f"snr_{m.value}_db" for m in plot_cols],
            [(r.k, r.f_offset / 1e12, *[_db(getattr(plot_cols[m][0][i], plot_cols[m][1])) for m in plot_cols])
             for i, r in enumerate(first)])
    plots = ", ".join(f"'snr.dat' using 2:{3 + i} with lines title '{m.value}'" for i, m in enumerate(plot_cols))
    out.gnuplot("snr.gp", _SNR_GP.format(plots=plots))
    return info


def _air_summary_rows(rep: AirReport, modes: list[Mode]):
    rows = []
    for (mode, order, shaping), e in rep.entries.items():
        rows.append((mode.value, f"{order}qam", shaping, e.air_total / 1e12,
                     rep.limit_signal_ase / 1e12, rep.limit_ase_only / 1e12))
    if Mode.ASE_ONLY in modes:
        rows.append((Mode.ASE_ONLY.value, "gaussian", "none", rep.limit_ase_only / 1e12,
                     rep.limit_signal_ase / 1e12, rep.limit_ase_only / 1e12))
    return rows


def run_air(cfg: SystemConfig, pipe: Pipeline, out: Outputs, modes, formats, shapings) -> AirReport:
    spec = pipe.spectrum()
    log.info("computing mutual information for %d combinations", len(modes) * len(formats) * len(shapings))
    rep = air_report(cfg, spec, modes, formats, shapings)
    out.csv("air_summary.csv", AIR_SUMMARY_HEADER, _air_summary_rows(rep, modes))
    plot_names = []
    for (mode, order, shaping), e in rep.entries.items():
        name = f"air_{mode.value}_{order}qam_{shaping}.csv"
        out.csv(name, AIR_CHANNEL_HEADER, [(c.k, _db(c.snr_used), c.mi_dp, c.lam) for c in e.channels])
        plot_names.append((name, f"{mode.value} {order}QAM {shaping}"))
    if rep.entries:
        plots = ", ".join(f"'{n}' using 1:3 with lines title '{t}'" for n, t in plot_names)
        out.gnuplot("air.gp", _AIR_GP.format(plots=plots))
    return rep


def mi_summary(rep: AirReport) -> dict:
    """Central-channel and band-average DP mutual information per (mode, format, shaping)."""
    out = {}
    for (mode, order, shaping), e in sorted(rep.entries.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2])):
        mi = [c.mi_dp for c in e.channels]
        centre = next(c.mi_dp for c in e.channels if c.k == 0)
        out[f"{mode.value},{order},{shaping}"] = {"central": centre, "band_average": sum(mi) / len(mi)}
    return out


def parse_distances(text: str | None) -> list[float]:
    """'1000,2000,3000' or 'start:stop:step' (inclusive), in km."""
    if not text:
        return [float(d) for d in DEFAULT_DISTANCES_KM]
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ConfigError([f"bad distance range {text!r}; expected start:stop:step with step > 0"])
        n = int(math.floor((parts[1] - parts[0]) / parts[2] + 1e-9))
        return [parts[0] + i * parts[2] for i in range(n + 1)]
    return [float(p) for p in text.replace(" ", ",").split(",") if p]


def distances_to_spans(distances_km: list[float], span_length: float) -> list[int]:
    errors, spans = [], []
    for d in distances_km:
        n = d * 1e3 / span_length
        if d <= 0 or abs(n - round(n)) > 1e-9 * max(1.0, n):
            errors.append(f"distance {d:g} km is not a positive multiple of the span length "
                          f"{span_length / 1e3:g} km")
        else:
            spans.append(int(round(n)))
    if errors:
        raise ConfigError(errors)
    return spans


def nlc_mb_gap(cfg: SystemConfig, pipe: Pipeline, num_spans: int, memo: dict) -> float:
    """Relative AIR shortfall of shaped 256QAM against shaped 1024QAM with FF-NLC."""
    if num_spans not in memo:
        c = cfg.with_spans(num_spans)
        rep = air_report(c, pipe.spectrum(num_spans), (Mode.FFNLC,), (256, 1024), ("mb",))
        hi = rep.air(Mode.FFNLC, 1024, "mb")
        memo[num_spans] = (hi - rep.air(Mode.FFNLC, 256, "mb")) / hi
    return memo[num_spans]


def find_crossover(cfg, pipe, spans: list[int], memo: dict, threshold: float = CROSSOVER_THRESHOLD):
    """Smallest span count whose 256/1024 gap is below ``threshold``, by integer bisection
    inside the first bracketing interval of ``spans``.  Returns (spans, gap) or None."""
    prev = None
    for n in sorted(spans):
        g = nlc_mb_gap(cfg, pipe, n, memo)
        if g < threshold:
            if prev is None:
                return n, g
            lo, hi = prev, n
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if nlc_mb_gap(cfg, pipe, mid, memo) < threshold:
                    hi = mid
                else:
                    lo = mid
            return hi, memo[hi]
        prev = n
    return None


def run_sweep(cfg: SystemConfig, pipe: Pipeline, out: Outputs, distances_km, modes, formats, shapings) -> dict:
    spans = distances_to_spans(distances_km, cfg.spans.span_length)
    rows, memo = [], {}
    for n in spans:
        c = cfg.with_spans(n)
        spec = pipe.spectrum(n)
        log.info("sweep: %d spans (%.0f km), epsilon %.4f", n, c.spans.distance / 1e3, spec.epsilon)
        rep = air_report(c, spec, modes, formats, shapings)
        for (mode, order, shaping), e in rep.entries.items():
            rows.append((c.spans.distance / 1e3, n, mode.value, f"{order}qam", shaping, e.air_total / 1e12,
                         rep.limit_signal_ase / 1e12, rep.limit_ase_only / 1e12, spec.epsilon,
                         watt_to_dbm(e.launch_power)))
            if mode is Mode.FFNLC and shaping == "mb" and order in (256, 1024):
                memo.setdefault(n, {})[order] = e.air_total
    gaps = {n: (v[1024] - v[256]) / v[1024] for n, v in memo.items() if len(v) == 2}
    out.csv("sweep.csv", SWEEP_HEADER, rows)
    found = find_crossover(cfg, pipe, spans, gaps)
    if found is None:
        xrow = (cfg.scheme, 100 * CROSSOVER_THRESHOLD, "not_reached", "", "", 100 * gaps[max(spans)])
    else:
        n, g = found
        xrow = (cfg.scheme, 100 * CROSSOVER_THRESHOLD, "found", n * cfg.spans.span_length / 1e3, n, 100 * g)
    out.csv("crossover.csv", CROSSOVER_HEADER, [xrow])
    combos = sorted({(r[2], r[3], r[4]) for r in rows})
    dat_rows = []
    for n in spans:
        by = {(r[2], r[3], r[4]): r[5] for r in rows if r[1] == n}
        dat_rows.append((n * cfg.spans.span_length / 1e3, *[by[c] for c in combos]))
    out.dat("sweep.dat", ["distance_km"] + ["_".join(c) for c in combos], dat_rows)
    plots = ", ".join(f"'sweep.dat' using 1:{i + 2} with linespoints title '{' '.join(c)}'"
                      for i, c in enumerate(combos))
    out.gnuplot("sweep.gp", _SWEEP_GP.format(plots=plots))
    return {"crossover": dict(zip(CROSSOVER_HEADER, xrow)), "gaps_pct": {str(k): 100 * v for k, v in sorted(gaps.items())}}


@dataclass(frozen=True)
class RecordScenario:
    """C+L EDFA record scenario, with the inter-band gap closed into one contiguous band."""

    record_rate: float = 49.3e12  # bit/s
    distance_km: float = 9100.0
    span_length_km: float = 80.0
    remainder_policy: str = "floor"  # drop the partial span (113 x 80 km = 9040 km)
    num_channels: int = 961  # 9.6 THz / 10 GHz, rounded up to the odd count the grid needs
    symbol_rate: float = 10e9
    spacing: float = 10e9

    @property
    def num_spans(self) -> int:
        q = self.distance_km / self.span_length_km
        if self.remainder_policy == "floor":
            return int(math.floor(q))
        if self.remainder_policy == "ceil":
            return int(math.ceil(q))
        raise ConfigError([f"unknown remainder policy {self.remainder_policy!r}"])

    def config(self, base: SystemConfig | None = None) -> SystemConfig:
        base = base or preset_edfa()
        grid = ChannelGrid(self.num_channels, self.symbol_rate, self.spacing, base.grid.center_frequency)
        cfg = replace(base, grid=grid)
        return replace(cfg, spans=replace(cfg.spans, span_length=self.span_length_km * 1e3, num_spans=self.num_spans))

    def assumptions(self) -> dict:
        d = asdict(self)
        d["num_spans"] = self.num_spans
        d["modelled_distance_km"] = self.num_spans * self.span_length_km
        d["bandwidth_hz"] = self.num_channels * self.spacing
        d["band"] = "C+L treated as one contiguous band, inter-band gap neglected"
        d["fiber_and_amplifier"] = "EDFA preset fiber, 4.5 dB noise figure"
        return d


def run_record_check(cfg: SystemConfig, pipe: Pipeline, out: Outputs, scenario: RecordScenario) -> dict:
    spec = pipe.spectrum()
    rep = air_report(cfg, spec, (Mode.EDC, Mode.FFNLC), (16, 256), ("uniform", "mb"))
    air16 = rep.air(Mode.EDC, 16, "uniform")
    air256 = rep.air(Mode.FFNLC, 256, "mb")
    result = {
        "record_rate_tbps": scenario.record_rate / 1e12,
        "air_dp16qam_edc_tbps": air16 / 1e12,
        "record_fraction_of_air": scenario.record_rate / air16,
        "air_dp256qam_ffnlc_mb_tbps": air256 / 1e12,
        "shaped_256qam_ffnlc_over_record": air256 / scenario.record_rate,
        "limit_signal_ase_tbps": rep.limit_signal_ase / 1e12,
        "num_spans": scenario.num_spans,
        "modelled_distance_km": scenario.num_spans * scenario.span_length_km,
        "num_channels": scenario.num_channels,
        "epsilon": spec.epsilon,
    }
    out.csv("record_check.csv", ["quantity", "value"], list(result.items()))
    return result


# ---------------------------------------------------------------- gnuplot templates

_ETA_GP = """set terminal svg size 900,700
set output 'eta.svg'
set multiplot layout 2,1
set xlabel 'frequency offset (THz)'
set ylabel 'NLI coefficient relative to centre (dB)'
plot 'eta.dat' using 2:3 with lines title 'eta'
set ylabel 'SNR at optimum uniform power (dB)'
plot 'eta.dat' using 2:4 with lines title 'EDC', 'eta.dat' using 2:5 with lines title 'FF-NLC'
unset multiplot
"""

_SNR_GP = """set terminal svg size 900,500
set output 'snr.svg'
set xlabel 'frequency offset (THz)'
set ylabel 'SNR (dB)'
plot {plots}
"""

_AIR_GP = """set terminal svg size 900,500
set output 'air_mi.svg'
set datafile separator ','
set key autotitle columnhead
set xlabel 'channel index'
set ylabel 'MI (bit/symbol, both polarisations)'
plot {plots}
"""

_SWEEP_GP = """set terminal svg size 900,500
set output 'sweep.svg'
set logscale x
set xlabel 'distance (km)'
set ylabel 'AIR (Tbit/s)'
plot {plots}
"""


# ---------------------------------------------------------------- argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are configuration errors (exit 1)
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="airlink", description="NLI, SNR and achievable-rate budgets for amplified fiber links.")
    p.add_argument("--version", action="version", version=f"airlink {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file (keys override the preset)")
    common.add_argument("--preset", choices=["edfa", "raman"], help="start from a built-in system")
    common.add_argument("--spans", type=int, help="override the number of spans")
    common.add_argument("--full-spectrum", action="store_true", help="integrate every channel, no interpolation")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    common.add_argument("--threads", type=int, help="worker threads for per-channel integrals")
    common.add_argument("--gh-order", type=int, help="Gauss-Hermite order for mutual information")
    common.add_argument("--tol", type=float, help="relative tolerance of the NLI spectral density integral")
    common.add_argument("--no-cache", action="store_true", help="neither read nor write the spectrum cache")
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("eta", parents=[common], help="per-channel NLI coefficients and SNR (CSV + plot data)")
    s = sub.add_parser("snr", parents=[common], help="per-channel SNR records per compensation mode")
    s.add_argument("--modes", default="edc,ffnlc,ase")
    a = sub.add_parser("air", parents=[common], help="mutual information and total AIR")
    a.add_argument("--modes", default="edc,ffnlc")
    a.add_argument("--formats", default="16,64,256,1024")
    a.add_argument("--shaping", default="uniform,mb")
    w = sub.add_parser("sweep", parents=[common], help="AIR against distance and the 256/1024QAM crossover")
    w.add_argument("--distances", help="km list 'a,b,c' or range 'start:stop:step'")
    w.add_argument("--modes", default="ffnlc")
    w.add_argument("--formats", default="256,1024")
    w.add_argument("--shaping", default="mb")
    r = sub.add_parser("record-check", parents=[common], help="compare a published record with the modelled AIR")
    r.add_argument("--remainder", choices=["floor", "ceil"], default="floor",
                   help="how the partial last span of the record distance is handled")
    c = sub.add_parser("cache", help="inspect or clear the spectrum cache")
    c.add_argument("action", choices=["inspect", "clear"], nargs="?", default="inspect")
    c.add_argument("--key", help="restrict to one config hash")
    return p


def _modes(text: str) -> list[Mode]:
    try:
        out = [Mode.parse(t) for t in _csv_list(text)]
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    if not out:
        raise ConfigError(["--modes is empty"])
    return list(dict.fromkeys(out))


def _formats(text: str) -> list[int]:
    errs, out = [], []
    for t in _csv_list(text):
        t = t.lower().removesuffix("qam")
        if not t.isdigit() or int(t) not in SUPPORTED_ORDERS:
            errs.append(f"unsupported format {t!r}; choose from {', '.join(map(str, SUPPORTED_ORDERS))}")
        else:
            out.append(int(t))
    if errs or not out:
        raise ConfigError(errs or ["--formats is empty"])
    return list(dict.fromkeys(out))


def _shapings(text: str) -> list[str]:
    out = [t.lower() for t in _csv_list(text)]
    bad = [t for t in out if t not in ("uniform", "mb")]
    if bad or not out:
        raise ConfigError([f"unknown shaping {t!r}; expected uniform or mb" for t in bad] or ["--shaping is empty"])
    return list(dict.fromkeys(out))


def resolve_config(args) -> SystemConfig:
    if args.command == "record-check":
        base = load_config(args.config, args.preset) if (args.config or args.preset) else None
        cfg = RecordScenario(remainder_policy=args.remainder).config(base)
    else:
        if args.config is None and args.preset is None:
            raise ConfigError(["give --config PATH and/or --preset edfa|raman"])
        cfg = load_config(args.config, args.preset)
        if args.spans is not None:
            cfg = cfg.with_spans(args.spans)
    quad = {}
    if args.full_spectrum:
        quad["full_spectrum"] = True
    if args.threads is not None:
        quad["threads"] = args.threads
    if args.gh_order is not None:
        quad["gh_order"] = args.gh_order
    if args.tol is not None:
        quad["psd_rtol"] = args.tol
    cfg = cfg.with_quad(**quad) if quad else cfg
    return validate_config(cfg)


def _cmd_cache(args) -> int:
    cache = SpectrumCache()
    if args.action == "clear":
        n = cache.clear(args.key)
        print(f"removed {n} cache entr{'y' if n == 1 else 'ies'} from {cache.root}")
        return 0
    entries = cache.entries()
    if args.key:
        entries = [e for e in entries if e["key"] == args.key]
    print(f"cache directory: {cache.root}")
    for e in entries:
        state = "ok" if e.get("valid") else "invalid"
        print(f"{e['key']}  {e['bytes']:>9d} B  {state:7s}  {e.get('label', '')}")
    if not entries:
        print("(empty)")
    return 0


def execute(args) -> int:
    if args.command == "cache":
        return _cmd_cache(args)
    t0 = time.perf_counter()
    cfg = resolve_config(args)
    manifest = RunManifest(command=args.command, argv=list(sys.argv[1:]), config=config_dict(cfg),
                           config_hash=config_hash(cfg), decisions=decision_flags(cfg))
    cache = None if args.no_cache else SpectrumCache()
    pipe = Pipeline(cfg, cache)
    out = Outputs(args.out, manifest)

    if args.command == "eta":
        manifest.notes = run_eta(cfg, pipe, out)
    elif args.command == "snr":
        manifest.notes = run_snr(cfg, pipe, out, _modes(args.modes))
    elif args.command == "air":
        modes, formats, shapings = _modes(args.modes), _formats(args.formats), _shapings(args.shaping)
        rep = run_air(cfg, pipe, out, modes, formats, shapings)
        manifest.notes = {"powers_w": rep.powers, **rep.metadata, "mi_dp_bits": mi_summary(rep)}
    elif args.command == "sweep":
        manifest.notes = run_sweep(cfg, pipe, out, parse_distances(args.distances), _modes(args.modes),
                                   _formats(args.formats), _shapings(args.shaping))
    elif args.command == "record-check":
        scenario = RecordScenario(remainder_policy=args.remainder)
        res = run_record_check(cfg, pipe, out, scenario)
        manifest.notes = {"scenario": scenario.assumptions(), "result": res}
        for k, v in res.items():
            print(f"{k:36s} {v:.6g}" if isinstance(v, float) else f"{k:36s} {v}")
    manifest.outputs = out.paths
    manifest.cache_hits, manifest.cache_misses = pipe.hits, pipe.misses
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.append_to(out.root / "manifest.jsonl")
    for p in out.paths:
        log.info("wrote %s", p)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return execute(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
