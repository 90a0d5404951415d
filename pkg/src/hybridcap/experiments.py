"""Parameter sweeps behind the four figures and the Shannon comparison.

A sweep varies one environment field along ``grid`` and, optionally, a
second field over ``series``; every (grid, series) cell is independent and
runs on a bounded thread pool (``HNC_THREADS`` caps it). Results land in a
:class:`SweepTable` whose metadata carries the fully resolved config.
"""

from __future__ import annotations

import copy
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .capacity import shannon_capacity
from .env import PhysicalEnvironment, validate
from .errors import ConfigError, HybridCapError
from .fading import (EnvelopeDistribution, FadingCapacityRequest, cqc_capacity,
                     fading_capacity)
from .noise import build_model, noise_psd, tail_mass

AXES = ("frequency", "temperature", "bandwidth", "photons", "snr", "amplitude")
NORMALIZE = ("none", "max_to_one")

_ENV_KEYS = {
    "bandwidth": "bandwidth", "frequency": "frequency", "temperature": "temperature",
    "interval": "interval", "noise_floor": "noise_floor", "photons": "photons",
    "signal_power": "signal_power",
}

BASE_ENV = {"bandwidth": 1e4, "frequency": 1e8, "temperature": 290.0,
            "interval": 1.0, "photons": 1000.0}

DEFAULTS = {
    "fig1": {
        "axis": "frequency",
        "grid": {"start": 1e6, "stop": 1e9, "num": 50, "spacing": "log"},
        "series": {"name": "temperature", "values": [100.0, 300.0, 600.0]},
        "normalize": "max_to_one",
    },
    "fig2": {
        "axis": "temperature",
        "grid": {"start": 100.0, "stop": 1000.0, "num": 50, "spacing": "linear"},
        "series": {"name": "bandwidth", "values": [1e3, 1e4, 1e5]},
        "normalize": "max_to_one",
    },
    "fig3": {
        "axis": "amplitude",
        "series": {"name": "photons", "values": [100.0, 1000.0, 5000.0]},
        "normalize": "none",
    },
    "fig4": {
        "axis": "photons",
        "grid": {"start": 250.0, "stop": 5000.0, "num": 20, "spacing": "linear"},
        "normalize": "none",
        "envelopes": [],
        "shannon_snr_db": 30.0,
    },
}

COMMON = {
    "seed": 42,
    "M": 10,
    "grid_points": 4096,
    "freq_grid_points": 2048,
    "psd_variance": "paper_formula",
    "summation_range": "complete",
    "env": {},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        elif v is not None:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(fig: str, cfg: dict | None = None) -> dict:
    """Defaults for ``fig`` overlaid with ``cfg`` (``None`` values ignored)."""
    if fig not in DEFAULTS:
        raise ConfigError(f"unknown figure {fig!r}")
    return _merge(_merge(COMMON | {"figure": fig}, DEFAULTS[fig]), cfg or {})


def _grid_from(spec) -> np.ndarray:
    if isinstance(spec, (list, tuple)):
        return np.asarray(spec, dtype=float)
    try:
        start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid spec {spec!r}") from exc
    if spec.get("spacing", "linear") == "log":
        if start <= 0:
            raise ConfigError("log grid needs start > 0")
        return np.geomspace(start, stop, num)
    return np.linspace(start, stop, num)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: np.ndarray
    fixed: dict = field(default_factory=dict)
    series_name: str | None = None
    series: tuple = ()
    normalize: str = "none"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}")
        if self.normalize not in NORMALIZE:
            raise ConfigError(f"normalize must be one of {NORMALIZE}")
        g = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", g)
        if g.size == 0 or not np.all(np.isfinite(g)):
            raise ConfigError("grid must be nonempty and finite")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ConfigError("grid must be strictly increasing")
        if len(set(self.series)) != len(self.series):
            raise ConfigError("series values must be distinct")

    @classmethod
    def from_config(cls, cfg: dict) -> "SweepSpec":
        series = cfg.get("series") or {}
        return cls(
            axis=cfg["axis"],
            grid=_grid_from(cfg["grid"]) if "grid" in cfg else np.zeros(1),
            fixed=BASE_ENV | cfg.get("env", {}),
            series_name=series.get("name"),
            series=tuple(float(v) for v in series.get("values", ())),
            normalize=cfg.get("normalize", "none"),
        )


@dataclass
class SweepTable:
    columns: list[str]
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)
    plot_columns: list[str] = field(default_factory=list)
    flagged: list[dict] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def __len__(self):
        return self.rows.shape[0]


def max_workers() -> int:
    env = os.environ.get("HNC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"HNC_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _run_cells(fn, cells):
    """Evaluate ``fn`` on each cell; failures become NaN plus a flag."""
    def safe(cell):
        try:
            return fn(cell), None
        except HybridCapError as exc:
            return math.nan, {"cell": cell, "error": f"{type(exc).__name__}: {exc}"}

    workers = min(max_workers(), len(cells)) or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(safe, cells))
    else:
        out = [safe(c) for c in cells]
    return [v for v, _ in out], [f for _, f in out if f is not None]


def make_env(fixed: dict, **overrides) -> PhysicalEnvironment:
    kw = {_ENV_KEYS[k]: v for k, v in (fixed | overrides).items() if k in _ENV_KEYS}
    if "signal_power" in kw and "photons" in kw and "photons" not in overrides:
        kw.pop("photons")
    return validate(PhysicalEnvironment(**kw))


def _label(name, value):
    unit = {"temperature": "K", "bandwidth": "Hz", "frequency": "Hz"}.get(name, "")
    return f"{name}={value:g}{unit}"


def _psd_cell(cfg, spec):
    def fn(cell):
        x, s = cell
        env = make_env(spec.fixed, **{spec.axis: x, spec.series_name: s})
        model = build_model(env, grid_points=cfg["grid_points"],
                            freq_grid_points=cfg["freq_grid_points"],
                            summation_range=cfg["summation_range"])
        return noise_psd(model, env.frequency, M=cfg["M"], seed=cfg["seed"],
                         variance=cfg["psd_variance"]).value
    return fn


def _metadata(cfg, extra=None):
    md = {"toolkit_version": __version__, "seed": cfg["seed"], "config": cfg,
          "normalize": cfg.get("normalize", "none"),
          "normalize_convention": "each series divided by its maximum (peak = 1, 0 dB)",
          "psd_convention": "|Var[N] * kT/tau / (j 2 pi f)|, W/Hz",
          "psd_variance": cfg["psd_variance"]}
    return md | (extra or {})


def _psd_sweep(cfg) -> SweepTable:
    spec = SweepSpec.from_config(cfg)
    cells = [(float(x), s) for s in spec.series for x in spec.grid]
    values, flags = _run_cells(_psd_cell(cfg, spec), cells)
    k = spec.grid.size
    cols, data, plot = [spec.axis], [spec.grid], []
    raw_cols, raw_data, db_cols, db_data = [], [], [], []
    for j, s in enumerate(spec.series):
        v = np.asarray(values[j * k:(j + 1) * k])
        lab = _label(spec.series_name, s)
        norm = v
        if spec.normalize == "max_to_one" and np.any(np.isfinite(v)):
            norm = v / np.nanmax(v)
        cols.append(lab)
        data.append(norm)
        plot.append(lab)
        with np.errstate(divide="ignore", invalid="ignore"):
            db_data.append(10.0 * np.log10(norm))
        db_cols.append(f"{lab}_db")
        raw_cols.append(f"{lab}_psd_w_per_hz")
        raw_data.append(v)
    cols += db_cols + raw_cols
    data += db_data + raw_data
    return SweepTable(cols, np.column_stack(data), _metadata(cfg), plot, flags)


def run_fig1(cfg: dict | None = None) -> SweepTable:
    """Normalised |N_xy| against operating frequency, one series per temperature."""
    return _psd_sweep(resolve_config("fig1", cfg))


def run_fig2(cfg: dict | None = None) -> SweepTable:
    """Normalised |N_xy| against temperature, one series per bandwidth."""
    return _psd_sweep(resolve_config("fig2", cfg))


def run_fig3(cfg: dict | None = None) -> SweepTable:
    """Renormalised mixed-noise PDFs on a shared amplitude grid, one per photon count."""
    cfg = resolve_config("fig3", cfg)
    spec = SweepSpec.from_config(cfg)
    fixed = spec.fixed
    models, flags = [], []
    for p in spec.series:
        try:
            env = make_env(fixed, photons=p)
            models.append(build_model(env, grid_points=cfg["grid_points"],
                                      freq_grid_points=cfg["freq_grid_points"],
                                      summation_range=cfg["summation_range"]))
        except HybridCapError as exc:
            models.append(None)
            flags.append({"cell": p, "error": f"{type(exc).__name__}: {exc}"})
    live = [m for m in models if m is not None]
    if not live:
        grid = np.zeros(1)
    else:
        lo = min(m.grid[0] for m in live)
        hi = max(m.grid[-1] for m in live)
        grid = np.linspace(lo, hi, cfg["grid_points"])
    cols, data = ["n"], [grid]
    extra = {"z_norm": {}, "tail_mass_3sigma": {}}
    for p, m in zip(spec.series, models):
        lab = _label("photons", p)
        cols.append(lab)
        if m is None:
            data.append(np.full(grid.size, math.nan))
            continue
        data.append(m.density(grid))
        extra["z_norm"][lab] = m.z_norm
        extra["tail_mass_3sigma"][lab] = tail_mass(m)
    return SweepTable(cols, np.column_stack(data), _metadata(cfg, extra), cols[1:], flags)


def run_fig4(cfg: dict | None = None) -> SweepTable:
    """Capacity per Hz against photons per use, with the Shannon reference."""
    cfg = resolve_config("fig4", cfg)
    spec = SweepSpec.from_config(cfg)
    envelopes = [EnvelopeDistribution(e["kind"], tuple(e["params"])) for e in cfg["envelopes"]]

    def fn(p):
        env = make_env(spec.fixed, photons=p)
        model = build_model(env, grid_points=cfg["grid_points"],
                            freq_grid_points=cfg["freq_grid_points"],
                            summation_range=cfg["summation_range"])
        psd = noise_psd(model, env.frequency, M=cfg["M"], seed=cfg["seed"],
                        variance=cfg["psd_variance"]).value
        row = [cqc_capacity(env, psd).per_hertz().value, psd]
        for e in envelopes:
            row.append(fading_capacity(FadingCapacityRequest(env, e, psd)).per_hertz().value)
        return row

    width = 2 + len(envelopes)
    rows, flags = _run_cells(fn, [float(p) for p in spec.grid])
    rows = [r if isinstance(r, list) else [math.nan] * width for r in rows]
    snr = 10.0 ** (cfg["shannon_snr_db"] / 10.0)
    b = spec.fixed["bandwidth"]
    # S/N0 given in dB-Hz, so S/(N0 B) = snr / B
    shannon = shannon_capacity(snr, 1.0, b).per_hertz().value
    arr = np.asarray(rows, dtype=float)
    cols = ["photons", "cqc_per_hz", "psd_w_per_hz"]
    cols += [f"fading_{e.kind.value}_per_hz" for e in envelopes]
    data = np.column_stack([spec.grid, arr[:, 0], arr[:, 1], arr[:, 2:],
                            np.full(spec.grid.size, shannon)])
    cols.append("shannon_per_hz")
    plot = ["cqc_per_hz"] + cols[3:]
    md = _metadata(cfg, {"shannon_snr_linear": snr / b})
    return SweepTable(cols, data, md, plot, flags)


RUNNERS = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4}
