"""``hybridcap`` command-line entry point.

Precedence for every setting: built-in default < ``--config`` JSON < flags.
Exit codes: 0 ok, 1 domain/config error, 2 convergence failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .capacity import (EAParams, HolevoParams, ea_capacity, g_entropy, holevo_capacity,
                       lsd_capacity, particle_regime_capacity, quantum_linear_capacity,
                       shannon_capacity, wave_regime_capacity)
from .emit import FORMATS, EmitError, emit, write_text
from .errors import ConfigError, ConvergenceError, HybridCapError
from .experiments import BASE_ENV, COMMON, RUNNERS, SweepTable, _metadata, make_env
from .fading import (EnvelopeDistribution, FadingCapacityRequest, cqc_capacity,
                     fading_capacity, fading_capacity_mc)
from .noise import (build_model, moments, noise_psd, psd_csv_rows, variance_in_frequency)

EXIT_OK, EXIT_DOMAIN, EXIT_CONVERGENCE, EXIT_IO = 0, 1, 2, 3

ENV_FLAGS = ("bandwidth", "frequency", "temperature", "interval", "noise_floor",
             "photons", "signal_power")
CAPACITY_FORMULAS = ("shannon", "quantum-linear", "wave", "particle", "holevo", "lsd",
                     "ea", "g", "cqc", "fading")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse itself exits 2, which we reserve for convergence failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="JSON config document")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--format", choices=FORMATS, default=None, help="output format (default csv)")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default 42)")
    p.add_argument("--grid-points", type=int, default=None, dest="grid_points",
                   help="noise-amplitude grid size (default 4096)")
    return p


def _env_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("environment")
    for name in ENV_FLAGS:
        g.add_argument("--" + name.replace("_", "-"), type=float, default=None, dest=name)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="hybridcap", description="Hybrid classical-quantum noise toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    cap = sub.add_parser("capacity", parents=[common], help="evaluate one capacity formula")
    cap.add_argument("formula", choices=CAPACITY_FORMULAS)
    _env_args(cap)
    cap.add_argument("--snr", type=float, help="S/(N0 B) for shannon")
    cap.add_argument("--alpha", type=float)
    cap.add_argument("--noise-psd", type=float, dest="noise_psd", help="N(f) or N_xy in W/Hz")
    cap.add_argument("--gamma-const", type=float, dest="gamma_const")
    cap.add_argument("--input-energy", type=float, dest="input_energy")
    cap.add_argument("--output-energy", type=float, dest="output_energy")
    cap.add_argument("--x", type=float, help="argument of g")
    cap.add_argument("--envelope", choices=("deterministic", "rayleigh", "lognormal", "uniform"))
    cap.add_argument("--envelope-params", type=float, nargs="+", dest="envelope_params")
    cap.add_argument("--mc", action="store_true", help="Monte Carlo path for fading")
    cap.add_argument("--per-hertz", action="store_true", dest="per_hertz")

    noise = sub.add_parser("noise", help="mixed-noise tables")
    nsub = noise.add_subparsers(dest="what", required=True, parser_class=_Parser)
    for what, hlp in (("pdf", "density and CDF on the amplitude grid"),
                      ("psd", "PSD over a frequency list"),
                      ("moments", "sample moments")):
        q = nsub.add_parser(what, parents=[common], help=hlp)
        _env_args(q)
        q.add_argument("--freq-grid-points", type=int, dest="freq_grid_points")
        q.add_argument("--samples", "-M", type=int, dest="M", help="noise samples (default 10)")
        q.add_argument("--summation-range", choices=("complete", "printed"), dest="summation_range")
        if what == "psd":
            q.add_argument("--psd-variance", choices=("paper_formula", "quadrature"),
                           dest="psd_variance")
            q.add_argument("--freqs", type=float, nargs="+", help="frequencies in Hz")

    sw = sub.add_parser("sweep", help="figure sweeps")
    ssub = sw.add_subparsers(dest="figure", required=True, parser_class=_Parser)
    for fig in RUNNERS:
        ssub.add_parser(fig, parents=[common], help=f"{fig} sweep")

    vo = sub.add_parser("validate-oracles", parents=[common], help="run the cross-checks")
    vo.add_argument("--only", nargs="+", help="oracle names to run")
    return parser


def load_config(path) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise EmitError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _overlay(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    for key in ("seed", "grid_points", "freq_grid_points", "M", "summation_range",
                "psd_variance"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    env = dict(cfg.get("env", {}))
    for key in ENV_FLAGS:
        v = getattr(args, key, None)
        if v is not None:
            env[key] = v
            # a flag for one of the pair supersedes the other from config
            other = {"photons": "signal_power", "signal_power": "photons"}.get(key)
            if other and getattr(args, other, None) is None:
                env.pop(other, None)
    cfg["env"] = env
    return cfg


def _write(text: str, out) -> None:
    if out:
        write_text(text, out)
    else:
        sys.stdout.write(text)


def _noise_cfg(cfg):
    return COMMON | {"figure": None} | cfg


def cmd_capacity(args, cfg) -> int:
    cfg = _overlay(cfg, args)
    envd = BASE_ENV | cfg.get("env", {})
    pick = lambda k, d=None: getattr(args, k, None) if getattr(args, k, None) is not None else cfg.get(k, d)
    f = args.formula

    def env():
        return make_env(envd)

    if f == "shannon":
        snr = pick("snr")
        if snr is not None:
            res = shannon_capacity(snr * envd["bandwidth"], 1.0, envd["bandwidth"])
        else:
            e = env()
            res = shannon_capacity(e.signal_power, e.noise_floor, e.bandwidth)
    elif f == "quantum-linear":
        res = quantum_linear_capacity(env())
    elif f == "wave":
        res = wave_regime_capacity(env(), pick("gamma_const", 1.0))
    elif f == "particle":
        res = particle_regime_capacity(env())
    elif f == "holevo":
        res = holevo_capacity(HolevoParams(env(), pick("noise_psd", 0.0), pick("alpha", 1.0)))
    elif f == "lsd":
        res = lsd_capacity(pick("alpha", 1.0))
    elif f == "ea":
        res = ea_capacity(EAParams(pick("input_energy", 1.0), pick("output_energy", 1.0),
                                   pick("alpha", 1.0)))
    elif f == "g":
        x = pick("x")
        if x is None:
            raise ConfigError("g needs --x")
        _write(json.dumps({"formula": "g", "x": x, "value": g_entropy(x)}) + "\n", args.out)
        return EXIT_OK
    elif f in ("cqc", "fading"):
        e = env()
        psd = pick("noise_psd")
        if psd is None:
            full = _noise_cfg(cfg)
            model = build_model(e, grid_points=full["grid_points"],
                                freq_grid_points=full["freq_grid_points"],
                                summation_range=full["summation_range"])
            psd = noise_psd(model, e.frequency, M=full["M"], seed=full["seed"],
                            variance=full["psd_variance"]).value
        if f == "cqc":
            res = cqc_capacity(e, psd)
        else:
            kind = pick("envelope", "rayleigh")
            params = tuple(pick("envelope_params", [2 ** -0.5]))
            extra = {k: cfg[k] for k in ("rel_tol", "max_panels", "mc_samples",
                                         "quadrature_points") if k in cfg}
            req = FadingCapacityRequest(e, EnvelopeDistribution(kind, params), psd,
                                        seed=pick("seed", 42), **extra)
            res = fading_capacity_mc(req) if args.mc else fading_capacity(req)
    if args.per_hertz or cfg.get("per_hertz"):
        res = res.per_hertz()
    doc = {"formula": res.formula.value, "value": res.value, "normalized": res.normalized,
           "diverged": res.diverged, "error_estimate": res.error_estimate,
           "std_error": res.std_error, "inputs": res.inputs}
    fmt = args.format or "json"
    if fmt == "json":
        text = json.dumps(doc, default=str) + "\n"
    elif fmt == "csv":
        text = "formula,value\n" + f"{doc['formula']},{format(float(res.value), '.17g')}\n"
    else:
        raise ConfigError("capacity output supports csv or json")
    _write(text, args.out)
    return EXIT_OK


def cmd_noise(args, cfg) -> int:
    cfg = _noise_cfg(_overlay(cfg, args))
    e = make_env(BASE_ENV | cfg["env"])
    model = build_model(e, grid_points=cfg["grid_points"],
                        freq_grid_points=cfg["freq_grid_points"],
                        summation_range=cfg["summation_range"])
    fmt = args.format or ("json" if args.what == "moments" else "csv")
    md = _metadata(cfg, {"environment": e.snapshot(), "z_norm": model.z_norm})
    if args.what == "pdf":
        cols = ["n", "pdf_raw", "pdf", "cdf"]
        table = SweepTable(cols, np.column_stack([model.grid, model.pdf_raw, model.pdf,
                                                  model.cdf]), md, ["pdf"])
    elif args.what == "psd":
        freqs = args.freqs or cfg.get("frequencies") or list(np.geomspace(1e6, 1e9, 50))
        psds = [noise_psd(model, float(f), M=cfg["M"], seed=cfg["seed"],
                          variance=cfg["psd_variance"]) for f in freqs]
        rows = list(psd_csv_rows(psds))
        table = SweepTable(list(rows[0]), np.asarray(rows[1:], dtype=float), md, ["psd_mag"])
        table.metadata["config"] = table.metadata["config"] | {"figure": None}
    else:
        pf = moments(model, cfg["M"], "paper_formula", cfg["seed"])
        sb = moments(model, cfg["M"], "sample_based", cfg["seed"])
        doc = {
            "paper_formula": {"mean": pf.mean, "second_moment": pf.second_moment,
                              "variance": pf.variance},
            "sample_based": {"mean": sb.mean, "second_moment": sb.second_moment,
                             "variance": sb.variance},
            "variance_in_frequency": variance_in_frequency(model, cfg["M"], cfg["seed"]),
            "quadrature": {"mean": model.mean(), "variance": model.variance()},
            "samples": pf.samples.tolist(),
            "metadata": md,
        }
        if fmt != "json":
            raise ConfigError("moments output supports json only")
        _write(json.dumps(doc, indent=2, default=str) + "\n", args.out)
        return EXIT_OK
    _write(emit(table, fmt), args.out)
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    cfg = dict(cfg)
    for key in ("seed", "grid_points"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    table = RUNNERS[args.figure](cfg)
    for flag in table.flagged:
        print(f"flagged cell {flag['cell']}: {flag['error']}", file=sys.stderr)
    _write(emit(table, args.format or "csv"), args.out)
    return EXIT_OK


def cmd_validate(args, cfg) -> int:
    from .oracles import run_all
    results = run_all(args.only or cfg.get("only"))
    lines = "".join(r.line() + "\n" for r in results)
    _write(lines, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_DOMAIN


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "capacity":
            return cmd_capacity(args, cfg)
        if args.command == "noise":
            return cmd_noise(args, cfg)
        if args.command == "sweep":
            return cmd_sweep(args, cfg)
        return cmd_validate(args, cfg)
    except ConvergenceError as exc:
        print(f"hybridcap: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except EmitError as exc:
        print(f"hybridcap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HybridCapError, ValueError, TypeError, KeyError) as exc:
        print(f"hybridcap: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"hybridcap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
