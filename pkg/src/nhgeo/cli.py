"""Batch experiment runner.

    nhgeo <subcommand> --config <path> [--out <prefix>] [--threads N]

Subcommands: spectrum, geometry, spread, response, integrated, validate.
Configs are flat JSON files; unknown keys are rejected. Every CSV starts
with a comment row echoing the full config and a header row naming the
columns; numbers are written with 17 significant digits so runs are
bit-reproducible and diffable.

Exit codes: 0 success, 1 config error, 2 numerical failure (exceptional
point, delocalization), 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import checks, geometry, response, wavepacket
from ._backend import backend_name, set_num_threads
from .errors import (ConfigError, DefectiveMatrix, DelocalizedState, PTBroken)
from .model import PTChainModel, scan_bands

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3

_SECTIONS = {
    "model": {"m", "L"},
    "packet": {"band", "k_c", "sigma", "x_c"},
    "broadening": {"eta", "eta_prime", "T", "dt"},
    "sweep": {"variable", "values"},
    "output": None,  # plain string
}

DEFAULTS = {
    "model": {"m": 0.8, "L": 256},
    "packet": {"band": 0, "k_c": 1.1 * np.pi, "sigma": 32.0, "x_c": None},
    "broadening": {"eta": 0.02, "eta_prime": 0.2, "T": 300.0, "dt": 0.05},
}


def _reject_unknown(section: str, given: dict) -> None:
    allowed = _SECTIONS[section]
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    cfg = {}
    for section, defaults in DEFAULTS.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"'{section}' must be an object")
        _reject_unknown(section, given)
        merged = dict(defaults)
        merged.update(given)
        cfg[section] = merged
    if "sweep" in raw:
        sweep = raw["sweep"]
        if not isinstance(sweep, dict):
            raise ConfigError("'sweep' must be an object")
        _reject_unknown("sweep", sweep)
        if set(sweep) != {"variable", "values"}:
            raise ConfigError("'sweep' needs exactly 'variable' and 'values'")
        if sweep["variable"] not in ("k_c", "sigma"):
            raise ConfigError("sweep variable must be 'k_c' or 'sigma'")
        values = sweep["values"]
        if (not isinstance(values, list) or not values
                or not all(isinstance(v, (int, float)) for v in values)):
            raise ConfigError("sweep values must be a nonempty number list")
        cfg["sweep"] = {"variable": sweep["variable"],
                        "values": [float(v) for v in values]}
    cfg["output"] = raw.get("output", "nhgeo_out")
    if not isinstance(cfg["output"], str):
        raise ConfigError("'output' must be a string path prefix")
    _validate_physics(cfg)
    return cfg


def _validate_physics(cfg: dict) -> None:
    mdl = cfg["model"]
    if not isinstance(mdl["L"], int) or mdl["L"] < 8 or mdl["L"] % 2:
        raise ConfigError("model.L must be an even integer >= 8")
    if not isinstance(mdl["m"], (int, float)):
        raise ConfigError("model.m must be a number")
    pkt = cfg["packet"]
    if pkt["band"] not in (0, 1):
        raise ConfigError("packet.band must be 0 or 1")
    sigmas = pkt["sigma"] if isinstance(pkt["sigma"], list) else [pkt["sigma"]]
    for s in sigmas:
        if not isinstance(s, (int, float)) or s <= 0 or s > mdl["L"] / 8:
            raise ConfigError(
                f"packet.sigma = {s} outside (0, L/8] for L = {mdl['L']}")
    if pkt["x_c"] is None:
        pkt["x_c"] = mdl["L"] / 2.0
    br = cfg["broadening"]
    for key in ("eta", "eta_prime", "T", "dt"):
        if not isinstance(br[key], (int, float)) or br[key] <= 0:
            raise ConfigError(f"broadening.{key} must be a positive number")


def _model(cfg) -> PTChainModel:
    return PTChainModel(m=float(cfg["model"]["m"]), L=int(cfg["model"]["L"]))


def _fmt(x) -> str:
    return f"{float(x):.16e}"


def write_csv(path: str, cfg: dict, header, rows) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    echo = json.dumps(cfg, sort_keys=True, default=float)
    with open(path, "w") as fh:
        fh.write(f"# config: {echo}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _sweep_values(cfg, variable, fallback):
    sweep = cfg.get("sweep")
    if sweep and sweep["variable"] == variable:
        return list(sweep["values"])
    return fallback


def _sigma_list(cfg):
    sig = cfg["packet"]["sigma"]
    sigmas = sig if isinstance(sig, list) else [sig]
    swept = _sweep_values(cfg, "sigma", None)
    return [float(s) for s in (swept if swept is not None else sigmas)]


def run_spectrum(cfg: dict, out_prefix: str) -> str:
    model = _model(cfg)
    scan = scan_bands(model)
    rows = [
        (k, *sum(((e.real, e.imag) for e in scan.energies[j]), ()))
        for j, k in enumerate(scan.k_grid)
    ]
    header = ["k"] + [f"{part}_e{b}" for b in range(scan.nbands)
                      for part in ("re", "im")]
    path = f"{out_prefix}_spectrum.csv"
    write_csv(path, cfg, header, rows)
    return path


def run_geometry_scan(cfg: dict, out_prefix: str) -> str:
    model = _model(cfg)
    scan = scan_bands(model)
    rows = []
    for j, k in enumerate(scan.k_grid):
        row = [k]
        for b in range(scan.nbands):
            gp = geometry.connections_fd(scan, b, j)
            row += [gp.qgt.real, gp.qgt.imag, gp.q_conn.real, gp.q_conn.imag]
        rows.append(row)
    header = ["k"] + [f"{name}_b{b}" for b in range(scan.nbands)
                      for name in ("re_q", "im_q", "re_Q", "im_Q")]
    path = f"{out_prefix}_geometry.csv"
    write_csv(path, cfg, header, rows)
    return path


def run_spread(cfg: dict, out_prefix: str) -> str:
    model = _model(cfg)
    scan = scan_bands(model)
    band = cfg["packet"]["band"]
    x_c = float(cfg["packet"]["x_c"])
    k_values = _sweep_values(
        cfg, "k_c", list(np.linspace(0.1, 1.9, 16) * np.pi))
    rows = []
    for sigma in _sigma_list(cfg):
        for k_c in k_values:
            pk = wavepacket.build_gaussian(scan, band, k_c, sigma, x_c)
            st = wavepacket.evolve(pk, 0.0)
            spread = wavepacket.position_spread(st, pk)
            ref = geometry.geometry_point_sos(model, band, pk.k_center).qgt.real
            rows.append((sigma, pk.k_center, spread,
                         spread - sigma**2 / 4.0, ref))
    header = ["sigma", "k_c", "spread", "geometry_part", "re_q_ref"]
    path = f"{out_prefix}_spread.csv"
    write_csv(path, cfg, header, rows)
    return path


def run_response_trace(cfg: dict, out_prefix: str) -> str:
    model = _model(cfg)
    scan = scan_bands(model)
    pkt = cfg["packet"]
    band = pkt["band"]
    sigma = _sigma_list(cfg)[0]
    br = cfg["broadening"]
    pk = wavepacket.build_gaussian(scan, band, float(pkt["k_c"]), sigma,
                                   float(pkt["x_c"]))
    ts = np.arange(0.0, float(br["T"]) + br["dt"] / 2.0, float(br["dt"]))
    numeric = response.response_series(pk, ts)
    coeffs = response.fh_coefficients(scan, band, pk.k_center,
                                      geometry.PROBE_STEP)
    curv = response.band_curvature(model, band, pk.k_center)
    analytic = response.response_analytic_time(coeffs, curv, ts)
    rows = list(zip(ts, numeric.values, analytic.values))
    path = f"{out_prefix}_response.csv"
    write_csv(path, cfg, ["t", "c_numeric", "c_analytic"], rows)
    return path


def run_integrated(cfg: dict, out_prefix: str) -> str:
    model = _model(cfg)
    scan = scan_bands(model)
    pkt = cfg["packet"]
    band = pkt["band"]
    x_c = float(pkt["x_c"])
    br = cfg["broadening"]
    bp = response.BroadeningParams(eta=float(br["eta"]),
                                   eta_prime=float(br["eta_prime"]),
                                   T=float(br["T"]))
    ts = np.arange(0.0, bp.T + br["dt"] / 2.0, float(br["dt"]))
    k_values = _sweep_values(
        cfg, "k_c", list(np.linspace(0.1, 1.9, 8) * np.pi))
    rows = []
    for sigma in _sigma_list(cfg):
        for k_c in k_values:
            pk = wavepacket.build_gaussian(scan, band, k_c, sigma, x_c)
            series = response.response_series(pk, ts)
            inum = response.integrated_response_numeric(series, bp)
            iana = response.integrated_response_analytic(scan, band, pk.k_center)
            rows.append((sigma, pk.k_center, inum, iana, inum - iana))
    header = ["sigma", "k_c", "i_numeric", "i_analytic", "deviation"]
    path = f"{out_prefix}_integrated.csv"
    write_csv(path, cfg, header, rows)
    return path


def run_validate(cfg: dict, out_prefix: str):
    model = _model(cfg)
    pkt = cfg["packet"]
    br = cfg["broadening"]
    bp = response.BroadeningParams(eta=float(br["eta"]),
                                   eta_prime=float(br["eta_prime"]),
                                   T=float(br["T"]))
    defect = None
    try:
        results = checks.run_all(model, pkt["band"], float(pkt["k_c"]),
                                 _sigma_list(cfg)[0], float(pkt["x_c"]),
                                 bp, float(br["dt"]))
    except (DefectiveMatrix, DelocalizedState, PTBroken) as exc:
        defect = exc
        results = []
    report = {
        "backend": backend_name(),
        "config": cfg,
        "checks": [r.as_dict() for r in results],
        "passed": bool(results) and all(r.passed for r in results),
    }
    if defect is not None:
        report["defective"] = {
            "message": str(defect),
            "k": getattr(defect, "k", None),
        }
        report["passed"] = False
    path = f"{out_prefix}_validate.json"
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    text = json.dumps(report, indent=2, sort_keys=True, default=float)
    with open(path, "w") as fh:
        fh.write(text + "\n")
    print(text)
    if defect is not None:
        return EXIT_NUMERICAL
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


_RUNNERS = {
    "spectrum": run_spectrum,
    "geometry": run_geometry_scan,
    "spread": run_spread,
    "response": run_response_trace,
    "integrated": run_integrated,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nhgeo",
        description="Quantum geometry and response of non-Hermitian Bloch models",
    )
    parser.add_argument("subcommand",
                        choices=sorted(_RUNNERS) + ["validate"])
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None,
                        help="output path prefix (overrides config)")
    parser.add_argument("--threads", type=int, default=1,
                        help="kernel thread count (results are identical)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        set_num_threads(args.threads)
        cfg = load_config(args.config)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    prefix = args.out if args.out is not None else cfg["output"]
    try:
        if args.subcommand == "validate":
            return run_validate(cfg, prefix)
        path = _RUNNERS[args.subcommand](cfg, prefix)
    except (DefectiveMatrix, DelocalizedState, PTBroken) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
