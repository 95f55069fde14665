"""Batch front end: config ingestion, subcommand dispatch, CSV/JSON output.

Subcommands
-----------
chern                 equilibrium quantization report (marker vs plaquette oracle)
neass-sweep           excess-current / defect scaling experiment, CSV output
selftest              seeded randomized invariance suite
liouvillian-selftest  inverse-Liouvillian identities and route cross-validation

Exit codes: 0 success, 2 invalid configuration, 3 numerical criterion failed.
Every run writes ``resolved_config.json`` into the output directory; re-running
with that manifest reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import NeassError
from .fiber import set_derivative_scheme
from .lattice import KGrid
from .models import (
    HoppingModel,
    build_hamiltonian,
    fermi_projection,
    flat,
    haldane,
    hofstadter,
    hopping_model_from_text,
    qwz,
)
from .lattice import square_lattice
from .diagnostics import run_liouvillian_suite, run_neass_suite, run_property_suite
from .response import (
    chern_number_fhs,
    hall_conductivity,
    residual_scaling_sweep,
    write_fits_csv,
    write_records_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

QUANTIZATION_TOL = 1e-6
SLOPE_MARGIN = 0.7
R2_FLOOR = 0.98

MODEL_PARAMS = {
    "qwz": {"u"},
    "haldane": {"t1", "t2", "phi", "mass"},
    "hofstadter": {"p", "q"},
    "flat": set(),
    "file": {"path"},
}


@dataclass
class RunConfig:
    model: str = "qwz"
    params: dict = field(default_factory=lambda: {"u": 1.0})
    mu: float = 0.0
    n1: int = 48
    n2: int = 48
    n_max: int = 3
    epsilons: list | None = None  # explicit list wins over the log range below
    eps_min: float = 1e-2
    eps_max: float = 10 ** -0.5
    eps_points: int = 8
    contour_nodes: int = 128
    outdir: str = "neass_out"
    seed: int = 0
    derivative: str = "fft"
    diagonal_gauge: str = "zero"


class ConfigError(ValueError):
    pass


def validate_config(cfg: RunConfig) -> None:
    if cfg.model not in MODEL_PARAMS:
        raise ConfigError(f"unknown model {cfg.model!r}; choose from {sorted(MODEL_PARAMS)}")
    unknown = set(cfg.params) - MODEL_PARAMS[cfg.model]
    if unknown:
        raise ConfigError(f"unknown parameters {sorted(unknown)} for model {cfg.model!r}")
    for label, n in (("n1", cfg.n1), ("n2", cfg.n2)):
        if not isinstance(n, int) or n < 2:
            raise ConfigError(f"{label} must be an integer >= 2, got {n!r}")
    if not isinstance(cfg.n_max, int) or cfg.n_max < 0:
        raise ConfigError(f"n_max must be a nonnegative integer, got {cfg.n_max!r}")
    if cfg.epsilons is not None:
        if len(cfg.epsilons) < 4:
            raise ConfigError("need at least 4 epsilon values")
        if any(not (0.0 < e <= 1.0) for e in cfg.epsilons):
            raise ConfigError("epsilon values must lie in (0, 1]")
    else:
        if not (0.0 < cfg.eps_min < cfg.eps_max <= 1.0):
            raise ConfigError("need 0 < eps_min < eps_max <= 1")
        if cfg.eps_points < 4:
            raise ConfigError("need at least 4 epsilon points")
    if cfg.contour_nodes < 4:
        raise ConfigError("contour_nodes must be >= 4")
    if cfg.derivative not in ("fft", "fd"):
        raise ConfigError(f"derivative must be 'fft' or 'fd', got {cfg.derivative!r}")
    if cfg.diagonal_gauge != "zero":
        raise ConfigError("only the 'zero' diagonal gauge is available from the CLI")
    if not isinstance(cfg.seed, int):
        raise ConfigError(f"seed must be an integer, got {cfg.seed!r}")


def resolve_model(cfg: RunConfig) -> HoppingModel:
    p = cfg.params
    if cfg.model == "qwz":
        return qwz(float(p.get("u", 1.0)), mu=cfg.mu)
    if cfg.model == "haldane":
        return haldane(
            t1=float(p.get("t1", 1.0)),
            t2=float(p.get("t2", 0.1)),
            phi=float(p.get("phi", np.pi / 2)),
            m_onsite=float(p.get("mass", 0.0)),
            mu=cfg.mu,
        )
    if cfg.model == "hofstadter":
        if "p" not in p or "q" not in p:
            raise ConfigError("hofstadter needs integer parameters p and q")
        return hofstadter(int(p["p"]), int(p["q"]), mu=cfg.mu)
    if cfg.model == "flat":
        return flat(mu=cfg.mu)
    if cfg.model == "file":
        if "path" not in p:
            raise ConfigError("model 'file' needs a 'path' parameter")
        return hopping_model_from_text(p["path"], square_lattice(), mu=cfg.mu)
    raise ConfigError(f"unknown model {cfg.model!r}")


def resolve_epsilons(cfg: RunConfig) -> np.ndarray:
    if cfg.epsilons is not None:
        return np.asarray([float(e) for e in cfg.epsilons])
    return np.logspace(np.log10(cfg.eps_min), np.log10(cfg.eps_max), cfg.eps_points)


def _write_manifest(cfg: RunConfig, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "resolved_config.json", "w") as fh:
        json.dump(asdict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit_error(exc: Exception) -> None:
    payload = {
        "error": type(exc).__name__,
        "module": type(exc).__module__,
        "message": str(exc),
    }
    print(json.dumps(payload), file=sys.stderr)


# -- subcommands ---------------------------------------------------------------


def cmd_chern(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    grid = KGrid(model.lattice, cfg.n1, cfg.n2)
    h = build_hamiltonian(model, grid)
    p0, gap = fermi_projection(h, model.mu)
    sigma = hall_conductivity(p0)
    oracle = chern_number_fhs(p0)
    deviation = abs(2.0 * np.pi * sigma - oracle)
    passed = deviation < QUANTIZATION_TOL
    outdir = Path(cfg.outdir)
    _write_manifest(cfg, outdir)
    report = {
        "model": model.name,
        "grid": [cfg.n1, cfg.n2],
        "rank": gap.rank,
        "gap_lower": gap.gap_lower,
        "gap_upper": gap.gap_upper,
        "gap_width": gap.gap_width,
        "sigma_hall": sigma,
        "two_pi_sigma_hall": 2.0 * np.pi * sigma,
        "chern_fhs": oracle,
        "quantization_deviation": deviation,
        "quantization_tol": QUANTIZATION_TOL,
        "passed": passed,
    }
    with open(outdir / "chern_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"model           : {model.name}")
    print(f"grid            : {cfg.n1} x {cfg.n2}")
    print(f"occupied rank   : {gap.rank}")
    print(f"gap             : [{gap.gap_lower:.6g}, {gap.gap_upper:.6g}] width {gap.gap_width:.6g}")
    print(f"sigma_hall      : {sigma!r}")
    print(f"2*pi*sigma_hall : {2.0 * np.pi * sigma!r}")
    print(f"plaquette oracle: {oracle}")
    print(f"quantization    : |2*pi*sigma - C| = {deviation:.3e} "
          f"(tol {QUANTIZATION_TOL:g}) -> {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_NUMERICAL


def cmd_neass_sweep(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    grid = KGrid(model.lattice, cfg.n1, cfg.n2)
    epsilons = resolve_epsilons(cfg)
    records, fits = residual_scaling_sweep(model, grid, cfg.n_max, epsilons)
    outdir = Path(cfg.outdir)
    _write_manifest(cfg, outdir)
    write_records_csv(records, outdir / "records.csv")
    write_fits_csv(fits, outdir / "fits.csv", quantity="residual")
    write_fits_csv(fits, outdir / "defect_fits.csv", quantity="defect")
    all_ok = True
    for fit in fits:
        wanted = fit.order + SLOPE_MARGIN
        if fit.degenerate:
            verdict = "DEGENERATE (at noise floor)"
        else:
            ok = fit.slope >= wanted and fit.r_squared >= R2_FLOOR
            all_ok &= ok
            verdict = "PASS" if ok else "FAIL"
        print(f"{fit.quantity:>8} n={fit.order}: slope={fit.slope:.3f} "
              f"r2={fit.r_squared:.5f} points={fit.n_points} "
              f"(need slope >= {wanted:.1f}, r2 >= {R2_FLOOR}) -> {verdict}")
    print(f"wrote {outdir / 'records.csv'}")
    return EXIT_OK if all_ok else EXIT_NUMERICAL


def _report_properties(results, seed: int | None = None) -> int:
    if seed is not None:
        print(f"seed: {seed}")
    failures = []
    for i, res in enumerate(results, start=1):
        status = "PASS" if res.passed else "FAIL"
        extra = f"  [{res.detail}]" if res.detail else ""
        print(f"[{i:2d}/{len(results)}] {res.name:<28} worst={res.worst:.3e} "
              f"bound={res.bound:g}  {status}{extra}")
        if not res.passed:
            failures.append(res.name)
    if failures:
        print(f"FAILED properties: {', '.join(failures)}"
              + (f" (seed {seed})" if seed is not None else ""))
        return EXIT_NUMERICAL
    print(f"all {len(results)} properties passed")
    return EXIT_OK


def cmd_selftest(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    grid = KGrid(model.lattice, cfg.n1, cfg.n2)
    _write_manifest(cfg, Path(cfg.outdir))
    results = run_property_suite(model, grid, seed=cfg.seed)
    results += run_liouvillian_suite(model, grid, seed=cfg.seed,
                                     contour_nodes=cfg.contour_nodes)
    results += run_neass_suite(model, grid, n_max=min(cfg.n_max, 3) or 1)
    return _report_properties(results, seed=cfg.seed)


def cmd_liouvillian_selftest(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    grid = KGrid(model.lattice, cfg.n1, cfg.n2)
    _write_manifest(cfg, Path(cfg.outdir))
    results = run_liouvillian_suite(model, grid, seed=cfg.seed,
                                    contour_nodes=cfg.contour_nodes)
    return _report_properties(results, seed=cfg.seed)


# -- argument plumbing -----------------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neass",
        description="Almost-stationary states and all-orders Hall response "
                    "for gapped tight-binding models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("chern", "neass-sweep", "selftest", "liouvillian-selftest"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--model", choices=sorted(MODEL_PARAMS))
        p.add_argument("--param", action="append", default=[],
                       metavar="KEY=VALUE", help="model parameter, repeatable")
        p.add_argument("--mu", type=float)
        p.add_argument("--n1", type=int)
        p.add_argument("--n2", type=int)
        p.add_argument("--n-max", type=int, dest="n_max")
        p.add_argument("--epsilons", help="comma-separated explicit epsilon list")
        p.add_argument("--eps-min", type=float, dest="eps_min")
        p.add_argument("--eps-max", type=float, dest="eps_max")
        p.add_argument("--eps-points", type=int, dest="eps_points")
        p.add_argument("--contour-nodes", type=int, dest="contour_nodes")
        p.add_argument("--outdir")
        p.add_argument("--seed", type=int)
        p.add_argument("--derivative", choices=("fft", "fd"))
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        known = set(cfg.__dataclass_fields__)
        unknown = set(loaded) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        for key, value in loaded.items():
            setattr(cfg, key, value)
    overrides = {}
    for key in ("model", "mu", "n1", "n2", "n_max", "eps_min", "eps_max",
                "eps_points", "contour_nodes", "outdir", "seed", "derivative"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    for key, value in overrides.items():
        setattr(cfg, key, value)
    if args.epsilons is not None:
        cfg.epsilons = [float(tok) for tok in args.epsilons.split(",") if tok]
    if args.model is not None and not args.config:
        cfg.params = {}
    for item in args.param:
        if "=" not in item:
            raise ConfigError(f"--param needs KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        cfg.params[key] = _parse_value(value)
    return cfg


COMMANDS = {
    "chern": cmd_chern,
    "neass-sweep": cmd_neass_sweep,
    "selftest": cmd_selftest,
    "liouvillian-selftest": cmd_liouvillian_selftest,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        validate_config(cfg)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        _emit_error(exc)
        return EXIT_VALIDATION
    previous_scheme = set_derivative_scheme(cfg.derivative)
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        _emit_error(exc)
        return EXIT_VALIDATION
    except NeassError as exc:
        _emit_error(exc)
        return EXIT_NUMERICAL
    finally:
        set_derivative_scheme(previous_scheme)


if __name__ == "__main__":
    sys.exit(main())
