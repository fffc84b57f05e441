"""Command-line runner: ``python -m dirac2d <command> [--config FILE] [--set key=value] ...``.

Exit status: 0 success, 1 completed with numeric warnings, 2 error.  A
``manifest.json`` echoing the resolved configuration is written in every case
once the output directory is known.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import COMMANDS, ExperimentConfig, build_config, parse_text
from .errors import DiracError, SchemaError

EXIT_OK, EXIT_WARNING, EXIT_ERROR = 0, 1, 2

# flag name -> config key
FLAG_KEYS = {
    "m": "model.m",
    "gamma": "model.gamma",
    "Gamma2": "model.Gamma2",
    "Gamma3": "model.Gamma3",
    "v1": "model.v1",
    "L": "numerics.L",
    "boundary": "numerics.boundary",
    "M": "numerics.M",
    "grid_N": "numerics.grid_N",
    "seed": "numerics.seed",
    "out": "output.dir",
    "formats": "output.formats",
    "series": "input.series",
}


class RunContext:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = config.output_dir()
        self.outputs: list[str] = []
        self.warnings: list[str] = []

    @property
    def formats(self) -> list[str]:
        return self.config["output.formats"]

    def write_json(self, name: str, payload) -> None:
        path = self.out / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
        self.outputs.append(name)

    def track(self, name: str) -> None:
        self.outputs.append(name)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def build_potential(config: ExperimentConfig):
    from .lattice import Potential, TableComponent, ZERO, PowerDecay, load_potential

    if config["model.potential_file"]:
        return load_potential(config["model.potential_file"])
    parts = config["model.v1"].split(":")
    if parts[0] == "impulse":
        v1 = TableComponent({(0, 0): float(parts[1]) if len(parts) > 1 else 1.0})
    elif parts[0] == "power":
        v1 = PowerDecay(float(parts[1]), float(parts[2]))
    else:
        v1 = ZERO
    return Potential.power_decay(config["model.Gamma2"], config["model.Gamma3"], config["model.gamma"], v1=v1)


def _series_meta(config: ExperimentConfig, series) -> None:
    series.meta.update({"gamma": config["model.gamma"], "Gamma2": config["model.Gamma2"],
                        "Gamma3": config["model.Gamma3"]})


def _write_series(ctx: RunContext, series, stem: str) -> None:
    from .io import export_series

    for fmt in ctx.formats:
        name = f"{stem}.{fmt}"
        export_series(series, ctx.out / name, fmt)
        ctx.track(name)


def cmd_bands(ctx: RunContext) -> None:
    from .fiber import export_bands

    export_bands(ctx.out / "bands.csv", ctx.config["model.m"], ctx.config["numerics.grid_N"])
    ctx.track("bands.csv")


def cmd_thresholds(ctx: RunContext) -> None:
    from .fiber import classify_thresholds

    found = classify_thresholds(ctx.config["model.m"])
    ctx.write_json("thresholds.json", {"m": ctx.config["model.m"],
                                       "thresholds": [{"value": t.value, "kind": t.kind} for t in found]})


def cmd_flatband(ctx: RunContext) -> None:
    from .counting import flat_band_multiplicity
    from .lattice import build_lattice

    rows = []
    for L in ctx.config["numerics.L"]:
        box = build_lattice(L, ctx.config["numerics.boundary"])
        rows.append({"L": L, "boundary": box.boundary, "multiplicity": flat_band_multiplicity(box, ctx.config["model.m"])})
    ctx.write_json("flatband.json", {"m": ctx.config["model.m"], "rows": rows})


def _lambda_grid(config: ExperimentConfig) -> np.ndarray:
    from .counting import gap_grid

    if config["numerics.lambda_grid"]:
        return np.array(config["numerics.lambda_grid"], dtype=float)
    return gap_grid(config["model.m"], config["numerics.lambda0"], config["numerics.lambda_floor"])


def _count_series(ctx: RunContext):
    from .counting import counting_series
    from .lattice import build_lattice

    cfg = ctx.config
    pot = build_potential(cfg)
    grid = _lambda_grid(cfg)
    out = []
    for L in cfg["numerics.L"]:
        box = build_lattice(L, cfg["numerics.boundary"])
        series = counting_series(box, cfg["model.m"], pot, cfg["model.sign"], grid)
        _series_meta(cfg, series)
        out.append((L, series))
    return out


def cmd_count(ctx: RunContext) -> None:
    for L, series in _count_series(ctx):
        _write_series(ctx, series, f"count_L{L}")


def cmd_ssf(ctx: RunContext) -> None:
    from .counting import finite_volume_ssf
    from .lattice import build_lattice

    cfg = ctx.config
    pot = build_potential(cfg)
    grid = _lambda_grid(cfg)
    for L in cfg["numerics.L"]:
        box = build_lattice(L, cfg["numerics.boundary"])
        series = finite_volume_ssf(box, cfg["model.m"], pot, cfg["model.sign"], grid)
        _series_meta(cfg, series)
        _write_series(ctx, series, f"ssf_L{L}")


def cmd_fit(ctx: RunContext) -> None:
    from .counting import fit_power_law, validity_floor
    from .io import load_series
    from .level_sets import asymptotic_constant_C

    cfg = ctx.config
    gamma = cfg["model.gamma"]
    predicted_c = float(asymptotic_constant_C(gamma, cfg["model.Gamma2"], cfg["model.Gamma3"], cfg["numerics.nodes"]))
    reports = []
    if cfg["input.series"]:
        series = load_series(cfg["input.series"])
        fit = fit_power_law(series, -cfg["model.m"])
        reports.append({"source": cfg["input.series"], **fit.report(2 / gamma, predicted_c)})
    else:
        for L, series in _count_series(ctx):
            _write_series(ctx, series, f"count_L{L}")
            rule = cfg["numerics.floor_rule"]
            floor = validity_floor(L, rule, max(cfg["model.Gamma2"], cfg["model.Gamma3"]), gamma)
            fit = fit_power_law(series, -cfg["model.m"], floor, rule)
            reports.append({"L": L, **fit.report(2 / gamma, predicted_c)})
    for r in reports:
        if abs(r["exponent"] - 2 / gamma) > 0.15 * (2 / gamma):
            ctx.warnings.append(f"fitted exponent {r['exponent']:.4f} differs from 2/gamma by more than 15%")
    ctx.write_json("fit.json", {"fits": reports})


def cmd_constant(ctx: RunContext) -> None:
    from .level_sets import asymptotic_constant_C, constant_convergence, export_convergence

    cfg = ctx.config
    val = asymptotic_constant_C(cfg["model.gamma"], cfg["model.Gamma2"], cfg["model.Gamma3"], cfg["numerics.nodes"])
    if val.error_estimate > 1e-8:
        ctx.warnings.append(f"quadrature error estimate {val.error_estimate:.2e} above 1e-8")
    ctx.write_json("constant.json", {"C": float(val), "error_estimate": val.error_estimate,
                                     "n_evaluations": val.n_evaluations})
    if "csv" in ctx.formats:
        rows = constant_convergence(cfg["model.gamma"], cfg["model.Gamma2"], cfg["model.Gamma3"])
        export_convergence(ctx.out / "constant_convergence.csv", rows)
        ctx.track("constant_convergence.csv")


def cmd_toroidal(ctx: RunContext) -> None:
    from .toroidal import DiscreteSymbol, ToroidalComponent, dirac_model_B, verify_scaled_counts

    cfg = ctx.config
    N = cfg["numerics.grid_N"]
    need = 8 * max(cfg["numerics.M"]) + 4
    if N < need:
        raise DiracError(f"numerics.grid_N = {N} too small for M = {max(cfg['numerics.M'])}; need >= {need}")
    B1, B2 = dirac_model_B(N)
    comps = [ToroidalComponent(DiscreteSymbol.power_decay(cfg["model.Gamma2"], cfg["model.gamma"]), B1),
             ToroidalComponent(DiscreteSymbol.power_decay(cfg["model.Gamma3"], cfg["model.gamma"]), B2)]
    report = verify_scaled_counts(comps, cfg["numerics.M"])
    if not report.trend_nonincreasing:
        ctx.warnings.append("deviation from the target constant increased with M")
    ctx.write_json("toroidal.json", report.to_json())


def cmd_validate(ctx: RunContext) -> None:
    """Seeded self-checks: Floquet identity and inertia against dense counts."""
    from .fiber import band_values
    from .inertia import dense_count, inertia_count
    from .lattice import Potential, assemble_hamiltonian, build_lattice, momentum_grid

    cfg = ctx.config
    rng = np.random.default_rng(cfg["numerics.seed"])
    checks = []
    L = 6
    box = build_lattice(L, "periodic")
    m = cfg["model.m"]
    H = assemble_hamiltonian(box, m).toarray()
    z = band_values(momentum_grid(L), m)
    expected = np.sort(np.concatenate([z.z_minus, z.z_zero, z.z_plus]))
    dev = float(np.abs(np.sort(np.linalg.eigvalsh(H)) - expected).max())
    checks.append({"check": "floquet", "max_deviation": dev, "ok": dev <= 1e-10})
    for i in range(cfg["numerics.samples"]):
        box = build_lattice(int(rng.integers(3, 9)), str(rng.choice(["open", "periodic"])))
        pot = Potential.power_decay(float(rng.uniform(0, 2)), float(rng.uniform(0, 2)), 4.0)
        Hs = assemble_hamiltonian(box, m, pot, int(rng.choice([-1, 1])))
        lam = float(rng.uniform(-3.5, 3.5))
        a, b = inertia_count(Hs, lam), dense_count(Hs, lam)
        checks.append({"check": f"inertia_{i}", "inertia": a, "dense": b, "ok": a == b})
    if not all(c["ok"] for c in checks):
        ctx.warnings.append("some validation checks failed")
    ctx.write_json("validate.json", {"checks": checks})


HANDLERS = {
    "bands": cmd_bands,
    "thresholds": cmd_thresholds,
    "flatband": cmd_flatband,
    "count": cmd_count,
    "ssf": cmd_ssf,
    "fit": cmd_fit,
    "constant": cmd_constant,
    "toroidal": cmd_toroidal,
    "validate": cmd_validate,
}


def write_manifest(out: Path, resolved: dict, status: str, outputs: Sequence[str],
                   warnings: Sequence[str], error: Optional[str]) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    payload = {"version": __version__, "config": resolved, "status": status, "outputs": list(outputs),
               "warnings": list(warnings), "error": error}
    path = out / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def run_experiment(config: ExperimentConfig) -> int:
    ctx = RunContext(config)
    ctx.out.mkdir(parents=True, exist_ok=True)
    error = None
    try:
        HANDLERS[config.command](ctx)
    except (DiracError, ArithmeticError, OSError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    status = "error" if error else ("warning" if ctx.warnings else "ok")
    write_manifest(ctx.out, config.resolved(), status, ctx.outputs, ctx.warnings, error)
    if error:
        print(error, file=sys.stderr)
        return EXIT_ERROR
    return EXIT_WARNING if ctx.warnings else EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirac2d", description="Flat-band and spectral-shift experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any configuration key (repeatable)")
        for flag in FLAG_KEYS:
            p.add_argument(f"--{flag}", dest=flag, default=None, help=f"sets {FLAG_KEYS[flag]}")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    raw = parse_text(args.config.read_text()) if args.config else {}
    overrides = {"command": args.command}
    for item in args.set:
        if "=" not in item:
            print(f"--set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_ERROR
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for flag, key in FLAG_KEYS.items():
        val = getattr(args, flag)
        if val is not None:
            overrides[key] = val
    try:
        config = build_config(raw, overrides)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        out = raw.get("output.dir", overrides.get("output.dir"))
        if out:
            write_manifest(Path(out), {**raw, **overrides}, "error", [], [], str(exc))
        return EXIT_ERROR
    return run_experiment(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
