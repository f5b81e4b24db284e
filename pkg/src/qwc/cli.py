"""Command-line entry point: ``qwc <command> --config run.json``.

Exit codes: 0 success, 2 configuration error, 3 simulation-validity error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

from . import __version__, analysis, perturb
from .core import build_waveform, read_columns, save_waveform_csv, write_columns
from .design import (
    apply_dechirp,
    converted_field,
    design_dechirp,
    envelope_mismatch,
    spectral_mismatch,
    target_gaussian,
)
from .errors import QWCError, ResolutionError, SimulationInvalidError
from .materials import SellmeierSet, group_params
from .propagate import run_transfer

EXIT_OK, EXIT_CONFIG, EXIT_INVALID = 0, 2, 3
COMMANDS = ("design", "dechirp", "simulate", "error", "sweep-u", "sweep-compression", "fit", "material", "convert")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; the manifest echoes it so a rerun reproduces the outputs."""

    case: analysis.CaseConfig = field(default_factory=analysis.CaseConfig)
    u: float = 0.013
    compressions: tuple = (25.0, 50.0, 100.0, 200.0)
    dechirp_mode: str = "numeric"
    fit_input: str = ""
    material: str = "linbo3"
    material_files: tuple = ()
    lambda_in: float = 780.0
    lambda_out: float = 1550.0
    axes: tuple = ("e", "e", "e")
    omega: float = 0.0
    length: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["case"] = self.case.to_dict()
        for k in ("compressions", "material_files", "axes"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        names = {f.name for f in fields(cls)}
        case_names = {f.name for f in fields(analysis.CaseConfig)}
        case = dict(d.pop("case", {}))
        # flat keys belonging to the case are accepted too
        for k in list(d):
            if k in case_names and k not in names:
                case[k] = d.pop(k)
        unknown = set(d) - names
        if unknown:
            raise analysis.ConfigurationError(f"unknown config keys {sorted(unknown)}")
        for k in ("compressions", "material_files", "axes"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(case=analysis.CaseConfig.from_dict(case), **d)

    def validate(self) -> None:
        self.case.grid()
        self.case.stats()
        if any(not c > 0 for c in self.compressions):
            raise analysis.ConfigurationError("compressions must be > 0")
        if self.dechirp_mode not in ("numeric", "closed-form"):
            raise analysis.ConfigurationError(f"unknown dechirp_mode {self.dechirp_mode!r}")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None, overrides: dict) -> RunConfig:
    raw: dict = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise analysis.ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if "config" in raw and "command" in raw:  # a previous run's manifest
            raw = raw["config"]
    raw = json.loads(json.dumps(raw))
    case = raw.setdefault("case", {})
    case_names = {f.name for f in fields(analysis.CaseConfig)}
    for k, v in overrides.items():
        if k in case_names:
            case[k] = v
            raw.pop(k, None)
        else:
            raw[k] = v
    return RunConfig.from_dict(raw)


class _Run:
    def __init__(self, command: str, cfg: RunConfig, out: Path):
        self.command, self.cfg, self.out = command, cfg, out
        self.outputs: list[str] = []
        self.report: dict = {}
        self.t0 = time.perf_counter()
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "tool": "qwc",
            "version": __version__,
            "config": self.cfg.to_dict(),
            "outputs": self.outputs,
            "report": self.report,
            "timings": {"wall_s": time.perf_counter() - self.t0},
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, allow_nan=True) + "\n")
        print(json.dumps(self.report, indent=2))


def _design(run: _Run):
    cfg = run.cfg
    setup = analysis.setup_case(cfg.case)
    c = cfg.case
    target = build_waveform(target_gaussian(c.tau, c.compression), setup.input.grid)
    save_waveform_csv(setup.input, run.path("input.csv"))
    setup.chirp.to_csv(run.path("chirp.csv"))
    run.report["spectral_mismatch"] = spectral_mismatch(setup.input, setup.chirp, target)
    return setup, target


def _dechirp(run: _Run, setup, target, field_in=None):
    gamma = design_dechirp(setup.input, setup.chirp, mode=run.cfg.dechirp_mode)
    gamma.to_csv(run.path("dechirp.csv"))
    field_in = converted_field(setup.input, setup.chirp) if field_in is None else field_in
    out = apply_dechirp(field_in, gamma)
    save_waveform_csv(out, run.path("dechirped.csv"))
    run.report["envelope_mismatch"] = envelope_mismatch(out, target)


def _simulate(run: _Run, setup):
    u = run.cfg.u
    disp, ecfg, _ = analysis.case_models(setup, u)
    res = run_transfer(setup.input, ecfg, disp, n_steps=run.cfg.case.n_steps)
    save_waveform_csv(res.a2_final, run.path("a2_final.csv"))
    fid = analysis.overlap_fidelity(setup.input, setup.chirp, res.a2_final, setup.stats)
    run.report.update(u=u, fidelity=fid, error_sim=1 - fid, norm_drift=res.norm_drift)
    return res


def _error(run: _Run, setup):
    u = run.cfg.u
    disp, ecfg, delta = analysis.case_models(setup, u)
    rep = perturb.perturbative_error(setup.input, setup.chirp, delta, disp, ecfg, setup.stats, warn=False)
    run.report.update(u=u, **{f"pert_{k}": v for k, v in rep.to_dict().items()})


def _panel_pair(ratio: float) -> tuple[str, str]:
    return ("c", "d") if math.isclose(ratio, -1.0) else ("a", "b")


def _check_rows(rows) -> int:
    bad = [r for r in rows if r.status != "ok"]
    for r in bad:
        print(f"u={r.u} compression={r.compression}: {r.status}", file=sys.stderr)
    return EXIT_INVALID if bad else EXIT_OK


def cmd_sweep_u(run: _Run) -> int:
    rows = analysis.sweep_error_vs_u(run.cfg.case)
    analysis.write_rows_csv(rows, run.path("sweep_u.csv"))
    panel = _panel_pair(run.cfg.case.ratio)[0]
    write_columns(
        run.path(f"{panel}.csv"),
        ("u", "error_sim", "error_pert"),
        ([r.u for r in rows], [r.error_sim for r in rows], [r.error_pert for r in rows]),
    )
    run.report["rows"] = [r.to_dict() for r in rows]
    try:
        fit = analysis.fit_u_err(rows)
        run.report.update(u_err_fit=fit.u_err_fit, residual=fit.residual)
    except QWCError as exc:
        run.report["fit"] = str(exc)
    return _check_rows(rows)


def cmd_sweep_compression(run: _Run) -> int:
    pts = analysis.sweep_u_err_vs_compression(run.cfg.case, run.cfg.compressions)
    rows = [r for p in pts for r in p.rows]
    analysis.write_rows_csv(rows, run.path("sweep_rows.csv"))
    panel = _panel_pair(run.cfg.case.ratio)[1]
    analysis.write_compression_csv(pts, run.path(f"{panel}.csv"))
    run.report["points"] = [
        {"compression": p.compression, "u_err_fit": p.u_err_fit, "u_err_pert": p.u_err_pert, "residual": p.residual}
        for p in pts
    ]
    return _check_rows(rows)


def fixture_path() -> Path:
    return Path(str(resources.files("qwc") / "data" / "fit_fixture.csv"))


def cmd_fit(run: _Run) -> int:
    src = run.cfg.fit_input or str(fixture_path())
    cols = read_columns(src)
    n = len(cols["u"])
    rows = [
        analysis.SweepRow(
            float(cols.get("compression", [math.nan] * n)[i]),
            float(cols["u"][i]),
            float(cols["error_sim"][i]),
            float(cols.get("error_pert", [math.nan] * n)[i]),
            0,
            0,
        )
        for i in range(n)
    ]
    fit = analysis.fit_u_err(rows)
    write_columns(run.path("fit.csv"), ("u_err_fit", "residual", "n_used"), ([fit.u_err_fit], [fit.residual], [fit.n_used]))
    run.report.update(input=src, u_err_fit=fit.u_err_fit, residual=fit.residual, n_used=fit.n_used)
    return EXIT_OK


def cmd_material(run: _Run) -> int:
    cfg = run.cfg
    s = SellmeierSet.from_files(*cfg.material_files) if cfg.material_files else SellmeierSet.bundled(cfg.material)
    trip = group_params(
        s, cfg.lambda_in, cfg.lambda_out, axes=cfg.axes, omega=cfg.omega or None, length=cfg.length or None
    )
    d = trip.to_dict()
    write_columns(
        run.path("material.csv"),
        ("lambda_nm", "v_group", "beta"),
        (list(trip.lambdas_nm), list(trip.v_groups), list(trip.betas)),
    )
    run.report.update(material=s.material, **d)
    return EXIT_OK


def dispatch(command: str, run: _Run) -> int:
    if command == "sweep-u":
        return cmd_sweep_u(run)
    if command == "sweep-compression":
        return cmd_sweep_compression(run)
    if command == "fit":
        return cmd_fit(run)
    if command == "material":
        return cmd_material(run)
    setup, target = _design(run)
    if command == "design":
        return EXIT_OK
    if command == "dechirp":
        _dechirp(run, setup, target)
    elif command == "simulate":
        _simulate(run, setup)
    elif command == "error":
        _error(run, setup)
    elif command == "convert":
        res = _simulate(run, setup)
        _error(run, setup)
        # undo the -1 of the ideal swap so the dechirped pulse is upright
        _dechirp(run, setup, target, field_in=res.a2_final.with_samples(-res.a2_final.samples))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwc", description="Chirped-escort frequency conversion toolkit.")
    p.add_argument("--version", action="version", version=f"qwc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON run config (or a previous manifest.json)")
        s.add_argument("--out", default=f"runs/{name}", help="output directory")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config scalar")
        s.add_argument("--jobs", type=int, help="parallel workers (default: QWC_JOBS or all cores)")
        s.add_argument("--dry-run", action="store_true", help="validate the config and exit")
        s.add_argument("--u", type=float)
        s.add_argument("--compression", type=float)
        s.add_argument("--ratio", type=float)
        s.add_argument("--n-points", type=int)
        s.add_argument("--n-steps", type=int)
        s.add_argument("--input", dest="fit_input", help="rows CSV for fit")
    return p


def _overrides(ns) -> dict:
    ov = {}
    for item in ns.set:
        if "=" not in item:
            raise analysis.ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        ov[k.strip()] = _parse_value(v)
    for flag in ("u", "compression", "ratio", "n_points", "n_steps", "jobs", "fit_input"):
        val = getattr(ns, flag)
        if val is not None:
            ov[flag] = val
    return ov


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(ns.config, _overrides(ns))
        cfg.validate()
        if ns.dry_run:
            print(json.dumps({"command": ns.command, "config": cfg.to_dict(), "valid": True}, indent=2))
            return EXIT_OK
        run = _Run(ns.command, cfg, Path(ns.out))
        code = dispatch(ns.command, run)
        run.finish()
        return code
    except (SimulationInvalidError, ResolutionError) as exc:
        print(f"qwc: simulation invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (QWCError, ValueError, KeyError, TypeError) as exc:
        print(f"qwc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
