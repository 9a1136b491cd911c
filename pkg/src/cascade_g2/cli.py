"""Command-line front end: figure presets, drive sweeps and deviation reports.

Every (preset, drive) pair produces one data file with a delay (or
frequency) column followed by numeric / analytic column pairs.  Each run also
writes ``deviation_report.<fmt>`` comparing the pairs.

Exit codes: 0 success, 1 quality violation under ``--strict``, 2 invalid
configuration, 3 solver failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import subprocess
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import analytic as A
from .correlations import DetectionError, SpectrumError, g2_batch, power_spectrum
from .lindblad import IntegrationError, SteadyStateError, SystemParams, steady_state

logger = logging.getLogger("cascade_g2")

EXIT_OK, EXIT_QUALITY, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4

PRESETS = ("spectrum", "bare-g2", "dressed-pp", "dressed-p0", "mixture", "sweep")
SWEEP_PRESETS = ("bare-g2", "dressed-pp", "dressed-p0", "mixture")
DEFAULT_DRIVES = {
    "spectrum": (0.05, 0.3),
    "bare-g2": (0.1,),
    "dressed-pp": (0.1,),
    "dressed-p0": (0.1,),
    # low / strong excitation; uncalibrated stand-ins for two laser powers
    "mixture": (0.1, 0.3),
    "sweep": (0.05, 0.1, 0.2, 0.3),
}
TAU_POINTS = 3001
OMEGA_POINTS = 60001
AGREEMENT_BOUND = 0.03


@dataclass
class RunConfig:
    preset: str
    drives: list = field(default_factory=list)
    delta: float = 3.0
    gamma_X: float = 0.001
    grid_min: Optional[float] = None
    grid_max: Optional[float] = None
    points: Optional[int] = None
    out_dir: str = "out"
    fmt: str = "csv"
    strict: bool = False
    method: str = "RK45"

    def check(self) -> None:
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        if not self.drives:
            raise ValueError("drive list is empty")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"unknown format {self.fmt!r}")
        if self.method not in ("RK45", "DOP853", "expm"):
            raise ValueError(f"unknown integration method {self.method!r}")
        for d in self.drives:
            self.params(d)  # raises on invalid physics
            if d == 0 and self.preset != "spectrum":
                raise ValueError("closed-form g2 curves need omega_L > 0")
        grid = self.grid()
        if grid.size < 2:
            raise ValueError("grid needs at least 2 points")
        if not grid[-1] > grid[0]:
            raise ValueError("grid max must exceed grid min")
        if self.preset != "spectrum" and grid[0] < 0:
            raise ValueError("delays must be >= 0")

    def params(self, drive: float) -> SystemParams:
        return SystemParams(drive, self.delta, self.gamma_X)

    def grid(self) -> np.ndarray:
        if self.preset == "spectrum":
            lo = -self.delta - 0.3 if self.grid_min is None else self.grid_min
            hi = self.delta + 0.3 if self.grid_max is None else self.grid_max
            n = OMEGA_POINTS if self.points is None else self.points
        else:
            lo = 0.0 if self.grid_min is None else self.grid_min
            hi = 6.0 / (2.0 * self.gamma_X) if self.grid_max is None else self.grid_max
            n = TAU_POINTS if self.points is None else self.points
        return np.linspace(lo, hi, int(n))


@dataclass
class CurveDeviation:
    preset: str
    omega_L: float
    curve: str
    max_rel_deviation: float
    l2_deviation: float
    tau_at_max: float
    adiabatic_valid: bool

    @property
    def violates(self) -> bool:
        return self.adiabatic_valid and self.max_rel_deviation > AGREEMENT_BOUND


@dataclass
class DeviationReport:
    entries: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [e for e in self.entries if e.violates]


def relative_deviation(numeric, analytic) -> np.ndarray:
    """Pointwise ``|num - ana| / max(|ana|, 1)``.

    g2 curves are normalized to 1 at long delays, so the floor keeps curves
    that start at zero from producing 0/0.
    """
    num = np.asarray(numeric, dtype=float)
    ana = np.asarray(analytic, dtype=float)
    return np.abs(num - ana) / np.maximum(np.abs(ana), 1.0)


def curve_deviation(preset, drive, curve, tau, numeric, analytic, adiabatic) -> CurveDeviation:
    rel = relative_deviation(numeric, analytic)
    k = int(np.argmax(rel))
    l2 = float(np.sqrt(np.mean((np.asarray(numeric) - np.asarray(analytic)) ** 2)))
    return CurveDeviation(preset, float(drive), curve, float(rel[k]), l2, float(tau[k]),
                          bool(adiabatic))


def validate(config: RunConfig) -> list[str]:
    """Warnings for drives outside ``omega_L <= delta / 3``; never fatal."""
    warnings = []
    for d in config.drives:
        if d > config.delta / 3.0:
            msg = (f"omega_L = {d:g} exceeds delta/3 = {config.delta / 3.0:g}; "
                   "closed forms are outside their adiabatic regime")
            logger.warning(msg)
            warnings.append(msg)
    return warnings


# (column label, literal sequence, closed form)
_G2_CURVES = {
    "bare-g2": [("BVVG", "BVVG", A.g2_bvvg), ("VGGB", "VGBV", A.g2_vggb)],
    "dressed-pp": [("+VV+", "+VV+", A.g2_plus_vv_plus), ("V++V", "V++V", A.g2_v_plus_plus_v)],
    "dressed-p0": [("+VV0", "+VV0", A.g2_bvvg), ("0VV+", "0VV+", A.g2_bvvg),
                   ("V0+V", "V0+V", A.g2_v_plus_zero_v)],
}
_MIX_FORWARD = ("+VV+", "0VV0", "+VV0", "0VV+")
_MIX_BACKWARD = ("V++V", "V00V", "V+0V", "V0+V")


def _g2_table(preset: str, params: SystemParams, tau: np.ndarray, method: str):
    rho_ss = steady_state(params)
    columns = {"tau_ps": tau}
    pairs = []
    if preset == "mixture":
        res = g2_batch(params, _MIX_FORWARD + _MIX_BACKWARD, tau, method=method, rho_ss=rho_ss)
        fwd = np.mean([res[s].values for s in _MIX_FORWARD], axis=0)
        bwd = np.mean([res[s].values for s in _MIX_BACKWARD], axis=0)
        for name, num, ana in (("EX_forward", fwd, A.g2_ex_forward(tau, params)),
                               ("EX_backward", bwd, A.g2_ex_backward(tau, params))):
            columns[f"g2_{name}_numeric"] = num
            columns[f"g2_{name}_analytic"] = ana
            pairs.append((name, num, ana))
        return columns, pairs
    curves = _G2_CURVES[preset]
    res = g2_batch(params, [seq for _, seq, _ in curves], tau, method=method, rho_ss=rho_ss)
    for label, seq, closed in curves:
        num = res[seq].values
        ana = closed(tau, params)
        columns[f"g2_{label}_numeric"] = num
        columns[f"g2_{label}_analytic"] = ana
        pairs.append((label, num, ana))
    return columns, pairs


def _spectrum_table(params: SystemParams, omega: np.ndarray):
    rho_ss = steady_state(params)
    columns = {"omega_per_ps": omega}
    for pol in ("both", "H", "V"):
        columns[f"S_{pol}_numeric"] = power_spectrum(params, pol, omega, rho_ss=rho_ss)
    return columns, []


@functools.lru_cache(maxsize=1)
def build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _meta(config: RunConfig, preset: str, drive: float) -> dict:
    p = config.params(drive)
    return {
        "preset": preset,
        "omega_L_per_ps": drive,
        "delta_per_ps": config.delta,
        "gamma_X_per_ps": config.gamma_X,
        "omega_eff_per_ps": p.omega_eff,
        "gamma_eff_per_ps": p.gamma_eff,
        "alpha": p.alpha,
        "adiabatic_valid": p.adiabatic_valid,
        "method": config.method,
        "units": "times in ps, rates and frequencies in 1/ps",
        "build": build_id(),
    }


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _write_table(path: Path, meta: dict, columns: dict, fmt: str) -> None:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    if fmt == "csv":
        lines = [f"# {k}: {meta[k]}" for k in sorted(meta)]
        lines.append(",".join(names))
        lines.extend(",".join(_fmt(v) for v in row) for row in data)
        path.write_text("\n".join(lines) + "\n")
    else:
        doc = {"meta": meta, "columns": names,
               "data": {n: [float(v) for v in data[:, i]] for i, n in enumerate(names)}}
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _write_report(path: Path, report: DeviationReport, fmt: str) -> None:
    rows = [asdict(e) for e in report.entries]
    if fmt == "json":
        path.write_text(json.dumps({"agreement_bound": AGREEMENT_BOUND, "build": build_id(),
                                    "curves": rows}, indent=1, sort_keys=True) + "\n")
        return
    keys = ["preset", "omega_L", "curve", "max_rel_deviation", "l2_deviation",
            "tau_at_max", "adiabatic_valid"]
    lines = [f"# agreement_bound: {AGREEMENT_BOUND}", f"# build: {build_id()}", ",".join(keys)]
    for r in rows:
        lines.append(",".join(_fmt(r[k]) if isinstance(r[k], float) else str(r[k]) for k in keys))
    path.write_text("\n".join(lines) + "\n")


def data_filename(preset: str, drive: float, fmt: str) -> str:
    return f"{preset}_omegaL{drive:g}.{fmt}"


def run(config: RunConfig) -> int:
    """Execute a configuration and write its files; returns the exit status."""
    try:
        config.check()
    except ValueError as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    validate(config)

    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        logger.error("cannot create output directory %s: %s", out, exc)
        return EXIT_IO

    presets = SWEEP_PRESETS if config.preset == "sweep" else (config.preset,)
    grid = config.grid()
    report = DeviationReport()
    try:
        for preset in presets:
            for drive in config.drives:
                params = config.params(drive)
                logger.info("%s at omega_L = %g", preset, drive)
                if preset == "spectrum":
                    columns, pairs = _spectrum_table(params, grid)
                else:
                    columns, pairs = _g2_table(preset, params, grid, config.method)
                for name, num, ana in pairs:
                    report.entries.append(curve_deviation(
                        preset, drive, name, grid, num, ana, params.adiabatic_valid))
                _write_table(out / data_filename(preset, drive, config.fmt),
                             _meta(config, preset, drive), columns, config.fmt)
        _write_report(out / f"deviation_report.{config.fmt}", report, config.fmt)
    except (IntegrationError, SteadyStateError, SpectrumError, DetectionError) as exc:
        logger.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except OSError as exc:
        logger.error("cannot write output: %s", exc)
        return EXIT_IO

    for v in report.violations:
        logger.warning("%s %s at omega_L = %g deviates by %.2f%% (bound %.0f%%)", v.preset,
                       v.curve, v.omega_L, 100 * v.max_rel_deviation, 100 * AGREEMENT_BOUND)
    if config.strict and report.violations:
        return EXIT_QUALITY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cascade-g2",
        description="Photon correlations of a two-photon driven biexciton cascade.")
    ap.add_argument("--preset", choices=PRESETS, required=True)
    ap.add_argument("--omega-l", dest="drives", type=float, action="append",
                    help="drive amplitude [1/ps]; repeat for several values")
    ap.add_argument("--delta", type=float, default=3.0, help="detuning [1/ps] (default 3.0)")
    ap.add_argument("--gamma-x", dest="gamma_X", type=float, default=0.001,
                    help="exciton radiative rate [1/ps] (default 0.001)")
    ap.add_argument("--tau-max", type=float, help="largest delay [ps] (default 6/Gamma)")
    ap.add_argument("--omega-min", type=float, help="spectrum grid start [1/ps]")
    ap.add_argument("--omega-max", type=float, help="spectrum grid end [1/ps]")
    ap.add_argument("--points", type=int, help="grid points")
    ap.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    ap.add_argument("--out", dest="out_dir", default="out", help="output directory")
    ap.add_argument("--method", choices=("RK45", "DOP853", "expm"), default="RK45")
    ap.add_argument("--strict", action="store_true",
                    help="exit 1 when an adiabatic-regime curve misses the 3%% bound")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    drives = args.drives if args.drives is not None else list(DEFAULT_DRIVES[args.preset])
    spectrum = args.preset == "spectrum"
    return RunConfig(
        preset=args.preset,
        drives=list(drives),
        delta=args.delta,
        gamma_X=args.gamma_X,
        grid_min=args.omega_min if spectrum else None,
        grid_max=args.omega_max if spectrum else args.tau_max,
        points=args.points,
        out_dir=args.out_dir,
        fmt=args.fmt,
        strict=args.strict,
        method=args.method,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
