"""Configuration parsing, the closed-loop driver, file output and the CLI.

Config files are flat key=value lines with '#' comments.  The driver runs the
feedback loop: reconstruct, pick the gain for this step, advance one SSP-RK3
step with the gain frozen, and record the certified quantities on the way.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    CONTROLLER_FIXED_MU,
    CONTROLLERS,
    ControlConfig,
    Grid,
    RiemannState,
    RunConfig,
    build_grid,
    density_flux,
)
from .control import ControlDecision, decide
from .cweno import reconstruct_all
from .lyapunov import LyapunovParams, WeightTable, build_weight_table, l2_norm_sq, lyapunov_value, scaled_lyapunov
from .scenarios import INITIAL_KINDS, SCENARIOS, initial_averages, make_scenario, prop1_threshold
from .solver import BlowUpError, cfl_dt, rhs, ssprk3_step

TIMESERIES_HEADER = "t,l2_sq,lyapunov,lyapunov_scaled,mu_hat,kappa_star,feasible"
SNAPSHOT_HEADER = "x,r_plus,r_minus,rho_dev,q_dev"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


class ConfigError(ValueError):
    """Invalid run configuration; message carries the offending line."""


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    l2_sq: float
    lyapunov: float
    lyapunov_scaled: float
    mu_hat: float
    kappa_star: float
    feasible: bool


@dataclass(frozen=True)
class Snapshot:
    t_requested: float
    t: float
    state: RiemannState


@dataclass(frozen=True)
class DecayReport:
    slope: float
    target_rate: float
    bound_violation_max: float
    stabilized: bool
    n_fit: int


# ---------------------------------------------------------------------------
# configuration


def _parse_float(value: str, lineno: int, key: str) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {key}={value!r} as a number") from None
    if not math.isfinite(out):
        raise ConfigError(f"line {lineno}: {key} must be finite, got {value!r}")
    return out


def _parse_int(value: str, lineno: int, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {key}={value!r} as an integer") from None


def parse_config(text: str) -> RunConfig:
    """Parse flat key=value text into a RunConfig with defaults."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = stripped.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        lines[key] = lineno

        if key == "scenario":
            if value not in SCENARIOS:
                raise ConfigError(f"line {lineno}: unknown scenario {value!r}, expected one of {SCENARIOS}")
            values[key] = value
        elif key == "initial":
            if value not in INITIAL_KINDS:
                raise ConfigError(f"line {lineno}: unknown initial data {value!r}, expected one of {INITIAL_KINDS}")
            values[key] = value
        elif key == "controller":
            if value not in CONTROLLERS:
                raise ConfigError(f"line {lineno}: unknown controller {value!r}, expected one of {CONTROLLERS}")
            values[key] = value
        elif key == "n":
            n = _parse_int(value, lineno, key)
            if n < 4:
                raise ConfigError(f"line {lineno}: n must be at least 4, got {n}")
            values[key] = n
        elif key == "output_every":
            oe = _parse_int(value, lineno, key)
            if oe < 1:
                raise ConfigError(f"line {lineno}: output_every must be at least 1, got {oe}")
            values[key] = oe
        elif key in ("l", "t_final", "mu", "mu_scan_max", "mu_scan_step", "bisect_tol"):
            x = _parse_float(value, lineno, key)
            if x <= 0.0:
                raise ConfigError(f"line {lineno}: {key} must be positive, got {value}")
            values[key] = x
        elif key == "cfl":
            x = _parse_float(value, lineno, key)
            if not 0.0 < x <= 1.0:
                raise ConfigError(f"line {lineno}: cfl must lie in (0, 1], got {value}")
            values[key] = x
        elif key == "kappa_max":
            x = _parse_float(value, lineno, key)
            if not 0.0 < x <= 1.0:
                raise ConfigError(f"line {lineno}: kappa_max must lie in (0, 1], got {value}")
            values[key] = x
        elif key == "mu_tilde":
            x = _parse_float(value, lineno, key)
            if x < 0.0:
                raise ConfigError(f"line {lineno}: mu_tilde must be nonnegative, got {value}")
            values[key] = x
        elif key == "snapshot_times":
            try:
                times = tuple(float(tok) for tok in value.split(",") if tok.strip())
            except ValueError:
                raise ConfigError(f"line {lineno}: cannot parse snapshot_times={value!r}") from None
            if any(t < 0.0 or not math.isfinite(t) for t in times):
                raise ConfigError(f"line {lineno}: snapshot times must be finite and nonnegative")
            values[key] = times
        elif key == "out_dir":
            values[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    controller = values.get("controller", "matrixeig")
    if controller == CONTROLLER_FIXED_MU and "mu_tilde" not in values:
        raise ConfigError(
            f"line {lines.get('controller', 0)}: controller=fixedmu requires a mu_tilde entry"
        )
    try:
        control = ControlConfig(
            target_rate=values.get("mu", 1.0),
            controller=controller,
            fixed_mu=values.get("mu_tilde"),
            mu_scan_max=values.get("mu_scan_max", 64.0),
            mu_scan_step=values.get("mu_scan_step", 1e-2),
            bisect_tol=values.get("bisect_tol", 1e-6),
        )
        return RunConfig(
            scenario=values.get("scenario", "linear"),
            initial=values.get("initial", "sincos"),
            L=values.get("l", 1.0),
            n=values.get("n", 32),
            cfl=values.get("cfl", 0.45),
            t_final=values.get("t_final", 10.0),
            output_every=values.get("output_every", 1),
            control=control,
            kappa_max=values.get("kappa_max", 1.0),
            snapshot_times=values.get("snapshot_times", (0.0, 2.0, 5.0, 10.0)),
            out_dir=values.get("out_dir"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# closed-loop driver


def _make_record(
    t: float, recon, decision: ControlDecision, table: WeightTable, fallback_mu: float
) -> TimeSeriesRecord:
    mu = decision.mu_hat if decision.feasible and math.isfinite(decision.mu_hat) else fallback_mu
    params = LyapunovParams(mu, table)
    value = lyapunov_value(recon, params)
    return TimeSeriesRecord(
        t=t,
        l2_sq=l2_norm_sq(recon, table.grid),
        lyapunov=value,
        lyapunov_scaled=scaled_lyapunov(value, params),
        mu_hat=decision.mu_hat,
        kappa_star=decision.kappa_star,
        feasible=decision.feasible,
    )


def run_simulation(cfg: RunConfig) -> tuple[list[TimeSeriesRecord], list[Snapshot]]:
    """Run the closed loop described by cfg; returns records and snapshots."""
    grid = build_grid(cfg.L, cfg.n)
    scenario = make_scenario(cfg.scenario)
    system = scenario.system
    table = build_weight_table(grid, system)
    state = initial_averages(cfg.initial, grid)

    dt_full = cfl_dt(grid, system, cfg.cfl)
    n_steps = int(math.ceil(cfg.t_final / dt_full - 1e-12))
    pending = sorted(t for t in cfg.snapshot_times if t <= cfg.t_final + 1e-9)

    records: list[TimeSeriesRecord] = []
    snapshots: list[Snapshot] = []
    prev: ControlDecision | None = None
    fallback_mu = 0.0

    def take_snapshots(now: float, current: RiemannState) -> None:
        while pending and now >= pending[0] - 1e-9:
            snapshots.append(Snapshot(t_requested=pending.pop(0), t=now, state=current))

    for step in range(n_steps):
        t = state.t
        recon = reconstruct_all(state, grid)
        decision = decide(recon, table, cfg.control, cfg.kappa_max, prev)
        take_snapshots(t, state)
        if step % cfg.output_every == 0:
            records.append(_make_record(t, recon, decision, table, fallback_mu))
        if decision.feasible:
            fallback_mu = decision.mu_hat
        prev = decision

        dt = min(dt_full, cfg.t_final - t)
        kappa = decision.kappa_star

        def tendency(avg: np.ndarray) -> np.ndarray:
            return rhs(RiemannState(avg=avg, t=t), grid, system, kappa)

        try:
            new_avg = ssprk3_step(state.avg, dt, tendency)
        except BlowUpError as exc:
            raise BlowUpError(str(exc), records=records, last_good_index=len(records) - 1) from None
        if not np.all(np.isfinite(new_avg)):
            raise BlowUpError(
                f"state blew up during step {step} at t={t:.6g}",
                records=records,
                last_good_index=len(records) - 1,
            )
        state = RiemannState(avg=new_avg, t=t + dt)

    recon = reconstruct_all(state, grid)
    decision = decide(recon, table, cfg.control, cfg.kappa_max, prev)
    take_snapshots(state.t, state)
    if n_steps % cfg.output_every == 0:
        records.append(_make_record(state.t, recon, decision, table, fallback_mu))
    return records, snapshots


# ---------------------------------------------------------------------------
# output files and reports


def write_timeseries_csv(records: list[TimeSeriesRecord], path: str | Path) -> None:
    """Write records with full round-trip float precision."""
    rows = [TIMESERIES_HEADER]
    for r in records:
        cols = (r.t, r.l2_sq, r.lyapunov, r.lyapunov_scaled, r.mu_hat, r.kappa_star)
        rows.append(",".join(repr(float(c)) for c in cols) + ("," + ("true" if r.feasible else "false")))
    Path(path).write_text("\n".join(rows) + "\n")


def read_timeseries_csv(path: str | Path) -> list[TimeSeriesRecord]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != TIMESERIES_HEADER:
        raise ValueError(f"unexpected header in {path}")
    records = []
    for line in lines[1:]:
        t, l2, ly, lys, mu, ks, feas = line.split(",")
        records.append(
            TimeSeriesRecord(
                t=float(t),
                l2_sq=float(l2),
                lyapunov=float(ly),
                lyapunov_scaled=float(lys),
                mu_hat=float(mu),
                kappa_star=float(ks),
                feasible=feas == "true",
            )
        )
    return records


def write_snapshot_csv(state: RiemannState, grid: Grid, path: str | Path, gamma: float = 1.0) -> None:
    """Dump cell-average fields plus the macroscopic deviation variables."""
    rho, q = density_flux(state.avg, gamma)
    rows = [SNAPSHOT_HEADER]
    for j in range(grid.n):
        cols = (grid.centers[j], state.avg[j, 0], state.avg[j, 1], rho[j], q[j])
        rows.append(",".join(repr(float(c)) for c in cols))
    Path(path).write_text("\n".join(rows) + "\n")


def emit_decay_report(records: list[TimeSeriesRecord], target_rate: float) -> DecayReport:
    """Least-squares decay rate of the scaled energy plus certificate checks."""
    if not records:
        raise ValueError("no records to analyze")
    ts = np.array([r.t for r in records])
    scaled = np.array([r.lyapunov_scaled for r in records])
    l2 = np.array([r.l2_sq for r in records])

    keep = np.isfinite(scaled) & (scaled > 0.0)
    if np.count_nonzero(keep) < 3:
        raise ValueError("need at least 3 records with positive scaled energy")
    slope = float(np.polyfit(ts[keep], np.log(scaled[keep]), 1)[0])

    violation = float(np.max(l2 - scaled))
    span = float(ts[-1] - ts[0])
    stabilized = bool(l2[-1] < l2[0] * math.exp(-0.5 * target_rate * span))
    return DecayReport(
        slope=slope,
        target_rate=target_rate,
        bound_violation_max=violation,
        stabilized=stabilized,
        n_fit=int(np.count_nonzero(keep)),
    )


def format_decay_report(report: DecayReport) -> str:
    return "\n".join(
        [
            f"fitted decay slope   {report.slope:+.6f}  (records used: {report.n_fit})",
            f"target rate          {-report.target_rate:+.6f}",
            f"max l2 excess over scaled energy  {report.bound_violation_max:.3e}",
            f"stabilized           {'true' if report.stabilized else 'false'}",
        ]
    )


# ---------------------------------------------------------------------------
# convergence studies


_PULSE_WIDTH = 0.5
_PULSE_K = math.pi / _PULSE_WIDTH


def _pulse_cumulative(x: np.ndarray, start: float) -> np.ndarray:
    """Antiderivative of sin^4(k (x - start)) supported on [start, start + width]."""
    y = np.clip(x - start, 0.0, _PULSE_WIDTH)
    k = _PULSE_K
    return 3.0 * y / 8.0 - np.sin(2.0 * k * y) / (4.0 * k) + np.sin(4.0 * k * y) / (32.0 * k)


def _pulse_averages(grid: Grid, shift: float = 0.0) -> np.ndarray:
    """Exact cell averages of the two counter-propagating test pulses at time shift.

    Both pulses stay clear of the boundary for shift <= 0.25, so kappa = 0
    advection has the closed-form solution used as the reference.
    """
    xl, xr = grid.edges[:-1], grid.edges[1:]
    plus = (_pulse_cumulative(xr - shift, 0.1) - _pulse_cumulative(xl - shift, 0.1)) / grid.dx
    minus = (_pulse_cumulative(xr + shift, 0.4) - _pulse_cumulative(xl + shift, 0.4)) / grid.dx
    return np.stack((plus, minus), axis=-1)


def advection_convergence_study(
    ns: tuple[int, ...] = (64, 128, 256), t_end: float = 0.25, cfl: float = 0.45
) -> list[tuple[int, float, float | None]]:
    """L1 self-errors against the exact advected pulses; returns (n, error, order)."""
    system = make_scenario("conservation").system
    errors: list[float] = []
    for n in ns:
        grid = build_grid(1.0, n)
        state = RiemannState(avg=_pulse_averages(grid), t=0.0)
        dt_full = cfl_dt(grid, system, cfl)
        steps = int(math.ceil(t_end / dt_full - 1e-12))
        for _ in range(steps):
            dt = min(dt_full, t_end - state.t)
            new_avg = ssprk3_step(state.avg, dt, lambda a: rhs(RiemannState(a, state.t), grid, system, 0.0))
            state = RiemannState(avg=new_avg, t=state.t + dt)
        exact = _pulse_averages(grid, shift=t_end)
        errors.append(float(np.sum(np.abs(state.avg - exact)) * grid.dx))

    out: list[tuple[int, float, float | None]] = []
    for i, (n, err) in enumerate(zip(ns, errors)):
        order = None if i == 0 else math.log(errors[i - 1] / err) / math.log(ns[i] / ns[i - 1])
        out.append((n, err, order))
    return out


def reconstruction_convergence_study(
    ns: tuple[int, ...] = (32, 64, 128, 256),
) -> list[tuple[int, float, float | None]]:
    """Max reconstruction node error on averages of sin(2 pi x); (n, error, order)."""
    errors: list[float] = []
    for n in ns:
        grid = build_grid(1.0, n)
        xl, xr = grid.edges[:-1], grid.edges[1:]
        avg = (np.cos(2.0 * np.pi * xl) - np.cos(2.0 * np.pi * xr)) / (2.0 * np.pi * grid.dx)
        state = RiemannState(avg=np.stack((avg, avg), axis=-1), t=0.0)
        recon = reconstruct_all(state, grid)
        err = 0.0
        for values, xs in ((recon.left, xl), (recon.center, grid.centers), (recon.right, xr)):
            err = max(err, float(np.max(np.abs(values - np.sin(2.0 * np.pi * xs)[:, None]))))
        errors.append(err)

    out: list[tuple[int, float, float | None]] = []
    for i, (n, err) in enumerate(zip(ns, errors)):
        order = None if i == 0 else math.log(errors[i - 1] / err) / math.log(ns[i] / ns[i - 1])
        out.append((n, err, order))
    return out


# ---------------------------------------------------------------------------
# entry points


def _threads_cap() -> int:
    """Worker cap from HYPCTRL_THREADS; the solver itself runs single-threaded."""
    raw = os.environ.get("HYPCTRL_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = parse_config(Path(args.config).read_text())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out or cfg.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    _threads_cap()

    try:
        records, snapshots = run_simulation(cfg)
    except BlowUpError as exc:
        print(f"blow-up: {exc} (last good record index {exc.last_good_index})", file=sys.stderr)
        if exc.records:
            write_timeseries_csv(exc.records, out_dir / "timeseries.csv")
        return EXIT_BLOWUP

    write_timeseries_csv(records, out_dir / "timeseries.csv")
    gamma = make_scenario(cfg.scenario).gamma
    grid = build_grid(cfg.L, cfg.n)
    for snap in snapshots:
        write_snapshot_csv(snap.state, grid, out_dir / f"snapshot_t{snap.t_requested:g}.csv", gamma)

    report = emit_decay_report(records, cfg.control.target_rate)
    print(f"scenario={cfg.scenario} controller={cfg.control.controller} steps={len(records) - 1}")
    print(format_decay_report(report))
    print(f"wrote {out_dir / 'timeseries.csv'} and {len(snapshots)} snapshots")
    return EXIT_OK


def _cmd_check_prop1(args: argparse.Namespace) -> int:
    try:
        report = prop1_threshold(args.alpha, args.len)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"alpha * L            {report.product:.6g}")
    print(f"max gain margin      {report.margin_max:.6g} at kappa = {report.margin_argmax:.6g}")
    print(f"feasible             {'true' if report.feasible else 'false'}")
    if report.feasible:
        print(f"admissible kappa     ({report.kappa_low:.6g}, {report.kappa_high:.6g})")
    return EXIT_OK


def _cmd_convergence(args: argparse.Namespace) -> int:
    print(f"advection study, scenario={args.scenario}")
    print(f"{'n':>6} {'l1_error':>14} {'order':>8}")
    for n, err, order in advection_convergence_study():
        print(f"{n:>6} {err:>14.6e} {'-' if order is None else format(order, '8.3f')}")
    print("reconstruction study on sin(2 pi x)")
    print(f"{'n':>6} {'max_error':>14} {'order':>8}")
    for n, err, order in reconstruction_convergence_study():
        print(f"{n:>6} {err:>14.6e} {'-' if order is None else format(order, '8.3f')}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hypctrl", description="hyperbolic solver with online boundary control")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a closed-loop simulation from a config file")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.add_argument("--out", default=None, help="output directory (default: config out_dir or '.')")
    p_run.set_defaults(func=_cmd_run)

    p_prop = sub.add_parser("check-prop1", help="closed-form stabilizability threshold")
    p_prop.add_argument("--alpha", type=float, required=True, help="uniform source gain bound")
    p_prop.add_argument("--len", type=float, required=True, help="domain length")
    p_prop.set_defaults(func=_cmd_check_prop1)

    p_conv = sub.add_parser("convergence", help="grid convergence studies")
    p_conv.add_argument("--scenario", default="conservation", choices=["conservation"])
    p_conv.set_defaults(func=_cmd_convergence)

    args = parser.parse_args(argv)
    return args.func(args)


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
