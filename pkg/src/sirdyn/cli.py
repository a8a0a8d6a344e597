"""Command line: scenario files in, trajectories/reports/sweep tables out.

Subcommands:

  simulate  run one scenario; write trajectory.csv, events.csv, report.txt
  classify  threshold-regime analytics only, no simulation
  sweep     run a scenario template across a parameter grid into a CSV table
  verify    run the canned invariant suite; nonzero exit on any failure

Exit codes: 0 success, 1 validation failure, 2 simulation/analysis
failure, 3 verification failure. All outputs are deterministic: identical
scenario plus tolerances yields byte-identical files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .integrate import DEFAULT_EVENT_TOL, BudgetExceededError, StepControl, Trajectory
from .network import (
    NetworkState,
    aggregate_invariants,
    bimodality_threshold,
    detect_multimodality,
    network_R,
    reproduction_series,
    simulate_network,
)
from .scalar import (
    SirState,
    classify_series,
    classify_shape,
    motion_invariant,
    peak_infected,
    reproduction_number,
    simulate_scalar,
)
from .threshold import BoundaryRegimeError, classify_regime, simulate_threshold
from .scenario import Scenario, ScenarioError
from .verify import run_checks

__all__ = ["main", "entry"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SIMULATION = 2
EXIT_VERIFICATION = 3

SWEEP_CELL_CAP = 10000


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _cell(v) -> str:
    return f"{float(v):.17g}"


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _state_names(kind: str, n: int) -> list[str]:
    if kind in ("scalar", "threshold"):
        return ["x", "y", "z"]
    return (
        [f"x{i + 1}" for i in range(n)]
        + [f"y{i + 1}" for i in range(n)]
        + [f"z{i + 1}" for i in range(n)]
    )


def _trajectory_csv(traj: Trajectory, names: list[str], r_series) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", *names, "R"])
    for t, s, r in zip(traj.times, traj.states, r_series):
        writer.writerow([_cell(t), *(_cell(v) for v in s), _cell(r)])
    return buf.getvalue()


def _events_csv(traj: Trajectory, names: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "t", *names])
    for e in traj.events:
        writer.writerow([e.label, _cell(e.time), *(_cell(v) for v in e.state)])
    return buf.getvalue()


def _defaults_block(sc: Scenario) -> list[str]:
    c = sc.control()
    return [
        f"horizon: {_fmt(sc.horizon)}",
        f"extinction_threshold: {_fmt(sc.extinction)}",
        f"initial_step: {_fmt(c.initial_step)}",
        f"max_step: {_fmt(c.max_step)}",
        f"abs_tol: {_fmt(c.abs_tol)}",
        f"rel_tol: {_fmt(c.rel_tol)}",
        f"max_steps: {c.max_steps}",
        f"event_tol: {_fmt(DEFAULT_EVENT_TOL)}",
    ]


def _run_scenario(sc: Scenario):
    """Simulate a scenario; returns (trajectory, state names, R series, analytics, drifts)."""
    kind = sc.kind
    control = sc.control()
    analytics: dict[str, str] = {}
    drifts: dict[str, str] = {}

    if kind == "scalar":
        model = sc.scalar_model()
        x0, y0 = sc.initial_xy()
        traj = simulate_scalar(model, x0, y0, sc.horizon, control, extinction=sc.extinction)
        r_series = np.array(
            [reproduction_number(SirState.from_array(s), model) for s in traj.states]
        )
        sim_peak = peak_infected(traj)
        analytics["R0"] = _fmt(float(r_series[0]))
        analytics["family"] = model.rate.family
        predicted = None
        if model.rate.family == "constant":
            rho = model.rho
            analytics["rho"] = _fmt(rho)
            if x0 > 0 and x0 * model.rate.beta / model.gamma > 1.0:
                # Orbit maximum from a general start: y at x=rho on the
                # conserved-orbit curve through (x0, y0).
                gamma0 = rho * math.log(x0) + (1.0 - x0 - y0)
                predicted = 1.0 - rho + rho * math.log(rho) - gamma0
                analytics["predicted_peak"] = _fmt(predicted)
            gam = np.array(
                [motion_invariant(SirState.from_array(s), rho) for s in traj.states]
            )
            drifts["motion_invariant_drift"] = _fmt(float(np.max(np.abs(gam - gam[0]))))
        analytics["simulated_peak"] = _fmt(sim_peak)
        if predicted is not None:
            analytics["peak_discrepancy"] = _fmt(abs(predicted - sim_peak))
        shape = classify_shape(traj)
        analytics["shape"] = shape.shape
        analytics["peak_times"] = ", ".join(_fmt(t) for t in shape.peak_times) or "none"

    elif kind == "threshold":
        policy = sc.policy()
        x0, y0 = sc.initial_xy()
        init = sc.data["initial"]
        seeded_eps = init.get("eps")
        traj = simulate_threshold(
            policy,
            seeded_eps if seeded_eps is not None else 0.0,
            sc.horizon,
            control,
            extinction=sc.extinction,
            initial=None if seeded_eps is not None else (x0, y0),
        )
        r_series = np.array(
            [s[0] * policy.rate(s[1]) / policy.gamma for s in traj.states]
        )
        sim_peak = peak_infected(traj)
        analytics["R0"] = _fmt(float(r_series[0]))
        analytics["rho"] = _fmt(policy.rho)
        analytics["rho_bar"] = _fmt(policy.rho_bar)
        predicted = None
        if seeded_eps is not None:
            try:
                rep = classify_regime(seeded_eps, policy)
                predicted = rep.predicted_peak
                analytics["regime"] = rep.regime
                analytics["predicted_peak"] = _fmt(rep.predicted_peak)
                for key, value in (
                    ("t_star", rep.t_star),
                    ("t_star_star", rep.t_star_star),
                    ("crossing_x", rep.crossing_x),
                    ("sliding_duration", rep.sliding_duration),
                ):
                    if value is not None:
                        analytics[key] = _fmt(value)
            except (BoundaryRegimeError, ValueError) as exc:
                analytics["regime"] = f"unavailable ({exc})"
        else:
            analytics["regime"] = "unavailable (general initial state)"
        analytics["simulated_peak"] = _fmt(sim_peak)
        if predicted is not None:
            analytics["peak_discrepancy"] = _fmt(abs(predicted - sim_peak))
        entry = traj.first_event("sliding-entry")
        exit_ = traj.first_event("sliding-exit")
        if entry is not None and exit_ is not None:
            analytics["measured_sliding_interval"] = (
                f"[{_fmt(entry.time)}, {_fmt(exit_.time)}]"
            )
        shape = classify_shape(traj)
        analytics["shape"] = shape.shape

    else:  # network
        model = sc.network_model()
        initial = sc.network_initial()
        traj = simulate_network(model, initial, sc.horizon, control, extinction=sc.extinction)
        r_series = reproduction_series(model, traj)
        n = model.graph.n
        analytics["R0"] = _fmt(float(r_series[0]))
        analytics["nodes"] = str(n)
        if n == 2:
            analytics["bimodality_threshold"] = _fmt(bimodality_threshold())
        counts = [detect_multimodality(traj, i).n_peaks for i in range(n)]
        analytics["peaks_per_node"] = ", ".join(str(c) for c in counts)
        analytics["multimodal"] = str(any(c >= 2 for c in counts)).lower()
        analytics["simulated_peak"] = _fmt(float(np.max(traj.states[:, n : 2 * n])))
        total = traj.states[:, n : 2 * n].sum(axis=1)
        analytics["aggregate_shape"] = classify_series(traj.times, total).shape
        try:
            drift = aggregate_invariants(model, traj)
            drifts["network_motion_drift"] = _fmt(drift.motion_drift)
            drifts["network_ratio_drift"] = _fmt(drift.ratio_drift)
        except ValueError:
            pass

    if kind == "network":
        n = sc.network_model().graph.n
        per_node = traj.states[:, :n] + traj.states[:, n : 2 * n] + traj.states[:, 2 * n :]
        drifts["simplex_drift"] = _fmt(float(np.max(np.abs(per_node - 1.0))))
    else:
        drifts["simplex_drift"] = _fmt(float(np.max(np.abs(traj.states.sum(axis=1) - 1.0))))

    names = _state_names(kind, traj.states.shape[1] // 3)
    return traj, names, r_series, analytics, drifts


def _report_text(sc: Scenario, analytics, drifts, files, failure: str | None = None) -> str:
    lines = ["sirdyn run report (schema 1)", ""]
    lines.append("[scenario]")
    lines.append(sc.canonical_text())
    lines.append("")
    lines.append("[defaults]")
    lines.extend(_defaults_block(sc))
    lines.append("")
    if failure is not None:
        lines.append("[failure]")
        lines.append(failure)
        lines.append("")
    lines.append("[analytics]")
    lines.extend(f"{k}: {v}" for k, v in analytics.items())
    lines.append("")
    lines.append("[invariants]")
    lines.extend(f"{k}: {v}" for k, v in drifts.items())
    lines.append("")
    lines.append("[files]")
    lines.extend(f"{k}: {v}" for k, v in files.items())
    lines.append("")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    try:
        sc = Scenario.from_file(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    try:
        traj, names, r_series, analytics, drifts = _run_scenario(sc)
    except BudgetExceededError as exc:
        partial = exc.partial
        names = _state_names(sc.kind, partial.states.shape[1] // 3)
        files = {}
        if sc.output["trajectory"]:
            _write_atomic(
                out / "trajectory.csv",
                _trajectory_csv(partial, names, np.zeros(len(partial.times))),
            )
            files["trajectory"] = "trajectory.csv (partial)"
        _write_atomic(
            out / "report.txt",
            _report_text(sc, {}, {}, files, failure=f"budget exceeded: {exc}"),
        )
        print(f"simulation failure: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except RuntimeError as exc:
        _write_atomic(
            out / "report.txt", _report_text(sc, {}, {}, {}, failure=str(exc))
        )
        print(f"simulation failure: {exc}", file=sys.stderr)
        return EXIT_SIMULATION

    files = {}
    if sc.output["trajectory"]:
        _write_atomic(out / "trajectory.csv", _trajectory_csv(traj, names, r_series))
        files["trajectory"] = "trajectory.csv"
    if sc.output["events"]:
        _write_atomic(out / "events.csv", _events_csv(traj, names))
        files["events"] = "events.csv"
    _write_atomic(out / "report.txt", _report_text(sc, analytics, drifts, files))
    print(f"wrote {out / 'report.txt'}")
    return EXIT_OK


def cmd_classify(args) -> int:
    try:
        sc = Scenario.from_file(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if sc.kind != "threshold":
        print(f"classify needs a threshold scenario, got kind={sc.kind}", file=sys.stderr)
        return EXIT_VALIDATION
    init = sc.data["initial"]
    if "eps" not in init:
        print("classify needs a seeded initial condition (initial.eps)", file=sys.stderr)
        return EXIT_VALIDATION
    policy = sc.policy()
    try:
        rep = classify_regime(init["eps"], policy)
    except BoundaryRegimeError as exc:
        print(f"boundary regime: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except ValueError as exc:
        print(f"classification error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    lines = [
        f"regime: {rep.regime}",
        f"predicted_peak: {_fmt(rep.predicted_peak)}",
    ]
    for key, value in (
        ("t_star", rep.t_star),
        ("t_star_star", rep.t_star_star),
        ("crossing_x", rep.crossing_x),
        ("sliding_duration", rep.sliding_duration),
    ):
        lines.append(f"{key}: {_fmt(value) if value is not None else 'absent'}")
    text = "\n".join(lines)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_atomic(out / "regime.txt", text + "\n")
    return EXIT_OK


def _set_path(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value


def _evaluate_cell(payload):
    """One sweep cell: returns a row dict. Never raises; errors go in-row."""
    index, base, overrides = payload
    row = {"cell": str(index)}
    for key, value in overrides.items():
        row[key] = _fmt(value) if isinstance(value, float) else str(value)
    data = copy.deepcopy(base)
    for key, value in overrides.items():
        _set_path(data, key, value)
    try:
        sc = Scenario.from_dict(data)
        kind = sc.kind
        row["kind"] = kind
        if kind == "threshold":
            eps = sc.data["initial"].get("eps")
            if eps is None:
                raise ValueError("sweep threshold cells need a seeded initial condition")
            rep = classify_regime(eps, sc.policy())
            traj = simulate_threshold(
                sc.policy(), eps, sc.horizon, sc.control(), extinction=sc.extinction
            )
            sim_peak = peak_infected(traj)
            row["label"] = rep.regime
            row["predicted_peak"] = _fmt(rep.predicted_peak)
            row["simulated_peak"] = _fmt(sim_peak)
            row["discrepancy"] = _fmt(abs(rep.predicted_peak - sim_peak))
            row["peak_count"] = str(len(classify_shape(traj).peak_times))
        elif kind == "scalar":
            model = sc.scalar_model()
            x0, y0 = sc.initial_xy()
            traj = simulate_scalar(
                model, x0, y0, sc.horizon, sc.control(), extinction=sc.extinction
            )
            shape = classify_shape(traj)
            row["label"] = shape.shape
            row["simulated_peak"] = _fmt(peak_infected(traj))
            row["peak_count"] = str(len(shape.peak_times))
        else:
            model = sc.network_model()
            traj = simulate_network(
                model, sc.network_initial(), sc.horizon, sc.control(), extinction=sc.extinction
            )
            found = detect_multimodality(traj, 0)
            row["label"] = found.shape
            n = model.graph.n
            row["simulated_peak"] = _fmt(float(np.max(traj.states[:, n : 2 * n])))
            row["peak_count"] = str(found.n_peaks)
    except Exception as exc:  # recorded in-row; the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    return index, row


def _load_grid(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ScenarioError("grid must be a JSON object")
    unknown = sorted(set(raw) - {"schema", "vary"})
    if unknown:
        raise ScenarioError(f"unknown field(s) in grid: {', '.join(unknown)}")
    if raw.get("schema") != 1:
        raise ScenarioError("grid requires schema: 1")
    vary = raw.get("vary", {})
    if not isinstance(vary, dict) or not all(isinstance(v, list) for v in vary.values()):
        raise ScenarioError("grid.vary must map dotted field paths to value lists")
    return vary


def cmd_sweep(args) -> int:
    try:
        sc = Scenario.from_file(args.scenario)
        vary = _load_grid(args.grid)
    except ScenarioError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    keys = list(vary.keys())
    combos: list[dict] = [{}]
    for key in keys:
        combos = [dict(c, **{key: v}) for c in combos for v in vary[key]]
    if keys and len(combos) > SWEEP_CELL_CAP:
        print(f"grid has {len(combos)} cells, above the cap {SWEEP_CELL_CAP}", file=sys.stderr)
        return EXIT_VALIDATION
    if not keys:
        combos = []

    payloads = [(i, sc.data, overrides) for i, overrides in enumerate(combos)]
    if args.workers > 1 and payloads:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = dict(pool.map(_evaluate_cell, payloads))
    else:
        rows = dict(map(_evaluate_cell, payloads))

    header = ["cell", *keys, "kind", "label", "predicted_peak", "simulated_peak",
              "discrepancy", "peak_count", "error"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n", restval="")
    writer.writeheader()
    for i in range(len(combos)):
        writer.writerow(rows[i])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(out / "sweep.csv", buf.getvalue())
    print(f"wrote {out / 'sweep.csv'} ({len(combos)} cells)")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_checks()
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "ok  " if r.passed else "FAIL"
        detail = f"  ({r.detail})" if r.detail else ""
        print(f"{status} {r.name:<{width}} measured={r.measured:.6g} bound={r.bound:.6g}{detail}")
        failures += not r.passed
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_VERIFICATION


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sirdyn",
        description="SIR dynamics: feedback rates, lockdown thresholds, network spread",
    )
    parser.add_argument(
        "--seedless",
        action="store_true",
        help="reserved; every sirdyn computation is already deterministic",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario file")
    p_sim.add_argument("--scenario", required=True, help="scenario JSON path")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--format", choices=["csv"], default="csv")
    p_sim.set_defaults(func=cmd_simulate)

    p_cls = sub.add_parser("classify", help="threshold regime analytics, no simulation")
    p_cls.add_argument("--scenario", required=True)
    p_cls.add_argument("--out", default=None)
    p_cls.set_defaults(func=cmd_classify)

    p_swp = sub.add_parser("sweep", help="run a scenario across a parameter grid")
    p_swp.add_argument("--scenario", required=True, help="base scenario JSON path")
    p_swp.add_argument("--grid", required=True, help="grid JSON path ({schema, vary})")
    p_swp.add_argument("--out", required=True)
    p_swp.add_argument("--workers", type=int, default=1)
    p_swp.add_argument("--format", choices=["csv"], default="csv")
    p_swp.set_defaults(func=cmd_sweep)

    p_ver = sub.add_parser("verify", help="run the canned invariant suite")
    p_ver.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
