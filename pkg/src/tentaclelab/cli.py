"""Command-line pipeline: dataset generation, training, evaluation,
metric sweeps, actuation optimization, rendering, and report assembly.

Every command is driven by a JSON RunConfig and writes a manifest with
the config hash, so reruns are bit-identical and traceable. Exit codes:
0 success, 1 usage/config error, 2 runtime/numerical error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .actuation import ProgramSpec, build_program
from .bayesopt import SearchSpace, history_to_csv, optimize
from .config import CONFIG_SCHEMA, ConfigError, RunConfig, config_hash, \
    default_config
from .fitting import PolyCoeffs, fit_report, poly_centerline
from .kinematics import CurvatureState, TentacleGeometry, \
    lateral_displacements, sample_centerline, tip_positions
from .plotting import line_plot_svg, overlay_svg
from .regressor import LabeledSequence, TrainingError, evaluate, forward, \
    load_weights, save_weights, train
from .sim import SimTrace, SimulationError, moving_average, sensor_readout, \
    simulate, thrust_proxy
from .vision import ImageSpec, VisionError, binarize, extract_midline, \
    midline_to_csv, read_pgm, render_silhouette, write_pgm
from .wavemetrics import cod, field_from_states, field_twi, modeset_to_csv, \
    tip_deflection

__all__ = ["main"]


def _write_manifest(outdir, command, cfg, outputs, extra=None):
    doc = {
        "command": command,
        "schema": CONFIG_SCHEMA,
        "config_hash": config_hash(cfg),
        "config": cfg.to_dict(),
        "outputs": sorted(outputs),
    }
    if extra:
        doc.update(extra)
    with open(os.path.join(outdir, "manifest.json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else default_config()
    if getattr(args, "seed", None) is not None:
        n = args.seed
        cfg = RunConfig.from_dict({
            **cfg.to_dict(),
            "sensor": {**cfg.sensor, "seed": n},
            "train": {**cfg.train, "seed": n},
            "dataset": {**cfg.dataset, "train_seed": n, "test_seed": n + 1},
            "bo": {**cfg.bo, "seed": n},
        })
    return cfg


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _simulate_ramp(cfg, duration, seed) -> SimTrace:
    ds = cfg.dataset
    spec = ProgramSpec(duration_s=duration, dt=ds["dt"],
                       amplitude_mode="random",
                       rpm_ramp=tuple(ds["rpm_ramp"]), seed=seed)
    trace = simulate(build_program(spec), cfg.build_sim_params(),
                     cfg.build_geometry())
    pressures = sensor_readout(trace, cfg.build_sensor_model())
    return trace.with_pressures(pressures)


def _poly_targets(q: np.ndarray, geom: TentacleGeometry) -> np.ndarray:
    """(c2, c3) per step, fitted to the lateral profile of each state.

    The root is clamped (x(0) = x'(0) = 0), so c0 = c1 = 0 and the fit
    reduces to the quadratic and cubic basis columns.
    """
    s = np.linspace(0.0, 1.0, geom.n_samples)
    lat = lateral_displacements(q, s, geom.length_mm)   # (N_s, T)
    A = np.column_stack([s * s, s ** 3])
    coef, *_ = np.linalg.lstsq(A, lat, rcond=None)      # (2, T)
    return coef.T


def _targets_for(cfg, trace) -> np.ndarray:
    if cfg.target == "affine":
        return trace.q
    return _poly_targets(trace.q, cfg.build_geometry())


def cmd_dataset(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    ds = cfg.dataset
    dur_train = ds["train_duration_s"] if args.duration is None \
        else args.duration
    dur_test = ds["test_duration_s"] if args.duration_test is None \
        else args.duration_test
    if dur_train <= 0 or dur_test <= 0:
        raise ConfigError("dataset durations must be positive")
    files = []
    for name, dur, seed in (("train.csv", dur_train, ds["train_seed"]),
                            ("test.csv", dur_test, ds["test_seed"])):
        trace = _simulate_ramp(cfg, dur, seed)
        trace.to_csv(os.path.join(out, name))
        files.append(name)
    _write_manifest(out, "dataset", cfg, files,
                    extra={"durations_s": [dur_train, dur_test]})
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    trace = SimTrace.from_csv(os.path.join(args.data, "train.csv"))
    seq = LabeledSequence(trace.pressures, _targets_for(cfg, trace),
                          trace.dt)
    weights, history = train([seq], cfg.build_train_config())
    save_weights(weights, os.path.join(out, "weights.json"))
    with open(os.path.join(out, "loss_history.csv"), "w") as f:
        f.write("epoch,loss\n")
        for e, l in enumerate(history):
            f.write(f"{e},{l:.10g}\n")
    line_plot_svg({"training loss": (np.arange(len(history)), history)},
                  os.path.join(out, "loss_history.svg"),
                  title="Training loss", xlabel="epoch", ylabel="MSE")
    _write_manifest(out, "train", cfg,
                    ["weights.json", "loss_history.csv", "loss_history.svg"])
    return 0


def _predict_trace(cfg, weights, trace):
    preds = forward(weights, trace.pressures)
    truths = _targets_for(cfg, trace)
    return preds, truths


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    if not os.path.exists(args.weights):
        print(f"error: weights file not found: {args.weights}",
              file=sys.stderr)
        return 1
    weights = load_weights(args.weights)
    trace = SimTrace.from_csv(os.path.join(args.data, "test.csv"))
    preds, truths = _predict_trace(cfg, weights, trace)
    geom = cfg.build_geometry()
    truth_tip = tip_positions(trace.q, geom)
    if cfg.target == "affine":
        report = fit_report(preds, truths, geom, kind="affine",
                            truth_tip=truth_tip)
    else:
        pad = lambda c: np.column_stack([np.zeros((len(c), 2)), c])
        report = fit_report(pad(preds), pad(truths), geom, kind="poly",
                            truth_tip=truth_tip)
    with open(os.path.join(out, "report.json"), "w") as f:
        json.dump({"target": cfg.target, "report": report.as_dict()},
                  f, indent=2, sort_keys=True)
        f.write("\n")
    # Overlay a handful of evenly spaced instants.
    idx = np.linspace(0, len(preds) - 1, 6).astype(int)
    pairs = []
    for i in idx:
        truth_cl = sample_centerline(CurvatureState(*trace.q[i]), geom)
        if cfg.target == "affine":
            pred_cl = sample_centerline(CurvatureState(*preds[i]), geom)
        else:
            pred_cl = poly_centerline(PolyCoeffs(0.0, 0.0, *preds[i]),
                                      geom.length_mm, geom.n_samples)
        pairs.append((truth_cl, pred_cl))
    overlay_svg(pairs, os.path.join(out, "overlay.svg"),
                title="Reconstructed vs true centerlines")
    _write_manifest(out, "eval", cfg, ["report.json", "overlay.svg"])
    return 0


def _sweep_metrics(cfg, weights=None):
    """Per-(f, A) thrust proxy, tip deflection, and TWI rows."""
    geom = cfg.build_geometry()
    params = cfg.build_sim_params()
    sensor = cfg.build_sensor_model()
    sw = cfg.sweep
    rows = []
    for A in sw["amplitudes_deg"]:
        for r in sw["freq_ratios"]:
            f = r * params.f0_hz
            dur = sw["cycles"] / f
            prog = build_program(ProgramSpec(
                duration_s=dur, dt=params.dt, amplitude_deg=A,
                frequency_hz=f))
            trace = simulate(prog, params, geom)
            k0 = int(sw["transient_cycles"] / f / params.dt)
            if weights is not None:
                pressures = sensor_readout(trace, sensor)
                q = forward(weights, pressures)
            else:
                q = trace.q
            if A == 0.0:
                twi_val = 0.0
                defl = 0.0
                thrust = 0.0
            else:
                field = field_from_states(
                    q[k0:][::sw["subsample"]], geom, sw["n_stations"],
                    params.dt * sw["subsample"])
                twi_val = field_twi(cod(field))
                tipb = tip_positions(q, geom)
                theta = np.radians(trace.base_angle_deg)
                tipx = np.cos(theta) * tipb[:, 0] - np.sin(theta) * tipb[:, 1]
                defl = tip_deflection(tipx[k0:], geom.length_mm)
                cyc = thrust_proxy(trace, f)[sw["transient_cycles"]:]
                thrust = float(moving_average(cyc, 3).mean())
            rows.append((f, A, r, thrust, defl, twi_val))
    return rows


def cmd_metrics(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    weights = load_weights(args.weights) if args.weights else None
    rows = _sweep_metrics(cfg, weights)
    with open(os.path.join(out, "metrics.csv"), "w") as f:
        f.write("f_hz,A_deg,freq_ratio,thrust_mN,tip_defl_deg,twi\n")
        for row in rows:
            f.write(",".join(f"{v:.10g}" for v in row) + "\n")
    # Mode shapes at the amplitude/frequency nearest the TWI peak.
    best = max(rows, key=lambda r: r[5])
    params = cfg.build_sim_params()
    geom = cfg.build_geometry()
    sw = cfg.sweep
    prog = build_program(ProgramSpec(
        duration_s=sw["cycles"] / best[0], dt=params.dt,
        amplitude_deg=best[1], frequency_hz=best[0]))
    trace = simulate(prog, params, geom)
    k0 = int(sw["transient_cycles"] / best[0] / params.dt)
    modes = cod(field_from_states(trace.q[k0:][::sw["subsample"]], geom,
                                  sw["n_stations"],
                                  params.dt * sw["subsample"]))
    modeset_to_csv(modes, os.path.join(out, "modes.csv"))
    files = ["metrics.csv", "modes.csv"]
    arr = np.array(rows)
    for j, (name, label) in enumerate((
            ("thrust", "thrust proxy (mN)"),
            ("tip_deflection", "tip deflection (deg)"),
            ("twi", "TWI"))):
        series = {}
        for A in cfg.sweep["amplitudes_deg"]:
            sel = arr[arr[:, 1] == A]
            series[f"A={A:g} deg"] = (sel[:, 2], sel[:, 3 + j])
        fname = f"{name}.svg"
        line_plot_svg(series, os.path.join(out, fname), title=label,
                      xlabel="f / f0", ylabel=label)
        files.append(fname)
    _write_manifest(out, "metrics", cfg, files)
    return 0


def cmd_optimize(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    weights = load_weights(args.weights) if args.weights else None
    geom = cfg.build_geometry()
    params = cfg.build_sim_params()
    sensor = cfg.build_sensor_model()
    sw = cfg.sweep
    bo = cfg.bo
    budget = bo["budget"] if args.budget is None else args.budget

    def objective(f, A):
        prog = build_program(ProgramSpec(
            duration_s=sw["cycles"] / f, dt=params.dt, amplitude_deg=A,
            frequency_hz=f))
        trace = simulate(prog, params, geom)
        k0 = int(sw["transient_cycles"] / f / params.dt)
        if weights is not None:
            q = forward(weights, sensor_readout(trace, sensor))
        else:
            q = trace.q
        field = field_from_states(q[k0:][::sw["subsample"]], geom,
                                  sw["n_stations"],
                                  params.dt * sw["subsample"])
        cyc = thrust_proxy(trace, f)[sw["transient_cycles"]:]
        return {
            "objective": field_twi(cod(field)),
            "tip_defl_deg": tip_deflection(trace.tip[k0:, 0],
                                           geom.length_mm),
            "thrust_mN": float(moving_average(cyc, 3).mean()),
        }

    space = SearchSpace(f_range=tuple(bo["f_range"]),
                        A_set=tuple(bo["A_set"]))
    best, history = optimize(objective, space, budget, seed=bo["seed"],
                             rho=bo["rho"])
    history_to_csv(history, os.path.join(out, "history.csv"))
    with open(os.path.join(out, "best.json"), "w") as f:
        json.dump({"f_hz": best.f, "A_deg": best.A, "twi": best.objective,
                   "tip_defl_deg": best.tip_defl_deg,
                   "thrust_mN": best.thrust_mN}, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(out, "optimize", cfg, ["history.csv", "best.json"],
                    extra={"budget": budget})
    return 0


def cmd_render(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    geom = cfg.build_geometry()
    spec = ImageSpec()
    data = np.genfromtxt(args.states, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    q_cols = (2, 3) if data.shape[1] >= 10 else (0, 1)
    files = []
    for i, row in enumerate(data):
        img = render_silhouette(CurvatureState(row[q_cols[0]],
                                               row[q_cols[1]]), geom, spec)
        name = f"frame_{i:04d}.pgm"
        write_pgm(img, os.path.join(out, name))
        files.append(name)
    _write_manifest(out, "render", cfg, files)
    return 0


def cmd_midline(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    geom = cfg.build_geometry()
    spec = ImageSpec()
    files = []
    for path in sorted(args.images):
        img = read_pgm(path, scale_mm_per_px=spec.scale_mm_per_px,
                       origin_px=spec.origin_px)
        cl = extract_midline(binarize(img), spec,
                             max_len_mm=geom.length_mm)
        name = os.path.splitext(os.path.basename(path))[0] + "_midline.csv"
        midline_to_csv(cl, os.path.join(out, name))
        files.append(name)
    _write_manifest(out, "midline", cfg, files)
    return 0


def cmd_report(args) -> int:
    run = args.run
    out_path = os.path.join(run, "report.html")
    sections = []

    def add_svg(path, heading):
        if os.path.exists(path):
            with open(path) as f:
                sections.append(f"<h2>{heading}</h2>\n" + f.read())

    def add_json_table(path, heading):
        if os.path.exists(path):
            with open(path) as f:
                doc = json.load(f)
            rows = "".join(f"<tr><td>{k}</td><td>{v}</td></tr>"
                           for k, v in sorted(_flatten(doc).items()))
            sections.append(f"<h2>{heading}</h2>\n<table border='1' "
                            f"cellpadding='4'>{rows}</table>")

    for sub in sorted(os.listdir(run)):
        d = os.path.join(run, sub)
        if not os.path.isdir(d):
            continue
        add_json_table(os.path.join(d, "report.json"),
                       f"{sub}: reconstruction error")
        add_json_table(os.path.join(d, "best.json"),
                       f"{sub}: optimized actuation")
        for svg in ("loss_history.svg", "overlay.svg", "thrust.svg",
                    "tip_deflection.svg", "twi.svg"):
            add_svg(os.path.join(d, svg), f"{sub}: {svg[:-4]}")
    if not sections:
        print(f"error: no reportable artifacts under {run}",
              file=sys.stderr)
        return 1
    html = ("<!DOCTYPE html>\n<html><head><meta charset='utf-8'>"
            "<title>Run report</title></head><body>\n<h1>Run report</h1>\n"
            + "\n".join(sections) + "\n</body></html>\n")
    with open(out_path, "w") as f:
        f.write(html)
    return 0


def _flatten(doc, prefix=""):
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tentaclelab",
        description="Synthetic tentacle proprioception pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="RunConfig JSON path")
        sp.add_argument("--seed", type=int, help="override config seeds")
        if out:
            sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("dataset", help="generate labeled train/test CSVs")
    common(sp)
    sp.add_argument("--duration", type=float, help="train duration (s)")
    sp.add_argument("--duration-test", type=float, help="test duration (s)")
    sp.set_defaults(fn=cmd_dataset)

    sp = sub.add_parser("train", help="train the regressor")
    common(sp)
    sp.add_argument("--data", required=True, help="dataset directory")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("eval", help="evaluate weights on the test split")
    common(sp)
    sp.add_argument("--data", required=True, help="dataset directory")
    sp.add_argument("--weights", required=True, help="weights JSON path")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("metrics", help="sweep (f, A) performance metrics")
    common(sp)
    sp.add_argument("--weights", help="compute from reconstructed states")
    sp.set_defaults(fn=cmd_metrics)

    sp = sub.add_parser("optimize", help="Bayesian-optimize actuation")
    common(sp)
    sp.add_argument("--budget", type=int, help="evaluation budget")
    sp.add_argument("--weights", help="objective from reconstructed states")
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("render", help="render state CSV rows to PGM frames")
    common(sp)
    sp.add_argument("--states", required=True, help="state or trace CSV")
    sp.set_defaults(fn=cmd_render)

    sp = sub.add_parser("midline", help="extract midlines from PGM images")
    common(sp)
    sp.add_argument("--images", nargs="+", required=True, help="PGM paths")
    sp.set_defaults(fn=cmd_midline)

    sp = sub.add_parser("report", help="collate a run directory into HTML")
    sp.add_argument("--run", required=True, help="run directory")
    sp.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (SimulationError, TrainingError, VisionError, ValueError,
            np.linalg.LinAlgError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
