"""Command line front end: ``tendonsense <command> ...``.

Every command is a thin wrapper over library calls. Relative ``--out`` paths are
resolved against ``$TENDONSENSE_OUT_DIR`` when set; ``$TENDONSENSE_THREADS``
sets the worker count for ``ablate``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .dataset import DatasetFormatError, protocol_dataset, read_dataset, write_dataset
from .evaluation import ablate, compare_channels, forward_surface, hysteresis_sweep, monotonicity_screen
from .geometry import WORKSPACE_AZIMUTH_DEG, WORKSPACE_ELEVATION_DEG
from .mapping import (JOINT_NAMES, Direction, ModelFormatError, TrainingDivergedError, io_arrays, joint_rmse,
                      load_model, rmse, save_model, split_indices, train)
from .tendon import TENDON_NAMES


class CliError(Exception):
    pass


def _out_path(p: str) -> Path:
    path = Path(p)
    base = os.environ.get("TENDONSENSE_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.name + suffix)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)] + [",".join(repr(float(v)) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def _parse_sensors(text: str):
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [n for n in names if n not in TENDON_NAMES]
    if bad:
        raise CliError(f"unknown sensor(s) {bad}; choose from {','.join(TENDON_NAMES)}")
    if len(set(names)) < 2:
        raise CliError("at least two distinct sensors are required (one sensor cannot resolve two joint angles)")
    return names


# --- commands ---------------------------------------------------------------


def cmd_generate(args):
    cfg = load_config(args.config)
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ideal = protocol_dataset(cfg.layout, cfg.protocol_seed, None, cfg.protocol_overrides)
    emulated = protocol_dataset(cfg.layout, cfg.protocol_seed, cfg.sensor, cfg.protocol_overrides)
    write_dataset(out / "ideal.csv", ideal)
    write_dataset(out / "emulated.csv", emulated)
    print(f"wrote {len(ideal)} frames to {out / 'ideal.csv'} and {out / 'emulated.csv'}")


def cmd_train(args):
    cfg = load_config(args.config)
    data = read_dataset(args.data)
    model, report = train(data.joints, data.sensors, args.direction, _parse_sensors(args.sensors), cfg.train)
    out = _out_path(args.out)
    save_model(model, out)
    _dump_json(_sibling(out, ".report.json"), report.to_dict())
    names = ", ".join(f"{n}={v:.4f}" for n, v in zip(report.output_names, report.test_rmse))
    print(f"trained {report.direction} model {report.layer_sizes} in {report.epochs_run} epochs; test RMSE {names}")


def evaluate_model(model, data, train_cfg=None, rows: str = "test"):
    """RMSE of ``model`` on ``data``; ``rows='test'`` uses the test split of ``train_cfg``."""
    n_in = model.layer_sizes[0]
    expected = len(model.sensors) if model.direction is Direction.INVERSE else len(JOINT_NAMES)
    if n_in != expected:
        raise ValueError(f"model takes {n_in} inputs but its metadata implies {expected}")
    X, Y = io_arrays(data.joints, data.sensors, model.direction, model.sensors)
    if Y.shape[1] != model.layer_sizes[2]:
        raise ValueError(f"model produces {model.layer_sizes[2]} outputs, data provides {Y.shape[1]}")
    if rows == "test":
        _, _, idx = split_indices(len(data), train_cfg)
        X, Y = X[idx], Y[idx]
    if model.direction is Direction.INVERSE:
        weighted = train_cfg is not None and train_cfg.weight_azimuth_by_sin_phi
        return dict(zip(JOINT_NAMES, (float(v) for v in joint_rmse(model.predict(X), Y, weighted))))
    names = tuple(f"dl_{s}_mm" for s in model.sensors)
    return dict(zip(names, (float(v) for v in rmse(model.predict(X), Y))))


def cmd_eval(args):
    cfg = load_config(args.config)
    model = load_model(args.model)
    data = read_dataset(args.data)
    for name, value in evaluate_model(model, data, cfg.train, args.rows).items():
        print(f"rmse {name} {value:.6f}")


def cmd_ablate(args):
    cfg = load_config(args.config)
    data = read_dataset(args.data)
    n_jobs = int(os.environ.get("TENDONSENSE_THREADS", "1"))
    report = ablate(data, cfg.train, n_jobs=n_jobs)
    out = _out_path(args.out)
    rows = report.to_rows()
    _dump_json(out, {"entries": rows, "ordering": report.ordering(),
                     "mean_rmse_by_size": {str(k): report.mean_by_size(k) for k in (2, 3, 4)}})
    header = ["size", "rmse_theta_deg", "rmse_phi_deg", "mean_rmse_deg", "epochs_run"]
    lines = ["subset," + ",".join(header)] + [
        r["subset"] + "," + ",".join(repr(r[h]) for h in header) for r in rows
    ]
    _sibling(out, ".csv").write_text("\n".join(lines) + "\n")
    for r in rows:
        print(f"{r['subset']:>12}  theta {r['rmse_theta_deg']:8.3f}  phi {r['rmse_phi_deg']:8.3f}")


def cmd_fwdmap(args):
    cfg = load_config(args.config)
    if args.grid < 2:
        raise CliError("--grid must be at least 2")
    az = np.linspace(*WORKSPACE_AZIMUTH_DEG, args.grid)
    el = np.linspace(*WORKSPACE_ELEVATION_DEG, args.grid)
    surf = forward_surface(cfg.layout, az, el)
    A, E = np.meshgrid(az, el, indexing="ij")
    cols = [A.ravel(), E.ravel()] + [surf[n].ravel() for n in TENDON_NAMES]
    out = _out_path(args.out)
    _write_csv(out, ["theta_deg", "phi_deg"] + [f"dl_{n}_mm" for n in TENDON_NAMES], np.column_stack(cols))
    mono = monotonicity_screen(cfg.layout)
    _dump_json(_sibling(out, ".monotonicity.json"), [
        {"tendon": e.tendon, "movement": e.movement, "sign_pattern": e.sign_pattern, "reversals": e.reversals,
         "max_reversal_mm": e.max_reversal_mm, "total_change_mm": e.total_change_mm, "monotone": e.monotone}
        for e in mono.entries
    ])
    print(f"wrote {args.grid}x{args.grid} forward map to {out}")


def cmd_hysteresis(args):
    cfg = load_config(args.config)
    t, joints, ideal, emulated = hysteresis_sweep(cfg.layout, cfg.sensor)
    metrics = compare_channels(ideal, emulated, joints)
    out = _out_path(args.out)
    header = ["time_s", "theta_deg", "phi_deg"] + [f"ideal_{n}_mm" for n in TENDON_NAMES] + \
        [f"emulated_{n}_mm" for n in TENDON_NAMES]
    _write_csv(out, header, np.column_stack([t, joints, ideal, emulated]))
    _dump_json(_sibling(out, ".metrics.json"), {n: m.__dict__ for n, m in metrics.items()})
    for n, m in metrics.items():
        print(f"{n:>2}  loop {m.loop_width_mm:.4f} mm  offset {m.residual_offset_mm:+.4f} mm  rms {m.rms_gap_mm:.4f} mm")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tendonsense", description="Tendon-based shoulder sensing simulation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="protocol suite -> ideal.csv and emulated.csv")
    g.add_argument("--config")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a forward or inverse model")
    t.add_argument("--data", required=True)
    t.add_argument("--direction", choices=["inv", "fwd"], default="inv")
    t.add_argument("--sensors", default=",".join(TENDON_NAMES))
    t.add_argument("--config")
    t.add_argument("--out", required=True, help="model file; the report goes to <out>.report.json")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="print per-output RMSE of a model on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--config")
    e.add_argument("--rows", choices=["test", "all"], default="test")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", help="inverse-map RMSE for every sensor subset of size >= 2")
    a.add_argument("--data", required=True)
    a.add_argument("--config")
    a.add_argument("--out", required=True, help="JSON report; a CSV goes to <out>.csv")
    a.set_defaults(func=cmd_ablate)

    f = sub.add_parser("fwdmap", help="forward map on a lattice plus monotonicity screen")
    f.add_argument("--config")
    f.add_argument("--grid", type=int, default=31)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fwdmap)

    h = sub.add_parser("hysteresis", help="ideal vs emulated sensors over repeated flexion sweeps")
    h.add_argument("--config")
    h.add_argument("--out", required=True)
    h.set_defaults(func=cmd_hysteresis)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (CliError, ConfigError, DatasetFormatError, ModelFormatError, TrainingDivergedError,
            FileNotFoundError, ValueError, KeyError) as exc:
        print(f"tendonsense {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
