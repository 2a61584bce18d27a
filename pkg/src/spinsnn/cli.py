"""Command line: ``spinsnn [global flags] <command> [flags]``.

Commands
    micromag sweep   wall velocity vs current density on the Table I strip -> velocity.csv
    calibrate        mobility and saturation speed from the sweep -> calibration.txt
    train            STDP training on MNIST -> checkpoint.ckpt, train_stats.csv, run.cfg
    eval             class assignment and test accuracy -> eval_summary.csv, confusion.csv
    report           energy totals reconciled against the event log -> report.txt
    emit-maps        weight maps as PGM images -> maps/

Global flags (accepted before or after the command): --config, --seed,
--out-dir, --trace, --log-events.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import micromag, network
from .device import ExactSum
from .errors import CheckpointError, SpinSNNError
from .io import config as cfgmod
from .io.checkpoint import decode_checkpoint, load_checkpoint, save_checkpoint
from .io.idx import load_mnist
from .io.pgm import emit_weight_maps
from .learning import EventLog

log = logging.getLogger("spinsnn")

CHECKPOINT = "checkpoint.ckpt"
RUN_CONFIG = "run.cfg"
EVENTS = "events.csv"
TRACE = "trace.csv"


class ReconciliationError(SpinSNNError):
    pass


def _atomic_write(path, data):
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_bytes(data if isinstance(data, bytes) else data.encode())
    os.replace(tmp, path)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _load_config(args, fallback_dir=True):
    path = args.config
    if path is None and fallback_dir and (args.out_dir / RUN_CONFIG).exists():
        path = args.out_dir / RUN_CONFIG
    cfg = cfgmod.load(path) if path is not None else cfgmod.RunConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


# --------------------------------------------------------------------------
# commands


def cmd_sweep(args):
    cfg = _load_config(args, fallback_dir=False)
    runs = micromag.velocity_curve(cfg.material, cfg.sweep.j_values, duration=cfg.sweep.duration, dt=cfg.sweep.dt)
    for r in runs:
        log.info("J=%.3e A/m^2  v=%.1f m/s%s", r.J, r.velocity, "  (nucleated)" if r.nucleated else "")
    rows = [(_fmt(r.J), _fmt(r.velocity), int(r.truncated), int(r.nucleated)) for r in runs]
    _atomic_write(args.out_dir / "velocity.csv", _csv_text(("J_A_per_m2", "velocity_m_per_s", "truncated",
                                                             "nucleated"), rows))
    return 0


def _read_sweep(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [micromag.WallRun(J=float(r["J_A_per_m2"]), velocity=float(r["velocity_m_per_s"]),
                             truncated=bool(int(r["truncated"])), times=np.zeros(0), positions=np.zeros(0),
                             nucleated=bool(int(r["nucleated"]))) for r in rows]


def cmd_calibrate(args):
    cfg = _load_config(args, fallback_dir=False)
    sweep = args.out_dir / "velocity.csv"
    if args.sweep is not None:
        sweep = Path(args.sweep)
    if sweep.exists():
        runs = _read_sweep(sweep)
    else:
        log.info("no sweep at %s; running it", sweep)
        runs = micromag.velocity_curve(cfg.material, cfg.sweep.j_values, duration=cfg.sweep.duration,
                                       dt=cfg.sweep.dt)
    record = micromag.calibrate_mobility(cfg.material, runs)
    path = args.out_dir / "calibration.txt"
    record.save(str(path) + ".partial")
    os.replace(str(path) + ".partial", path)
    log.info("mu_dw=%.3e (m/s)/(A/m^2)  v_sat=%.1f m/s", record.mu_dw, record.v_sat)
    return 0


class _EventSink:
    """Streams the programming-event log to CSV after every image."""

    def __init__(self, path, append):
        self.path = path
        self.partial = path.with_name(path.name + ".partial")
        if append and path.exists():
            self.partial.write_bytes(path.read_bytes())
        else:
            self.partial.write_text(",".join(EventLog.columns) + "\n")

    def flush(self, elog):
        if not elog.chunks:
            return
        rec = elog.records()
        elog.chunks.clear()
        with open(self.partial, "a") as fh:
            for row in rec.tolist():
                fh.write(",".join(_fmt(v) if isinstance(v, float) else str(int(v)) for v in row) + "\n")

    def close(self):
        os.replace(self.partial, self.path)


def cmd_train(args):
    cfg = _load_config(args, fallback_dir=args.resume)
    if args.calibration is not None:
        record = micromag.CalibrationRecord.load(args.calibration)
        cfg = cfgmod.dataclasses.replace(cfg, device=cfgmod.dataclasses.replace(cfg.device, v_sat=record.v_sat))
    images, _ = load_mnist(cfg.data.mnist_dir, "train")
    n_train = cfg.network.n_train
    if n_train > len(images):
        raise SpinSNNError(f"n_train={n_train} exceeds the {len(images)} training images")
    ckpt = args.out_dir / CHECKPOINT
    if args.resume:
        if not ckpt.exists():
            raise CheckpointError(f"--resume given but {ckpt} does not exist")
        net = load_checkpoint(ckpt, cfg, keep_events=args.log_events)
    else:
        net = cfgmod.build_network(cfg, keep_events=args.log_events)
    sink = _EventSink(args.out_dir / EVENTS, append=args.resume) if args.log_events else None
    trace_rows = []
    if args.trace:
        net.tracer = lambda n, spk: trace_rows.extend((n.images_trained, n.clock, int(j)) for j in np.flatnonzero(spk))

    def progress(done, total):
        if sink is not None:
            sink.flush(net.engine.log)
        if done % 100 == 0 or done == total:
            log.info("trained %d / %d images", done, total)

    net, stats = network.train(net, images[:n_train], progress=progress, stop_after=args.stop_after)
    save_checkpoint(net, str(args.out_dir / CHECKPOINT) + ".partial", cfg.hash())
    os.replace(str(args.out_dir / CHECKPOINT) + ".partial", args.out_dir / CHECKPOINT)
    _atomic_write(args.out_dir / RUN_CONFIG, cfgmod.dumps(cfg))
    header = ("epoch", "images", "exc_spikes", "programming_events", "hm_joule_J", "supply_J", "weight_drift")
    rows = [(s.epoch, s.images, s.exc_spikes, s.programming_events, _fmt(s.hm_joule), _fmt(s.supply),
             _fmt(s.weight_drift)) for s in stats]
    _atomic_write(args.out_dir / "train_stats.csv", _csv_text(header, rows))
    summary = (f"config_hash {cfg.hash()}\nseed {cfg.network.seed}\nimages_trained {net.images_trained}\n"
               f"programming_events {net.energy.event_count}\nhm_joule_J {net.energy.hm_joule_total!r}\n"
               f"supply_J {net.energy.supply_total!r}\n"
               f"receptive_field_score {network.receptive_field_score(net.weights)!r}\n")
    _atomic_write(args.out_dir / "train_summary.txt", summary)
    if sink is not None:
        sink.close()
    if args.trace:
        _atomic_write(args.out_dir / TRACE, _csv_text(("image", "step", "neuron"), trace_rows))
    return 0


def _require_checkpoint(args):
    path = Path(args.checkpoint) if args.checkpoint else args.out_dir / CHECKPOINT
    if not path.exists():
        raise CheckpointError(f"missing input: checkpoint {path} not found (run `train` first)")
    return path


def cmd_eval(args):
    path = _require_checkpoint(args)
    cfg = _load_config(args)
    net = load_checkpoint(path, cfg)
    train_x, train_y = load_mnist(cfg.data.mnist_dir, "train")
    test_x, test_y = load_mnist(cfg.data.mnist_dir, "test")
    n_assign, n_test = cfg.network.n_assign, cfg.network.n_test
    assignment = network.assign_classes(net, train_x[:n_assign], train_y[:n_assign])
    ev = network.evaluate(net, assignment, test_x[:n_test], test_y[:n_test])
    log.info("accuracy %.4f on %d test images", ev.accuracy, n_test)
    silent = int(np.count_nonzero(assignment.labels == network.NONE))
    _atomic_write(args.out_dir / "eval_summary.csv", _csv_text(
        ("accuracy", "n_assign", "n_test", "silent_neurons", "chance_level", "config_hash"),
        [(_fmt(ev.accuracy), n_assign, n_test, silent, int(ev.chance_level), cfg.hash())]))
    _atomic_write(args.out_dir / "confusion.csv", _csv_text(
        ("true_label", *[f"pred_{c}" for c in range(network.N_CLASSES)], "pred_none"),
        [(c, *ev.confusion[c]) for c in range(network.N_CLASSES)]))
    _atomic_write(args.out_dir / "assignment.csv", _csv_text(
        ("neuron", "label", *[f"count_{c}" for c in range(network.N_CLASSES)]),
        [(j, assignment.labels[j], *assignment.histogram[j]) for j in range(len(assignment.labels))]))
    _atomic_write(args.out_dir / "eval_summary.txt",
                  f"accuracy {ev.accuracy!r}\nn_assign {n_assign}\nn_test {n_test}\nsilent_neurons {silent}\n")
    return 0


def reconcile(checkpoint_path, events_path):
    """Energy totals from a checkpoint vs the exact sum over an event log."""
    header, *_ = decode_checkpoint(Path(checkpoint_path).read_bytes())
    joule, supply, count = ExactSum(), ExactSum(), 0
    with open(events_path) as fh:
        for row in csv.DictReader(fh):
            joule.add(float(row["E_joule"]))
            supply.add(float(row["E_supply"]))
            count += 1
    stored = (header["energy_events"], header["energy_joule"], header["energy_supply"])
    return {"events_checkpoint": stored[0], "events_log": count,
            "hm_joule_checkpoint": ExactSum(stored[1]).value, "hm_joule_log": joule.value,
            "supply_checkpoint": ExactSum(stored[2]).value, "supply_log": supply.value,
            "match": stored == (count, joule.total, supply.total)}


def cmd_report(args):
    path = _require_checkpoint(args)
    events = args.out_dir / EVENTS
    if not events.exists():
        raise SpinSNNError(f"missing input: event log {events} not found (train with --log-events)")
    r = reconcile(path, events)
    text = "".join(f"{k} {v!r}\n" for k, v in r.items())
    if not r["match"]:
        raise ReconciliationError("energy totals do not match the event log:\n" + text)
    _atomic_write(args.out_dir / "report.txt", text)
    _atomic_write(args.out_dir / "report.csv", _csv_text(list(r), [[_fmt(v) for v in r.values()]]))
    print(text, end="")
    return 0


def cmd_emit_maps(args):
    if args.fresh:
        net = cfgmod.build_network(_load_config(args))
    else:
        net = load_checkpoint(_require_checkpoint(args), _load_config(args))
    paths = emit_weight_maps(net.weights, args.out_dir / "maps")
    log.info("wrote %d images to %s", len(paths), args.out_dir / "maps")
    return 0


# --------------------------------------------------------------------------
# parser


def _global_flags(defaults):
    p = argparse.ArgumentParser(add_help=False)
    sup = None if not defaults else argparse.SUPPRESS
    p.add_argument("--config", type=Path, default=sup, help="run configuration file")
    p.add_argument("--seed", type=int, default=sup, help="override [network] seed")
    p.add_argument("--out-dir", type=Path, default=sup, help="output directory (default: .)")
    p.add_argument("--trace", action="store_true", default=sup, help="write the excitatory spike raster")
    p.add_argument("--log-events", action="store_true", default=sup, help="write the programming-event log")
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="spinsnn", description=__doc__.split("\n")[0],
                                     parents=[_global_flags(False)])
    parser.set_defaults(out_dir=Path("."))
    sub = parser.add_subparsers(dest="command", required=True)
    g = _global_flags(True)

    mm = sub.add_parser("micromag", help="micromagnetic runs", parents=[g])
    mm_sub = mm.add_subparsers(dest="micromag_command", required=True)
    mm_sub.add_parser("sweep", help="velocity vs current density", parents=[g]).set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit mobility and v_sat", parents=[g])
    p.add_argument("--sweep", help="velocity.csv to fit (default: OUT_DIR/velocity.csv, else run the sweep)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", help="train the network", parents=[g])
    p.add_argument("--calibration", help="calibration.txt whose v_sat sets the device saturation speed")
    p.add_argument("--resume", action="store_true", help="continue from OUT_DIR/checkpoint.ckpt")
    p.add_argument("--stop-after", type=int, help="stop after this many images (resume later)")
    p.set_defaults(func=cmd_train)

    for name, func, help_ in (("eval", cmd_eval, "assign classes and measure accuracy"),
                              ("report", cmd_report, "reconcile energy totals with the event log"),
                              ("emit-maps", cmd_emit_maps, "write weight maps as PGM")):
        p = sub.add_parser(name, help=help_, parents=[g])
        p.add_argument("--checkpoint", help="checkpoint file (default: OUT_DIR/checkpoint.ckpt)")
        if name == "emit-maps":
            p.add_argument("--fresh", action="store_true", help="maps of an untrained network")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for flag in ("checkpoint", "calibration", "resume", "stop_after", "sweep", "fresh"):
        if not hasattr(args, flag):
            setattr(args, flag, None)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except (SpinSNNError, OSError, ValueError) as exc:
        print(f"spinsnn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
