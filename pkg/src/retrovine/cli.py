"""Command-line front end.

Every command resolves its parameters from built-in defaults, then an
optional JSON config file (``--config``), then command-line flags. Outputs go
to a fresh run directory together with ``manifest.json``, which echoes the
resolved configuration, input and output digests, and library versions. The
default output root is ``$RETROVINE_OUTPUT_ROOT`` or ``./runs``.

Failures print a JSON object ``{"error": ..., "message": ...}`` on stderr and
exit with status 1 (2 for usage errors).
"""
import argparse
import hashlib
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._backend import BACKEND
from .data import (gen_bimodal, gen_fig2, gen_heteroscedastic, gen_homoscedastic,
                   gen_moons, load_csv, save_csv)
from .evaluation import evaluate, write_curve_csv
from .net import MlpModel, TrainConfig, train_mlp
from .paircop import FAMILIES, FitConfig
from .rng import RNG_ALGORITHM, subseed
from .vcnn import VcnnConfig, conditional_quantiles, fit_vcnn, interval_report

OUTPUT_ROOT_ENV = "RETROVINE_OUTPUT_ROOT"
GENERATORS = ("fig2", "heteroscedastic", "homoscedastic", "bimodal", "moons")
DEMOS = ("fig2a", "fig2b", "fig2c", "bimodal", "moons")


class CliError(Exception):
    def __init__(self, message, kind="error", status=1):
        super().__init__(message)
        self.kind = kind
        self.status = status


def _int_list(text):
    if isinstance(text, list):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _str_list(text):
    if isinstance(text, list):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _opt_int(v):
    return None if v in (None, "none", "None") else int(v)


def _opt_float(v):
    return None if v in (None, "none", "None") else float(v)


def _opt_str(v):
    return None if v is None else str(v)


# name -> (parser, default, help)
COMMON = {
    "seed": (int, 0, "run seed; every random stream derives from it"),
    "threads": (_opt_int, None, "worker threads (default: all cores)"),
    "out": (_opt_str, None, "run directory (must not exist yet)"),
}
GENERATE = {
    "generator": (str, "fig2", f"one of {', '.join(GENERATORS)}"),
    "mode": (str, "C", "fig2 input set: A, B or C"),
    "n_train": (int, 280, "training rows"),
    "n_test": (int, 100, "test rows"),
    "noise_sd": (_opt_float, None, "noise level (generator default if unset)"),
}
TRAIN = {
    "train": (_opt_str, None, "training CSV"),
    "target": (str, "y", "target column"),
    "hidden": (_int_list, [50, 50], "hidden widths, comma separated"),
    "epochs": (int, 100, "training epochs"),
    "learning_rate": (float, 1e-2, "SGD step size"),
    "batch_size": (int, 32, "mini-batch size"),
}
UNCERTAINTY = {
    "model": (_opt_str, None, "trunk model JSON"),
    "train": (_opt_str, None, "training CSV"),
    "test": (_opt_str, None, "test CSV"),
    "target": (str, "y", "target column"),
    "S": (int, 30, "number of bootstrap heads"),
    "alpha": (float, 0.05, "miscoverage level"),
    "bootstrap_sample_size": (_opt_int, None, "vine samples per head (default: training size)"),
    "truncation_level": (_opt_int, 3, "fitted vine trees"),
    "families": (_str_list, list(FAMILIES), "pair-copula families"),
    "kernel_multiplier": (float, 0.1, "kernel bandwidth multiplier"),
    "kernel_grid_size": (int, 64, "kernel density grid size"),
    "head_epochs": (int, 100, "head training epochs"),
    "head_learning_rate": (float, 1e-2, "head SGD step size"),
    "head_batch_size": (int, 32, "head mini-batch size"),
}
EVAL = {
    "intervals": (_opt_str, None, "CSV holding targets and bounds"),
    "y_column": (str, "y", "target column"),
    "lower_column": (str, "L", "lower bound column"),
    "upper_column": (str, "U", "upper bound column"),
    "prediction_column": (str, "y_hat", "prediction column (bound midpoint if absent)"),
    "quantiles": (_opt_str, None, "optional quantile CSV (columns q_<tau>)"),
}
DEMO = {"name": (str, None, f"one of {', '.join(DEMOS)}")}

COMMANDS = {
    "generate": {**COMMON, **GENERATE},
    "train": {**COMMON, **TRAIN},
    "uncertainty": {**COMMON, **UNCERTAINTY},
    "eval": {**COMMON, **EVAL},
    "demo": {**COMMON, **DEMO, **{k: v for k, v in UNCERTAINTY.items()
                                  if k not in ("model", "train", "test", "target")},
             **{k: v for k, v in TRAIN.items() if k not in ("train", "target")}},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message, "usage", 2)


def build_parser():
    p = _Parser(prog="retrovine", description="Vine-copula uncertainty intervals for regressors.")
    p.add_argument("--version", action="version", version=f"retrovine {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name, table in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="JSON config file")
        for key, (_, default, text) in table.items():
            if name == "demo" and key == "name":
                sp.add_argument("name", nargs="?", default=None, help=text)
                continue
            hint = text if "(default" in text else f"{text} (default: {default})"
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=hint)
    return p


def resolve(command, args):
    """Merge defaults, config file and flags into one parameter dict."""
    table = COMMANDS[command]
    cfg = {k: v[1] for k, v in table.items()}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc}", "io") from None
        except json.JSONDecodeError as exc:
            raise CliError(f"config {args.config} is not valid JSON: {exc}", "schema") from None
        if not isinstance(file_cfg, dict):
            raise CliError("config file must hold a JSON object", "schema")
        unknown = sorted(set(file_cfg) - set(table))
        if unknown:
            raise CliError(f"unknown config keys for {command}: {unknown}", "schema")
        for k, v in file_cfg.items():
            cfg[k] = _parse(table, k, v)
    for k in table:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = _parse(table, k, v)
    return cfg


def _parse(table, key, value):
    try:
        return table[key][0](value)
    except (TypeError, ValueError):
        raise CliError(f"invalid value for {key}: {value!r}", "schema") from None


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise CliError(f"missing required parameter(s): {', '.join(missing)}", "usage", 2)


def _threads(cfg):
    return cfg["threads"] or os.cpu_count() or 1


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """A write-once output directory with a manifest."""

    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        if cfg["out"]:
            path = Path(cfg["out"])
        else:
            root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
            key = hashlib.sha256(json.dumps([command, cfg], sort_keys=True).encode()).hexdigest()[:12]
            path = root / f"{command}-{key}"
            k = 2
            while path.exists():
                path = root / f"{command}-{key}-{k}"
                k += 1
        if path.exists():
            raise CliError(f"output directory {path} already exists", "io")
        path.mkdir(parents=True)
        self.path = path
        self.inputs = {}
        self.outputs = []

    def file(self, name):
        p = self.path / name
        if name in self.outputs:
            raise CliError(f"output {name} written twice", "internal")
        self.outputs.append(name)
        return p

    def add_input(self, label, path):
        try:
            self.inputs[label] = {"path": str(path), "sha256": _digest(path)}
        except OSError as exc:
            raise CliError(f"cannot read {label} {path}: {exc}", "io") from None

    def finish(self, extra=None):
        manifest = {
            "command": self.command,
            "config": {k: v for k, v in self.cfg.items() if k != "out"},
            "inputs": self.inputs,
            "outputs": {n: _digest(self.path / n) for n in sorted(self.outputs)},
            "seed": self.cfg["seed"],
            "threads_used": _threads(self.cfg),
            "rng": RNG_ALGORITHM,
            "versions": {"retrovine": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version(),
                         "kernels": BACKEND},
        }
        if extra:
            manifest.update(extra)
        with open(self.path / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return {"status": "ok", "command": self.command, "output_dir": str(self.path),
                "outputs": sorted(self.outputs)}


def _load(path, target, label):
    try:
        return load_csv(path, target)
    except OSError as exc:
        raise CliError(f"cannot read {label} {path}: {exc}", "io") from None
    except ValueError as exc:
        raise CliError(str(exc), "data") from None


def _generate(cfg):
    g, seed = cfg["generator"], cfg["seed"]
    ns = {} if cfg["noise_sd"] is None else {"noise_sd": cfg["noise_sd"]}
    if g == "fig2":
        return gen_fig2(cfg["n_train"], cfg["n_test"], cfg["mode"], seed, **ns)
    if g == "heteroscedastic":
        return gen_heteroscedastic(cfg["n_train"], cfg["n_test"], seed)
    if g == "homoscedastic":
        return gen_homoscedastic(cfg["n_train"], cfg["n_test"], seed, **ns)
    if g == "bimodal":
        return (gen_bimodal(cfg["n_train"], seed, split="train", **ns),
                gen_bimodal(cfg["n_test"], seed, split="test", **ns))
    if g == "moons":
        sd = cfg["noise_sd"] if cfg["noise_sd"] is not None else 0.1
        return (gen_moons(cfg["n_train"], sd, seed, "train"),
                gen_moons(cfg["n_test"], sd, seed, "test"))
    raise CliError(f"unknown generator {g!r}; choose from {', '.join(GENERATORS)}", "schema")


def cmd_generate(cfg):
    train, test = _generate(cfg)
    run = Run("generate", cfg)
    save_csv(train, run.file("train.csv"))
    save_csv(test, run.file("test.csv"))
    return run.finish()


def _train_config(cfg):
    return TrainConfig(epochs=cfg["epochs"], learning_rate=cfg["learning_rate"],
                       batch_size=cfg["batch_size"], seed=subseed(cfg["seed"], "trunk"))


def _fit_trunk(train, cfg, run):
    widths = (train.p, *cfg["hidden"], 1)
    model, trace = train_mlp(train.X, train.y, widths, _train_config(cfg))
    model.save(run.file("model.json"))
    write_curve_csv([(r["epoch"], r["loss"]) for r in trace], run.file("loss_trace.csv"),
                    ["epoch", "loss"])
    return model


def cmd_train(cfg):
    _require(cfg, "train")
    train = _load(cfg["train"], cfg["target"], "training data")
    run = Run("train", cfg)
    run.add_input("train", cfg["train"])
    _fit_trunk(train, cfg, run)
    return run.finish()


def _vcnn_config(cfg):
    fit = FitConfig(family_set=tuple(cfg["families"]),
                    kernel_bandwidth_multiplier=cfg["kernel_multiplier"],
                    kernel_grid_size=cfg["kernel_grid_size"])
    head = TrainConfig(epochs=cfg["head_epochs"], learning_rate=cfg["head_learning_rate"],
                       batch_size=cfg["head_batch_size"])
    return VcnnConfig(S=cfg["S"], alpha=cfg["alpha"],
                      bootstrap_sample_size=cfg["bootstrap_sample_size"],
                      truncation_level=cfg["truncation_level"], fit=fit, head_train=head,
                      seed=subseed(cfg["seed"], "vcnn"), threads=_threads(cfg))


def _uncertainty(trunk, train, test, cfg, run):
    vcfg = _vcnn_config(cfg)
    model = fit_vcnn(trunk, train.X, train.y, vcfg)
    report = interval_report(model, test.X, y_test=test.y)
    report.to_csv(run.file("intervals.csv"))
    report.to_json(run.file("intervals.json"))
    taus = vcfg.tau_grid
    Q, _ = conditional_quantiles(model, test.X, taus)
    path = run.file("quantiles.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"q_{t:g}" for t in taus) + "\n")
        for row in Q:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(run.file("vine.json"), "w", encoding="utf-8") as fh:
        json.dump(model.vine.to_dict(), fh, sort_keys=True)
    return report, Q, taus


def cmd_uncertainty(cfg):
    _require(cfg, "model", "train", "test")
    try:
        trunk = MlpModel.load(cfg["model"])
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load model {cfg['model']}: {exc}", "io") from None
    train = _load(cfg["train"], cfg["target"], "training data")
    test = _load(cfg["test"], cfg["target"], "test data")
    run = Run("uncertainty", cfg)
    for k in ("model", "train", "test"):
        run.add_input(k, cfg[k])
    _uncertainty(trunk, train, test, cfg, run)
    return run.finish()


def _read_columns(path, label):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise CliError(f"cannot read {label} {path}: {exc}", "io") from None
    if not lines:
        raise CliError(f"{label} {path} is empty", "data")
    header = [h.strip() for h in lines[0].split(",")]
    rows = []
    for i, ln in enumerate(lines[1:], start=1):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise CliError(f"{path}: row {i} has {len(cells)} fields, expected {len(header)}", "data")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise CliError(f"{path}: row {i} has a non-numeric cell", "data") from None
    A = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))
    return {h: A[:, j] for j, h in enumerate(header)}


def _write_metrics(run, y, y_hat, lower, upper, Q=None, taus=None):
    try:
        rep = evaluate(y, y_hat, lower, upper, Q, taus)
    except ValueError as exc:
        raise CliError(str(exc), "data") from None
    rep.to_json(run.file("metrics.json"))
    write_curve_csv(rep.retention_curve, run.file("retention.csv"), ["retained_fraction", "mae"])
    if rep.calibration_curve:
        write_curve_csv(rep.calibration_curve, run.file("calibration.csv"),
                        ["tau", "empirical_fraction"])
    return rep


def cmd_eval(cfg):
    _require(cfg, "intervals")
    cols = _read_columns(cfg["intervals"], "intervals")
    for k in ("y_column", "lower_column", "upper_column"):
        if cfg[k] not in cols:
            raise CliError(f"column {cfg[k]!r} not in {cfg['intervals']}", "data")
    y, lo, hi = cols[cfg["y_column"]], cols[cfg["lower_column"]], cols[cfg["upper_column"]]
    y_hat = cols.get(cfg["prediction_column"], (lo + hi) / 2.0)
    Q = taus = None
    if cfg["quantiles"]:
        qcols = _read_columns(cfg["quantiles"], "quantiles")
        names = [n for n in qcols if n.startswith("q_")]
        try:
            taus = [float(n[2:]) for n in names]
        except ValueError:
            raise CliError("quantile columns must be named q_<tau>", "data") from None
        Q = np.column_stack([qcols[n] for n in names])
    run = Run("eval", cfg)
    run.add_input("intervals", cfg["intervals"])
    if cfg["quantiles"]:
        run.add_input("quantiles", cfg["quantiles"])
    rep = _write_metrics(run, y, y_hat, lo, hi, Q, taus)
    out = run.finish()
    out["picp"], out["mpiw"] = rep.picp, rep.mpiw
    return out


def _demo_data(name, seed):
    if name in ("fig2a", "fig2b", "fig2c"):
        return gen_fig2(280, 100, name[-1].upper(), seed)
    if name == "bimodal":
        return gen_bimodal(1000, seed, split="train"), gen_bimodal(200, seed, split="test")
    if name == "moons":
        return gen_moons(1000, 0.1, seed, "train"), gen_moons(200, 0.1, seed, "test")
    raise CliError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}", "usage", 2)


def cmd_demo(cfg):
    _require(cfg, "name")
    train, test = _demo_data(cfg["name"], cfg["seed"])
    run = Run("demo", cfg)
    save_csv(train, run.file("train.csv"))
    save_csv(test, run.file("test.csv"))
    trunk = _fit_trunk(train, cfg, run)
    report, Q, taus = _uncertainty(trunk, train, test, cfg, run)
    rep = _write_metrics(run, test.y, report.y_hat, report.L, report.U, Q, taus)
    out = run.finish({"demo": cfg["name"], "dataset": train.meta})
    out["picp"], out["mpiw"] = rep.picp, rep.mpiw
    return out


HANDLERS = {"generate": cmd_generate, "train": cmd_train, "uncertainty": cmd_uncertainty,
            "eval": cmd_eval, "demo": cmd_demo}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise CliError("a command is required: " + ", ".join(HANDLERS), "usage", 2)
        cfg = resolve(args.command, args)
        result = HANDLERS[args.command](cfg)
    except CliError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return exc.status
    except (ValueError, FloatingPointError, RuntimeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
