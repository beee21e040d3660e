"""Command-line front end.

Subcommands: ``make-model``, ``make-data``, ``attack`` (one point, full trace),
and ``bench`` (the table1 / cdf / scatter / sweep protocols). Every config key
has a flag named exactly after it; values resolve as defaults < config file <
flags, and each run writes a manifest echoing the fully resolved config so it
can be reproduced bit-for-bit.

Config files are flat ``key=value`` text; a JSON manifest from a previous run
is accepted anywhere a config file is.

Exit codes: 0 protocol completed (attack failure is data, not an error),
1 usage or config error, 2 runtime error.
"""

import argparse
import csv
import io
import json
import os
import sys

from . import harness
from ._version import VERSION
from .attacks import AttackConfig, PgdConfig, run_gradient_free_attack, run_pgd
from .datasets import DATA_MAGIC, load_dataset, make_dataset, save_dataset
from .estimators import EstimatorConfig
from .models import MODEL_MAGIC, BUILTIN_NAMES, load_model, make_builtin, save_model


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_list(text, cast):
    return [cast(t) for t in str(text).split(",") if t.strip() != ""]


_LIST_KEYS = {"attacks": str, "batches": int, "epsilons": float}

_SCALAR_KEYS = {
    "model": str, "model_seed": int, "model_path": str,
    "dataset": str, "dataset_n": int, "dataset_seed": int, "dataset_path": str,
    "point": int,
    "estimator": str, "delta": float, "sigma": float, "h": float, "batch": int,
    "lr": float, "max_iters": int, "epsilon": float, "stop_threshold": float,
    "init": str, "seed": int, "pgd_iters": int, "pgd_step_size": float,
}

ATTACK_DEFAULTS = {
    "model": "linear2d", "model_seed": 0, "model_path": None,
    "dataset": "gauss2d", "dataset_n": 100, "dataset_seed": 0, "dataset_path": None,
    "point": 0,
    "estimator": "spsa", "delta": 0.01, "sigma": 0.01, "h": 1e-4, "batch": 8192,
    "lr": 0.01, "max_iters": 100, "epsilon": 0.1, "stop_threshold": -5.0,
    "init": "random_ball", "seed": 0, "pgd_iters": 20, "pgd_step_size": None,
}

TRACE_HEADER = ("iteration", "cumulative_queries", "margin", "misclassified",
                "iterate_hash")


def _coerce(key, raw):
    if key in _LIST_KEYS:
        return _parse_list(raw, _LIST_KEYS[key])
    if key in _SCALAR_KEYS:
        return _SCALAR_KEYS[key](raw)
    raise UsageError(f"unknown config key {key!r}")


def read_config_file(path) -> dict:
    """Flat key=value text, or a JSON manifest from an earlier run."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        obj = json.loads(text)
        config = obj.get("config", obj)
        if not isinstance(config, dict):
            raise UsageError(f"manifest {path} has no config object")
        return dict(config)
    config = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        config[key] = value
    return config


def _add_key_flags(parser, keys, defaults=None):
    defaults = defaults or {}
    for key in keys:
        shown = defaults.get(key, "per preset")
        if key in _LIST_KEYS:
            parser.add_argument(f"--{key}", metavar="CSV",
                                help=f"comma-separated {key} (default {shown})")
        else:
            parser.add_argument(f"--{key}", metavar=key.upper(),
                                help=f"{key} (default {shown})")


def build_parser() -> _Parser:
    parser = _Parser(prog="bbattack", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"bbattack {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file or a run manifest (JSON)")
    common.add_argument("--seed", type=int, help="global seed (default 0)")
    common.add_argument("--workers", type=int, default=1,
                        help="parallel worker count; never changes results (default 1)")
    common.add_argument("--out", help="output directory (default run-<command>)")

    p = sub.add_parser("make-model", parents=[common],
                       help="write a built-in model to a weight file")
    _add_key_flags(p, ["model", "model_seed"], {"model": "linear2d", "model_seed": 0})
    p.set_defaults(func=cmd_make_model)

    p = sub.add_parser("make-data", parents=[common],
                       help="write a synthetic dataset file")
    _add_key_flags(p, ["dataset", "dataset_n", "dataset_seed"],
                   {"dataset": "gauss2d", "dataset_n": 100, "dataset_seed": 0})
    p.set_defaults(func=cmd_make_data)

    p = sub.add_parser("attack", parents=[common],
                       help="attack one dataset point and write the full trace")
    _add_key_flags(p, [k for k in _SCALAR_KEYS if k != "seed"], ATTACK_DEFAULTS)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", parents=[common],
                       help="run an evaluation protocol preset")
    p.add_argument("preset", nargs="?", choices=harness.PRESET_NAMES,
                   help="protocol preset (may come from --config instead)")
    _add_key_flags(p, ["model", "model_seed", "dataset", "dataset_n", "dataset_seed",
                       "attacks", "batches", "epsilons", "epsilon", "batch",
                       "delta", "sigma", "h", "lr", "max_iters", "stop_threshold",
                       "init", "pgd_iters", "pgd_step_size"])
    p.set_defaults(func=cmd_bench)
    return parser


def _resolve(defaults, args, keys) -> dict:
    config = dict(defaults)
    if args.config:
        for key, value in read_config_file(args.config).items():
            if key == "protocol":
                continue  # manifests carry protocol metadata
            if key not in keys and key != "seed":
                continue
            config[key] = _coerce(key, value) if isinstance(value, str) else value
    for key in keys:
        raw = getattr(args, key, None)
        if raw is not None:
            config[key] = _coerce(key, raw)
    if args.seed is not None:
        config["seed"] = int(args.seed)
    config.setdefault("seed", 0)
    return config


def _out_dir(args, fallback):
    out = args.out or fallback
    os.makedirs(out, exist_ok=True)
    return out


def cmd_make_model(args) -> int:
    config = _resolve({"model": "linear2d", "model_seed": 0}, args, ["model", "model_seed"])
    out = _out_dir(args, "run-make-model")
    model = make_builtin(str(config["model"]), int(config["model_seed"]))
    path = os.path.join(out, f"{config['model']}-{config['model_seed']}.bbmodel")
    save_model(model, path)
    print(path)
    return 0


def cmd_make_data(args) -> int:
    config = _resolve({"dataset": "gauss2d", "dataset_n": 100, "dataset_seed": 0},
                      args, ["dataset", "dataset_n", "dataset_seed"])
    out = _out_dir(args, "run-make-data")
    ds = make_dataset(str(config["dataset"]), int(config["dataset_n"]),
                      int(config["dataset_seed"]))
    path = os.path.join(out, f"{config['dataset']}-{config['dataset_n']}-{config['dataset_seed']}.bbdata")
    save_dataset(ds, path)
    print(path)
    return 0


def _load_model_from(config):
    if config.get("model_path"):
        path = str(config["model_path"])
        if not os.path.exists(path):
            raise UsageError(f"model file not found: {path}")
        return load_model(path)
    name = str(config["model"])
    if name not in BUILTIN_NAMES:
        raise UsageError(f"unknown builtin model {name!r}")
    return make_builtin(name, int(config["model_seed"]))


def _load_dataset_from(config):
    if config.get("dataset_path"):
        path = str(config["dataset_path"])
        if not os.path.exists(path):
            raise UsageError(f"dataset file not found: {path}")
        return load_dataset(path)
    return make_dataset(str(config["dataset"]), int(config["dataset_n"]),
                        int(config["dataset_seed"]))


def cmd_attack(args) -> int:
    config = _resolve(ATTACK_DEFAULTS, args, list(ATTACK_DEFAULTS))
    out = _out_dir(args, "run-attack")
    model = _load_model_from(config)
    ds = _load_dataset_from(config)
    idx = int(config["point"])
    if not 0 <= idx < ds.n:
        raise UsageError(f"point index {idx} out of range for dataset of {ds.n}")
    point, label = ds.point(idx), int(ds.labels[idx])
    seed = harness.derive_seed(int(config["seed"]), idx)

    kind = str(config["estimator"])
    if kind == "pgd":
        step = config["pgd_step_size"]
        step = float(config["epsilon"]) / 10.0 if step is None else float(step)
        config["pgd_step_size"] = step
        trace = run_pgd(model, point, label,
                        PgdConfig(epsilon=float(config["epsilon"]), step_size=step,
                                  iters=int(config["pgd_iters"]),
                                  init=str(config["init"]), seed=seed))
    elif kind in ("spsa", "nes", "zoo"):
        est = EstimatorConfig(kind=kind, delta=float(config["delta"]),
                              sigma=float(config["sigma"]), h=float(config["h"]),
                              batch=int(config["batch"]))
        cfg = AttackConfig(epsilon=float(config["epsilon"]), estimator=est,
                           lr=float(config["lr"]), max_iters=int(config["max_iters"]),
                           stop_threshold=float(config["stop_threshold"]),
                           init=str(config["init"]), seed=seed)
        trace = run_gradient_free_attack(model, point, label, cfg)
    else:
        raise UsageError(f"unknown estimator {kind!r}; choose spsa, nes, zoo or pgd")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for r in trace.records:
        writer.writerow([r.iteration, r.cumulative_queries, repr(r.margin),
                         int(r.misclassified), r.iterate_hash])
    with open(os.path.join(out, "trace.csv"), "w") as fh:
        fh.write(buf.getvalue())
    harness.write_json(os.path.join(out, "manifest.json"), {
        "config": config,
        "model_fingerprint": model.fingerprint(),
        "versions": {"bbattack": VERSION, "model_format": MODEL_MAGIC,
                     "data_format": DATA_MAGIC},
    })
    harness.write_json(os.path.join(out, "outcome.json"), {
        "success": bool(trace.success),
        "queries_to_success": trace.queries_to_success,
        "total_queries": trace.total_queries,
        "best_margin": trace.best_margin(),
        "final_margin": trace.final_margin(),
    })
    print(f"success={int(trace.success)} queries={trace.total_queries} "
          f"best_margin={trace.best_margin():.6g} out={out}")
    return 0


def cmd_bench(args) -> int:
    file_config = read_config_file(args.config) if args.config else {}
    preset = args.preset or file_config.get("protocol")
    if preset is None:
        raise UsageError("bench needs a preset name or a --config with a protocol field")
    if preset not in harness.PRESET_NAMES:
        raise UsageError(f"unknown preset {preset!r}; choose from {harness.PRESET_NAMES}")
    seed = args.seed if args.seed is not None else file_config.get("seed", 0)
    config = harness.preset_config(preset, int(seed))
    for key, value in file_config.items():
        if key in ("protocol",):
            continue
        if key not in config:
            raise UsageError(f"config key {key!r} does not apply to preset {preset!r}")
        config[key] = _coerce(key, value) if isinstance(value, str) else value
    for key in list(config):
        raw = getattr(args, key, None)
        if raw is not None:
            config[key] = _coerce(key, raw)
    for key in (set(_SCALAR_KEYS) | set(_LIST_KEYS)) - set(config):
        if getattr(args, key, None) is not None:
            raise UsageError(f"flag --{key} does not apply to preset {preset!r}")
    if args.seed is not None:
        config["seed"] = int(args.seed)
    out = _out_dir(args, f"run-{preset}")
    paths = harness.run_protocol(config, out, workers=max(1, int(args.workers)))
    print(paths["summary"])
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # oracle / runtime failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
