"""Evaluation protocols: accuracy-vs-batch tables, convergence CDFs,
SPSA-vs-PGD margin scatter, and perturbation-size sweeps.

Per-point attacks are embarrassingly parallel; each point gets its own RNG
seed derived from (global seed, point index), results are aggregated in point
order, and the written CSV/JSON artifacts are byte-identical regardless of the
worker count. A run manifest records every resolved config field so any output
can be regenerated from the manifest alone.

Accuracy semantics: a table entry is the model's accuracy against the
adversary, so points that are misclassified before any perturbation count as
attacker successes (the attack's one-query early return handles this). The
epsilon sweep reuses success verdicts from smaller radii (any candidate
feasible at a small epsilon stays feasible at a larger one), which makes the
accuracy curve exactly non-increasing.
"""

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import datasets as ds_mod
from . import models
from ._version import VERSION
from .attacks import AttackConfig, PgdConfig, config_for_kind, run_gradient_free_attack, run_pgd
from .datasets import DATA_MAGIC, EvalDataset, make_dataset
from .estimators import EstimatorConfig
from .models import MODEL_MAGIC, make_builtin

GRADIENT_FREE_KINDS = ("spsa", "nes", "zoo")
PRESET_NAMES = ("table1", "cdf", "scatter", "sweep")

DEFAULT_CDF_BUDGETS = tuple(2 ** k for k in range(5, 16))


def derive_seed(global_seed: int, point_index: int) -> int:
    """Stable per-point RNG seed; independent of scheduling and worker count."""
    ss = np.random.SeedSequence([int(global_seed), int(point_index)])
    return int(ss.generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class PointResult:
    attack: str
    batch: int
    epsilon: float
    point_id: int
    seed: int
    success: bool
    queries_to_success: int | None
    best_margin: float
    final_margin: float
    total_queries: int


def _attack_task(args):
    model, row, lo, hi, y, cfg, seed = args
    point = models.InputVector(np.array(row), lo, hi)
    if isinstance(cfg, PgdConfig):
        trace = run_pgd(model, point, int(y), replace(cfg, seed=seed))
    else:
        trace = run_gradient_free_attack(model, point, int(y), replace(cfg, seed=seed))
    return (trace.success, trace.queries_to_success, trace.best_margin(),
            trace.final_margin(), trace.total_queries)


def _run_points(model, ds, point_ids, cfg, global_seed, workers):
    tasks = [
        (model, ds.points[i], ds.box_lo, ds.box_hi, ds.labels[i], cfg,
         derive_seed(global_seed, i))
        for i in point_ids
    ]
    if workers <= 1:
        return [_attack_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (workers * 4))
        return list(pool.map(_attack_task, tasks, chunksize=chunk))


def attack_dataset(model, ds: EvalDataset, kind: str, cfg: AttackConfig,
                   global_seed: int = 0, workers: int = 1,
                   point_ids=None) -> list:
    """Run one gradient-free attack over (a subset of) a dataset.

    ZOO cannot estimate more coordinates than the input has, so its batch is
    clamped to the input dimension; the reported batch stays the requested one
    so rows key cleanly against the protocol grid.
    """
    if kind not in GRADIENT_FREE_KINDS:
        raise ValueError(f"unknown attack kind {kind!r}; choose from {GRADIENT_FREE_KINDS}")
    requested_batch = cfg.estimator.batch
    run_batch = min(requested_batch, ds.dim) if kind == "zoo" else requested_batch
    run_cfg = config_for_kind(cfg, kind, batch=run_batch)
    ids = list(range(ds.n)) if point_ids is None else list(point_ids)
    raw = _run_points(model, ds, ids, run_cfg, global_seed, workers)
    return [
        PointResult(kind, requested_batch, cfg.epsilon, i, derive_seed(global_seed, i),
                    success, qts, best, final, total)
        for i, (success, qts, best, final, total) in zip(ids, raw)
    ]


def pgd_dataset(model, ds: EvalDataset, cfg: PgdConfig,
                global_seed: int = 0, workers: int = 1) -> list:
    """White-box PGD over a dataset; batch column is 0 (no estimator)."""
    ids = list(range(ds.n))
    raw = _run_points(model, ds, ids, cfg, global_seed, workers)
    return [
        PointResult("pgd", 0, cfg.epsilon, i, derive_seed(global_seed, i),
                    success, qts, best, final, total)
        for i, (success, qts, best, final, total) in zip(ids, raw)
    ]


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


def accuracy_table(model, ds: EvalDataset, kinds, batches, cfg: AttackConfig,
                   global_seed: int = 0, workers: int = 1):
    """Post-attack accuracy for every (attack, batch) cell.

    Returns (rows, results) where rows are dicts ready for the summary JSON
    and results maps (kind, batch) to the underlying per-point records.
    """
    rows, results = [], {}
    for kind in kinds:
        for batch in batches:
            res = attack_dataset(model, ds, kind,
                                 config_for_kind(cfg, kind, batch=int(batch)),
                                 global_seed, workers)
            successes = sum(r.success for r in res)
            rows.append({
                "attack": kind,
                "batch": int(batch),
                "accuracy": (ds.n - successes) / ds.n,
                "mean_queries": float(np.mean([r.total_queries for r in res])),
                "successes": successes,
                "n": ds.n,
            })
            results[(kind, int(batch))] = res
    return rows, results


def convergence_cdf(results, budgets=None):
    """Fraction of points misclassified within each query budget.

    The default grid is powers of two from 2^5 to 2^15, extended upward until
    it covers the largest query count in ``results`` so the terminal value
    always equals the overall success fraction.
    """
    if not results:
        raise ValueError("need at least one attack result")
    if budgets is None:
        budgets = list(DEFAULT_CDF_BUDGETS)
        top = max(r.total_queries for r in results)
        while budgets[-1] < top:
            budgets.append(budgets[-1] * 2)
    budgets = sorted(int(b) for b in budgets)
    n = len(results)
    qs = np.array([r.queries_to_success if r.success else np.inf for r in results])
    fractions = [float(np.mean(qs <= b)) for b in budgets]
    return budgets, fractions


def margin_scatter(model, ds: EvalDataset, spsa_cfg: AttackConfig, pgd_cfg: PgdConfig,
                   global_seed: int = 0, workers: int = 1):
    """Best-margin pairs (SPSA, PGD) per point, plus agreement statistics."""
    spsa_res = attack_dataset(model, ds, "spsa", spsa_cfg, global_seed, workers)
    pgd_res = pgd_dataset(model, ds, pgd_cfg, global_seed, workers)
    pairs = np.array([[s.best_margin, p.best_margin] for s, p in zip(spsa_res, pgd_res)])
    diffs = np.abs(pairs[:, 0] - pairs[:, 1])
    stats = {
        "mean_abs_diff": float(diffs.mean()),
        "max_abs_diff": float(diffs.max()),
        "frac_within_half": float(np.mean(diffs < 0.5)),
    }
    return pairs, stats, spsa_res, pgd_res


def epsilon_sweep(model, ds: EvalDataset, kinds, epsilons, cfg: AttackConfig,
                  global_seed: int = 0, workers: int = 1):
    """Accuracy per (attack, epsilon), radii ascending, reusing successes.

    A point flipped at some radius stays flipped at every larger radius (its
    adversarial candidate remains feasible), so each attack's curve is exactly
    non-increasing and the epsilon=0 row is exactly the clean accuracy.
    """
    eps_sorted = sorted(float(e) for e in epsilons)
    if eps_sorted and eps_sorted[0] < 0:
        raise ValueError("epsilon values must be non-negative")
    rows, all_results = [], []
    for kind in kinds:
        flipped = np.zeros(ds.n, dtype=bool)
        for eps in eps_sorted:
            pending = [i for i in range(ds.n) if not flipped[i]]
            if pending:
                res = attack_dataset(model, ds, kind, replace(cfg, epsilon=eps),
                                     global_seed, workers, point_ids=pending)
                for r in res:
                    if r.success:
                        flipped[r.point_id] = True
                all_results.extend(res)
            rows.append({
                "attack": kind,
                "epsilon": eps,
                "accuracy": float((ds.n - flipped.sum()) / ds.n),
            })
    return rows, all_results


def linf_boundary_distance(model, x, y: int) -> float:
    """Closed-form l-infinity distance to the nearest decision boundary.

    Only defined for single-layer (linear) models: the margin against class j
    is an affine function of x, and the smallest sup-norm step that zeroes it
    is |margin_j| / ||w_y - w_j||_1.
    """
    if model.n_layers != 1:
        raise ValueError("boundary distances are closed-form for linear models only")
    W, b = model.weights[0], model.biases[0]
    z = W @ np.asarray(x, dtype=float) + b
    y = int(y)
    dists = [
        abs(z[y] - z[j]) / np.abs(W[y] - W[j]).sum()
        for j in range(model.n_classes) if j != y
    ]
    return float(min(dists))


def mean_linf_boundary_distance(model, ds: EvalDataset) -> float:
    return float(np.mean([
        linf_boundary_distance(model, ds.points[i], int(ds.labels[i]))
        for i in range(ds.n)
    ]))


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------

RESULTS_HEADER = ("attack", "batch", "epsilon", "point_id", "seed", "success",
                  "queries_to_success", "best_margin", "final_margin")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def results_csv_text(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_HEADER)
    for r in results:
        writer.writerow([
            r.attack, r.batch, repr(float(r.epsilon)), r.point_id, r.seed,
            int(r.success),
            "" if r.queries_to_success is None else r.queries_to_success,
            repr(float(r.best_margin)), repr(float(r.final_margin)),
        ])
    return buf.getvalue()


def write_results_csv(path, results) -> None:
    with open(path, "w") as fh:
        fh.write(results_csv_text(results))


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_ATTACK_DEFAULTS = {
    "delta": 0.01,
    "sigma": 0.01,
    "h": 1e-4,
    "lr": 0.01,
    "init": "random_ball",
}

# Margin threshold low enough to never fire; the scatter protocol compares the
# best margin both attacks can reach, so neither side may stop early.
NO_STOP = -1e18


def preset_config(name: str, seed: int = 0) -> dict:
    """Desk-scale defaults for each protocol, before epsilon resolution."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    common = dict(_ATTACK_DEFAULTS)
    common["seed"] = int(seed)
    if name in ("table1", "cdf"):
        return {
            "protocol": name,
            "model": "linear2d", "model_seed": 0,
            "dataset": "gauss2d", "dataset_n": 100, "dataset_seed": 0,
            "attacks": list(GRADIENT_FREE_KINDS),
            "batches": [16, 64, 256, 1024],
            "epsilon": None,  # resolved to 2x mean boundary distance
            "max_iters": 300,
            "stop_threshold": -5.0,
            **common,
        }
    if name == "scatter":
        return {
            "protocol": name,
            "model": "mlp_small", "model_seed": 7,
            "dataset": "mlp_teacher", "dataset_n": 100, "dataset_seed": 7,
            "batch": 256,
            "epsilon": 0.25,
            "max_iters": 100,
            "stop_threshold": NO_STOP,
            "pgd_iters": 40,
            "pgd_step_size": 0.025,
            **common,
        }
    return {
        "protocol": name,
        "model": "linear2d", "model_seed": 0,
        "dataset": "gauss2d", "dataset_n": 100, "dataset_seed": 0,
        "attacks": list(GRADIENT_FREE_KINDS),
        "epsilons": [0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4],
        "batch": 128,
        "max_iters": 100,
        "stop_threshold": -5.0,
        **common,
    }


def _build_model_and_data(config):
    model = make_builtin(config["model"], int(config["model_seed"]))
    ds = make_dataset(config["dataset"], int(config["dataset_n"]),
                      int(config["dataset_seed"]))
    return model, ds


def resolve_config(config: dict) -> dict:
    """Fill in any derived fields so the manifest is fully numeric."""
    config = dict(config)
    if config.get("epsilon", 0.0) is None:
        model, ds = _build_model_and_data(config)
        config["epsilon"] = 2.0 * mean_linf_boundary_distance(model, ds)
    return config


def _base_attack_config(config, batch) -> AttackConfig:
    est = EstimatorConfig(kind="spsa", delta=float(config["delta"]),
                          sigma=float(config["sigma"]), h=float(config["h"]),
                          batch=int(batch))
    return AttackConfig(epsilon=float(config.get("epsilon", 0.0)), estimator=est,
                        lr=float(config["lr"]), max_iters=int(config["max_iters"]),
                        stop_threshold=float(config["stop_threshold"]),
                        init=str(config["init"]))


def run_protocol(config: dict, out_dir, workers: int = 1) -> dict:
    """Execute a resolved protocol config and write results/summary/manifest.

    The worker count influences scheduling only, never content, and is
    deliberately left out of the manifest.
    """
    config = resolve_config(config)
    protocol = config["protocol"]
    if protocol not in PRESET_NAMES:
        raise ValueError(f"unknown protocol {protocol!r}")
    os.makedirs(out_dir, exist_ok=True)
    model, ds = _build_model_and_data(config)
    seed = int(config["seed"])
    summary = {
        "protocol": protocol,
        "clean_accuracy": ds_mod.clean_accuracy(model, ds),
    }

    if protocol in ("table1", "cdf"):
        cfg = _base_attack_config(config, config["batches"][0])
        rows, results = accuracy_table(model, ds, config["attacks"],
                                       config["batches"], cfg, seed, workers)
        all_results = []
        cdf_series = []
        for kind in config["attacks"]:
            for batch in config["batches"]:
                res = results[(kind, int(batch))]
                all_results.extend(res)
                budgets, fractions = convergence_cdf(res)
                cdf_series.append({"attack": kind, "batch": int(batch),
                                   "budgets": budgets, "fractions": fractions})
        summary["table"] = rows
        summary["cdf"] = cdf_series
    elif protocol == "scatter":
        spsa_cfg = _base_attack_config(config, config["batch"])
        pgd_cfg = PgdConfig(epsilon=float(config["epsilon"]),
                            step_size=float(config["pgd_step_size"]),
                            iters=int(config["pgd_iters"]), init=str(config["init"]))
        pairs, stats, spsa_res, pgd_res = margin_scatter(model, ds, spsa_cfg,
                                                         pgd_cfg, seed, workers)
        all_results = list(spsa_res) + list(pgd_res)
        summary["scatter"] = {
            "pairs": pairs,
            "point_ids": list(range(ds.n)),
            **stats,
        }
    else:
        cfg = _base_attack_config(config, config["batch"])
        rows, all_results = epsilon_sweep(model, ds, config["attacks"],
                                          config["epsilons"], cfg, seed, workers)
        summary["sweep"] = rows

    paths = {
        "results": os.path.join(out_dir, "results.csv"),
        "summary": os.path.join(out_dir, "summary.json"),
        "manifest": os.path.join(out_dir, "manifest.json"),
    }
    write_results_csv(paths["results"], all_results)
    write_json(paths["summary"], summary)
    write_json(paths["manifest"], {
        "config": config,
        "versions": {
            "bbattack": VERSION,
            "model_format": MODEL_MAGIC,
            "data_format": DATA_MAGIC,
        },
    })
    return paths


def run_preset(name: str, out_dir, seed: int = 0, workers: int = 1,
               overrides: dict | None = None) -> dict:
    """Resolve a named preset (plus overrides) and run it."""
    config = preset_config(name, seed)
    if overrides:
        unknown = set(overrides) - set(config)
        if unknown:
            raise ValueError(f"unknown config keys for preset {name!r}: {sorted(unknown)}")
        config.update(overrides)
    return run_protocol(config, out_dir, workers)
