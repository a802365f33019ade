"""End-to-end experiment driver: degrade, solve, score, write artifacts.

A run produces, under the output directory:

* ground truth / measurement / per-method restorations as PGM or PPM,
* ``metrics.json`` with per-seed and aggregate PSNR / SSIM / residuals,
* one trajectory JSON per (method, seed),
* ``manifest.json`` listing every emitted file with its sha256.

Cells (seed x method) are independent; MASOLVER_THREADS > 1 runs them on a
thread pool.  Seeding is derived per cell, so the schedule of execution
never changes the results and a rerun is byte-identical.
"""

import csv
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import imageio, metrics as metrics_mod
from .core import MasWeights, mas_posterior_mean
from .degradations import measure
from .exceptions import UnstableWeightsError
from .operators import build_dense
from .prior import sample_prior
from .sampler import run

logger = logging.getLogger("masolver")

# fixed 2-D instance for weight-sweep visualizations: one observed
# coordinate, one free coordinate
TOY_M0T = np.array([0.25, 0.85])
TOY_Y = np.array([0.95])
TOY_H = np.array([[1.0, 0.0]])


def _sanitize(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path, obj):
    text = json.dumps(_sanitize(obj), sort_keys=True, indent=2)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def _ssim_window(shape):
    """Largest odd window up to the standard 11 that fits the image."""
    side = min(shape[1], shape[2])
    win = min(11, side)
    return win if win % 2 else win - 1


def _truth_rng(seed):
    return np.random.default_rng(np.random.SeedSequence([int(seed), 1]))


def _measure_rng(seed):
    return np.random.default_rng(np.random.SeedSequence([int(seed), 2]))


def _method_rng(seed, method_index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), 3, int(method_index)]))


def _measurement_image(op, y):
    """Embed a measurement for viewing: directly when image-shaped, else
    through the pseudo-inverse back into signal space."""
    if op.out_shape is not None:
        return y.reshape(op.out_shape), op.out_shape
    if op.in_shape is not None:
        return op.pinv_apply(y).reshape(op.in_shape), op.in_shape
    return None, None


def _solve_cell(op, y, prior, schedule, label, mas_config, policy, seed, method_index,
                cfg_hash, save_states):
    rng = _method_rng(seed, method_index)
    record = run(
        op,
        None if mas_config.method == "unconditional" else y,
        prior,
        schedule,
        mas_config,
        policy,
        rng,
        seed=seed,
        config_hash=cfg_hash,
        record_states=save_states,
    )
    return label, seed, record


def run_experiment(raw_config, out_dir=None, seed_override=None, quiet=False):
    """Execute a validated config; returns the metrics dict that was written."""
    raw = config_mod.validate_config(raw_config)
    cfg_hash = config_mod.config_hash(raw)
    out = Path(out_dir or raw.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)

    op = config_mod.build_operator(raw)
    corruption = config_mod.build_corruption(raw)
    prior = config_mod.build_prior(raw)
    schedule = config_mod.build_schedule(raw)
    methods = [config_mod.build_method(entry) for entry in raw["methods"]]
    labels = [m[0] for m in methods]
    if len(set(labels)) != len(labels):
        raise config_mod.ConfigError(f"duplicate method labels: {labels}")
    seeds = [int(seed_override)] if seed_override is not None else list(raw["seeds"])
    save_states = raw.get("save_states", False)
    shape = (raw["image"]["channels"], raw["image"]["height"], raw["image"]["width"])
    ext = "ppm" if shape[0] == 3 else "pgm"

    written = []

    def emit_image(name, img):
        path = out / name
        imageio.write_image(path, img)
        written.append(path)

    truths, measurements = {}, {}
    for seed in seeds:
        x0 = sample_prior(prior, _truth_rng(seed))
        y = measure(op, x0, corruption, _measure_rng(seed))
        truths[seed], measurements[seed] = x0, y
        emit_image(f"truth_seed{seed}.{ext}", x0.reshape(shape))
        view, view_shape = _measurement_image(op, y)
        if view is not None:
            m_ext = "ppm" if view_shape[0] == 3 else "pgm"
            emit_image(f"measurement_seed{seed}.{m_ext}", view)

    cells = [
        (label, mas_config, policy, seed, mi)
        for mi, (label, mas_config, policy) in enumerate(methods)
        for seed in seeds
    ]
    n_threads = max(1, int(os.environ.get("MASOLVER_THREADS", "1")))

    def solve(cell):
        label, mas_config, policy, seed, mi = cell
        return _solve_cell(
            op, measurements[seed], prior, schedule, label, mas_config, policy,
            seed, mi, cfg_hash, save_states,
        )

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(solve, cells))
    else:
        results = [solve(cell) for cell in cells]

    per_method = {label: {} for label in labels}
    for label, seed, record in results:
        restored = record.final_x0.reshape(shape)
        emit_image(f"restored_{label}_seed{seed}.{ext}", restored)
        x0 = truths[seed].reshape(shape)
        residual = float(np.linalg.norm(measurements[seed] - op.apply(record.final_x0)))
        per_method[label][seed] = {
            "psnr_db": metrics_mod.psnr(x0, restored),
            "ssim": metrics_mod.ssim(x0, restored, window=_ssim_window(shape)),
            "measurement_residual": residual,
        }
        traj_path = out / f"trajectory_{label}_seed{seed}.json"
        _write_json(traj_path, _trajectory_payload(record, save_states))
        written.append(traj_path)

    metrics = {"name": raw["name"], "config_hash": cfg_hash, "methods": {}}
    for label in labels:
        rows = per_method[label]
        psnrs = [rows[s]["psnr_db"] for s in seeds]
        ssims = [rows[s]["ssim"] for s in seeds]
        residuals = [rows[s]["measurement_residual"] for s in seeds]
        metrics["methods"][label] = {
            "per_seed": {str(s): rows[s] for s in seeds},
            "psnr_db_mean": _finite_mean(psnrs),
            "psnr_db_std": _finite_std(psnrs),
            "ssim_mean": float(np.mean(ssims)),
            "ssim_std": float(np.std(ssims)),
            "measurement_residual_mean": float(np.mean(residuals)),
        }
    metrics_path = out / "metrics.json"
    _write_json(metrics_path, metrics)
    written.append(metrics_path)

    manifest = {p.name: _sha256(p) for p in sorted(written)}
    _write_json(out / "manifest.json", manifest)
    if not quiet:
        for label in labels:
            agg = metrics["methods"][label]
            logger.info(
                "%s: psnr=%.2f dB ssim=%.4f residual=%.3g",
                label,
                agg["psnr_db_mean"] if agg["psnr_db_mean"] is not None else float("nan"),
                agg["ssim_mean"],
                agg["measurement_residual_mean"],
            )
    return metrics


def _finite_mean(values):
    if any(math.isinf(v) for v in values):
        return None
    return float(np.mean(values))


def _finite_std(values):
    if any(math.isinf(v) for v in values):
        return None
    return float(np.std(values))


def _trajectory_payload(record, save_states):
    steps = []
    for rec in record.trajectory:
        row = {
            "n": rec.n,
            "eta1": rec.eta1,
            "eta2": rec.eta2,
            "residual": rec.residual,
            "prior_residual": rec.prior_residual,
            "lambda_min": rec.lambda_min,
            "lambda_mean": rec.lambda_mean,
        }
        if save_states and rec.x0_star is not None:
            row["x0_star"] = rec.x0_star.tolist()
        steps.append(row)
    return {"seed": record.seed, "config_hash": record.config_hash, "steps": steps}


def toy_2d_point(eta1, eta2):
    """x0* on the fixed 2-D instance (the sweep's visualization target)."""
    op = build_dense(TOY_H)
    w = MasWeights(eta1, eta2, unsafe=eta2 < 0)
    return mas_posterior_mean(op, TOY_M0T, TOY_Y, w)


def sweep(raw_config, parameter, grid, out_dir=None, quiet=False):
    """Rerun the mas methods over a parameter grid; write CSV + toy points.

    Unstable settings become failed rows, not aborts.  Returns the list of
    result rows.
    """
    raw = config_mod.validate_config(raw_config)
    if not grid:
        raise config_mod.ConfigError("sweep grid must be non-empty")
    out = Path(out_dir or raw.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)

    mas_entries = [e for e in raw["methods"] if e["name"] == "mas"]
    if not mas_entries:
        raise config_mod.ConfigError("sweep requires at least one mas method")

    rows = []
    for value in grid:
        swept = config_mod.with_method_param(raw, parameter, value)
        swept["methods"] = [e for e in swept["methods"] if e["name"] == "mas"]
        try:
            result = run_experiment(
                swept, out_dir=out / f"{parameter}_{value:g}", quiet=True
            )
            for label, agg in result["methods"].items():
                for seed, cell in agg["per_seed"].items():
                    rows.append(
                        {
                            "param": parameter,
                            "value": value,
                            "method": label,
                            "seed": int(seed),
                            "psnr_db": cell["psnr_db"],
                            "ssim": cell["ssim"],
                            "residual": cell["measurement_residual"],
                            "status": "ok",
                        }
                    )
        except UnstableWeightsError as err:
            for label in [e.get("label", e["name"]) for e in mas_entries]:
                for seed in raw["seeds"]:
                    rows.append(
                        {
                            "param": parameter,
                            "value": value,
                            "method": label,
                            "seed": seed,
                            "psnr_db": None,
                            "ssim": None,
                            "residual": None,
                            "status": f"unstable: {err}",
                        }
                    )

    csv_path = out / "sweep.csv"
    _write_rows(csv_path, rows, ["param", "value", "method", "seed", "psnr_db", "ssim",
                                 "residual", "status"])

    toy_rows = _toy_rows(parameter, grid, mas_entries[0])
    _write_rows(out / "sweep_toy2d.csv", toy_rows, ["kind", "param", "value", "eta1",
                                                    "eta2", "x1", "x2"])
    if not quiet:
        logger.info("sweep wrote %d rows to %s", len(rows), csv_path)
    return rows


def _toy_rows(parameter, grid, mas_entry):
    """x0* of the fixed 2-D instance per grid value, plus reference points."""
    base_eta1 = mas_entry.get("eta1", 0.0)
    base_eta2 = mas_entry.get("eta2", 0.0)
    rows = []
    for value in grid:
        if parameter == "eta1":
            eta1, eta2 = value, base_eta2
        elif parameter == "eta2":
            eta1, eta2 = base_eta1, value
        else:  # k: representative a_t / c_t = 1
            eta1, eta2 = mas_entry.get("policy", {}).get("eta1_base", 0.0), value
        try:
            point = toy_2d_point(eta1, eta2)
            rows.append(
                {
                    "kind": "x0_star",
                    "param": parameter,
                    "value": value,
                    "eta1": eta1,
                    "eta2": eta2,
                    "x1": point[0],
                    "x2": point[1],
                }
            )
        except UnstableWeightsError:
            rows.append(
                {
                    "kind": "unstable",
                    "param": parameter,
                    "value": value,
                    "eta1": eta1,
                    "eta2": eta2,
                    "x1": None,
                    "x2": None,
                }
            )
    rows.append(
        {
            "kind": "m0t",
            "param": parameter,
            "value": None,
            "eta1": None,
            "eta2": None,
            "x1": TOY_M0T[0],
            "x2": TOY_M0T[1],
        }
    )
    rows.append(
        {
            "kind": "ddnm",
            "param": parameter,
            "value": None,
            "eta1": None,
            "eta2": None,
            "x1": TOY_Y[0],
            "x2": TOY_M0T[1],
        }
    )
    return rows


def _write_rows(path, rows, fieldnames):
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    os.replace(tmp, path)
