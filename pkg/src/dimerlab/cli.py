"""Command-line batch driver.

    dimerlab <task> [--config run.json] [--set key=value ...] [--threads N] [--out results.csv]

A config is a JSON object with optional keys ``params`` (model fields),
``grid`` (``{"b": {"start", "stop", "points"}}``, plus ``alpha`` for the phase
diagram), ``policy`` (numeric tolerance overrides), ``raw_field`` and
``output_path``. ``--set`` takes dotted keys, e.g. ``--set params.chi=1``
or ``--set grid.b.points=50``, and wins over the file.

The ``b`` axis is the scaled field ``B / (2 jx s)`` unless ``raw_field`` is
true. Exit codes: 0 success, 1 malformed config, 2 numerical failure,
3 acceptance failure (``verify`` only).
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .chain import field_scan
from .entanglement import entropy, pure_state_negativity
from .largespin import (
    gaussian_negativity,
    rpa_negativity_entropy,
    theta_overlap,
    xx_block_ground_state,
    xx_block_negativity,
)
from .meanfield import (
    conventional_mf,
    conventional_mf_energy,
    critical_alpha,
    gmf_observables,
    phase_diagram,
    solve_self_consistent,
)
from .pair import ModelParams, pair_spectrum_by_parity
from .policy import DEFAULT_POLICY, DimerlabError, DomainError, NonConvergenceError, ResourceLimitError
from .spin import DensityMatrix, partial_trace

TASKS = ("pair-scan", "mf-scan", "phase-diagram", "chain-scan", "large-s", "verify")
EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 1, 2, 3

_DEFAULTS = {
    "pair-scan": {"params": {"two_s": 2, "chi": 0.75}, "grid": {"b": {"start": 0.0, "stop": 1.0, "points": 200}}},
    "mf-scan": {"params": {"two_s": 2, "chi": 0.75, "alpha": 0.05}, "grid": {"b": {"start": 0.0, "stop": 0.6, "points": 121}}},
    "phase-diagram": {
        "params": {"two_s": 2, "chi": 0.75},
        "grid": {"alpha": {"start": 0.0, "stop": 0.2, "points": 60}, "b": {"start": 0.0, "stop": 0.6, "points": 60}},
    },
    "chain-scan": {
        "params": {"two_s": 2, "chi": 0.75, "alpha": 0.05, "n_pairs": 3},
        "grid": {"b": {"start": 0.0, "stop": 0.6, "points": 60}},
    },
    "large-s": {"params": {"two_s": 10, "chi": 0.75}, "grid": {"b": {"start": 0.0, "stop": 0.8, "points": 41}}},
}
_TOP_KEYS = {"task", "params", "grid", "policy", "raw_field", "output_path"}
_PARAM_KEYS = {f.name for f in dataclasses.fields(ModelParams)}


class ConfigError(DimerlabError):
    pass


class PointFailure(DimerlabError):
    pass


# config


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_set(cfg: dict, item: str) -> None:
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {key}: {part!r} is not a section")
    node[parts[-1]] = _parse_value(value)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def load_config(task: str, path: str | None, sets: list[str]) -> dict:
    cfg = copy.deepcopy(_DEFAULTS.get(task, {}))
    if path:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if doc.get("task", task) != task:
            raise ConfigError(f"config is for task {doc['task']!r}, not {task!r}")
        cfg = _merge(cfg, doc)
    for item in sets:
        _apply_set(cfg, item)
    cfg["task"] = task
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _axis(cfg: dict, name: str) -> np.ndarray:
    axis = cfg.get("grid", {}).get(name)
    if not isinstance(axis, dict) or not {"start", "stop", "points"} <= set(axis):
        raise ConfigError(f"grid.{name} needs start, stop and points")
    try:
        start, stop, points = float(axis["start"]), float(axis["stop"]), axis["points"]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid.{name}: {exc}") from exc
    if not isinstance(points, int) or points < 2:
        raise ConfigError(f"grid.{name}.points must be an integer >= 2")
    if not stop > start:
        raise ConfigError(f"grid.{name}: stop must exceed start")
    return np.linspace(start, stop, points)


def _params(cfg: dict) -> ModelParams:
    raw = cfg.get("params", {})
    unknown = set(raw) - _PARAM_KEYS
    if unknown:
        raise ConfigError(f"unknown params: {sorted(unknown)}")
    try:
        return ModelParams(**raw)
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params: {exc}") from exc


def _policy(cfg: dict):
    try:
        return DEFAULT_POLICY.updated(**cfg.get("policy", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid policy override: {exc}") from exc


def _raw_fields(cfg: dict, p: ModelParams) -> np.ndarray:
    b = _axis(cfg, "b")
    return b if cfg.get("raw_field") else b * p.j_scale


# tasks


def _pmap(fn, items, threads: int, label: str):
    def guarded(x):
        try:
            return fn(x)
        except NonConvergenceError as exc:
            raise PointFailure(f"{exc} at {exc.where or f'{label}={x!r}'}") from exc

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(guarded, items))
    return [guarded(x) for x in items]


def task_pair_scan(cfg, threads):
    p = _params(cfg)
    d = p.two_s + 1

    def row(B):
        sp = pair_spectrum_by_parity(p.with_(b=float(B), alpha=0.0))
        psi = sp.ground_state
        s1 = entropy(partial_trace(DensityMatrix.from_state(psi, (d, d)), 0))
        return [B / p.j_scale, min(sp.e_plus, sp.e_minus), sp.ground_parity,
                pure_state_negativity(psi, (d, d)), s1, sp.e_plus, sp.e_minus]

    cols = ["b_scaled", "energy", "parity", "n12", "s1", "e_plus", "e_minus"]
    return cols, _pmap(row, _raw_fields(cfg, p), threads, "b")


def task_mf_scan(cfg, threads):
    p, policy = _params(cfg), _policy(cfg)

    def row(B):
        q = p.with_(b=float(B))
        sol = solve_self_consistent(q, policy=policy)
        obs = gmf_observables(sol)
        return [B / p.j_scale, sol.sx, sol.phase, sol.energy_per_pair, obs["m"], obs["n12"], obs["s1"],
                obs["s2"], critical_alpha(q, policy=policy), conventional_mf(q), conventional_mf_energy(q)]

    cols = ["b_scaled", "sx", "phase", "energy", "m", "n12", "s1", "s2", "alpha_c", "sx_mf", "energy_mf"]
    return cols, _pmap(row, _raw_fields(cfg, p), threads, "b")


def task_phase_diagram(cfg, threads):
    p, policy = _params(cfg), _policy(cfg)
    alphas = _axis(cfg, "alpha")
    if alphas[0] < 0 or alphas[-1] > 1:
        raise ConfigError("grid.alpha must lie in [0, 1]")
    fields = _raw_fields(cfg, p)
    pd = phase_diagram(p, alphas, fields, threads=threads, policy=policy)
    rows = []
    for i, a in enumerate(alphas):
        for j, B in enumerate(fields):
            rows.append([a, B / p.j_scale, pd.phase[i, j], pd.sx[i, j], pd.alpha_c_curve[j]])
    return ["alpha", "b_scaled", "phase", "sx", "alpha_c"], rows


def task_chain_scan(cfg, threads):
    p, policy = _params(cfg), _policy(cfg)
    try:
        recs = field_scan(p, _raw_fields(cfg, p), with_gmf=True, threads=threads, policy=policy)
    except NonConvergenceError as exc:
        raise PointFailure(f"{exc} at {exc.where}") from exc
    rows = [[r.b_scaled, r.energy, r.gs_parity, r.m, p.s - abs(r.m), r.n12, r.s1, r.s2,
             r.sx_gmf, r.n12_gmf, r.s1_gmf, r.s2_gmf] for r in recs]
    cols = ["b_scaled", "energy", "parity", "m", "s_minus_abs_m", "n12", "s1", "s2",
            "sx_gmf", "n12_gmf", "s1_gmf", "s2_gmf"]
    return cols, rows


def task_large_s(cfg, threads):
    p = _params(cfg)
    d = p.two_s + 1

    def row(B):
        q = p.with_(b=float(B), alpha=0.0)
        sp = pair_spectrum_by_parity(q)
        rho1 = partial_trace(DensityMatrix.from_state(sp.ground_state, (d, d)), 0)
        try:
            n_rpa, s_rpa = rpa_negativity_entropy(q)
        except DomainError:
            n_rpa = s_rpa = math.nan
        ov_p = theta_overlap(q, 1)[1] if p.chi < 1 else math.nan
        ov_m = theta_overlap(q, -1)[1] if p.chi < 1 else math.nan
        xx = xx_block_ground_state(p.two_s, B / p.bc, jx=p.jx)
        g = gaussian_negativity(xx) if xx.coeffs.size > 1 else None
        return [B / p.j_scale, pure_state_negativity(sp.ground_state, (d, d)), entropy(rho1),
                n_rpa, s_rpa, ov_p, ov_m, xx.m_block, xx.r_m, xx_block_negativity(xx),
                g.negativity if g else math.nan, g.overlap if g else math.nan]

    cols = ["b_scaled", "n12", "s1", "n12_rpa", "s2_rpa", "theta_overlap_plus", "theta_overlap_minus",
            "xx_m", "xx_r_m", "xx_n12", "xx_n12_gaussian", "xx_gaussian_overlap"]
    return cols, _pmap(row, _raw_fields(cfg, p), threads, "b")


_RUNNERS = {
    "pair-scan": task_pair_scan,
    "mf-scan": task_mf_scan,
    "phase-diagram": task_phase_diagram,
    "chain-scan": task_chain_scan,
    "large-s": task_large_s,
}


# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return str(v)


def write_csv(path: Path, cols, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _versions() -> dict:
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"dimerlab": own, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("DIMERLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DIMERLAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_task(task: str, cfg: dict, threads: int, out: Path) -> None:
    sidecar = out.with_suffix(".json")
    t0 = time.perf_counter()
    try:
        cols, rows = _RUNNERS[task](cfg, threads)
        write_csv(out, cols, rows)
        meta = {"config": cfg, "threads": threads, "versions": _versions(),
                "wall_seconds": round(time.perf_counter() - t0, 3), "rows": len(rows)}
        sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    except BaseException:
        for f in (out, sidecar):
            f.unlink(missing_ok=True)
        raise


def run_verify(ids: list[str] | None) -> int:
    from .acceptance import CRITERIA, run_all

    if ids:
        bad = [i for i in ids if i not in CRITERIA]
        if bad:
            raise ConfigError(f"unknown criteria: {bad}")
    results = run_all(ids)
    for r in results:
        print(r.line(), file=sys.stderr)
    print(json.dumps([r.to_dict() for r in results], indent=2))
    return 0 if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dimerlab", description="Dimerized spin-s chain: pairs, mean field, exact chains.")
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry (dotted key, JSON value)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default $DIMERLAB_THREADS or all cores)")
    ap.add_argument("--out", help="output CSV path; the sidecar JSON goes next to it")
    ap.add_argument("--raw-field", action="store_true", help="grid.b holds raw fields B instead of B/(2 jx s)")
    ap.add_argument("--only", help="verify: comma-separated criterion ids")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.task == "verify":
            return run_verify(args.only.split(",") if args.only else None)
        cfg = load_config(args.task, args.config, args.sets)
        if args.raw_field:
            cfg["raw_field"] = True
        threads = _threads(args.threads)
        out = Path(args.out or cfg.get("output_path") or f"{args.task}.csv")
        run_task(args.task, cfg, threads, out)
    except (ConfigError, ResourceLimitError) as exc:
        print(f"dimerlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PointFailure as exc:
        print(f"dimerlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {out} and {out.with_suffix('.json')}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
