"""Batch experiment harness.

Every subcommand reads one JSON configuration document and writes CSV files
into the output directory. Each CSV starts with a ``# config_sha256=...``
comment line; rows are ordered by grid index, so reruns are byte-identical
whatever ``--jobs`` is.

Configuration keys::

    task                  f_rho, prior, noise_sigma, input (see core.task_from_config)
    kernel                "gaussian:width=0.2", "poly:degree=2,offset=1" or "linear"
    lambdas, taus, ms, seeds
    mean_mode, solver_mode
    quadrature_resolution (default 200)
    output_dir            (default ".", overridden by --out)
    seed                  base seed for spectral fuzzing and Monte Carlo runs
    bounds                {"ms", "epsilons", "M", "Mp", "d", "R", "delta",
                           "monte_carlo": {"m", "epsilon", "trials", "lambda", "tau"}}
    spectral              {"instances" | "random": {"count", "max_dim", "strict",
                           "distinct_measures"}, "factor"}
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from . import bounds as bd
from . import operator_lab as ol
from .core import ConfigError, quadrature_nodes, sample_dataset, task_from_config
from .interp_metric import empirical_metric
from .kernel import parse_kernel
from .solver import (
    FIT_CSV_FIELDS,
    FitConfig,
    PopulationProblem,
    decompose_fit,
    fit_interpretable,
)

log = logging.getLogger("interpreg")

SWEEP_FIELDS = (
    "lambda", "tau", "m", "seed", "empirical_risk", "empirical_interp_variance",
    "generalization_error", "interp_variance", "rkhs_norm_sq", "sample_error", "approx_error", "error",
)
DECOMPOSE_FIELDS = (
    "lambda", "tau", "m", "seed", "total", "approx", "sample", "identity_residual",
    "generalization_error", "interp_variance", "error",
)
MONOTONE_FIELDS = ("lambda", "m", "seed", "empirical_nonincreasing", "population_nonincreasing")
MONOTONE_SLACK = 1e-10


# -- configuration ------------------------------------------------------------


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k != "output_dir"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def _grid(cfg, key, default=None):
    values = cfg.get(key, default)
    if values is None:
        raise ConfigError(f"config is missing {key!r}")
    values = list(values) if isinstance(values, (list, tuple)) else [values]
    if not values:
        raise ConfigError(f"grid {key!r} is empty")
    return values


def _fit_config(cfg, lam, tau) -> FitConfig:
    return FitConfig(
        float(lam),
        float(tau),
        cfg.get("mean_mode", "signed"),
        cfg.get("solver_mode", "closed_form"),
    )


# -- output -------------------------------------------------------------------


def write_csv(path: Path, fields, rows, digest: str) -> None:
    buf = io.StringIO()
    buf.write(f"# config_sha256={digest}\n")
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue())


def read_csv(path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_gnuplot(path: Path, csv_name: str, x: str, y: str, fields, title: str) -> None:
    cols = list(fields)
    path.write_text(
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set title '{title}'\n"
        f"set xlabel '{x}'\nset ylabel '{y}'\n"
        f"plot '{csv_name}' every ::1 using {cols.index(x) + 1}:{cols.index(y) + 1} with points\n"
    )


def _collect(cells, work, jobs: int) -> list:
    """Run ``work`` on every cell; results keep the order of ``cells``."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, cells))
    return [work(c) for c in cells]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


# -- commands -----------------------------------------------------------------


def cmd_gen(cfg, out: Path, jobs: int = 1, emit_gnuplot: bool = False) -> int:
    task = task_from_config(cfg["task"])
    digest = config_hash(cfg)
    cells = list(product(_grid(cfg, "ms"), _grid(cfg, "seeds")))

    def work(cell):
        m, seed = cell
        data = sample_dataset(task, int(m), int(seed))
        text = f"# config_sha256={digest}\n" + data.to_csv()
        (out / f"dataset_m{m}_seed{seed}.csv").write_text(text)
        return None

    _collect(cells, work, jobs)
    return 0


def _dataset(task, m, seed):
    return sample_dataset(task, int(m), int(seed))


def cmd_fit(cfg, out: Path, jobs: int = 1, emit_gnuplot: bool = False, coeffs: bool = False) -> int:
    task = task_from_config(cfg["task"])
    kernel = parse_kernel(cfg["kernel"])
    digest = config_hash(cfg)
    cells = list(product(_grid(cfg, "lambdas"), _grid(cfg, "taus"), _grid(cfg, "ms"), _grid(cfg, "seeds")))

    def work(cell):
        lam, tau, m, seed = cell
        row = {"lambda": _fmt(float(lam)), "tau": _fmt(float(tau)), "m": m, "seed": seed, "error": ""}
        try:
            res = fit_interpretable(_dataset(task, m, seed), task.prior, kernel, _fit_config(cfg, lam, tau))
            row.update(res.csv_row())
            row["m"], row["seed"] = m, seed
            return row, res.hypothesis.coeffs
        except Exception as exc:  # a failing cell is reported, not fatal
            row["error"] = f"{type(exc).__name__}: {exc}"
            return row, None

    results = _collect(cells, work, jobs)
    fields = FIT_CSV_FIELDS + ("m", "seed", "error")
    write_csv(out / "fit.csv", fields, [r for r, _ in results], digest)
    if coeffs:
        rows = []
        for (row, c), (lam, tau, m, seed) in zip(results, cells):
            if c is not None:
                rows.extend({"lambda": row["lambda"], "tau": row["tau"], "m": m, "seed": seed, "index": i,
                             "coeff": _fmt(float(v))} for i, v in enumerate(c))
        write_csv(out / "fit_coeffs.csv", ("lambda", "tau", "m", "seed", "index", "coeff"), rows, digest)
    return int(any(r["error"] for r, _ in results))


def pareto_front(rows, keys=("generalization_error", "interp_variance")) -> list[dict]:
    """Rows not dominated in the minimization of both ``keys``."""
    pts = np.array([[float(r[k]) for k in keys] for r in rows]).reshape(len(rows), len(keys))
    order = np.lexsort(pts.T[::-1])
    front, best = [], math.inf
    for i in order:
        # sorted by the first key, ties broken by the second; equal points do not dominate
        if pts[i, 1] < best or (front and np.array_equal(pts[i], pts[front[-1]])):
            front.append(i)
            best = pts[i, 1]
    return [rows[i] for i in sorted(front)]


def _population_problems(cfg, task, kernel, nodes):
    return {float(t): PopulationProblem(task, kernel, nodes, float(t)) for t in _grid(cfg, "taus")}


def cmd_sweep(cfg, out: Path, jobs: int = 1, emit_gnuplot: bool = False) -> int:
    task = task_from_config(cfg["task"])
    kernel = parse_kernel(cfg["kernel"])
    digest = config_hash(cfg)
    nodes = quadrature_nodes(task.input_dist, int(cfg.get("quadrature_resolution", 200)))
    problems = _population_problems(cfg, task, kernel, nodes)
    lambdas, taus, ms, seeds = (_grid(cfg, k) for k in ("lambdas", "taus", "ms", "seeds"))
    cells = list(product(lambdas, taus, ms, seeds))

    def work(cell):
        lam, tau, m, seed = cell
        row = {"lambda": _fmt(float(lam)), "tau": _fmt(float(tau)), "m": m, "seed": seed, "error": ""}
        try:
            data = _dataset(task, m, seed)
            fit, rep, _ = decompose_fit(data, task, kernel, _fit_config(cfg, lam, tau), nodes, problems[float(tau)])
            emp = empirical_metric(fit.hypothesis(data.xs), task.prior(data.xs)).variance
            row.update(
                empirical_risk=_fmt(fit.empirical_risk),
                empirical_interp_variance=_fmt(emp),
                generalization_error=_fmt(rep.generalization_error),
                interp_variance=_fmt(rep.interp_variance),
                rkhs_norm_sq=_fmt(fit.rkhs_norm_sq),
                sample_error=_fmt(rep.sample),
                approx_error=_fmt(rep.approx),
            )
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    rows = _collect(cells, work, jobs)
    write_csv(out / "sweep.csv", SWEEP_FIELDS, rows, digest)
    good = [r for r in rows if not r["error"]]
    write_csv(out / "pareto.csv", SWEEP_FIELDS, pareto_front(good) if good else [], digest)

    # regularization path along the tau grid, per (lambda, m, seed)
    by_key = {(r["lambda"], r["tau"], r["m"], r["seed"]): r for r in good}
    mono = []
    for lam, m, seed in product(lambdas, ms, seeds):
        path = [by_key.get((_fmt(float(lam)), _fmt(float(t)), m, seed)) for t in taus]
        if any(p is None for p in path):
            continue
        emp = np.array([float(p["empirical_interp_variance"]) for p in path])
        pop = np.array([float(p["interp_variance"]) for p in path])
        mono.append({
            "lambda": _fmt(float(lam)), "m": m, "seed": seed,
            "empirical_nonincreasing": _fmt(bool(np.all(np.diff(emp) <= MONOTONE_SLACK))),
            "population_nonincreasing": _fmt(bool(np.all(np.diff(pop) <= MONOTONE_SLACK))),
        })
    write_csv(out / "monotonicity.csv", MONOTONE_FIELDS, mono, digest)
    if emit_gnuplot:
        write_gnuplot(out / "sweep.gp", "sweep.csv", "generalization_error", "interp_variance", SWEEP_FIELDS,
                      "generalization vs interpretability")
        write_gnuplot(out / "pareto.gp", "pareto.csv", "generalization_error", "interp_variance", SWEEP_FIELDS,
                      "Pareto front")
    return int(len(good) != len(rows))


def cmd_decompose(cfg, out: Path, jobs: int = 1, emit_gnuplot: bool = False) -> int:
    task = task_from_config(cfg["task"])
    kernel = parse_kernel(cfg["kernel"])
    digest = config_hash(cfg)
    nodes = quadrature_nodes(task.input_dist, int(cfg.get("quadrature_resolution", 200)))
    problems = _population_problems(cfg, task, kernel, nodes)
    cells = list(product(_grid(cfg, "lambdas"), _grid(cfg, "taus"), _grid(cfg, "ms"), _grid(cfg, "seeds")))

    def work(cell):
        lam, tau, m, seed = cell
        row = {"lambda": _fmt(float(lam)), "tau": _fmt(float(tau)), "m": m, "seed": seed, "error": ""}
        try:
            _, rep, _ = decompose_fit(
                _dataset(task, m, seed), task, kernel, _fit_config(cfg, lam, tau), nodes, problems[float(tau)]
            )
            row.update(
                total=_fmt(rep.total), approx=_fmt(rep.approx), sample=_fmt(rep.sample),
                identity_residual=_fmt(rep.identity_residual),
                generalization_error=_fmt(rep.generalization_error), interp_variance=_fmt(rep.interp_variance),
            )
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    rows = _collect(cells, work, jobs)
    write_csv(out / "decompose.csv", DECOMPOSE_FIELDS, rows, digest)
    if emit_gnuplot:
        write_gnuplot(out / "decompose.gp", "decompose.csv", "m", "sample", DECOMPOSE_FIELDS, "sample error vs m")
    return int(any(r["error"] for r in rows))


def cmd_bounds(cfg, out: Path, jobs: int = 1, emit_gnuplot: bool = False) -> int:
    section = cfg.get("bounds")
    if not isinstance(section, dict):
        raise ConfigError("config needs a 'bounds' object")
    digest = config_hash(cfg)
    errors = 0
    rows = []
    for m, eps in product(_grid(section, "ms"), _grid(section, "epsilons")):
        try:
            inputs = bd.BoundInputs(int(m), float(eps), float(section["M"]), float(section.get("Mp", 0.0)),
                                    int(section.get("d", 1)), float(section.get("R", 1.0)),
                                    float(section.get("delta", 0.05)))
            row = bd.sample_error_confidence(inputs).csv_row()
            row["epsilon_at_delta"] = _fmt(bd.invert_bound_for_epsilon(
                inputs.m, inputs.delta, inputs.big_m, inputs.m_p, inputs.covering_dim, inputs.radius_R))
            row["error"] = ""
        except (ValueError, KeyError) as exc:
            row = {"m": m, "epsilon": eps, "error": f"{type(exc).__name__}: {exc}"}
            errors += 1
        rows.append(row)
    write_csv(out / "bounds.csv", bd.BOUND_CSV_FIELDS + ("epsilon_at_delta", "error"), rows, digest)
    if emit_gnuplot:
        write_gnuplot(out / "bounds.gp", "bounds.csv", "m", "raw", bd.BOUND_CSV_FIELDS + ("epsilon_at_delta", "error"),
                      "confidence vs m")

    mc = section.get("monte_carlo")
    if mc:
        task = task_from_config(cfg["task"])
        kernel = parse_kernel(cfg["kernel"])
        nodes = quadrature_nodes(task.input_dist, int(cfg.get("quadrature_resolution", 200)))
        mc_rows = []
        for m, eps in product(_grid(mc, "ms", mc.get("m")), _grid(mc, "epsilons", mc.get("epsilon"))):
            row = {"m": m, "epsilon": _fmt(float(eps)), "error": ""}
            try:
                res = bd.monte_carlo_validate_bound(
                    task, kernel, _fit_config(cfg, mc.get("lambda", 1e-3), mc.get("tau", 1.0)), int(m), float(eps),
                    int(mc.get("trials", 500)), int(cfg.get("seed", 0)), nodes, jobs,
                )
                row.update(res.bound.csv_row())
                row.update(res.csv_row())
                row["failures"] = res.failures
            except Exception as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
                errors += 1
            mc_rows.append(row)
        fields = bd.BOUND_CSV_FIELDS + bd.MC_CSV_FIELDS + ("failures", "error")
        write_csv(out / "monte_carlo.csv", fields, mc_rows, digest)
    return int(errors > 0)


def _spectral_instances(section, seed):
    if "instances" in section:
        out = []
        for item in section["instances"]:
            n = len(item["a_vec"])
            eigs = item.get("a_eigs")
            if eigs is None:
                eigs = ((np.arange(n) + 1.0) ** -float(item.get("alpha", 1.0))).tolist()
            out.append(ol.SpectralInstance(
                np.array(eigs, float), np.array(item.get("weights", [1.0 / n] * n), float),
                np.array(item["a_vec"], float), np.array(item["p_vec"], float),
                float(item["s"]), float(item["r"]), float(item["tau"]), float(item["gamma"]),
                float(item.get("radius_R", 1.0)),
                None if item.get("nu_weights") is None else np.array(item["nu_weights"], float),
            ))
        return out
    rnd = section.get("random", {})
    rng = np.random.default_rng(seed)
    return [
        ol.random_instance(rng, int(rnd.get("max_dim", 16)), distinct_measures=bool(rnd.get("distinct_measures")),
                           strict=bool(rnd.get("strict")))
        for _ in range(int(rnd.get("count", 100)))
    ]


def cmd_spectral(cfg, out: Path, jobs: int = 1, emit_gnuplot: bool = False) -> int:
    section = cfg.get("spectral")
    if not isinstance(section, dict):
        raise ConfigError("config needs a 'spectral' object")
    digest = config_hash(cfg)
    factor = section.get("factor", "operator")
    instances = _spectral_instances(section, int(cfg.get("seed", 0)))

    def work(item):
        idx, inst = item
        row = {"index": idx, "factor": factor, "error": ""}
        try:
            row.update(ol.verify_instance(inst, factor).csv_row())
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    rows = _collect(list(enumerate(instances)), work, jobs)
    write_csv(out / "spectral.csv", ("index",) + ol.SPECTRAL_CSV_FIELDS + ("factor", "error"), rows, digest)
    return int(any(r["error"] or r.get("holds") != "true" for r in rows))


COMMANDS = {
    "gen": cmd_gen,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "bounds": cmd_bounds,
    "spectral": cmd_spectral,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="interpreg", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration document")
        p.add_argument("--out", help="output directory (default: config output_dir or '.')")
        p.add_argument("--jobs", type=int, default=1, help="concurrent cells")
        p.add_argument("--seed", type=int, help="replace the seeds grid by this seed and set the base seed")
        p.add_argument("--emit-gnuplot", action="store_true", help="write gnuplot scripts next to the CSVs")
        if name == "fit":
            p.add_argument("--coeffs", action="store_true", help="also write fitted coefficients")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = copy.deepcopy(load_config(args.config))
        if args.seed is not None:
            cfg["seeds"] = [args.seed]
            cfg["seed"] = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = Path(args.out or cfg.get("output_dir", "."))
        out.mkdir(parents=True, exist_ok=True)
        kwargs = {"coeffs": args.coeffs} if args.command == "fit" else {}
        status = COMMANDS[args.command](cfg, out, args.jobs, args.emit_gnuplot, **kwargs)
    except (ConfigError, KeyError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2
    if status:
        log.warning("%s finished with errored cells", args.command)
    return status


if __name__ == "__main__":
    sys.exit(main())
