"""Command-line benchmark harness.

Three subcommands: ``example1`` sweeps the random regularized
least-squares instance over the gamma grid and all requested beta kinds,
``example2`` trains the tiny tanh network on the three scalar targets and
reports per-cell means over trials, ``single`` runs one configured solver
on one problem and serializes its full trace.

Configuration lives in a flat ``key = value`` text file; command-line
flags override file values.  Exit codes: 0 all runs converged, 1 some run
did not, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import (BetaKind, FixedStep, GridStep, LineSearchParams,
                     RunStatus, StopCriteria, cfcg_minimize, cfsd_minimize)
from .fraccalc import FracParams, QuadratureSpec
from .problems import (BENCHMARK_IDS, Example1Config, MlpSpec, gen_example1,
                       mlp_init, mlp_lower_terminal, mlp_objective,
                       stacked_problem, tikhonov_run_objective)
from .tikhonov import check_Abar_pd

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "load_config",
    "save_config",
    "run_example1",
    "run_example2",
    "run_single",
    "write_rows",
    "write_trace_csv",
    "main",
]

ALL_KINDS = tuple(k.value for k in BetaKind)


@dataclass
class ExperimentConfig:
    experiment: str = "example1"
    seed: int = 42
    beta_kinds: tuple = ALL_KINDS
    alpha: float = 0.9
    alpha_grid: tuple = ()
    rho: float = 0.1
    gamma_grid: tuple = (0.5, 0.75, 1.0, 2.0, 3.0, 4.0)
    solvers: tuple = ("CFCG", "CFSD")
    grad_tol: float = 1e-4
    max_iter: int = 2000
    c1: float = 1e-4
    c2: float = 0.9
    backtrack_ratio: float = 0.5
    max_trials: int = 60
    sd_step: float = 2e-4
    sd_grid: tuple = (0.01, 0.005, 0.001, 0.0005, 0.0001, 0.00005, 0.00001)
    f_decrease_tol: float = 1e-4
    node_count: int = 32
    fd_step: float = 1e-5
    m: int = 100
    n: int = 100
    hidden_units: int = 60
    train_points: int = 100
    trials: int = 5
    targets: tuple = BENCHMARK_IDS
    problem: str = "example1"
    solver: str = "CFCG"
    beta: str = "FR"
    gamma: float = 1.0
    out: str = "bench_out"
    format: str = "csv"
    write_traces: bool = True

    def line_search(self):
        return LineSearchParams(self.c1, self.c2, self.backtrack_ratio,
                                self.max_trials)

    def quad_spec(self):
        return QuadratureSpec(self.node_count, self.fd_step)


@dataclass
class ResultRow:
    experiment: str
    solver: str
    beta: str
    alpha: float
    rho: float
    gamma: float
    seed: int
    target: str
    trials_completed: int
    status: str
    stop_reason: str
    iterations: float
    objective_evals: float
    gradient_evals: float
    final_grad_norm: float
    final_dist: float
    step_param: float
    wall_ms: float

    FIELDS = ("experiment", "solver", "beta", "alpha", "rho", "gamma", "seed",
              "target", "trials_completed", "status", "stop_reason",
              "iterations", "objective_evals", "gradient_evals",
              "final_grad_norm", "final_dist", "step_param", "wall_ms")


# ---------------------------------------------------------------------------
# config file io


def _parse_value(text, sample):
    text = text.strip()
    if isinstance(sample, bool):
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(sample, int):
        return int(text)
    if isinstance(sample, float):
        return float(text)
    if isinstance(sample, tuple):
        if not text:
            return ()
        elem = sample[0] if sample else ""
        parts = [p.strip() for p in text.split(",")]
        if isinstance(elem, float):
            return tuple(float(p) for p in parts)
        if isinstance(elem, int):
            return tuple(int(p) for p in parts)
        return tuple(parts)
    return text


def _format_value(value):
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ConfigError(ValueError):
    pass


def load_config(path):
    defaults = ExperimentConfig()
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, text = line.partition("=")
        key = key.strip()
        if key not in {f.name for f in dataclasses.fields(ExperimentConfig)}:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(text, getattr(defaults, key))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: field {key!r}: {exc}") from exc
    return dataclasses.replace(defaults, **values)


def save_config(config, path):
    lines = [f"{f.name} = {_format_value(getattr(config, f.name))}"
             for f in dataclasses.fields(config)]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# serialization


def _fmt(x):
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def write_rows(rows, path, fmt):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(ResultRow.FIELDS)
            for row in rows:
                writer.writerow([_fmt(getattr(row, name)) for name in ResultRow.FIELDS])
    elif fmt == "json":
        payload = [{name: getattr(row, name) for name in ResultRow.FIELDS}
                   for row in rows]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown output format {fmt!r}")


TRACE_COLUMNS = ("k", "f", "grad_norm", "step", "beta", "descent_inner",
                 "cos_theta", "restarted", "dist_to_ref")


def write_trace_csv(trace, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in trace:
            writer.writerow([
                rec.k, _fmt(rec.f_value), _fmt(rec.grad_norm), _fmt(rec.step),
                _fmt(rec.beta), _fmt(rec.descent_inner), _fmt(rec.cos_theta),
                int(rec.restarted),
                "" if rec.dist_to_reference is None else _fmt(rec.dist_to_reference),
            ])


# ---------------------------------------------------------------------------
# runners


def _row_from_report(report, *, experiment, solver, beta, alpha, rho, gamma,
                     seed, target="", step_param=float("nan"), wall_ms=0.0):
    last = report.trace[-1]
    dist = float("nan") if last.dist_to_reference is None else last.dist_to_reference
    return ResultRow(
        experiment=experiment, solver=solver, beta=beta, alpha=alpha, rho=rho,
        gamma=gamma, seed=seed, target=target, trials_completed=1,
        status=report.status.value, stop_reason=report.stop_reason,
        iterations=report.iterations, objective_evals=report.objective_evals,
        gradient_evals=report.gradient_evals,
        final_grad_norm=report.final_grad_norm, final_dist=dist,
        step_param=step_param, wall_ms=wall_ms,
    )


def _example1_cell(config, prob, x0, c, gamma, solver, beta_kind):
    """One sweep cell on its own problem copy; returns (report, target)."""
    prob = dataclasses.replace(prob, gamma=gamma)
    frac = FracParams(config.alpha, config.rho, c)
    if not check_Abar_pd(stacked_problem(prob), frac):
        raise ArithmeticError(
            f"iteration matrix not positive definite at gamma={gamma}"
        )
    objective, target, _ = tikhonov_run_objective(prob, frac)
    stop = StopCriteria(config.grad_tol, config.max_iter)
    if solver == "CFCG":
        report = cfcg_minimize(objective, x0, frac, beta_kind,
                               ls=config.line_search(), stop=stop,
                               reference=target)
    else:
        report = cfsd_minimize(objective, x0, frac, FixedStep(config.sd_step),
                               stop=stop, reference=target)
    return report, target


def run_example1(config, out_dir=None):
    """Sweep gamma grid x beta kinds x solvers on one seeded instance."""
    e1 = Example1Config(seed=config.seed, m=config.m, n=config.n,
                        gamma_grid=config.gamma_grid)
    prob, x0, c = gen_example1(e1)
    rows = []
    for gamma in config.gamma_grid:
        for beta_kind in config.beta_kinds:
            for solver in config.solvers:
                t0 = time.perf_counter()
                try:
                    report, _ = _example1_cell(config, prob, x0, c, gamma,
                                               solver, beta_kind)
                except Exception as exc:  # noqa: BLE001 - row records the failure
                    rows.append(ResultRow(
                        experiment="example1", solver=solver, beta=beta_kind,
                        alpha=config.alpha, rho=config.rho, gamma=gamma,
                        seed=config.seed, target="", trials_completed=0,
                        status=f"Error({type(exc).__name__})", stop_reason=str(exc),
                        iterations=float("nan"), objective_evals=float("nan"),
                        gradient_evals=float("nan"),
                        final_grad_norm=float("nan"), final_dist=float("nan"),
                        step_param=float("nan"), wall_ms=0.0))
                    continue
                wall = (time.perf_counter() - t0) * 1e3
                step_param = config.sd_step if solver == "CFSD" else float("nan")
                rows.append(_row_from_report(
                    report, experiment="example1", solver=solver,
                    beta=beta_kind if solver == "CFCG" else "",
                    alpha=config.alpha, rho=config.rho, gamma=gamma,
                    seed=config.seed, step_param=step_param, wall_ms=wall))
                if out_dir is not None and config.write_traces:
                    name = f"trace_example1_g{gamma:g}_{solver}_{beta_kind}.csv"
                    write_trace_csv(report.trace, Path(out_dir) / name)
    return rows


def _trial_seeds(base_seed, target_index, trial):
    ss = np.random.SeedSequence((base_seed, target_index, trial))
    data, init = ss.spawn(2)
    return data, init


def _mean_row(reports, walls, *, solver, beta, alpha, rho, seed, target,
              step_param):
    n = len(reports)
    worst = max(reports, key=lambda r: (r.status is not RunStatus.CONVERGED,))
    return ResultRow(
        experiment="example2", solver=solver, beta=beta, alpha=alpha, rho=rho,
        gamma=float("nan"), seed=seed, target=target, trials_completed=n,
        status=worst.status.value, stop_reason="mean-over-trials",
        iterations=float(np.mean([r.iterations for r in reports])),
        objective_evals=float(np.mean([r.objective_evals for r in reports])),
        gradient_evals=float(np.mean([r.gradient_evals for r in reports])),
        final_grad_norm=float(np.mean([r.final_grad_norm for r in reports])),
        final_dist=float("nan"), step_param=step_param,
        wall_ms=float(np.sum(walls)),
    )


def run_example2(config, out_dir=None):
    """Network-training comparison; one mean row per (alpha, target, solver/beta)."""
    spec = MlpSpec(hidden_units=config.hidden_units,
                   train_points=config.train_points, trials=config.trials)
    c = mlp_lower_terminal(spec)
    quad = config.quad_spec()
    alphas = config.alpha_grid if config.alpha_grid else (config.alpha,)
    stop = StopCriteria(config.grad_tol, config.max_iter,
                        f_decrease_tol=config.f_decrease_tol)
    rows = []
    for alpha in alphas:
        frac = FracParams(alpha, config.rho, c)
        for ti, target in enumerate(config.targets):
            cells = [("CFCG", bk) for bk in config.beta_kinds]
            if "CFSD" in config.solvers:
                cells.append(("CFSD", ""))
            for solver, beta_kind in cells:
                reports, walls = [], []
                for trial in range(config.trials):
                    data_ss, init_ss = _trial_seeds(config.seed, ti, trial)
                    objective = mlp_objective(spec, target, data_ss)
                    x0 = mlp_init(spec, init_ss)
                    t0 = time.perf_counter()
                    if solver == "CFCG":
                        report = cfcg_minimize(objective, x0, frac, beta_kind,
                                               ls=config.line_search(),
                                               stop=stop, quad=quad)
                    else:
                        report = cfsd_minimize(objective, x0, frac,
                                               GridStep(config.sd_grid),
                                               stop=stop, quad=quad)
                    walls.append((time.perf_counter() - t0) * 1e3)
                    reports.append(report)
                    if out_dir is not None and config.write_traces:
                        name = (f"trace_example2_a{alpha:g}_{target}_"
                                f"{solver}{beta_kind}_t{trial}.csv")
                        write_trace_csv(report.trace, Path(out_dir) / name)
                step = float("nan") if solver == "CFCG" else max(config.sd_grid)
                rows.append(_mean_row(reports, walls, solver=solver,
                                      beta=beta_kind, alpha=alpha,
                                      rho=config.rho, seed=config.seed,
                                      target=target, step_param=step))
    return rows


def run_single(config, out_dir=None):
    """One problem, one solver, one beta; returns (row, report)."""
    if config.problem == "example1":
        e1 = Example1Config(seed=config.seed, m=config.m, n=config.n)
        prob, x0, c = gen_example1(e1)
        t0 = time.perf_counter()
        report, _ = _example1_cell(config, prob, x0, c, config.gamma,
                                   config.solver, config.beta)
        wall = (time.perf_counter() - t0) * 1e3
        gamma, target_name = config.gamma, ""
    elif config.problem.startswith("mlp-"):
        target_name = config.problem[4:]
        spec = MlpSpec(hidden_units=config.hidden_units,
                       train_points=config.train_points, trials=config.trials)
        data_ss, init_ss = _trial_seeds(config.seed,
                                        BENCHMARK_IDS.index(target_name), 0)
        objective = mlp_objective(spec, target_name, data_ss)
        x0 = mlp_init(spec, init_ss)
        frac = FracParams(config.alpha, config.rho, mlp_lower_terminal(spec))
        stop = StopCriteria(config.grad_tol, config.max_iter,
                            f_decrease_tol=config.f_decrease_tol)
        t0 = time.perf_counter()
        if config.solver == "CFCG":
            report = cfcg_minimize(objective, x0, frac, config.beta,
                                   ls=config.line_search(), stop=stop,
                                   quad=config.quad_spec())
        else:
            report = cfsd_minimize(objective, x0, frac, GridStep(config.sd_grid),
                                   stop=stop, quad=config.quad_spec())
        wall = (time.perf_counter() - t0) * 1e3
        gamma = float("nan")
    else:
        raise ConfigError(f"unknown problem {config.problem!r}")

    step = config.sd_step if config.solver == "CFSD" else float("nan")
    row = _row_from_report(report, experiment="single", solver=config.solver,
                           beta=config.beta if config.solver == "CFCG" else "",
                           alpha=config.alpha, rho=config.rho, gamma=gamma,
                           seed=config.seed, target=target_name,
                           step_param=step, wall_ms=wall)
    if out_dir is not None and config.write_traces:
        write_trace_csv(report.trace, Path(out_dir) / "trace_single.csv")
    return row, report


# ---------------------------------------------------------------------------
# entry point


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cfcg-bench",
        description="fractional conjugate-gradient benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("example1", "example2", "single"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None,
                       help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--rho", type=float, default=None)
        p.add_argument("--beta", type=str, default=None,
                       help="comma-separated beta kinds (FR,CD,DY,PRP,HS)")
        p.add_argument("--gamma", type=str, default=None,
                       help="comma-separated gamma grid")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", type=str, default=None,
                       choices=("csv", "json"))
        if name == "single":
            p.add_argument("--problem", type=str, default=None)
            p.add_argument("--solver", type=str, default=None,
                           choices=("CFCG", "CFSD"))
    return parser


def _apply_overrides(config, args, command):
    updates = {"experiment": command}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.alpha is not None:
        updates["alpha"] = args.alpha
    if args.rho is not None:
        updates["rho"] = args.rho
    if args.beta is not None:
        kinds = tuple(k.strip().upper() for k in args.beta.split(","))
        bad = [k for k in kinds if k not in ALL_KINDS]
        if bad:
            raise ConfigError(f"unknown beta kind(s): {', '.join(bad)}")
        updates["beta_kinds"] = kinds
        updates["beta"] = kinds[0]
    if args.gamma is not None:
        grid = tuple(float(g) for g in args.gamma.split(","))
        updates["gamma_grid"] = grid
        updates["gamma"] = grid[0]
    if args.tol is not None:
        updates["grad_tol"] = args.tol
    if args.max_iter is not None:
        updates["max_iter"] = args.max_iter
    if args.out is not None:
        updates["out"] = args.out
    if args.format is not None:
        updates["format"] = args.format
    if command == "single":
        if args.problem is not None:
            updates["problem"] = args.problem
        if args.solver is not None:
            updates["solver"] = args.solver
    return dataclasses.replace(config, **updates)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
        config = _apply_overrides(config, args, args.command)
        out_dir = Path(config.out)
        if args.command == "example1":
            rows = run_example1(config, out_dir)
        elif args.command == "example2":
            rows = run_example2(config, out_dir)
        else:
            row, _ = run_single(config, out_dir)
            rows = [row]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    write_rows(rows, out_dir / f"results.{config.format}", config.format)
    print(f"{len(rows)} result row(s) -> {out_dir}/results.{config.format}")
    all_converged = all(r.status == RunStatus.CONVERGED.value for r in rows)
    return 0 if all_converged else 1


if __name__ == "__main__":
    sys.exit(main())
