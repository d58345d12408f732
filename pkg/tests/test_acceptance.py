"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
verdict lines.
"""

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np
import pytest

from cfcg.cli import ExperimentConfig, ResultRow, run_example1, run_example2
from cfcg.engine import (LineSearchParams, Objective, RunStatus, StopCriteria,
                         cfcg_minimize, recheck_armijo_wolfe)
from cfcg.fraccalc import (FracParams, QuadratureSpec, frac_gradient_general,
                           frac_gradient_quadratic)
from cfcg.problems import (Example1Config, MlpSpec, benchmark_fn,
                           gen_example1, mlp_init, mlp_lower_terminal,
                           mlp_objective, tikhonov_run_objective)
from cfcg.tikhonov import build_quadratic, tikhonov_solution

ALL_KINDS = ("FR", "CD", "DY", "PRP", "HS")


def verdict(ok, label, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" :: {detail}" if detail else ""))
    assert ok, f"{label} {detail}"


def central_diff_gradient(fn, x, rel_step=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


@pytest.fixture(scope="module")
def default_sweep_rows():
    return run_example1(ExperimentConfig())


@pytest.fixture(scope="module")
def kept_vector_cells():
    """Every CFCG cell of the default sweep, rerun with retained vectors."""
    config = ExperimentConfig()
    e1 = Example1Config(seed=config.seed, m=config.m, n=config.n)
    prob0, x0, c = gen_example1(e1)
    frac = FracParams(config.alpha, config.rho, c)
    cells = {}
    for gamma in config.gamma_grid:
        prob = dataclasses.replace(prob0, gamma=gamma)
        for kind in ALL_KINDS:
            objective, target, _ = tikhonov_run_objective(prob, frac)
            report = cfcg_minimize(
                objective, x0, frac, kind, ls=config.line_search(),
                stop=StopCriteria(config.grad_tol, config.max_iter),
                reference=target, keep_vectors=True)
            cells[(gamma, kind)] = (report, objective)
    return cells


def test_criterion_01_tikhonov_convergence():
    # five seeded 30x30 instances, alpha=0.9 rho=0.1 gamma=1: every kind
    # lands within 1e-3 of the closed-form regularized solution
    worst = 0.0
    for i in range(5):
        prob, x0, c = gen_example1(Example1Config(seed=1000 + i, m=30, n=30))
        prob = dataclasses.replace(prob, gamma=1.0)
        frac = FracParams(0.9, 0.1, c)
        for kind in ALL_KINDS:
            objective, target, _ = tikhonov_run_objective(prob, frac)
            report = cfcg_minimize(objective, x0, frac, kind,
                                   stop=StopCriteria(1e-6, 2000))
            dist = float(np.linalg.norm(report.final_x - target))
            worst = max(worst, dist)
            assert report.iterations <= 2000
            if dist > 1e-3:
                verdict(False, "criterion 1 (Tikhonov convergence)",
                        f"seed={1000+i} kind={kind} dist={dist:.2e}")
    verdict(True, "criterion 1 (Tikhonov convergence)",
            f"worst distance {worst:.2e} <= 1e-3")


def test_criterion_02_table1_qualitative(default_sweep_rows):
    rows = default_sweep_rows
    sd_iters = {r.gamma: r.iterations for r in rows if r.solver == "CFSD"}
    worst_cg, worst_ratio = 0, math.inf
    for r in rows:
        if r.solver != "CFCG":
            continue
        ratio = sd_iters[r.gamma] / max(r.iterations, 1)
        worst_cg = max(worst_cg, r.iterations)
        worst_ratio = min(worst_ratio, ratio)
        if r.iterations > 200 or r.iterations > sd_iters[r.gamma] / 5.0:
            verdict(False, "criterion 2 (Table-1 qualitative)",
                    f"gamma={r.gamma} beta={r.beta}: cfcg={r.iterations} "
                    f"cfsd={sd_iters[r.gamma]}")
    verdict(True, "criterion 2 (Table-1 qualitative)",
            f"max CFCG iters {worst_cg} <= 200, min CFSD/CFCG ratio "
            f"{worst_ratio:.1f} >= 5")


def test_criterion_03_gradient_oracle_agreement():
    rng = np.random.default_rng(314)
    n = 10
    B = rng.normal(size=(n, n))
    A = B @ B.T + n * np.eye(n)
    d = 1.0 / np.sqrt(np.diag(A))
    A = A * np.outer(d, d)          # unit diagonal keeps both paths aligned
    b = rng.normal(size=n)
    c = rng.uniform(-0.3, 0.0, n)
    x = rng.uniform(0.7, 1.7, n)
    params = FracParams(0.9, 0.1, c)

    def f(z):
        return 0.5 * float(z @ A @ z) + float(b @ z)

    general = frac_gradient_general(f, x, params, QuadratureSpec(node_count=2000))
    closed = frac_gradient_quadratic(A, b, x, params)
    rel = np.max(np.abs(general - closed) / np.abs(closed))
    verdict(rel <= 1e-3, "criterion 3 (gradient oracle agreement)",
            f"max componentwise rel err {rel:.2e} <= 1e-3 at 2000 nodes")


def test_criterion_04_classical_limit():
    params_n = None
    # (a) scalar benchmark target composed with a quadratic map of R^6
    rng = np.random.default_rng(2718)
    n = 6
    Q = rng.normal(size=(n, n))
    Q = 0.5 * (Q + Q.T)
    p = rng.normal(size=n)
    x = rng.uniform(0.6, 1.4, n)

    def lifted(z):
        return float(benchmark_fn("h2", 0.5 * float(z @ Q @ z) + float(p @ z)))

    frac = FracParams(1.0 - 1e-6, 0.0, np.full(n, -0.5))
    general = frac_gradient_general(Objective(lifted), x, frac,
                                    QuadratureSpec(node_count=1000))
    oracle = central_diff_gradient(lifted, x)
    rel_a = np.linalg.norm(general - oracle) / np.linalg.norm(oracle)

    # (b) the network objective at random parameters
    spec = MlpSpec(hidden_units=20, train_points=50, trials=3)
    objective = mlp_objective(spec, "h2", data_seed=5)
    theta = mlp_init(spec, 6)
    frac_mlp = FracParams(1.0 - 1e-6, 0.0, mlp_lower_terminal(spec))
    general_mlp = frac_gradient_general(objective, theta, frac_mlp,
                                        QuadratureSpec(node_count=400))
    oracle_mlp = central_diff_gradient(objective.eval_uncounted, theta)
    rel_b = np.linalg.norm(general_mlp - oracle_mlp) / np.linalg.norm(oracle_mlp)

    verdict(rel_a <= 1e-4 and rel_b <= 1e-4, "criterion 4 (classical limit)",
            f"lifted-target rel {rel_a:.2e}, network rel {rel_b:.2e} <= 1e-4")


def test_criterion_05_line_search_soundness(kept_vector_cells):
    ls = LineSearchParams()
    worst = math.inf
    steps = 0
    for (gamma, kind), (report, objective) in kept_vector_cells.items():
        slack = recheck_armijo_wolfe(report, objective,
                                     objective.frac_gradient, ls)
        worst = min(worst, slack)
        steps += len(report.ds)
        if slack < -1e-12:
            verdict(False, "criterion 5 (line-search soundness)",
                    f"gamma={gamma} {kind}: slack {slack:.2e}")
    verdict(True, "criterion 5 (line-search soundness)",
            f"{steps} accepted steps re-verified, worst slack {worst:.2e}")


def test_criterion_06_descent_identities(kept_vector_cells):
    checked = 0
    for (gamma, kind), (report, _) in kept_vector_cells.items():
        body = report.trace[:-1]
        if kind in ("PRP", "HS"):
            if any(rec.beta < 0.0 for rec in body):
                verdict(False, "criterion 6 (descent identities)",
                        f"negative recorded beta in {kind} at gamma={gamma}")
        if kind != "FR":
            continue
        for k in range(1, len(report.ds)):
            if report.trace[k].restarted:
                continue
            g, g_prev = report.gs[k], report.gs[k - 1]
            d, d_prev = report.ds[k], report.ds[k - 1]
            lhs = float(g @ d)
            rhs = -float(g @ g) * (1.0 - float(g @ d_prev) / float(g_prev @ g_prev))
            if not math.isclose(lhs, rhs, rel_tol=1e-10):
                verdict(False, "criterion 6 (descent identities)",
                        f"FR identity off at gamma={gamma} k={k}")
            checked += 1
    verdict(checked > 0, "criterion 6 (descent identities)",
            f"FR identity at {checked} non-restart iterations, "
            "PRP/HS betas all nonnegative")


def test_criterion_07_linear_rate():
    rng = np.random.default_rng(777)
    n = 20
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    lam = np.geomspace(1.0, 30.0, n)     # condition number 30 <= 100
    A = Q @ np.diag(lam) @ Q.T
    c = np.zeros(n)
    frac = FracParams(0.9, 0.1, c)
    rbar = np.sqrt(np.diag(A))
    abar = A + frac.gamma * np.diag(rbar)
    xstar = rng.normal(size=n)
    b = -(abar @ xstar) + frac.gamma * rbar * c

    def fn(x):
        e = x - xstar
        return 0.5 * float(e @ (abar @ e))

    objective = Objective(fn, frac_gradient=lambda x:
                          frac_gradient_quadratic(A, b, x, frac))
    x0 = rng.uniform(1, 10, n)
    report = cfcg_minimize(objective, x0, frac, "FR",
                           stop=StopCriteria(1e-9, 3000), keep_vectors=True)
    assert report.status is RunStatus.CONVERGED
    errs = [np.linalg.norm(z - xstar) for z in report.xs]
    ratios = [errs[i + 1] / errs[i] for i in range(len(errs) - 1)]
    tail = ratios[-10:]
    verdict(len(tail) == 10 and max(tail) <= 0.99,
            "criterion 7 (linear rate)",
            f"max tail contraction ratio {max(tail):.4f} <= 0.99")


def test_criterion_08_closed_form_oracle():
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(9000 + seed)
        n = int(rng.integers(5, 51))
        X = rng.uniform(-1, 1, (n, n))
        y = rng.uniform(-1, 1, n)
        x_bar = rng.normal(size=n)
        gamma = float(rng.uniform(0.3, 4.0))
        prob = build_quadratic(X, y, "SectionForm", gamma=gamma, x_bar=x_bar)
        got = tikhonov_solution(prob)
        # independent stacked-normal-equation solve
        A = X @ X.T
        R2 = np.diag(np.diag(A))
        want = np.linalg.solve(A + gamma * R2, X @ y + gamma * R2 @ x_bar)
        rel = np.linalg.norm(got - want) / np.linalg.norm(want)
        worst = max(worst, rel)
        if rel > 1e-8:
            verdict(False, "criterion 8 (closed-form oracle)",
                    f"seed={seed} n={n} rel={rel:.2e}")
    verdict(True, "criterion 8 (closed-form oracle)",
            f"20 instances, worst rel err {worst:.2e} <= 1e-8")


def test_criterion_09_network_desk_ordering():
    config = dataclasses.replace(
        ExperimentConfig(), seed=20250810, hidden_units=20, train_points=50,
        trials=3, grad_tol=1e-4, f_decrease_tol=1e-4, max_iter=500,
        node_count=32, alpha=0.9, write_traces=False)
    rows = run_example2(config)
    sd_mean = float(np.mean([r.iterations for r in rows if r.solver == "CFSD"]))
    detail = []
    ok = True
    for kind in ALL_KINDS:
        cg_mean = float(np.mean([r.iterations for r in rows if r.beta == kind]))
        detail.append(f"{kind}={cg_mean:.2f}")
        ok = ok and cg_mean < sd_mean
    verdict(ok, "criterion 9 (network desk-scale ordering)",
            f"mean CFCG iters {{{', '.join(detail)}}} < CFSD {sd_mean:.2f}")


def test_criterion_10_determinism(default_sweep_rows, tmp_path):
    config = ExperimentConfig()

    def strip(rows):
        out = []
        for r in rows:
            vals = []
            for name in ResultRow.FIELDS:
                if name == "wall_ms":
                    continue
                v = getattr(r, name)
                vals.append("nan" if isinstance(v, float) and math.isnan(v) else v)
            out.append(vals)
        return out

    dir_a, dir_b = tmp_path / "a", tmp_path / "b"
    rows_a = run_example1(config, dir_a)
    rows_b = run_example1(config, dir_b)
    rows_equal = (strip(rows_a) == strip(rows_b)
                  == strip(default_sweep_rows))
    traces_a = sorted(p.name for p in dir_a.glob("trace_*.csv"))
    traces_b = sorted(p.name for p in dir_b.glob("trace_*.csv"))
    traces_equal = traces_a == traces_b and all(
        (dir_a / name).read_bytes() == (dir_b / name).read_bytes()
        for name in traces_a)

    # a seeded network run repeats identically as well
    tiny = dataclasses.replace(
        ExperimentConfig(), seed=5, hidden_units=4, train_points=10, trials=1,
        targets=("h2",), beta_kinds=("FR",), node_count=8, max_iter=30,
        write_traces=False)
    mlp_equal = strip(run_example2(tiny)) == strip(run_example2(tiny))

    verdict(rows_equal and traces_equal and mlp_equal,
            "criterion 10 (determinism)",
            f"{len(traces_a)} trace files byte-identical, "
            "result rows identical up to wall-clock")
