"""Seeded benchmark problems: random Tikhonov least-squares instances and
tiny tanh-network regression objectives.

All generators are pure functions of their seeds; independent draws come
from spawned child streams of one PCG64 seed sequence so each sub-draw is
reproducible on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import Objective
from .fraccalc import FracParams, frac_gradient_quadratic
from .tikhonov import (BuildConvention, abar_matrix, build_quadratic,
                       tikhonov_solution)

__all__ = [
    "Example1Config",
    "MlpSpec",
    "gen_example1",
    "benchmark_fn",
    "BENCHMARK_IDS",
    "mlp_objective",
    "mlp_init",
    "mlp_param_bounds",
    "mlp_lower_terminal",
    "stacked_problem",
    "tikhonov_run_objective",
]

BENCHMARK_IDS = ("h1", "h2", "h3")


def _as_seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


@dataclass(frozen=True)
class Example1Config:
    seed: int = 42
    m: int = 100
    n: int = 100
    entry_range: tuple = (-1.0, 1.0)
    x0_range: tuple = (1.0, 10.0)
    c_value: float = 1.0
    gamma_grid: tuple = (0.5, 0.75, 1.0, 2.0, 3.0, 4.0)


@dataclass(frozen=True)
class MlpSpec:
    hidden_units: int = 60
    activation: str = "tanh"
    train_points: int = 100
    input_interval: tuple = (-1.0, 1.0)
    trials: int = 5
    alpha_grid: tuple = (0.5, 0.6, 0.7, 0.8, 0.9)

    def __post_init__(self):
        if self.activation != "tanh":
            raise ValueError("only tanh networks are supported")
        if self.hidden_units < 1 or self.train_points < 1 or self.trials < 1:
            raise ValueError("hidden_units, train_points, trials must be positive")

    @property
    def param_dim(self):
        return 3 * self.hidden_units + 1


def gen_example1(config):
    """Random least-squares instance: X, y uniform on entry_range,
    A = XX', b = -Ay, x0 uniform on x0_range, c = c_value * ones.

    Returns (problem, x0, c); the problem's anchor x_bar is set to c and
    its gamma to the first grid entry (swap per sweep cell with
    dataclasses.replace).
    """
    ss = np.random.SeedSequence(config.seed)
    problem_stream, x0_stream = [np.random.default_rng(s) for s in ss.spawn(2)]
    lo, hi = config.entry_range
    X = problem_stream.uniform(lo, hi, (config.n, config.m))
    y = problem_stream.uniform(lo, hi, config.m)
    x0 = x0_stream.uniform(config.x0_range[0], config.x0_range[1], config.n)
    c = np.full(config.n, config.c_value)
    prob = build_quadratic(X, y, BuildConvention.EXAMPLE1,
                           gamma=config.gamma_grid[0], x_bar=c)
    return prob, x0, c


def stacked_problem(prob):
    """The regularized problem written as a plain least-squares system.

    Stacking sqrt(gamma) Rbar' under X' absorbs the penalty term, so the
    stacked system's ordinary solution is exactly the closed-form
    regularized solution of the original problem.
    """
    scaled = math.sqrt(prob.gamma) * prob.r_bar
    X_aug = np.hstack([prob.X, np.diag(scaled)])
    y_aug = np.concatenate([prob.y, scaled * prob.x_bar])
    return build_quadratic(X_aug, y_aug, BuildConvention.SECTION,
                           gamma=0.0, x_bar=prob.x_bar)


def tikhonov_run_objective(prob, frac):
    """Engine objective for one regularized sweep cell.

    The iteration matrix is the stacked system's matrix plus the
    fractional diagonal correction, and the quadratic is centered on the
    closed-form regularized solution, so the run's fractional gradient
    vanishes exactly there and the minimum value is zero.  Returns
    (objective, target, abar).
    """
    stacked = stacked_problem(prob)
    abar = abar_matrix(stacked, frac)
    target = tikhonov_solution(prob)
    # b making frac_gradient_quadratic(A_stacked, b, x) == abar (x - target)
    b_eff = -(abar @ target) + frac.gamma * stacked.r_bar * frac.c

    def fn(x):
        e = x - target
        return 0.5 * float(e @ (abar @ e))

    def grad(x):
        return frac_gradient_quadratic(stacked.A, b_eff, x, frac)

    name = f"tikhonov[n={prob.A.shape[0]},gamma={prob.gamma:g}]"
    return Objective(fn, frac_gradient=grad, name=name), target, abar


def benchmark_fn(fn_id, z):
    """The three scalar regression targets; h3 jumps at z = 0 and the
    indicator evaluates to 0 there."""
    z = np.asarray(z, dtype=float)
    if fn_id == "h1":
        out = np.sin(5.0 * np.pi * z)
    elif fn_id == "h2":
        out = np.sin(2.0 * np.pi * z) * np.exp(-(z**2))
    elif fn_id == "h3":
        out = (z > 0.0).astype(float) + 0.2 * np.sin(2.0 * np.pi * z)
    else:
        raise ValueError(f"unknown benchmark id {fn_id!r}")
    return out if out.ndim else float(out)


def mlp_param_bounds(spec):
    """Half-widths of the uniform init, 1/sqrt(fan_in) per coordinate.

    Layout of the flattened parameter vector (H = hidden_units):
    [input weights (H) | input biases (H) | output weights (H) | output bias].
    Input-side entries have fan_in 1, output-side entries fan_in H.
    """
    H = spec.hidden_units
    return np.concatenate([np.ones(2 * H), np.full(H + 1, 1.0 / math.sqrt(H))])


def mlp_init(spec, seed):
    bounds = mlp_param_bounds(spec)
    rng = np.random.default_rng(_as_seed_sequence(seed))
    return rng.uniform(-bounds, bounds)


def mlp_lower_terminal(spec):
    """Default lower terminals: one unit below the init range."""
    return -(1.0 + mlp_param_bounds(spec))


def mlp_objective(spec, target, data_seed):
    """Mean-squared-error objective of a 1-H-1 tanh network against a
    sampled target function.

    The dataset (train_points inputs uniform on input_interval) is drawn
    from data_seed only.  Besides plain evaluation the objective carries a
    vectorized coordinate-line evaluator used by the quadrature path.
    """
    if target not in BENCHMARK_IDS:
        raise ValueError(f"unknown benchmark id {target!r}")
    rng = np.random.default_rng(_as_seed_sequence(data_seed))
    lo, hi = spec.input_interval
    z = rng.uniform(lo, hi, spec.train_points)
    tv = benchmark_fn(target, z)
    H = spec.hidden_units

    def fn(p):
        w, b1, v, b2 = p[:H], p[H:2 * H], p[2 * H:3 * H], p[3 * H]
        pred = np.tanh(np.outer(z, w) + b1) @ v + b2
        return float(np.mean((pred - tv) ** 2))

    def eval_line(p, i, ts):
        ts = np.asarray(ts, dtype=float)
        w, b1, v, b2 = p[:H], p[H:2 * H], p[2 * H:3 * H], p[3 * H]
        hid = np.tanh(np.outer(z, w) + b1)
        base = hid @ v + b2
        if i < H:
            j = i
            swept = np.tanh(np.outer(z, ts) + b1[j])
            pred = base[:, None] + v[j] * (swept - hid[:, j][:, None])
        elif i < 2 * H:
            j = i - H
            swept = np.tanh(z[:, None] * w[j] + ts[None, :])
            pred = base[:, None] + v[j] * (swept - hid[:, j][:, None])
        elif i < 3 * H:
            j = i - 2 * H
            pred = base[:, None] + (ts[None, :] - v[j]) * hid[:, j][:, None]
        else:
            pred = base[:, None] + (ts[None, :] - b2)
        return np.mean((pred - tv[:, None]) ** 2, axis=0)

    return Objective(fn, eval_line=eval_line,
                     name=f"mlp[{target},H={H},P={spec.train_points}]")
