"""BFGS with Armijo backtracking, and marginal-likelihood hyperparameter fits."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AllRestartsFailed, GPForecastError, NonFiniteObjective
from .gp import nll_and_grad
from .kernels import SLOT, HyperParams, N_PARAMS, as_points

log = logging.getLogger(__name__)

ARMIJO_C1 = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 40
# a line search this long means the inverse-Hessian estimate is poorly scaled
RESET_AFTER_BACKTRACKS = 10
CURVATURE_EPS = 1e-10
NOISE_FLOOR_REL = 1e-6
# periods shorter than two samples alias onto longer ones for integer time steps
PERIOD_FLOOR = 2.0
MAX_LOG_STEP = 2.0
JITTER_HALF_WIDTH = 0.5


@dataclass(frozen=True)
class OptimResult:
    theta: np.ndarray
    final_nll: float
    iterations: int
    converged: bool
    restart_index: int = 0
    grad_norm: float = math.nan
    message: str = ""
    trace: tuple = field(default=(), repr=False)


def _safe_eval(fn, x):
    try:
        v = fn(x)
    except (GPForecastError, FloatingPointError, np.linalg.LinAlgError, OverflowError):
        return None
    return v


def bfgs_minimize(objective: Callable, gradient: Callable, x0, tol: float = 1e-5,
                  max_iters: int = 500, max_step: float | None = None) -> OptimResult:
    """Minimize ``objective`` by BFGS with a backtracking Armijo line search.

    Stops when the gradient max-norm drops below ``tol``, after ``max_iters``
    iterations, or when the line search cannot find sufficient decrease. The
    inverse-Hessian estimate is updated only when ``s.y > 1e-10`` and is reset
    to the identity after a line search that needed many halvings. Objective
    evaluations that raise a numerical error count as ``+inf`` during the
    line search. ``max_step`` caps the max-norm of the first trial step of
    each line search.

    Raises
    ------
    NonFiniteObjective
        If the objective or gradient is not finite at ``x0``.
    """
    x = np.array(x0, dtype=float)
    f = _safe_eval(objective, x)
    if f is None or not np.isfinite(f):
        raise NonFiniteObjective(f"objective is not finite at the starting point ({f})")
    g = np.asarray(gradient(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteObjective("gradient is not finite at the starting point")
    n = x.size
    H = np.eye(n)
    trace = [float(f)]
    message = "maximum iterations reached"
    converged = False
    it = 0
    while True:
        gnorm = float(np.max(np.abs(g))) if n else 0.0
        if gnorm < tol:
            converged = True
            message = "gradient tolerance reached"
            break
        if it >= max_iters:
            break
        p = -H @ g
        slope = float(g @ p)
        if slope >= 0:
            # lost descent direction; restart from steepest descent
            H = np.eye(n)
            p = -g
            slope = float(g @ p)
        step = 1.0
        if max_step is not None:
            pmax = float(np.max(np.abs(p)))
            if pmax > max_step:
                step = max_step / pmax
        for n_back in range(MAX_BACKTRACKS):
            x_new = x + step * p
            f_new = _safe_eval(objective, x_new)
            if f_new is not None and f_new < f and f_new <= f + ARMIJO_C1 * step * slope:
                break
            step *= BACKTRACK
        else:
            message = "line search failed"
            break
        g_new = np.asarray(gradient(x_new), dtype=float)
        if not np.all(np.isfinite(g_new)):
            message = "non-finite gradient"
            break
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        if n_back >= RESET_AFTER_BACKTRACKS:
            H = np.eye(n)
        elif sy > CURVATURE_EPS:
            if it == 0:
                H = np.eye(n) * (sy / float(yv @ yv))
            rho = 1.0 / sy
            Hy = H @ yv
            H = H + ((sy + yv @ Hy) * rho * rho) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))
        x, f, g = x_new, float(f_new), g_new
        trace.append(f)
        it += 1
    return OptimResult(x, float(f), it, converged, 0, gnorm, message, tuple(trace))


# -- hyperparameter fitting ---------------------------------------------------

def _target_scale(targets: np.ndarray) -> float:
    s = float(np.std(targets))
    return s if s > 0 else 1.0


def noise_floor(targets) -> float:
    """Lower bound on log(sigma_n): log(1e-6 * std(targets))."""
    return math.log(NOISE_FLOOR_REL * _target_scale(np.asarray(targets, dtype=float)))


def initial_theta(points, targets) -> HyperParams:
    """Scale-matched starting point for the marginal-likelihood search."""
    X = as_points(points)
    y = np.asarray(targets, dtype=float)
    var = _target_scale(y) ** 2
    if X.shape[0] > 1:
        diff = X[:, None, :] - X[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))[np.triu_indices(X.shape[0], 1)]
        length = float(np.median(d))
    else:
        length = 1.0
    if not length > 0:
        length = 1.0
    sd = math.sqrt(var / 3.0)
    return HyperParams.from_natural(
        sigma1=sd, l1=length, sigma2=sd, l2=length, p=12.0, lper=1.0,
        sigma3=var / 3.0, alpha=1.0, l3=length, sigmaf=sd, l4=length,
        sigman=0.1 * math.sqrt(var),
    )


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LmlObjective:
    """Negative log marginal likelihood in unconstrained optimizer coordinates.

    The optimizer works on ``z``, equal to the log-hyperparameters except for
    the noise and period slots, which are ``log v = log_floor + softplus(z)``.
    That keeps sigma_n above ``1e-6 * std(targets)`` and the period above two
    time steps without a constrained optimizer.
    """

    NOISE = SLOT["sigman"]
    PERIOD = SLOT["p"]

    def __init__(self, points, targets):
        self.X = as_points(points)
        self.y = np.asarray(targets, dtype=float)
        self.floor = noise_floor(self.y)
        self.floors = {self.NOISE: self.floor, self.PERIOD: math.log(PERIOD_FLOOR)}
        self.evaluations = 0
        self._cache_key = None
        self._cache = None

    def encode(self, theta) -> np.ndarray:
        z = np.array(theta, dtype=float)
        for slot, floor in self.floors.items():
            gap = max(z[slot] - floor, 1e-12)
            # inverse softplus
            z[slot] = gap + math.log(-math.expm1(-gap))
        return z

    def decode(self, z) -> np.ndarray:
        theta = np.array(z, dtype=float)
        for slot, floor in self.floors.items():
            theta[slot] = floor + _softplus(theta[slot])
        return theta

    def _eval(self, z):
        key = np.asarray(z, dtype=float).tobytes()
        if key != self._cache_key:
            theta = self.decode(z)
            self.evaluations += 1
            with np.errstate(over="ignore", under="ignore"):
                f, g = nll_and_grad(self.X, self.y, theta)
            g = g.copy()
            for slot in self.floors:
                g[slot] *= _sigmoid(z[slot])
            self._cache_key, self._cache = key, (f, g)
        return self._cache

    def value(self, z) -> float:
        return self._eval(z)[0]

    def gradient(self, z) -> np.ndarray:
        return self._eval(z)[1]

    def nll(self, theta) -> float:
        return nll_and_grad(self.X, self.y, np.asarray(theta, dtype=float))[0]


def start_points(points, targets, restarts: int, seed: int) -> list[np.ndarray]:
    """Canonical start followed by ``restarts - 1`` seeded jittered copies."""
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    base = np.asarray(initial_theta(points, targets))
    rng = np.random.default_rng(seed)
    starts = [base]
    for _ in range(restarts - 1):
        starts.append(base + rng.uniform(-JITTER_HALF_WIDTH, JITTER_HALF_WIDTH, N_PARAMS))
    return starts


def fit_hyperparams(points, targets, restarts: int = 5, seed: int = 0, tol: float = 1e-5,
                    max_iters: int = 500) -> OptimResult:
    """Maximize the marginal likelihood from several starts; keep the best.

    Ties on the final objective go to the lowest restart index, so the result
    does not depend on evaluation order.
    """
    obj = LmlObjective(points, targets)
    results = []
    for i, theta0 in enumerate(start_points(points, targets, restarts, seed)):
        z0 = obj.encode(theta0)
        try:
            res = bfgs_minimize(obj.value, obj.gradient, z0, tol=tol, max_iters=max_iters,
                                max_step=MAX_LOG_STEP)
        except NonFiniteObjective as exc:
            log.info("restart %d failed: %s", i, exc)
            continue
        log.debug("restart %d: nll=%.6g iters=%d %s", i, res.final_nll, res.iterations, res.message)
        results.append(OptimResult(obj.decode(res.theta),
                                   res.final_nll, res.iterations, res.converged, i,
                                   res.grad_norm, res.message, res.trace))
    if not results:
        raise AllRestartsFailed(f"all {restarts} restarts failed at their starting points")
    return min(results, key=lambda r: (r.final_nll, r.restart_index))
