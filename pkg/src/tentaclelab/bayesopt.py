"""Gaussian-process Bayesian optimization over actuation parameters.

A squared-exponential GP with fixed hyperparameters is fit to observed
(frequency, amplitude) -> objective evaluations; the next point is the
argmax of an exploration-weighted blend of min-max normalized posterior
mean and standard deviation over a fixed candidate grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import qmc

__all__ = [
    "SearchSpace",
    "EvalRecord",
    "GPosterior",
    "gp_fit",
    "gp_predict",
    "acquisition",
    "optimize",
    "history_to_csv",
]

HISTORY_HEADER = "iter,f,A,twi,tip_defl_deg,thrust_mN"

_LENGTH_SCALE = 0.2     # per dimension, in unit-box coordinates
_NOISE_VAR = 1e-4
_N_INIT = 3
_GRID_F = 64


@dataclass(frozen=True)
class SearchSpace:
    """Actuation search domain: a frequency interval and amplitude set."""

    f_range: tuple = (0.32, 3.2)          # Hz
    A_set: tuple = (10.0, 20.0, 30.0)     # degrees

    def __post_init__(self):
        lo, hi = self.f_range
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo <= 0 or hi <= lo:
            raise ValueError("f_range must be a bounded positive interval")
        if len(self.A_set) == 0:
            raise ValueError("A_set must be nonempty")
        object.__setattr__(self, "A_set", tuple(float(a) for a in self.A_set))

    def to_unit(self, f, A) -> np.ndarray:
        lo, hi = self.f_range
        uf = (np.asarray(f, dtype=float) - lo) / (hi - lo)
        if len(self.A_set) > 1:
            idx = np.array([self.A_set.index(float(a))
                            for a in np.atleast_1d(A)], dtype=float)
            ua = idx / (len(self.A_set) - 1)
        else:
            ua = np.zeros(np.atleast_1d(A).shape)
        return np.column_stack([np.atleast_1d(uf), ua])

    def grid(self) -> np.ndarray:
        """Candidate grid: 64 frequencies crossed with every amplitude."""
        fs = np.linspace(self.f_range[0], self.f_range[1], _GRID_F)
        return np.array([(f, a) for a in self.A_set for f in fs])


@dataclass(frozen=True)
class EvalRecord:
    """One objective evaluation at actuation parameters (f, A)."""

    f: float
    A: float
    objective: float
    tip_defl_deg: float = float("nan")
    thrust_mN: float = float("nan")
    trace_id: int = -1

    def __post_init__(self):
        if not np.isfinite(self.objective):
            raise ValueError("objective must be finite")


@dataclass(frozen=True)
class GPosterior:
    """Exact GP posterior with fixed SE kernel on unit-box inputs."""

    X: np.ndarray                 # (n, 2) unit coordinates
    y: np.ndarray                 # (n,) standardized observations
    y_mean: float
    y_std: float
    chol: tuple = field(repr=False, default=None)
    alpha: np.ndarray = field(repr=False, default=None)
    space: SearchSpace = None


def _kernel(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-0.5 * d2 / _LENGTH_SCALE ** 2)


def gp_fit(records, space: SearchSpace) -> GPosterior:
    """Fit the fixed-hyperparameter GP to a nonempty record list.

    Observations are standardized; the kernel matrix gets 1e-8 jitter,
    escalating tenfold until the Cholesky factorization succeeds.
    """
    if not records:
        raise ValueError("gp_fit needs at least one record")
    X = space.to_unit([r.f for r in records], [r.A for r in records])
    y_raw = np.array([r.objective for r in records])
    y_mean = float(y_raw.mean())
    y_std = float(y_raw.std())
    if y_std == 0.0:
        y_std = 1.0
    y = (y_raw - y_mean) / y_std
    K = _kernel(X, X) + _NOISE_VAR * np.eye(len(X))
    jitter = 1e-8
    while True:
        try:
            c = cho_factor(K + jitter * np.eye(len(X)), lower=True)
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > 1.0:
                raise
    alpha = cho_solve(c, y)
    return GPosterior(X=X, y=y, y_mean=y_mean, y_std=y_std,
                      chol=c, alpha=alpha, space=space)


def gp_predict(post: GPosterior, cand: np.ndarray) -> tuple:
    """Posterior mean and standard deviation at raw (f, A) candidates."""
    Xc = post.space.to_unit(cand[:, 0], cand[:, 1])
    Ks = _kernel(Xc, post.X)
    mu = Ks @ post.alpha
    v = cho_solve(post.chol, Ks.T)
    var = 1.0 - np.sum(Ks * v.T, axis=1)
    var = np.maximum(var, 0.0)
    return (mu * post.y_std + post.y_mean,
            np.sqrt(var) * post.y_std)


def acquisition(mu: np.ndarray, sigma: np.ndarray, rho: float = 0.8) -> int:
    """Index of the next candidate: (1-rho)*mu_hat + rho*sigma_hat.

    mu_hat and sigma_hat are min-max normalized over the grid; ties are
    broken by the lowest index.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if mu.shape != sigma.shape or mu.ndim != 1 or len(mu) == 0:
        raise ValueError("mu and sigma must be equal-length 1-D arrays")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
        raise ValueError("mu and sigma must be finite")

    def norm(v):
        rng = v.max() - v.min()
        return np.zeros_like(v) if rng == 0 else (v - v.min()) / rng

    score = (1.0 - rho) * norm(mu) + rho * norm(sigma)
    return int(np.argmax(score))


def optimize(objective_fn, space: SearchSpace, budget: int,
             seed: int = 0, rho: float = 0.8) -> tuple:
    """Run the BO loop; returns (best EvalRecord, history list).

    Three seeded Halton points start the design; afterwards each
    iteration fits the GP to all successful evaluations and evaluates
    the acquisition argmax of the candidate grid. An objective_fn call
    that raises is masked: the point is excluded from the grid and from
    the history, and the loop continues.

    objective_fn(f, A) returns either a float objective or a dict with
    keys `objective` and optionally `tip_defl_deg` / `thrust_mN`.
    """
    if budget < _N_INIT:
        raise ValueError(f"budget must be at least {_N_INIT}")
    grid = space.grid()
    halton = qmc.Halton(d=2, seed=seed)
    u = halton.random(_N_INIT)
    lo, hi = space.f_range
    A_arr = np.array(space.A_set)
    init = []
    for row in u:
        f = lo + row[0] * (hi - lo)
        A = float(A_arr[int(np.minimum(len(A_arr) - 1,
                                       np.floor(row[1] * len(A_arr))))])
        # Snap to the candidate grid so initial points are revisitable
        # by the acquisition bookkeeping.
        k = int(np.argmin(np.abs(grid[:, 0] - f)
                          + 1e6 * (grid[:, 1] != A)))
        init.append(k)

    masked = np.zeros(len(grid), dtype=bool)
    history = []
    trace_id = 0

    def try_eval(k):
        nonlocal trace_id
        f, A = grid[k]
        try:
            res = objective_fn(float(f), float(A))
        except Exception:
            masked[k] = True
            trace_id += 1
            return
        if isinstance(res, dict):
            rec = EvalRecord(f=float(f), A=float(A),
                             objective=float(res["objective"]),
                             tip_defl_deg=float(res.get("tip_defl_deg",
                                                        float("nan"))),
                             thrust_mN=float(res.get("thrust_mN",
                                                     float("nan"))),
                             trace_id=trace_id)
        else:
            rec = EvalRecord(f=float(f), A=float(A), objective=float(res),
                             trace_id=trace_id)
        trace_id += 1
        history.append(rec)

    for k in init:
        try_eval(k)
    while trace_id < budget:
        if history:
            post = gp_fit(history, space)
            mu, sig = gp_predict(post, grid)
        else:
            mu = np.zeros(len(grid))
            sig = np.ones(len(grid))
        live = ~masked
        idx_live = np.flatnonzero(live)
        k = idx_live[acquisition(mu[live], sig[live], rho)]
        try_eval(k)
    if not history:
        raise RuntimeError("every objective evaluation failed")
    best = max(history, key=lambda r: r.objective)
    return best, history


def history_to_csv(history, path) -> None:
    with open(path, "w") as f:
        f.write(HISTORY_HEADER + "\n")
        for i, r in enumerate(history):
            f.write(f"{i},{r.f:.10g},{r.A:.10g},{r.objective:.10g},"
                    f"{r.tip_defl_deg:.10g},{r.thrust_mN:.10g}\n")
