"""Risk-minimizing long-only portfolio weights on the probability simplex.

The objective is the signed sample risk of the portfolio return series,
which is convex in the weights for every coherent weight family (positive
homogeneity plus subadditivity). Minimization runs a projected subgradient
method with diminishing steps from several starts; the subgradient uses the
order-statistic weights of the sample estimator, averaging within blocks of
tied portfolio returns so the choice of sorting permutation cannot matter.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateSeries, DegenerateWeights, DomainError,
                     ShapeMismatch)
from .families import _tau, j_value, omega
from .sample_risk import risk_sample

DEFAULT_STARTS = 20
DEFAULT_ITERATIONS = 2000


@dataclass
class ReturnsMatrix:
    """Daily log returns, one column per asset."""
    R: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        if self.R.ndim != 2:
            raise ShapeMismatch("returns must be a days-by-assets matrix")
        if self.R.shape[0] < 2:
            raise DomainError("need at least two days of returns")
        if self.R.shape[1] < 1:
            raise DomainError("need at least one asset")
        if not np.all(np.isfinite(self.R)):
            raise DomainError("returns must be finite")
        if self.labels is None:
            self.labels = tuple(f"asset{i + 1}" for i in range(self.d))
        else:
            self.labels = tuple(str(name) for name in self.labels)
            if len(self.labels) != self.d:
                raise ShapeMismatch("need one label per asset")

    @property
    def days(self):
        return self.R.shape[0]

    @property
    def d(self):
        return self.R.shape[1]


@dataclass
class PortfolioWeights:
    """Long-only weights summing to one; may carry the achieved risk."""
    alpha: np.ndarray
    risk: float = None
    diagnostics: dict = None

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.ndim != 1 or self.alpha.size < 1:
            raise ShapeMismatch("alpha must be a non-empty vector")
        if not np.all(np.isfinite(self.alpha)):
            raise DomainError("weights must be finite")
        if float(self.alpha.min()) < -1e-12:
            raise DomainError("weights must be non-negative")
        self.alpha = np.maximum(self.alpha, 0.0)
        if abs(float(self.alpha.sum()) - 1.0) > 1e-10:
            raise DomainError("weights must sum to one")

    def to_json(self, labels=None):
        if labels is None:
            labels = tuple(f"asset{i + 1}" for i in range(self.alpha.size))
        return {
            "alpha": {name: float(a) for name, a in zip(labels, self.alpha)},
            "risk": None if self.risk is None else float(self.risk),
        }


def portfolio_risk(returns, weights, family, tau, mode="normalized"):
    """Signed sample risk of the weighted return series."""
    return risk_sample(returns.R @ weights.alpha, family, tau, mode=mode)


def project_simplex(v):
    """Euclidean projection onto the probability simplex (sort-threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    ranks = np.arange(1, v.size + 1)
    support = np.flatnonzero(u - cumulative / ranks > 0.0)[-1]
    theta = cumulative[support] / (support + 1.0)
    return np.maximum(v - theta, 0.0)


def _order_weights(family, tau, n, mode):
    """Weight of each ascending order statistic in the sample estimator."""
    t = _tau(tau)
    if family.kind == "qr-dirac":
        w = np.zeros(n)
        position = t * (n + 1)
        if position <= 1.0:
            w[0] = 1.0
        elif position >= n:
            w[-1] = 1.0
        else:
            k = int(math.floor(position))
            w[k - 1] = 1.0 - (position - k)
            w[k] = position - k
        return w
    w = j_value(family, t, np.arange(1, n + 1) / (n + 1.0))
    total = float(w.sum())
    if total <= 0.0:
        raise DegenerateWeights(
            f"estimator weights sum to {total}; too few days for this tau")
    return w / total if mode == "normalized" else w / n


def _tie_averaged_rows(series, order, w):
    """Per-row estimator weights, averaged over blocks of tied values."""
    sorted_vals = series[order]
    changes = np.diff(sorted_vals) != 0.0
    if changes.all():
        return w
    block_starts = np.concatenate(([0], np.flatnonzero(changes) + 1))
    sums = np.add.reduceat(w, block_starts)
    counts = np.diff(np.concatenate((block_starts, [w.size])))
    return np.repeat(sums / counts, counts)


def optimize_weights(returns, family, tau, starts=DEFAULT_STARTS,
                     iterations=DEFAULT_ITERATIONS, seed=0,
                     mode="normalized"):
    """Projected subgradient minimization of the portfolio risk.

    Runs from every vertex plus seeded Dirichlet draws (`starts` total, or
    d if larger), takes diminishing steps sqrt(2/(t+1)) along the normalized
    subgradient, and keeps the best iterate ever visited. The winner is the
    lexicographically first (objective, start index) pair, so reruns with
    the same seed reproduce the same weights.
    """
    d = returns.d
    sign = omega(tau)
    if returns.days <= d:
        warnings.warn(
            f"only {returns.days} days for {d} assets; the sample risk "
            "surface is weakly determined", stacklevel=2)
    if d == 1:
        best = PortfolioWeights(np.ones(1))
        best.risk = portfolio_risk(returns, best, family, tau, mode=mode)
        best.diagnostics = {"starts": 1, "improved": False,
                            "start_objectives": [best.risk]}
        return best

    R = returns.R
    n = returns.days
    w = _order_weights(family, tau, n, mode)

    def objective(alpha):
        series = R @ alpha
        order = np.argsort(series, kind="stable")
        return sign * float(series[order] @ w)

    def subgradient(alpha):
        series = R @ alpha
        order = np.argsort(series, kind="stable")
        rows = _tie_averaged_rows(series, order, w)
        return sign * (rows @ R[order])

    rng = np.random.default_rng(seed)
    points = [np.eye(d)[k] for k in range(d)]
    while len(points) < max(starts, d):
        points.append(rng.dirichlet(np.ones(d)))

    start_objectives = []
    best_alpha, best_value, best_start = None, math.inf, -1
    improved = False
    for index, start in enumerate(points):
        alpha = project_simplex(start)
        value = objective(alpha)
        start_objectives.append(value)
        run_alpha, run_value = alpha, value
        for t in range(iterations):
            g = subgradient(alpha)
            norm = float(np.linalg.norm(g))
            if norm == 0.0:
                break
            alpha = project_simplex(alpha - math.sqrt(2.0 / (t + 1.0))
                                    * g / norm)
            value = objective(alpha)
            if value < run_value:
                run_alpha, run_value = alpha, value
        if run_value < start_objectives[-1]:
            improved = True
        if best_alpha is None or (run_value, index) < (best_value, best_start):
            best_alpha, best_value, best_start = run_alpha, run_value, index

    out = PortfolioWeights(best_alpha)
    out.risk = portfolio_risk(returns, out, family, tau, mode=mode)
    out.diagnostics = {
        "starts": len(points),
        "improved": improved,
        "best_start": best_start,
        "start_objectives": start_objectives,
    }
    return out


def evaluate(returns_test, weights, bench):
    """Annualized Sharpe ratio and percentage of days beating the benchmark."""
    bench = np.asarray(bench, dtype=float)
    if bench.shape != (returns_test.days,):
        raise ShapeMismatch("benchmark must have one return per test day")
    series = returns_test.R @ weights.alpha
    spread = float(np.std(series, ddof=1))
    if spread == 0.0:
        raise DegenerateSeries("portfolio returns have zero variance")
    sharpe = (float(series.mean()) * 252.0) / (spread * math.sqrt(252.0))
    beat = 100.0 * float(np.mean(series > bench))
    return {"SR": sharpe, "PD": beat}
