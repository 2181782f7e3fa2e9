"""
Budget model: cost functions, the budget-saving term s(x) = lambda (k - c(x)),
feasibility, proximal operators of -eta*s over P and Euclidean projection onto P.

P = {x : 0 <= x <= upper, c(x) <= k} with c the 1-norm or the 2-norm.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from src.cim_core.errors import ConfigError

logger = logging.getLogger(__name__)

COST_KINDS = ("one_norm", "two_norm")
FEASIBILITY_TOL = 1e-9
_ROOT_XTOL = 1e-15


@dataclass(frozen=True, eq=False)
class BudgetModel:
    cost_kind: str
    k: float
    lam: float
    d: int
    upper: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.cost_kind not in COST_KINDS:
            raise ConfigError(f"Unknown cost kind: {self.cost_kind}")
        if not self.k > 0:
            raise ConfigError(f"budget k must be positive, got {self.k}")
        if self.lam < 0:
            raise ConfigError(f"balance lambda must be non-negative, got {self.lam}")
        upper = np.full(self.d, math.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if upper.shape != (self.d,):
            raise ConfigError(f"upper caps must have length d={self.d}")
        object.__setattr__(self, "upper", upper)

    @property
    def lipschitz(self) -> float:
        """2-norm Lipschitz constant L_c of the cost."""
        return math.sqrt(self.d) if self.cost_kind == "one_norm" else 1.0

    @property
    def capped(self) -> bool:
        return bool(np.isfinite(self.upper).any())

    def with_budget(self, k: float, lam: float) -> "BudgetModel":
        return BudgetModel(self.cost_kind, k, lam, self.d, self.upper)


def cost(model: BudgetModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if model.cost_kind == "one_norm":
        return float(np.abs(x).sum())
    return float(np.linalg.norm(x))


def s_value(model: BudgetModel, x: np.ndarray) -> float:
    return model.lam * (model.k - cost(model, x))


def is_feasible(model: BudgetModel, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d,) or not np.all(np.isfinite(x)):
        return False
    return bool(np.all(x >= -tol) and np.all(x <= model.upper + tol) and cost(model, x) <= model.k + tol)


def cost_subgradient(model: BudgetModel, x: np.ndarray) -> np.ndarray:
    """A subgradient of c at x in P (x >= 0)."""
    x = np.asarray(x, dtype=float)
    if model.cost_kind == "one_norm":
        return np.ones(model.d)
    norm = np.linalg.norm(x)
    return x / norm if norm > 0 else np.zeros(model.d)


def _capped_waterfill(a: np.ndarray, upper: np.ndarray, budget: float) -> np.ndarray:
    """
    clip(a - mu, 0, upper) for the smallest mu >= 0 whose sum is <= budget.

    phi(mu) = sum clip(a_i - mu, 0, u_i) is piecewise linear and nonincreasing;
    component i decreases on (a_i - u_i, a_i). Breakpoints are swept in sorted
    order until phi reaches the budget.
    """
    y = np.clip(a, 0.0, upper)
    phi = float(y.sum())
    if phi <= budget:
        return y

    low = a - upper
    slope = int(np.count_nonzero((low <= 0.0) & (a > 0.0)))
    starts = low[low > 0.0]
    ends = a[a > 0.0]
    positions = np.concatenate([starts, ends])
    deltas = np.concatenate([np.ones(starts.size, dtype=np.int64), -np.ones(ends.size, dtype=np.int64)])
    order = np.argsort(positions, kind="stable")

    mu = 0.0
    for pos, delta in zip(positions[order].tolist(), deltas[order].tolist()):
        next_phi = phi - slope * (pos - mu)
        if next_phi <= budget:
            break
        phi, mu = next_phi, pos
        slope += delta

    mu_star = mu + (phi - budget) / slope
    return np.clip(a - mu_star, 0.0, upper)


def _scaled_clip_norm_solve(z: np.ndarray, upper: np.ndarray, tau: float, budget: float) -> np.ndarray:
    """
    argmin over {0 <= y <= upper, ||y||_2 <= budget} of tau*||y||_2 + 0.5*||z - y||^2.

    The minimiser is clip(z/s, 0, upper) for a scalar s >= 1: first with the
    ball inactive, s solves (s-1)*||y(s)|| = tau; if that y leaves the ball,
    s instead solves ||y(s)|| = budget.
    """
    z_pos = np.maximum(z, 0.0)
    z_norm = float(np.linalg.norm(z_pos))
    if z_norm == 0.0 or z_norm <= tau:
        return np.zeros_like(z)

    def clipped(s: float) -> np.ndarray:
        return np.clip(z_pos / s, 0.0, upper)

    with np.errstate(divide="ignore"):
        cap_scale = float(np.max(np.where(z_pos > 0, z_pos / upper, 0.0)))
    s_free = max(cap_scale, 1.0)

    s = 1.0
    if tau > 0.0:
        s_hi = 2.0 * max(s_free, z_norm / (z_norm - tau)) + 1.0
        s = brentq(lambda t: (t - 1.0) * np.linalg.norm(clipped(t)) - tau, 1.0, s_hi, xtol=_ROOT_XTOL)

    y = clipped(s)
    if np.linalg.norm(y) <= budget:
        return y

    s_hi = max(2.0 * s, 2.0 * z_norm / budget)
    s_ball = brentq(lambda t: np.linalg.norm(clipped(t)) - budget, s, s_hi, xtol=_ROOT_XTOL)
    return clipped(s_ball)


def prox_one_norm(model: BudgetModel, z: np.ndarray, eta: float) -> np.ndarray:
    """argmin over P of eta*lambda*||y||_1 + 0.5*||z - y||^2."""
    z = np.asarray(z, dtype=float)
    return _capped_waterfill(z - eta * model.lam, model.upper, model.k)


def prox_two_norm(model: BudgetModel, z: np.ndarray, eta: float) -> np.ndarray:
    """argmin over P of eta*lambda*||y||_2 + 0.5*||z - y||^2."""
    z = np.asarray(z, dtype=float)
    tau = eta * model.lam
    if not model.capped:
        z_pos = np.maximum(z, 0.0)
        norm = float(np.linalg.norm(z_pos))
        if norm == 0.0:
            return np.zeros_like(z)
        t = min(model.k, max(0.0, norm - tau))
        return t * (z_pos / norm)
    return _scaled_clip_norm_solve(z, model.upper, tau, model.k)


def prox(model: BudgetModel, z: np.ndarray, eta: float) -> np.ndarray:
    """Proximal step of -eta*s restricted to P."""
    if eta <= 0:
        raise ValueError(f"prox step must be positive, got {eta}")
    if model.cost_kind == "one_norm":
        return prox_one_norm(model, z, eta)
    return prox_two_norm(model, z, eta)


def project(model: BudgetModel, z: np.ndarray) -> np.ndarray:
    """Euclidean projection onto P."""
    z = np.asarray(z, dtype=float)
    if model.cost_kind == "one_norm":
        return _capped_waterfill(z, model.upper, model.k)
    if not model.capped:
        y = np.maximum(z, 0.0)
        norm = float(np.linalg.norm(y))
        return y if norm <= model.k else y * (model.k / norm)
    return _scaled_clip_norm_solve(z, model.upper, 0.0, model.k)


def diameter(model: BudgetModel) -> float:
    """Upper bound on the 2-norm diameter of P."""
    return float(min(math.sqrt(2.0) * model.k, np.linalg.norm(model.upper)))
