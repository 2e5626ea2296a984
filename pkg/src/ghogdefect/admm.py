"""Low-rank + sparse decomposition with a log-det rank surrogate, solved by ADMM."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

logger = logging.getLogger(__name__)


class NonFiniteError(FloatingPointError):
    """An iterate or input contained NaN or inf."""


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings; ``None`` entries are derived from the input matrix.

    With ``s1`` the largest singular value of F and ``n = max(d, K)``:

    * ``logdet_offset`` (xi) defaults to ``0.01 * s1``;
    * ``sparsity_weight`` defaults to ``sparsity_scale / (xi * sqrt(n))``;
    * ``penalty`` (initial beta) defaults to ``penalty_scale / (s1 * xi)``.

    Near zero the log-det term behaves like ``||L||_* / xi``, so the last two
    are the usual robust-PCA choices expressed in units of xi. The penalty
    grows by ``penalty_growth`` each cycle up to ``max_penalty_ratio`` times
    its initial value; ``penalty_growth=1`` keeps it fixed.
    """

    sparsity_weight: float | None = None
    logdet_offset: float | None = None
    penalty: float | None = None
    tol: float = 1e-7
    max_iter: int = 500
    change_tol: float | None = 1e-6
    sparsity_scale: float = 0.3
    penalty_scale: float = 3.0
    penalty_growth: float = 1.2
    max_penalty_ratio: float = 1e8

    def __post_init__(self):
        for name in ("sparsity_weight", "logdet_offset", "penalty", "sparsity_scale",
                     "penalty_scale", "max_penalty_ratio"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v}")
        if not (np.isfinite(self.penalty_growth) and self.penalty_growth >= 1):
            raise ValueError(f"penalty_growth must be >= 1, got {self.penalty_growth}")
        if self.change_tol is not None and not self.change_tol > 0:
            raise ValueError(f"change_tol must be positive or None, got {self.change_tol}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be an integer >= 1, got {self.max_iter}")

    def resolve(self, F: np.ndarray) -> "SolverConfig":
        """Fill data-dependent defaults from ``F``."""
        d, K = F.shape
        s1 = float(np.linalg.norm(F, 2)) if F.size else 0.0
        if s1 == 0.0:
            s1 = 1.0
        xi = self.logdet_offset or 0.01 * s1
        return replace(
            self,
            logdet_offset=xi,
            sparsity_weight=self.sparsity_weight
            or self.sparsity_scale / (xi * np.sqrt(max(d, K))),
            penalty=self.penalty or self.penalty_scale / (s1 * xi),
        )


@dataclass
class Decomposition:
    L: np.ndarray
    S: np.ndarray
    Z: np.ndarray
    iters_run: int
    final_residual: float
    converged: bool
    config: SolverConfig
    objective_trace: list[float] = field(default_factory=list)
    residual_trace: list[float] = field(default_factory=list)


def soft_threshold(x, t):
    """Elementwise shrinkage sign(x) * max(|x| - t, 0)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return float(out) if out.ndim == 0 else out


def svt_weights(singular_values: np.ndarray, xi: float) -> np.ndarray:
    """Reweighting 1/(sigma_j + xi); ascending when sigma is sorted descending."""
    return 1.0 / (np.asarray(singular_values, dtype=np.float64) + xi)


def weighted_svt(M: np.ndarray, tau: float, weights) -> np.ndarray:
    """Shrink singular value j of ``M`` by ``tau * weights[j]``, clamping at zero."""
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise NonFiniteError("weighted_svt input contains non-finite entries")
    weights = np.broadcast_to(np.asarray(weights, dtype=np.float64), (min(M.shape),))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s_new = np.maximum(s - tau * weights, 0.0)
    keep = s_new > 0
    return (U[:, keep] * s_new[keep]) @ Vt[keep]


def logdet_objective(L: np.ndarray, xi: float) -> float:
    """Sum over singular values of log(sigma_j + xi)."""
    if not xi > 0:
        raise ValueError("xi must be positive")
    L = np.asarray(L, dtype=np.float64)
    if not np.all(np.isfinite(L)):
        raise NonFiniteError("logdet_objective input contains non-finite entries")
    s = np.linalg.svd(L, compute_uv=False)
    return float(np.sum(np.log(s + xi)))


def augmented_lagrangian(L, S, Z, F, cfg: SolverConfig) -> float:
    """Value of the augmented Lagrangian at (L, S, Z); ``cfg`` must be resolved."""
    R = L + S - F
    return (
        logdet_objective(L, cfg.logdet_offset)
        + cfg.sparsity_weight * np.abs(S).sum()
        + 0.5 * cfg.penalty * np.sum(R * R)
        - np.sum(Z * R)
    )


def solve(F: np.ndarray, cfg: SolverConfig | None = None, callback=None) -> Decomposition:
    """Split ``F`` into low-rank ``L`` plus sparse ``S`` with multiplier ``Z``.

    Each cycle takes a weighted singular value thresholding step on ``L``
    (weights from the previous ``L``'s spectrum; ``L`` starts at zero), a
    soft-threshold step on ``S``, then a dual step on ``Z``. Stops once
    ``||L + S - F||_F / ||F||_F`` drops below ``cfg.tol`` and, unless
    ``cfg.change_tol`` is None, the last step moved neither ``L`` nor ``S``
    by more than ``cfg.change_tol * ||F||_F``. The second test keeps a
    feasible but non-stationary split from ending the run early.

    ``objective_trace[k]`` is the augmented Lagrangian at the end of cycle
    k, evaluated with that cycle's penalty. Hitting ``max_iter`` is not an
    error: the result has ``converged=False``.

    ``callback(iteration, residual, objective)`` is called after each cycle.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError(f"F must be a 2-D matrix, got shape {F.shape}")
    if not np.all(np.isfinite(F)):
        raise NonFiniteError("F contains non-finite entries")
    cfg = (cfg or SolverConfig()).resolve(F)
    xi, lam = cfg.logdet_offset, cfg.sparsity_weight
    beta = cfg.penalty
    beta_max = cfg.penalty * cfg.max_penalty_ratio
    norm_f = max(float(np.linalg.norm(F)), 1e-12)

    L = np.zeros_like(F)
    S = np.zeros_like(F)
    Z = np.zeros_like(F)
    weights = svt_weights(np.zeros(min(F.shape)), xi)
    objective, residuals = [], []
    residual = np.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        L_prev, S_prev = L, S
        L = weighted_svt(F - S + Z / beta, 1.0 / beta, weights)
        S = soft_threshold(F - L + Z / beta, lam / beta)
        R = L + S - F
        Z = Z - beta * R
        if not (np.all(np.isfinite(L)) and np.all(np.isfinite(S)) and np.all(np.isfinite(Z))):
            raise NonFiniteError(f"non-finite iterate at iteration {it}")
        sv = np.linalg.svd(L, compute_uv=False)
        residual = float(np.linalg.norm(R)) / norm_f
        objective.append(
            float(np.sum(np.log(sv + xi)) + lam * np.abs(S).sum()
                  + 0.5 * beta * np.sum(R * R) - np.sum(Z * R))
        )
        residuals.append(residual)
        if callback is not None:
            callback(it, residual, objective[-1])
        if residual < cfg.tol:
            change = max(np.linalg.norm(L - L_prev), np.linalg.norm(S - S_prev)) / norm_f
            if cfg.change_tol is None or change < cfg.change_tol:
                converged = True
                break
        weights = svt_weights(sv, xi)
        beta = min(beta * cfg.penalty_growth, beta_max)
    if not converged:
        logger.warning(
            "ADMM stopped after %d iterations with relative residual %.3g", it, residual
        )
    return Decomposition(
        L=L, S=S, Z=Z, iters_run=it, final_residual=residual, converged=converged,
        config=cfg, objective_trace=objective, residual_trace=residuals,
    )
