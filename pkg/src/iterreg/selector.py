"""Regularized estimators and the penalized choice of the stopping index.

For a filter ``Q_k`` the estimator is ``f_k = Q_k(A*A) A* y``; in the
singular basis its coefficients are ``Q_k(lam_j) sigma_j c_j`` with
``c_j = <y, psi_j>_n``. The stopping index minimizes

    ||R_k (y - A f_k)||^2 + r sigma^2 (1 + L_k) [Tr(R_k^T R_k) + rho^2(R_k)]

over ``k`` in a finite grid.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, NumericError
from .filters import FilterSpec, filter_tables, q_value, residual_value
from .spectral_core import SingularSystem, as_design, svd

L_RULES = ("log", "constant")
TRACE_COLUMNS = ("k", "residual_sq", "trace", "radius", "penalty", "objective")


@dataclass(frozen=True)
class Estimate:
    """A regularized solution: coefficients in the right singular basis and
    the corresponding parameter vector."""

    coeffs: np.ndarray
    vector: np.ndarray
    k: int
    filter: FilterSpec


def estimate_spectral(system: SingularSystem, y, spec: FilterSpec, k: int) -> Estimate:
    c = system.data_coefficients(y)
    coeffs = q_value(spec, k, system.lambdas) * system.sigmas * c
    return Estimate(coeffs, system.synthesize(coeffs), k, spec)


def landweber_iterate(a, y, tau: float, k: int, f0=None) -> Estimate:
    """Run ``k`` steps of ``f <- f - tau A*(A f - y)``.

    ``tau`` must lie in ``(0, 1/sigma_1^2]``. Starting from zero the result
    coincides with :func:`estimate_spectral` for the Landweber filter.
    """
    a = as_design(a)
    y = np.asarray(y, dtype=float)
    system = svd(a)
    lam1 = system.lambdas[0] if system.rank else 0.0
    if not tau > 0 or tau * lam1 > 1 + 1e-12:
        raise DomainError(f"relaxation tau = {tau} outside (0, 1/sigma_1^2 = {1 / lam1 if lam1 else math.inf}]")
    if k < 0:
        raise DomainError(f"iteration count must be >= 0, got {k}")
    f = np.zeros(a.d) if f0 is None else np.array(f0, dtype=float)
    mat = a.entries
    step = tau / a.n
    for _ in range(k):
        f = f - step * (mat.T @ (mat @ f - y))
    return Estimate(system.coefficients(f), f, k, FilterSpec.landweber(tau, max(k, 1)))


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty constants and the candidate grid of iteration indices.

    ``l_rule="log"`` gives ``L_k = 1 + log(1 + k)``; ``"constant"`` gives
    ``L_k = l_value``.
    """

    r: float = 2.5
    sigma2: float = 1.0
    k_grid: Sequence[int] = (1,)
    l_rule: str = "log"
    l_value: float = 0.0

    def __post_init__(self):
        if not self.r > 2:
            raise ConfigError(f"penalty constant r must exceed 2, got {self.r}")
        if not self.sigma2 >= 0:
            raise ConfigError(f"sigma2 must be nonnegative, got {self.sigma2}")
        if self.l_rule not in L_RULES:
            raise ConfigError(f"unknown L_k rule {self.l_rule!r}")
        if self.l_rule == "constant" and self.l_value < 0:
            raise ConfigError("L_k must be nonnegative")
        grid = np.asarray(self.k_grid, dtype=int).reshape(-1)
        if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 1:
            raise ConfigError("k_grid must be nonempty, positive and strictly increasing")
        grid.setflags(write=False)
        object.__setattr__(self, "k_grid", grid)

    def complexity(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.l_rule == "log":
            return 1.0 + np.log1p(k)
        return np.full(k.shape, float(self.l_value))

    def with_sigma2(self, sigma2: float) -> "PenaltyConfig":
        return PenaltyConfig(self.r, sigma2, self.k_grid, self.l_rule, self.l_value)


def full_grid(k_max: int) -> np.ndarray:
    return np.arange(1, k_max + 1)


def trace_R(system: SingularSystem, spec: FilterSpec, k: int) -> float:
    """``Tr(R_k^T R_k) = (1/n) sum_j Q_k(lam_j)^2 lam_j``."""
    q = q_value(spec, k, system.lambdas)
    return float(np.sum(q**2 * system.lambdas)) / system.n


def radius_R(system: SingularSystem, spec: FilterSpec, k: int) -> float:
    """``rho^2(R_k) = (1/n) max_j Q_k(lam_j)^2 lam_j``."""
    q = q_value(spec, k, system.lambdas)
    return float(np.max(q**2 * system.lambdas)) / system.n


def penalty(pc: PenaltyConfig, trace_term, radius_term, k):
    if not pc.r > 2:
        raise ConfigError(f"penalty constant r must exceed 2, got {pc.r}")
    return pc.r * pc.sigma2 * (1.0 + pc.complexity(k)) * (np.asarray(trace_term) + np.asarray(radius_term))


def filtered_residual_sq(system: SingularSystem, y, spec: FilterSpec, k: int) -> float:
    """``||R_k (y - A f_k)||^2`` at the filter's own estimate ``f_k = R_k y``."""
    c = system.data_coefficients(y)
    lam = system.lambdas
    q = q_value(spec, k, lam)
    r = residual_value(spec, k, lam)
    return float(np.sum(q**2 * lam * r**2 * c**2))


@dataclass
class SelectionTrace:
    """Per-``k`` terms of the selection objective and the chosen index."""

    k: np.ndarray
    residual_sq: np.ndarray
    trace: np.ndarray
    radius: np.ndarray
    penalty: np.ndarray
    objective: np.ndarray
    k_hat: int
    sigma2: float = 1.0
    flagged: dict = field(default_factory=dict)

    @property
    def index(self) -> int:
        return int(np.searchsorted(self.k, self.k_hat))

    def rows(self):
        for i in range(self.k.size):
            yield (int(self.k[i]), float(self.residual_sq[i]), float(self.trace[i]),
                   float(self.radius[i]), float(self.penalty[i]), float(self.objective[i]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in self.rows():
            w.writerow([row[0]] + [repr(v) for v in row[1:]])
        return buf.getvalue()

    def summary(self) -> dict:
        i = self.index
        return {
            "k_hat": self.k_hat,
            "objective": float(self.objective[i]),
            "residual_sq": float(self.residual_sq[i]),
            "penalty": float(self.penalty[i]),
            "sigma2": self.sigma2,
            "k_min": int(self.k[0]),
            "k_max": int(self.k[-1]),
            "flagged_eigenvalues": {str(k): v for k, v in self.flagged.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


class SelectionPlan:
    """Precomputed filter tables for repeated selection on one system.

    Everything that does not depend on the data (filter values, trace,
    radius and penalty per ``k``) is evaluated once; :meth:`select` then
    costs one matrix-vector product per dataset.
    """

    def __init__(self, system: SingularSystem, spec: FilterSpec, pc: PenaltyConfig):
        if pc.k_grid[-1] > spec.k_max:
            raise ConfigError(f"k_grid reaches {pc.k_grid[-1]} beyond k_max = {spec.k_max}")
        self.system = system
        self.spec = spec
        self.pc = pc
        lam = system.lambdas
        self.q, self.r = filter_tables(spec, pc.k_grid, lam)
        gain = self.q**2 * lam
        self.trace = gain.sum(axis=1) / system.n
        self.radius = gain.max(axis=1) / system.n
        self.residual_weights = gain * self.r**2
        self.gain = self.q * system.sigmas
        self.flagged = {}
        if spec.kind == "multistep":
            for k in pc.k_grid:
                t1 = spec.taus(int(k))[0]
                count = int(np.sum(lam >= t1))
                if count:
                    self.flagged[int(k)] = count

    def penalties(self, sigma2: Optional[float] = None) -> np.ndarray:
        pc = self.pc if sigma2 is None else self.pc.with_sigma2(sigma2)
        return penalty(pc, self.trace, self.radius, pc.k_grid)

    def select(self, c, sigma2: Optional[float] = None) -> SelectionTrace:
        """Select ``k`` from data coefficients ``c_j = <y, psi_j>_n``."""
        c = np.asarray(c, dtype=float)
        residual = self.residual_weights @ (c * c)
        pen = self.penalties(sigma2)
        objective = residual + pen
        bad = ~np.isfinite(objective)
        if np.any(bad):
            k_bad = int(self.pc.k_grid[np.argmax(bad)])
            raise NumericError(f"non-finite selection objective at k = {k_bad}")
        i = int(np.argmin(objective))
        return SelectionTrace(
            k=self.pc.k_grid.copy(),
            residual_sq=residual,
            trace=self.trace.copy(),
            radius=self.radius.copy(),
            penalty=pen,
            objective=objective,
            k_hat=int(self.pc.k_grid[i]),
            sigma2=self.pc.sigma2 if sigma2 is None else sigma2,
            flagged=dict(self.flagged),
        )

    def estimates(self, c) -> np.ndarray:
        """Coefficients of every candidate estimate, shape ``(len(k_grid), rank)``."""
        return self.gain * np.asarray(c, dtype=float)


def select_k(system: SingularSystem, y, spec: FilterSpec, pc: PenaltyConfig) -> SelectionTrace:
    return SelectionPlan(system, spec, pc).select(system.data_coefficients(y))


def estimate_noise_variance(system: SingularSystem, y) -> float:
    """Plug-in ``sigma^2`` from the upper half of the index range.

    Those coefficients have the smallest singular values, so
    ``E c_j^2 ~ sigma^2 / n`` there; the estimate is ``n * mean(c_j^2)``.
    """
    c = system.data_coefficients(y)
    half = c[system.rank // 2:]
    return float(system.n * np.mean(half**2))
