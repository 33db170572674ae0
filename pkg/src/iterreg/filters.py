"""Iterative spectral filters ``Q_k`` and their residual polynomials.

Two families are supported:

* Landweber with relaxation ``tau``: ``r_k(lam) = (1 - tau lam)^k``.
* Multistep processes with per-step parameters ``t_1k <= ... <= t_kk``:
  ``r_k(lam) = prod_i (1 - lam / t_ik)``.

``Q_k(lam) = (1 - r_k(lam)) / lam`` with the analytic limit at ``lam = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError

DIRECT_SUM_MAX_K = 64
K_MAX_CAP = 10_000
FILTER_KINDS = ("landweber", "multistep")
SCHEDULE_RULES = ("constant", "geometric", "explicit")


class IterationIndexError(DomainError, IndexError):
    """Iteration index outside ``1..k_max``."""


@dataclass(frozen=True)
class Schedule:
    """Step parameters ``t_ik`` of a multistep process, as a function of ``k``.

    ``constant``: every ``t_ik`` equals ``top``.
    ``geometric``: ``t_ik = top * ratio^((k - i) / (k - 1))``, spanning
    ``[ratio * top, top]``.
    ``explicit``: ``table[k - 1]`` lists ``t_1k..t_kk``.
    """

    rule: str
    top: float = 1.0
    ratio: float = 1.0
    table: Optional[tuple] = None

    def __post_init__(self):
        if self.rule not in SCHEDULE_RULES:
            raise DomainError(f"unknown schedule rule {self.rule!r}")
        if self.rule == "explicit":
            if not self.table:
                raise DomainError("explicit schedule needs a table")
            object.__setattr__(self, "table", tuple(tuple(float(t) for t in row) for row in self.table))
        elif not self.top > 0:
            raise DomainError(f"schedule top must be positive, got {self.top}")
        if self.rule == "geometric" and not 0 < self.ratio <= 1:
            raise DomainError(f"geometric ratio must lie in (0, 1], got {self.ratio}")

    @property
    def k_limit(self) -> Optional[int]:
        return len(self.table) if self.rule == "explicit" else None

    def taus(self, k: int) -> np.ndarray:
        if self.rule == "constant":
            return np.full(k, self.top)
        if self.rule == "geometric":
            if k == 1:
                return np.array([self.top])
            i = np.arange(1, k + 1)
            return self.top * self.ratio ** ((k - i) / (k - 1))
        row = np.asarray(self.table[k - 1], dtype=float)
        if row.size != k:
            raise DomainError(f"schedule row {k} has {row.size} entries, expected {k}")
        return row

    def validate(self, k_max: int, lambda_max: Optional[float] = None):
        """Check ``0 < t_1k <= ... <= t_kk (<= lambda_max)`` for every ``k``."""
        for k in range(1, k_max + 1):
            t = self.taus(k)
            if np.any(t <= 0) or np.any(np.diff(t) < 0):
                raise DomainError(f"schedule row {k} is not positive and nondecreasing")
            if lambda_max is not None and t[-1] > lambda_max * (1 + 1e-12):
                raise DomainError(f"schedule row {k} exceeds lambda_1 = {lambda_max}")
            if self.rule != "explicit":
                break

    def to_dict(self) -> dict:
        out = {"rule": self.rule}
        if self.rule == "explicit":
            out["table"] = [list(row) for row in self.table]
        else:
            out["top"] = self.top
            if self.rule == "geometric":
                out["ratio"] = self.ratio
        return out


@dataclass(frozen=True)
class FilterSpec:
    """A filter family indexed by the iteration count ``k = 1..k_max``."""

    kind: str
    k_max: int
    tau: Optional[float] = None
    schedule: Optional[Schedule] = None

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise DomainError(f"unknown filter kind {self.kind!r}")
        if self.k_max < 1:
            raise DomainError(f"k_max must be >= 1, got {self.k_max}")
        if self.kind == "landweber":
            if self.tau is None or not self.tau > 0:
                raise DomainError(f"landweber relaxation must be positive, got {self.tau}")
        else:
            if self.schedule is None:
                raise DomainError("multistep filter needs a schedule")
            limit = self.schedule.k_limit
            if limit is not None and limit < self.k_max:
                raise DomainError(f"explicit schedule covers k <= {limit} < k_max = {self.k_max}")
            self.schedule.validate(self.k_max)

    @classmethod
    def landweber(cls, tau: float, k_max: int) -> "FilterSpec":
        return cls("landweber", k_max, tau=tau)

    @classmethod
    def multistep(cls, schedule: Schedule, k_max: int) -> "FilterSpec":
        return cls("multistep", k_max, schedule=schedule)

    @property
    def is_constant_multistep(self) -> bool:
        return self.kind == "multistep" and self.schedule.rule == "constant"

    def check_admissible(self, lambda_max: float):
        """Raise unless the filter is admissible for spectral radius ``lambda_max``."""
        if self.kind == "landweber":
            if self.tau * lambda_max > 1 + 1e-12:
                raise DomainError(f"tau * lambda_1 = {self.tau * lambda_max:.6g} exceeds 1")
        else:
            self.schedule.validate(self.k_max, lambda_max)

    def taus(self, k: int) -> np.ndarray:
        self._check_k(k)
        return self.schedule.taus(k)

    def _check_k(self, k: int):
        if not 1 <= k <= self.k_max:
            raise IterationIndexError(f"iteration index {k} outside 1..{self.k_max}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "k_max": self.k_max}
        if self.kind == "landweber":
            out["tau"] = self.tau
        else:
            out["schedule"] = self.schedule.to_dict()
        return out


def default_tau(lambda_max: float) -> float:
    """Relaxation ``1 / (2 lambda_1)``."""
    return 1.0 / (2.0 * lambda_max)


def default_k_max(n: int) -> int:
    return int(min(math.ceil(n), K_MAX_CAP))


def _lams(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise DomainError("eigenvalues must be finite and nonnegative")
    return lam


def _landweber_q(tau: float, k: int, lam: np.ndarray) -> np.ndarray:
    x = tau * lam
    if k <= DIRECT_SUM_MAX_K:
        powers = (1.0 - x)[..., None] ** np.arange(k)
        return tau * powers.sum(axis=-1)
    return _landweber_q_closed(tau, k, lam)


def _landweber_q_closed(tau: float, k: int, lam: np.ndarray) -> np.ndarray:
    x = tau * lam
    out = np.empty_like(lam)
    zero = lam == 0
    small = (x < 1) & ~zero
    out[zero] = tau * k
    # -expm1(k log1p(-x)) = 1 - (1 - x)^k without cancellation
    out[small] = -np.expm1(k * np.log1p(-x[small])) / lam[small]
    big = ~(small | zero)
    out[big] = (1.0 - (1.0 - x[big]) ** k) / lam[big]
    return out


def _landweber_r(tau: float, k: int, lam: np.ndarray) -> np.ndarray:
    x = tau * lam
    out = np.empty_like(lam)
    small = x < 1
    out[small] = np.exp(k * np.log1p(-x[small]))
    out[~small] = (1.0 - x[~small]) ** k
    return out


def _multistep_q(taus: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # Q = sum_i t_i^-1 prod_{l<i} (1 - lam/t_l): telescoped 1 - prod, exact at 0
    factors = 1.0 - lam[..., None] / taus
    lead = np.cumprod(factors, axis=-1)
    lead = np.concatenate([np.ones(lam.shape + (1,)), lead[..., :-1]], axis=-1)
    return (lead / taus).sum(axis=-1)


def _multistep_r(taus: np.ndarray, lam: np.ndarray) -> np.ndarray:
    return np.prod(1.0 - lam[..., None] / taus, axis=-1)


def q_value(spec: FilterSpec, k: int, lam):
    """Filter value ``Q_k(lam)``; vectorized over ``lam``."""
    spec._check_k(k)
    arr = _lams(lam)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if spec.kind == "landweber":
        out = _landweber_q(spec.tau, k, arr)
    elif spec.is_constant_multistep:
        out = _landweber_q(1.0 / spec.schedule.top, k, arr)
    else:
        out = _multistep_q(spec.taus(k), arr)
    return float(out[0]) if scalar else out


def residual_value(spec: FilterSpec, k: int, lam):
    """Residual polynomial ``r_k(lam) = 1 - lam Q_k(lam)``."""
    spec._check_k(k)
    arr = _lams(lam)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if spec.kind == "landweber":
        out = _landweber_r(spec.tau, k, arr)
    elif spec.is_constant_multistep:
        out = _landweber_r(1.0 / spec.schedule.top, k, arr)
    else:
        out = _multistep_r(spec.taus(k), arr)
    return float(out[0]) if scalar else out


def sup_q(spec: FilterSpec, k: int) -> float:
    """``sup |Q_k| = Q_k(0)`` on the admissible spectrum."""
    return q_value(spec, k, 0.0)


def filter_tables(spec: FilterSpec, ks: Sequence[int], lam) -> tuple[np.ndarray, np.ndarray]:
    """``Q_k(lam_j)`` and ``r_k(lam_j)`` for every ``k`` in ``ks``; shapes ``(len(ks), len(lam))``."""
    lam = np.atleast_1d(_lams(lam))
    ks = np.asarray(ks, dtype=int)
    if ks.size and (ks.min() < 1 or ks.max() > spec.k_max):
        raise IterationIndexError(f"iteration indices must lie in 1..{spec.k_max}")
    if spec.kind == "landweber" or spec.is_constant_multistep:
        tau = spec.tau if spec.kind == "landweber" else 1.0 / spec.schedule.top
        x = tau * lam
        ok = x < 1
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(ok, np.log1p(-np.where(ok, x, 0.0)), 0.0)
            r = np.where(ok, np.exp(ks[:, None] * logs), (1.0 - x) ** ks[:, None])
            lq = np.where(ok, -np.expm1(ks[:, None] * logs), 1.0 - r)
            q = np.where(lam > 0, lq / np.where(lam > 0, lam, 1.0), tau * ks[:, None].astype(float))
        return q, r
    q = np.empty((ks.size, lam.size))
    r = np.empty((ks.size, lam.size))
    for row, k in enumerate(ks):
        t = spec.taus(int(k))
        q[row] = _multistep_q(t, lam)
        r[row] = _multistep_r(t, lam)
    return q, r


def unstable_eigenvalues(spec: FilterSpec, k: int, lam) -> np.ndarray:
    """Mask of eigenvalues outside the analysed range ``[0, t_1k)`` of a multistep filter."""
    lam = np.atleast_1d(_lams(lam))
    if spec.kind == "landweber":
        return spec.tau * lam > 1
    return lam >= spec.taus(k)[0]


@dataclass(frozen=True)
class Qualification:
    """Upper bounds ``omega_mu(k) >= sup_lam lam^mu |r_k(lam)|``.

    ``exponential_form`` is the Landweber estimate ``(mu/(tau e))^mu k^-mu``;
    ``product_form`` is ``mu^mu (mu+1)^-1 Q_k(0)^-mu``. ``value`` is the
    smaller of the two for Landweber and the product form for multistep
    filters.
    """

    mu: float
    spec: FilterSpec = field(repr=False)

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"mu must be positive, got {self.mu}")

    def exponential_form(self, k: int) -> Optional[float]:
        if self.spec.kind != "landweber":
            return None
        return (self.mu / (self.spec.tau * math.e)) ** self.mu * k ** (-self.mu)

    def product_form(self, k: int) -> float:
        return self.mu**self.mu / (self.mu + 1) * sup_q(self.spec, k) ** (-self.mu)

    def value(self, k: int) -> float:
        forms = [self.product_form(k)]
        e = self.exponential_form(k)
        if e is not None:
            forms.append(e)
        return min(forms)

    def __call__(self, k: int) -> float:
        return self.value(k)


def qualification_bound(spec: FilterSpec, mu: float, k: int) -> float:
    """Tightest available ``omega_mu(k)`` for the filter."""
    return Qualification(mu, spec).value(k)
