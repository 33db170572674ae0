"""Computable right-hand sides of the risk bounds.

Every calculator returns a :class:`BoundReport` carrying the inputs, the
value and its per-term breakdown, so a bound can be audited after the fact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

BOUND_KINDS = ("bias_variance", "oracle", "landweber_rate", "multistep_rate", "tail")
CONSTANT_VARIANTS = ("proof", "statement")


@dataclass
class BoundReport:
    kind: str
    inputs: dict
    value: float
    breakdown: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "inputs": _plain(self.inputs), "value": self.value,
                "breakdown": _plain(self.breakdown)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "BoundReport":
        return cls(doc["kind"], doc["inputs"], doc["value"], doc.get("breakdown", {}))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _check_p(p):
    if not p > 0.5:
        raise DomainError(f"ill-posedness exponent must exceed 1/2, got {p}")


def _check_mu(mu):
    if not mu > 0:
        raise DomainError(f"smoothness mu must be positive, got {mu}")


def variance_constant(p: float) -> float:
    """``(1/(2p+1)) ((2p+1)/(2p-1))^((2p+1)/(4p))``."""
    _check_p(p)
    return ((2 * p + 1) / (2 * p - 1)) ** ((2 * p + 1) / (4 * p)) / (2 * p + 1)


def bias_variance_bound(omega_mu_k: float, source_rho: float, sigma2: float, trace_term: float) -> BoundReport:
    """``2 omega^2 rho^2 + 2 sigma^2 Tr``."""
    for name, v in (("omega_mu_k", omega_mu_k), ("source_rho", source_rho), ("sigma2", sigma2), ("trace_term", trace_term)):
        if v < 0:
            raise DomainError(f"{name} must be nonnegative, got {v}")
    bias = 2.0 * omega_mu_k**2 * source_rho**2
    var = 2.0 * sigma2 * trace_term
    return BoundReport(
        "bias_variance",
        {"omega_mu_k": omega_mu_k, "source_rho": source_rho, "sigma2": sigma2, "trace_term": trace_term},
        bias + var,
        {"bias": bias, "variance": var},
    )


def landweber_bias_constant(mu: float, tau: float, source_rho: float, variant: str = "proof") -> float:
    base = mu / (tau * math.e)
    power = 2 * mu if variant == "proof" else mu
    return source_rho**2 * base**power


def multistep_bias_constant(mu: float, source_rho: float, variant: str = "proof") -> float:
    if variant == "proof":
        return source_rho**2 * mu ** (2 * mu) / (mu + 1) ** 2
    return source_rho**2 * mu**mu / (mu + 1)


def _check_variant(variant):
    if variant not in CONSTANT_VARIANTS:
        raise ConfigError(f"unknown constant variant {variant!r}; expected one of {CONSTANT_VARIANTS}")


def landweber_rate_bound(k, mu, p, tau, source_rho, sigma2, n, variant: str = "proof") -> BoundReport:
    """``2 c1 k^-2mu + 2 c2 (sigma^2/n) (tau k)^((2p+1)/2p)``.

    ``variant="proof"`` uses ``c1 = rho^2 (mu/(tau e))^(2 mu)``; ``"statement"``
    uses the exponent ``mu``.
    """
    _check_p(p)
    _check_mu(mu)
    _check_variant(variant)
    if not tau > 0 or k < 1 or n < 1:
        raise DomainError("need tau > 0, k >= 1 and n >= 1")
    c1 = landweber_bias_constant(mu, tau, source_rho, variant)
    c2 = variance_constant(p)
    bias = 2 * c1 * float(k) ** (-2 * mu)
    var = 2 * c2 * sigma2 / n * (tau * k) ** ((2 * p + 1) / (2 * p))
    return BoundReport(
        "landweber_rate",
        {"k": k, "mu": mu, "p": p, "tau": tau, "source_rho": source_rho, "sigma2": sigma2, "n": n, "variant": variant},
        bias + var,
        {"bias": bias, "variance": var, "c1": c1, "c2": c2},
    )


def multistep_rate_bound(schedule_sum, mu, p, source_rho, sigma2, n, variant: str = "proof") -> BoundReport:
    """Same shape with ``tau k`` replaced by ``S_k = sum_i 1/t_ik``."""
    _check_p(p)
    _check_mu(mu)
    _check_variant(variant)
    if not schedule_sum > 0 or n < 1:
        raise DomainError("need schedule_sum > 0 and n >= 1")
    c1 = multistep_bias_constant(mu, source_rho, variant)
    c2 = variance_constant(p)
    bias = 2 * c1 * schedule_sum ** (-2 * mu)
    var = 2 * c2 * sigma2 / n * schedule_sum ** ((2 * p + 1) / (2 * p))
    return BoundReport(
        "multistep_rate",
        {"schedule_sum": schedule_sum, "mu": mu, "p": p, "source_rho": source_rho, "sigma2": sigma2, "n": n,
         "variant": variant},
        bias + var,
        {"bias": bias, "variance": var, "c1": c1, "c2": c2},
    )


def remainder_terms(n_rho2, trace_ratio, r, L, d, sigma2) -> np.ndarray:
    """Per-``k`` summands of the remainder constant ``C1(d)``.

    ``4 sigma^2 (n rho_k^2 / d) [sqrt(s_k) + 1] exp(-sqrt(s_k))`` with
    ``s_k = d r L_k (Tr_k/rho_k^2 + 1)``.
    """
    if not d > 0:
        raise DomainError(f"d must be positive, got {d}")
    n_rho2 = np.asarray(n_rho2, dtype=float)
    s = d * r * np.asarray(L, dtype=float) * (np.asarray(trace_ratio, dtype=float) + 1.0)
    root = np.sqrt(s)
    return 4.0 * sigma2 * n_rho2 / d * (root + 1.0) * np.exp(-root)


def oracle_rhs(bias_sq, pen, nu, C, d, r, L, trace_ratio, n_rho2, n, sigma2=1.0) -> BoundReport:
    """Right-hand side of the oracle inequality for the selected estimator.

    ``(1/(1-nu)) min_k [C (1+nu) bias_k + 2 pen_k] + C1(d) / n``. All per-k
    arguments are arrays over the same candidate grid.
    """
    if not 0 < nu < 1:
        raise ConfigError(f"nu must lie in (0, 1), got {nu}")
    if not r > 2:
        raise ConfigError(f"r must exceed 2, got {r}")
    if not C > 0:
        raise ConfigError(f"C must be positive, got {C}")
    bias_sq = np.atleast_1d(np.asarray(bias_sq, dtype=float))
    pen = np.atleast_1d(np.asarray(pen, dtype=float))
    inner = C * (1 + nu) * bias_sq + 2 * pen
    i = int(np.argmin(inner))
    main = inner[i] / (1 - nu)
    terms = remainder_terms(n_rho2, trace_ratio, r, L, d, sigma2)
    c1 = float(np.sum(terms))
    return BoundReport(
        "oracle",
        {"nu": nu, "C": C, "d": d, "r": r, "n": n, "sigma2": sigma2,
         "bias_sq": bias_sq, "pen": pen, "L": np.atleast_1d(L), "trace_ratio": np.atleast_1d(trace_ratio),
         "n_rho2": np.atleast_1d(n_rho2)},
        main + c1 / n,
        {"inf_index": i, "inf_value": float(inner[i]), "main": main, "C1": c1, "remainder": c1 / n},
    )


def tail_threshold(trace, radius, r, L, u, sigma2=1.0) -> float:
    """Level ``sigma^2 [(Tr + rho)(r/2)(1 + L) + u]`` of the tail event."""
    return sigma2 * ((trace + radius) * (r / 2) * (1 + L) + u)


def concentration_tail(trace, radius, r, L, u, d) -> BoundReport:
    """``exp(-sqrt(d (u/rho + (r/2) L (Tr/rho + 1))))``."""
    if not radius > 0:
        raise DomainError(f"spectral radius must be positive, got {radius}")
    if u < 0:
        raise DomainError(f"u must be nonnegative, got {u}")
    if not d > 0:
        raise DomainError(f"d must be positive, got {d}")
    expo = d * (u / radius + r / 2 * L * (trace / radius + 1))
    value = math.exp(-math.sqrt(expo))
    return BoundReport(
        "tail",
        {"trace": trace, "radius": radius, "r": r, "L": L, "u": u, "d": d},
        value,
        {"exponent": expo},
    )


def optimal_rate_exponent(p: float, mu: float) -> float:
    """Exponent ``4 mu p / (4 mu p + 2p + 1)`` of the risk decay in ``n``."""
    _check_p(p)
    if mu < 0:
        raise DomainError(f"mu must be nonnegative, got {mu}")
    return 4 * mu * p / (4 * mu * p + 2 * p + 1)


def evaluate(doc: dict) -> BoundReport:
    """Evaluate a bound described by ``{"kind": ..., <inputs>}``."""
    doc = dict(doc)
    kind = doc.pop("kind", None)
    try:
        if kind == "bias_variance":
            return bias_variance_bound(**doc)
        if kind == "landweber_rate":
            return landweber_rate_bound(**doc)
        if kind == "multistep_rate":
            return multistep_rate_bound(**doc)
        if kind == "tail":
            return concentration_tail(**doc)
        if kind == "oracle":
            return oracle_rhs(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad inputs for bound {kind!r}: {exc}") from None
    raise ConfigError(f"unknown bound kind {kind!r}; expected one of {BOUND_KINDS}")
