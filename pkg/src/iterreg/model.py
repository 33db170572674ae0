"""Synthetic inverse problems: spectra, smooth truths, designs and noise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import zeta

from .errors import DimensionError, DomainError, PreconditionError
from .spectral_core import DesignMatrix, SingularSystem, orthonormalize

NOISE_KINDS = ("gaussian", "scaled_laplace")
DEFAULT_OMEGA_DECAY = 0.51


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class SourceCondition:
    """Smoothness class ``f = (A*A)^mu omega`` with ``||omega|| <= rho``.

    ``omega_coeffs`` are expressed in the right singular basis.
    """

    mu: float
    source_rho: float
    omega_coeffs: np.ndarray

    def __post_init__(self):
        w = np.array(self.omega_coeffs, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "omega_coeffs", w)
        if self.mu < 0:
            raise DomainError(f"mu must be nonnegative, got {self.mu}")
        if self.source_rho <= 0:
            raise DomainError(f"source_rho must be positive, got {self.source_rho}")
        if not np.all(np.isfinite(w)):
            raise DomainError("omega has non-finite entries")

    @property
    def omega_norm(self) -> float:
        return float(np.linalg.norm(self.omega_coeffs))

    def check(self):
        if self.omega_norm > self.source_rho * (1 + 1e-12):
            raise PreconditionError(
                f"||omega|| = {self.omega_norm:.6g} exceeds source_rho = {self.source_rho:.6g}"
            )


def default_omega(source_rho: float, dim: int, decay: float = DEFAULT_OMEGA_DECAY) -> np.ndarray:
    """Coefficients ``omega_j ~ j^-decay`` at the edge of the source ball.

    Normalized over the whole infinite sequence (``sum_j j^-2decay`` is a zeta
    value), so truncations of any length keep the same leading coefficients
    and satisfy ``||omega|| <= rho``.
    """
    if decay <= 0.5:
        raise DomainError("decay must exceed 1/2 for a square-summable profile")
    j = np.arange(1, dim + 1, dtype=float)
    return source_rho * j**-decay / math.sqrt(zeta(2 * decay))


@dataclass(frozen=True)
class NoiseModel:
    """Centered i.i.d. noise with standard deviation ``sigma``."""

    kind: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise DomainError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not self.sigma >= 0:
            raise DomainError(f"noise sigma must be nonnegative, got {self.sigma}")

    def absolute_moment(self, order: int) -> float:
        """Exact ``E|eps|^order / sigma^order``."""
        if self.kind == "gaussian":
            return 2 ** (order / 2) * math.gamma((order + 1) / 2) / math.sqrt(math.pi)
        # Laplace with scale b = sigma / sqrt(2): E|eps|^q = q! b^q
        return math.factorial(order) * 2 ** (-order / 2)


def sample_noise(nm: NoiseModel, n: int, rng_seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. noise values; deterministic for a fixed seed."""
    if n < 1:
        raise DimensionError(f"sample count must be >= 1, got {n}")
    rng = _rng(rng_seed)
    if nm.kind == "gaussian":
        z = rng.standard_normal(n)
    else:
        z = rng.laplace(0.0, 1.0 / math.sqrt(2.0), n)
    return nm.sigma * z


def trig_frame(n: int, d: int) -> np.ndarray:
    """Discrete trigonometric functions ``1, cos 2pi x, sin 2pi x, ...`` on ``x_i = i/n``."""
    x = np.arange(1, n + 1, dtype=float) / n
    cols = [np.ones(n)]
    for k in range(1, d):
        freq = (k + 1) // 2
        cols.append(np.cos(2 * np.pi * freq * x) if k % 2 else np.sin(2 * np.pi * freq * x))
    return np.column_stack(cols)


@dataclass(frozen=True)
class Problem:
    """One simulated inverse problem.

    ``design`` is the model operator (n x d_m); ``truth_coeffs`` are the
    coefficients of the projected truth in the right singular basis. An
    optional tail lives outside the model subspace and only enters through
    the observations.
    """

    design: DesignMatrix
    system: SingularSystem
    truth_coeffs: np.ndarray
    noise: NoiseModel
    p: float
    source: Optional[SourceCondition] = None
    tail_design: Optional[np.ndarray] = None
    tail_coeffs: np.ndarray = field(default_factory=lambda: np.empty(0))
    rng_seed: Optional[int] = None

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def d_m(self) -> int:
        return self.design.d

    @property
    def noise_sigma(self) -> float:
        return self.noise.sigma

    @property
    def truth(self) -> np.ndarray:
        """Projected truth as a parameter vector."""
        return self.system.synthesize(self.truth_coeffs)

    @property
    def tail_norm_sq(self) -> float:
        return float(np.sum(self.tail_coeffs**2))

    def clean_signal(self) -> np.ndarray:
        y = self.design.entries @ self.truth
        if self.tail_design is not None and self.tail_coeffs.size:
            y = y + self.tail_design @ self.tail_coeffs
        return y

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "d_m": self.d_m,
            "tail_dim": int(self.tail_coeffs.size),
            "rng_seed": self.rng_seed,
            "noise": {"kind": self.noise.kind, "sigma": self.noise.sigma},
            "source": None
            if self.source is None
            else {
                "mu": self.source.mu,
                "source_rho": self.source.source_rho,
                "omega_coeffs": self.source.omega_coeffs.tolist(),
            },
            "sigmas": self.system.sigmas.tolist(),
            "truth_coeffs": self.truth_coeffs.tolist(),
            "tail_coeffs": self.tail_coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Problem":
        """Rebuild a generated problem; stored spectra must match the rebuild."""
        src = doc.get("source")
        sc = None
        if src is not None:
            sc = SourceCondition(src["mu"], src["source_rho"], np.asarray(src["omega_coeffs"]))
        prob = make_diagonal_problem(
            doc["p"],
            doc["d_m"],
            doc["n"],
            doc.get("rng_seed"),
            source=sc,
            noise=NoiseModel(**doc["noise"]),
            tail_dim=doc.get("tail_dim", 0),
        )
        if sc is None:
            prob = _with_truth(prob, np.asarray(doc["truth_coeffs"], dtype=float))
        if not np.allclose(prob.system.sigmas, doc["sigmas"], rtol=1e-12, atol=0):
            raise PreconditionError("stored spectrum does not match the regenerated problem")
        return prob


def _with_truth(prob: Problem, coeffs: np.ndarray) -> Problem:
    return Problem(
        prob.design, prob.system, coeffs, prob.noise, prob.p, prob.source,
        prob.tail_design, prob.tail_coeffs, prob.rng_seed,
    )


def make_source_element(system: SingularSystem, sc: SourceCondition) -> np.ndarray:
    """Return ``(A*A)^mu omega = sum_j sigma_j^(2 mu) <omega, phi_j> phi_j``."""
    sc.check()
    w = sc.omega_coeffs
    if w.size != system.rank:
        raise DimensionError(f"omega has {w.size} coefficients, system has rank {system.rank}")
    return system.synthesize(system.sigmas ** (2 * sc.mu) * w)


def make_diagonal_problem(
    p: float,
    d_m: int,
    n: int,
    rng_seed=None,
    *,
    source: Optional[SourceCondition] = None,
    mu: float = 0.5,
    source_rho: float = 1.0,
    noise: Optional[NoiseModel] = None,
    tail_dim: int = 0,
    random_signs: bool = False,
) -> Problem:
    """Build a problem with singular values exactly ``j^-p``.

    The design is an empirically orthonormal trigonometric frame with column
    ``j`` scaled by ``j^-p``, so the right singular vectors are the canonical
    basis. Without an explicit ``source`` the truth is ``(A*A)^mu omega`` with
    the :func:`default_omega` profile; ``random_signs`` flips its signs using
    ``rng_seed``. ``tail_dim`` extra frame columns continue the spectrum
    outside the model and carry the matching truth coefficients.
    """
    if not p > 0.5:
        raise DomainError(f"ill-posedness exponent must exceed 1/2, got {p}")
    if d_m < 1:
        raise DimensionError(f"d_m must be >= 1, got {d_m}")
    if d_m + tail_dim > n:
        raise DimensionError(f"infeasible design: {d_m + tail_dim} columns with only {n} samples")
    noise = noise if noise is not None else NoiseModel()
    total = d_m + tail_dim
    frame = orthonormalize(trig_frame(n, total)).entries
    sig_all = np.arange(1, total + 1, dtype=float) ** -p

    if source is None:
        omega = default_omega(source_rho, total)
        if random_signs:
            omega = omega * _rng(rng_seed).choice([-1.0, 1.0], size=total)
        source = SourceCondition(mu, source_rho, omega)
    if source.omega_coeffs.size not in (d_m, total):
        raise DimensionError(f"omega must have {d_m} or {total} coefficients")
    source.check()
    coeff_all = np.zeros(total)
    coeff_all[: source.omega_coeffs.size] = sig_all[: source.omega_coeffs.size] ** (2 * source.mu) * source.omega_coeffs

    psi = frame[:, :d_m]
    design = DesignMatrix(psi * sig_all[:d_m])
    system = SingularSystem(sig_all[:d_m], psi, np.eye(d_m))
    tail_design = frame[:, d_m:] * sig_all[d_m:] if tail_dim else None
    return Problem(
        design=design,
        system=system,
        truth_coeffs=coeff_all[:d_m],
        noise=noise,
        p=p,
        source=source,
        tail_design=tail_design,
        tail_coeffs=coeff_all[d_m:],
        rng_seed=None if isinstance(rng_seed, np.random.Generator) else rng_seed,
    )


def observe(prob: Problem, f, eps) -> np.ndarray:
    """Observations ``y_i = (A f)(x_i) + eps_i`` under the model operator."""
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (prob.n,):
        raise DimensionError(f"noise vector must have length {prob.n}, got shape {eps.shape}")
    return prob.design.apply(f) + eps


def min_dimension(n: int, p: float) -> int:
    """Smallest model dimension ``ceil(n^(1/(2p+1)))`` for the projection error."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not p > 0.5:
        raise DomainError(f"p must exceed 1/2, got {p}")
    root = n ** (1.0 / (2 * p + 1))
    nearest = round(root)
    if abs(root - nearest) <= 1e-9 * max(1.0, root):
        return int(nearest)
    return int(math.ceil(root))
