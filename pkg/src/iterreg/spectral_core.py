"""Discretized operators, empirical geometry and spectral calculus.

Observation vectors live in R^n with the empirical inner product
``<u, v>_n = (1/n) sum_i u_i v_i``; parameter vectors live in R^d with the
standard inner product. The adjoint of a design matrix ``A`` (n x d) is
therefore ``A* = A.T / n``, which gives ``<A f, y>_n = <f, A* y>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateError, DimensionError, DomainError, PreconditionError

RANK_TOL = 1e-12
GRAM_TOL = 1e-10


def _vector(x, name="vector"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has non-finite entries")
    return x


@dataclass(frozen=True)
class DesignMatrix:
    """Operator matrix evaluated on the design points.

    Row ``i`` holds the evaluations at design point ``x_i``; the matrix has
    shape ``(n, d)``.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionError(f"design matrix must be 2-D and non-empty, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("design matrix has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def d(self) -> int:
        return self.entries.shape[1]

    def gram(self) -> np.ndarray:
        """Empirical Gram matrix ``(1/n) A^T A``."""
        return self.entries.T @ self.entries / self.n

    def is_orthonormal(self, tol: float = GRAM_TOL) -> bool:
        return bool(np.max(np.abs(self.gram() - np.eye(self.d))) <= tol)

    def apply(self, f) -> np.ndarray:
        f = _vector(f, "parameter vector")
        if f.shape[0] != self.d:
            raise DimensionError(f"expected parameter vector of length {self.d}, got {f.shape[0]}")
        return self.entries @ f


def as_design(a) -> DesignMatrix:
    return a if isinstance(a, DesignMatrix) else DesignMatrix(np.asarray(a, dtype=float))


def orthonormalize(a) -> DesignMatrix:
    """Orthonormalize the columns of ``a`` under the empirical inner product.

    Equivalent to empirical Gram-Schmidt; implemented with a Householder QR
    for stability. Column signs are fixed so that the triangular factor has a
    positive diagonal.
    """
    a = np.asarray(a, dtype=float)
    n, d = a.shape
    if d > n:
        raise DimensionError(f"cannot orthonormalize {d} columns in dimension {n}")
    q, r = np.linalg.qr(a)
    diag = np.diag(r)
    if np.any(np.abs(diag) <= RANK_TOL * np.max(np.abs(diag))):
        raise PreconditionError("columns are linearly dependent")
    q = q * np.sign(diag)
    return DesignMatrix(np.sqrt(n) * q)


def empirical_inner(u, v) -> float:
    u = _vector(u, "u")
    v = _vector(v, "v")
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    return float(u @ v) / u.shape[0]


def empirical_norm(u) -> float:
    return float(np.sqrt(empirical_inner(u, u)))


def adjoint_apply(a, y) -> np.ndarray:
    """Return ``A* y = A^T y / n``."""
    a = as_design(a)
    y = _vector(y, "observation vector")
    if y.shape[0] != a.n:
        raise DimensionError(f"expected observation vector of length {a.n}, got {y.shape[0]}")
    return a.entries.T @ y / a.n


@dataclass(frozen=True)
class SingularSystem:
    """Singular triples ``(sigma_j, phi_j, psi_j)`` of a design matrix.

    ``left_vectors`` (n x r) has empirically orthonormal columns ``psi_j``;
    ``right_vectors`` (d x r) has orthonormal columns ``phi_j``.
    """

    sigmas: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    degenerate: bool = False
    lambdas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = np.array(self.sigmas, dtype=float).reshape(-1)
        u = np.array(self.left_vectors, dtype=float)
        v = np.array(self.right_vectors, dtype=float)
        if u.ndim != 2 or v.ndim != 2 or u.shape[1] != s.size or v.shape[1] != s.size:
            raise DimensionError("singular vectors do not match the number of singular values")
        if s.size and (np.any(s <= 0) or np.any(np.diff(s) > 0)):
            raise DomainError("singular values must be positive and nonincreasing")
        for arr in (s, u, v):
            arr.setflags(write=False)
        lam = s**2
        lam.setflags(write=False)
        object.__setattr__(self, "sigmas", s)
        object.__setattr__(self, "left_vectors", u)
        object.__setattr__(self, "right_vectors", v)
        object.__setattr__(self, "lambdas", lam)

    @property
    def rank(self) -> int:
        return self.sigmas.size

    @property
    def n(self) -> int:
        return self.left_vectors.shape[0]

    @property
    def d(self) -> int:
        return self.right_vectors.shape[0]

    def data_coefficients(self, y) -> np.ndarray:
        """Empirical coefficients ``<y, psi_j>_n``."""
        y = _vector(y, "observation vector")
        if y.shape[0] != self.n:
            raise DimensionError(f"expected observation vector of length {self.n}, got {y.shape[0]}")
        return self.left_vectors.T @ y / self.n

    def coefficients(self, f) -> np.ndarray:
        """Coefficients ``<f, phi_j>`` of a parameter vector."""
        f = _vector(f, "parameter vector")
        if f.shape[0] != self.d:
            raise DimensionError(f"expected parameter vector of length {self.d}, got {f.shape[0]}")
        return self.right_vectors.T @ f

    def synthesize(self, coeffs) -> np.ndarray:
        """Parameter vector ``sum_j coeffs_j phi_j``."""
        return self.right_vectors @ np.asarray(coeffs, dtype=float)

    def reconstruct(self) -> np.ndarray:
        """Rebuild the design matrix ``sum_j sigma_j psi_j phi_j^T``."""
        return (self.left_vectors * self.sigmas) @ self.right_vectors.T


def svd(a, rank_tol: float = RANK_TOL) -> SingularSystem:
    """Singular system of ``a`` in the empirical/standard geometry.

    This is the ordinary SVD of ``a / sqrt(n)`` with the left vectors rescaled
    by ``sqrt(n)``. Singular values below ``rank_tol * sigma_1`` are dropped;
    an all-zero matrix yields an empty system flagged ``degenerate``.
    """
    a = as_design(a)
    n = a.n
    u, s, vt = np.linalg.svd(a.entries / np.sqrt(n), full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return SingularSystem(np.empty(0), np.empty((n, 0)), np.empty((a.d, 0)), degenerate=True)
    keep = s >= rank_tol * s[0]
    return SingularSystem(s[keep], np.sqrt(n) * u[:, keep], vt[keep].T)


@dataclass(frozen=True)
class SpectralFunction:
    """A function ``G`` on ``[0, support_bound]`` applied through the spectrum."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    support_bound: float = np.inf

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if np.any(lam < 0) or np.any(lam > self.support_bound):
            raise DomainError(f"eigenvalue outside [0, {self.support_bound}]")
        out = np.asarray(self.evaluator(lam), dtype=float)
        if not np.all(np.isfinite(out)):
            raise DomainError("spectral function returned non-finite values")
        return np.broadcast_to(out, lam.shape)


def apply_spectral_function(system: SingularSystem, g: SpectralFunction, f) -> np.ndarray:
    """Return ``G(A*A) f = sum_j G(lambda_j) <f, phi_j> phi_j``."""
    g = g if isinstance(g, SpectralFunction) else SpectralFunction(g)
    coeffs = system.coefficients(f)
    return system.synthesize(g(system.lambdas) * coeffs)


def project_onto_subspace(y, basis) -> np.ndarray:
    """Empirical orthogonal projection of ``y`` onto the span of ``basis``.

    ``basis`` must have empirically orthonormal columns.
    """
    basis = as_design(basis)
    if not basis.is_orthonormal():
        raise PreconditionError("basis columns are not orthonormal under <.,.>_n")
    y = _vector(y, "observation vector")
    if y.shape[0] != basis.n:
        raise DimensionError(f"expected observation vector of length {basis.n}, got {y.shape[0]}")
    b = basis.entries
    return b @ (b.T @ y / basis.n)


def pseudo_inverse_solution(system: SingularSystem, y) -> np.ndarray:
    """Minimum-norm least-squares solution ``sum_j <y, psi_j>_n / sigma_j phi_j``."""
    if system.rank == 0:
        raise DegenerateError("operator has rank zero")
    return system.synthesize(system.data_coefficients(y) / system.sigmas)
