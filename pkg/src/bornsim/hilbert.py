"""Finite-dimensional complex linear algebra used throughout the package.

States are 1-D complex numpy arrays, operators and density matrices are
dense 2-D arrays.  All functions are pure; nothing mutates its input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12


class NonHermitianError(ValueError):
    """Raised when an operation requires a Hermitian input and does not get one."""


@dataclass(frozen=True)
class CompositeSpace:
    """Tensor-product structure: first factor is the slow (outermost) index."""

    factor_dims: tuple[int, ...]

    def __post_init__(self):
        if not self.factor_dims or any(d < 1 for d in self.factor_dims):
            raise ValueError("factor dimensions must be positive")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    def flat_index(self, multi: tuple[int, ...]) -> int:
        return int(np.ravel_multi_index(multi, self.factor_dims))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.factor_dims))


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two states or two operators (first factor slow)."""
    return np.kron(np.asarray(a), np.asarray(b))


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def is_hermitian(op: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    scale = max(np.abs(op).max(), 1.0)
    return np.abs(op - dag(op)).max() <= tol * scale


def normalize(psi: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / n


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def expectation(psi: np.ndarray, op: np.ndarray) -> complex:
    """<psi|op|psi> without normalizing psi."""
    return complex(np.vdot(psi, op @ psi))


def partial_trace(rho: np.ndarray, space: CompositeSpace, keep: int) -> np.ndarray:
    """Trace out every factor of ``space`` except ``keep``."""
    dims = space.factor_dims
    if not 0 <= keep < len(dims):
        raise IndexError(f"keep index {keep} out of range for {len(dims)} factors")
    if rho.shape != (space.total_dim, space.total_dim):
        raise ValueError("density matrix does not match the composite space")
    n = len(dims)
    reshaped = rho.reshape(dims + dims)
    # contract row/column indices of every traced factor pairwise
    for factor in reversed([i for i in range(n) if i != keep]):
        reshaped = np.trace(reshaped, axis1=factor, axis2=factor + reshaped.ndim // 2)
    return reshaped


def schmidt_decompose(
    psi: np.ndarray, space: CompositeSpace, degeneracy_gap: float = 1e-8
) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Schmidt decomposition of a normalized two-factor pure state.

    Returns ``(coeffs, lefts, rights, degenerate)`` with coefficients sorted
    descending, ``lefts[k]`` / ``rights[k]`` orthonormal, and
    ``psi = sum_k coeffs[k] * kron(lefts[k], rights[k])``.  ``degenerate`` is
    True when two coefficients are closer than ``degeneracy_gap`` (the
    decomposition is then fixed by convention, not by the state).
    """
    if len(space.factor_dims) != 2:
        raise ValueError("schmidt_decompose requires a two-factor space")
    d1, d2 = space.factor_dims
    amp = np.asarray(psi).reshape(d1, d2)
    u, s, vh = np.linalg.svd(amp)
    k = min(d1, d2)
    lefts = u[:, :k].T.copy()
    rights = vh[:k, :].copy()
    degenerate = bool(np.any(np.abs(np.diff(s[:k])) < degeneracy_gap))
    # lexicographic phase convention: first nonzero left component real positive
    for i in range(k):
        nz = np.flatnonzero(np.abs(lefts[i]) > 1e-14)
        if nz.size:
            phase = lefts[i][nz[0]] / abs(lefts[i][nz[0]])
            lefts[i] = lefts[i] / phase
            rights[i] = rights[i] * phase
    return s[:k].copy(), lefts, rights, degenerate


def eig_hermitian(op: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator.

    Returns eigenvalues ascending and the matrix of eigenvectors as columns,
    each with its largest-magnitude component made real positive so results
    are deterministic for a fixed input.
    """
    if not is_hermitian(op):
        raise NonHermitianError("operator is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh(op)
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        k = int(np.argmax(np.abs(vecs[:, j])))
        phase = vecs[k, j] / abs(vecs[k, j])
        vecs[:, j] = vecs[:, j] / phase
    return vals, vecs


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Half the sum of absolute eigenvalues of the difference."""
    if rho1.shape != rho2.shape:
        raise ValueError("dimension mismatch")
    diff = rho1 - rho2
    diff = 0.5 * (diff + dag(diff))
    vals = np.linalg.eigvalsh(diff)
    return float(0.5 * np.abs(vals).sum())


def check_density_matrix(rho: np.ndarray, trace_tol: float = 1e-10, pos_tol: float = 1e-10):
    """Raise unless rho is Hermitian, unit trace and numerically positive."""
    if not is_hermitian(rho):
        raise NonHermitianError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr} differs from 1")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -pos_tol:
        raise ValueError(f"density matrix has eigenvalue {lo} below -{pos_tol}")
