"""
Complex linear algebra on one- and two-qubit spaces.

Basis order is |00>, |01>, |10>, |11> with the SOURCE qubit as the first
tensor factor. Every module in the package relies on this ordering.

All helpers are pure functions over numpy arrays; inputs are never mutated.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from config import NUMERICAL_POLICY


class NumericalError(RuntimeError):
    """Base class for failures of the numerical model itself."""


class InvalidParameterError(ValueError):
    """Raised when an argument is outside the domain of an operation."""


class NotHermitianError(InvalidParameterError):
    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        self.tol = tol
        super().__init__(
            f"Matrix is not Hermitian: max|M - M^dagger| = {deviation:.3e} exceeds {tol:.1e}"
        )


@dataclass(frozen=True)
class NumericalPolicy:
    contract_tol: float = NUMERICAL_POLICY["contract_tol"]
    identity_tol: float = NUMERICAL_POLICY["identity_tol"]
    hermitian_tol: float = NUMERICAL_POLICY["hermitian_tol"]
    dependence_tol: float = NUMERICAL_POLICY["dependence_tol"]


DEFAULT_POLICY = NumericalPolicy()


class Subsystem(Enum):
    SOURCE = "source"
    TARGET = "target"


KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)
IDENTITY4 = np.eye(4, dtype=complex)
# pi phase shift on |1>, the feed-forward correction
U_PI = np.diag([1.0, -1.0]).astype(complex)
PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)


def as_vector(values, dim: int) -> np.ndarray:
    vector = np.asarray(values, dtype=complex).reshape(-1)
    if vector.shape != (dim,):
        raise InvalidParameterError(f"Expected a {dim}-vector, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise InvalidParameterError("Vector has non-finite entries")
    return vector


def as_matrix(values, dim: int) -> np.ndarray:
    matrix = np.asarray(values, dtype=complex)
    if matrix.shape != (dim, dim):
        raise InvalidParameterError(f"Expected a {dim}x{dim} matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidParameterError("Matrix has non-finite entries")
    return matrix


def dagger(matrix: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(matrix)).T


def norm_squared(vector: np.ndarray) -> float:
    return float(np.real(np.vdot(vector, vector)))


def is_normalized(vector: np.ndarray, tol: float = DEFAULT_POLICY.identity_tol) -> bool:
    return abs(norm_squared(vector) - 1.0) < tol


def normalize(vector) -> np.ndarray:
    vector = np.asarray(vector, dtype=complex)
    norm = np.sqrt(norm_squared(vector))
    if norm == 0.0:
        raise InvalidParameterError("Cannot normalize the zero vector")
    return vector / norm


def projector(vector) -> np.ndarray:
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    return np.outer(vector, np.conj(vector))


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; ``a`` acts on the source qubit."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_project(bra, state, subsystem: Subsystem) -> np.ndarray:
    """
    Contract one qubit of a two-qubit state with <bra|.

    The result is the unnormalized residual vector on the other qubit,
    e.g. the target state conditioned on a source measurement outcome.
    """
    bra = as_vector(bra, 2)
    amplitudes = as_vector(state, 4).reshape(2, 2)  # [source, target]
    if subsystem is Subsystem.SOURCE:
        return np.conj(bra) @ amplitudes
    return amplitudes @ np.conj(bra)


def svd2(matrix) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Singular value decomposition of a 2x2 matrix as (U, sigma, V) with
    matrix = U @ diag(sigma) @ V^dagger and sigma sorted descending.
    """
    matrix = as_matrix(matrix, 2)
    u, sigma, vh = np.linalg.svd(matrix)
    return u, sigma.astype(float), dagger(vh)


def is_hermitian(matrix: np.ndarray, tol: float = DEFAULT_POLICY.hermitian_tol) -> bool:
    return float(np.max(np.abs(matrix - dagger(matrix)))) <= tol


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + dagger(matrix))


def eig_hermitian4(matrix, tol: float = DEFAULT_POLICY.hermitian_tol) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and column eigenvectors of a Hermitian 4x4 matrix."""
    matrix = as_matrix(matrix, 4)
    deviation = float(np.max(np.abs(matrix - dagger(matrix))))
    if deviation > tol:
        raise NotHermitianError(deviation, tol)
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian_part(matrix))
    return eigenvalues.astype(float), eigenvectors


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Square root of a positive semidefinite matrix; tiny negative eigenvalues are clipped."""
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian_part(np.asarray(matrix, dtype=complex)))
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return (eigenvectors * roots) @ dagger(eigenvectors)


def clip_to_psd(matrix: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian_part(np.asarray(matrix, dtype=complex)))
    return (eigenvectors * np.clip(eigenvalues, 0.0, None)) @ dagger(eigenvectors)


def phase_invariant_distance(a, b) -> float:
    """min over theta of ||a - exp(i theta) b||_F."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    # the minimizing phase aligns b with a; differencing directly keeps full precision
    theta = np.angle(np.vdot(b, a))
    return float(np.linalg.norm((a - np.exp(1j * theta) * b).reshape(-1)))


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 of unit-trace PSD matrices."""
    root = psd_sqrt(rho)
    inner = psd_sqrt(root @ np.asarray(sigma, dtype=complex) @ root)
    return float(np.real(np.trace(inner)) ** 2)


def trace_distance(a, b) -> float:
    difference = hermitian_part(np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(difference))))
