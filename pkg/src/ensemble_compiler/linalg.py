"""Small dense complex linear algebra: norms, distances and Choi matrices.

Matrices are plain :class:`numpy.ndarray` objects.  Unitaries, Choi matrices
and density matrices are validated on demand by the ``check_*`` helpers
rather than wrapped in classes.

Choi convention
---------------
For a channel ``E`` acting on ``d x d`` matrices we use

    J_E = sum_ij E(|i><j|) (x) |i><j|

with the system (output) factor first and the environment factor second.
For a unitary channel this is ``|psi><psi|`` with ``psi[a*d + i] = U[a, i]``,
i.e. ``psi = U.reshape(-1)``.  ``trace(J_E) = d`` for trace-preserving ``E``.

Qubit order
-----------
Little-endian throughout: qubit 0 is the least significant bit of a basis
index.  :func:`embed` and :func:`apply_local` follow this convention.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, InputError, NumericalFailure

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-8


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    return A


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def num_qubits(dim: int) -> int:
    if not is_power_of_two(dim):
        raise InputError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def frobenius_norm(A) -> float:
    """Return ``sqrt(tr(A^dagger A))``."""
    A = np.asarray(A, dtype=complex)
    return float(np.sqrt(np.sum(A.real**2 + A.imag**2)))


def operator_norm(A) -> float:
    """Largest singular value of ``A``."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    try:
        return float(np.linalg.norm(A, 2))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def hermitian_eigvals(A, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, ascending.

    Raises :class:`ContractViolation` if ``A`` deviates from Hermitian by more
    than ``tol`` (max-abs entry of ``A - A^dagger``).
    """
    A = _as_square(A)
    skew = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
    if skew > tol:
        raise ContractViolation(f"matrix is not Hermitian (deviation {skew:.3e})")
    try:
        return np.linalg.eigvalsh(0.5 * (A + A.conj().T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure(f"eigensolver did not converge: {exc}") from exc


def trace_norm(A) -> float:
    """Schatten 1-norm of a Hermitian matrix (sum of absolute eigenvalues)."""
    return float(np.sum(np.abs(hermitian_eigvals(A))))


def is_unitary(U, tol: float = UNITARY_TOL) -> bool:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return frobenius_norm(U.conj().T @ U - np.eye(U.shape[0])) <= tol


def check_unitary(U, tol: float = UNITARY_TOL) -> np.ndarray:
    """Validate and return ``U`` as a unitary of power-of-two dimension."""
    U = _as_square(U)
    num_qubits(U.shape[0])
    err = frobenius_norm(U.conj().T @ U - np.eye(U.shape[0]))
    if err > tol:
        raise ContractViolation(f"matrix is not unitary (||U^dag U - I||_F = {err:.3e})")
    return U


def check_density_matrix(rho, tol: float = 1e-10) -> np.ndarray:
    rho = _as_square(rho)
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ContractViolation(f"density matrix has trace {tr}")
    if hermitian_eigvals(rho)[0] < -tol:
        raise ContractViolation("density matrix is not positive semidefinite")
    return rho


def phase_align(U, V) -> tuple[np.ndarray, float]:
    """Multiply ``U`` by the unit phase maximizing ``Re tr(U^dagger V)``.

    Returns ``(e^{i phi} U, phi)``.  After alignment ``tr(V^dagger U)`` is
    real and nonnegative, so ``||e^{i phi} U - V||_F`` is minimal over phases.
    """
    U = np.asarray(U, dtype=complex)
    V = np.asarray(V, dtype=complex)
    overlap = np.vdot(U, V)  # tr(U^dagger V)
    phi = float(np.angle(overlap)) if abs(overlap) > 0 else 0.0
    return np.exp(1j * phi) * U, phi


def choi_of_unitary(U) -> np.ndarray:
    """Rank-one Choi matrix of ``rho -> U rho U^dagger``."""
    U = check_unitary(U, tol=1e-8)
    psi = U.reshape(-1)
    return np.outer(psi, psi.conj())


def choi_of_ensemble(members: Iterable[tuple[float, np.ndarray]], tol: float = 1e-9) -> np.ndarray:
    """Choi matrix of ``rho -> sum_i p_i U_i rho U_i^dagger``."""
    members = list(members)
    if not members:
        raise InputError("ensemble is empty")
    weights = np.array([w for w, _ in members], dtype=float)
    if np.any(weights < -tol) or abs(weights.sum() - 1.0) > tol:
        raise InputError(f"weights must be a probability vector (sum = {weights.sum()})")
    psis = np.stack([np.asarray(U, dtype=complex).reshape(-1) for _, U in members])
    return (psis.T * weights) @ psis.conj()


def diamond_upper_bound(J_A, J_B) -> float:
    """Upper bound ``||J_A - J_B||_1`` on ``||A - B||_diamond``.

    Half of this value bounds the diamond distance ``d_diamond(A, B)``.
    """
    J_A = _as_square(J_A)
    J_B = _as_square(J_B)
    if J_A.shape != J_B.shape:
        raise InputError(f"Choi dimension mismatch: {J_A.shape} vs {J_B.shape}")
    return trace_norm(J_A - J_B)


def embed(U_local, qubits: Sequence[int], n: int) -> np.ndarray:
    """Full ``2^n`` matrix of a gate acting on ``qubits`` (little-endian)."""
    dim = 1 << n
    return apply_local(U_local, qubits, np.eye(dim, dtype=complex), n)


def apply_local(U_local, qubits: Sequence[int], M: np.ndarray, n: int) -> np.ndarray:
    """Return ``embed(U_local) @ M`` without forming the embedded matrix.

    ``M`` has ``2^n`` rows; its columns are treated as a batch.  The local
    matrix index is ``sum_k bit(qubits[k]) << k``.
    """
    k = len(qubits)
    U_local = np.asarray(U_local, dtype=complex)
    if U_local.shape != (1 << k, 1 << k):
        raise InputError(f"local matrix of shape {U_local.shape} does not act on {k} qubits")
    cols = M.shape[1] if M.ndim == 2 else 1
    T = np.asarray(M, dtype=complex).reshape((2,) * n + (cols,))
    # axis n-1-q of the reshaped tensor holds the bit of qubit q
    axes = [n - 1 - q for q in reversed(qubits)]
    G = U_local.reshape((2,) * (2 * k))
    T = np.tensordot(G, T, axes=(list(range(k, 2 * k)), axes))
    T = np.moveaxis(T, list(range(k)), axes)
    return T.reshape(M.shape)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state vector of length ``dim``."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
