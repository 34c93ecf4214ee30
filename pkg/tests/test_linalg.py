import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ensemble_compiler.errors import ContractViolation, InputError
from ensemble_compiler.linalg import (
    apply_local, check_density_matrix, check_unitary, choi_of_ensemble, choi_of_unitary,
    diamond_upper_bound, embed, frobenius_norm, haar_unitary, is_unitary, operator_norm,
    phase_align, trace_norm,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)

seeds = st.integers(0, 2**32 - 1)


def rand_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def rand_hermitian(rng, n):
    A = rand_complex(rng, n)
    return A + A.conj().T


# --- frozen examples ----------------------------------------------------------


@pytest.mark.parametrize(
    "A, expected",
    [
        (np.zeros((2, 2)), 0.0),
        (I2 - X, 2.0),  # four unit-modulus entries
        (np.eye(8), math.sqrt(8)),
    ],
)
def test_frobenius_examples(A, expected):
    assert frobenius_norm(A) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize(
    "A, expected",
    [
        (np.diag([3.0, 1.0]), 3.0),
        (I2 - X, 2.0),  # eigenvalues 0 and 2
    ],
)
def test_operator_norm_examples(A, expected):
    assert operator_norm(A) == pytest.approx(expected, rel=1e-12)


def test_trace_norm_examples():
    plus = np.full((2, 2), 0.5)
    zero = np.diag([1.0, 0.0])
    assert trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2.0)
    assert trace_norm(plus - plus) == 0.0
    # eigenvalues +-1/sqrt(2)
    assert trace_norm(zero - plus) == pytest.approx(math.sqrt(2), rel=1e-12)


def test_trace_norm_rejects_non_hermitian():
    with pytest.raises(ContractViolation):
        trace_norm(np.array([[0, 1], [0, 0]], dtype=complex))


def test_choi_identity_is_scaled_bell_projector():
    J = choi_of_unitary(I2)
    phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(J, 2 * np.outer(phi, phi))
    assert np.trace(J).real == pytest.approx(2)


def test_choi_of_x_lives_on_01_10_sector():
    J = choi_of_unitary(X)
    support = np.flatnonzero(np.abs(np.diag(J)) > 1e-12)
    assert list(support) == [1, 2]
    assert np.trace(J).real == pytest.approx(2)


def test_choi_convention_matches_definition():
    # J = sum_ij U|i><j|U^dagger (x) |i><j|, system factor first
    rng = np.random.default_rng(3)
    U = haar_unitary(4, rng)
    d = 4
    J = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            Eij = np.zeros((d, d))
            Eij[i, j] = 1
            J += np.kron(U @ Eij @ U.conj().T, Eij)
    assert np.allclose(choi_of_unitary(U), J, atol=1e-12)


def test_choi_of_dephasing_mix():
    J = choi_of_ensemble([(0.5, I2), (0.5, Z)])
    expected = np.diag([1.0, 0, 0, 1]).astype(complex)  # coherences cancel
    assert np.allclose(J, expected)
    assert np.trace(J).real == pytest.approx(2)


def test_choi_of_ensemble_rejects_bad_weights():
    with pytest.raises(InputError):
        choi_of_ensemble([(0.6, I2), (0.6, Z)])
    with pytest.raises(InputError):
        choi_of_ensemble([])


def test_diamond_bound_identity_vs_x():
    # rank-one Choi matrices of orthogonal Bell vectors: eigenvalues +-2
    assert diamond_upper_bound(choi_of_unitary(I2), choi_of_unitary(X)) == pytest.approx(4.0)
    J = choi_of_unitary(X)
    assert diamond_upper_bound(J, J) == 0.0


def test_diamond_bound_dim_mismatch():
    with pytest.raises(InputError):
        diamond_upper_bound(np.eye(4), np.eye(16))


def test_phase_align_makes_overlap_real():
    rng = np.random.default_rng(0)
    U, V = haar_unitary(4, rng), haar_unitary(4, rng)
    aligned, phi = phase_align(np.exp(0.7j) * U, V)
    overlap = np.vdot(V, aligned)
    assert abs(overlap.imag) < 1e-12 and overlap.real >= 0
    assert np.allclose(aligned, np.exp(1j * phi) * np.exp(0.7j) * U)


def test_check_unitary_and_density():
    with pytest.raises(ContractViolation):
        check_unitary(np.array([[1, 1], [0, 1]], dtype=complex))
    with pytest.raises(ContractViolation):
        check_density_matrix(np.diag([0.7, 0.7]))
    with pytest.raises(ContractViolation):
        check_density_matrix(np.diag([1.2, -0.2]))
    assert is_unitary(X)


def test_embed_little_endian():
    # X on qubit 0 of 2 flips the least significant bit
    M = embed(X, [0], 2)
    assert np.allclose(M, np.kron(I2, X))
    M = embed(X, [1], 2)
    assert np.allclose(M, np.kron(X, I2))


def test_apply_local_matches_embed():
    rng = np.random.default_rng(1)
    U = haar_unitary(4, rng)
    M = rand_complex(rng, 8, 3)
    assert np.allclose(apply_local(U, [2, 0], M, 3), embed(U, [2, 0], 3) @ M)


# --- properties (200 random matrices each; also exercised by the acceptance suite) ---


@given(seeds, st.integers(1, 5))
def test_operator_frobenius_sandwich(seed, n):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n + 1))
    A = rand_complex(rng, n, k) @ rand_complex(rng, k, n)  # rank k
    r = np.linalg.matrix_rank(A)
    op, fro = operator_norm(A), frobenius_norm(A)
    assert op <= fro * (1 + 1e-12)
    assert fro <= math.sqrt(r) * op * (1 + 1e-12)


@given(seeds, st.sampled_from([2, 4, 8]))
def test_frobenius_unitary_invariance(seed, d):
    rng = np.random.default_rng(seed)
    U, V, W = (haar_unitary(d, rng) for _ in range(3))
    base = frobenius_norm(U - V)
    assert frobenius_norm(W @ U - W @ V) == pytest.approx(base, abs=1e-10)
    assert frobenius_norm(U @ W - V @ W) == pytest.approx(base, abs=1e-10)


@given(seeds, st.integers(2, 5))
def test_choi_of_ensemble_with_unit_weight(seed, m):
    rng = np.random.default_rng(seed)
    Us = [haar_unitary(2, rng) for _ in range(m)]
    w = [1.0] + [0.0] * (m - 1)
    assert np.allclose(choi_of_ensemble(zip(w, Us)), choi_of_unitary(Us[0]), atol=1e-12)


@given(seeds, st.sampled_from([2, 4]))
def test_choi_rank_bound(seed, d):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(3))
    JA = choi_of_ensemble(zip(p, [haar_unitary(d, rng) for _ in range(3)]))
    JB = choi_of_unitary(haar_unitary(d, rng))
    assert trace_norm(JA - JB) <= 2 * d**2 * operator_norm(JA - JB) * (1 + 1e-12)


@given(seeds)
def test_choi_rank_one_trace_d(seed):
    rng = np.random.default_rng(seed)
    U = haar_unitary(4, rng)
    J = choi_of_unitary(U)
    ev = np.linalg.eigvalsh(J)
    assert np.trace(J).real == pytest.approx(4)
    assert np.sum(ev > 1e-9) == 1


@given(seeds)
def test_choi_of_ensemble_psd(seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(4))
    J = choi_of_ensemble(zip(p, [haar_unitary(2, rng) for _ in range(4)]))
    assert np.allclose(J, J.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(J)[0] >= -1e-10
    assert np.trace(J).real == pytest.approx(2)


@given(seeds)
def test_diamond_bound_dominates_output_distance(seed):
    rng = np.random.default_rng(seed)
    Us = [haar_unitary(2, rng) for _ in range(3)]
    p = rng.dirichlet(np.ones(3))
    V = haar_unitary(2, rng)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    rho = np.outer(v, v.conj()) / np.vdot(v, v).real
    out = sum(w * U @ rho @ U.conj().T for w, U in zip(p, Us))
    ideal = V @ rho @ V.conj().T
    bound = diamond_upper_bound(choi_of_ensemble(zip(p, Us)), choi_of_unitary(V))
    assert trace_norm(out - ideal) <= bound + 1e-10


@given(seeds, st.integers(1, 6))
def test_trace_norm_matches_svd(seed, n):
    rng = np.random.default_rng(seed)
    A = rand_hermitian(rng, n)
    assert trace_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False).sum(), rel=1e-10)
