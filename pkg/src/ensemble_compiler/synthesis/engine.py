"""Parameterized circuits with a phase-insensitive fidelity objective.

A :class:`ParamCircuit` is a sequence of operations, each either a fixed gate
or a rotation (``u3`` with three parameters, ``rz`` with one) reading its
angles from a flat parameter vector.  :meth:`ParamCircuit.cost_grad` returns

    f(theta) = 2d - 2 |tr(V^dagger U(theta))|  =  min_phi ||e^{i phi} U(theta) - V||_F^2

and its exact gradient.  The gradient of ``g = tr(V^dagger U)`` with respect
to a gate ``G_k`` is ``tr(G_k' X_k)`` with ``X_k = B_k V^dagger A_k`` where
``B_k`` and ``A_k`` are the products of the gates before and after ``G_k``;
``X_k`` is reduced to the gate's qubits by a partial trace.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from ..circuit import RZ, U3, Circuit, Gate, GateKind, rz_matrix, u3_matrix


def u3_derivatives(theta: float, phi: float, lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    ep, el, epl = np.exp(1j * phi), np.exp(1j * lam), np.exp(1j * (phi + lam))
    d_theta = 0.5 * np.array([[-s, -el * c], [ep * c, -epl * s]])
    d_phi = np.array([[0, 0], [1j * ep * s, 1j * epl * c]])
    d_lam = np.array([[0, -1j * el * s], [0, 1j * epl * c]])
    return d_theta, d_phi, d_lam


def rz_derivative(theta: float) -> np.ndarray:
    return np.diag([-0.5j * np.exp(-0.5j * theta), 0.5j * np.exp(0.5j * theta)])


@functools.lru_cache(maxsize=None)
def _cnot_perm(control: int, target: int, n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    perm = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    perm.setflags(write=False)
    return perm


def _u3_stack(theta, phi, lam) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty((len(theta), 2, 2), dtype=complex)
    out[:, 0, 0] = c
    out[:, 0, 1] = -np.exp(1j * lam) * s
    out[:, 1, 0] = np.exp(1j * phi) * s
    out[:, 1, 1] = np.exp(1j * (phi + lam)) * c
    return out


def _u3_derivative_stack(theta, phi, lam) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    ep, el, epl = np.exp(1j * phi), np.exp(1j * lam), np.exp(1j * (phi + lam))
    out = np.zeros((3, len(theta), 2, 2), dtype=complex)
    out[0, :, 0, 0] = -0.5 * s
    out[0, :, 0, 1] = -0.5 * el * c
    out[0, :, 1, 0] = 0.5 * ep * c
    out[0, :, 1, 1] = -0.5 * epl * s
    out[1, :, 1, 0] = 1j * ep * s
    out[1, :, 1, 1] = 1j * epl * c
    out[2, :, 0, 1] = -1j * el * s
    out[2, :, 1, 1] = 1j * epl * c
    return out


@dataclass(frozen=True)
class Op:
    kind: GateKind
    qubits: tuple[int, ...]
    offset: int = -1  # first parameter index, -1 for fixed gates
    fixed_params: tuple[float, ...] = ()


@dataclass
class ParamCircuit:
    width: int
    ops: list[Op] = field(default_factory=list)
    num_params: int = 0
    global_phase: float = 0.0

    def add_fixed(self, g: Gate) -> None:
        self.ops.append(Op(g.kind, g.qubits, -1, g.params))

    def add_u3(self, q: int) -> None:
        self.ops.append(Op(GateKind.U3, (q,), self.num_params))
        self.num_params += 3

    def add_rz(self, q: int) -> None:
        self.ops.append(Op(GateKind.RZ, (q,), self.num_params))
        self.num_params += 1

    # --- evaluation -------------------------------------------------------

    def _locals(self, x: np.ndarray) -> list:
        """Per-op data: a CNOT index permutation or a 2x2 matrix."""
        n = self.width
        u3_idx = [k for k, op in enumerate(self.ops) if op.offset >= 0 and op.kind is GateKind.U3]
        rz_idx = [k for k, op in enumerate(self.ops) if op.offset >= 0 and op.kind is GateKind.RZ]
        out: list = [None] * len(self.ops)
        if u3_idx:
            offs = np.array([self.ops[k].offset for k in u3_idx])
            mats = _u3_stack(x[offs], x[offs + 1], x[offs + 2])
            for k, m in zip(u3_idx, mats):
                out[k] = m
        for k in rz_idx:
            out[k] = rz_matrix(x[self.ops[k].offset])
        for k, op in enumerate(self.ops):
            if op.offset < 0:
                if op.kind is GateKind.CNOT:
                    out[k] = _cnot_perm(op.qubits[0], op.qubits[1], n)
                else:
                    out[k] = Gate(op.kind, op.qubits, op.fixed_params).matrix()
        return out

    @staticmethod
    def _left(M: np.ndarray, op: Op, data) -> np.ndarray:
        """Return ``G M``."""
        if op.kind is GateKind.CNOT:
            return M[data]
        q = op.qubits[0]
        return np.matmul(data, M.reshape(M.shape[0] >> (q + 1), 2, -1)).reshape(M.shape)

    @staticmethod
    def _right(M: np.ndarray, op: Op, data) -> np.ndarray:
        """Return ``M G``."""
        if op.kind is GateKind.CNOT:
            return M[:, data]
        q = op.qubits[0]
        return np.matmul(data.T, M.reshape(-1, 2, 1 << q)).reshape(M.shape)

    def matrix(self, x: np.ndarray) -> np.ndarray:
        d = 1 << self.width
        M = np.eye(d, dtype=complex)
        for op, data in zip(self.ops, self._locals(np.asarray(x, dtype=float))):
            M = self._left(M, op, data)
        return M * np.exp(1j * self.global_phase)

    def cost_grad(self, x: np.ndarray, V: np.ndarray) -> tuple[float, np.ndarray]:
        d = 1 << self.width
        x = np.asarray(x, dtype=float)
        local = self._locals(x)
        # forward prefixes B_k (product of gates before op k)
        prefixes = []
        M = np.eye(d, dtype=complex)
        for op, data in zip(self.ops, local):
            prefixes.append(M)
            M = self._left(M, op, data)
        phase = np.exp(1j * self.global_phase)
        g = phase * np.vdot(V, M)  # tr(V^dagger U) including the circuit phase
        absg = abs(g)
        f = 2.0 * d - 2.0 * absg
        grad = np.zeros_like(x)
        if self.num_params == 0:
            return float(f), grad
        w = np.conj(g) / absg if absg > 0 else 1.0
        # backward sweep with C_k = phase V^dagger A_k; Y_k is the partial trace
        # of B_k C_k onto the gate's qubit, Y_k[b, a] = sum_r (B_k C_k)[(b, r), (a, r)]
        C = phase * V.conj().T
        u3_k, u3_y, rz_k, rz_y = [], [], [], []
        for k in range(len(self.ops) - 1, -1, -1):
            op = self.ops[k]
            if op.offset >= 0:
                q = op.qubits[0]
                hi, lo = d >> (q + 1), 1 << q
                left = prefixes[k].reshape(hi, 2, lo, d).transpose(1, 0, 2, 3).reshape(2, -1)
                right = C.reshape(d, hi, 2, lo).transpose(1, 3, 0, 2).reshape(-1, 2)
                if op.kind is GateKind.U3:
                    u3_k.append(op.offset)
                    u3_y.append(left @ right)
                else:
                    rz_k.append(op.offset)
                    rz_y.append(left @ right)
            C = self._right(C, op, local[k])
        if u3_k:
            offs = np.array(u3_k)
            Yt = np.transpose(np.array(u3_y), (0, 2, 1))
            dG = _u3_derivative_stack(x[offs], x[offs + 1], x[offs + 2])  # (3, N, 2, 2)
            dg = np.sum(dG * Yt, axis=(2, 3))
            for j in range(3):
                grad[offs + j] = -2.0 * np.real(w * dg[j])
        if rz_k:
            offs = np.array(rz_k)
            Y = np.array(rz_y)
            t = x[offs]
            # d/dt diag(e^{-it/2}, e^{it/2}) paired with Y[b, a] on the diagonal
            dg = -0.5j * np.exp(-0.5j * t) * Y[:, 0, 0] + 0.5j * np.exp(0.5j * t) * Y[:, 1, 1]
            grad[offs] = -2.0 * np.real(w * dg)
        return float(f), grad

    def residual_jac(self, xp: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Residual ``vec(e^{i phi} U(x) - V)`` as reals, and its Jacobian.

        ``xp`` is the parameter vector with the phase ``phi`` appended.  The
        derivative for a rotation at op ``k`` is ``A_k G_k' B_k``.
        """
        d = 1 << self.width
        xp = np.asarray(xp, dtype=float)
        x, phi = xp[:-1], xp[-1]
        local = self._locals(x)
        prefixes = []
        M = np.eye(d, dtype=complex)
        for op, data in zip(self.ops, local):
            prefixes.append(M)
            M = self._left(M, op, data)
        phase = np.exp(1j * (phi + self.global_phase))
        R = phase * M - V
        cols = np.empty((len(xp), d, d), dtype=complex)
        cols[-1] = 1j * phase * M
        A = phase * np.eye(d, dtype=complex)
        for k in range(len(self.ops) - 1, -1, -1):
            op = self.ops[k]
            if op.offset >= 0:
                if op.kind is GateKind.U3:
                    off = op.offset
                    derivs = _u3_derivative_stack(x[off : off + 1], x[off + 1 : off + 2], x[off + 2 : off + 3])
                    q = op.qubits[0]
                    B = prefixes[k].reshape(1, d >> (q + 1), 2, -1)
                    dB = np.matmul(derivs[:, 0][:, None], B).reshape(3, d, d)
                    cols[off : off + 3] = np.matmul(A, dB)
                else:
                    cols[op.offset] = A @ self._left(prefixes[k], op, rz_derivative(x[op.offset]))
            A = self._right(A, op, local[k])
        flat = cols.reshape(len(xp), -1)
        J = np.concatenate([flat.real, flat.imag], axis=1).T
        r = np.concatenate([R.real.ravel(), R.imag.ravel()])
        return r, J

    def to_circuit(self, x: np.ndarray, global_phase: float = 0.0) -> Circuit:
        gates = []
        for op in self.ops:
            if op.offset < 0:
                gates.append(Gate(op.kind, op.qubits, op.fixed_params))
            elif op.kind is GateKind.U3:
                gates.append(U3(op.qubits[0], *(float(v) for v in x[op.offset : op.offset + 3])))
            else:
                gates.append(RZ(op.qubits[0], float(x[op.offset])))
        return Circuit(self.width, gates, self.global_phase + global_phase)
