"""Circuit intermediate representation and gate library.

A :class:`Circuit` is an immutable ordered list of :class:`Gate` objects on
``width`` qubits plus a global phase.  Qubits are little-endian: qubit 0 is
the least significant bit of a basis index.  For a two-qubit gate the local
matrix index is ``bit(qubits[0]) + 2 * bit(qubits[1])``, so ``CNOT`` with
``qubits=(c, t)`` uses control ``c`` and target ``t``.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InputError
from .linalg import apply_local

MAX_UNITARY_WIDTH = 10
CLIFFORD_ANGLE_TOL = 1e-12


class GateKind(str, enum.Enum):
    U3 = "u3"
    RZ = "rz"
    H = "h"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    X = "x"
    Y = "y"
    Z = "z"
    CNOT = "cx"

    @property
    def num_params(self) -> int:
        return {GateKind.U3: 3, GateKind.RZ: 1}.get(self, 0)

    @property
    def num_qubits(self) -> int:
        return 2 if self is GateKind.CNOT else 1


_SQ2 = 1 / math.sqrt(2)
_FIXED = {
    GateKind.H: np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    GateKind.S: np.diag([1, 1j]).astype(complex),
    GateKind.SDG: np.diag([1, -1j]).astype(complex),
    GateKind.T: np.diag([1, np.exp(1j * math.pi / 4)]),
    GateKind.TDG: np.diag([1, np.exp(-1j * math.pi / 4)]),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.diag([1, -1]).astype(complex),
    # little-endian local index: control is bit 0, target is bit 1
    GateKind.CNOT: np.array(
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
    ),
}
for _m in _FIXED.values():
    _m.setflags(write=False)


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=complex,
    )


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _wrap(angle: float) -> float:
    """Map an angle into (-pi, pi]."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a <= -math.pi else a


def u3_params(M) -> tuple[float, float, float, float]:
    """Return ``(theta, phi, lam, alpha)`` with ``e^{i alpha} U3(theta, phi, lam) = M``.

    ``theta`` lies in ``[0, pi]`` and ``phi``, ``lam``, ``alpha`` in ``(-pi, pi]``.
    When ``theta`` is 0 the split between ``phi`` and ``lam`` is fixed by
    ``phi = 0``; when it is ``pi`` by ``lam = 0``.
    """
    M = np.asarray(M, dtype=complex)
    if M.shape != (2, 2):
        raise InputError(f"expected a 2x2 matrix, got shape {M.shape}")
    a00, a10 = abs(M[0, 0]), abs(M[1, 0])
    theta = 2 * math.atan2(a10, a00)
    tiny = 1e-14
    if a00 >= a10:
        alpha = np.angle(M[0, 0])
        if a10 > tiny:
            phi = np.angle(M[1, 0]) - alpha
            lam = np.angle(-M[0, 1]) - alpha
        else:
            phi, lam = 0.0, np.angle(M[1, 1]) - alpha
    elif a00 > tiny:
        alpha = np.angle(M[1, 0]) + np.angle(-M[0, 1]) - np.angle(M[1, 1])
        phi = np.angle(M[1, 0]) - alpha
        lam = np.angle(-M[0, 1]) - alpha
    else:
        lam = 0.0
        alpha = np.angle(-M[0, 1])
        phi = np.angle(M[1, 0]) - alpha
    return theta, _wrap(float(phi)), _wrap(float(lam)), _wrap(float(alpha))


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.qubits) != kind.num_qubits:
            raise InputError(f"{kind.value} acts on {kind.num_qubits} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise InputError(f"repeated qubit in {kind.value} {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise InputError(f"negative qubit index in {self.qubits}")
        if len(self.params) != kind.num_params:
            raise InputError(f"{kind.value} takes {kind.num_params} parameter(s), got {len(self.params)}")

    def matrix(self) -> np.ndarray:
        if self.kind is GateKind.U3:
            return u3_matrix(*self.params)
        if self.kind is GateKind.RZ:
            return rz_matrix(self.params[0])
        return _FIXED[self.kind]

    def on(self, *qubits: int) -> "Gate":
        return Gate(self.kind, qubits, self.params)


# convenience constructors
def U3(q: int, theta: float, phi: float, lam: float) -> Gate:
    return Gate(GateKind.U3, (q,), (theta, phi, lam))


def RZ(q: int, theta: float) -> Gate:
    return Gate(GateKind.RZ, (q,), (theta,))


def CNOT(control: int, target: int) -> Gate:
    return Gate(GateKind.CNOT, (control, target))


def fixed(kind: GateKind | str, q: int) -> Gate:
    return Gate(GateKind(kind), (q,))


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0

    def __post_init__(self):
        if int(self.width) < 1:
            raise InputError(f"circuit width must be positive, got {self.width}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "global_phase", float(self.global_phase))
        for g in self.gates:
            if max(g.qubits) >= self.width:
                raise InputError(f"gate {g.kind.value}{g.qubits} outside width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def append(self, *gates: Gate) -> "Circuit":
        return Circuit(self.width, self.gates + tuple(gates), self.global_phase)

    def compose(self, other: "Circuit") -> "Circuit":
        """``other`` applied after ``self``; unitary is ``U(other) @ U(self)``."""
        if other.width != self.width:
            raise InputError("cannot compose circuits of different width")
        return Circuit(self.width, self.gates + other.gates, self.global_phase + other.global_phase)

    def with_phase(self, phase: float) -> "Circuit":
        return Circuit(self.width, self.gates, phase)

    def remap(self, qubit_map: Sequence[int], width: int) -> "Circuit":
        """Relabel local qubit ``i`` as ``qubit_map[i]`` inside a ``width``-qubit register."""
        gates = tuple(Gate(g.kind, tuple(qubit_map[q] for q in g.qubits), g.params) for g in self.gates)
        return Circuit(width, gates, self.global_phase)

    def counts(self) -> Counter:
        return Counter(g.kind for g in self.gates)


class ProfileName(str, enum.Enum):
    NISQ = "nisq"
    FT = "ft"


@dataclass(frozen=True)
class GateSetProfile:
    name: ProfileName
    expensive_gate: GateKind
    allowed_kinds: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.expensive_gate not in self.allowed_kinds:
            raise InputError("expensive gate must be in the allowed gate set")


NISQ = GateSetProfile(ProfileName.NISQ, GateKind.CNOT, frozenset({GateKind.U3, GateKind.CNOT}))
FT = GateSetProfile(
    ProfileName.FT,
    GateKind.T,
    frozenset(
        {
            GateKind.H, GateKind.S, GateKind.SDG, GateKind.X, GateKind.Y, GateKind.Z,
            GateKind.CNOT, GateKind.T, GateKind.TDG, GateKind.RZ,
        }
    ),
)


def profile_by_name(name: str) -> GateSetProfile:
    try:
        return {"nisq": NISQ, "ft": FT}[str(name).lower()]
    except KeyError:
        raise InputError(f"unknown gate-set profile '{name}'") from None


def unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of ``c`` (product of gate embeddings, little-endian)."""
    if c.width > MAX_UNITARY_WIDTH:
        raise CapacityError(f"width {c.width} exceeds unitary evaluation cap {MAX_UNITARY_WIDTH}")
    M = np.eye(1 << c.width, dtype=complex)
    for g in c.gates:
        M = apply_local(g.matrix(), g.qubits, M, c.width)
    if c.global_phase:
        M *= np.exp(1j * c.global_phase)
    return M


def is_clifford_angle(theta: float, tol: float = CLIFFORD_ANGLE_TOL) -> bool:
    k = theta / (math.pi / 2)
    return abs(k - round(k)) * (math.pi / 2) <= tol


def count_non_clifford_rz(c: Circuit) -> int:
    return sum(1 for g in c.gates if g.kind is GateKind.RZ and not is_clifford_angle(g.params[0]))


def count_expensive(c: Circuit, profile: GateSetProfile) -> int:
    """Number of expensive gates: CNOTs for NISQ, T/T-dagger for FT.

    For FT this counts only explicit T gates; unlowered RZ gates are counted
    separately by :func:`count_non_clifford_rz`.
    """
    if profile.expensive_gate is GateKind.CNOT:
        return sum(1 for g in c.gates if g.kind is GateKind.CNOT)
    return sum(1 for g in c.gates if g.kind in (GateKind.T, GateKind.TDG))


# --- lowering and peephole simplification ---------------------------------

_DIAGONAL_ANGLE = {
    # kind -> (rz angle, global phase) such that gate = e^{i phase} RZ(angle)
    GateKind.S: (math.pi / 2, math.pi / 4),
    GateKind.SDG: (-math.pi / 2, -math.pi / 4),
    GateKind.Z: (math.pi, math.pi / 2),
    GateKind.T: (math.pi / 4, math.pi / 8),
    GateKind.TDG: (-math.pi / 4, -math.pi / 8),
}
_CLIFFORD_Z = [None, GateKind.S, GateKind.Z, GateKind.SDG]


def _rz_equivalent(g: Gate) -> tuple[float, float] | None:
    if g.kind is GateKind.RZ:
        return g.params[0], 0.0
    return _DIAGONAL_ANGLE.get(g.kind)


def rz_as_gates(q: int, theta: float) -> tuple[list[Gate], float]:
    """Express ``RZ(theta)`` as gates plus a global phase.

    Multiples of pi/2 become ``S``/``Z``/``Sdg`` (or nothing); other angles
    stay as a single RZ with the angle wrapped into ``[-pi, pi]``.
    """
    if is_clifford_angle(theta):
        k = int(round(theta / (math.pi / 2)))
        kind = _CLIFFORD_Z[k % 4]
        phase = -k * math.pi / 4
        return ([] if kind is None else [fixed(kind, q)]), phase
    # RZ(theta + 2 pi k) = (-1)^k RZ(theta)
    wrapped = math.remainder(theta, 2 * math.pi)
    k = round((theta - wrapped) / (2 * math.pi))
    return [RZ(q, wrapped)], math.pi * (k % 2)


def lower_to_clifford_rz(c: Circuit) -> Circuit:
    """Rewrite U3 gates as RZ/H/S sequences and simplify.

    ``U3(t, p, l) = e^{i(p+l)/2} RZ(p) S H RZ(t) H Sdg RZ(l)``.
    """
    gates: list[Gate] = []
    phase = c.global_phase
    for g in c.gates:
        if g.kind is GateKind.U3:
            theta, phi, lam = g.params
            q = g.qubits[0]
            phase += (phi + lam) / 2
            gates += [
                RZ(q, lam), fixed(GateKind.SDG, q), fixed(GateKind.H, q), RZ(q, theta),
                fixed(GateKind.H, q), fixed(GateKind.S, q), RZ(q, phi),
            ]
        else:
            gates.append(g)
    return simplify(Circuit(c.width, gates, phase))


_SELF_INVERSE = {GateKind.H, GateKind.X, GateKind.Y, GateKind.Z, GateKind.CNOT}


def simplify(c: Circuit) -> Circuit:
    """Exact peephole pass.

    Merges runs of diagonal single-qubit gates into one RZ (snapped to a
    Clifford when possible) and cancels adjacent self-inverse pairs.  The
    unitary, including global phase, is preserved.
    """
    gates: list[Gate | None] = list(c.gates)
    phase = c.global_phase
    changed = True
    while changed:
        changed = False
        last_on: dict[int, int] = {}
        out: list[Gate] = []
        for g in gates:
            if g is None:
                continue
            prev_idx = {last_on.get(q) for q in g.qubits}
            prev = out[prev_idx.pop()] if len(prev_idx) == 1 and None not in prev_idx else None
            if prev is not None and prev.qubits == g.qubits:
                if g.kind in _SELF_INVERSE and prev.kind is g.kind:
                    i = last_on[g.qubits[0]]
                    out[i] = None
                    for q in g.qubits:
                        last_on.pop(q, None)
                    # rebuild qubit pointers for the removed gate
                    _repoint(out, last_on, g.qubits)
                    changed = True
                    continue
                a, b = _rz_equivalent(prev), _rz_equivalent(g)
                if a is not None and b is not None:
                    i = last_on[g.qubits[0]]
                    new_gates, ph = rz_as_gates(g.qubits[0], a[0] + b[0])
                    phase += a[1] + b[1] + ph
                    if new_gates:
                        out[i] = new_gates[0]
                    else:
                        out[i] = None
                        _repoint(out, last_on, g.qubits)
                    changed = True
                    continue
            if g.kind is GateKind.RZ:
                new_gates, ph = rz_as_gates(g.qubits[0], g.params[0])
                if new_gates != [g]:
                    phase += ph
                    changed = True
                    if not new_gates:
                        continue
                    g = new_gates[0]
            out.append(g)
            for q in g.qubits:
                last_on[q] = len(out) - 1
        gates = [g for g in out if g is not None]
    return Circuit(c.width, gates, math.remainder(phase, 2 * math.pi))


def _repoint(out: list, last_on: dict, qubits: Iterable[int]) -> None:
    for q in qubits:
        last_on.pop(q, None)
        for j in range(len(out) - 1, -1, -1):
            if out[j] is not None and q in out[j].qubits:
                last_on[q] = j
                break
