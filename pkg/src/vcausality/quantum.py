"""Small-dimension pure-state quantum models with +/-1-valued observables.

Basis ordering: party A is the most significant qubit, so ``|0011>`` is
index 3.  Outcome index 0 is eigenvalue +1, index 1 is -1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from .behavior import Behavior

ATOL = 1e-12

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = (PAULI_X + PAULI_Z) / np.sqrt(2)


class NotInvolution(ValueError):
    pass


class NotHermitian(ValueError):
    pass


class DuplicateParty(ValueError):
    pass


def tensor(*matrices: np.ndarray) -> np.ndarray:
    """Kronecker product of the arguments, left to right."""
    if not matrices:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, matrices)


def _inf_norm(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


@dataclass(frozen=True)
class Observable:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"observable {self.label!r} must be 2x2, got {m.shape}")
        if _inf_norm(m - m.conj().T) > ATOL:
            raise NotHermitian(f"observable {self.label!r} is not Hermitian")
        if _inf_norm(m @ m - IDENTITY) > ATOL:
            raise NotInvolution(f"observable {self.label!r} does not square to the identity")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def projectors(o: Observable | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral projectors (P+, P-) = ((I + O)/2, (I - O)/2) of an involution."""
    m = o.matrix if isinstance(o, Observable) else np.asarray(o, dtype=complex)
    ident = np.eye(m.shape[0], dtype=complex)
    if _inf_norm(m @ m - ident) > ATOL:
        raise NotInvolution("O^2 != I; projectors (I +/- O)/2 would be wrong")
    return (ident + m) / 2, (ident - m) / 2


@dataclass(frozen=True)
class QuantumModel:
    """Pure state plus ``observables[party][setting]``."""

    state: np.ndarray
    observables: tuple[tuple[Observable, ...], ...]

    def __post_init__(self):
        psi = np.array(self.state, dtype=complex).reshape(-1)
        obs = tuple(tuple(party) for party in self.observables)
        if psi.size != 2 ** len(obs):
            raise ValueError(f"state dimension {psi.size} != 2^{len(obs)}")
        if abs(np.vdot(psi, psi).real - 1) > ATOL:
            raise ValueError("state is not normalized")
        psi.setflags(write=False)
        object.__setattr__(self, "state", psi)
        object.__setattr__(self, "observables", obs)

    @property
    def parties(self) -> int:
        return len(self.observables)

    @property
    def settings(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.observables)


def apply_local(state: np.ndarray, ops: dict[int, np.ndarray]) -> np.ndarray:
    """Apply single-qubit operators ``{party: 2x2}`` to an n-qubit state vector."""
    n = int(np.log2(state.size))
    psi = state.reshape((2,) * n)
    for party, op in ops.items():
        psi = np.moveaxis(np.tensordot(op, psi, axes=([1], [party])), 0, party)
    return psi.reshape(-1)


def expectation(m: QuantumModel, term: Sequence[tuple[int, int]]) -> float:
    """<psi| O_1 (x) ... (x) I ... |psi> by full operator contraction."""
    parties = [p for p, _ in term]
    if len(set(parties)) != len(parties):
        raise DuplicateParty(f"party repeated in term {list(term)}")
    ops = [IDENTITY] * m.parties
    for p, s in term:
        ops[p] = m.observables[p][s].matrix
    value = np.vdot(m.state, tensor(*ops) @ m.state)
    if abs(value.imag) > ATOL:
        raise ArithmeticError(f"expectation has imaginary part {value.imag}")
    return float(value.real)


def behavior_of(m: QuantumModel) -> Behavior:
    """Outcome distribution <psi| P_a^x (x) P_b^y (x) ... |psi> for every setting tuple."""
    n = m.parties
    projs = [[projectors(o) for o in party] for party in m.observables]
    shape = m.settings + (2,) * n
    table = np.empty(shape, dtype=float)
    for s in itertools.product(*(range(k) for k in m.settings)):
        for o in itertools.product((0, 1), repeat=n):
            phi = apply_local(m.state, {p: projs[p][s[p]][o[p]] for p in range(n)})
            table[s + o] = np.vdot(phi, phi).real
    if table.min() < -1e-14:
        raise ArithmeticError(f"negative probability {table.min()}")
    return Behavior(np.clip(table, 0.0, None), n, atol=ATOL)


# --- the four-qubit model violating S <= 7 ---------------------------------

# (basis label, amplitude); the squared moduli are exact rationals summing to 1
TARGET_AMPLITUDES = (
    ("0000", 17 / 60),
    ("0011", 1 / 3),
    ("0101", -1 / np.sqrt(8)),
    ("0110", 1 / 10),
    ("1000", 1 / 4),
    ("1011", -1 / 2),
    ("1101", -1 / 3),
    ("1110", 1 / 2),
)
TARGET_SQUARED_MODULI = (
    Fraction(289, 3600), Fraction(1, 9), Fraction(1, 8), Fraction(1, 100),
    Fraction(1, 16), Fraction(1, 4), Fraction(1, 9), Fraction(1, 4),
)


def state_from_amplitudes(amplitudes, parties: int) -> np.ndarray:
    psi = np.zeros(2**parties, dtype=complex)
    for label, amp in amplitudes:
        psi[int(label, 2)] = amp
    return psi


def rotation_u(angle: float = 4 * np.pi / 5) -> np.ndarray:
    return np.cos(angle) * PAULI_Z - np.sin(angle) * PAULI_X


def build_paper_model() -> QuantumModel:
    u = rotation_u()
    ud = u.conj().T
    x, z, h = PAULI_X, PAULI_Z, HADAMARD
    observables = (
        (Observable(-u @ x @ ud, "A0"), Observable(u @ z @ ud, "A1")),
        (Observable(h, "B0"), Observable(-x @ h @ x, "B1")),
        (Observable(z, "C0"), Observable(-x, "C1")),
        (Observable(-z, "D0"), Observable(-x, "D1")),
    )
    return QuantumModel(state_from_amplitudes(TARGET_AMPLITUDES, 4), observables)


def ghz_model(parties: int = 3) -> QuantumModel:
    """(|0...0> + |1...1>)/sqrt(2) with sigma_z (setting 0) and sigma_x (setting 1)."""
    psi = np.zeros(2**parties, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    obs = tuple(
        (Observable(PAULI_Z, f"{i}z"), Observable(PAULI_X, f"{i}x")) for i in range(parties)
    )
    return QuantumModel(psi, obs)


def product_state_model(bits: str, observables) -> QuantumModel:
    """Computational basis state ``|bits>`` with the given observables."""
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1
    return QuantumModel(psi, observables)
