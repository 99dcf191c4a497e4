"""Entanglement purification and swapping on Bell-diagonal states.

Two routes are provided for every map:

* closed-form weight maps, used by the rate models, and
* a literal density-matrix execution of the circuits (``oracle_circuit``,
  ``oracle_swap``) against which the closed forms are tested.

Both purification protocols apply a bilateral CNOT with pair 0 as control and
pair 1 as target, measure pair 1 in the Z basis on both sides and keep pair 0
when the two outcomes agree.  DEJMPS first applies Rx(+pi/2) on Alice's qubits
and Rx(-pi/2) on Bob's; BBPSSW instead twirls inputs and output to Werner form.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass

import numpy as np

from .states import (
    PERFECT,
    BellDiagonalState,
    depolarize,
    twirl,
)


class Protocol(str, enum.Enum):
    BBPSSW = "bbpssw"
    DEJMPS = "dejmps"


@dataclass(frozen=True)
class PurificationOutcome:
    output_state: BellDiagonalState
    success_prob: float


@dataclass(frozen=True)
class SwapOutcome:
    output_state: BellDiagonalState
    success_prob: float


@dataclass(frozen=True)
class PurificationSchedule:
    """Purification rounds applied at each nesting level (level 0 first)."""

    rounds_per_level: tuple[int, ...]

    def __post_init__(self):
        r = tuple(int(x) for x in self.rounds_per_level)
        if not r:
            raise ValueError("schedule needs at least one level")
        if any(x < 0 for x in r):
            raise ValueError(f"purification rounds must be >= 0, got {r}")
        object.__setattr__(self, "rounds_per_level", r)

    @classmethod
    def none(cls, nesting_level: int) -> "PurificationSchedule":
        return cls((0,) * (nesting_level + 1))

    @property
    def nesting_level(self) -> int:
        return len(self.rounds_per_level) - 1

    @property
    def total_rounds(self) -> int:
        return sum(self.rounds_per_level)

    def __iter__(self):
        return iter(self.rounds_per_level)

    def __len__(self):
        return len(self.rounds_per_level)

    def __str__(self):
        return "[" + ",".join(map(str, self.rounds_per_level)) + "]"


# --------------------------------------------------------------------------
# closed forms

# DEJMPS pre-rotation exchanges Phi- and Psi- (x -> x xor z)
_DEJMPS_PERM = (0, 3, 2, 1)


def _bilateral_cnot(a, b) -> tuple[np.ndarray, float]:
    """Post-selected bilateral CNOT on Bell-diagonal weights a (control), b (target).

    Returns unnormalised output weights and the acceptance probability.
    Accepts when bit-flip labels agree; the kept pair's phase label is the XOR
    of both phase labels.
    """
    out = np.array([
        a[0] * b[0] + a[1] * b[1],
        a[0] * b[1] + a[1] * b[0],
        a[2] * b[2] + a[3] * b[3],
        a[2] * b[3] + a[3] * b[2],
    ])
    return out, (a[0] + a[1]) * (b[0] + b[1]) + (a[2] + a[3]) * (b[2] + b[3])


def purify_pair(
    control: BellDiagonalState,
    target: BellDiagonalState,
    protocol: Protocol | str = Protocol.DEJMPS,
    gate_error: float = 0.0,
) -> PurificationOutcome:
    """One purification round on two (possibly different) input pairs."""
    protocol = Protocol(protocol)
    if protocol is Protocol.BBPSSW:
        a = twirl(control).weights
        b = twirl(target).weights
    else:
        a = [control.weights[i] for i in _DEJMPS_PERM]
        b = [target.weights[i] for i in _DEJMPS_PERM]
    out, prob = _bilateral_cnot(a, b)
    if prob <= 0.0:
        raise ValueError("purification acceptance probability is zero")
    state = BellDiagonalState.from_array(out / prob, renormalize=True)
    if protocol is Protocol.BBPSSW:
        state = twirl(state)
    if gate_error:
        state = depolarize(state, gate_error)
    return PurificationOutcome(state, float(prob))


def bbpssw_round(state: BellDiagonalState, gate_error: float = 0.0) -> PurificationOutcome:
    if state.fidelity < 0.25:
        raise ValueError(f"BBPSSW needs fidelity >= 0.25, got {state.fidelity}")
    return purify_pair(state, state, Protocol.BBPSSW, gate_error)


def dejmps_round(state: BellDiagonalState, gate_error: float = 0.0) -> PurificationOutcome:
    return purify_pair(state, state, Protocol.DEJMPS, gate_error)


def bbpssw_werner_map(fidelity: float) -> tuple[float, float]:
    """Werner-fidelity form of BBPSSW: (output fidelity, success probability)."""
    f = fidelity
    r = (1.0 - f) / 3.0
    d = f * f + 2.0 * f * r + 5.0 * r * r
    return (f * f + r * r) / d, d


def compose_labels(left, right) -> np.ndarray:
    """Distribution of the XOR of two independent Bell labels."""
    out = np.zeros(4)
    for i in range(4):
        for j in range(4):
            out[i ^ j] += left[i] * right[j]
    return out


def swap(
    left: BellDiagonalState,
    right: BellDiagonalState,
    gate_error: float = 0.0,
    measurement_efficiency: float = 1.0,
) -> SwapOutcome:
    """Entanglement swapping with a deterministic memory-based Bell measurement.

    ``measurement_efficiency`` is carried for bookkeeping only and does not
    change the outcome.
    """
    if not 0 <= gate_error <= 1:
        raise ValueError(f"gate_error must be in [0, 1], got {gate_error}")
    if not 0 < measurement_efficiency <= 1:
        raise ValueError(
            f"measurement_efficiency must be in (0, 1], got {measurement_efficiency}"
        )
    out = compose_labels(left.weights, right.weights)
    state = BellDiagonalState.from_array(out, renormalize=True)
    if gate_error:
        state = depolarize(state, gate_error)
    return SwapOutcome(state, 1.0)


def pump_to_schedule(
    initial: BellDiagonalState,
    rounds: int,
    protocol: Protocol | str = Protocol.DEJMPS,
    gate_error: float = 0.0,
) -> tuple[BellDiagonalState, float]:
    """Apply ``rounds`` symmetric purification rounds.

    Returns the final state and the expected number of input pairs consumed,
    ``2**rounds / prod(success_probs)``.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    state = initial
    pairs = 1.0
    for _ in range(rounds):
        outcome = purify_pair(state, state, protocol, gate_error)
        state = outcome.output_state
        pairs = 2.0 * pairs / outcome.success_prob
    return state, pairs


# --------------------------------------------------------------------------
# density-matrix oracle

_S2 = 1.0 / np.sqrt(2.0)
_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# Pauli applied on Bob's qubit that maps Phi+ to each Bell state
_PAULIS = (_I2, _Z, _X, _X @ _Z)
_PHI_PLUS_KET = np.array([1, 0, 0, 1], dtype=complex) * _S2
BELL_KETS = tuple(np.kron(_I2, p) @ _PHI_PLUS_KET for p in _PAULIS)


def bell_density(state: BellDiagonalState) -> np.ndarray:
    return sum(w * np.outer(k, k.conj()) for w, k in zip(state.weights, BELL_KETS))


def bell_weights(rho: np.ndarray) -> np.ndarray:
    return np.array([np.real(k.conj() @ rho @ k) for k in BELL_KETS])


def _kron(*ops):
    return functools.reduce(np.kron, ops)


def _cnot(control: int, target: int, n: int = 4) -> np.ndarray:
    dim = 2**n
    u = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        bits = [(i >> (n - 1 - k)) & 1 for k in range(n)]
        if bits[control]:
            bits[target] ^= 1
        j = sum(b << (n - 1 - k) for k, b in enumerate(bits))
        u[j, i] = 1.0
    return u


@functools.cache
def _clifford_group() -> tuple[np.ndarray, ...]:
    """The 24 single-qubit Cliffords modulo global phase."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) * _S2
    s = np.diag([1, 1j])
    found: list[np.ndarray] = [_I2]
    frontier = [_I2]

    def known(u):
        for v in found:
            overlap = np.trace(v.conj().T @ u)
            if abs(abs(overlap) - 2.0) < 1e-9:
                return True
        return False

    while frontier:
        nxt = []
        for u in frontier:
            for g in (h, s):
                w = g @ u
                if not known(w):
                    found.append(w)
                    nxt.append(w)
        frontier = nxt
    return tuple(found)


@functools.cache
def _twirl_ops() -> tuple[np.ndarray, ...]:
    # U (x) conj(U) leaves Phi+ invariant and averages the rest isotropically
    return tuple(np.kron(u, u.conj()) for u in _clifford_group())


def _twirl_pair(rho: np.ndarray, which: int | None = None) -> np.ndarray:
    """Apply the isotropic twirl to a 2-qubit state, or to pair ``which`` of 4 qubits."""
    ops = _twirl_ops()
    if which is None:
        full = ops
    elif which == 0:
        full = tuple(np.kron(t, np.eye(4)) for t in ops)
    else:
        full = tuple(np.kron(np.eye(4), t) for t in ops)
    return sum(u @ rho @ u.conj().T for u in full) / len(full)


@functools.cache
def _circuit_unitary(protocol: Protocol) -> np.ndarray:
    # qubit order (A0, B0, A1, B1); pair 0 is kept, pair 1 is measured
    u = _cnot(0, 2) @ _cnot(1, 3)
    if protocol is Protocol.DEJMPS:
        rx_a = (_I2 - 1j * _X) * _S2
        rx_b = (_I2 + 1j * _X) * _S2
        u = u @ _kron(rx_a, rx_b, rx_a, rx_b)
    return u


class TwoPairState:
    """Validated 16x16 density operator of two entangled pairs (A0 B0 A1 B1)."""

    def __init__(self, matrix, atol: float = 1e-12):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (16, 16):
            raise ValueError(f"two-pair state must be 16x16, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
            raise ValueError("two-pair state is not Hermitian")
        if abs(np.trace(m) - 1.0) > atol:
            raise ValueError(f"two-pair state trace is {np.trace(m).real}, expected 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("two-pair state is not positive semidefinite")
        self.matrix = m

    @classmethod
    def product(cls, first: BellDiagonalState, second: BellDiagonalState) -> "TwoPairState":
        return cls(np.kron(bell_density(first), bell_density(second)))


def _depolarize_matrix(rho: np.ndarray, q: float) -> np.ndarray:
    return (1.0 - q) * rho + q * np.eye(rho.shape[0]) / rho.shape[0]


def oracle_branches(
    state: TwoPairState, protocol: Protocol | str
) -> dict[tuple[int, int], tuple[float, np.ndarray]]:
    """Probability and unnormalised kept-pair state for each (a, b) outcome pair."""
    protocol = Protocol(protocol)
    rho = state.matrix
    if protocol is Protocol.BBPSSW:
        rho = _twirl_pair(_twirl_pair(rho, 0), 1)
    u = _circuit_unitary(protocol)
    rho = u @ rho @ u.conj().T
    proj = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    branches = {}
    for a, b in itertools.product((0, 1), repeat=2):
        p = _kron(_I2, _I2, proj[a], proj[b])
        r = (p @ rho @ p).reshape(4, 4, 4, 4)
        kept = np.einsum("ijkj->ik", r)
        branches[(a, b)] = (float(np.real(np.trace(kept))), kept)
    return branches


def oracle_circuit(
    state: TwoPairState, protocol: Protocol | str, noise: float = 0.0
) -> PurificationOutcome:
    """Run a purification round by explicit matrix algebra."""
    protocol = Protocol(protocol)
    branches = oracle_branches(state, protocol)
    kept = branches[(0, 0)][1] + branches[(1, 1)][1]
    prob = float(np.real(np.trace(kept)))
    if prob <= 0:
        raise ValueError("no accepted measurement branch")
    kept = kept / prob
    if protocol is Protocol.BBPSSW:
        kept = _twirl_pair(kept)
    if noise:
        kept = _depolarize_matrix(kept, noise)
    return PurificationOutcome(
        BellDiagonalState.from_array(bell_weights(kept), renormalize=True), prob
    )


def oracle_swap(
    left: BellDiagonalState, right: BellDiagonalState, gate_error: float = 0.0
) -> SwapOutcome:
    """Bell measurement on the two middle qubits with Pauli feed-forward."""
    # qubit order (A, B1, B2, C)
    rho = np.kron(bell_density(left), bell_density(right)).reshape([2] * 8)
    out = np.zeros((4, 4), dtype=complex)
    total = 0.0
    for ket, pauli in zip(BELL_KETS, _PAULIS):
        k = ket.reshape(2, 2)
        # <ket|_{B1 B2} rho |ket>_{B1 B2}
        r = np.einsum("xy,axycbzwd,zw->acbd", k.conj(), rho, k)
        r = r.reshape(4, 4)
        total += float(np.real(np.trace(r)))
        corr = np.kron(_I2, pauli.conj().T)
        out += corr @ r @ corr.conj().T
    if gate_error:
        out = _depolarize_matrix(out, gate_error)
    return SwapOutcome(BellDiagonalState.from_array(bell_weights(out), renormalize=True), total)
