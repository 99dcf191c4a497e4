"""Bell-diagonal two-qubit states and key extraction.

Weights are always ordered (Phi+, Phi-, Psi+, Psi-).  Index ``i`` encodes the
Pauli error relative to Phi+ as ``i = 2*x + z`` where ``x`` is a bit flip and
``z`` a phase flip, so composing errors is a bitwise XOR of indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS = range(4)
LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class BellDiagonalState:
    weights: tuple[float, float, float, float]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != 4:
            raise ValueError("a Bell-diagonal state has exactly four weights")
        if any(not (-_SUM_TOL <= x <= 1 + _SUM_TOL) for x in w):
            raise ValueError(f"weights must lie in [0, 1], got {w}")
        if abs(math.fsum(w) - 1.0) > _SUM_TOL:
            raise ValueError(f"weights must sum to 1, got sum {math.fsum(w)!r}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_array(cls, arr, renormalize: bool = False) -> "BellDiagonalState":
        w = np.asarray(arr, dtype=float).clip(min=0.0)
        if renormalize:
            w = w / w.sum()
        return cls(tuple(w))

    @property
    def fidelity(self) -> float:
        return self.weights[PHI_PLUS]

    def as_array(self) -> np.ndarray:
        return np.array(self.weights)

    def error_rates(self) -> tuple[float, float]:
        """Return (e_Z, e_X): bit-error rates in the Z and X measurement bases."""
        _, pm, pp, mm = self.weights
        return pp + mm, pm + mm


PERFECT = BellDiagonalState((1.0, 0.0, 0.0, 0.0))
MAXIMALLY_MIXED = BellDiagonalState((0.25, 0.25, 0.25, 0.25))


def werner_state(fidelity: float) -> BellDiagonalState:
    if not 0.25 <= fidelity <= 1:
        raise ValueError(f"Werner fidelity must be in [0.25, 1], got {fidelity}")
    r = (1.0 - fidelity) / 3.0
    return BellDiagonalState((fidelity, r, r, r))


def twirl(state: BellDiagonalState) -> BellDiagonalState:
    """Isotropic twirl: keep the fidelity, spread the rest evenly."""
    f = state.fidelity
    r = (1.0 - f) / 3.0
    return BellDiagonalState((f, r, r, r))


def depolarize(state: BellDiagonalState, error_prob: float) -> BellDiagonalState:
    """With probability ``error_prob`` replace the pair by the maximally mixed state."""
    if not 0 <= error_prob <= 1:
        raise ValueError(f"error_prob must be in [0, 1], got {error_prob}")
    q = error_prob
    return BellDiagonalState(tuple((1.0 - q) * w + 0.25 * q for w in state.weights))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def secret_fraction(state: BellDiagonalState) -> float:
    """Asymptotic entanglement-based BB84 key fraction, one-way postprocessing."""
    e_z, e_x = state.error_rates()
    if e_z >= 0.5 or e_x >= 0.5:
        return 0.0
    return max(0.0, 1.0 - binary_entropy(e_z) - binary_entropy(e_x))
