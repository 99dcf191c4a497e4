"""Photon transmission through fiber and vacuum beam guide (VBG) links."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class Medium(str, enum.Enum):
    FIBER = "fiber"
    VBG = "vbg"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ChannelModel:
    """Transmission medium between neighbouring stations.

    Parameters
    ----------
    medium : Medium
        Label only; all physics goes through the numeric fields.
    attenuation_length_km : float
        Distance over which transmissivity drops by a factor e.
    coupling_efficiency : float
        Distance independent collection/detection efficiency, in (0, 1].
    signal_speed_km_per_s : float
        Speed of the classical heralding signal.
    """

    medium: Medium
    attenuation_length_km: float
    coupling_efficiency: float = 1.0
    signal_speed_km_per_s: float = 2.0e5

    def __post_init__(self):
        object.__setattr__(self, "medium", Medium(self.medium))
        if not self.attenuation_length_km > 0:
            raise ValueError(
                f"attenuation_length_km must be > 0, got {self.attenuation_length_km}"
            )
        if not 0 < self.coupling_efficiency <= 1:
            raise ValueError(
                f"coupling_efficiency must be in (0, 1], got {self.coupling_efficiency}"
            )
        if not self.signal_speed_km_per_s > 0:
            raise ValueError(
                f"signal_speed_km_per_s must be > 0, got {self.signal_speed_km_per_s}"
            )

    def with_coupling(self, coupling_efficiency: float) -> "ChannelModel":
        return replace(self, coupling_efficiency=coupling_efficiency)

    @classmethod
    def fiber(cls, coupling_efficiency: float = 1.0) -> "ChannelModel":
        return cls(Medium.FIBER, 20.0, coupling_efficiency, 2.0e5)

    @classmethod
    def vbg(cls, coupling_efficiency: float = 1.0) -> "ChannelModel":
        return cls(Medium.VBG, 42000.0, coupling_efficiency, 3.0e5)

    @classmethod
    def preset(cls, name: str, **overrides) -> "ChannelModel":
        """Build a channel from a preset name ("fiber", "vbg", "custom")."""
        name = name.lower()
        if name == "fiber":
            base = cls.fiber()
        elif name == "vbg":
            base = cls.vbg()
        elif name == "custom":
            if "attenuation_length_km" not in overrides:
                raise ValueError("custom channel requires attenuation_length_km")
            base = cls(Medium.CUSTOM, overrides["attenuation_length_km"])
        else:
            raise ValueError(f"unknown channel preset {name!r}; expected fiber, vbg or custom")
        return replace(base, **overrides) if overrides else base


def transmissivity(length_km: float, channel: ChannelModel) -> float:
    if length_km < 0:
        raise ValueError(f"length_km must be >= 0, got {length_km}")
    return math.exp(-length_km / channel.attenuation_length_km)


def link_success_prob(spacing_km: float, channel: ChannelModel) -> float:
    """Single-trial heralded entanglement probability between adjacent memories.

    The factor 1/2 accounts for the linear-optics Bell measurement at the
    midpoint station.
    """
    if not spacing_km > 0:
        raise ValueError(f"spacing_km must be > 0, got {spacing_km}")
    return 0.5 * channel.coupling_efficiency * transmissivity(spacing_km, channel)


def multiplexed_success(p: float, memory_qubits: int, attempts: int) -> float:
    """Probability that at least one of ``memory_qubits * attempts`` trials succeeds."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if memory_qubits < 1 or attempts < 1:
        raise ValueError("memory_qubits and attempts must be >= 1")
    n = memory_qubits * attempts
    if p == 1:
        return 1.0
    # 1 - (1-p)^n without cancellation for small p
    return -math.expm1(n * math.log1p(-p))


def plob_capacity(transmissivity: float) -> float:
    """Repeaterless secret-key capacity, in bits per mode, of a pure-loss channel."""
    if transmissivity == 1:
        raise ValueError("PLOB capacity diverges at transmissivity 1")
    if not 0 <= transmissivity < 1:
        raise ValueError(f"transmissivity must be in [0, 1), got {transmissivity}")
    return -math.log1p(-transmissivity) / math.log(2)
