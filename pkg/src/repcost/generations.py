"""Rate, fidelity and resource models for three repeater generations.

* G1: heralded link generation, nested swapping with optional purification.
* G2: heralded link generation feeding encoded teleportation-based CNOTs.
* G3: one-way transmission of loss-tolerant encoded blocks.

Every model returns a :class:`PerformanceReport`; the cost layer only looks at
``rate_secret_bits_per_s``, ``qubits_per_repeater`` and ``repeater_count``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .channel import ChannelModel, link_success_prob, multiplexed_success
from .protocols import Protocol, PurificationSchedule
from .states import PERFECT, BellDiagonalState, depolarize, secret_fraction, werner_state

#: success probabilities below this are treated as a degenerate configuration
UNDERFLOW = 1e-30
#: prefactor of the threshold scaling of the logical error rate
LOGICAL_PREFACTOR = 0.1


class Generation(str, enum.Enum):
    G1 = "G1"
    G2 = "G2"
    G3 = "G3"


class Flag(str, enum.Enum):
    DEGENERATE = "degenerate"
    ABOVE_THRESHOLD = "above_threshold"
    BELOW_LOSS_TOLERANCE = "below_loss_tolerance"
    NO_SECRET_KEY = "no_secret_key"


@dataclass(frozen=True)
class CodeParams:
    """Parameterized quantum error-correcting code.

    ``suppression_exponent`` plays the role of (d+1)/2 in the logical error
    scaling ``0.1 * (gate_error / fault_threshold) ** suppression_exponent``.
    """

    block_size: int = 7
    loss_threshold: float = 0.5
    fault_threshold: float = 1e-2
    suppression_exponent: float = 2.0

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")
        if not 0 < self.loss_threshold < 1:
            raise ValueError(f"loss_threshold must be in (0, 1), got {self.loss_threshold}")
        if not 0 < self.fault_threshold < 1:
            raise ValueError(f"fault_threshold must be in (0, 1), got {self.fault_threshold}")
        if not self.suppression_exponent > 0:
            raise ValueError("suppression_exponent must be > 0")

    def logical_error(self, gate_error: float) -> float:
        return min(
            1.0,
            LOGICAL_PREFACTOR * (gate_error / self.fault_threshold) ** self.suppression_exponent,
        )

    def min_received(self) -> int:
        """Fewest surviving qubits from which the block can be decoded."""
        return math.ceil(self.block_size * (1.0 - self.loss_threshold) - 1e-12)


DEFAULT_G3_CODE = CodeParams(block_size=31, loss_threshold=0.5)


@dataclass(frozen=True)
class RepeaterConfig:
    """One candidate repeater architecture.

    G1 chains have ``2**nesting_level`` links.  G2 and G3 chains are set by
    ``spacing_km``: the number of links is ``ceil(total_distance_km /
    spacing_km)`` and the links tile the distance exactly.  ``link_fidelity``
    is the Werner fidelity of a heralded G1 link before gate noise.
    """

    generation: Generation
    total_distance_km: float
    channel: ChannelModel
    nesting_level: int = 0
    purification_schedule: PurificationSchedule | None = None
    spacing_km: float | None = None
    memory_qubits_per_half_node: int = 1
    attempts_per_round: int = 1
    gate_error: float = 0.0
    local_gate_time_s: float = 1e-6
    code: CodeParams | None = None
    protocol: Protocol = Protocol.DEJMPS
    link_fidelity: float = 1.0

    def __post_init__(self):
        gen = Generation(self.generation)
        object.__setattr__(self, "generation", gen)
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        if not self.total_distance_km > 0:
            raise ValueError("total_distance_km must be > 0")
        if self.nesting_level < 0:
            raise ValueError("nesting_level must be >= 0")
        if self.memory_qubits_per_half_node < 1:
            raise ValueError("memory_qubits_per_half_node must be >= 1")
        if self.attempts_per_round < 1:
            raise ValueError("attempts_per_round must be >= 1")
        if not 0 <= self.gate_error < 1:
            raise ValueError(f"gate_error must be in [0, 1), got {self.gate_error}")
        if not self.local_gate_time_s > 0:
            raise ValueError("local_gate_time_s must be > 0")
        if not 0.25 <= self.link_fidelity <= 1:
            raise ValueError(f"link_fidelity must be in [0.25, 1], got {self.link_fidelity}")
        if gen is Generation.G1:
            sched = self.purification_schedule
            if sched is None:
                sched = PurificationSchedule.none(self.nesting_level)
            elif not isinstance(sched, PurificationSchedule):
                sched = PurificationSchedule(tuple(sched))
            if len(sched) != self.nesting_level + 1:
                raise ValueError(
                    f"purification schedule {sched} needs {self.nesting_level + 1} levels"
                )
            object.__setattr__(self, "purification_schedule", sched)
        else:
            if self.spacing_km is None:
                object.__setattr__(
                    self, "spacing_km", self.total_distance_km / 2**self.nesting_level
                )
            if not self.spacing_km > 0:
                raise ValueError("spacing_km must be > 0")
            if self.code is None:
                code = DEFAULT_G3_CODE if gen is Generation.G3 else CodeParams()
                object.__setattr__(self, "code", code)

    @property
    def links(self) -> int:
        if self.generation is Generation.G1:
            return 2**self.nesting_level
        return max(1, math.ceil(self.total_distance_km / self.spacing_km - 1e-9))

    @property
    def link_length_km(self) -> float:
        return self.total_distance_km / self.links

    @property
    def repeater_count(self) -> int:
        return self.links - 1

    def with_(self, **changes) -> "RepeaterConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class PerformanceReport:
    rate_secret_bits_per_s: float
    end_state: BellDiagonalState
    secret_fraction: float
    qubits_per_repeater: int
    repeater_count: int
    total_time_per_pair_s: float
    success_probability: float
    logical_error: float | None = None
    flags: tuple[Flag, ...] = ()

    @property
    def fidelity(self) -> float:
        return self.end_state.fidelity

    @property
    def total_qubits(self) -> int:
        return self.qubits_per_repeater * (self.repeater_count + 1)


def _report(end_state, time_s, qubits, repeaters, success, logical=None, flags=()):
    flags = tuple(flags)
    sf = secret_fraction(end_state)
    if sf == 0.0 and Flag.NO_SECRET_KEY not in flags:
        flags += (Flag.NO_SECRET_KEY,)
    rate = sf / time_s if (math.isfinite(time_s) and time_s > 0) else 0.0
    if any(f in flags for f in (Flag.DEGENERATE, Flag.ABOVE_THRESHOLD)):
        rate = 0.0
    return PerformanceReport(
        rate_secret_bits_per_s=rate,
        end_state=end_state,
        secret_fraction=sf,
        qubits_per_repeater=qubits,
        repeater_count=repeaters,
        total_time_per_pair_s=time_s,
        success_probability=success,
        logical_error=logical,
        flags=flags,
    )


def elementary_link_state(gate_error: float, link_fidelity: float = 1.0) -> BellDiagonalState:
    """Freshly heralded pair: a Werner state after one noisy local operation."""
    base = PERFECT if link_fidelity == 1.0 else werner_state(link_fidelity)
    return depolarize(base, gate_error)


def g1_link_success(config: RepeaterConfig) -> float:
    p = link_success_prob(config.link_length_km, config.channel)
    return multiplexed_success(p, config.memory_qubits_per_half_node, config.attempts_per_round)


def g1_performance(config: RepeaterConfig) -> PerformanceReport:
    if config.generation is not Generation.G1:
        raise ValueError("g1_performance needs a G1 configuration")
    sched = config.purification_schedule
    qubits = 2 * config.memory_qubits_per_half_node * 2**sched.total_rounds
    p_link = g1_link_success(config)
    link_state = elementary_link_state(config.gate_error, config.link_fidelity)
    if p_link < UNDERFLOW:
        return _report(link_state, math.inf, qubits, config.repeater_count, p_link,
                       flags=(Flag.DEGENERATE,))
    weights, mean_units, _ = kernels.g1_chain(
        link_state.weights,
        sched.rounds_per_level,
        config.protocol is Protocol.DEJMPS,
        config.gate_error,
        p_link,
    )
    unit = config.link_length_km / config.channel.signal_speed_km_per_s
    end_state = BellDiagonalState.from_array(weights, renormalize=True)
    return _report(end_state, mean_units * unit, qubits, config.repeater_count, p_link)


def accumulated_depolarization(logical_error: float, stations: int) -> float:
    """Depolarizing parameter after ``stations`` independent logical errors."""
    return -math.expm1(stations * math.log1p(-logical_error)) if logical_error < 1 else 1.0


def g2_performance(config: RepeaterConfig) -> PerformanceReport:
    if config.generation is not Generation.G2:
        raise ValueError("g2_performance needs a G2 configuration")
    code = config.code
    qubits = 2 * code.block_size * config.memory_qubits_per_half_node
    links = config.links
    if config.gate_error >= code.fault_threshold:
        return _report(BellDiagonalState((0.25,) * 4), math.inf, qubits, links - 1, 0.0,
                       flags=(Flag.ABOVE_THRESHOLD,))
    logical = code.logical_error(config.gate_error)
    end_state = depolarize(PERFECT, accumulated_depolarization(logical, links))
    p = link_success_prob(config.link_length_km, config.channel)
    per_qubit = multiplexed_success(
        p, config.memory_qubits_per_half_node, config.attempts_per_round
    )
    p_block = per_qubit**code.block_size
    if p_block < UNDERFLOW:
        return _report(end_state, math.inf, qubits, links - 1, p_block, logical,
                       flags=(Flag.DEGENERATE,))
    link_time = config.link_length_km / config.channel.signal_speed_km_per_s / p_block
    time_s = max(config.local_gate_time_s, link_time)
    return _report(end_state, time_s, qubits, links - 1, p_block, logical)


def binomial_tail(n: int, s: float, k_min: int) -> float:
    """P[Binomial(n, s) >= k_min]."""
    if k_min <= 0:
        return 1.0
    if k_min > n:
        return 0.0
    return math.fsum(math.comb(n, k) * s**k * (1.0 - s) ** (n - k) for k in range(k_min, n + 1))


def g3_link_success(config: RepeaterConfig) -> tuple[float, float]:
    """(photon survival probability, block decoding probability) for one link."""
    survival = config.channel.coupling_efficiency * math.exp(
        -config.link_length_km / config.channel.attenuation_length_km
    )
    return survival, binomial_tail(config.code.block_size, survival, config.code.min_received())


def g3_performance(config: RepeaterConfig) -> PerformanceReport:
    if config.generation is not Generation.G3:
        raise ValueError("g3_performance needs a G3 configuration")
    code = config.code
    mux = config.memory_qubits_per_half_node
    qubits = 2 * code.block_size * mux
    links = config.links
    flags = []
    if config.gate_error >= code.fault_threshold:
        return _report(BellDiagonalState((0.25,) * 4), math.inf, qubits, links - 1, 0.0,
                       flags=(Flag.ABOVE_THRESHOLD,))
    survival, p_link = g3_link_success(config)
    if 1.0 - survival >= code.loss_threshold:
        flags.append(Flag.BELOW_LOSS_TOLERANCE)
    success = p_link**links
    logical = code.logical_error(config.gate_error)
    end_state = depolarize(PERFECT, accumulated_depolarization(logical, links))
    if success < UNDERFLOW:
        flags.append(Flag.DEGENERATE)
        return _report(end_state, math.inf, qubits, links - 1, success, logical, flags)
    # mux parallel encoded channels, one block per local clock cycle each
    time_s = config.local_gate_time_s / (mux * success)
    return _report(end_state, time_s, qubits, links - 1, success, logical, flags)


def performance(config: RepeaterConfig) -> PerformanceReport:
    return {
        Generation.G1: g1_performance,
        Generation.G2: g2_performance,
        Generation.G3: g3_performance,
    }[config.generation](config)


# --------------------------------------------------------------------------
# Monte Carlo validation of the G1 model

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class MonteCarloReport:
    trials: int
    seed: int
    mean_pair_time_s: float
    pair_time_stderr_s: float
    fidelity: float
    fidelity_stderr: float
    analytic: PerformanceReport
    backend: str = field(default="python")

    @property
    def pair_time_ci95_s(self) -> float:
        return _Z95 * self.pair_time_stderr_s

    @property
    def fidelity_ci95(self) -> float:
        return _Z95 * self.fidelity_stderr

    @property
    def time_relative_error(self) -> float:
        """(analytic - simulated) / simulated mean pair time."""
        return (self.analytic.total_time_per_pair_s - self.mean_pair_time_s) / self.mean_pair_time_s


def simulate_chain_monte_carlo(
    config: RepeaterConfig, trials: int, seed: int
) -> MonteCarloReport:
    """Event-driven sampling of a G1 chain.

    Elementary links take a geometric number of heralding windows, every
    swap or purification waits for both inputs and one classical hop, and
    purification outcomes are sampled from the Bell labels of the input
    pairs, so failed rounds trigger genuine retries.
    """
    if config.generation is not Generation.G1:
        raise ValueError("Monte Carlo validation is implemented for G1 chains")
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    p_link = g1_link_success(config)
    if p_link < UNDERFLOW:
        raise ValueError("link success probability underflows; nothing to simulate")
    rng = np.random.default_rng(seed)
    times, labels = kernels.mc_chain(
        rng,
        trials,
        p_link,
        elementary_link_state(config.gate_error, config.link_fidelity).weights,
        config.purification_schedule.rounds_per_level,
        config.protocol is Protocol.DEJMPS,
        config.gate_error,
    )
    unit = config.link_length_km / config.channel.signal_speed_km_per_s
    times = times * unit
    fid = float(np.mean(labels == 0))
    return MonteCarloReport(
        trials=trials,
        seed=seed,
        mean_pair_time_s=float(times.mean()),
        pair_time_stderr_s=float(times.std(ddof=1) / math.sqrt(trials)),
        fidelity=fid,
        fidelity_stderr=math.sqrt(max(fid * (1.0 - fid), 0.0) / trials),
        analytic=g1_performance(config),
        backend=kernels.BACKEND,
    )
