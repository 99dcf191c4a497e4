"""Cost coefficient and exhaustive grid optimisation over architectures."""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .channel import ChannelModel
from .generations import (
    UNDERFLOW,
    CodeParams,
    Generation,
    PerformanceReport,
    RepeaterConfig,
    elementary_link_state,
    g1_link_success,
    performance,
)
from .protocols import Protocol, PurificationSchedule


@dataclass(frozen=True)
class CostReport:
    """Cost of one configuration.

    ``cost_coefficient`` is qubit-seconds per secret bit per km over the whole
    chain.  ``eq1_form`` is the literal rate * qubits-per-repeater / spacing
    product, kept alongside for comparison.
    """

    cost_coefficient: float
    eq1_form: float
    config: RepeaterConfig
    performance: PerformanceReport

    @property
    def viable(self) -> bool:
        return math.isfinite(self.cost_coefficient)

    def sort_key(self) -> tuple:
        c = self.config
        sched = c.purification_schedule.rounds_per_level if c.purification_schedule else ()
        return (
            self.cost_coefficient,
            self.performance.total_qubits,
            c.nesting_level,
            c.link_length_km,
            c.memory_qubits_per_half_node,
            c.attempts_per_round,
            sched,
            c.spacing_km or 0.0,
        )


def cost_from_performance(
    perf: PerformanceReport, total_distance_km: float
) -> float:
    total_qubits = perf.qubits_per_repeater * (perf.repeater_count + 1)
    if perf.rate_secret_bits_per_s <= 0:
        return math.inf
    return total_qubits / (perf.rate_secret_bits_per_s * total_distance_km)


def cost_coefficient(config: RepeaterConfig) -> CostReport:
    perf = performance(config)
    return CostReport(
        cost_coefficient=cost_from_performance(perf, config.total_distance_km),
        eq1_form=perf.rate_secret_bits_per_s * perf.qubits_per_repeater / config.link_length_km,
        config=config,
        performance=perf,
    )


# --------------------------------------------------------------------------
# search space


class ScheduleMode(str, enum.Enum):
    EXHAUSTIVE = "exhaustive"
    STEP = "step"
    AUTO = "auto"


@dataclass(frozen=True)
class SearchSpace:
    """Grid of architecture parameters.

    ``schedule_mode`` controls which G1 purification schedules are tried:
    every per-level combination (``exhaustive``), or two-value step schedules
    ``(a,)*j + (b,)*(n+1-j)`` (``step``).  ``auto`` is exhaustive while the
    count per nesting level stays within ``exhaustive_limit``.  ``spacings_km=None`` means a
    log grid of ``spacing_points`` values from ``spacing_min_km`` to
    ``spacing_max_km`` (L_tot when unset).
    """

    nesting_levels: tuple[int, ...] = (0, 1, 2, 3, 4)
    purification_rounds: tuple[int, ...] = (0, 1, 2, 3)
    schedule_mode: ScheduleMode = ScheduleMode.AUTO
    exhaustive_limit: int = 4**10
    spacings_km: tuple[float, ...] | None = None
    spacing_points: int = 40
    spacing_min_km: float = 1.0
    spacing_max_km: float | None = None
    memory_qubits: tuple[int, ...] = (1, 10, 100)
    attempts: tuple[int, ...] = (1,)

    def __post_init__(self):
        object.__setattr__(self, "schedule_mode", ScheduleMode(self.schedule_mode))
        for name in ("nesting_levels", "purification_rounds", "memory_qubits", "attempts"):
            vals = tuple(int(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, vals)
        if min(self.nesting_levels) < 0 or min(self.purification_rounds) < 0:
            raise ValueError("nesting levels and purification rounds must be >= 0")
        if min(self.memory_qubits) < 1 or min(self.attempts) < 1:
            raise ValueError("memory_qubits and attempts must be >= 1")
        if self.spacings_km is not None:
            sp = tuple(float(s) for s in self.spacings_km)
            if not sp or min(sp) <= 0:
                raise ValueError("spacings_km must be nonempty and positive")
            object.__setattr__(self, "spacings_km", sp)
        if self.spacing_points < 1 or not self.spacing_min_km > 0:
            raise ValueError("spacing_points must be >= 1 and spacing_min_km > 0")
        if self.spacing_max_km is not None and self.spacing_max_km < self.spacing_min_km:
            raise ValueError("spacing_max_km must be >= spacing_min_km")

    @property
    def round_choices(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.purification_rounds)))

    def is_exhaustive(self, nesting_level: int) -> bool:
        if self.schedule_mode is ScheduleMode.AUTO:
            return len(self.round_choices) ** (nesting_level + 1) <= self.exhaustive_limit
        return self.schedule_mode is ScheduleMode.EXHAUSTIVE

    def schedules(self, nesting_level: int) -> list[tuple[int, ...]]:
        levels = nesting_level + 1
        rounds = self.round_choices
        if self.is_exhaustive(nesting_level):
            return [tuple(s) for s in itertools.product(rounds, repeat=levels)]
        out = set()
        for a, b in itertools.product(rounds, repeat=2):
            for j in range(levels + 1):
                out.add((a,) * j + (b,) * (levels - j))
        return sorted(out)

    def spacing_grid(self, channel: ChannelModel, total_distance_km: float) -> tuple[float, ...]:
        if self.spacings_km is not None:
            return self.spacings_km
        hi = float(total_distance_km if self.spacing_max_km is None else self.spacing_max_km)
        lo = min(self.spacing_min_km, hi)
        if hi <= lo or self.spacing_points == 1:
            return (hi,)
        return tuple(float(x) for x in np.geomspace(lo, hi, self.spacing_points))


@dataclass(frozen=True)
class FixedParams:
    generation: Generation
    total_distance_km: float
    gate_error: float
    channel: ChannelModel
    local_gate_time_s: float = 1e-6
    code: CodeParams | None = None
    protocol: Protocol = Protocol.DEJMPS
    link_fidelity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "generation", Generation(self.generation))
        object.__setattr__(self, "protocol", Protocol(self.protocol))


def enumerate_configs(space: SearchSpace, fixed: FixedParams) -> Iterator[RepeaterConfig]:
    base = dict(
        generation=fixed.generation,
        total_distance_km=fixed.total_distance_km,
        channel=fixed.channel,
        gate_error=fixed.gate_error,
        local_gate_time_s=fixed.local_gate_time_s,
        protocol=fixed.protocol,
        link_fidelity=fixed.link_fidelity,
    )
    if fixed.generation is Generation.G1:
        for n in space.nesting_levels:
            for sched in space.schedules(n):
                for m in space.memory_qubits:
                    for a in space.attempts:
                        yield RepeaterConfig(
                            nesting_level=n,
                            purification_schedule=PurificationSchedule(sched),
                            memory_qubits_per_half_node=m,
                            attempts_per_round=a,
                            **base,
                        )
    else:
        seen = set()
        for sp in space.spacing_grid(fixed.channel, fixed.total_distance_km):
            for m in space.memory_qubits:
                for a in space.attempts:
                    cfg = RepeaterConfig(
                        spacing_km=sp,
                        memory_qubits_per_half_node=m,
                        attempts_per_round=a,
                        code=fixed.code,
                        **base,
                    )
                    # spacings that round to the same number of links are duplicates
                    key = (cfg.links, m, a)
                    if key in seen:
                        continue
                    seen.add(key)
                    yield cfg


def grid_size(space: SearchSpace, fixed: FixedParams) -> int:
    return sum(1 for _ in enumerate_configs(space, fixed))


@dataclass(frozen=True)
class OptimizationResult:
    best: CostReport | None
    ranked: tuple[CostReport, ...]
    evaluated: int

    @property
    def viable(self) -> bool:
        return self.best is not None


def _evaluate(configs: Sequence[RepeaterConfig]) -> list[CostReport]:
    return [cost_coefficient(c) for c in configs]


def select_best(reports: Iterable[CostReport], top_k: int = 5, evaluated: int | None = None
                ) -> OptimizationResult:
    """Rank reports with the deterministic tie-break; drop non-viable ones."""
    reports = list(reports)
    viable = sorted((r for r in reports if r.viable), key=CostReport.sort_key)
    return OptimizationResult(
        best=viable[0] if viable else None,
        ranked=tuple(viable[:top_k]),
        evaluated=len(reports) if evaluated is None else evaluated,
    )


def _g1_candidates(
    space: SearchSpace, fixed: FixedParams, top_k: int
) -> tuple[int, list[RepeaterConfig]]:
    """Count the G1 grid and shortlist the cheapest schedules of each cell.

    Exhaustive schedule sets go through the sweep kernel, which shares work
    between schedules with a common prefix; only the ``top_k`` cheapest (plus
    exact ties) come back as configs.  Step families are returned whole.
    """
    choices = space.round_choices
    evaluated = 0
    shortlist = []
    for n in space.nesting_levels:
        exhaustive = space.is_exhaustive(n)
        for m in space.memory_qubits:
            for a in space.attempts:
                base = RepeaterConfig(
                    generation=Generation.G1,
                    total_distance_km=fixed.total_distance_km,
                    channel=fixed.channel,
                    nesting_level=n,
                    memory_qubits_per_half_node=m,
                    attempts_per_round=a,
                    gate_error=fixed.gate_error,
                    local_gate_time_s=fixed.local_gate_time_s,
                    protocol=fixed.protocol,
                    link_fidelity=fixed.link_fidelity,
                )
                if not exhaustive:
                    scheds = space.schedules(n)
                    evaluated += len(scheds)
                    shortlist.extend(
                        base.with_(purification_schedule=PurificationSchedule(s))
                        for s in scheds
                    )
                    continue
                evaluated += len(choices) ** (n + 1)
                p_link = g1_link_success(base)
                if p_link < UNDERFLOW:
                    continue
                costs = kernels.g1_schedule_costs(
                    elementary_link_state(fixed.gate_error, fixed.link_fidelity).weights,
                    choices,
                    n,
                    fixed.protocol is Protocol.DEJMPS,
                    fixed.gate_error,
                    p_link,
                    base.link_length_km / fixed.channel.signal_speed_km_per_s,
                    float(m),
                    fixed.total_distance_km,
                )
                n_finite = int(np.isfinite(costs).sum())
                if n_finite == 0:
                    continue
                k = min(top_k, n_finite)
                threshold = costs[np.argpartition(costs, k - 1)[:k]].max()
                for idx in np.flatnonzero(costs <= threshold):
                    digits = np.unravel_index(idx, (len(choices),) * (n + 1))
                    sched = tuple(choices[d] for d in digits)
                    shortlist.append(base.with_(purification_schedule=PurificationSchedule(sched)))
    return evaluated, shortlist


def optimize(
    space: SearchSpace,
    fixed: FixedParams,
    top_k: int = 5,
    workers: int = 1,
) -> OptimizationResult:
    """Exhaustive search for the configuration with minimal cost coefficient.

    Ties are broken by fewer total qubits, then lower nesting level, then
    shorter spacing, so the result does not depend on enumeration order.
    """
    if fixed.generation is Generation.G1:
        evaluated, configs = _g1_candidates(space, fixed, top_k)
    else:
        configs = list(enumerate_configs(space, fixed))
        evaluated = len(configs)
        if not configs:
            raise ValueError("search space is empty")
    if workers > 1 and len(configs) > 256:
        chunks = [configs[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            reports = [r for part in pool.map(_evaluate, chunks) for r in part]
    else:
        reports = _evaluate(configs)
    return select_best(reports, top_k, evaluated)


class SweepAxis(str, enum.Enum):
    COUPLING_EFFICIENCY = "coupling_efficiency"
    TOTAL_DISTANCE = "total_distance"
    GATE_ERROR = "gate_error"


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    result: OptimizationResult


def apply_axis(fixed: FixedParams, axis: SweepAxis, value: float) -> FixedParams:
    axis = SweepAxis(axis)
    if axis is SweepAxis.COUPLING_EFFICIENCY:
        return replace(fixed, channel=fixed.channel.with_coupling(value))
    if axis is SweepAxis.TOTAL_DISTANCE:
        return replace(fixed, total_distance_km=value)
    return replace(fixed, gate_error=value)


def sweep(
    axis: SweepAxis | str,
    values: Sequence[float],
    fixed: FixedParams,
    space: SearchSpace,
    workers: int = 1,
) -> list[SweepRow]:
    axis = SweepAxis(axis)
    values = [float(v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("sweep values must be sorted ascending")
    return [
        SweepRow(v, optimize(space, apply_axis(fixed, axis, v), workers=workers))
        for v in values
    ]
