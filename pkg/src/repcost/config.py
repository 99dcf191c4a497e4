"""Declarative run configurations (TOML).

A run file has four kinds of table::

    [scenario]           name, description, seed, output_file
    [sweep]              axis plus either ``values`` or ``start``/``stop``/``num``
    [search]             optimizer grid bounds
    [monte_carlo]        optional G1 validation (``trials = 0`` disables)
    [[series]]           one optimized curve each: generation, channel, fixed params

Physical quantities carry their unit in the key (``_km``, ``_s``,
``_km_per_s``).  Unknown keys are errors.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .channel import ChannelModel, Medium
from .generations import DEFAULT_G3_CODE, CodeParams, Generation
from .optimizer import FixedParams, ScheduleMode, SearchSpace, SweepAxis
from .protocols import Protocol

BUILTIN_PREFIX = "builtin:"


class ConfigError(ValueError):
    """Invalid run configuration; ``issues`` lists every problem found."""

    def __init__(self, issues: list[str]):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


@dataclass(frozen=True)
class SeriesSpec:
    label: str
    fixed: FixedParams


@dataclass(frozen=True)
class MonteCarloSpec:
    trials: int = 0
    max_nesting: int = 2


@dataclass(frozen=True)
class RunConfig:
    name: str
    description: str
    seed: int
    output_file: str
    axis: SweepAxis
    values: tuple[float, ...]
    space: SearchSpace
    series: tuple[SeriesSpec, ...]
    monte_carlo: MonteCarloSpec = field(default_factory=MonteCarloSpec)
    source: str = ""

    def resolved(self) -> list[tuple[str, Any]]:
        """Flat (key, value) listing of every parameter after defaults."""
        sp = self.space
        out = [
            ("scenario.name", self.name),
            ("scenario.description", self.description),
            ("scenario.seed", self.seed),
            ("scenario.output_file", self.output_file),
            ("sweep.axis", self.axis.value),
            ("sweep.values", list(self.values)),
            ("search.nesting_levels", list(sp.nesting_levels)),
            ("search.purification_rounds", list(sp.purification_rounds)),
            ("search.schedule_mode", sp.schedule_mode.value),
            ("search.exhaustive_limit", sp.exhaustive_limit),
            ("search.memory_qubits", list(sp.memory_qubits)),
            ("search.attempts", list(sp.attempts)),
        ]
        if sp.spacings_km is not None:
            out.append(("search.spacings_km", list(sp.spacings_km)))
        else:
            out += [
                ("search.spacing_min_km", sp.spacing_min_km),
                ("search.spacing_max_km", sp.spacing_max_km if sp.spacing_max_km else "total_distance_km"),
                ("search.spacing_points", sp.spacing_points),
            ]
        out += [
            ("monte_carlo.trials", self.monte_carlo.trials),
            ("monte_carlo.max_nesting", self.monte_carlo.max_nesting),
        ]
        for i, s in enumerate(self.series):
            f = s.fixed
            p = f"series[{i}]"
            out += [
                (f"{p}.label", s.label),
                (f"{p}.generation", f.generation.value),
                (f"{p}.medium", f.channel.medium.value),
                (f"{p}.attenuation_length_km", f.channel.attenuation_length_km),
                (f"{p}.coupling_efficiency", f.channel.coupling_efficiency),
                (f"{p}.signal_speed_km_per_s", f.channel.signal_speed_km_per_s),
                (f"{p}.total_distance_km", f.total_distance_km),
                (f"{p}.gate_error", f.gate_error),
                (f"{p}.local_gate_time_s", f.local_gate_time_s),
                (f"{p}.protocol", f.protocol.value),
                (f"{p}.link_fidelity", f.link_fidelity),
            ]
            if f.code is not None:
                for k in ("block_size", "loss_threshold", "fault_threshold", "suppression_exponent"):
                    out.append((f"{p}.code.{k}", getattr(f.code, k)))
        return out


# --------------------------------------------------------------------------
# parsing helpers


class _Issues:
    def __init__(self):
        self.items: list[str] = []

    def add(self, msg: str):
        self.items.append(msg)

    def check_keys(self, table: dict, allowed: set[str], where: str):
        for key in table:
            if key not in allowed:
                self.add(f"{where}.{key}: unknown key (allowed: {', '.join(sorted(allowed))})")


def _get(table, key, where, issues, kind, default=None, required=False, check=None, what=""):
    if key not in table:
        if required:
            issues.add(f"{where}.{key}: missing required value{what}")
        return default
    val = table[key]
    try:
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise TypeError
            val = float(val)
        elif kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                raise TypeError
        elif kind is str:
            if not isinstance(val, str):
                raise TypeError
    except TypeError:
        issues.add(f"{where}.{key}: expected {kind.__name__}, got {val!r}")
        return default
    if check is not None:
        ok, constraint = check
        if not ok(val):
            issues.add(f"{where}.{key}: must be {constraint}, got {val!r}")
            return default
    return val


def _int_list(table, key, where, issues, default, minimum):
    if key not in table:
        return default
    val = table[key]
    if (
        not isinstance(val, list)
        or not val
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in val)
    ):
        issues.add(f"{where}.{key}: expected a nonempty list of integers")
        return default
    if min(val) < minimum:
        issues.add(f"{where}.{key}: entries must be >= {minimum}")
        return default
    return tuple(val)


def _enum(table, key, where, issues, enum_cls, default=None, required=False):
    accepted = ", ".join(repr(m.value) for m in enum_cls)
    if key not in table:
        if required:
            issues.add(f"{where}.{key}: missing required value (accepted: {accepted})")
        return default
    try:
        return enum_cls(table[key])
    except ValueError:
        issues.add(f"{where}.{key}: {table[key]!r} is not one of {accepted}")
        return default


_POSITIVE = (lambda v: v > 0, "> 0")
_UNIT = (lambda v: 0 <= v < 1, "in [0, 1)")
_OPEN_UNIT = (lambda v: 0 < v < 1, "in (0, 1)")
_COUPLING = (lambda v: 0 < v <= 1, "in (0, 1]")


def _parse_sweep(table, issues) -> tuple[SweepAxis | None, tuple[float, ...]]:
    where = "sweep"
    issues.check_keys(table, {"axis", "values", "values_km", "start", "stop", "num", "spacing"}, where)
    axis = _enum(table, "axis", where, issues, SweepAxis, required=True)
    # distances carry a unit, the dimensionless axes do not
    key = "values_km" if axis is SweepAxis.TOTAL_DISTANCE else "values"
    other = "values" if key == "values_km" else "values_km"
    if other in table:
        issues.add(f"{where}.{other}: use {key!r} for axis {axis.value if axis else '?'}")
    if key in table:
        raw = table[key]
        if not isinstance(raw, list) or not raw or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
        ):
            issues.add(f"{where}.{key}: expected a nonempty list of numbers")
            return axis, ()
        values = tuple(float(v) for v in raw)
    elif "start" in table or "stop" in table:
        start = _get(table, "start", where, issues, float, required=True)
        stop = _get(table, "stop", where, issues, float, required=True)
        num = _get(table, "num", where, issues, int, required=True, check=_POSITIVE)
        spacing = table.get("spacing", "linear")
        if spacing not in ("linear", "log"):
            issues.add(f"{where}.spacing: {spacing!r} is not one of 'linear', 'log'")
            return axis, ()
        if None in (start, stop, num):
            return axis, ()
        if spacing == "log":
            if start <= 0 or stop <= 0:
                issues.add(f"{where}.start: log spacing needs positive start and stop")
                return axis, ()
            grid = np.geomspace(start, stop, num)
        else:
            grid = np.linspace(start, stop, num)
        # round away float noise so labels and CSV cells stay tidy
        values = tuple(float(f"{v:.12g}") for v in grid)
    else:
        issues.add(f"{where}.{key}: missing sweep values (give {key!r} or start/stop/num)")
        return axis, ()
    if any(b < a for a, b in zip(values, values[1:])):
        issues.add(f"{where}.{key}: values must be sorted ascending")
    if axis is SweepAxis.COUPLING_EFFICIENCY and not all(0 < v <= 1 for v in values):
        issues.add(f"{where}.{key}: coupling efficiencies must be in (0, 1]")
    elif axis is SweepAxis.GATE_ERROR and not all(0 <= v < 1 for v in values):
        issues.add(f"{where}.{key}: gate errors must be in [0, 1)")
    elif axis is SweepAxis.TOTAL_DISTANCE and not all(v > 0 for v in values):
        issues.add(f"{where}.{key}: distances must be > 0")
    return axis, values


def _parse_search(table, issues) -> SearchSpace:
    where = "search"
    issues.check_keys(
        table,
        {
            "nesting_levels", "purification_rounds", "schedule_mode", "exhaustive_limit",
            "memory_qubits", "attempts", "spacings_km", "spacing_min_km", "spacing_max_km",
            "spacing_points",
        },
        where,
    )
    d = SearchSpace()
    kw = dict(
        nesting_levels=_int_list(table, "nesting_levels", where, issues, d.nesting_levels, 0),
        purification_rounds=_int_list(
            table, "purification_rounds", where, issues, d.purification_rounds, 0
        ),
        memory_qubits=_int_list(table, "memory_qubits", where, issues, d.memory_qubits, 1),
        attempts=_int_list(table, "attempts", where, issues, d.attempts, 1),
        schedule_mode=_enum(table, "schedule_mode", where, issues, ScheduleMode, d.schedule_mode),
        exhaustive_limit=_get(
            table, "exhaustive_limit", where, issues, int, d.exhaustive_limit, check=_POSITIVE
        ),
        spacing_min_km=_get(
            table, "spacing_min_km", where, issues, float, d.spacing_min_km, check=_POSITIVE
        ),
        spacing_max_km=_get(table, "spacing_max_km", where, issues, float, None, check=_POSITIVE),
        spacing_points=_get(
            table, "spacing_points", where, issues, int, d.spacing_points, check=_POSITIVE
        ),
    )
    if "spacings_km" in table:
        raw = table["spacings_km"]
        if not isinstance(raw, list) or not raw or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in raw
        ):
            issues.add(f"{where}.spacings_km: expected a nonempty list of positive numbers")
        else:
            kw["spacings_km"] = tuple(float(v) for v in raw)
    try:
        return SearchSpace(**kw)
    except ValueError as exc:
        issues.add(f"{where}: {exc}")
        return d


def _parse_code(table, where, issues, generation) -> CodeParams | None:
    base = DEFAULT_G3_CODE if generation is Generation.G3 else CodeParams()
    if table is None:
        return base if generation in (Generation.G2, Generation.G3) else None
    if not isinstance(table, dict):
        issues.add(f"{where}: expected a table")
        return base
    issues.check_keys(
        table, {"block_size", "loss_threshold", "fault_threshold", "suppression_exponent"}, where
    )
    kw = dict(
        block_size=_get(table, "block_size", where, issues, int, base.block_size, check=_POSITIVE),
        loss_threshold=_get(
            table, "loss_threshold", where, issues, float, base.loss_threshold, check=_OPEN_UNIT
        ),
        fault_threshold=_get(
            table, "fault_threshold", where, issues, float, base.fault_threshold, check=_OPEN_UNIT
        ),
        suppression_exponent=_get(
            table, "suppression_exponent", where, issues, float, base.suppression_exponent,
            check=_POSITIVE,
        ),
    )
    return CodeParams(**kw)


_SERIES_KEYS = {
    "label", "generation", "channel", "attenuation_length_km", "coupling_efficiency",
    "signal_speed_km_per_s", "total_distance_km", "gate_error", "local_gate_time_s",
    "protocol", "code", "link_fidelity",
}


def _parse_series(table, index, issues, axis) -> SeriesSpec | None:
    where = f"series[{index}]"
    if not isinstance(table, dict):
        issues.add(f"{where}: expected a table")
        return None
    issues.check_keys(table, _SERIES_KEYS, where)
    n_before = len(issues.items)
    gen = _enum(table, "generation", where, issues, Generation, required=True)
    medium = _enum(table, "channel", where, issues, Medium, required=True)
    label = _get(table, "label", where, issues, str, None)
    att = _get(table, "attenuation_length_km", where, issues, float, None, check=_POSITIVE)
    if medium is Medium.CUSTOM and att is None:
        issues.add(f"{where}.attenuation_length_km: required for a custom channel")
    eta = _get(table, "coupling_efficiency", where, issues, float, 1.0, check=_COUPLING)
    speed = _get(table, "signal_speed_km_per_s", where, issues, float, None, check=_POSITIVE)
    need_dist = axis is not SweepAxis.TOTAL_DISTANCE
    dist = _get(
        table, "total_distance_km", where, issues, float, 1.0, required=need_dist, check=_POSITIVE
    )
    need_eg = axis is not SweepAxis.GATE_ERROR
    eg = _get(table, "gate_error", where, issues, float, 0.0, required=need_eg, check=_UNIT)
    t0 = _get(table, "local_gate_time_s", where, issues, float, 1e-6, check=_POSITIVE)
    protocol = _enum(table, "protocol", where, issues, Protocol, Protocol.DEJMPS)
    f_link = _get(table, "link_fidelity", where, issues, float, 1.0,
                  check=(lambda v: 0.25 <= v <= 1, "in [0.25, 1]"))
    code = _parse_code(table.get("code"), f"{where}.code", issues, gen) if gen else None
    if len(issues.items) > n_before or gen is None or medium is None:
        return None
    overrides = {"coupling_efficiency": eta}
    if att is not None:
        overrides["attenuation_length_km"] = att
    if speed is not None:
        overrides["signal_speed_km_per_s"] = speed
    channel = ChannelModel.preset(medium.value, **overrides)
    if gen is Generation.G1:
        code = None
    fixed = FixedParams(gen, dist, eg, channel, t0, code, protocol, f_link)
    if label is None:
        label = f"{gen.value}-{medium.value}-eg{eg:g}"
    return SeriesSpec(label, fixed)


def parse_config(data: dict, source: str = "<memory>") -> RunConfig:
    """Build a :class:`RunConfig` from a decoded TOML document."""
    issues = _Issues()
    issues.check_keys(data, {"scenario", "sweep", "search", "monte_carlo", "series"}, "root")
    scen = data.get("scenario", {})
    issues.check_keys(scen, {"name", "description", "seed", "output_file"}, "scenario")
    name = _get(scen, "name", "scenario", issues, str, None, required=True)
    desc = _get(scen, "description", "scenario", issues, str, "")
    seed = _get(
        scen, "seed", "scenario", issues, int, 0, check=(lambda v: 0 <= v < 2**64, "in [0, 2**64)")
    )
    out_file = _get(scen, "output_file", "scenario", issues, str, None)
    if out_file is None and name:
        out_file = f"{name}.csv"
    if out_file is not None and (Path(out_file).name != out_file or not out_file.endswith(".csv")):
        issues.add("scenario.output_file: must be a bare file name ending in .csv")

    if "sweep" not in data:
        issues.add("sweep: missing required table")
        axis, values = None, ()
    else:
        axis, values = _parse_sweep(data["sweep"], issues)
    space = _parse_search(data.get("search", {}), issues)

    mc = data.get("monte_carlo", {})
    issues.check_keys(mc, {"trials", "max_nesting"}, "monte_carlo")
    trials = _get(
        mc, "trials", "monte_carlo", issues, int, 0,
        check=(lambda v: v == 0 or v >= 1000, "0 (disabled) or >= 1000"),
    )
    max_nest = _get(
        mc, "max_nesting", "monte_carlo", issues, int, 2, check=(lambda v: v >= 0, ">= 0")
    )

    raw_series = data.get("series")
    series = []
    if not raw_series or not isinstance(raw_series, list):
        issues.add("series: at least one [[series]] table is required")
    else:
        for i, tbl in enumerate(raw_series):
            s = _parse_series(tbl, i, issues, axis)
            if s is not None:
                series.append(s)
        labels = [s.label for s in series]
        dup = sorted({x for x in labels if labels.count(x) > 1})
        if dup:
            issues.add(f"series.label: duplicate labels {dup}")

    if issues.items:
        raise ConfigError(issues.items)
    return RunConfig(
        name=name,
        description=desc,
        seed=seed,
        output_file=out_file,
        axis=axis,
        values=values,
        space=space,
        series=tuple(series),
        monte_carlo=MonteCarloSpec(trials, max_nest),
        source=source,
    )


# --------------------------------------------------------------------------
# files and builtins


def builtin_scenarios() -> list[str]:
    root = resources.files("repcost") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def _builtin_text(name: str) -> str:
    if name not in builtin_scenarios():
        raise ConfigError(
            [f"scenario: unknown builtin {name!r} (available: {', '.join(builtin_scenarios())})"]
        )
    return (resources.files("repcost") / "scenarios" / f"{name}.toml").read_text("utf-8")


def load_config(ref: str | Path) -> RunConfig:
    """Load a config from a path, ``builtin:<name>`` or a bare builtin name."""
    ref = str(ref)
    path = Path(ref)
    if ref.startswith(BUILTIN_PREFIX):
        text, source = _builtin_text(ref[len(BUILTIN_PREFIX):]), ref
    elif path.is_file():
        text, source = path.read_text("utf-8"), str(path)
    elif path.suffix == "" and ref in builtin_scenarios():
        text, source = _builtin_text(ref), BUILTIN_PREFIX + ref
    else:
        raise ConfigError([f"config: file not found: {ref}"])
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"config: TOML syntax error: {exc}"]) from None
    return parse_config(data, source)


def format_value(value: Any) -> str:
    if isinstance(value, float) and math.isfinite(value):
        return f"{value:g}" if value == 0 or abs(value) >= 1e-3 else f"{value:.3e}"
    return repr(value) if isinstance(value, str) else str(value)
