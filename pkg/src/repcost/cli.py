"""Command line entry point: ``repcost run|validate|list-scenarios``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .config import ConfigError, RunConfig, builtin_scenarios, format_value, load_config
from .generations import Generation, g1_link_success, simulate_chain_monte_carlo
from .optimizer import CostReport, SweepRow, apply_axis, optimize

OUTPUT_DIR_ENV = "REPCOST_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

log = logging.getLogger("repcost")

COLUMNS = (
    "series",
    "axis",
    "axis_value",
    "generation",
    "medium",
    "attenuation_length_km",
    "coupling_efficiency",
    "total_distance_km",
    "gate_error",
    "cost_coefficient",
    "eq1_form",
    "rate_secret_bits_per_s",
    "fidelity",
    "secret_fraction",
    "nesting_level",
    "purification_schedule",
    "spacing_km",
    "memory_qubits_per_half_node",
    "attempts_per_round",
    "repeater_count",
    "qubits_per_repeater",
    "evaluated",
    "status",
)

MC_COLUMNS = (
    "series",
    "axis_value",
    "nesting_level",
    "purification_schedule",
    "link_success_prob",
    "trials",
    "seed",
    "analytic_time_s",
    "simulated_time_s",
    "simulated_time_stderr_s",
    "time_relative_error",
    "analytic_fidelity",
    "simulated_fidelity",
    "simulated_fidelity_stderr",
)


def fmt_number(x) -> str:
    """CSV cell text: '.' decimal point, scientific notation below 1e-3."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    if abs(x) < 1e-3:
        return f"{x:.12e}"
    return f"{x:.12g}"


def _row(label: str, cfg: RunConfig, value: float, res) -> list[str]:
    fixed = apply_axis(next(s.fixed for s in cfg.series if s.label == label), cfg.axis, value)
    ch = fixed.channel
    head = [
        label,
        cfg.axis.value,
        fmt_number(value),
        fixed.generation.value,
        ch.medium.value,
        fmt_number(ch.attenuation_length_km),
        fmt_number(ch.coupling_efficiency),
        fmt_number(fixed.total_distance_km),
        fmt_number(fixed.gate_error),
    ]
    best: CostReport | None = res.best
    if best is None:
        return head + ["inf", "0", "0", "", "", "", "", "", "", "", "", "", fmt_number(res.evaluated),
                       "no_viable_architecture"]
    c, p = best.config, best.performance
    sched = str(c.purification_schedule) if c.purification_schedule is not None else ""
    return head + [
        fmt_number(best.cost_coefficient),
        fmt_number(best.eq1_form),
        fmt_number(p.rate_secret_bits_per_s),
        fmt_number(p.fidelity),
        fmt_number(p.secret_fraction),
        fmt_number(c.nesting_level) if c.generation is Generation.G1 else "",
        sched,
        fmt_number(c.link_length_km),
        fmt_number(c.memory_qubits_per_half_node),
        fmt_number(c.attempts_per_round),
        fmt_number(p.repeater_count),
        fmt_number(p.qubits_per_repeater),
        fmt_number(res.evaluated),
        "ok" if not p.flags else "ok:" + "+".join(f.value for f in p.flags),
    ]


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def compute_scenario(cfg: RunConfig, workers: int = 1) -> dict[str, list[SweepRow]]:
    out = {}
    for s in cfg.series:
        rows = []
        for v in cfg.values:
            log.info("%s: %s = %g", s.label, cfg.axis.value, v)
            rows.append(SweepRow(v, optimize(cfg.space, apply_axis(s.fixed, cfg.axis, v),
                                             workers=workers)))
        out[s.label] = rows
    return out


def _mc_rows(cfg: RunConfig, results: dict[str, list[SweepRow]]) -> list[list[str]]:
    rows = []
    seq = np.random.SeedSequence(cfg.seed)
    for si, s in enumerate(cfg.series):
        if s.fixed.generation is not Generation.G1:
            continue
        for vi, row in enumerate(results[s.label]):
            best = row.result.best
            if best is None or best.config.nesting_level > cfg.monte_carlo.max_nesting:
                continue
            # per-cell seed, stable under reordering of other series
            seed = int(np.random.SeedSequence(
                seq.entropy, spawn_key=(si, vi)).generate_state(1, np.uint64)[0])
            mc = simulate_chain_monte_carlo(best.config, cfg.monte_carlo.trials, seed)
            rows.append([
                s.label,
                fmt_number(row.axis_value),
                fmt_number(best.config.nesting_level),
                str(best.config.purification_schedule),
                fmt_number(g1_link_success(best.config)),
                fmt_number(mc.trials),
                str(seed),
                fmt_number(mc.analytic.total_time_per_pair_s),
                fmt_number(mc.mean_pair_time_s),
                fmt_number(mc.pair_time_stderr_s),
                fmt_number(mc.time_relative_error),
                fmt_number(mc.analytic.fidelity),
                fmt_number(mc.fidelity),
                fmt_number(mc.fidelity_stderr),
            ])
    return rows


def summary_table(cfg: RunConfig, results: dict[str, list[SweepRow]]) -> str:
    labels = [s.label for s in cfg.series]
    width = max(12, *(len(x) for x in labels))
    lines = [f"scenario {cfg.name}: optimized cost coefficient (qubit*s per secret bit per km)",
             f"{cfg.axis.value:>20} " + " ".join(f"{x:>{width}}" for x in labels)]
    for i, v in enumerate(cfg.values):
        cells = []
        for x in labels:
            best = results[x][i].result.best
            cells.append(f"{best.cost_coefficient:>{width}.3e}" if best else f"{'-':>{width}}")
        lines.append(f"{v:>20.6g} " + " ".join(cells))
    return "\n".join(lines)


def resolve_output_dir(flag: str | None) -> Path:
    if flag:
        return Path(flag)
    return Path(os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def run_scenario(cfg: RunConfig, output_dir: Path, workers: int = 1,
                 stream=None) -> list[Path]:
    """Optimize every series at every sweep value and write the CSV files.

    Files are written under temporary names and renamed at the end; on any
    failure the partial outputs are removed before the exception propagates.
    """
    stream = sys.stdout if stream is None else stream
    output_dir.mkdir(parents=True, exist_ok=True)
    targets = [output_dir / cfg.output_file]
    written: list[Path] = []
    try:
        results = compute_scenario(cfg, workers)
        rows = [_row(s.label, cfg, r.axis_value, r.result)
                for s in cfg.series for r in results[s.label]]
        texts = [_csv_text(COLUMNS, rows)]
        if cfg.monte_carlo.trials:
            targets.append(output_dir / (cfg.output_file[:-4] + "_montecarlo.csv"))
            texts.append(_csv_text(MC_COLUMNS, _mc_rows(cfg, results)))
        for path, text in zip(targets, texts):
            tmp = path.with_name(path.name + ".part")
            written.append(tmp)
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for path in targets:
            os.replace(path.with_name(path.name + ".part"), path)
            written.append(path)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    print(summary_table(cfg, results), file=stream)
    for p in targets:
        print(f"wrote {p}", file=stream)
    return targets


# --------------------------------------------------------------------------
# argparse front end


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    run_scenario(cfg, resolve_output_dir(args.output_dir), workers=args.workers)
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"# {cfg.source}: 0 issues")
    for key, value in cfg.resolved():
        print(f"{key} = {format_value(value)}")
    print(f"# kernel backend: {kernels.BACKEND}")
    return 0


def _cmd_list(args) -> int:
    for name in builtin_scenarios():
        cfg = load_config("builtin:" + name)
        print(f"{name:8s} {cfg.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repcost",
        description="Cost coefficients of fiber and vacuum-beam-guide quantum repeater chains.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write CSV output")
    p.add_argument("config", help="TOML file, builtin:<name>, or a builtin scenario name")
    p.add_argument("-o", "--output-dir", default=None,
                   help=f"output directory (default: ${OUTPUT_DIR_ENV} or ./{DEFAULT_OUTPUT_DIR})")
    p.add_argument("-j", "--workers", type=int, default=1, help="worker processes per optimization")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="check a config and print resolved parameters")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("list-scenarios", help="list builtin scenarios")
    p.set_defaults(func=_cmd_list)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc.issues[0]}", file=sys.stderr)
        for extra in exc.issues[1:]:
            print(f"  also: {extra}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
