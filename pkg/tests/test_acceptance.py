"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import csv
import io
import math
import time

import numpy as np
import pytest

from repcost import cli
from repcost.channel import ChannelModel, plob_capacity, transmissivity
from repcost.config import load_config
from repcost.generations import (
    Generation,
    RepeaterConfig,
    g1_link_success,
    g1_performance,
    simulate_chain_monte_carlo,
)
from repcost.optimizer import FixedParams, optimize
from repcost.protocols import (
    Protocol,
    PurificationSchedule,
    TwoPairState,
    bbpssw_round,
    dejmps_round,
    oracle_circuit,
    swap,
)
from repcost.states import BellDiagonalState, werner_state

# tolerances
ORACLE_TOL = 1e-10
ORACLE_BUDGET_S = 10.0
SWAP_TOL = 1e-12
MC_TIME_REL = 0.15
MC_FID_SIGMAS = 3.0
MC_TRIALS = 100_000
MC_BUDGET_S = 120.0
ETA_UPPER = 0.525  # midpoint of the 0.1 to 0.95 coupling sweep
FIG4_DECADES = 1.0


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return emit


@pytest.fixture(scope="module")
def fig3_runs(tmp_path_factory):
    cfg = load_config("fig3")
    root = tmp_path_factory.mktemp("fig3")
    texts = []
    for name in ("a", "b"):
        paths = cli.run_scenario(cfg, root / name, stream=io.StringIO())
        texts.append([p.read_bytes() for p in paths])
    return texts


@pytest.fixture(scope="module")
def fig3_costs(fig3_runs):
    rows = csv.DictReader(io.StringIO(fig3_runs[0][0].decode("utf-8")))
    costs: dict[tuple[str, str, float], dict[float, float]] = {}
    for r in rows:
        key = (r["generation"], r["medium"], float(r["gate_error"]))
        costs.setdefault(key, {})[float(r["axis_value"])] = float(r["cost_coefficient"])
    return costs


def _grid(n=50, seed=7):
    rng = np.random.default_rng(seed)
    out = [BellDiagonalState((1.0, 0.0, 0.0, 0.0)), BellDiagonalState((0.25,) * 4)]
    out += [werner_state(f) for f in (0.3, 0.55, 0.8, 0.95)]
    while len(out) < n:
        out.append(BellDiagonalState.from_array(rng.dirichlet(np.ones(4) * 0.7), renormalize=True))
    return out


def test_criterion_1_purification_oracle(report):
    start = time.perf_counter()
    worst = 0.0
    for s in _grid():
        for proto, closed in ((Protocol.BBPSSW, bbpssw_round), (Protocol.DEJMPS, dejmps_round)):
            if proto is Protocol.BBPSSW and s.fidelity < 0.25:
                # outside the twirled protocol's domain
                continue
            ref = oracle_circuit(TwoPairState.product(s, s), proto)
            got = closed(s)
            worst = max(worst, abs(ref.success_prob - got.success_prob),
                        *np.abs(np.subtract(ref.output_state.weights, got.output_state.weights)))
    elapsed = time.perf_counter() - start
    ok = worst <= ORACLE_TOL and elapsed < ORACLE_BUDGET_S
    report("1", ok, f"max deviation {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_2_swap_composition(report):
    worst = 0.0
    f = 0.93
    ch = ChannelModel.vbg()
    for n in range(5):
        cfg = RepeaterConfig(Generation.G1, 100.0 * 2**n, ch, nesting_level=n, link_fidelity=f)
        got = g1_performance(cfg).end_state
        ref = werner_state(f)
        for _ in range(n):
            ref = swap(ref, ref).output_state
        worst = max(worst, *np.abs(np.subtract(got.weights, ref.weights)))
    ok = worst <= SWAP_TOL
    report("2", ok, f"max weight deviation {worst:.2e} over nesting 0-4")
    assert ok


def _mc_chain(p, n, sched):
    ch = ChannelModel("custom", 1e15, 2 * p, 2e5)
    return RepeaterConfig(
        Generation.G1, 150.0 * 2**n, ch, nesting_level=n,
        purification_schedule=PurificationSchedule(sched) if sched else None,
        gate_error=0.01, link_fidelity=0.97,
    )


def test_criterion_3_monte_carlo(report):
    cases = [(0.06, 0, None), (0.1, 1, None), (0.3, 2, None), (0.5, 1, (1, 0)), (0.2, 2, (0, 1, 0)),
             (0.4, 2, (1, 0, 0))]
    start = time.perf_counter()
    worst_t = worst_f = 0.0
    for i, (p, n, sched) in enumerate(cases):
        cfg = _mc_chain(p, n, sched)
        assert 0.05 <= g1_link_success(cfg) <= 0.5
        mc = simulate_chain_monte_carlo(cfg, MC_TRIALS, seed=1000 + i)
        worst_t = max(worst_t, abs(mc.time_relative_error))
        sig = abs(mc.fidelity - mc.analytic.fidelity) / max(mc.fidelity_stderr, 1e-300)
        worst_f = max(worst_f, sig)
    elapsed = time.perf_counter() - start
    ok = worst_t < MC_TIME_REL and worst_f <= MC_FID_SIGMAS and elapsed < MC_BUDGET_S
    report("3", ok, f"{len(cases)} configs, max time error {worst_t:.3f}, "
                    f"max fidelity offset {worst_f:.2f} sigma, {elapsed:.1f} s")
    assert ok


def test_criterion_4a_1g_vbg_beats_fiber(fig3_costs, report):
    fib = fig3_costs[("G1", "fiber", 1e-2)]
    vbg = fig3_costs[("G1", "vbg", 1e-2)]
    bad = [eta for eta in fib if not vbg[eta] < fib[eta]]
    ok = not bad
    report("4a", ok, f"1G VBG cheaper at {len(fib) - len(bad)}/{len(fib)} coupling values")
    assert ok


def test_criterion_4b_2g_gap_widens_with_noise(fig3_costs, report):
    def ratio(eg):
        f, v = fig3_costs[("G2", "fiber", eg)], fig3_costs[("G2", "vbg", eg)]
        return {eta: f[eta] / v[eta] for eta in f}

    lo, hi = ratio(1e-4), ratio(1e-3)
    bad = [eta for eta in lo if not hi[eta] > lo[eta]]
    ok = not bad
    report("4b", ok, f"fiber/VBG ratio {min(lo.values()):.3g}-{max(lo.values()):.3g} at 1e-4, "
                     f"{min(hi.values()):.3g}-{max(hi.values()):.3g} at 1e-3")
    assert ok


def test_criterion_4c_2g_fiber_competitive_at_high_coupling(fig3_costs, report):
    f, v = fig3_costs[("G2", "fiber", 1e-4)], fig3_costs[("G2", "vbg", 1e-4)]
    high = [eta for eta in f if eta >= ETA_UPPER]
    hits = [eta for eta in high if f[eta] <= v[eta]]
    top = max(f)
    ok = bool(hits)
    report("4c", ok, f"2G fiber <= VBG at {len(hits)} of {len(high)} high-coupling points; "
                     f"ratio at eta={top:g} is {f[top] / v[top]:.3g}")
    assert ok


@pytest.mark.parametrize("medium", ["fiber", "vbg"])
@pytest.mark.parametrize("eg", [1e-3, 1e-4])
def test_criterion_4d_3g_only_wins_at_high_coupling(fig3_costs, report, medium, eg):
    g3 = fig3_costs[("G3", medium, eg)]
    g2 = fig3_costs[("G2", medium, eg)]
    g1 = fig3_costs[("G1", medium, 1e-2)]
    etas = sorted(g3)
    finite = [g3[e] for e in etas if math.isfinite(g3[e])]
    decreasing = all(b < a for a, b in zip(finite, finite[1:])) and len(finite) >= 2
    below = [e for e in etas if g3[e] < min(g1[e], g2[e])]
    below_any = [e for e in etas if g3[e] < g1[e] or g3[e] < g2[e]]
    ok = decreasing and bool(below) and min(below_any) >= ETA_UPPER
    first = f"{min(below_any):g}" if below_any else "none"
    detail = (f"strictly decreasing={decreasing}, first eta beating 1G or 2G={first}" if finite
              else "no viable 3G architecture at any coupling value")
    report(f"4d[{medium},{eg:g}]", ok, detail)
    assert ok


def test_criterion_5_no_purification_at_moderate_coupling(report):
    space = load_config("fig3").space
    picks = []
    for eta in (0.4, 0.5, 0.6):
        res = optimize(space, FixedParams("G1", 1e4, 1e-2, ChannelModel.vbg(eta)))
        best = res.best.config
        picks.append((eta, best.nesting_level, best.purification_schedule.rounds_per_level))
    ok = all(n in (0, 1) and not any(s) for _, n, s in picks)
    detail = ", ".join(f"eta={e:g}: n={n} M={list(s)}" for e, n, s in picks)
    report("5", ok, detail)
    assert ok


def test_criterion_6_long_vbg_comparable_to_fiber(report):
    cfg = load_config("fig4")
    results = cli.compute_scenario(cfg)
    fib, vbg = (results[s.label] for s in cfg.series)
    ratios = []
    for rf, rv in zip(fib, vbg):
        ratios.append(rv.result.best.cost_coefficient / rf.result.best.cost_coefficient)
    decades = [abs(math.log10(r)) for r in ratios]
    ok = max(decades) <= FIG4_DECADES
    report("6", ok, f"VBG(4.5e6 km)/fiber(1e4 km) cost ratio {min(ratios):.3g}-{max(ratios):.3g}")
    assert ok


def test_criterion_7_plob_bound(report):
    worst = -math.inf
    for ch_factory, dist in ((ChannelModel.fiber, 50.0), (ChannelModel.vbg, 2e4)):
        for eta in np.linspace(0.05, 1.0, 20):
            for eg in (0.0, 1e-2):
                ch = ch_factory(float(eta))
                cfg = RepeaterConfig(Generation.G1, dist, ch, nesting_level=0, gate_error=eg)
                r = g1_performance(cfg)
                window = cfg.link_length_km / ch.signal_speed_km_per_s
                per_use = r.rate_secret_bits_per_s * window
                bound = plob_capacity(eta * transmissivity(dist, ch))
                worst = max(worst, per_use / bound)
    ok = worst <= 1.0
    report("7", ok, f"max achieved/PLOB ratio {worst:.3g}")
    assert ok


def test_criterion_8_fig3_deterministic(fig3_runs, report):
    a, b = fig3_runs
    ok = len(a) == len(b) and all(x == y for x, y in zip(a, b))
    report("8", ok, f"{len(a)} files, {sum(len(x) for x in a)} bytes compared")
    assert ok
