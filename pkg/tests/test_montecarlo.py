import numpy as np
import pytest

from repcost.channel import ChannelModel
from repcost.generations import (
    Generation,
    RepeaterConfig,
    g1_link_success,
    simulate_chain_monte_carlo,
)
from repcost.protocols import PurificationSchedule


def chain(p, n=0, sched=None, gate_error=0.0, mux=1, link_fidelity=1.0):
    """G1 chain whose elementary links succeed with probability ~p per window."""
    ch = ChannelModel("custom", 1e15, min(1.0, 2 * p), 2e5)
    return RepeaterConfig(
        Generation.G1, 200.0 * 2**n, ch, nesting_level=n, purification_schedule=sched,
        gate_error=gate_error, memory_qubits_per_half_node=mux, link_fidelity=link_fidelity,
    )


def test_deterministic_links_take_one_round_trip():
    c = chain(0.5, mux=200)
    assert g1_link_success(c) == 1.0
    mc = simulate_chain_monte_carlo(c, 2000, seed=1)
    unit = c.link_length_km / c.channel.signal_speed_km_per_s
    assert mc.mean_pair_time_s == pytest.approx(unit, rel=1e-12)
    assert mc.pair_time_stderr_s < 1e-12 * unit


def test_geometric_mean_attempts():
    c = chain(0.25)
    mc = simulate_chain_monte_carlo(c, 200_000, seed=2)
    unit = c.link_length_km / c.channel.signal_speed_km_per_s
    assert abs(mc.mean_pair_time_s / unit - 4.0) < 3 * mc.pair_time_stderr_s / unit
    assert mc.analytic.total_time_per_pair_s == pytest.approx(4 * unit, rel=1e-9)


def test_same_seed_is_bit_identical():
    c = chain(0.2, n=2, sched=PurificationSchedule((1, 0, 0)), gate_error=0.01)
    a = simulate_chain_monte_carlo(c, 5000, seed=99)
    b = simulate_chain_monte_carlo(c, 5000, seed=99)
    assert a.mean_pair_time_s == b.mean_pair_time_s
    assert a.fidelity == b.fidelity
    other = simulate_chain_monte_carlo(c, 5000, seed=100)
    assert other.mean_pair_time_s != a.mean_pair_time_s


@pytest.mark.parametrize(
    "p,n,sched",
    [(0.3, 1, None), (0.1, 2, None), (0.5, 2, (1, 0, 0)), (0.2, 1, (0, 1))],
)
def test_analytic_time_and_fidelity_track_simulation(p, n, sched):
    c = chain(p, n=n, sched=PurificationSchedule(sched) if sched else None, gate_error=0.01,
              link_fidelity=0.97)
    mc = simulate_chain_monte_carlo(c, 50_000, seed=7)
    assert abs(mc.time_relative_error) < 0.15
    assert abs(mc.fidelity - mc.analytic.fidelity) < 3 * mc.fidelity_stderr + 1e-12
    assert mc.pair_time_ci95_s == pytest.approx(1.959963984540054 * mc.pair_time_stderr_s)


def test_input_checks():
    with pytest.raises(ValueError):
        simulate_chain_monte_carlo(chain(0.2), 999, seed=0)
    g2 = RepeaterConfig(Generation.G2, 100.0, ChannelModel.fiber(), spacing_km=10.0)
    with pytest.raises(ValueError):
        simulate_chain_monte_carlo(g2, 1000, seed=0)
    far = RepeaterConfig(Generation.G1, 1e5, ChannelModel.fiber())
    with pytest.raises(ValueError):
        simulate_chain_monte_carlo(far, 1000, seed=0)


def test_purification_retries_raise_fidelity_and_time():
    plain = chain(0.3, n=1, gate_error=0.0, link_fidelity=0.9)
    pumped = chain(0.3, n=1, sched=PurificationSchedule((1, 0)), link_fidelity=0.9)
    a = simulate_chain_monte_carlo(plain, 20_000, seed=5)
    b = simulate_chain_monte_carlo(pumped, 20_000, seed=5)
    assert b.fidelity > a.fidelity
    assert b.mean_pair_time_s > a.mean_pair_time_s
    assert np.isfinite(b.pair_time_stderr_s)
