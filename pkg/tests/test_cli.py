import csv
import math
import textwrap

import pytest

from repcost import cli
from repcost.channel import ChannelModel
from repcost.config import ConfigError, builtin_scenarios, load_config, parse_config
from repcost.generations import RepeaterConfig
from repcost.optimizer import cost_coefficient
from repcost.protocols import PurificationSchedule

SMALL = textwrap.dedent(
    """
    [scenario]
    name = "small"
    description = "tiny test scenario"
    seed = 5

    [sweep]
    axis = "coupling_efficiency"
    values = [0.3, 0.6, 0.9]

    [search]
    nesting_levels = [0, 1, 2]
    purification_rounds = [0, 1]
    memory_qubits = [1, 10]
    spacing_points = 12

    [monte_carlo]
    trials = 1000

    [[series]]
    label = "g1-vbg"
    generation = "G1"
    channel = "vbg"
    total_distance_km = 2000.0
    gate_error = 1e-2

    [[series]]
    label = "g2-fiber"
    generation = "G2"
    channel = "fiber"
    total_distance_km = 500.0
    gate_error = 1e-4

    [[series]]
    label = "g3-vbg"
    generation = "G3"
    channel = "vbg"
    total_distance_km = 500.0
    gate_error = 1e-4
    [series.code]
    block_size = 9
    """
)


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL, encoding="utf-8")
    return p


def _write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text), encoding="utf-8")
    return p


def test_fmt_number():
    assert cli.fmt_number(0.0) == "0"
    assert cli.fmt_number(5e-4) == "5.000000000000e-04"
    assert cli.fmt_number(-2e-7).startswith("-2.0") and "e-07" in cli.fmt_number(-2e-7)
    assert cli.fmt_number(0.001) == "0.001"
    assert cli.fmt_number(12.5) == "12.5"
    assert cli.fmt_number(7) == "7"
    assert cli.fmt_number(math.inf) == "inf"
    assert "," not in cli.fmt_number(1234567.891)


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("fig3", "fig4", "fig5"):
        assert name in out
    assert set(builtin_scenarios()) >= {"fig3", "fig4", "fig5"}


@pytest.mark.parametrize("ref", ["fig3", "builtin:fig4", "builtin:fig5"])
def test_builtins_validate(ref, capsys):
    assert cli.main(["validate", ref]) == 0
    out = capsys.readouterr().out
    assert "0 issues" in out
    assert "series[0].generation" in out and "search.nesting_levels" in out


def test_fig3_grid_shape():
    cfg = load_config("fig3")
    assert cfg.values[0] == 0.1 and cfg.values[-1] == 0.95
    combos = {(s.fixed.generation.value, s.fixed.channel.medium.value, s.fixed.gate_error) for s in cfg.series}
    assert ("G1", "fiber", 1e-2) in combos and ("G1", "vbg", 1e-2) in combos
    for gen in ("G2", "G3"):
        for med in ("fiber", "vbg"):
            for eg in (1e-3, 1e-4):
                assert (gen, med, eg) in combos
    assert {s.fixed.total_distance_km for s in cfg.series} == {10000.0}


def test_fig4_fig5_shapes():
    f4 = load_config("fig4")
    assert {(s.fixed.channel.medium.value, s.fixed.total_distance_km) for s in f4.series} == {
        ("fiber", 1e4), ("vbg", 4.5e6)
    }
    assert all(s.fixed.gate_error == 1e-2 and s.fixed.generation.value == "G1" for s in f4.series)
    f5 = load_config("fig5")
    assert {(s.fixed.channel.medium.value, s.fixed.total_distance_km) for s in f5.series} == {
        ("fiber", 1e4), ("vbg", 1e5)
    }


def test_validate_resolves_defaults(small_cfg, capsys):
    assert cli.main(["validate", str(small_cfg)]) == 0
    out = capsys.readouterr().out
    assert "search.attempts = [1]" in out
    assert "series[0].signal_speed_km_per_s = 300000" in out
    assert "series[2].code.block_size = 9" in out
    assert "series[1].code.block_size = 7" in out


def test_negative_attenuation_named(tmp_path, capsys):
    p = _write(tmp_path, SMALL.replace('channel = "fiber"', 'channel = "fiber"\nattenuation_length_km = -5.0'))
    assert cli.main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert "series[1].attenuation_length_km" in err and "> 0" in err


def test_missing_generation_lists_accepted(tmp_path, capsys):
    p = _write(tmp_path, SMALL.replace('generation = "G2"\n', ""))
    assert cli.main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert "series[1].generation" in err
    assert "'G1'" in err and "'G2'" in err and "'G3'" in err


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, SMALL.replace("seed = 5", "seed = 5\ncolour = 'red'")))
    assert "scenario.colour" in exc.value.issues[0]


def test_unitless_distance_rejected(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, SMALL.replace("total_distance_km = 2000.0", "total_distance = 2000.0")))
    assert any("total_distance" in i for i in exc.value.issues)


def test_misc_config_errors(tmp_path):
    bad_values = SMALL.replace("values = [0.3, 0.6, 0.9]", "values = [0.9, 0.3]")
    with pytest.raises(ConfigError, match="ascending"):
        load_config(_write(tmp_path, bad_values))
    with pytest.raises(ConfigError, match="file not found"):
        load_config(tmp_path / "nope.toml")
    with pytest.raises(ConfigError, match="unknown builtin"):
        load_config("builtin:fig99")
    with pytest.raises(ConfigError, match="TOML"):
        load_config(_write(tmp_path, "[scenario\nname=1"))
    with pytest.raises(ConfigError, match="series"):
        parse_config({"scenario": {"name": "x"}, "sweep": {"axis": "gate_error", "values": [0.001]}})


def test_linear_sweep_and_distance_axis(tmp_path):
    text = SMALL.replace("values = [0.3, 0.6, 0.9]", "start = 0.2\nstop = 0.8\nnum = 4")
    cfg = load_config(_write(tmp_path, text))
    assert cfg.values == (0.2, 0.4, 0.6, 0.8)
    text = SMALL.replace('axis = "coupling_efficiency"', 'axis = "total_distance"').replace(
        "values = [0.3, 0.6, 0.9]", "values_km = [100.0, 200.0]"
    )
    cfg = load_config(_write(tmp_path, text, "d.toml"))
    assert cfg.values == (100.0, 200.0)


def _rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_csv_via_env_dir(small_cfg, tmp_path, monkeypatch, capsys):
    out_dir = tmp_path / "out"
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(out_dir))
    assert cli.main(["run", str(small_cfg)]) == 0
    stdout = capsys.readouterr().out
    assert "scenario small" in stdout and "g2-fiber" in stdout
    main_csv = out_dir / "small.csv"
    raw = main_csv.read_bytes()
    raw.decode("utf-8")
    header = raw.split(b"\n", 1)[0].decode()
    assert header.split(",") == list(cli.COLUMNS)
    rows = _rows(main_csv)
    assert len(rows) == 9
    for r in rows:
        v = float(r["cost_coefficient"])
        if 0 < abs(v) < 1e-3:
            assert "e" in r["cost_coefficient"]
        for key in ("rate_secret_bits_per_s", "eq1_form", "fidelity"):
            float(r[key])
    mc_rows = _rows(out_dir / "small_montecarlo.csv")
    assert mc_rows and all(r["series"] == "g1-vbg" for r in mc_rows)
    assert all(abs(float(r["time_relative_error"])) < 0.15 for r in mc_rows)


def test_output_flag_overrides_env(small_cfg, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert cli.main(["run", str(small_cfg), "-o", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "small.csv").exists()
    assert not (tmp_path / "env").exists()


def test_rows_recompute_to_same_cost(small_cfg, tmp_path):
    cfg = load_config(small_cfg)
    cli.run_scenario(cfg, tmp_path, stream=open("/dev/null", "w"))
    series = {s.label: s.fixed for s in cfg.series}
    for r in _rows(tmp_path / "small.csv"):
        fixed = series[r["series"]]
        ch = ChannelModel.preset(r["medium"], coupling_efficiency=float(r["coupling_efficiency"]),
                                 attenuation_length_km=float(r["attenuation_length_km"]))
        kw = dict(
            generation=r["generation"],
            total_distance_km=float(r["total_distance_km"]),
            channel=ch,
            gate_error=float(r["gate_error"]),
            memory_qubits_per_half_node=int(r["memory_qubits_per_half_node"]),
            attempts_per_round=int(r["attempts_per_round"]),
            local_gate_time_s=fixed.local_gate_time_s,
        )
        if r["generation"] == "G1":
            sched = tuple(int(x) for x in r["purification_schedule"].strip("[]").split(","))
            kw.update(nesting_level=int(r["nesting_level"]), purification_schedule=PurificationSchedule(sched))
        else:
            kw.update(spacing_km=float(r["spacing_km"]), code=fixed.code)
        again = cost_coefficient(RepeaterConfig(**kw))
        assert again.cost_coefficient == pytest.approx(float(r["cost_coefficient"]), rel=1e-9)
        assert again.performance.repeater_count == int(r["repeater_count"])


def test_repeat_runs_byte_identical(small_cfg, tmp_path):
    cfg = load_config(small_cfg)
    null = open("/dev/null", "w")
    cli.run_scenario(cfg, tmp_path / "a", stream=null)
    cli.run_scenario(cfg, tmp_path / "b", stream=null)
    for name in ("small.csv", "small_montecarlo.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_failure_removes_partial_output(small_cfg, tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise ValueError("simulated failure")

    monkeypatch.setattr(cli, "_mc_rows", boom)
    out = tmp_path / "out"
    assert cli.main(["run", str(small_cfg), "-o", str(out)]) == 1
    assert "simulated failure" in capsys.readouterr().err
    assert list(out.iterdir()) == []


def test_no_viable_rows_are_marked(tmp_path):
    text = SMALL.replace("total_distance_km = 2000.0", "total_distance_km = 2000.0", 1)
    text = text.replace('channel = "vbg"\ntotal_distance_km = 2000.0', 'channel = "fiber"\ntotal_distance_km = 20000.0')
    cfg = load_config(_write(tmp_path, text))
    cfg = type(cfg)(**{**cfg.__dict__, "space": type(cfg.space)(nesting_levels=(0,), purification_rounds=(0,),
                                                               memory_qubits=(1,))})
    cli.run_scenario(cfg, tmp_path / "o", stream=open("/dev/null", "w"))
    rows = [r for r in _rows(tmp_path / "o" / "small.csv") if r["series"] == "g1-vbg"]
    assert rows and all(r["status"] == "no_viable_architecture" for r in rows)
    assert all(r["cost_coefficient"] == "inf" for r in rows)
