import math

import numpy as np
import pytest

from sapfsim.analysis import signal_thd
from sapfsim.errors import ConfigurationError, SimulationBlowup
from sapfsim.grid import SimulationTrace, config_from_dict, run
from sapfsim.grid.engine import BusModel, bus_voltage
from sapfsim.report import regime_windows
from sapfsim.signal import ThreePhase

CURRENTS = ("i_source", "i_gen", "i_load", "i_rect", "i_linear", "i_pv")


def short(**sections):
    """Small scenario: everything off unless switched on, 0.2 s at 20 us."""
    data = {
        "pv": {"enabled": False},
        "mhp": {"enabled": False},
        "elc": {"enabled": False},
        "rectifier": {"enabled": False},
        "linear": {"enabled": False},
        "sapf": {"enabled": False},
        "sim": {"t_end": 0.2, "sapf_engage_time": 0.1},
    }
    for key, value in sections.items():
        data.setdefault(key, {}).update(value)
    return config_from_dict(data)


def same_channels(a, b, prefixes=CURRENTS):
    for p in prefixes:
        for k in "abc":
            np.testing.assert_array_equal(a[f"{p}_{k}"], b[f"{p}_{k}"], err_msg=f"{p}_{k}")


class TestBus:
    def test_stiff_cosine(self):
        v = bus_voltage(BusModel(), 0.0, ThreePhase(5.0, -2.0, -3.0))
        assert v.a == pytest.approx(400 * math.sqrt(2) / math.sqrt(3), rel=1e-12)
        assert v.a == pytest.approx(326.6, abs=0.05)
        assert v.b == pytest.approx(-v.a / 2) and v.c == pytest.approx(-v.a / 2)

    def test_thevenin_without_current_is_stiff(self):
        stiff, thev = BusModel(), BusModel("thevenin", series_r=0.1, series_l=1e-4)
        for t in np.linspace(0, 0.02, 11):
            zero = ThreePhase(0.0, 0.0, 0.0)
            assert bus_voltage(thev, t, zero, 20e-6) == bus_voltage(stiff, t, zero, 20e-6)

    def test_thevenin_resistive_drop(self):
        thev = BusModel("thevenin", series_r=0.2, series_l=0.0)
        i = ThreePhase(10.0, -4.0, -6.0)
        for t in (0.0, 0.003, 0.011):
            e = BusModel().emf(t)
            v = bus_voltage(thev, t, i, 20e-6)
            assert [e[k] - v[k] for k in range(3)] == pytest.approx([0.2 * x for x in i], abs=1e-12)

    def test_thevenin_inductive_drop_on_change_only(self):
        thev = BusModel("thevenin", series_r=0.0, series_l=1e-3)
        i = ThreePhase(10.0, -5.0, -5.0)
        v1 = bus_voltage(thev, 0.0, i, 1e-4)
        e = BusModel().emf(0.0)
        assert e.a - v1.a == pytest.approx(1e-3 * 10.0 / 1e-4)
        v2 = bus_voltage(thev, 0.0, i, 1e-4)
        assert v2 == pytest.approx(tuple(e))


class TestNetworks:
    def test_empty_network(self):
        tr = run(short())
        for p in CURRENTS:
            assert not np.any(tr.phases(p))
        t = tr.t
        vp = 400 * math.sqrt(2 / 3)
        assert np.allclose(tr["v_a"], vp * np.cos(2 * math.pi * 50 * t), atol=1e-9)
        assert signal_thd(tr["v_a"], tr.dt, 50.0) == pytest.approx(0.0, abs=1e-9)

    def test_ohmic_network(self):
        tr = run(short(linear={"enabled": True, "power_kw": 20.0, "pf": 1.0}))
        r = (400 ** 2) / 20_000.0
        i = tr.phases("i_source")
        v = tr.phases("v")
        assert np.allclose(i, v / r, rtol=1e-12, atol=1e-12)
        assert signal_thd(i[0], tr.dt, 50.0) <= 1e-9

    def test_generator_carries_what_pv_does_not(self):
        tr = run(short(linear={"enabled": True}, pv={"enabled": True}, mhp={"enabled": True}))
        resid = tr.phases("i_gen") + tr.phases("i_pv") - tr.phases("i_source")
        assert np.abs(resid).max() <= 1e-9 * np.abs(tr.phases("i_source")).max()

    def test_kcl_at_every_sample(self, reference_run):
        tr, _ = reference_run
        scale = np.abs(tr.phases("i_load")).max()
        r1 = tr.phases("i_source") + tr.phases("i_sapf") - tr.phases("i_rect") - tr.phases("i_linear")
        r2 = tr.phases("i_gen") + tr.phases("i_pv") + tr.phases("i_sapf") - tr.phases("i_rect") - tr.phases("i_linear")
        assert np.abs(r1).max() <= 1e-9 * scale
        assert np.abs(r2).max() <= 1e-9 * scale

    def test_three_wire_channels(self, reference_run):
        tr, _ = reference_run
        for p in ("i_source", "i_sapf", "i_rect", "i_linear", "i_pv"):
            x = tr.phases(p)
            assert np.abs(x.sum(axis=0)).max() <= 1e-9 * max(np.abs(x).max(), 1.0), p

    def test_diode_solver_converged(self, reference_run):
        assert reference_run[0].summary["diode_nonconverged_steps"] == 0


class TestEngagement:
    base = dict(rectifier={"enabled": True}, linear={"enabled": True, "power_kw": 20.0})

    def test_engage_at_end_equals_disabled(self):
        on = run(short(**self.base, sapf={"enabled": True}, sim={"sapf_engage_time": 0.2}))
        off = run(short(**self.base))
        same_channels(on, off)
        assert not np.any(on["sapf_active"])

    def test_engage_at_zero_is_active_throughout(self):
        tr = run(short(**self.base, sapf={"enabled": True}, sim={"sapf_engage_time": 0.0}))
        assert np.all(tr["sapf_active"] == 1.0)
        off = run(short(**self.base))
        assert np.abs(tr["i_source_a"][:100] - off["i_source_a"][:100]).max() > 0.0

    def test_frozen_before_engage(self, reference_run, reference_config):
        tr, _ = reference_run
        k = tr.index_of(reference_config.sim.sapf_engage_time)
        assert not np.any(tr.phases("i_sapf")[:, :k])
        assert np.all(tr["v_dc_sapf"][:k] == tr["v_dc_sapf"][0])
        assert tr["sapf_active"][k] == 1.0 and tr["sapf_active"][k - 1] == 0.0

    def test_engaging_lowers_thd(self, reference_run, reference_config):
        tr, _ = reference_run
        pre, post = regime_windows(reference_config)
        thd_pre = signal_thd(tr["i_source_a"][pre.slice(tr.dt)], tr.dt, 50.0)
        thd_post = signal_thd(tr["i_source_a"][post.slice(tr.dt)], tr.dt, 50.0)
        assert thd_post < thd_pre


class TestNoOp:
    def test_zero_rated_pv_equals_no_pv(self):
        base = dict(linear={"enabled": True}, mhp={"enabled": True})
        dark = run(short(**base, pv={"enabled": True, "p_mpp_kw": 0.0}))
        none = run(short(**base))
        same_channels(dark, none)
        np.testing.assert_array_equal(dark["speed_pu"], none["speed_pu"])

    def test_zero_step_elc_equals_no_elc(self):
        base = dict(linear={"enabled": True}, mhp={"enabled": True})
        empty = run(short(**base, elc={"enabled": True, "step_kw": 0.0}))
        none = run(short(**base))
        same_channels(empty, none)
        np.testing.assert_array_equal(empty["speed_pu"], none["speed_pu"])


class TestDeterminism:
    def test_byte_identical_csv(self):
        cfg = short(rectifier={"enabled": True}, linear={"enabled": True}, pv={"enabled": True},
                    mhp={"enabled": True}, elc={"enabled": True}, sapf={"enabled": True})
        assert run(cfg).to_csv_text() == run(cfg).to_csv_text()


class TestConfig:
    @pytest.mark.parametrize("data, key", [
        ({"sim": {"dt": 1.0}}, "[sim].dt"),
        ({"sim": {"dt": 1e-7}}, "[sim].dt"),
        ({"sim": {"t_end": 0.1}}, "[sim].t_end"),
        ({"sim": {"sapf_engage_time": 5.0}}, "[sim].sapf_engage_time"),
        ({"pv": {"p_mpp_kw": -1.0}}, "[pv].p_mpp_kw"),
        ({"sim": {"bogus": 1}}, "[sim].bogus"),
        ({"turbine": {}}, "[turbine]"),
        ({"mhp": {"enabled": False}}, "[elc].enabled"),
        ({"sapf": {"v_dc_ref": 500.0}}, "[sapf].v_dc_ref"),
        ({"bus": {"frequency": 0.0}}, "[bus].frequency"),
        ({"linear": {"pf": "high"}}, "[linear].pf"),
        ({"sim": {"record_channels": ["nope"]}}, "[sim].record_channels"),
    ])
    def test_errors_name_the_key(self, data, key):
        with pytest.raises(ConfigurationError) as info:
            run(config_from_dict(data))
        assert key in str(info.value)

    def test_record_subset(self):
        tr = run(short(linear={"enabled": True}, sim={"record_channels": ["v_a", "i_source_a"]}))
        assert list(tr.channels) == ["v_a", "i_source_a"]
        assert len(tr) == 10_000

    def test_blowup_reports_step(self):
        cfg = short(linear={"enabled": True}, mhp={"enabled": True, "mech_kw": 1.0, "inertia_h": 0.01})
        with pytest.raises(SimulationBlowup) as info:
            run(cfg)
        assert info.value.step is not None and info.value.step > 0
        assert f"step {info.value.step}" in str(info.value)


class TestTraceCsv:
    def test_round_trip(self, tmp_path):
        tr = run(short(linear={"enabled": True}, sim={"record_channels": ["v_a", "i_source_a"]}))
        path = tr.write_csv(tmp_path / "x.csv")
        raw = path.read_bytes()
        assert raw.startswith(b"t_s,v_a,i_source_a\n")
        assert b"\r" not in raw
        back = SimulationTrace.read_csv(path)
        assert back.dt == pytest.approx(tr.dt, rel=1e-9)
        assert np.allclose(back["i_source_a"], tr["i_source_a"], rtol=1e-8, atol=1e-12)
        assert list(tmp_path.iterdir()) == [path]

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("time,x\n0,1\n1,2\n")
        with pytest.raises(ConfigurationError):
            SimulationTrace.read_csv(p)

    def test_unequal_channels_rejected(self):
        with pytest.raises(ValueError):
            SimulationTrace(1e-3, {"a": np.zeros(3), "b": np.zeros(4)})


@pytest.mark.parametrize("name", ["reference", "no_sapf", "rectifier_only", "linear_only"])
def test_bundled_scenarios_validate(name):
    from sapfsim.grid import bundled_scenario, load_config

    cfg = load_config(bundled_scenario(name))
    assert cfg.sim.name == name


def test_rectifier_scenario_power_factor():
    from sapfsim.grid import bundled_scenario, load_config
    from sapfsim.report import summarize

    cfg = load_config(bundled_scenario("rectifier_only"))
    rep = summarize(cfg, run(cfg))
    assert rep.pf_post >= 0.98
    assert rep.pf_post > rep.pf_pre
