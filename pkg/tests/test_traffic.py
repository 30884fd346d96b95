import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from residuenet.traffic import (CBR, FlowSpec, cbr_generate, cbr_spec, emission_count,
                                emission_times, n_windows, probe_generate, probe_spec,
                                window_throughput)


def test_cbr_rate_bps_to_pps():
    f = cbr_spec("F", "A", "B", size=1518, start=0.0, stop=1.0, rate_bps=400e6)
    assert f.rate_pps == pytest.approx(400e6 / (1518 * 8))
    assert f.offered_bps == pytest.approx(400e6)


def test_cbr_needs_exactly_one_rate():
    with pytest.raises(ValueError):
        cbr_spec("F", "A", "B", size=100, start=0, stop=1)
    with pytest.raises(ValueError):
        cbr_spec("F", "A", "B", size=100, start=0, stop=1, rate_pps=1, rate_bps=800)


@pytest.mark.parametrize("kw", [dict(size=0), dict(start=2.0), dict(rate_pps=-1.0)])
def test_flowspec_rejects_nonsense(kw):
    base = dict(id="F", kind=CBR, src="A", dst="B", size=100, start=0.0, stop=1.0, rate_pps=10.0)
    base.update(kw)
    with pytest.raises(ValueError):
        FlowSpec(**base)


def test_probe_schedule_one_per_second():
    f = probe_spec("P", "A", "B", period=1.0, stop=60.0)
    t = probe_generate(f)
    assert len(t) == 60
    assert t[0] == 0.0 and t[-1] == 59.0
    with pytest.raises(ValueError):
        cbr_generate(f)


def test_elephant_packet_count():
    f = cbr_spec("F", "A", "B", size=1518, start=0.0, stop=60.0, rate_pps=81274)
    assert emission_count(f) == 81274 * 60


@given(st.floats(1.0, 1e5), st.floats(0.0, 5.0), st.floats(0.001, 5.0))
def test_emissions_are_inside_interval(rate, start, span):
    f = cbr_spec("F", "A", "B", size=64, start=start, stop=start + span, rate_pps=rate)
    t = emission_times(f)
    assert len(t) == emission_count(f)
    if len(t):
        assert t[0] == start
        assert t[-1] < f.stop
        assert not f.start + len(t) * f.interval < f.stop
        assert np.all(np.diff(t) > 0)
    assert abs(len(t) - span * rate) <= 1


def test_window_count():
    assert n_windows(60.0, 1.0) == 60
    assert n_windows(60.5, 1.0) == 61
    assert n_windows(0.2, 1.0) == 1


def test_window_throughput_aggregates():
    rows = window_throughput([(0.1, "a", 8000), (0.9, "a", 8000), (1.5, "b", 800), (2.0, "a", 8)],
                             width=1.0, duration=2.0, flows=["a", "b"])
    assert rows == [(0.0, "a", 16000.0), (0.0, "b", 0.0), (1.0, "a", 8.0), (1.0, "b", 800.0)]


@given(st.lists(st.tuples(st.floats(0, 10), st.integers(1, 12000)), max_size=50))
def test_window_throughput_conserves_bits(events):
    rows = window_throughput([(t, "f", b) for t, b in events], 0.5, 10.0, ["f"])
    assert math.isclose(sum(r[2] * 0.5 for r in rows), sum(b for _, b in events))


def test_elephant_gap():
    f = cbr_spec("F", "A", "B", size=1518, start=0.0, stop=1.0, rate_pps=81274)
    assert f.interval * 1e6 == pytest.approx(12.304, abs=5e-4)


def test_hundred_megabit_gap():
    f = cbr_spec("F", "A", "B", size=1518, start=0.0, stop=1.0, rate_bps=100e6)
    assert f.rate_pps == pytest.approx(8234.5, abs=0.05)
    assert f.interval * 1e6 == pytest.approx(121.4, abs=0.05)


def test_one_pps_for_ten_seconds():
    assert emission_count(cbr_spec("F", "A", "B", size=64, start=0, stop=10, rate_pps=1)) == 10


@given(st.floats(0.5, 1e4), st.floats(0.01, 20.0))
def test_emission_count_close_to_floor(rate, span):
    f = cbr_spec("F", "A", "B", size=64, start=0.0, stop=span, rate_pps=rate)
    assert abs(emission_count(f) - math.floor(span * rate)) <= 1
