import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from residuenet.controller import (Conflict, Controller, ControllerConfig, FlowClass, FlowRecord,
                                   balanceable_links, classify_flow, decide_migrations,
                                   detect_conflicts, execute_migration, link_utilization,
                                   plan_migration, update_ewma)
from residuenet.topology import enumerate_equal_length_paths
from residuenet.dataplane import Simulation
from residuenet.errors import MigrationRejected, RouteMismatch
from residuenet.topology import route_id_for_path
from residuenet.traffic import cbr_spec, probe_spec

CAP = 930e6
PRIMARY = ("S11", "S19", "S17")
ALTERNATE = ("S11", "S13", "S17")


def record(fig, fid, src, dst, cores, cls=FlowClass.UNCLASSIFIED):
    p = fig.path(src, dst, cores)
    spec = cbr_spec(fid, src, dst, size=1518, start=0, stop=1, rate_pps=1)
    return FlowRecord(fid, spec, p, route_id_for_path(p, fig), cls=cls)


def test_ewma():
    assert update_ewma(0.0, 100.0, 0.5) == 50.0
    assert update_ewma(50.0, 100.0, 0.5) == 75.0
    assert update_ewma(10.0, 0.0, 1.0) == 0.0


def test_utilization_clamped():
    assert link_utilization(116_250_000, 930e6, 1.0) == pytest.approx(1.0)
    assert link_utilization(10**12, 930e6, 1.0) == 1.0
    assert link_utilization(0, 930e6, 1.0) == 0.0


def test_elephant_needs_k_consecutive_polls(fig):
    r = record(fig, "F", "VMS1", "VMD2", PRIMARY)
    r.packets_seen = 1
    rate = 987e6
    seen = []
    for _ in range(4):
        r.ewma_rate = update_ewma(r.ewma_rate, rate, 0.5)
        seen.append(classify_flow(r, CAP))
    assert seen == [FlowClass.UNCLASSIFIED, FlowClass.UNCLASSIFIED,
                    FlowClass.ELEPHANT, FlowClass.ELEPHANT]


def test_single_spike_is_not_an_elephant(fig):
    r = record(fig, "F", "VMS1", "VMD2", PRIMARY)
    r.packets_seen = 1
    for rate in (200e6, 1e6, 200e6, 1e6):
        r.ewma_rate = rate
        assert classify_flow(r, CAP) is not FlowClass.ELEPHANT


def test_hysteresis_keeps_elephant_in_dead_band(fig):
    r = record(fig, "F", "VMS1", "VMD2", PRIMARY, FlowClass.ELEPHANT)
    r.packets_seen = 10
    r.ewma_rate = 0.07 * CAP  # below theta_e, above theta_e / 2
    for _ in range(10):
        assert classify_flow(r, CAP) is FlowClass.ELEPHANT
    r.ewma_rate = 0.001 * CAP
    got = [classify_flow(r, CAP) for _ in range(3)]
    assert got == [FlowClass.ELEPHANT, FlowClass.ELEPHANT, FlowClass.MICE]


def test_mice_need_traffic(fig):
    r = record(fig, "P", "VMS2", "VMD1", ("S11", "S19"))
    assert classify_flow(r, CAP) is FlowClass.UNCLASSIFIED
    r.packets_seen = 1
    r.ewma_rate = 392.0
    assert classify_flow(r, CAP) is FlowClass.MICE


def test_only_core_links_are_balanceable(fig):
    p = fig.path("VMS1", "VMD2", PRIMARY)
    assert balanceable_links(p, fig) == [("S11", 1), ("S19", 0)]


def test_conflict_on_shared_core_link(fig):
    e = record(fig, "F1", "VMS1", "VMD2", PRIMARY, FlowClass.ELEPHANT)
    m = record(fig, "F2", "VMS2", "VMD1", ("S11", "S19"), FlowClass.MICE)
    assert detect_conflicts([e, m], fig) == [Conflict(("S11", 1), ("F1",), ("F2",))]
    e2 = record(fig, "F1", "VMS1", "VMD2", ALTERNATE, FlowClass.ELEPHANT)
    assert detect_conflicts([e2, m], fig) == []
    unk = record(fig, "F1", "VMS1", "VMD2", PRIMARY)
    assert detect_conflicts([unk, m], fig) == []


def test_decision_moves_elephant_off_mice(fig):
    e = record(fig, "F1", "VMS1", "VMD2", PRIMARY, FlowClass.ELEPHANT)
    m = record(fig, "F2", "VMS2", "VMD1", ("S11", "S19"), FlowClass.MICE)
    flows = {"F1": e, "F2": m}
    acts = decide_migrations(detect_conflicts(flows.values(), fig), flows, {}, fig, now=3.0)
    assert len(acts) == 1
    a = acts[0]
    assert a.new_path.cores == ALTERNATE
    assert (a.old_route, a.new_route) == (133, route_id_for_path(a.new_path, fig))
    assert (a.dest_rule_at, a.src_rule_at, a.drain_until) == pytest.approx((3.0005, 3.001, 3.011))


def test_no_decision_when_every_alternative_has_mice(fig):
    e = record(fig, "F1", "VMS1", "VMD2", PRIMARY, FlowClass.ELEPHANT)
    m1 = record(fig, "M1", "VMS2", "VMD1", ("S11", "S19"), FlowClass.MICE)
    m2 = record(fig, "M2", "VMS2", "VMD2", ALTERNATE, FlowClass.MICE)
    flows = {"F1": e, "M1": m1, "M2": m2}
    assert decide_migrations(detect_conflicts(flows.values(), fig), flows, {}, fig) == []


def test_plan_with_blackhole(fig):
    e = record(fig, "F1", "VMS1", "VMD2", PRIMARY)
    cfg = ControllerConfig(blackhole=0.005)
    a = plan_migration(e, fig.path("VMS1", "VMD2", ALTERNATE), fig, 50.0, cfg)
    assert a.src_rule_at == pytest.approx(50.001)
    assert a.src_active_at == pytest.approx(50.006)
    assert a.drain_until == pytest.approx(50.016)


@pytest.mark.parametrize("kw", [dict(poll=0), dict(alpha=0), dict(k=0),
                                dict(theta_m=0.2), dict(t_drain=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ControllerConfig(**kw)


def fig_sim(fig, flows, duration, backend=None):
    return Simulation(fig, flows, duration=duration, backend=backend)


def test_execute_rejects_bad_actions(fig):
    sim = fig_sim(fig, [cbr_spec("F1", "VMS1", "VMD2", size=1518, start=0, stop=1, rate_pps=10)], 1)
    ctl = Controller(sim)
    rec = ctl.register("F1", fig.path("VMS1", "VMD2", PRIMARY))
    same = plan_migration(rec, rec.path, fig, 0.1)
    with pytest.raises(MigrationRejected):
        execute_migration(same, sim)
    bad = plan_migration(rec, fig.path("VMS1", "VMD2", ALTERNATE), fig, 0.1)
    bad = dataclasses.replace(bad, new_route=bad.new_route + 1)
    with pytest.raises(RouteMismatch):
        execute_migration(bad, sim)


def test_rule_changes_touch_only_edges(fig, backend):
    sim = fig_sim(fig, [cbr_spec("F1", "VMS1", "VMD2", size=1518, start=0, stop=0.2,
                                 rate_pps=1000)], 0.2, backend)
    ctl = Controller(sim)
    ctl.register("F1", fig.path("VMS1", "VMD2", PRIMARY))
    sim.at(0.1, lambda now: ctl.migrate("F1", fig.path("VMS1", "VMD2", ALTERNATE), now))
    sim.run_until()
    ctl.finalize()
    mig = [(c.node, c.op, c.table) for c in sim.rule_log if c.cause == "migrate"]
    assert mig == [("E2", "install", "restore"), ("E1", "install", "source"),
                   ("E2", "remove", "restore")]
    assert ctl.migrations[0].dropped_during_window == 0
    assert sim.counters()["delivered"] == 200


def migrate_under_load(fig, blackhole, rate_bps=400e6, at=0.5, duration=1.0):
    spec = cbr_spec("F1", "VMS1", "VMD2", size=1518, start=0, stop=duration, rate_bps=rate_bps)
    sim = fig_sim(fig, [spec], duration)
    ctl = Controller(sim, ControllerConfig(blackhole=blackhole))
    ctl.register("F1", fig.path("VMS1", "VMD2", PRIMARY))
    sim.at(at, lambda now: ctl.migrate("F1", fig.path("VMS1", "VMD2", ALTERNATE), now))
    sim.run_until()
    ctl.finalize()
    return sim, ctl


def test_make_before_break_loses_nothing(fig):
    sim, ctl = migrate_under_load(fig, 0.0)
    assert ctl.migrations[0].dropped_during_window == 0
    assert sim.counters()["unmatched"] == 0


@pytest.mark.parametrize("w", [0.001, 0.002, 0.005])
def test_blackhole_loses_rate_times_window(fig, w):
    sim, ctl = migrate_under_load(fig, w)
    expected = 400e6 * w / (1518 * 8)
    assert abs(ctl.migrations[0].dropped_during_window - expected) <= 2


def test_drops_split_between_successive_migrations(fig):
    spec = cbr_spec("F1", "VMS1", "VMD2", size=1518, start=0, stop=1.0, rate_bps=400e6)
    sim = fig_sim(fig, [spec], 1.0)
    ctl = Controller(sim, ControllerConfig(blackhole=0.002))
    p1, p2 = fig.path("VMS1", "VMD2", PRIMARY), fig.path("VMS1", "VMD2", ALTERNATE)
    ctl.register("F1", p1)
    sim.at(0.3, lambda now: ctl.migrate("F1", p2, now))
    sim.at(0.6, lambda now: ctl.migrate("F1", p1, now))
    sim.run_until()
    ctl.finalize()
    d = [m.dropped_during_window for m in ctl.migrations]
    assert sum(d) == sim.attributable_drops()["F1"]
    assert all(abs(x - 400e6 * 0.002 / 12144) <= 2 for x in d)


def test_auto_balance_isolates_probe(fig):
    flows = [cbr_spec("F1", "VMS1", "VMD2", size=1518, start=0, stop=5, rate_bps=300e6),
             probe_spec("F2", "VMS2", "VMD1", period=0.5, stop=5)]
    sim = fig_sim(fig, flows, 5.0)
    ctl = Controller(sim, ControllerConfig(auto_balance=True))
    ctl.register("F1", fig.path("VMS1", "VMD2", PRIMARY))
    ctl.register("F2", fig.path("VMS2", "VMD1", ("S11", "S19")))
    ctl.start()
    sim.run_until()
    ctl.finalize()
    assert [p.classes["F1"] for p in ctl.poll_log[:3]] == [FlowClass.UNCLASSIFIED] * 2 + [FlowClass.ELEPHANT]
    assert len(ctl.poll_log[2].conflicts) == 1
    assert all(not p.conflicts for p in ctl.poll_log[3:])
    assert len(ctl.migrations) == 1
    assert ctl.records["F1"].path.cores == ALTERNATE


def diamond():
    """Three one-core paths E1 -> {C7, C5, C3} -> C11 -> E2 so that
    alternatives have core-to-core links to compare."""
    from residuenet.topology import Topology
    t = Topology().add_edge("EA").add_edge("EB").add_host("HA").add_host("HB").add_host("HM")
    for m in (3, 5, 7, 11, 13):
        t.add_core(f"C{m}", m)
    kw = dict(capacity=1e9, delay=0.0, buffer=4)
    t.add_link("HA", 0, "EA", 0, **kw)
    t.add_link("HM", 0, "EA", 5, **kw)
    t.add_link("HB", 0, "EB", 0, **kw)
    t.add_link("EA", 1, "C13", 0, **kw)
    for i, m in enumerate((7, 5, 3)):
        t.add_link("C13", 1 + i, f"C{m}", 0, **kw)
        t.add_link(f"C{m}", 1, "C11", 1 + i, **kw)
    t.add_link("C11", 0, "EB", 1, **kw)
    return t


def diamond_flows(t):
    e = FlowRecord("E", None, t.path("HA", "HB", ("C13", "C7", "C11")), 0, cls=FlowClass.ELEPHANT)
    m = FlowRecord("M", None, t.path("HM", "HB", ("C13", "C7", "C11")), 0, cls=FlowClass.MICE)
    return {"E": e, "M": m}


def test_equal_utilization_ties_go_to_smaller_moduli():
    t = diamond()
    flows = diamond_flows(t)
    conflicts = detect_conflicts(flows.values(), t)
    assert {c.link for c in conflicts} == {("C13", 1), ("C7", 1)}
    (a,) = decide_migrations(conflicts, flows, {}, t)
    candidates = enumerate_equal_length_paths(t, "EA", "EB", flows["E"].path)
    assert a.new_path == min(candidates, key=lambda p: [t.modulus(c) for c in p.cores])
    assert a.new_path.cores == ("C13", "C3", "C11")


@settings(max_examples=60)
@given(st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4), st.floats(0.01, 100.0))
def test_choice_invariant_under_utilization_scaling(utils, scale):
    t = diamond()
    flows = diamond_flows(t)
    conflicts = detect_conflicts(flows.values(), t)
    links = [("C13", 2), ("C13", 3), ("C5", 1), ("C3", 1)]
    base = dict(zip(links, utils))
    scaled = {k: v * scale for k, v in base.items()}
    a = decide_migrations(conflicts, flows, base, t)
    b = decide_migrations(conflicts, flows, scaled, t)
    assert [x.new_path for x in a] == [x.new_path for x in b]


def test_busier_alternative_loses():
    t = diamond()
    flows = diamond_flows(t)
    (a,) = decide_migrations(detect_conflicts(flows.values(), t), flows,
                             {("C3", 1): 0.9, ("C5", 1): 0.2}, t)
    assert a.new_path.cores == ("C13", "C5", "C11")


@given(st.floats(0.1, 1.0), st.integers(4, 30))
def test_constant_heavy_flow_stays_elephant(frac, polls):
    from residuenet.topology import build_fig_topology
    fig = build_fig_topology()
    r = record(fig, "F", "VMS1", "VMD2", PRIMARY)
    rate = frac * CAP * 1.0001
    seen = []
    for _ in range(polls):
        r.packets_seen += 1
        r.ewma_rate = update_ewma(r.ewma_rate, rate, 0.5)
        seen.append(classify_flow(r, CAP))
    # closed form of the EWMA from zero: (1 - 0.5**n) * rate after poll n
    cross = next(n for n in range(1, 200) if (1 - 0.5 ** n) * rate >= 0.1 * CAP)
    expected = cross + 3 - 1  # poll number of the K-th consecutive crossing
    assert all(s is not FlowClass.ELEPHANT for s in seen[:expected - 1])
    assert all(s is FlowClass.ELEPHANT for s in seen[expected - 1:])
    if frac >= 0.2:
        assert expected == 3


@given(st.floats(0.0, 100.0), st.floats(0.0, 0.01), st.floats(0.0, 0.1), st.floats(0.0, 0.05))
def test_make_before_break_ordering(now, t_rule, t_drain, blackhole):
    from residuenet.topology import build_fig_topology
    fig = build_fig_topology()
    r = record(fig, "F", "VMS1", "VMD2", PRIMARY)
    cfg = ControllerConfig(t_rule=t_rule, t_drain=t_drain + 1e-6, blackhole=blackhole)
    a = plan_migration(r, fig.path("VMS1", "VMD2", ALTERNATE), fig, now, cfg)
    assert a.dest_rule_at <= a.src_rule_at <= a.src_active_at < a.drain_until
