"""End-to-end acceptance checks on the built-in experiments.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion.
"""
import hashlib
import math
import random
import statistics
import time

import pytest

from residuenet.controller import FlowClass, detect_conflicts
from residuenet.residue import ROUTE_LIMIT, crt_solve, modulo_forward
from residuenet.scenario import CSV_FILES, builtin_scenario, run_experiment
from residuenet.topology import Topology, route_id_for_path
from residuenet.dataplane import core_egress

from conftest import conservation_gap

FRAME = 1518
RATES_MBPS = (100, 200, 400, 800)


def timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def cd_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cd")
    res, secs = timed(run_experiment, builtin_scenario("fig_cd_isolation"), out)
    return res, secs, out


@pytest.fixture(scope="module")
def b_runs(tmp_path_factory):
    runs = {}
    for rate in RATES_MBPS:
        out = tmp_path_factory.mktemp(f"b{rate}")
        runs[rate] = timed(run_experiment, builtin_scenario("fig_b_migration", rate_mbps=rate), out)
        runs[rate] += (out,)
    return runs


def digest(d):
    return {n: hashlib.sha256((d / n).read_bytes()).hexdigest() for n in CSV_FILES}


# 1 ---------------------------------------------------------------------------

@pytest.mark.criterion(1, "worked example: route 133, port 1 at S11, < 1 ms")
def test_worked_example(fig):
    path = fig.path("VMS1", "VMD2", ("S11", "S19", "S17"))
    t0 = time.perf_counter()
    route = route_id_for_path(path, fig)
    port = modulo_forward(route, 11)
    elapsed = time.perf_counter() - t0
    assert route == 133
    assert port == 1
    assert fig.hop("S11", port).peer == "S19"
    assert elapsed < 1e-3


# 2 ---------------------------------------------------------------------------

def random_coprime_moduli(rng):
    k = rng.randint(1, 8)
    moduli, prod = [], 1
    for _ in range(200):
        if len(moduli) == k:
            break
        m = rng.choice((rng.randint(2, 64), rng.randint(2, 4096), rng.randint(2, 65535)))
        if prod * m <= ROUTE_LIMIT and all(math.gcd(m, x) == 1 for x in moduli):
            moduli.append(m)
            prod *= m
    return moduli


def chain(moduli, ports):
    """E0 -> C1 -> ... -> Ck -> E1 with each core leaving on the chosen port."""
    t = Topology().add_edge("E0").add_edge("E1").add_host("H0").add_host("H1")
    names = [f"C{i}" for i in range(len(moduli))]
    for n, m in zip(names, moduli):
        t.add_core(n, m)
    kw = dict(capacity=1e9, delay=0.0, buffer=1)
    t.add_link("H0", 0, "E0", 0, **kw)
    t.add_link("H1", 0, "E1", 0, **kw)
    prev, prev_port = "E0", 1
    for n, m, p in zip(names, moduli, ports):
        t.add_link(prev, prev_port, n, (p + 1) % m, **kw)
        prev, prev_port = n, p
    t.add_link(prev, prev_port, "E1", 1, **kw)
    return t, names


def scan(moduli, ports):
    """Congruence scan stepping through the class of the largest modulus."""
    i = max(range(len(moduli)), key=moduli.__getitem__)
    r, step, bound = ports[i], moduli[i], math.prod(moduli)
    while r < bound:
        if all(r % m == p for m, p in zip(moduli, ports)):
            return r
        r += step
    raise AssertionError("no solution")


@pytest.mark.criterion(2, "CRT property suite: 10,000 random paths, < 10 s")
def test_crt_property_suite():
    rng = random.Random(20240601)
    t0 = time.perf_counter()
    scanned = 0
    for _ in range(10_000):
        moduli = random_coprime_moduli(rng)
        ports = [rng.randrange(m) for m in moduli]
        topo, names = chain(moduli, ports)
        path = topo.path("H0", "H1", names)
        assert path.core_hops == tuple(zip(names, ports))
        r = route_id_for_path(path, topo)
        assert r == crt_solve(list(zip(moduli, ports)))
        for name, m, p in zip(names, moduli, ports):
            assert modulo_forward(r, m) == p
            assert core_egress(r, name, topo).port == p
        if math.prod(moduli) <= 10**6:
            assert r == scan(moduli, ports)
            scanned += 1
    assert scanned > 1000
    assert time.perf_counter() - t0 < 10.0


# 3 ---------------------------------------------------------------------------

@pytest.mark.criterion(3, "edge-only migration: 2 installs + 1 drain removal on 2 edge nodes")
def test_edge_only_migration(cd_run):
    res = cd_run[0]
    topo = res.sim.topology
    changes = [c for c in res.sim.rule_log if c.cause == "migrate"]
    installs = [c for c in changes if c.op == "install"]
    removals = [c for c in changes if c.op == "remove"]
    assert len(installs) == 2 and len(removals) == 1
    assert {c.node for c in changes} == {"E1", "E2"}
    assert not [c for c in res.sim.rule_log if topo.nodes[c.node].kind.value == "core"]
    assert [(c.node, c.table, round(c.time, 9)) for c in changes] == [
        ("E2", "restore", 30.0005), ("E1", "source", 30.001), ("E2", "restore", 30.011)]


# 4 ---------------------------------------------------------------------------

@pytest.mark.criterion(4, "fig b: throughput within 1%, zero make-before-break loss, blackhole loss")
@pytest.mark.parametrize("rate", RATES_MBPS)
def test_fig_b(b_runs, rate):
    res, secs, _ = b_runs[rate]
    offered = rate * 1e6
    rows = [(w, b) for w, f, b in res.throughput if f == "F1"]
    assert len(rows) == 60
    off = [w for w, b in rows if abs(b - offered) > 0.01 * offered]
    assert off in ([], [50.0])
    (m,) = res.controller.migrations
    assert m.action.decided_at == 50.0
    assert m.dropped_during_window == 0
    assert res.sim.counters()["unmatched"] == 0
    assert secs < 60.0


@pytest.mark.criterion(4, "fig b: throughput within 1%, zero make-before-break loss, blackhole loss")
@pytest.mark.parametrize("rate", RATES_MBPS)
@pytest.mark.parametrize("w_ms", (1, 5))
def test_fig_b_blackhole(rate, w_ms):
    sc = builtin_scenario("fig_b_migration", rate_mbps=rate, blackhole=w_ms / 1000)
    res, secs = timed(run_experiment, sc)
    expected = rate * 1e6 * (w_ms / 1000) / (FRAME * 8)
    (m,) = res.controller.migrations
    assert abs(m.dropped_during_window - expected) <= 2
    loss_50 = sum(n for w, f, c, n in res.loss if w == 50.0 and f == "F1")
    assert abs(loss_50 - expected) <= 2
    assert secs < 60.0


# 5 ---------------------------------------------------------------------------

@pytest.mark.criterion(5, "fig d: RTT 13 ms +/- 20% before, <= 1.0 ms after, ratio > 10, < 90 s")
def test_fig_d(cd_run):
    res, secs, _ = cd_run
    before = [r for t, f, r in res.rtt if f == "F2" and 10 <= t < 30]
    after = [r for t, f, r in res.rtt if f == "F2" and 30 < t <= 60]
    assert before and after
    mb, ma = statistics.fmean(before), statistics.fmean(after)
    assert abs(mb - 0.013) <= 0.2 * 0.013
    assert ma <= 1.0e-3
    assert abs(ma - 0.7e-3) <= 0.3e-3
    assert mb / ma > 10
    assert secs < 90.0


# 6 ---------------------------------------------------------------------------

@pytest.mark.criterion(6, "classifier: elephant by poll 3, probe mice at first sample, 1 -> 0 conflicts")
def test_classifier(cd_run):
    res = cd_run[0]
    polls = res.controller.poll_log
    k = res.scenario.controller.k
    first_e = next(i for i, p in enumerate(polls, 1) if p.classes["F1"] is FlowClass.ELEPHANT)
    assert first_e <= k
    first_seen = next(p for p in polls if p.ewma["F2"] > 0)
    assert first_seen.classes["F2"] is FlowClass.MICE
    pre = [p for i, p in enumerate(polls, 1) if i >= first_e and p.time <= 30.0]
    post = [p for p in polls if p.time > 30.0]
    assert pre and post
    assert all(len(p.conflicts) == 1 for p in pre)
    assert {p.conflicts[0].link for p in pre} == {("S11", 1)}
    assert all(p.conflicts == () for p in post)
    assert detect_conflicts(res.controller.records.values(), res.sim.topology) == []


# 7 ---------------------------------------------------------------------------

@pytest.mark.criterion(7, "determinism: byte-identical CSVs across runs")
def test_determinism_cd(cd_run, tmp_path):
    run_experiment(builtin_scenario("fig_cd_isolation"), tmp_path)
    assert digest(tmp_path) == digest(cd_run[2])


@pytest.mark.criterion(7, "determinism: byte-identical CSVs across runs")
def test_determinism_b(b_runs, tmp_path):
    run_experiment(builtin_scenario("fig_b_migration", rate_mbps=400), tmp_path)
    assert digest(tmp_path) == digest(b_runs[400][2])


# 8 ---------------------------------------------------------------------------

@pytest.mark.criterion(8, "conservation: generated = delivered + drops + in-flight")
def test_conservation(cd_run, b_runs):
    sims = [cd_run[0].sim] + [r[0].sim for r in b_runs.values()]
    for sim in sims:
        c = sim.counters()
        assert c["generated"] > 0
        assert conservation_gap(sim) == 0
        assert c["in_flight"] == c["pending_arrivals"]
