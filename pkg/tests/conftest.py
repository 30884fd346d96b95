import pytest

from residuenet._backend import ENGINES
from residuenet.dataplane import Simulation
from residuenet.topology import build_fig_topology

BACKENDS = sorted(ENGINES)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def fig():
    return build_fig_topology()


def small_fabric_lines(core_cap=1e9, host_cap=1e9, delay=1e-6, buffer=10):
    """Two edges joined through cores 5 and 7 (two disjoint one-core paths)."""
    def link(a, b, cap):
        return f"link {a} {b} capacity={cap!r} delay={delay!r} buffer={buffer}"
    return [
        "core C5 modulus=5", "core C7 modulus=7",
        "edge EA", "edge EB", "host HA", "host HB", "host HC",
        link("HA:0", "EA:1", host_cap),
        link("HC:0", "EA:2", host_cap),
        link("EA:0", "C5:0", core_cap),
        link("EA:3", "C7:0", core_cap),
        link("C5:3", "EB:0", core_cap),
        link("C7:4", "EB:2", core_cap),
        link("EB:1", "HB:0", host_cap),
    ]


# -- conservation guard: every simulation built by any test must balance ----

_live_sims = []
_orig_init = Simulation.__init__


def _tracking_init(self, *a, **kw):
    _orig_init(self, *a, **kw)
    _live_sims.append(self)


Simulation.__init__ = _tracking_init


def conservation_gap(sim):
    c = sim.counters()
    return c["generated"] - (c["delivered"] + c["droptail"] + c["unmatched"]
                             + c["misroute"] + c["in_flight"])


@pytest.fixture(autouse=True)
def conserved():
    _live_sims.clear()
    yield
    bad = [(s, conservation_gap(s)) for s in _live_sims if conservation_gap(s)]
    _live_sims.clear()
    assert not bad, f"packet conservation broken: {[g for _, g in bad]}"


# -- one line per acceptance criterion ---------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    ok = _criteria.get(marker, True)
    _criteria[marker] = ok and report.passed if report.when == "call" else ok and not report.failed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (n, title), ok in sorted(_criteria.items()):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
