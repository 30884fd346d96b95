"""Line-oriented scenario files, the two built-in experiments, and CSV export.

Grammar (one declaration per line, ``#`` starts a comment)::

    scenario duration=<s> [seed=<int>] [window=<s>]
    core <name> modulus=<int>
    edge <name>
    host <name>
    link <A>:<port> <B>:<port> capacity=<bits/s> delay=<s> buffer=<packets>
    controller [poll=<s>] [theta_e=..] [theta_m=..] [k=..] [alpha=..]
               [t_rule=<s>] [t_drain=<s>] [auto_balance=on|off] [blackhole=<s>]
    flow <id> cbr src=<host> dst=<host> rate_pps=<f>|rate_bps=<f> size=<B> start=<s> stop=<s>
    flow <id> probe src=<host> dst=<host> period=<s> size=<B> start=<s> stop=<s>
    event register flow=<id> path=<core,core,...>
    event migrate flow=<id> at=<s> path=<core,core,...>
"""
from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional

from .controller import Controller, ControllerConfig
from .dataplane import DEFAULT_MAX_PENDING, Simulation
from .errors import ScenarioError, UnknownLink
from .topology import (NodeKind, Topology, fig_topology_lines, path_route_fits,
                       validate_topology)
from .traffic import CBR, DEFAULT_PROBE_SIZE, PROBE, FlowSpec

log = logging.getLogger(__name__)

CSV_FILES = ("throughput.csv", "rtt.csv", "loss.csv", "migrations.csv")
CSV_HEADERS = {
    "throughput.csv": ("window_start_s", "flow", "bits_per_s"),
    "rtt.csv": ("send_time_s", "flow", "rtt_s"),
    "loss.csv": ("interval_start_s", "flow", "cause", "count"),
    "migrations.csv": ("decided_s", "flow", "old_route", "new_route", "old_path",
                       "new_path", "dropped_during_window"),
}
BUILTINS = ("fig_b_migration", "fig_cd_isolation")


@dataclass
class Registration:
    flow: str
    cores: tuple
    line: Optional[int] = field(default=None, compare=False)


@dataclass
class MigrateEvent:
    flow: str
    at: float
    cores: tuple
    line: Optional[int] = field(default=None, compare=False)


@dataclass
class Scenario:
    topology: Topology
    controller: ControllerConfig
    flows: list
    registrations: list
    migrations: list
    duration: float
    seed: int = 0
    window: float = 1.0

    def flow(self, fid: str) -> FlowSpec:
        return next(f for f in self.flows if f.id == fid)

    def path(self, fid: str, cores):
        f = self.flow(fid)
        return self.topology.path(f.src, f.dst, cores)


# -- parsing -------------------------------------------------------------

def _num(text):
    return float(text)


def _int(text):
    return int(text)


def _onoff(text):
    if text in ("on", "true", "1", "yes"):
        return True
    if text in ("off", "false", "0", "no"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def _cores(text):
    return tuple(c for c in text.split(",") if c)


def _kv(tokens, lineno, errors, spec, required=()):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            errors.append((lineno, f"expected key=value, got {tok!r}"))
            continue
        k, v = tok.split("=", 1)
        if k not in spec:
            errors.append((lineno, f"unknown key {k!r}"))
            continue
        try:
            out[k] = spec[k](v)
        except ValueError as e:
            errors.append((lineno, f"bad value for {k}: {e}"))
    for k in required:
        if k not in out:
            errors.append((lineno, f"missing {k}="))
    return out


def _endpoint(tok, lineno, errors):
    name, sep, port = tok.rpartition(":")
    if not sep or not name:
        errors.append((lineno, f"expected <node>:<port>, got {tok!r}"))
        return None
    try:
        return name, int(port)
    except ValueError:
        errors.append((lineno, f"bad port in {tok!r}"))
        return None


_LINK_KEYS = {"capacity": _num, "delay": _num, "buffer": _int}
_CONTROLLER_KEYS = {"poll": _num, "theta_e": _num, "theta_m": _num, "k": _int, "alpha": _num,
                    "t_rule": _num, "t_drain": _num, "auto_balance": _onoff, "blackhole": _num}
_CBR_KEYS = {"src": str, "dst": str, "rate_pps": _num, "rate_bps": _num, "size": _int,
             "start": _num, "stop": _num}
_PROBE_KEYS = {"src": str, "dst": str, "period": _num, "size": _int, "start": _num,
               "stop": _num}


def _parse_topology_line(topo, words, lineno, errors) -> bool:
    kw = words[0]
    if kw == "core":
        if len(words) < 2:
            errors.append((lineno, "core needs a name"))
            return True
        kv = _kv(words[2:], lineno, errors, {"modulus": _int}, ("modulus",))
        if "modulus" in kv:
            topo.add_core(words[1], kv["modulus"], line=lineno)
    elif kw in ("edge", "host"):
        if len(words) != 2:
            errors.append((lineno, f"{kw} takes exactly one name"))
            return True
        (topo.add_edge if kw == "edge" else topo.add_host)(words[1], line=lineno)
    elif kw == "link":
        if len(words) < 3:
            errors.append((lineno, "link needs two endpoints"))
            return True
        a = _endpoint(words[1], lineno, errors)
        b = _endpoint(words[2], lineno, errors)
        kv = _kv(words[3:], lineno, errors, _LINK_KEYS, tuple(_LINK_KEYS))
        if a and b and len(kv) == 3:
            topo.add_link(a[0], a[1], b[0], b[1], line=lineno, **kv)
    else:
        return False
    return True


def _split(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_topology_lines(lines) -> Topology:
    topo, errors = Topology(), []
    for lineno, words in _split("\n".join(lines)):
        if not _parse_topology_line(topo, words, lineno, errors):
            errors.append((lineno, f"not a topology declaration: {words[0]!r}"))
    errors += [(v.line, v.message) for v in validate_topology(topo).violations]
    if errors:
        raise ScenarioError(errors)
    return topo


def parse_scenario(text: str) -> Scenario:
    """Parse and validate; raises ScenarioError listing every problem found."""
    topo = Topology()
    errors: list = []
    header: dict = {}
    ctl_kv: dict = {}
    flows, regs, migs = [], [], []
    flow_lines: dict = {}

    for lineno, words in _split(text):
        kw = words[0]
        if _parse_topology_line(topo, words, lineno, errors):
            continue
        if kw == "scenario":
            header.update(_kv(words[1:], lineno, errors,
                              {"duration": _num, "seed": _int, "window": _num}))
        elif kw == "controller":
            ctl_kv.update(_kv(words[1:], lineno, errors, _CONTROLLER_KEYS))
        elif kw == "flow":
            if len(words) < 3 or words[2] not in (CBR, PROBE):
                errors.append((lineno, "expected: flow <id> cbr|probe key=value ..."))
                continue
            fid, kind = words[1], words[2]
            if fid in flow_lines:
                errors.append((lineno, f"flow {fid!r} already declared on line {flow_lines[fid]}"))
                continue
            if kind == CBR:
                kv = _kv(words[3:], lineno, errors, _CBR_KEYS, ("src", "dst", "size", "start", "stop"))
                if ("rate_pps" in kv) == ("rate_bps" in kv):
                    errors.append((lineno, "give exactly one of rate_pps= / rate_bps="))
                    continue
                if "rate_bps" in kv and kv.get("size"):
                    kv["rate_pps"] = kv.pop("rate_bps") / (kv["size"] * 8)
            else:
                kv = _kv(words[3:], lineno, errors, _PROBE_KEYS, ("src", "dst", "period", "stop"))
                kv.setdefault("size", DEFAULT_PROBE_SIZE)
                kv.setdefault("start", 0.0)
            try:
                flows.append(FlowSpec(fid, kind, **kv))
                flow_lines[fid] = lineno
            except (TypeError, ValueError) as e:
                errors.append((lineno, str(e)))
        elif kw == "event":
            if len(words) < 2 or words[1] not in ("register", "migrate"):
                errors.append((lineno, "expected: event register|migrate key=value ..."))
                continue
            if words[1] == "register":
                kv = _kv(words[2:], lineno, errors, {"flow": str, "path": _cores}, ("flow", "path"))
                if len(kv) == 2:
                    regs.append(Registration(kv["flow"], kv["path"], lineno))
            else:
                kv = _kv(words[2:], lineno, errors, {"flow": str, "at": _num, "path": _cores},
                         ("flow", "at", "path"))
                if len(kv) == 3:
                    migs.append(MigrateEvent(kv["flow"], kv["at"], kv["path"], lineno))
        else:
            errors.append((lineno, f"unknown declaration {kw!r}"))

    if not topo.nodes and not topo.links:
        errors.append((None, "no topology"))
    errors += [(v.line, v.message) for v in validate_topology(topo).violations]

    try:
        controller = ControllerConfig(**ctl_kv)
    except ValueError as e:
        errors.append((None, f"controller: {e}"))
        controller = ControllerConfig()

    duration = header.get("duration")
    if duration is None:
        if flows:
            duration = max(f.stop for f in flows)
        else:
            duration = 0.0
    if not duration > 0:
        errors.append((None, "scenario duration must be > 0"))
    window = header.get("window", 1.0)
    if not window > 0:
        errors.append((None, "window must be > 0"))

    if not errors:
        errors += _check_references(topo, flows, regs, migs, duration)
    if errors:
        raise ScenarioError(errors)
    return Scenario(topo, controller, flows, regs, migs, duration,
                    header.get("seed", 0), window)


def _check_references(topo, flows, regs, migs, duration):
    errors = []
    specs = {f.id: f for f in flows}
    for f in flows:
        for h in (f.src, f.dst):
            n = topo.nodes.get(h)
            if n is None or n.kind is not NodeKind.HOST:
                errors.append((None, f"flow {f.id}: unknown host {h!r}"))

    def check_path(fid, cores, lineno):
        if fid not in specs:
            errors.append((lineno, f"unknown flow {fid!r}"))
            return
        f = specs[fid]
        try:
            p = topo.path(f.src, f.dst, cores)
            if specs[fid].kind == PROBE:
                topo.reverse(p)
        except UnknownLink as e:
            errors.append((lineno, f"flow {fid}: {e}"))
            return
        if not path_route_fits(p, topo):
            errors.append((lineno, f"flow {fid}: path moduli exceed the 48-bit route field"))

    registered = {}
    for r in regs:
        if r.flow in registered:
            errors.append((r.line, f"flow {r.flow!r} registered twice"))
        registered[r.flow] = r
        check_path(r.flow, r.cores, r.line)
    for m in migs:
        check_path(m.flow, m.cores, m.line)
        if m.flow in specs and m.flow not in registered:
            errors.append((m.line, f"flow {m.flow!r} migrated but never registered"))
        if not 0 <= m.at <= duration:
            errors.append((m.line, f"migration time {m.at} outside [0, {duration}]"))
    return errors


def format_scenario(sc: Scenario) -> str:
    """Inverse of :func:`parse_scenario` (comments and key order are normalised)."""
    out = [f"scenario duration={sc.duration!r} seed={sc.seed} window={sc.window!r}"]
    for n in sc.topology.nodes.values():
        if n.kind is NodeKind.CORE:
            out.append(f"core {n.name} modulus={n.modulus}")
        else:
            out.append(f"{n.kind.value} {n.name}")
    for l in sc.topology.links:
        out.append(f"link {l.a}:{l.a_port} {l.b}:{l.b_port} capacity={l.capacity!r} "
                   f"delay={l.delay!r} buffer={l.buffer}")
    c = sc.controller
    out.append(" ".join(
        ["controller"] + [f"{f.name}={'on' if v is True else 'off' if v is False else repr(v)}"
                          for f in dataclasses.fields(c) for v in [getattr(c, f.name)]]))
    for f in sc.flows:
        if f.kind == CBR:
            rate = f"rate_pps={f.rate_pps!r}"
        else:
            rate = f"period={f.period!r}"
        out.append(f"flow {f.id} {f.kind} src={f.src} dst={f.dst} {rate} size={f.size} "
                   f"start={f.start!r} stop={f.stop!r}")
    for r in sc.registrations:
        out.append(f"event register flow={r.flow} path={','.join(r.cores)}")
    for m in sc.migrations:
        out.append(f"event migrate flow={m.flow} at={m.at!r} path={','.join(m.cores)}")
    return "\n".join(out) + "\n"


# -- built-in experiments ------------------------------------------------

PRIMARY_CORES = ("S11", "S19", "S17")
ALTERNATE_CORES = ("S11", "S13", "S17")
PROBE_CORES = ("S11", "S19")
ELEPHANT_PPS = 81274
FRAME_BYTES = 1518


def builtin_scenario_text(name: str, *, rate_mbps: Optional[float] = None,
                          blackhole: float = 0.0, t_drain: Optional[float] = None,
                          auto_balance: bool = False) -> str:
    if name not in BUILTINS:
        raise ValueError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
    ctl = f"controller auto_balance={'on' if auto_balance else 'off'} blackhole={blackhole!r}"
    if t_drain is not None:
        ctl += f" t_drain={t_drain!r}"
    if name == "fig_b_migration":
        rate = 400.0 if rate_mbps is None else float(rate_mbps)
        body = [
            "scenario duration=60.0 seed=1 window=1.0",
            ctl,
            f"flow F1 cbr src=VMS1 dst=VMD2 rate_bps={rate * 1e6!r} size={FRAME_BYTES} "
            f"start=0.0 stop=60.0",
            f"event register flow=F1 path={','.join(PRIMARY_CORES)}",
            f"event migrate flow=F1 at=50.0 path={','.join(ALTERNATE_CORES)}",
        ]
    else:
        body = [
            "scenario duration=60.0 seed=1 window=1.0",
            ctl,
            f"flow F1 cbr src=VMS1 dst=VMD2 rate_pps={ELEPHANT_PPS} size={FRAME_BYTES} "
            f"start=0.0 stop=60.0",
            f"flow F2 probe src=VMS2 dst=VMD1 period=1.0 size={DEFAULT_PROBE_SIZE} "
            f"start=0.0 stop=60.0",
            f"event register flow=F1 path={','.join(PRIMARY_CORES)}",
            f"event register flow=F2 path={','.join(PROBE_CORES)}",
        ]
        if not auto_balance:
            body.append(f"event migrate flow=F1 at=30.0 path={','.join(ALTERNATE_CORES)}")
    return "\n".join([f"# builtin {name}", *fig_topology_lines(), *body]) + "\n"


def builtin_scenario(name: str, **kw) -> Scenario:
    return parse_scenario(builtin_scenario_text(name, **kw))


# -- running -------------------------------------------------------------

@dataclass
class ExperimentResult:
    scenario: Scenario
    sim: Simulation
    controller: Controller
    files: dict

    @property
    def throughput(self):
        return self.sim.throughput_rows()

    @property
    def rtt(self):
        return self.sim.rtt_rows()

    @property
    def loss(self):
        return self.sim.loss_rows()


def build_simulation(sc: Scenario, *, backend=None, trace=False,
                     max_pending=DEFAULT_MAX_PENDING) -> tuple[Simulation, Controller]:
    sim = Simulation(sc.topology, sc.flows, duration=sc.duration, window=sc.window,
                     backend=backend, trace=trace, max_pending=max_pending)
    ctl = Controller(sim, sc.controller)
    for r in sc.registrations:
        ctl.register(r.flow, sc.path(r.flow, r.cores))
    for m in sc.migrations:
        path = sc.path(m.flow, m.cores)
        sim.at(m.at, lambda now, fid=m.flow, p=path: ctl.migrate(fid, p, now))
    ctl.start()
    return sim, ctl


def run_experiment(sc: Scenario, out_dir=None, *, backend=None, trace=False,
                   max_pending=DEFAULT_MAX_PENDING) -> ExperimentResult:
    """Run to ``sc.duration`` and, if ``out_dir`` is given, write the four CSVs."""
    sim, ctl = build_simulation(sc, backend=backend, trace=trace, max_pending=max_pending)
    sim.run_until(sc.duration)
    ctl.finalize()
    files = write_outputs(sim, ctl, out_dir) if out_dir is not None else {}
    return ExperimentResult(sc, sim, ctl, files)


def _f(x: float) -> str:
    return f"{x:.9f}"


def metric_tables(sim: Simulation, ctl: Controller) -> dict:
    tables = {
        "throughput.csv": [(_f(w), f, _f(b)) for w, f, b in sim.throughput_rows()],
        "rtt.csv": [(_f(t), f, _f(r)) for t, f, r in sim.rtt_rows()],
        "loss.csv": [(_f(w), f, c, n) for w, f, c, n in sim.loss_rows()],
        "migrations.csv": [
            (_f(m.action.decided_at), m.action.flow, m.action.old_route, m.action.new_route,
             m.action.old_path.label(), m.action.new_path.label(),
             "" if m.dropped_during_window is None else m.dropped_during_window)
            for m in ctl.migrations],
    }
    return tables


def write_outputs(sim: Simulation, ctl: Controller, out_dir) -> dict:
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, rows in metric_tables(sim, ctl).items():
        path = out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADERS[name])
            w.writerows(rows)
        files[name] = path
    return files
