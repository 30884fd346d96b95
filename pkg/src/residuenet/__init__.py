"""Packet-level simulator of a residue-routed data-center fabric with
centralised elephant-flow isolation by edge-only route migration."""
from ._backend import DEFAULT_BACKEND
from .controller import (Conflict, Controller, ControllerConfig, FlowClass, FlowRecord,
                         MigrationAction, classify_flow, decide_migrations, detect_conflicts,
                         execute_migration)
from .dataplane import Simulation
from .errors import (EventOverflow, MigrationRejected, ModuliNotCoprime, NotCoprime,
                     RouteIdOverflow, RouteMismatch, ScenarioError, UnknownLink)
from .residue import (ResidueConstraint, crt_solve, decode_route_field, encode_route_field,
                      mod_inverse, modulo_forward)
from .scenario import builtin_scenario, parse_scenario, run_experiment
from .topology import (Path, Topology, build_fig_topology, enumerate_equal_length_paths,
                       path_to_constraints, route_id_for_path, validate_topology)
from .traffic import FlowSpec, cbr_spec, probe_spec

__version__ = "0.1.0"
