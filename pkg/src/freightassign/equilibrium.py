"""User-equilibrium assignment of truck, rail and intermodal freight demand.

Two solvers share one state object:

* :func:`solve_gp`, path-based gradient projection with a Gauss-Seidel sweep
  over (origin, destination, class) triples;
* :func:`solve_fw`, the link-based Frank-Wolfe baseline with an exact
  bisection line search. It keeps path flows too (each all-or-nothing
  direction is a path), so both solvers return the same result type.
"""

from __future__ import annotations

import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable, Optional

from .network import MODES, Network
from .paths import Path, path_time, shortest_path, shortest_path_tree
from .performance import (
    DEFAULT_BETA,
    RailLpf,
    RoadLpf,
    lpf_for,
    rail_time,
    rail_time_deriv,
    rail_time_integral,
    road_time,
    road_time_deriv,
    road_time_integral,
)

logger = logging.getLogger(__name__)

CLASSES = MODES  # demand classes share names with the network modes

DemandEntry = namedtuple("DemandEntry", ["truck", "rail", "intermodal"])
ObjectiveValue = namedtuple("ObjectiveValue", ["normalized", "raw", "road_term", "rail_term"])

CONSISTENCY_RTOL = 1e-9
FW_LINE_SEARCH_TOL = 1e-8
FW_LINE_SEARCH_MAX_ITER = 64


class AssignmentError(RuntimeError):
    pass


class UnreachableDemandError(AssignmentError):
    """Positive demand between centroids that have no path for its class."""

    def __init__(self, entries):
        self.entries = list(entries)
        lines = [f"  {o} -> {d} ({cls}): {q:g}" for o, d, cls, q in self.entries]
        super().__init__("unreachable demand:\n" + "\n".join(lines))


class NormalizationError(AssignmentError):
    pass


class DemandTable:
    """Daily O-D demand per class: trucks, trains and intermodal units."""

    def __init__(self, entries=None):
        self._q = {}
        for (o, d), q in dict(entries or {}).items():
            self.set(o, d, *q)

    def set(self, origin, destination, truck=0.0, rail=0.0, intermodal=0.0):
        if origin == destination:
            raise ValueError(f"demand from {origin!r} to itself")
        q = (float(truck), float(rail), float(intermodal))
        for v in q:
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"demand {origin!r}->{destination!r} must be finite and >= 0, got {q}")
        self._q[(origin, destination)] = list(q)

    def add(self, origin, destination, cls, amount):
        if origin == destination:
            raise ValueError(f"demand from {origin!r} to itself")
        row = self._q.setdefault((origin, destination), [0.0, 0.0, 0.0])
        row[CLASSES.index(cls)] += amount

    def get(self, origin, destination) -> DemandEntry:
        return DemandEntry(*self._q.get((origin, destination), (0.0, 0.0, 0.0)))

    def demand(self, origin, destination, cls) -> float:
        return self.get(origin, destination)[CLASSES.index(cls)]

    def pairs(self):
        return sorted(self._q)

    def items(self):
        """``((origin, destination), DemandEntry)`` in sorted pair order."""
        return [(k, DemandEntry(*self._q[k])) for k in self.pairs()]

    def total(self, cls) -> float:
        i = CLASSES.index(cls)
        return math.fsum(q[i] for q in self._q.values())

    def scaled(self, factor) -> "DemandTable":
        return DemandTable({k: [v * factor for v in q] for k, q in self._q.items()})

    def __len__(self):
        return len(self._q)

    def __eq__(self, other):
        if not isinstance(other, DemandTable):
            return NotImplemented
        nz = lambda t: {k: tuple(v) for k, v in t._q.items() if any(v)}
        return nz(self) == nz(other)

    def __repr__(self):
        return f"DemandTable({len(self)} pairs)"


@dataclass
class SolverConfig:
    step_size: float = 1.0
    rel_gap_tol: float = 1e-4
    max_iterations: int = 100
    beta: float = DEFAULT_BETA
    intermodal_road_factor: float = 1.0
    intermodal_rail_factor: float = 1.0
    normalize: bool = True
    consistency_check_every: int = 10

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if not self.rel_gap_tol > 0:
            raise ValueError("rel_gap_tol must be > 0")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not self.beta >= 1:
            raise ValueError("beta must be >= 1")
        if not (self.intermodal_road_factor > 0 and self.intermodal_rail_factor > 0):
            raise ValueError("intermodal unit factors must be > 0")


@dataclass
class AssignmentResult:
    link_flows: dict
    path_sets: dict  # (origin, destination, class) -> list of (Path, flow)
    objective_trace: list  # normalized objective, starting at the initial loading
    gap_trace: list
    iterations_used: int
    converged: bool
    raw_objective: float = 0.0
    algorithm: str = "gp"
    beta: float = DEFAULT_BETA
    link_times: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else 0.0


def class_weight(link, cls, config: SolverConfig) -> float:
    """Vehicles added to ``link`` per unit of class flow crossing it."""
    if cls != "intermodal":
        return 1.0
    if link.kind == "road":
        return config.intermodal_road_factor
    if link.kind == "rail":
        return config.intermodal_rail_factor
    return 1.0


def link_times(net: Network, flows: dict, beta: float = DEFAULT_BETA) -> dict:
    """Travel time of every link at the given flows."""
    out = {}
    for a in net.links:
        out[a.id] = _time(net, a, flows, beta)
    return out


def _time(net, a, flows, beta):
    if a.kind == "road":
        return road_time(RoadLpf(a.free_flow_time, a.capacity), flows.get(a.id, 0.0))
    if a.kind == "rail":
        opp = flows.get(a.twin, 0.0) if a.twin is not None else 0.0
        return rail_time(lpf_for(a, beta), flows.get(a.id, 0.0), opp)
    return a.free_flow_time


def accumulate_link_flows(net: Network, path_sets: dict, config: SolverConfig) -> dict:
    """Link flows from scratch: each path flow, weighted per class, on each of its links."""
    flows = {a.id: 0.0 for a in net.links}
    link = net.link
    for (_, _, cls), entries in path_sets.items():
        if isinstance(entries, dict):
            entries = entries.items()
        for path, f in entries:
            for lid in path.links:
                flows[lid] += class_weight(link[lid], cls, config) * f
    return flows


def objective(net: Network, link_flows: dict, demand: DemandTable,
              config: SolverConfig) -> ObjectiveValue:
    """Normalized and raw objective.

    The road term integrates each road link's BPR curve; the rail term
    integrates each physical track once, over the combined flow of its two
    directions. Normalization divides each term by the demand that produces
    it (trucks plus intermodal trucks, trains plus intermodal trains).
    """
    road = math.fsum(
        road_time_integral(RoadLpf(a.free_flow_time, a.capacity), link_flows.get(a.id, 0.0))
        for a in net.links_of_kind("road")
    )
    rail_terms = []
    for a, b in net.rail_pairs:
        y = link_flows.get(a.id, 0.0) + (link_flows.get(b.id, 0.0) if b is not None else 0.0)
        rail_terms.append(rail_time_integral(lpf_for(a, config.beta), y))
    rail = math.fsum(rail_terms)
    raw = road + rail
    if not config.normalize:
        return ObjectiveValue(raw, raw, road, rail)

    road_den = demand.total("truck") + config.intermodal_road_factor * demand.total("intermodal")
    rail_den = demand.total("rail") + config.intermodal_rail_factor * demand.total("intermodal")
    norm = 0.0
    for name, term, den in (("road", road, road_den), ("rail", rail, rail_den)):
        if den > 0:
            norm += term / den
        elif term > 0:
            raise NormalizationError(f"{name} term is {term:g} but its demand total is zero")
    return ObjectiveValue(norm, raw, road, rail)


def relative_gap(z_prev: float, z_curr: float) -> float:
    """Relative change of the objective between successive iterations."""
    if not z_prev > 0:
        raise ValueError(f"previous objective must be > 0, got {z_prev}")
    return abs(z_prev - z_curr) / z_prev


class AssignmentState:
    """Mutable solver state: path sets, link flows and link times.

    ``path_sets`` maps ``(origin, destination, class)`` to an insertion-ordered
    ``{Path: flow}``. Link flows are maintained incrementally; times of a
    link (and of its rail twin) are refreshed whenever its flow changes.
    """

    def __init__(self, net: Network, demand: DemandTable, config: SolverConfig):
        self.net = net
        self.demand = demand
        self.config = config
        self.flows = {a.id: 0.0 for a in net.links}
        self.path_sets = {}
        self._lpf = {a.id: lpf_for(a, config.beta) for a in net.links}
        self.times = {a.id: _time(net, a, self.flows, config.beta) for a in net.links}
        self._weights = {}
        self.iteration = 0
        self.last_step = None

    def keys(self):
        """All (origin, destination, class) triples with positive demand, in sweep order."""
        out = []
        for (o, d), q in self.demand.items():
            for cls, v in zip(CLASSES, q):
                if v > 0:
                    out.append((o, d, cls))
        return sorted(out)

    def weights(self, path: Path) -> list:
        w = self._weights.get(path)
        if w is None:
            link = self.net.link
            w = [(lid, class_weight(link[lid], path.mode, self.config)) for lid in path.links]
            self._weights[path] = w
        return w

    def add_path_flow(self, path: Path, delta: float):
        if delta == 0.0:
            return
        flows = self.flows
        touched = []
        for lid, w in self.weights(path):
            x = flows[lid] + w * delta
            if x < 0.0:
                if x < -1e-9 * max(1.0, abs(w * delta)):
                    raise AssignmentError(f"link {lid} flow went negative ({x})")
                x = 0.0
            flows[lid] = x
            touched.append(lid)
        self._refresh_times(touched)

    def _refresh_times(self, lids):
        link = self.net.link
        flows = self.flows
        for lid in lids:
            a = link[lid]
            if a.kind == "road":
                self.times[lid] = road_time(self._lpf[lid], flows[lid])
            elif a.kind == "rail":
                opp = flows.get(a.twin, 0.0) if a.twin is not None else 0.0
                t = rail_time(self._lpf[lid], flows[lid], opp)
                self.times[lid] = t
                if a.twin is not None:
                    self.times[a.twin] = t

    def derivative(self, lid: str) -> float:
        a = self.net.link[lid]
        if a.kind == "road":
            return road_time_deriv(self._lpf[lid], self.flows[lid])
        if a.kind == "rail":
            opp = self.flows.get(a.twin, 0.0) if a.twin is not None else 0.0
            return rail_time_deriv(self._lpf[lid], self.flows[lid], opp)
        return 0.0

    def recomputed_flows(self) -> dict:
        return accumulate_link_flows(self.net, self.path_sets, self.config)

    def check_consistency(self):
        """Compare incremental link flows against a full recomputation."""
        fresh = self.recomputed_flows()
        for lid, x in fresh.items():
            y = self.flows[lid]
            if abs(x - y) > CONSISTENCY_RTOL * max(abs(x), abs(y)) + 1e-12:
                raise AssignmentError(f"link {lid}: incremental flow {y!r} != recomputed {x!r}")

    def objective(self) -> ObjectiveValue:
        return objective(self.net, self.flows, self.demand, self.config)

    def result(self, objective_trace, gap_trace, iterations, converged, algorithm) -> AssignmentResult:
        raw = self.objective().raw
        return AssignmentResult(
            link_flows=dict(self.flows),
            path_sets={k: list(ps.items()) for k, ps in self.path_sets.items()},
            objective_trace=list(objective_trace),
            gap_trace=list(gap_trace),
            iterations_used=iterations,
            converged=converged,
            raw_objective=raw,
            algorithm=algorithm,
            beta=self.config.beta,
            link_times=dict(self.times),
        )


def _all_or_nothing(state: AssignmentState) -> dict:
    """Shortest path at current times for every demand triple, one tree per origin and class."""
    wanted = {}
    for o, d, cls in state.keys():
        wanted.setdefault((o, cls), []).append(d)
    paths = {}
    missing = []
    for (o, cls), dests in sorted(wanted.items()):
        tree = shortest_path_tree(state.net, state.times, cls, o, dests)
        for d in dests:
            if tree[d] is None:
                missing.append((o, d, cls, state.demand.demand(o, d, cls)))
            paths[(o, d, cls)] = tree[d]
    if missing:
        raise UnreachableDemandError(sorted(missing))
    return paths


def initialize(net: Network, demand: DemandTable, config: SolverConfig) -> AssignmentState:
    """Load every positive demand on its free-flow shortest path.

    All paths are found at free-flow times before any flow is loaded.
    """
    for (o, d), _ in demand.items():
        for n in (o, d):
            node = net.node.get(n)
            if node is None or node.kind != "centroid":
                raise AssignmentError(f"demand references {n!r}, which is not a centroid")
    state = AssignmentState(net, demand, config)
    paths = _all_or_nothing(state)
    for key in state.keys():
        q = demand.demand(key[0], key[1], key[2])
        state.path_sets[key] = {paths[key]: q}
        state.add_path_flow(paths[key], q)
    state.iteration = 1
    return state


def gp_inner_update(state: AssignmentState, od_pair, mode: str):
    """One gradient-projection move for a single O-D pair and demand class.

    Flow leaves every non-shortest path in proportion to its excess cost
    over the shortest path, scaled by the summed link-time derivatives on
    the links the two paths do not share. The shortest path takes the
    remainder, so the class demand is met exactly.
    """
    o, d = od_pair
    q = state.demand.demand(o, d, mode)
    key = (o, d, mode)
    ps = state.path_sets.get(key)
    if q <= 0 or ps is None:
        return
    times = state.times
    best = shortest_path(state.net, times, mode, o, d)
    if best is None:
        raise UnreachableDemandError([(o, d, mode, q)])
    if best not in ps:
        ps[best] = 0.0
    if len(ps) == 1:
        return

    alpha = state.config.step_size
    d_best = path_time(best, times)
    best_links = set(best.links)
    new = {}
    for k, f in ps.items():
        if k == best:
            continue
        excess = path_time(k, times) - d_best
        if excess <= 0.0:
            new[k] = f
            continue
        w = state.weights(k)
        wb = state.weights(best)
        k_links = set(k.links)
        s = math.fsum(
            [wt * state.derivative(lid) for lid, wt in w if lid not in best_links]
            + [wt * state.derivative(lid) for lid, wt in wb if lid not in k_links]
        )
        new[k] = max(0.0, f - alpha / s * excess) if s > 0 else 0.0
    remainder = q - math.fsum(new.values())
    new[best] = max(0.0, remainder)

    for k, f in new.items():
        state.add_path_flow(k, f - ps[k])
        if f > 0.0:
            ps[k] = f
        else:
            del ps[k]


def _run(state, sweep, config, algorithm, callback):
    z = state.objective().normalized
    obj_trace = [z]
    gap_trace = []
    converged = False
    n = 0
    if not state.keys():
        return state.result(obj_trace, gap_trace, 0, True, algorithm)
    if callback is not None:
        callback(state, 0)
    for n in range(1, config.max_iterations + 1):
        state.iteration = n
        sweep(state)
        if config.consistency_check_every and n % config.consistency_check_every == 0:
            state.check_consistency()
        z_new = state.objective().normalized
        gap = relative_gap(z, z_new) if z > 0 else 0.0
        obj_trace.append(z_new)
        gap_trace.append(gap)
        logger.debug("%s iteration %d: objective %.9g gap %.3e", algorithm, n, z_new, gap)
        if callback is not None:
            callback(state, n)
        z = z_new
        if gap <= config.rel_gap_tol:
            converged = True
            break
    return state.result(obj_trace, gap_trace, n, converged, algorithm)


def _gp_sweep(state):
    for o, d, cls in state.keys():
        gp_inner_update(state, (o, d), cls)


def solve_gp(net: Network, demand: DemandTable, config: Optional[SolverConfig] = None,
             callback: Optional[Callable] = None) -> AssignmentResult:
    """Gradient-projection user equilibrium.

    ``callback(state, iteration)`` runs after the initial loading
    (iteration 0) and after every outer sweep.
    """
    config = config or SolverConfig()
    state = initialize(net, demand, config)
    return _run(state, _gp_sweep, config, "gp", callback)


def solve_intermodal_only(net: Network, intermodal_demand: dict,
                          config: Optional[SolverConfig] = None, **kw) -> AssignmentResult:
    """Assign intermodal demand alone; ``intermodal_demand`` maps (o, d) -> units/day."""
    table = DemandTable({k: (0.0, 0.0, v) for k, v in intermodal_demand.items()})
    return solve_gp(net, table, config, **kw)


def _objective_slope(state, direction, step):
    """d/d(step) of the raw objective along ``flows + step * direction``."""
    flows = state.flows
    total = []
    for a in state.net.links_of_kind("road"):
        da = direction.get(a.id, 0.0)
        if da:
            total.append(road_time(state._lpf[a.id], max(0.0, flows[a.id] + step * da)) * da)
    for a, b in state.net.rail_pairs:
        dy = direction.get(a.id, 0.0) + (direction.get(b.id, 0.0) if b is not None else 0.0)
        if dy:
            y = flows[a.id] + (flows[b.id] if b is not None else 0.0)
            total.append(rail_time(state._lpf[a.id], max(0.0, y + step * dy)) * dy)
    return math.fsum(total)


def line_search(state, direction) -> float:
    """Exact step along ``direction`` by bisection on the objective slope."""
    if _objective_slope(state, direction, 0.0) >= 0.0:
        return 0.0
    if _objective_slope(state, direction, 1.0) <= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(FW_LINE_SEARCH_MAX_ITER):
        if hi - lo <= FW_LINE_SEARCH_TOL:
            break
        mid = 0.5 * (lo + hi)
        if _objective_slope(state, direction, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _fw_sweep(state):
    targets = _all_or_nothing(state)
    aux = {a.id: 0.0 for a in state.net.links}
    for key, path in targets.items():
        q = state.demand.demand(*key)
        for lid, w in state.weights(path):
            aux[lid] += w * q
    direction = {lid: aux[lid] - x for lid, x in state.flows.items()}
    step = line_search(state, direction)
    state.last_step = step
    if step == 0.0:
        return
    for key, ps in state.path_sets.items():
        target = targets[key]
        q = state.demand.demand(*key)
        for k in list(ps):
            f = ps[k]
            state.add_path_flow(k, -step * f)
            ps[k] = f - step * f
        ps[target] = ps.get(target, 0.0) + step * q
        state.add_path_flow(target, step * q)
        # demand conservation: the target path absorbs rounding
        rest = math.fsum(f for k, f in ps.items() if k != target)
        fixed = q - rest
        state.add_path_flow(target, fixed - ps[target])
        ps[target] = fixed
        for k in [k for k, f in ps.items() if f <= 0.0]:
            del ps[k]


def solve_fw(net: Network, demand: DemandTable, config: Optional[SolverConfig] = None,
             callback: Optional[Callable] = None) -> AssignmentResult:
    """Frank-Wolfe user equilibrium; same stopping rule and result as :func:`solve_gp`."""
    config = config or SolverConfig()
    state = initialize(net, demand, config)
    return _run(state, _fw_sweep, config, "fw", callback)
