"""Post-assignment summaries: equilibrium quality, ton-miles, rail congestion, beta sweeps."""

from __future__ import annotations

import math
from dataclasses import replace

from .equilibrium import AssignmentResult, SolverConfig, link_times, solve_gp
from .paths import path_time


def ue_cost_spread(result: AssignmentResult, times=None):
    """Max minus min travel time over the used paths of every path set.

    Returns ``(per_set, worst)`` where ``per_set`` maps each
    (origin, destination, class) key to its spread.
    """
    times = result.link_times if times is None else times
    per_set = {}
    for key, entries in result.path_sets.items():
        costs = [path_time(p, times) for p, f in entries if f > 0]
        per_set[key] = max(costs) - min(costs) if costs else 0.0
    return per_set, max(per_set.values(), default=0.0)


def ton_miles(link_flows, net, payload_factors) -> dict:
    """Daily ton-miles on road and rail links.

    ``link_flows`` may be an :class:`AssignmentResult` or a flow mapping.
    Road flows are in trucks (intermodal drayage already folded in), rail
    flows in trains. Terminal and connector links carry no ton-miles.
    """
    if isinstance(link_flows, AssignmentResult):
        link_flows = link_flows.link_flows
    try:
        per_truck = float(payload_factors["tons_per_truck"])
        per_train = float(payload_factors["tons_per_train"])
    except KeyError as e:
        raise ValueError(f"missing payload factor {e.args[0]!r}") from None
    road = math.fsum(
        link_flows.get(a.id, 0.0) * a.length * per_truck for a in net.links_of_kind("road")
    )
    rail = math.fsum(
        link_flows.get(a.id, 0.0) * a.length * per_train for a in net.links_of_kind("rail")
    )
    return {"road": road, "rail": rail}


def over_capacity_pct(flow, capacity) -> float:
    return max(0.0, 100.0 * (flow - capacity) / capacity)


def rail_congestion(net, link_flows, beta) -> list:
    """One row per rail track: combined flow over capacity (%) and travel time.

    Rows are keyed by the lower link id of each twin pair and sorted by
    descending over-capacity percentage, then id.
    """
    times = link_times(net, link_flows, beta)
    rows = []
    for a, b in net.rail_pairs:
        y = link_flows.get(a.id, 0.0) + (link_flows.get(b.id, 0.0) if b is not None else 0.0)
        rows.append({
            "link_id": a.id,
            "pct_over_capacity": over_capacity_pct(y, a.capacity),
            "travel_time_hours": times[a.id],
        })
    rows.sort(key=lambda r: (-r["pct_over_capacity"], r["link_id"]))
    return rows


def congested_links(net, link_flows, beta, top_n=10) -> list:
    """Top ``top_n`` over-capacity links, road or rail, as report rows."""
    times = link_times(net, link_flows, beta)
    rows = []
    for a, b in net.rail_pairs:
        y = link_flows.get(a.id, 0.0) + (link_flows.get(b.id, 0.0) if b is not None else 0.0)
        rows.append((a, y))
    rows += [(a, link_flows.get(a.id, 0.0)) for a in net.links_of_kind("road")]
    out = [
        {
            "link_id": a.id,
            "kind": a.kind,
            "pct_over_capacity": over_capacity_pct(y, a.capacity),
            "travel_time_hours": times[a.id],
        }
        for a, y in rows
    ]
    out = [r for r in out if r["pct_over_capacity"] > 0]
    out.sort(key=lambda r: (-r["pct_over_capacity"], r["link_id"]))
    return out[:top_n]


def _track_key(net, lid):
    a = net.link[lid]
    if a.kind != "rail":
        raise ValueError(f"tracked link {lid!r} is not a rail link")
    return min(lid, a.twin) if a.twin is not None else lid


def beta_sweep(net, demand, config: SolverConfig, betas, tracked_links=None):
    """Solve once per ``beta`` and tabulate rail congestion.

    Returns ``(rows, results)``: one row per (beta, tracked track) with the
    over-capacity percentage and travel time, and the solver result per beta
    in input order. Without ``tracked_links`` every track that exceeds
    capacity for at least one beta is tracked.
    """
    betas = list(betas)
    if not betas:
        raise ValueError("betas must be non-empty")
    results = []
    tables = []
    for beta in betas:
        res = solve_gp(net, demand, replace(config, beta=float(beta)))
        results.append(res)
        tables.append({r["link_id"]: r for r in rail_congestion(net, res.link_flows, beta)})

    if tracked_links is None:
        tracked = sorted({lid for t in tables for lid, r in t.items() if r["pct_over_capacity"] > 0})
        shown = {lid: lid for lid in tracked}
    else:
        shown = {}
        for lid in tracked_links:
            if lid not in net.link:
                raise ValueError(f"unknown tracked link {lid!r}")
            shown.setdefault(_track_key(net, lid), lid)
        tracked = list(shown)

    rows = []
    for lid in tracked:
        for beta, res, table in zip(betas, results, tables):
            r = table[lid]
            rows.append({
                "link_id": shown[lid],
                "beta": float(beta),
                "pct_over_capacity": r["pct_over_capacity"],
                "travel_time_hours": r["travel_time_hours"],
                "iterations": res.iterations_used,
                "converged": res.converged,
            })
    return rows, results
