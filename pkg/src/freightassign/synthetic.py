"""Small synthetic networks and demand used by the tests and the examples.

None of this is FAF data; the numbers are made up to exercise congestion.
"""

from __future__ import annotations

import math

import numpy as np

from .equilibrium import DemandTable
from .network import Link, Network, Node, make_twin_pair


def _road(id_, u, v, t0, cap, length=None):
    return Link(id_, u, v, "road", t0 * 60.0 if length is None else length, t0, cap)


def _both(kind, id_, u, v, t, length=0.0):
    return [Link(f"{id_}+", u, v, kind, length, t), Link(f"{id_}-", v, u, kind, length, t)]


def two_parallel_links(c1=20.0, c2=10.0, t0=1.0):
    """O -> A, two parallel road links A -> B, B -> D."""
    nodes = [Node("O", "centroid"), Node("D", "centroid"),
             Node("A", "road_junction"), Node("B", "road_junction")]
    links = [
        Link("cO", "O", "A", "road_connector", 0.0, 0.0),
        Link("cD", "B", "D", "road_connector", 0.0, 0.0),
        _road("L1", "A", "B", t0, c1),
        _road("L2", "A", "B", t0, c2),
    ]
    return Network(nodes, links)


def parallel_road_links(t0s, caps):
    """O -> A, one road link A -> B per (t0, capacity), B -> D."""
    nodes = [Node("O", "centroid"), Node("D", "centroid"),
             Node("A", "road_junction"), Node("B", "road_junction")]
    links = [Link("cO", "O", "A", "road_connector", 0.0, 0.0),
             Link("cD", "B", "D", "road_connector", 0.0, 0.0)]
    links += [_road(f"L{i + 1}", "A", "B", t, c) for i, (t, c) in enumerate(zip(t0s, caps))]
    return Network(nodes, links)


def intermodal_chain(rail_capacity=1000.0, road_capacity=1000.0):
    """Road-rail-road chain between two zones plus a slower road-only route.

    Intermodal chain: O -> c (road) -> d (rail) -> e (rail) -> f (road) -> D
    costing 0.5 + 5 + 0.5 = 6 h at free flow. Road-only route c -> x -> y -> f
    costs 3 + 4 + 3 = 10 h.
    """
    nodes = [
        Node("O", "centroid", -90.0, 35.0), Node("D", "centroid", -80.0, 35.0),
        Node("c", "road_junction", -89.5, 35.0), Node("f", "road_junction", -80.5, 35.0),
        Node("x", "road_junction", -87.0, 36.0), Node("y", "road_junction", -83.0, 36.0),
        Node("d", "rail_junction", -89.0, 34.5), Node("e", "rail_junction", -81.0, 34.5),
    ]
    links = [
        *_both("road_connector", "cO", "O", "c", 0.0, 10.0),
        *_both("road_connector", "cD", "D", "f", 0.0, 10.0),
        *_both("terminal", "T1", "c", "d", 0.5),
        *_both("terminal", "T2", "f", "e", 0.5),
        *make_twin_pair("R1", "R1r", "d", "e", 300.0, 5.0, rail_capacity),
        _road("Rx", "c", "x", 3.0, road_capacity), _road("Rx'", "x", "c", 3.0, road_capacity),
        _road("Rxy", "x", "y", 4.0, road_capacity), _road("Rxy'", "y", "x", 4.0, road_capacity),
        _road("Ry", "y", "f", 3.0, road_capacity), _road("Ry'", "f", "y", 3.0, road_capacity),
    ]
    return Network(nodes, links)


def rail_track(capacity=10.0, t0=1.0):
    """Two zones joined by one twinned rail track through rail connectors."""
    nodes = [Node("W", "centroid"), Node("E", "centroid"),
             Node("r1", "rail_junction"), Node("r2", "rail_junction")]
    links = [
        *_both("rail_connector", "cW", "W", "r1", 0.0),
        *_both("rail_connector", "cE", "E", "r2", 0.0),
        *make_twin_pair("T", "T'", "r1", "r2", 60.0 * t0, t0, capacity),
    ]
    return Network(nodes, links)


def rail_corridor(capacities=(10.0, 12.0, 8.0), bypass_time=2.5):
    """Rail corridor of short, low-capacity tracks, each with a slow high-capacity bypass.

    Segment ``i`` joins junctions ``j{i}`` and ``j{i+1}`` by track ``S{i}``
    (1 h, given capacity) and by ``B{i}a`` / ``B{i}b`` through ``m{i}``
    (``bypass_time`` in total, capacity 1000).
    """
    n = len(capacities)
    nodes = [Node("W", "centroid"), Node("E", "centroid")]
    nodes += [Node(f"j{i}", "rail_junction") for i in range(n + 1)]
    nodes += [Node(f"m{i}", "rail_junction") for i in range(n)]
    links = [*_both("rail_connector", "cW", "W", "j0", 0.0),
             *_both("rail_connector", "cE", "E", f"j{n}", 0.0)]
    half = bypass_time / 2.0
    for i, cap in enumerate(capacities):
        links += make_twin_pair(f"S{i}", f"S{i}r", f"j{i}", f"j{i + 1}", 60.0, 1.0, cap)
        links += make_twin_pair(f"B{i}a", f"B{i}ar", f"j{i}", f"m{i}", 60.0 * half, half, 1000.0)
        links += make_twin_pair(f"B{i}b", f"B{i}br", f"m{i}", f"j{i + 1}", 60.0 * half, half, 1000.0)
    return Network(nodes, links)


def rail_corridor_demand(trains_each_way=7.5):
    return DemandTable({("W", "E"): (0.0, trains_each_way, 0.0),
                        ("E", "W"): (0.0, trains_each_way, 0.0)})


def _planar_deg(lon1, lat1, lon2, lat2):
    return math.hypot(lon1 - lon2, lat1 - lat2)


def grid_network(n_centroids=20, road_size=5, rail_size=3, seed=0,
                 road_capacity=(250.0, 500.0), rail_capacity=(8.0, 16.0),
                 terminal_delay=2.0):
    """Road grid, coarser rail grid, terminals at every rail junction, random zones.

    Road links are 60 mi at 60 mph; rail links 120 mi at 60 mph. Each zone
    connects to its nearest road junction (0.1 h) and nearest rail junction
    (0.5 h). Coordinates are lon/lat degrees.
    """
    rng = np.random.default_rng(seed)
    nodes, links = [], []
    lon0, lat0 = -95.0, 32.0
    road_xy = {}
    for i in range(road_size):
        for j in range(road_size):
            nid = f"n{i}_{j}"
            road_xy[nid] = (lon0 + j, lat0 + i)
            nodes.append(Node(nid, "road_junction", *road_xy[nid]))
    for i in range(road_size):
        for j in range(road_size):
            for di, dj in ((0, 1), (1, 0)):
                if i + di < road_size and j + dj < road_size:
                    u, v = f"n{i}_{j}", f"n{i + di}_{j + dj}"
                    cap = float(rng.uniform(*road_capacity))
                    links.append(Link(f"r_{u}_{v}", u, v, "road", 60.0, 1.0, cap))
                    links.append(Link(f"r_{v}_{u}", v, u, "road", 60.0, 1.0, cap))

    rail_xy = {}
    step = (road_size - 1) / (rail_size - 1)
    for i in range(rail_size):
        for j in range(rail_size):
            nid = f"k{i}_{j}"
            rail_xy[nid] = (lon0 + j * step + 0.3, lat0 + i * step - 0.3)
            nodes.append(Node(nid, "rail_junction", *rail_xy[nid]))
    for i in range(rail_size):
        for j in range(rail_size):
            for di, dj in ((0, 1), (1, 0)):
                if i + di < rail_size and j + dj < rail_size:
                    u, v = f"k{i}_{j}", f"k{i + di}_{j + dj}"
                    cap = float(rng.uniform(*rail_capacity))
                    links += make_twin_pair(f"l_{u}_{v}", f"l_{v}_{u}", u, v, 120.0, 2.0, cap)

    def nearest(xy, table):
        return min(table, key=lambda k: (_planar_deg(*xy, *table[k]), k))

    for k, xy in rail_xy.items():
        r = nearest(xy, road_xy)
        links += _both("terminal", f"t_{k}", r, k, terminal_delay)

    for c in range(n_centroids):
        cid = f"z{c:02d}"
        xy = (lon0 + float(rng.uniform(0, road_size - 1)), lat0 + float(rng.uniform(0, road_size - 1)))
        nodes.append(Node(cid, "centroid", *xy))
        links += _both("road_connector", f"cr_{cid}", cid, nearest(xy, road_xy), 0.1, 5.0)
        links += _both("rail_connector", f"cl_{cid}", cid, nearest(xy, rail_xy), 0.5, 20.0)
    return Network(nodes, links)


def grid_demand(net, seed=1, truck=(0.0, 20.0), rail=(0.0, 0.6), intermodal=(0.0, 0.5),
                density=1.0):
    """Random three-class demand between all centroid pairs."""
    rng = np.random.default_rng(seed)
    table = DemandTable()
    for o in net.centroids:
        for d in net.centroids:
            if o == d or rng.uniform() > density:
                continue
            table.set(o, d, rng.uniform(*truck), rng.uniform(*rail), rng.uniform(*intermodal))
    return table


def congested_grid(seed=1):
    """20 zones on a 7x7 road grid with a 4x4 rail grid; a handful of road and
    rail links end up over capacity at equilibrium."""
    net = grid_network(n_centroids=20, road_size=7, rail_size=4, seed=seed,
                       road_capacity=(100.0, 2000.0), rail_capacity=(5.0, 40.0))
    demand = grid_demand(net, seed=seed + 1, truck=(0.0, 30.0), rail=(0.0, 0.45),
                         intermodal=(0.0, 0.3))
    return net, demand
