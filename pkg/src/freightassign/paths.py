"""Mode-restricted least-time paths over the intermodal network."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional

from .network import MODES, Network, NetworkError, mode_link_set


@dataclass(frozen=True)
class Path:
    origin: str
    destination: str
    links: tuple
    mode: str

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))

    def __len__(self):
        return len(self.links)


@lru_cache(maxsize=64)
def _usable_links(net: Network, mode: str) -> frozenset:
    return frozenset(mode_link_set(net, mode))


def usable_links(net: Network, mode: str, origin=None, destination=None) -> frozenset:
    """Links a search for ``mode`` may traverse, honouring the terminal whitelist."""
    links = _usable_links(net, mode)
    if mode == "intermodal" and (origin, destination) in net.terminal_whitelist:
        allowed = net.terminal_whitelist[(origin, destination)]
        links = frozenset(
            lid for lid in links if net.link[lid].kind != "terminal" or lid in allowed
        )
    return links


def _check_endpoints(net: Network, mode, origin, destination=None):
    if mode not in MODES:
        raise NetworkError(f"unknown mode {mode!r}")
    for n in (origin, destination):
        if n is None:
            continue
        node = net.node.get(n)
        if node is None:
            raise NetworkError(f"unknown node {n!r}")
        if node.kind != "centroid":
            raise NetworkError(f"{n!r} is not a centroid")
    if origin == destination:
        raise NetworkError(f"origin and destination are both {origin!r}")


def _search(net, times, usable, origin, target=None):
    """Label-setting search from ``origin``.

    Labels are ordered by (cost, link count, link-id sequence), which makes
    ties deterministic. Centroids other than the origin are never expanded,
    so paths cannot pass through another zone.
    """
    best = {origin: (0.0, 0, ())}
    heap = [(0.0, 0, (), origin)]
    done = set()
    outgoing = net.outgoing
    node = net.node
    while heap:
        cost, hops, seq, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == target:
            break
        if u != origin and node[u].kind == "centroid":
            continue
        for a in outgoing.get(u, ()):
            if a.id not in usable:
                continue
            v = a.to_node
            if v in done:
                continue
            label = (cost + times[a.id], hops + 1, seq + (a.id,))
            old = best.get(v)
            if old is None or label < old:
                best[v] = label
                heapq.heappush(heap, (*label, v))
    return best, done


def shortest_path(net: Network, times: Mapping, mode: str, origin: str,
                  destination: str) -> Optional[Path]:
    """Least-time ``mode`` path from ``origin`` to ``destination``, or None if unreachable."""
    _check_endpoints(net, mode, origin, destination)
    usable = usable_links(net, mode, origin, destination)
    best, done = _search(net, times, usable, origin, destination)
    if destination not in done:
        return None
    return Path(origin, destination, best[destination][2], mode)


def shortest_path_tree(net: Network, times: Mapping, mode: str, origin: str,
                       destinations=None) -> dict:
    """Shortest paths from one origin to many destinations.

    One search serves every destination that has no terminal whitelist entry;
    whitelisted pairs get their own search. Unreachable destinations map to None.
    """
    _check_endpoints(net, mode, origin)
    if destinations is None:
        destinations = [c for c in net.centroids if c != origin]
    out = {}
    shared = None
    for d in destinations:
        _check_endpoints(net, mode, origin, d)
        if mode == "intermodal" and (origin, d) in net.terminal_whitelist:
            out[d] = shortest_path(net, times, mode, origin, d)
            continue
        if shared is None:
            shared = _search(net, times, usable_links(net, mode), origin)
        best, done = shared
        out[d] = Path(origin, d, best[d][2], mode) if d in done else None
    return out


def path_time(path: Path, times: Mapping) -> float:
    """Sum of link travel times along ``path``."""
    total = 0.0
    for lid in path.links:
        try:
            total += times[lid]
        except KeyError:
            raise NetworkError(f"no travel time for link {lid!r}") from None
    return total


def symmetric_difference_links(p1: Path, p2: Path) -> set:
    """Links on exactly one of the two paths."""
    if (p1.origin, p1.destination, p1.mode) != (p2.origin, p2.destination, p2.mode):
        raise NetworkError("paths must share origin, destination and mode")
    return set(p1.links) ^ set(p2.links)


def path_nodes(net: Network, path: Path) -> list:
    nodes = [path.origin]
    for lid in path.links:
        nodes.append(net.link[lid].to_node)
    return nodes
