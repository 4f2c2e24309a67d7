"""Intermodal road-rail network: node/link taxonomy, validation, mode views."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional

NODE_KINDS = ("centroid", "road_junction", "rail_junction")
LINK_KINDS = ("road", "rail", "terminal", "road_connector", "rail_connector")
MODES = ("truck", "rail", "intermodal")

# links whose travel time depends on flow
CONGESTIBLE_KINDS = ("road", "rail")

RAIL_DEFAULT_SPEED_MPH = 60.0


class NetworkError(ValueError):
    """Raised when a network query is malformed (unknown link, wrong kind...)."""


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    lon: Optional[float] = None
    lat: Optional[float] = None

    @property
    def coordinates(self):
        if self.lon is None or self.lat is None:
            return None
        return (self.lon, self.lat)


@dataclass(frozen=True)
class Link:
    id: str
    from_node: str
    to_node: str
    kind: str
    length: float
    free_flow_time: float
    capacity: Optional[float] = None
    twin: Optional[str] = None
    beta: Optional[float] = None  # per-link override of the network rail exponent

    @property
    def is_congestible(self) -> bool:
        return self.kind in CONGESTIBLE_KINDS


@dataclass(frozen=True)
class Violation:
    """One broken network invariant; ``subject`` is the offending node/link id."""

    subject: str
    message: str

    def __str__(self):
        return f"{self.subject}: {self.message}"


@dataclass(frozen=True)
class Network:
    """Immutable network.

    ``nodes`` and ``links`` keep the order they were given in (duplicates
    included, so :func:`validate_network` can report them). Lookups go
    through :attr:`node` / :attr:`link`, which keep the last occurrence.

    ``restricted_links`` are excluded from every shortest-path search.
    ``terminal_whitelist`` maps an ``(origin, destination)`` pair to the
    terminal link ids that pair may use; pairs absent from the map may use
    any terminal.
    """

    nodes: tuple = ()
    links: tuple = ()
    restricted_links: frozenset = frozenset()
    terminal_whitelist: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "restricted_links", frozenset(self.restricted_links))
        object.__setattr__(
            self,
            "terminal_whitelist",
            {tuple(k): frozenset(v) for k, v in dict(self.terminal_whitelist).items()},
        )

    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.links == other.links
            and self.restricted_links == other.restricted_links
            and self.terminal_whitelist == other.terminal_whitelist
        )

    @cached_property
    def node(self) -> dict:
        return {n.id: n for n in self.nodes}

    @cached_property
    def link(self) -> dict:
        return {a.id: a for a in self.links}

    @cached_property
    def outgoing(self) -> dict:
        """Adjacency: node id -> list of outgoing links, sorted by link id."""
        adj = {n.id: [] for n in self.nodes}
        for a in self.links:
            adj.setdefault(a.from_node, []).append(a)
        for lst in adj.values():
            lst.sort(key=lambda a: a.id)
        return adj

    @cached_property
    def centroids(self) -> list:
        return sorted(n.id for n in self.nodes if n.kind == "centroid")

    def links_of_kind(self, *kinds) -> list:
        return [a for a in self.links if a.kind in kinds]

    @cached_property
    def rail_pairs(self) -> list:
        """Unordered rail twin pairs as ``(a, a')`` with ``a.id < a'.id``.

        A rail link without a usable twin appears alone as ``(a, None)``.
        """
        seen = set()
        pairs = []
        for a in sorted(self.links_of_kind("rail"), key=lambda a: a.id):
            if a.id in seen:
                continue
            seen.add(a.id)
            twin = self.link.get(a.twin) if a.twin is not None else None
            if twin is not None and twin.kind == "rail" and twin.id not in seen:
                seen.add(twin.id)
                pairs.append((a, twin))
            else:
                pairs.append((a, None))
        return pairs

    def with_restrictions(self, restricted_links=None, terminal_whitelist=None) -> "Network":
        return Network(
            self.nodes,
            self.links,
            self.restricted_links if restricted_links is None else restricted_links,
            self.terminal_whitelist if terminal_whitelist is None else terminal_whitelist,
        )


def _endpoint_kinds(net: Network, link: Link):
    a = net.node.get(link.from_node)
    b = net.node.get(link.to_node)
    return (a.kind if a else None, b.kind if b else None)


_ENDPOINTS = {
    "road": ({"road_junction"}, {"road_junction"}),
    "rail": ({"rail_junction"}, {"rail_junction"}),
}


def validate_network(net: Network) -> list:
    """Return every invariant violation in ``net``; an empty list means valid."""
    report = []
    seen = set()
    for n in net.nodes:
        if n.id in seen:
            report.append(Violation(n.id, "duplicate node id"))
        seen.add(n.id)
        if n.kind not in NODE_KINDS:
            report.append(Violation(n.id, f"unknown node kind {n.kind!r}"))

    seen = set()
    for a in net.links:
        if a.id in seen:
            report.append(Violation(a.id, "duplicate link id"))
        seen.add(a.id)
        report.extend(_check_link(net, a))

    for lid in sorted(net.restricted_links):
        if lid not in net.link:
            report.append(Violation(lid, "restricted link does not exist"))
    for (o, d), allowed in sorted(net.terminal_whitelist.items()):
        for lid in sorted(allowed):
            a = net.link.get(lid)
            if a is None or a.kind != "terminal":
                report.append(
                    Violation(lid, f"whitelisted for ({o}, {d}) but is not a terminal link")
                )
    return report


def _check_link(net: Network, a: Link) -> list:
    out = []
    if a.kind not in LINK_KINDS:
        return [Violation(a.id, f"unknown link kind {a.kind!r}")]
    for end in (a.from_node, a.to_node):
        if end not in net.node:
            out.append(Violation(a.id, f"endpoint {end!r} is not a node"))
    if out:
        return out
    if a.from_node == a.to_node:
        out.append(Violation(a.id, "self-loop"))
    if not a.length >= 0:
        out.append(Violation(a.id, f"length must be >= 0, got {a.length}"))

    kf, kt = _endpoint_kinds(net, a)
    if a.kind in CONGESTIBLE_KINDS:
        if not a.free_flow_time > 0:
            out.append(Violation(a.id, "free_flow_time must be > 0"))
        if a.capacity is None or not a.capacity > 0:
            out.append(Violation(a.id, "capacity must be > 0"))
        ok_from, ok_to = _ENDPOINTS[a.kind]
        if kf not in ok_from or kt not in ok_to:
            out.append(Violation(a.id, f"{a.kind} link joins {kf} -> {kt}"))
    else:
        if not a.free_flow_time >= 0:
            out.append(Violation(a.id, "fixed delay must be >= 0"))
        ends = {kf, kt}
        if a.kind == "terminal" and ends != {"road_junction", "rail_junction"}:
            out.append(Violation(a.id, f"terminal link must join road and rail nodes, joins {kf} -> {kt}"))
        if a.kind == "road_connector" and ends != {"centroid", "road_junction"}:
            out.append(Violation(a.id, f"road_connector joins {kf} -> {kt}"))
        if a.kind == "rail_connector" and ends != {"centroid", "rail_junction"}:
            out.append(Violation(a.id, f"rail_connector joins {kf} -> {kt}"))

    if a.beta is not None and not a.beta >= 1:
        out.append(Violation(a.id, f"beta override must be >= 1, got {a.beta}"))

    if a.kind == "rail":
        out.extend(_check_twin(net, a))
    elif a.twin is not None:
        out.append(Violation(a.id, "only rail links may have a twin"))
    return out


def _check_twin(net: Network, a: Link) -> list:
    if a.twin is None:
        return [Violation(a.id, "rail link has no twin")]
    b = net.link.get(a.twin)
    if b is None:
        return [Violation(a.id, f"twin {a.twin!r} does not exist")]
    if b.kind != "rail":
        return [Violation(a.id, f"twin {b.id!r} is a {b.kind} link")]
    out = []
    if b.id == a.id:
        out.append(Violation(a.id, "rail link is its own twin"))
    if b.twin != a.id:
        out.append(Violation(a.id, f"twinning not symmetric: {b.id!r}.twin = {b.twin!r}"))
    if (b.from_node, b.to_node) != (a.to_node, a.from_node):
        out.append(Violation(a.id, f"twin {b.id!r} does not run in the opposite direction"))
    for attr in ("length", "free_flow_time", "capacity", "beta"):
        if getattr(a, attr) != getattr(b, attr):
            out.append(Violation(a.id, f"twin {b.id!r} differs in {attr}"))
    return out


def mode_link_set(net: Network, mode: str) -> set:
    """Link ids usable by ``mode``, minus restricted links.

    Intermodal shipments may use every link kind except rail connectors:
    they reach the rail network only through terminals.
    """
    if mode == "truck":
        kinds = ("road", "road_connector")
    elif mode == "rail":
        kinds = ("rail", "rail_connector")
    elif mode == "intermodal":
        kinds = ("road", "road_connector", "rail", "terminal")
    else:
        raise NetworkError(f"unknown mode {mode!r}; expected one of {MODES}")
    return {a.id for a in net.links if a.kind in kinds and a.id not in net.restricted_links}


def twin_of(net: Network, rail_link: str) -> str:
    a = net.link.get(rail_link)
    if a is None:
        raise NetworkError(f"unknown link {rail_link!r}")
    if a.kind != "rail":
        raise NetworkError(f"{rail_link!r} is a {a.kind} link, not rail")
    if a.twin is None:
        raise NetworkError(f"rail link {rail_link!r} has no twin")
    return a.twin


def free_flow_time(length: float, speed_mph: Optional[float] = None, kind: str = "road") -> float:
    """Free-flow time in hours from a length and a speed.

    Rail links default to 60 mph when no speed is given.
    """
    if speed_mph is None:
        if kind != "rail":
            raise NetworkError("speed is required for non-rail links")
        speed_mph = RAIL_DEFAULT_SPEED_MPH
    if speed_mph <= 0:
        raise NetworkError(f"speed must be > 0, got {speed_mph}")
    return length / speed_mph


def make_twin_pair(id_a: str, id_b: str, u: str, v: str, length: float,
                   free_flow_time: float, capacity: float, beta=None) -> tuple:
    """Build a twinned rail pair ``u -> v`` (id_a) and ``v -> u`` (id_b)."""
    a = Link(id_a, u, v, "rail", length, free_flow_time, capacity, twin=id_b, beta=beta)
    b = Link(id_b, v, u, "rail", length, free_flow_time, capacity, twin=id_a, beta=beta)
    return a, b


def build_network(nodes: Iterable[Node], links: Iterable[Link], **kw) -> Network:
    return Network(tuple(nodes), tuple(links), **kw)
