"""Annual commodity tonnage to daily truck, train and intermodal O-D demand."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .equilibrium import DemandTable
from .network import Network, mode_link_set
from .paths import _search

MODE_CATEGORIES = ("truck", "rail", "multiple_modes_and_mail")
EARTH_RADIUS_MILES = 3958.8


class DemandConversionError(ValueError):
    def __init__(self, message, index=None):
        self.index = index
        prefix = f"record {index}: " if index is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ShipmentRecord:
    origin: str
    destination: str
    commodity: str
    tons_per_year: float
    mode_category: str

    def __post_init__(self):
        if not (math.isfinite(self.tons_per_year) and self.tons_per_year >= 0):
            raise DemandConversionError(f"tons_per_year must be finite and >= 0, got {self.tons_per_year}")
        if self.mode_category not in MODE_CATEGORIES:
            raise DemandConversionError(f"unknown mode_category {self.mode_category!r}")


@dataclass(frozen=True)
class DistanceRange:
    min_miles: float
    max_miles: Optional[float]  # None: unbounded
    shares: dict

    def contains(self, miles):
        return miles >= self.min_miles and (self.max_miles is None or miles < self.max_miles)


@dataclass
class FactorTables:
    """Conversion factors.

    ``truck_equivalency[truck_type][body_type]`` is ``(share, tons_per_truck)``:
    the share of that truck type's tonnage carried in the body type and the
    average payload. ``rail_commodity_group`` maps commodity to group and
    ``rail_trainload_tons`` gives each group's average trainload.
    """

    truck_allocation: list = field(default_factory=list)
    truck_equivalency: dict = field(default_factory=dict)
    empty_truck: dict = field(default_factory=dict)
    rail_commodity_group: dict = field(default_factory=dict)
    rail_trainload_tons: dict = field(default_factory=dict)
    intermodal_eligible: frozenset = frozenset()
    container_load: Optional[float] = None
    train_length: Optional[float] = None
    min_intermodal_distance: float = 500.0
    days_per_year: float = 365.0

    def validate(self):
        problems = []
        for r in self.truck_allocation:
            total = math.fsum(r.shares.values())
            if abs(total - 1.0) > 1e-9:
                problems.append(f"truck shares for range [{r.min_miles}, {r.max_miles}) sum to {total}")
        for t, bodies in self.truck_equivalency.items():
            total = math.fsum(s for s, _ in bodies.values())
            if abs(total - 1.0) > 1e-9:
                problems.append(f"body shares for truck type {t!r} sum to {total}")
            for b, (_, load) in bodies.items():
                if not load > 0:
                    problems.append(f"tons_per_truck for {t!r}/{b!r} must be > 0")
        for t, e in self.empty_truck.items():
            if not e >= 0:
                problems.append(f"empty truck factor for {t!r} must be >= 0")
        for g, load in self.rail_trainload_tons.items():
            if not load > 0:
                problems.append(f"trainload for group {g!r} must be > 0")
        for name in ("container_load", "train_length"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                problems.append(f"{name} must be > 0")
        if not self.days_per_year > 0:
            problems.append("days_per_year must be > 0")
        if problems:
            raise DemandConversionError("; ".join(problems))
        return self

    @classmethod
    def from_dict(cls, doc: dict) -> "FactorTables":
        ranges = [
            DistanceRange(float(r["min_miles"]),
                          None if r.get("max_miles") is None else float(r["max_miles"]),
                          {str(k): float(v) for k, v in r["shares"].items()})
            for r in doc.get("truck_allocation", [])
        ]
        equiv = {}
        for t, bodies in doc.get("truck_equivalency", {}).items():
            if not isinstance(bodies, dict):
                bodies = {"all": {"share": 1.0, "tons_per_truck": bodies}}
            equiv[str(t)] = {
                str(b): ((1.0, float(v)) if not isinstance(v, dict)
                         else (float(v.get("share", 1.0)), float(v["tons_per_truck"])))
                for b, v in bodies.items()
            }
        rail = doc.get("rail_groups", {})
        return cls(
            truck_allocation=ranges,
            truck_equivalency=equiv,
            empty_truck={str(k): float(v) for k, v in doc.get("empty_truck", {}).items()},
            rail_commodity_group={str(k): str(v) for k, v in rail.get("commodity_group", {}).items()},
            rail_trainload_tons={str(k): float(v) for k, v in rail.get("trainload_tons", {}).items()},
            intermodal_eligible=frozenset(str(c) for c in doc.get("intermodal_eligible", [])),
            container_load=doc.get("container_load"),
            train_length=doc.get("train_length"),
            min_intermodal_distance=float(doc.get("min_intermodal_distance", 500.0)),
            days_per_year=float(doc.get("days_per_year", 365.0)),
        ).validate()

    def to_dict(self) -> dict:
        return {
            "truck_allocation": [
                {"min_miles": r.min_miles, "max_miles": r.max_miles, "shares": dict(r.shares)}
                for r in self.truck_allocation
            ],
            "truck_equivalency": {
                t: {b: {"share": s, "tons_per_truck": w} for b, (s, w) in bodies.items()}
                for t, bodies in self.truck_equivalency.items()
            },
            "empty_truck": dict(self.empty_truck),
            "rail_groups": {"commodity_group": dict(self.rail_commodity_group),
                            "trainload_tons": dict(self.rail_trainload_tons)},
            "intermodal_eligible": sorted(self.intermodal_eligible),
            "container_load": self.container_load,
            "train_length": self.train_length,
            "min_intermodal_distance": self.min_intermodal_distance,
            "days_per_year": self.days_per_year,
        }


def great_circle_miles(lon1, lat1, lon2, lat2) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_MILES * math.asin(min(1.0, math.sqrt(h)))


def road_distances(net: Network, origin: str) -> dict:
    """Shortest road distance (miles) from ``origin`` to every reachable node."""
    plain = Network(net.nodes, net.links)
    lengths = {a.id: a.length for a in net.links}
    best, done = _search(plain, lengths, frozenset(mode_link_set(plain, "truck")), origin)
    return {n: best[n][0] for n in done}


def od_distance(net: Network, origin: str, destination: str, _cache=None) -> float:
    """Road-network distance between two centroids, else great-circle distance."""
    for n in (origin, destination):
        if n not in net.node:
            raise DemandConversionError(f"unknown centroid {n!r}")
    if _cache is not None:
        dist = _cache.get(origin)
        if dist is None:
            dist = _cache[origin] = road_distances(net, origin)
    else:
        dist = road_distances(net, origin)
    if destination in dist:
        return dist[destination]
    a, b = net.node[origin].coordinates, net.node[destination].coordinates
    if a is None or b is None:
        raise DemandConversionError(f"no road path and no coordinates for {origin!r} -> {destination!r}")
    return great_circle_miles(*a, *b)


def trucks_from_tonnage(rec: ShipmentRecord, distance: float, tables: FactorTables) -> float:
    """Daily truck trips, loaded plus empty, for a truck shipment record."""
    if rec.mode_category != "truck":
        raise DemandConversionError(f"expected a truck record, got {rec.mode_category!r}")
    if rec.tons_per_year == 0:
        return 0.0
    band = next((r for r in tables.truck_allocation if r.contains(distance)), None)
    if band is None:
        raise DemandConversionError(f"distance {distance:g} mi is outside every truck allocation range")
    trips = []
    for truck_type, share in sorted(band.shares.items()):
        if share == 0:
            continue
        bodies = tables.truck_equivalency.get(truck_type)
        if not bodies:
            raise DemandConversionError(f"no truck equivalency factors for {truck_type!r}")
        if truck_type not in tables.empty_truck:
            raise DemandConversionError(f"no empty truck factor for {truck_type!r}")
        tons = rec.tons_per_year * share
        loaded = math.fsum(tons * body_share / load for body_share, load in bodies.values())
        trips.append(loaded * (1.0 + tables.empty_truck[truck_type]))
    return math.fsum(trips) / tables.days_per_year


def trainloads_from_tonnage(rec: ShipmentRecord, tables: FactorTables) -> float:
    if rec.mode_category != "rail":
        raise DemandConversionError(f"expected a rail record, got {rec.mode_category!r}")
    group = tables.rail_commodity_group.get(rec.commodity)
    if group is None:
        raise DemandConversionError(f"commodity {rec.commodity!r} has no rail group")
    load = tables.rail_trainload_tons.get(group)
    if load is None:
        raise DemandConversionError(f"rail group {group!r} has no trainload weight")
    return rec.tons_per_year / load / tables.days_per_year


def intermodal_from_tonnage(rec: ShipmentRecord, distance: float, tables: FactorTables):
    """``(trainloads/day, drayage truck trips/day)`` for a multiple-modes record.

    Shipments of ineligible commodities, or shorter than the minimum
    intermodal distance, convert to nothing. Every container moves on a
    loaded and an empty drayage trip, hence twice the container count.
    """
    if rec.mode_category != "multiple_modes_and_mail":
        raise DemandConversionError(f"expected a multiple_modes_and_mail record, got {rec.mode_category!r}")
    if rec.commodity not in tables.intermodal_eligible or distance < tables.min_intermodal_distance:
        return 0.0, 0.0
    if tables.container_load is None or tables.train_length is None:
        raise DemandConversionError("container_load and train_length are required for intermodal records")
    containers = rec.tons_per_year / tables.container_load
    return (containers / tables.train_length / tables.days_per_year,
            2.0 * containers / tables.days_per_year)


def convert_records(records, net: Network, tables: FactorTables):
    """Convert shipment records into a :class:`DemandTable`.

    Returns ``(table, drayage)`` where ``drayage`` maps (origin, destination)
    to intermodal truck trips per day. Errors carry the record index.
    """
    table = DemandTable()
    drayage = {}
    cache = {}
    centroids = set(net.centroids)
    for i, rec in enumerate(records):
        try:
            for n in (rec.origin, rec.destination):
                if n not in centroids:
                    raise DemandConversionError(f"{n!r} is not a network centroid")
            if rec.origin == rec.destination:
                raise DemandConversionError("origin equals destination")
            if rec.mode_category == "truck":
                q = trucks_from_tonnage(rec, od_distance(net, rec.origin, rec.destination, cache), tables)
                table.add(rec.origin, rec.destination, "truck", q)
            elif rec.mode_category == "rail":
                table.add(rec.origin, rec.destination, "rail", trainloads_from_tonnage(rec, tables))
            else:
                dist = od_distance(net, rec.origin, rec.destination, cache)
                trains, trucks = intermodal_from_tonnage(rec, dist, tables)
                table.add(rec.origin, rec.destination, "intermodal", trains)
                key = (rec.origin, rec.destination)
                drayage[key] = drayage.get(key, 0.0) + trucks
        except DemandConversionError as e:
            if e.index is not None:
                raise
            raise DemandConversionError(str(e), index=i) from None
    return table, drayage


def build_demand_table(records, net: Network, tables: FactorTables) -> DemandTable:
    return convert_records(records, net, tables)[0]
