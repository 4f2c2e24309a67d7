"""Reading and writing networks, demand, shipment records and assignment outputs.

File layouts are documented in FORMATS.md at the repository root.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path as FsPath

from .demand import FactorTables, ShipmentRecord
from .equilibrium import DemandTable
from .network import Link, Network, Node, free_flow_time

NODE_COLUMNS = ["id", "kind", "lon", "lat"]
LINK_COLUMNS = ["id", "from", "to", "kind", "length", "free_flow_time", "capacity", "twin_id", "beta"]
DEMAND_COLUMNS = ["origin", "destination", "q_truck", "q_rail", "q_intermodal"]
RECORD_COLUMNS = ["origin", "destination", "commodity", "tons_per_year", "mode_category"]
FLOW_COLUMNS = ["link_id", "kind", "flow", "capacity", "volume_capacity", "travel_time_hours"]
SWEEP_COLUMNS = ["beta", "link_id", "pct_over_capacity", "travel_time_hours", "iterations", "converged"]


class FormatError(ValueError):
    """Malformed input file; the message names the file and line."""


def fmt(value) -> str:
    """Fixed 9-significant-digit float formatting used by every output CSV."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


@contextmanager
def atomic_open(path, mode="w"):
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _opt_float(raw, where, name):
    if raw is None:
        return None
    if isinstance(raw, (int, float)):
        return float(raw)
    raw = str(raw).strip()
    if raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise FormatError(f"{where}: {name} is not a number: {raw!r}") from None


def _opt_str(raw):
    if raw is None:
        return None
    raw = str(raw).strip()
    return raw or None


def _read_csv(path, required):
    path = FsPath(path)
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise FormatError(f"{path}: cannot read ({e.strerror})") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FormatError(f"{path}: empty file, expected header {required}")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise FormatError(f"{path} line 1: missing columns {missing}")
        rows = []
        for row in reader:
            where = f"{path} line {reader.line_num}"
            if None in row or any(row.get(c) is None for c in required):
                raise FormatError(f"{where}: wrong number of fields")
            rows.append((where, row))
        return rows


def _node_from(row, where):
    nid = _opt_str(row.get("id"))
    kind = _opt_str(row.get("kind"))
    if nid is None or kind is None:
        raise FormatError(f"{where}: node needs id and kind")
    return Node(nid, kind, _opt_float(row.get("lon"), where, "lon"), _opt_float(row.get("lat"), where, "lat"))


def _link_from(row, where, rail_capacity_table=None):
    lid = _opt_str(row.get("id"))
    u, v, kind = _opt_str(row.get("from")), _opt_str(row.get("to")), _opt_str(row.get("kind"))
    if None in (lid, u, v, kind):
        raise FormatError(f"{where}: link needs id, from, to and kind")
    length = _opt_float(row.get("length"), where, "length")
    if length is None:
        raise FormatError(f"{where}: link {lid} has no length")
    fft = _opt_float(row.get("free_flow_time"), where, "free_flow_time")
    if fft is None:
        speed = _opt_float(row.get("speed_limit"), where, "speed_limit")
        if speed is None and kind != "rail":
            raise FormatError(f"{where}: link {lid} needs free_flow_time or speed_limit")
        fft = free_flow_time(length, speed, kind)
    cap = _opt_float(row.get("capacity"), where, "capacity")
    if cap is None and kind == "rail" and rail_capacity_table is not None:
        control = _opt_str(row.get("control_type"))
        tracks = _opt_str(row.get("tracks"))
        try:
            cap = float(rail_capacity_table[control][str(int(float(tracks)))])
        except (KeyError, TypeError, ValueError):
            raise FormatError(
                f"{where}: no rail capacity for control_type={control!r}, tracks={tracks!r}"
            ) from None
    return Link(lid, u, v, kind, length, fft, cap,
                twin=_opt_str(row.get("twin_id")), beta=_opt_float(row.get("beta"), where, "beta"))


def _whitelist_from(entries):
    out = {}
    for e in entries or []:
        key = (str(e["origin"]), str(e["destination"]))
        out.setdefault(key, set()).update(str(t) for t in e["terminals"])
    return out


def read_network(path, rail_capacity_table=None, restricted_links=None, terminal_whitelist=None) -> Network:
    """Read a network from a JSON document or a directory holding nodes.csv and links.csv.

    ``rail_capacity_table`` maps control type -> track count -> trains/day and
    fills blank rail capacities. Restrictions given here override any stored
    in the file.
    """
    path = FsPath(path)
    if path.is_dir():
        nodes = [_node_from(r, w) for w, r in _read_csv(path / "nodes.csv", ["id", "kind"])]
        links = [_link_from(r, w, rail_capacity_table)
                 for w, r in _read_csv(path / "links.csv", ["id", "from", "to", "kind", "length"])]
        stored_restricted, stored_whitelist = set(), {}
    else:
        try:
            doc = json.loads(path.read_text())
        except OSError as e:
            raise FormatError(f"{path}: cannot read ({e.strerror})") from None
        except json.JSONDecodeError as e:
            raise FormatError(f"{path} line {e.lineno}: {e.msg}") from None
        if not isinstance(doc, dict) or "nodes" not in doc or "links" not in doc:
            raise FormatError(f"{path}: expected an object with 'nodes' and 'links'")
        nodes = [_node_from(r, f"{path} nodes[{i}]") for i, r in enumerate(doc["nodes"])]
        links = [_link_from(r, f"{path} links[{i}]", rail_capacity_table) for i, r in enumerate(doc["links"])]
        stored_restricted = set(str(x) for x in doc.get("restricted_links", []))
        try:
            stored_whitelist = _whitelist_from(doc.get("terminal_whitelist"))
        except (KeyError, TypeError):
            raise FormatError(f"{path}: terminal_whitelist entries need origin, destination, terminals") from None
    return Network(
        nodes, links,
        restricted_links=stored_restricted if restricted_links is None else set(restricted_links),
        terminal_whitelist=stored_whitelist if terminal_whitelist is None else terminal_whitelist,
    )


def _node_row(n):
    return {"id": n.id, "kind": n.kind, "lon": n.lon, "lat": n.lat}


def _link_row(a):
    return {"id": a.id, "from": a.from_node, "to": a.to_node, "kind": a.kind, "length": a.length,
            "free_flow_time": a.free_flow_time, "capacity": a.capacity, "twin_id": a.twin, "beta": a.beta}


def write_network(net: Network, path):
    """Write ``net`` as JSON (``*.json``) or as nodes.csv + links.csv in a directory.

    Floats are written at full precision so the file reads back identically.
    """
    path = FsPath(path)
    if path.suffix == ".json":
        doc = {
            "nodes": [_node_row(n) for n in net.nodes],
            "links": [_link_row(a) for a in net.links],
            "restricted_links": sorted(net.restricted_links),
            "terminal_whitelist": [
                {"origin": o, "destination": d, "terminals": sorted(t)}
                for (o, d), t in sorted(net.terminal_whitelist.items())
            ],
        }
        with atomic_open(path) as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        return
    path.mkdir(parents=True, exist_ok=True)
    exact = lambda v: "" if v is None else (repr(v) if isinstance(v, float) else str(v))
    for name, cols, rows in (("nodes.csv", NODE_COLUMNS, map(_node_row, net.nodes)),
                             ("links.csv", LINK_COLUMNS, map(_link_row, net.links))):
        with atomic_open(path / name) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow([exact(r[c]) for c in cols])


def read_demand(path) -> DemandTable:
    table = DemandTable()
    seen = set()
    for where, row in _read_csv(path, DEMAND_COLUMNS):
        q = [_opt_float(row[c], where, c) or 0.0 for c in DEMAND_COLUMNS[2:]]
        pair = (row["origin"].strip(), row["destination"].strip())
        if pair in seen:
            raise FormatError(f"{where}: duplicate row for {pair[0]} -> {pair[1]}")
        seen.add(pair)
        try:
            table.set(*pair, *q)
        except ValueError as e:
            raise FormatError(f"{where}: {e}") from None
    return table


def write_demand(table: DemandTable, path):
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DEMAND_COLUMNS)
        for (o, d), q in table.items():
            w.writerow([o, d, *map(fmt, q)])


def read_records(path) -> list:
    out = []
    for where, row in _read_csv(path, RECORD_COLUMNS):
        tons = _opt_float(row["tons_per_year"], where, "tons_per_year")
        try:
            out.append(ShipmentRecord(row["origin"].strip(), row["destination"].strip(),
                                      row["commodity"].strip(), 0.0 if tons is None else tons,
                                      row["mode_category"].strip()))
        except ValueError as e:
            raise FormatError(f"{where}: {e}") from None
    return out


def read_factor_tables(path) -> FactorTables:
    try:
        doc = json.loads(FsPath(path).read_text())
    except OSError as e:
        raise FormatError(f"{path}: cannot read ({e.strerror})") from None
    except json.JSONDecodeError as e:
        raise FormatError(f"{path} line {e.lineno}: {e.msg}") from None
    try:
        return FactorTables.from_dict(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: {e}") from None


def flow_rows(net: Network, link_flows: dict, link_times: dict) -> list:
    """Rows of the flows CSV. Rail volume/capacity uses the combined flow of both directions."""
    rows = []
    for a in sorted(net.links, key=lambda a: a.id):
        x = link_flows.get(a.id, 0.0)
        vc = None
        if a.kind == "road":
            vc = x / a.capacity
        elif a.kind == "rail":
            opp = link_flows.get(a.twin, 0.0) if a.twin is not None else 0.0
            vc = (x + opp) / a.capacity
        rows.append({
            "link_id": a.id,
            "kind": a.kind,
            "flow": x,
            "capacity": a.capacity if a.kind in ("road", "rail") else None,
            "volume_capacity": vc,
            "travel_time_hours": link_times[a.id],
        })
    return rows


def write_rows(path, columns, rows):
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r[c]) for c in columns])


def read_flows(path) -> dict:
    return {row["link_id"]: float(row["flow"]) for _, row in _read_csv(path, FLOW_COLUMNS)}


def has_geometry(net: Network) -> bool:
    return all(n.coordinates is not None for n in net.nodes)


def flows_geojson(net: Network, rows) -> dict:
    """LineString feature per link carrying the flows CSV properties (WGS84 lon/lat)."""
    feats = []
    for r in rows:
        a = net.link[r["link_id"]]
        u, v = net.node[a.from_node], net.node[a.to_node]
        props = {k: (None if isinstance(val, float) and not math.isfinite(val) else val)
                 for k, val in r.items()}
        feats.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [list(u.coordinates), list(v.coordinates)]},
            "properties": props,
        })
    return {"type": "FeatureCollection", "features": feats}


def write_json(path, doc):
    with atomic_open(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
