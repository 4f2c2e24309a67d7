"""Regenerate the synthetic sample inputs in this directory.

Nothing here is FAF data. Networks, tonnages and factors are invented so the
CLI has something small to chew on.

    python3 sample_data/generate.py
"""

import csv
import json
from pathlib import Path

import numpy as np

from freightassign.io import RECORD_COLUMNS, write_demand, write_network
from freightassign.synthetic import (
    congested_grid,
    rail_corridor,
    rail_corridor_demand,
    two_parallel_links,
)
from freightassign.equilibrium import DemandTable

HERE = Path(__file__).resolve().parent

FACTORS = {
    "note": "synthetic example factors, not FAF values",
    "truck_allocation": [
        {"min_miles": 0, "max_miles": 100, "shares": {"single_unit": 0.6, "tractor_trailer": 0.4}},
        {"min_miles": 100, "max_miles": 500, "shares": {"single_unit": 0.2, "tractor_trailer": 0.8}},
        {"min_miles": 500, "max_miles": None, "shares": {"single_unit": 0.05, "tractor_trailer": 0.95}},
    ],
    "truck_equivalency": {
        "single_unit": {"van": {"share": 0.7, "tons_per_truck": 8.0},
                        "flatbed": {"share": 0.3, "tons_per_truck": 10.0}},
        "tractor_trailer": {"van": {"share": 0.5, "tons_per_truck": 18.0},
                            "reefer": {"share": 0.2, "tons_per_truck": 16.0},
                            "tank": {"share": 0.3, "tons_per_truck": 22.0}},
    },
    "empty_truck": {"single_unit": 0.25, "tractor_trailer": 0.15},
    "rail_groups": {
        "commodity_group": {"coal": "bulk", "grain": "bulk", "chemicals": "liquid",
                            "machinery": "mixed", "electronics": "mixed"},
        "trainload_tons": {"bulk": 9000.0, "liquid": 6000.0, "mixed": 3500.0},
    },
    "intermodal_eligible": ["electronics", "machinery"],
    "container_load": 18.0,
    "train_length": 200.0,
    "min_intermodal_distance": 500.0,
    "days_per_year": 365.0,
}


def write_config(path, doc):
    path.write_text(json.dumps(doc, indent=2) + "\n")


def two_links():
    d = HERE / "two_links"
    d.mkdir(exist_ok=True)
    write_network(two_parallel_links(), d / "network.json")
    write_demand(DemandTable({("O", "D"): (30.0, 0.0, 0.0)}), d / "demand.csv")
    write_config(d / "config.json", {
        "network": "network.json", "demand": "demand.csv", "algorithm": "both",
        "rel_gap_tol": 1e-8, "output_dir": "out",
        "payload_factors": {"tons_per_truck": 16.0, "tons_per_train": 3000.0},
    })


def corridor():
    d = HERE / "corridor"
    write_network(rail_corridor(), d / "network")
    write_demand(rail_corridor_demand(), d / "demand.csv")
    write_config(d / "config.json", {
        "network": "network", "demand": "demand.csv", "rel_gap_tol": 1e-6,
        "max_iterations": 500, "beta_sweep": [2, 4, 7, 15],
        "tracked_links": ["S0", "S1", "S2"], "output_dir": "out",
    })


def grid():
    d = HERE / "grid"
    d.mkdir(exist_ok=True)
    net, demand = congested_grid()
    write_network(net, d / "network.json")
    write_demand(demand, d / "demand.csv")
    (d / "factors.json").write_text(json.dumps(FACTORS, indent=2) + "\n")
    rng = np.random.default_rng(7)
    zones = net.centroids
    commodities = ["coal", "grain", "chemicals", "machinery", "electronics"]
    modes = ["truck", "rail", "multiple_modes_and_mail"]
    with open(d / "records.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for _ in range(120):
            o, dz = rng.choice(len(zones), 2, replace=False)
            w.writerow([zones[o], zones[dz], commodities[rng.integers(5)],
                        f"{rng.uniform(1e3, 2e5):.1f}", modes[rng.integers(3)]])
    write_config(d / "config.json", {
        "network": "network.json", "demand": "demand.csv", "algorithm": "both",
        "output_dir": "out", "top_n": 10,
        "payload_factors": {"tons_per_truck": 16.0, "tons_per_train": 3000.0},
    })


if __name__ == "__main__":
    two_links()
    corridor()
    grid()
