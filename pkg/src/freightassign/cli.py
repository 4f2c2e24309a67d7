"""Command line: validate, convert, assign, sweep-beta.

Exit codes: 0 success, 1 input error, 2 validation failure, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path as FsPath
from typing import Optional

from . import io
from .analysis import beta_sweep, congested_links, ton_miles
from .demand import DemandConversionError, convert_records
from .equilibrium import AssignmentError, SolverConfig, UnreachableDemandError, solve_fw, solve_gp
from .network import validate_network

EXIT_OK, EXIT_INPUT, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3

logger = logging.getLogger("freightassign")

SOLVERS = {"gp": solve_gp, "fw": solve_fw}


@dataclass
class RunConfig:
    network: Optional[str] = None
    demand: Optional[str] = None
    records: Optional[str] = None
    factors: Optional[str] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    algorithm: str = "gp"
    beta_sweep: list = field(default_factory=list)
    tracked_links: Optional[list] = None
    restricted_links: list = field(default_factory=list)
    terminal_whitelist: list = field(default_factory=list)
    rail_capacity_table: Optional[dict] = None
    output_dir: str = "out"
    payload_factors: Optional[dict] = None
    top_n: int = 10

    def check(self):
        if not self.network:
            raise ValueError("config needs a network path")
        if not self.demand and not (self.records and self.factors):
            raise ValueError("config needs a demand path, or records and factors paths")
        if self.algorithm not in ("gp", "fw", "both"):
            raise ValueError(f"algorithm must be gp, fw or both, got {self.algorithm!r}")
        return self


def load_config(path=None, overrides=None) -> RunConfig:
    """Read a JSON run config; relative paths resolve against the config's directory.

    ``overrides`` (from CLI flags) win over the file. Solver keys may sit at
    top level or under ``"solver"``.
    """
    doc = {}
    base = FsPath(".")
    if path is not None:
        try:
            doc = json.loads(FsPath(path).read_text())
        except OSError as e:
            raise io.FormatError(f"{path}: cannot read ({e.strerror})") from None
        except json.JSONDecodeError as e:
            raise io.FormatError(f"{path} line {e.lineno}: {e.msg}") from None
        base = FsPath(path).parent
    doc = dict(doc)
    solver_doc = dict(doc.pop("solver", {}) or {})
    solver_names = {f.name for f in fields(SolverConfig)}
    for k in list(doc):
        if k in solver_names:
            solver_doc[k] = doc.pop(k)
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k in solver_names:
            solver_doc[k] = v
        else:
            doc[k] = v
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    for k in ("network", "demand", "records", "factors", "output_dir"):
        if doc.get(k) is not None and path is not None and not (overrides or {}).get(k):
            doc[k] = str(base / doc[k])
    return RunConfig(solver=SolverConfig(**solver_doc), **doc)


def _load_network(cfg: RunConfig):
    whitelist = {}
    for e in cfg.terminal_whitelist:
        whitelist.setdefault((str(e["origin"]), str(e["destination"])), set()).update(e["terminals"])
    return io.read_network(
        cfg.network,
        rail_capacity_table=cfg.rail_capacity_table,
        restricted_links=cfg.restricted_links or None,
        terminal_whitelist=whitelist or None,
    )


def _load_demand(cfg: RunConfig, net):
    if cfg.demand:
        return io.read_demand(cfg.demand)
    table, _ = convert_records(io.read_records(cfg.records), net, io.read_factor_tables(cfg.factors))
    return table


def _print_violations(violations, out):
    for v in violations:
        print(f"violation: {v}", file=out)


def cmd_validate(args) -> int:
    net = io.read_network(args.network)
    report = validate_network(net)
    _print_violations(report, sys.stdout)
    if report:
        print(f"{len(report)} violation(s)")
        return EXIT_INVALID
    print(f"valid: {len(net.nodes)} nodes, {len(net.links)} links, {len(net.centroids)} centroids")
    return EXIT_OK


def cmd_convert(args) -> int:
    net = io.read_network(args.network)
    report = validate_network(net)
    if report:
        _print_violations(report, sys.stderr)
        return EXIT_INVALID
    records = io.read_records(args.records)
    tables = io.read_factor_tables(args.factors)
    table, drayage = convert_records(records, net, tables)
    io.write_demand(table, args.output)
    print(f"records: {len(records)}")
    print(f"trucks/day: {io.fmt(table.total('truck'))}")
    print(f"trains/day: {io.fmt(table.total('rail'))}")
    print(f"intermodal trains/day: {io.fmt(table.total('intermodal'))}")
    print(f"intermodal truck trips/day: {io.fmt(sum(drayage.values()))}")
    return EXIT_OK


def run_report(result, net, cfg: RunConfig, seconds: float) -> dict:
    """RunReport document for one solver run."""
    tm = ton_miles(result.link_flows, net, cfg.payload_factors) if cfg.payload_factors else None
    return {
        "algorithm": result.algorithm,
        "beta": result.beta,
        "iterations": result.iterations_used,
        "converged": result.converged,
        "normalized_objective_hours": result.objective,
        "raw_objective": result.raw_objective,
        "objective_trace": result.objective_trace,
        "gap_trace": result.gap_trace,
        "wall_clock_seconds": seconds,
        "ton_miles": tm,
        "congested_links": congested_links(net, result.link_flows, result.beta, cfg.top_n),
    }


def _prepare(cfg):
    net = _load_network(cfg)
    report = validate_network(net)
    if report:
        _print_violations(report, sys.stderr)
        return None, None, EXIT_INVALID
    return net, _load_demand(cfg, net), EXIT_OK


def cmd_assign(args) -> int:
    cfg = load_config(args.config, _overrides(args)).check()
    net, demand, status = _prepare(cfg)
    if status:
        return status
    out = FsPath(cfg.output_dir)
    algos = ["gp", "fw"] if cfg.algorithm == "both" else [cfg.algorithm]
    runs = {}
    for name in algos:
        t = time.perf_counter()
        result = SOLVERS[name](net, demand, cfg.solver)
        seconds = time.perf_counter() - t
        rows = io.flow_rows(net, result.link_flows, result.link_times)
        io.write_rows(out / f"flows_{name}.csv", io.FLOW_COLUMNS, rows)
        if io.has_geometry(net):
            io.write_json(out / f"flows_{name}.geojson", io.flows_geojson(net, rows))
        runs[name] = run_report(result, net, cfg, seconds)
        print(f"{name}: {result.iterations_used} iterations, converged={result.converged}, "
              f"objective={io.fmt(result.objective)} h, {seconds:.2f} s")
    io.write_json(out / "report.json", {"runs": runs})
    return EXIT_OK if all(r["converged"] for r in runs.values()) else EXIT_NOT_CONVERGED


def cmd_sweep_beta(args) -> int:
    cfg = load_config(args.config, _overrides(args)).check()
    if not cfg.beta_sweep:
        raise ValueError("beta_sweep must list at least one beta")
    net, demand, status = _prepare(cfg)
    if status:
        return status
    rows, results = beta_sweep(net, demand, cfg.solver, cfg.beta_sweep, cfg.tracked_links)
    path = FsPath(cfg.output_dir) / "beta_sweep.csv"
    io.write_rows(path, io.SWEEP_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


def _overrides(args) -> dict:
    keys = ("network", "demand", "records", "factors", "algorithm", "output_dir",
            "max_iterations", "rel_gap_tol", "step_size", "beta", "beta_sweep", "tracked_links",
            "restricted_links")
    out = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "no_normalize", False):
        out["normalize"] = False
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freightassign", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a network file")
    v.add_argument("network")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("convert", help="shipment tonnage -> daily demand CSV")
    c.add_argument("--records", required=True)
    c.add_argument("--factors", required=True)
    c.add_argument("--network", required=True)
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_convert)

    for name, func, help_ in (("assign", cmd_assign, "run the equilibrium assignment"),
                              ("sweep-beta", cmd_sweep_beta, "compare rail congestion across beta values")):
        a = sub.add_parser(name, help=help_)
        a.add_argument("--config")
        a.add_argument("--network")
        a.add_argument("--demand")
        a.add_argument("--records")
        a.add_argument("--factors")
        a.add_argument("--output-dir", dest="output_dir")
        a.add_argument("--max-iterations", type=int)
        a.add_argument("--rel-gap-tol", type=float)
        a.add_argument("--step-size", type=float)
        a.add_argument("--beta", type=float)
        a.add_argument("--restricted-links", nargs="*")
        a.add_argument("--no-normalize", action="store_true")
        if name == "assign":
            a.add_argument("--algorithm", choices=["gp", "fw", "both"])
        else:
            a.add_argument("--betas", dest="beta_sweep", type=float, nargs="+")
            a.add_argument("--tracked-links", nargs="+")
        a.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (io.FormatError, DemandConversionError, UnreachableDemandError, AssignmentError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
