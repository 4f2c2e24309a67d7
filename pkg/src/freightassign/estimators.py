"""scikit-learn style front ends for the assignment solvers and the demand pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .demand import FactorTables, convert_records
from .equilibrium import DemandTable, SolverConfig, solve_fw, solve_gp
from .network import Network, validate_network


class NetworkValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid network:\n" + "\n".join(f"  {v}" for v in self.violations))


def check_network(net) -> Network:
    """Return ``net`` if it is a valid :class:`Network`, else raise."""
    if not isinstance(net, Network):
        raise TypeError(f"expected a Network, got {type(net).__name__}")
    report = validate_network(net)
    if report:
        raise NetworkValidationError(report)
    return net


def check_demand(demand, net: Network) -> DemandTable:
    """Coerce ``demand`` to a :class:`DemandTable` over the centroids of ``net``.

    Accepts a DemandTable or a mapping ``(origin, destination) -> (truck, rail, intermodal)``.
    """
    if not isinstance(demand, DemandTable):
        demand = DemandTable(demand)
    centroids = set(net.centroids)
    for (o, d), _ in demand.items():
        bad = [n for n in (o, d) if n not in centroids]
        if bad:
            raise ValueError(f"demand pair ({o}, {d}) references non-centroid {bad[0]!r}")
    return demand


class _AssignmentEstimator(BaseEstimator):
    _solver = None

    def __init__(self, step_size=1.0, rel_gap_tol=1e-4, max_iterations=100, beta=4.0,
                 intermodal_road_factor=1.0, intermodal_rail_factor=1.0, normalize=True):
        self.step_size = step_size
        self.rel_gap_tol = rel_gap_tol
        self.max_iterations = max_iterations
        self.beta = beta
        self.intermodal_road_factor = intermodal_road_factor
        self.intermodal_rail_factor = intermodal_rail_factor
        self.normalize = normalize

    def _config(self):
        return SolverConfig(**self.get_params())

    def fit(self, network, demand, callback=None):
        network = check_network(network)
        demand = check_demand(demand, network)
        result = type(self)._solver(network, demand, self._config(), callback=callback)
        self.network_ = network
        self.result_ = result
        self.link_ids_ = [a.id for a in network.links]
        self.link_flows_ = result.link_flows
        self.path_sets_ = result.path_sets
        self.objective_ = result.objective
        self.n_iter_ = result.iterations_used
        self.converged_ = result.converged
        return self

    def predict(self, link_ids=None):
        """Equilibrium flows for ``link_ids`` (default: every link, network order)."""
        check_is_fitted(self, "result_")
        ids = self.link_ids_ if link_ids is None else list(link_ids)
        return np.array([self.link_flows_[i] for i in ids], dtype=float)

    def fit_predict(self, network, demand, link_ids=None):
        return self.fit(network, demand).predict(link_ids)

    def score(self, network=None, demand=None):
        """Negative normalized objective (higher is better)."""
        check_is_fitted(self, "result_")
        return -self.objective_


class GradientProjectionAssignment(_AssignmentEstimator):
    """Path-based gradient projection user equilibrium.

    >>> from freightassign.synthetic import two_parallel_links
    >>> est = GradientProjectionAssignment(rel_gap_tol=1e-10)
    >>> est.fit(two_parallel_links(), {("O", "D"): (30.0, 0.0, 0.0)}).predict(["L1", "L2"]).round(4)
    array([20., 10.])
    """

    _solver = staticmethod(solve_gp)


class FrankWolfeAssignment(_AssignmentEstimator):
    """Link-based Frank-Wolfe user equilibrium (baseline)."""

    _solver = staticmethod(solve_fw)


class DemandConverter(TransformerMixin, BaseEstimator):
    """Shipment records -> :class:`DemandTable`.

    ``fit`` only checks the factor tables; ``transform`` converts. The
    intermodal drayage trips of the last transform are kept in ``drayage_``.
    """

    def __init__(self, network=None, factor_tables=None):
        self.network = network
        self.factor_tables = factor_tables

    def fit(self, records=None, y=None):
        tables = self.factor_tables
        if isinstance(tables, dict):
            tables = FactorTables.from_dict(tables)
        if not isinstance(tables, FactorTables):
            raise TypeError("factor_tables must be a FactorTables or a dict")
        self.tables_ = tables.validate()
        self.network_ = check_network(self.network)
        return self

    def transform(self, records):
        check_is_fitted(self, "tables_")
        table, drayage = convert_records(list(records), self.network_, self.tables_)
        self.drayage_ = drayage
        return table
