import pytest

from freightassign.network import (
    Link,
    Network,
    NetworkError,
    Node,
    free_flow_time,
    make_twin_pair,
    mode_link_set,
    twin_of,
    validate_network,
)
from freightassign.synthetic import congested_grid, intermodal_chain, rail_corridor


def small_net(**kw):
    nodes = [Node("r1", "road_junction"), Node("r2", "road_junction"),
             Node("k1", "rail_junction"), Node("k2", "rail_junction")]
    links = [
        Link("road", "r1", "r2", "road", 60.0, 1.0, 100.0),
        *make_twin_pair("rail", "rail'", "k1", "k2", 60.0, 1.0, 10.0),
        Link("term", "r2", "k1", "terminal", 0.0, 0.5),
    ]
    return Network(nodes, links, **kw)


def test_valid_network_has_empty_report():
    assert validate_network(small_net()) == []
    assert validate_network(intermodal_chain()) == []
    assert validate_network(congested_grid()[0]) == []


def test_terminal_between_two_road_nodes():
    net = small_net()
    bad = Network(net.nodes, net.links + (Link("t2", "r1", "r2", "terminal", 0.0, 0.5),))
    report = validate_network(bad)
    assert len(report) == 1 and report[0].subject == "t2"


def test_rail_twin_pointing_at_road_link():
    nodes = [Node("r1", "road_junction"), Node("r2", "road_junction"),
             Node("k1", "rail_junction"), Node("k2", "rail_junction")]
    links = [Link("road", "r1", "r2", "road", 60.0, 1.0, 100.0),
             Link("rail", "k1", "k2", "rail", 60.0, 1.0, 10.0, twin="road")]
    report = validate_network(Network(nodes, links))
    assert [v.subject for v in report] == ["rail"]


@pytest.mark.parametrize(
    "link, fragment",
    [
        (Link("x", "r1", "nope", "road", 1.0, 1.0, 1.0), "not a node"),
        (Link("x", "r1", "r2", "road", 1.0, 0.0, 1.0), "free_flow_time"),
        (Link("x", "r1", "r2", "road", 1.0, 1.0, None), "capacity"),
        (Link("x", "r1", "k1", "road", 1.0, 1.0, 1.0), "road link joins"),
        (Link("x", "r1", "r2", "ferry", 1.0, 1.0, 1.0), "unknown link kind"),
        (Link("x", "r1", "r2", "road", 1.0, 1.0, 1.0, twin="road"), "only rail"),
        (Link("x", "r1", "r2", "road_connector", 1.0, 0.0), "road_connector"),
    ],
)
def test_single_link_violations(link, fragment):
    net = small_net()
    report = validate_network(Network(net.nodes, net.links + (link,)))
    assert len(report) == 1
    assert fragment in report[0].message


def test_twin_property_mismatch_and_asymmetry():
    nodes = [Node("k1", "rail_junction"), Node("k2", "rail_junction")]
    a = Link("a", "k1", "k2", "rail", 60.0, 1.0, 10.0, twin="b")
    b = Link("b", "k2", "k1", "rail", 60.0, 1.0, 12.0, twin="a")
    assert any("capacity" in v.message for v in validate_network(Network(nodes, [a, b])))
    c = Link("c", "k2", "k1", "rail", 60.0, 1.0, 10.0, twin="z")
    msgs = [str(v) for v in validate_network(Network(nodes, [a, c]))]
    assert any("twin" in m for m in msgs)


def test_duplicate_ids_reported():
    net = small_net()
    dup = Network(net.nodes + (Node("r1", "road_junction"),), net.links)
    assert [v.subject for v in validate_network(dup)] == ["r1"]


def test_mode_link_sets():
    net = small_net()
    assert mode_link_set(net, "truck") == {"road"}
    assert mode_link_set(net, "rail") == {"rail", "rail'"}
    assert mode_link_set(net, "intermodal") == {"road", "rail", "rail'", "term"}
    restricted = small_net(restricted_links={"rail", "rail'"})
    assert mode_link_set(restricted, "rail") == set()
    with pytest.raises(NetworkError):
        mode_link_set(net, "barge")


def test_single_link_each_kind_example():
    nodes = [Node("r1", "road_junction"), Node("r2", "road_junction"), Node("k1", "rail_junction")]
    links = [Link("a", "r1", "r2", "road", 1.0, 1.0, 1.0),
             Link("b", "k1", "k1x", "rail", 1.0, 1.0, 1.0),
             Link("c", "r2", "k1", "terminal", 0.0, 1.0)]
    net = Network(nodes, links)
    assert mode_link_set(net, "truck") == {"a"}
    assert mode_link_set(net, "intermodal") == {"a", "b", "c"}
    assert mode_link_set(net.with_restrictions(restricted_links={"b"}), "rail") == set()


@pytest.mark.parametrize("net", [intermodal_chain(), rail_corridor(), congested_grid()[0]],
                         ids=["chain", "corridor", "grid"])
def test_mode_sets_partition(net):
    truck = mode_link_set(net, "truck")
    rail = mode_link_set(net, "rail")
    inter = mode_link_set(net, "intermodal")
    assert truck.isdisjoint(rail)
    assert inter >= truck
    assert inter >= rail - {a.id for a in net.links_of_kind("rail_connector")}


def test_twin_of_involution():
    net = rail_corridor()
    rails = [a.id for a in net.links_of_kind("rail")]
    for a in rails:
        b = twin_of(net, a)
        assert b != a
        assert twin_of(net, b) == a
    assert twin_of(small_net(), "rail") == "rail'"
    assert twin_of(small_net(), "rail'") == "rail"
    with pytest.raises(NetworkError):
        twin_of(small_net(), "road")


def test_free_flow_time_helper():
    assert free_flow_time(120.0, kind="rail") == 2.0
    assert free_flow_time(65.0, 65.0) == 1.0
    with pytest.raises(NetworkError):
        free_flow_time(10.0)


def test_removing_terminals_disconnects_mixed_paths():
    from freightassign.paths import shortest_path
    from freightassign.equilibrium import link_times

    net = intermodal_chain()
    no_terminals = net.with_restrictions(restricted_links={a.id for a in net.links_of_kind("terminal")})
    times = link_times(no_terminals, {})
    p = shortest_path(no_terminals, times, "intermodal", "O", "D")
    kinds = {net.link[l].kind for l in p.links}
    assert "rail" not in kinds
