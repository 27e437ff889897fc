import json

import pytest
from hypothesis import given, settings, strategies as st

from lswaste.topology import (
    AdjacencyGraph,
    Binary,
    DisconnectedGraphError,
    InvalidSpecError,
    Linear,
    Nested,
    Qary,
    Tree,
    build,
    extract_spanning_tree,
    level_sizes,
    nodes_at_depth,
    parse_edge_list,
    parse_spec,
)


def brute_depth_counts(spec):
    """Grow the tree node by node with nested lists; independent of ``build``."""
    def children(m):
        if m >= spec.depth:
            return 0
        if isinstance(spec, Linear):
            return 1
        if isinstance(spec, Binary):
            return 2
        if isinstance(spec, Nested):
            return 2 if m < spec.s else 3
        return spec.q

    counts = []
    frontier = [0]  # depths of nodes in the current layer
    while frontier:
        counts.append(len(frontier))
        frontier = [m + 1 for m in frontier for _ in range(children(m))]
    return counts


specs = st.one_of(
    st.builds(Linear, st.integers(1, 12)),
    st.builds(Binary, st.integers(0, 8)),
    st.integers(0, 6).flatmap(lambda d: st.builds(Nested, st.integers(0, d), st.just(d))),
    st.builds(Qary, st.integers(1, 4), st.integers(0, 5)),
)


def test_binary_4():
    tree = build(Binary(4))
    assert len(tree) == 31
    assert nodes_at_depth(tree, 4) == 16
    assert sum(1 for n in tree.nodes if not n.children) == 16


def test_nested_2_5_counts():
    expected = brute_depth_counts(Nested(2, 5))
    assert expected == [1, 2, 4, 12, 36, 108]
    tree = build(Nested(2, 5))
    assert tree.depth_counts() == expected
    assert len(tree) == 163


def test_linear_chain():
    tree = build(Linear(5))
    assert [n.depth for n in tree.nodes] == [0, 1, 2, 3, 4]
    assert [len(n.children) for n in tree.nodes] == [1, 1, 1, 1, 0]


@pytest.mark.parametrize(
    "spec, m, expected",
    [(Binary(3), 3, 8), (Nested(2, 5), 4, 36), (Binary(3), 9, 0)],
)
def test_nodes_at_depth(spec, m, expected):
    assert nodes_at_depth(build(spec), m) == expected


@pytest.mark.parametrize(
    "make",
    [lambda: Nested(4, 3), lambda: Qary(0, 2), lambda: Binary(-1), lambda: Linear(0), lambda: Binary(2.0)],
)
def test_invalid_specs(make):
    with pytest.raises(InvalidSpecError):
        make()


def test_bfs_ids_and_root():
    tree = build(Binary(3))
    assert tree.node(0).parent is None
    assert tree.children(0) == (1, 2)
    assert tree.children(2) == (5, 6)
    assert list(tree.depth) == sorted(tree.depth)


@given(specs)
@settings(max_examples=60, deadline=None)
def test_per_depth_counts_match_brute_force(spec):
    tree = build(spec)
    counts = brute_depth_counts(spec)
    assert tree.depth_counts() == counts == level_sizes(spec)
    assert sum(nodes_at_depth(tree, m) for m in range(spec.depth + 2)) == len(tree)
    for node in tree.nodes:
        if node.parent is not None:
            assert node.depth == tree.node(node.parent).depth + 1


@given(specs)
@settings(max_examples=30, deadline=None)
def test_build_is_deterministic_and_round_trips(spec):
    a, b = build(spec).to_json(), build(spec).to_json()
    assert a == b
    again = Tree.from_json(a)
    assert again.to_json() == a
    assert again.spec == spec


def test_json_shape():
    data = json.loads(build(Binary(1)).to_json())
    assert data["spec"] == {"family": "binary", "d": 1}
    assert data["nodes"][0] == {"id": 0, "depth": 0, "parent": None, "children": [1, 2]}


def test_spanning_tree_4_cycle():
    graph = parse_edge_list(["0 1", "1 2", "2 3", "3 0"])
    tree = extract_spanning_tree(graph, 0)
    assert list(tree.depth) == [0, 1, 2, 1]
    assert tree.node(2).parent == 1


def test_spanning_tree_single_node():
    tree = extract_spanning_tree(AdjacencyGraph(1, ()), 0)
    assert len(tree) == 1


def test_spanning_tree_disconnected():
    graph = parse_edge_list(["0 1", "2 3"])
    with pytest.raises(DisconnectedGraphError) as info:
        extract_spanning_tree(graph, 0)
    assert info.value.unreachable == [2, 3]


def test_graph_rejects_self_loop_and_bad_ids():
    with pytest.raises(ValueError):
        AdjacencyGraph(2, ((1, 1),))
    with pytest.raises(ValueError):
        AdjacencyGraph(2, ((0, 5),))


@pytest.mark.parametrize("make", [lambda d: Linear(d + 1), Binary, lambda d: Nested(min(2, d), d), lambda d: Qary(3, d)])
@pytest.mark.parametrize("d", [0, 1, 4, 7])
def test_spanning_tree_reproduces_build(make, d):
    tree = build(make(d))
    again = extract_spanning_tree(AdjacencyGraph.from_tree(tree), 0)
    assert list(again.depth) == list(tree.depth)
    assert list(again.parent) == list(tree.parent)


def test_parse_spec():
    assert parse_spec("binary:6") == Binary(6)
    assert parse_spec("nested:2,5") == Nested(2, 5)
    assert parse_spec("qary:3,4") == Qary(3, 4)
    with pytest.raises(InvalidSpecError):
        parse_spec("ring:3")
