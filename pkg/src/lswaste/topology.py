"""Tree realizations of the sensor-network topology families.

Four families are supported: a linear chain, a balanced binary tree, a nested
tree (binary down to depth ``s``, ternary below) and a balanced Q-ary tree.
Trees are stored as flat numpy arrays indexed by node id, which keeps
million-node trees cheap to build and flood.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence, Union

import numpy as np


class InvalidSpecError(ValueError):
    """Raised when a topology spec violates its parameter constraints."""


class DisconnectedGraphError(ValueError):
    def __init__(self, unreachable: Sequence[int]):
        self.unreachable = sorted(unreachable)
        super().__init__(f"graph is disconnected from root; unreachable ids: {self.unreachable}")


def _check_int(name: str, value, minimum: int = 0) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidSpecError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidSpecError(f"{name} must be >= {minimum}, got {value}")


@dataclass(frozen=True)
class Linear:
    n: int

    def __post_init__(self):
        _check_int("n", self.n, 1)

    @property
    def depth(self) -> int:
        return self.n - 1


@dataclass(frozen=True)
class Binary:
    d: int

    def __post_init__(self):
        _check_int("d", self.d)

    @property
    def depth(self) -> int:
        return self.d


@dataclass(frozen=True)
class Nested:
    """Binary through depth ``s``; every node at depth >= s has three children."""

    s: int
    d: int

    def __post_init__(self):
        _check_int("s", self.s)
        _check_int("d", self.d)
        if self.s > self.d:
            raise InvalidSpecError(f"nested tree needs s <= d, got s={self.s}, d={self.d}")

    @property
    def depth(self) -> int:
        return self.d


@dataclass(frozen=True)
class Qary:
    q: int
    d: int

    def __post_init__(self):
        _check_int("q", self.q, 1)
        _check_int("d", self.d)

    @property
    def depth(self) -> int:
        return self.d


TopologySpec = Union[Linear, Binary, Nested, Qary]

_FAMILIES = {"linear": Linear, "binary": Binary, "nested": Nested, "qary": Qary}


def spec_family(spec: TopologySpec) -> str:
    return type(spec).__name__.lower()


def spec_to_dict(spec: TopologySpec) -> dict:
    return {"family": spec_family(spec), **asdict(spec)}


def spec_from_dict(data: dict) -> TopologySpec:
    data = dict(data)
    try:
        cls = _FAMILIES[data.pop("family")]
    except KeyError as exc:
        raise InvalidSpecError(f"unknown topology family in {data!r}") from exc
    return cls(**data)


def parse_spec(text: str) -> TopologySpec:
    """Parse ``family:args``, e.g. ``binary:6``, ``nested:2,5`` (s,d), ``qary:3,4`` (q,d)."""
    family, _, args = text.partition(":")
    family = family.strip().lower()
    if family not in _FAMILIES:
        raise InvalidSpecError(f"unknown topology family {family!r}")
    try:
        values = [int(a) for a in args.split(",") if a.strip()]
    except ValueError as exc:
        raise InvalidSpecError(f"bad topology arguments in {text!r}") from exc
    try:
        return _FAMILIES[family](*values)
    except TypeError as exc:
        raise InvalidSpecError(f"wrong number of arguments for {family}: {text!r}") from exc


def fanout(spec: TopologySpec, m: int) -> int:
    """Children per node at depth ``m`` (0 at the last level)."""
    if m >= spec.depth:
        return 0
    if isinstance(spec, Linear):
        return 1
    if isinstance(spec, Binary):
        return 2
    if isinstance(spec, Nested):
        return 2 if m < spec.s else 3
    return spec.q


def level_size(spec: TopologySpec, m: int) -> int:
    """Node count at depth ``m`` computed from the spec alone, without building."""
    if m < 0 or m > spec.depth:
        return 0
    if isinstance(spec, Linear):
        return 1
    if isinstance(spec, Binary):
        return 2**m
    if isinstance(spec, Nested):
        return 2**m if m <= spec.s else 2**spec.s * 3 ** (m - spec.s)
    return spec.q**m


def level_sizes(spec: TopologySpec) -> list[int]:
    return [level_size(spec, m) for m in range(spec.depth + 1)]


@dataclass(frozen=True)
class Node:
    id: int
    depth: int
    parent: int | None
    children: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Tree:
    """Rooted tree over ids ``0..n-1``; the root is the base station.

    ``depth`` and ``parent`` are read-only arrays (``parent[root] == -1``).
    """

    depth: np.ndarray
    parent: np.ndarray
    root: int = 0
    spec: TopologySpec | None = None
    _child_ptr: np.ndarray = field(init=False, repr=False)
    _child_ids: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.int64)
        parent = np.asarray(self.parent, dtype=np.int64)
        if depth.shape != parent.shape or depth.ndim != 1 or depth.size == 0:
            raise ValueError("depth and parent must be equal-length non-empty 1-d arrays")
        roots = np.flatnonzero(parent < 0)
        if roots.tolist() != [self.root]:
            raise ValueError(f"tree must have exactly one root at id {self.root}, found {roots.tolist()}")
        nonroot = parent >= 0
        if depth[self.root] != 0 or np.any(depth[nonroot] != depth[parent[nonroot]] + 1):
            raise ValueError("every non-root depth must equal its parent's depth + 1")
        # CSR children index, children sorted by id
        order = np.argsort(parent, kind="stable")
        order = order[parent[order] >= 0]
        counts = np.bincount(parent[nonroot], minlength=depth.size)
        ptr = np.zeros(depth.size + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        for arr in (depth, parent, ptr, order):
            arr.setflags(write=False)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "_child_ptr", ptr)
        object.__setattr__(self, "_child_ids", order)

    def __len__(self) -> int:
        return int(self.depth.size)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    @property
    def child_counts(self) -> np.ndarray:
        return np.diff(self._child_ptr)

    def children(self, node: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self._child_ids[self._child_ptr[node]:self._child_ptr[node + 1]])

    def node(self, node: int) -> Node:
        p = int(self.parent[node])
        return Node(node, int(self.depth[node]), None if p < 0 else p, self.children(node))

    @property
    def nodes(self) -> Iterator[Node]:
        return (self.node(v) for v in range(len(self)))

    @cached_property
    def layers(self) -> list[np.ndarray]:
        """Node ids grouped by depth, ascending id within each layer."""
        order = np.argsort(self.depth, kind="stable")
        return np.split(order, np.cumsum(np.bincount(self.depth))[:-1])

    def depth_counts(self) -> list[int]:
        return np.bincount(self.depth).tolist()

    def edges(self) -> list[tuple[int, int]]:
        return [(int(p), v) for v, p in enumerate(self.parent.tolist()) if p >= 0]

    def to_dict(self) -> dict:
        return {
            "spec": spec_to_dict(self.spec) if self.spec is not None else None,
            "nodes": [asdict(n) | {"children": list(n.children)} for n in self.nodes],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "Tree":
        nodes = sorted(data["nodes"], key=lambda n: n["id"])
        if [n["id"] for n in nodes] != list(range(len(nodes))):
            raise ValueError("node ids must be 0..n-1")
        parent = [-1 if n["parent"] is None else n["parent"] for n in nodes]
        root = parent.index(-1) if -1 in parent else 0
        spec = spec_from_dict(data["spec"]) if data.get("spec") else None
        tree = cls(np.array([n["depth"] for n in nodes]), np.array(parent), root=root, spec=spec)
        for n in nodes:
            if sorted(n.get("children", [])) != list(tree.children(n["id"])):
                raise ValueError(f"children of node {n['id']} disagree with parent links")
        return tree

    @classmethod
    def from_json(cls, text: str) -> "Tree":
        return cls.from_dict(json.loads(text))


def build(spec: TopologySpec) -> Tree:
    """Realize ``spec`` as an explicit tree with breadth-first ids (root = 0)."""
    if not isinstance(spec, (Linear, Binary, Nested, Qary)):
        raise InvalidSpecError(f"not a topology spec: {spec!r}")
    sizes = level_sizes(spec)
    depth = np.repeat(np.arange(len(sizes), dtype=np.int64), sizes)
    parent = np.empty(depth.size, dtype=np.int64)
    parent[0] = -1
    start = 0
    for m in range(1, len(sizes)):
        prev_start, start = start, start + sizes[m - 1]
        k = fanout(spec, m - 1)
        parent[start:start + sizes[m]] = np.repeat(np.arange(prev_start, start, dtype=np.int64), k)
    return Tree(depth, parent, root=0, spec=spec)


def nodes_at_depth(tree: Tree, m: int) -> int:
    if m < 0:
        raise ValueError("depth must be nonnegative")
    return int(np.count_nonzero(tree.depth == m))


@dataclass(frozen=True)
class AdjacencyGraph:
    """Undirected graph over ids ``0..n_nodes-1``."""

    n_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError(f"edge ({u}, {v}) references a missing node")
        object.__setattr__(self, "edges", edges)

    def neighbours(self) -> list[list[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n_nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return [sorted(a) for a in adj]

    @classmethod
    def from_tree(cls, tree: Tree) -> "AdjacencyGraph":
        return cls(len(tree), tuple(tree.edges()))


def parse_edge_list(lines: Iterable[str], n_nodes: int | None = None) -> AdjacencyGraph:
    """Read ``u v`` pairs, one per line; blank lines and ``#`` comments are skipped."""
    edges = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if n_nodes is None:
        n_nodes = 1 + max((max(e) for e in edges), default=0)
    return AdjacencyGraph(n_nodes, tuple(edges))


def extract_spanning_tree(graph: AdjacencyGraph, root: int = 0) -> Tree:
    """Breadth-first spanning tree; each node's parent is its smallest-id neighbour one hop closer."""
    adj = graph.neighbours()
    dist = [-1] * graph.n_nodes
    dist[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    unreachable = [v for v, dv in enumerate(dist) if dv < 0]
    if unreachable:
        raise DisconnectedGraphError(unreachable)
    parent = [-1] * graph.n_nodes
    for v in range(graph.n_nodes):
        if v != root:
            parent[v] = min(u for u in adj[v] if dist[u] == dist[v] - 1)
    return Tree(np.array(dist), np.array(parent), root=root)
