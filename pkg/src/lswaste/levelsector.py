"""Levelling & Sectoring: identity assignment, query matching and reply routing.

The base station (BST) sweeps its transmit power over concentric rings;
ring ``t`` covers BST distances in ``(r[t-1], r[t]]`` and its nodes get level
``t`` (level 1 is innermost). The disk is cut into ``K`` equal angular
sectors counterclockwise from the positive x-axis. A reply moves inward:
a node forwards a packet only from a sender with a strictly higher level
whose sector is within circular distance 1 of its own.
"""
from __future__ import annotations

import json
import math
import operator
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence, Union

from .analytic import DomainError, EnergyModel
from .topology import Binary, Nested, Qary, TopologySpec, level_size

BST = -1


class OutOfRangeError(ValueError):
    def __init__(self, node_ids: Sequence[int]):
        self.node_ids = list(node_ids)
        super().__init__(f"nodes beyond the outermost ring: {self.node_ids}")


class DegeneratePositionError(ValueError):
    pass


class DisconnectedFieldError(ValueError):
    def __init__(self, node_ids: Sequence[int]):
        self.node_ids = list(node_ids)
        super().__init__(f"nodes not connected to the base station: {self.node_ids}")


@dataclass(frozen=True)
class Field:
    bst_position: tuple[float, float]
    ring_radii: tuple[float, ...]
    sector_count: int
    comm_radius: float

    def __post_init__(self):
        radii = tuple(float(r) for r in self.ring_radii)
        if not radii or radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError(f"ring radii must be positive and strictly increasing, got {radii}")
        if self.sector_count < 1:
            raise ValueError("sector_count must be >= 1")
        if self.comm_radius <= 0:
            raise ValueError("comm_radius must be positive")
        object.__setattr__(self, "ring_radii", radii)
        object.__setattr__(self, "bst_position", (float(self.bst_position[0]), float(self.bst_position[1])))


@dataclass(frozen=True)
class NodePlacement:
    node_id: int
    position: tuple[float, float]
    data_type: str = ""
    data_value: float = 0.0


@dataclass(frozen=True)
class NodeIdentity:
    node_id: int
    level_id: int
    sector_id: int


_OPERATORS: dict[str, Callable[[float, float], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
    "!=": operator.ne,
}
_ALIASES = {"≤": "<=", "≥": ">=", "≠": "!=", "==": "="}


@dataclass(frozen=True)
class Query:
    data_type: str
    data_operator: str
    data_threshold: float

    def __post_init__(self):
        op = _ALIASES.get(self.data_operator, self.data_operator)
        if op not in _OPERATORS:
            raise ValueError(f"unknown operator {self.data_operator!r}")
        object.__setattr__(self, "data_operator", op)

    @classmethod
    def parse(cls, text: str) -> "Query":
        """Parse e.g. ``"temp > 30"`` or ``"humidity<=40.5"``."""
        for op in sorted(list(_OPERATORS) + list(_ALIASES), key=len, reverse=True):
            left, sep, right = text.partition(op)
            if sep and left.strip() and right.strip():
                return cls(left.strip(), op, float(right))
        raise ValueError(f"cannot parse query {text!r}")


def _distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def assign_levels(fld: Field, placements: Iterable[NodePlacement]) -> dict[int, int]:
    """Level of each node: 1-based index of the innermost ring containing it."""
    levels, outside = {}, []
    for node in placements:
        dist = _distance(node.position, fld.bst_position)
        for t, radius in enumerate(fld.ring_radii, 1):
            if dist <= radius:
                levels[node.node_id] = t
                break
        else:
            outside.append(node.node_id)
    if outside:
        raise OutOfRangeError(outside)
    return levels


def assign_sectors(fld: Field, placements: Iterable[NodePlacement]) -> dict[int, int]:
    width = 2 * math.pi / fld.sector_count
    sectors = {}
    for node in placements:
        dx = node.position[0] - fld.bst_position[0]
        dy = node.position[1] - fld.bst_position[1]
        if dx == 0 and dy == 0:
            raise DegeneratePositionError(f"node {node.node_id} coincides with the base station")
        theta = math.atan2(dy, dx) % (2 * math.pi)
        sectors[node.node_id] = min(int(theta // width), fld.sector_count - 1)
    return sectors


def identify(fld: Field, placements: Sequence[NodePlacement]) -> dict[int, NodeIdentity]:
    levels = assign_levels(fld, placements)
    sectors = assign_sectors(fld, placements)
    return {n.node_id: NodeIdentity(n.node_id, levels[n.node_id], sectors[n.node_id]) for n in placements}


def sector_distance(a: int, b: int, k: int) -> int:
    diff = abs(a - b) % k
    return min(diff, k - diff)


def accept(sender: NodeIdentity, receiver: NodeIdentity, k: int) -> bool:
    return sender.level_id > receiver.level_id and sector_distance(sender.sector_id, receiver.sector_id, k) <= 1


def match_query(q: Query, node: NodePlacement) -> bool:
    return node.data_type == q.data_type and _OPERATORS[q.data_operator](node.data_value, q.data_threshold)


@dataclass(frozen=True)
class PureFlood:
    pass


@dataclass(frozen=True)
class ControlledFlood:
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class LevelSector:
    pass


RoutingMode = Union[PureFlood, ControlledFlood, LevelSector]


@dataclass
class EnergyLedger:
    e_t: int
    e_r: int
    transmissions: int = 0
    receptions: int = 0
    per_node: dict[int, dict[str, int]] = field(default_factory=dict)
    delivered_replies: list[int] = field(default_factory=list)
    undelivered_replies: list[int] = field(default_factory=list)

    @property
    def energy_mj(self) -> int:
        return self.e_t * self.transmissions + self.e_r * self.receptions

    def _charge(self, node: int, kind: str) -> None:
        entry = self.per_node.setdefault(node, {"tx": 0, "rx": 0})
        entry[kind] += 1
        if kind == "tx":
            self.transmissions += 1
        else:
            self.receptions += 1

    def to_dict(self) -> dict:
        return {
            "transmissions": self.transmissions,
            "receptions": self.receptions,
            "energy_mj": str(self.energy_mj),
            "e_t": self.e_t,
            "e_r": self.e_r,
            "per_node": {("bst" if k == BST else str(k)): v for k, v in sorted(self.per_node.items())},
            "delivered_replies": self.delivered_replies,
            "undelivered_replies": self.undelivered_replies,
        }


def _neighbours(fld: Field, placements: Sequence[NodePlacement]) -> dict[int, list[int]]:
    points = {BST: fld.bst_position} | {n.node_id: n.position for n in placements}
    ids = sorted(points)
    adj: dict[int, list[int]] = {v: [] for v in ids}
    for a_idx, a in enumerate(ids):
        for b in ids[a_idx + 1:]:
            if _distance(points[a], points[b]) <= fld.comm_radius:
                adj[a].append(b)
                adj[b].append(a)
    return adj


def _check_connected(adj: dict[int, list[int]]) -> None:
    seen = {BST}
    queue = deque([BST])
    while queue:
        for v in adj[queue.popleft()]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    missing = sorted(set(adj) - seen)
    if missing:
        raise DisconnectedFieldError(missing)


def run_query(
    fld: Field,
    placements: Sequence[NodePlacement],
    em: EnergyModel,
    q: Query,
    mode: RoutingMode,
) -> EnergyLedger:
    """Route one reply per matching node toward the BST and account the radio energy.

    Every in-range neighbour of a transmitter pays a reception whether or not
    it goes on to forward. Each node forwards a given reply at most once; the
    BST only absorbs.
    """
    ids = [n.node_id for n in placements]
    if len(set(ids)) != len(ids) or BST in ids:
        raise ValueError("node ids must be unique and distinct from the base station id")
    adj = _neighbours(fld, placements)
    _check_connected(adj)
    identity = identify(fld, placements)
    rng = random.Random(mode.seed) if isinstance(mode, ControlledFlood) else None
    ledger = EnergyLedger(em.e_t, em.e_r)

    origins = sorted(n.node_id for n in placements if match_query(q, n))
    handled = {origin: {origin} for origin in origins}
    queue = deque((origin, origin) for origin in origins)  # (transmitter, reply id)
    delivered = set()
    while queue:
        sender, reply = queue.popleft()
        ledger._charge(sender, "tx")
        for node in adj[sender]:
            ledger._charge(node, "rx")
            if node == BST:
                delivered.add(reply)
                continue
            if node in handled[reply]:
                continue
            if isinstance(mode, LevelSector):
                if not accept(identity[sender], identity[node], fld.sector_count):
                    continue
            elif isinstance(mode, ControlledFlood):
                handled[reply].add(node)  # one coin per node per reply
                if rng.random() >= mode.p:
                    continue
            handled[reply].add(node)
            queue.append((node, reply))
    ledger.delivered_replies = sorted(delivered)
    ledger.undelivered_replies = [r for r in origins if r not in delivered]
    return ledger


def field_from_dict(data: dict) -> tuple[Field, list[NodePlacement]]:
    fld = Field(tuple(data["bst"]), tuple(data["rings"]), int(data["sectors"]), float(data["comm_radius"]))
    nodes = [
        NodePlacement(int(n["id"]), tuple(n["pos"]), n.get("data_type", ""), float(n.get("data_value", 0.0)))
        for n in data["nodes"]
    ]
    return fld, nodes


def field_to_dict(fld: Field, placements: Sequence[NodePlacement]) -> dict:
    return {
        "bst": list(fld.bst_position),
        "rings": list(fld.ring_radii),
        "sectors": fld.sector_count,
        "comm_radius": fld.comm_radius,
        "nodes": [
            {"id": n.node_id, "pos": list(n.position), "data_type": n.data_type, "data_value": n.data_value}
            for n in placements
        ],
    }


def load_field(path) -> tuple[Field, list[NodePlacement]]:
    with open(path) as fh:
        return field_from_dict(json.load(fh))


def random_field(
    rng: random.Random,
    n_nodes: int = 30,
    radius: float = 100.0,
    rings: int = 4,
    sectors: int = 8,
    comm_radius: float = 30.0,
    match_fraction: float = 0.3,
) -> tuple[Field, list[NodePlacement]]:
    """Random connected field around the origin.

    Nodes are grown one at a time, each dropped within radio range of a
    uniformly chosen earlier node (or the BST) and inside the outermost ring,
    so the field is connected by construction.
    """
    fld = Field((0.0, 0.0), tuple(radius * (t + 1) / rings for t in range(rings)), sectors, comm_radius)
    anchors = [fld.bst_position]
    nodes = []
    while len(nodes) < n_nodes:
        ax, ay = rng.choice(anchors)
        step = comm_radius * math.sqrt(rng.random())
        angle = rng.uniform(0, 2 * math.pi)
        x, y = ax + step * math.cos(angle), ay + step * math.sin(angle)
        if math.hypot(x, y) > radius or (x, y) == fld.bst_position:
            continue
        value = 40.0 if rng.random() < match_fraction else 20.0
        nodes.append(NodePlacement(len(nodes), (x, y), "temp", value))
        anchors.append((x, y))
    return fld, nodes


@dataclass(frozen=True)
class ConstantWastePoint:
    d: int
    involved: int
    energy: int


def constant_waste_demo(
    spec: TopologySpec, i: int, em: EnergyModel, depths: Iterable[int] | None = None
) -> list[ConstantWastePoint]:
    """Involvement and energy per depth when deeper nodes drop the packet.

    Only the broadcasters at depth ``i`` transmit and only depth ``i + 1``
    receives, so the values do not depend on ``d``. ``spec`` fixes the family
    parameters; ``depths`` (default: the spec's own depth) are substituted in.
    """
    if not isinstance(spec, (Binary, Nested, Qary)):
        raise DomainError("constant_waste_demo supports binary, nested and q-ary trees")
    depths = [spec.d] if depths is None else sorted(depths)
    out = []
    for d in depths:
        if i < 0 or i >= d:
            raise DomainError(f"need 0 <= i < d, got i={i}, d={d}")
        sized = replace(spec, d=d)
        broadcasters, receivers = level_size(sized, i), level_size(sized, i + 1)
        out.append(ConstantWastePoint(d, receivers, em.e_t * broadcasters + em.e_r * receivers))
    return out
