"""Structural flood propagation over explicit trees.

This is the independent check on the closed forms in ``analytic``: counts
come from walking a realized tree layer by layer, never from the formulas.

Propagation model: the broadcasters (by default every node at depth ``i``)
transmit with certainty. A node below them receives iff its parent
transmitted. A receiver with children forwards the packet, always under pure
flooding and with independent probability ``p`` under controlled flooding;
a childless receiver has nobody to forward to and stays silent.

Necessity: receptions at depth ``i + 1`` are necessary, deeper receptions
and every transmission below depth ``i`` are waste.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _rng
from .analytic import FIELDS, DomainError, EnergyModel, Exact, WastageReport, exact
from .topology import Tree

PURE = "pure"
EXPECTATION = "expectation"
MONTE_CARLO = "monte_carlo"
TRIAL = "trial"


@dataclass(frozen=True)
class McStats:
    """Exact empirical moments of the per-trial waste counts."""

    trials: int
    mean_b_t: Fraction
    mean_b_r: Fraction
    var_b_t: Fraction
    var_b_r: Fraction

    def stderr(self, name: str) -> float:
        var = self.var_b_t if name == "b_t" else self.var_b_r
        return float(np.sqrt(float(var) / self.trials))


@dataclass(frozen=True, eq=False)
class PropagationOutcome:
    """Result of one flood evaluation.

    ``transmitted``/``received`` are per-node arrays: booleans for ``pure``
    and ``trial``, exact ``Fraction`` probabilities (object dtype) for
    ``expectation``, empirical frequencies for ``monte_carlo``.
    ``tx_by_depth``/``rx_by_depth`` are exact per-depth totals (expected or
    mean counts where applicable).
    """

    kind: str
    i: int
    broadcasters: tuple[int, ...]
    transmitted: np.ndarray
    received: np.ndarray
    tx_by_depth: tuple[Exact, ...]
    rx_by_depth: tuple[Exact, ...]
    p: Fraction | None = None
    stats: McStats | None = None
    tree: Tree | None = field(default=None, repr=False)

    def to_dict(self, per_node: bool = False) -> dict:
        out = {
            "kind": self.kind,
            "i": self.i,
            "p": None if self.p is None else str(self.p),
            "broadcaster_count": len(self.broadcasters),
            "tx_by_depth": [str(v) for v in self.tx_by_depth],
            "rx_by_depth": [str(v) for v in self.rx_by_depth],
        }
        if self.stats is not None:
            s = self.stats
            out["monte_carlo"] = {
                "trials": s.trials,
                "mean_b_t": str(s.mean_b_t),
                "mean_b_r": str(s.mean_b_r),
                "var_b_t": str(s.var_b_t),
                "var_b_r": str(s.var_b_r),
            }
        if per_node:
            out["broadcasters"] = list(self.broadcasters)
            out["transmitted"] = [_node_value(v) for v in self.transmitted.tolist()]
            out["received"] = [_node_value(v) for v in self.received.tolist()]
        return out

    def to_json(self, per_node: bool = False, **kwargs) -> str:
        return json.dumps(self.to_dict(per_node), **kwargs)


def _node_value(v):
    return v if isinstance(v, bool) else str(v)


def _broadcasters(tree: Tree, i: int, broadcasters: Iterable[int] | None) -> np.ndarray:
    if i < 0 or i > tree.max_depth or len(tree.layers[i]) == 0:
        raise DomainError(f"tree has no nodes at depth {i}")
    if broadcasters is None:
        return tree.layers[i]
    chosen = np.unique(np.asarray(list(broadcasters), dtype=np.int64))
    if chosen.size == 0:
        raise DomainError("broadcaster set is empty")
    if np.any((chosen < 0) | (chosen >= len(tree))) or np.any(tree.depth[chosen] != i):
        raise DomainError(f"every broadcaster must be a node at depth {i}")
    return chosen


def _relay_hops(tree: Tree, i: int, sources: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Number of coin flips each node's transmission/reception depends on; -1 if impossible.

    Reception at depth m needs the m-i-1 relays between it and its
    broadcaster to fire; a relay's transmission needs one more flip.
    """
    n = len(tree)
    tx = np.full(n, -1, dtype=np.int64)
    rx = np.full(n, -1, dtype=np.int64)
    tx[sources] = 0
    has_children = tree.child_counts > 0
    for layer in tree.layers[i + 1:]:
        rx[layer] = tx[tree.parent[layer]]
        relay = layer[(rx[layer] >= 0) & has_children[layer]]
        tx[relay] = rx[relay] + 1
    return tx, rx


def _sum_by_depth(tree: Tree, mask: np.ndarray) -> tuple[int, ...]:
    return tuple(np.bincount(tree.depth[mask], minlength=tree.max_depth + 1).tolist())


def flood_pure(tree: Tree, i: int, broadcasters: Iterable[int] | None = None) -> PropagationOutcome:
    sources = _broadcasters(tree, i, broadcasters)
    tx_hops, rx_hops = _relay_hops(tree, i, sources)
    tx, rx = tx_hops >= 0, rx_hops >= 0
    return PropagationOutcome(
        PURE, i, tuple(sources.tolist()), tx, rx, _sum_by_depth(tree, tx), _sum_by_depth(tree, rx), tree=tree
    )


def _expected_by_depth(tree: Tree, hops: np.ndarray, p: Fraction) -> tuple[Exact, ...]:
    # group nodes by (depth, hops) and sum count * p**hops exactly
    width = int(hops.max()) + 2
    key = tree.depth * width + (hops + 1)
    counts = np.bincount(key, minlength=(tree.max_depth + 1) * width).reshape(-1, width)
    powers = [Fraction(0)] + [p**e for e in range(width - 1)]
    return tuple(exact(sum(int(c) * w for c, w in zip(row, powers) if c)) for row in counts)


def flood_controlled_expectation(
    tree: Tree, i: int, p, broadcasters: Iterable[int] | None = None
) -> PropagationOutcome:
    """Exact per-node transmit/receive probabilities under controlled flooding."""
    p = _probability(p)
    sources = _broadcasters(tree, i, broadcasters)
    tx_hops, rx_hops = _relay_hops(tree, i, sources)
    width = int(max(tx_hops.max(), rx_hops.max())) + 1
    table = np.empty(width + 1, dtype=object)
    table[:] = [Fraction(0)] + [p**e for e in range(width)]
    return PropagationOutcome(
        EXPECTATION,
        i,
        tuple(sources.tolist()),
        table[tx_hops + 1],
        table[rx_hops + 1],
        _expected_by_depth(tree, tx_hops, p),
        _expected_by_depth(tree, rx_hops, p),
        p=p,
        tree=tree,
    )


def _probability(p) -> Fraction:
    if isinstance(p, float):
        raise TypeError("p must be an exact rational, not float")
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return p


def flood_controlled_trial(
    tree: Tree, i: int, p, seed: int, trial: int, broadcasters: Iterable[int] | None = None
) -> PropagationOutcome:
    """A single seeded trial, evaluated node by node with scalar draws."""
    p = _probability(p)
    sources = _broadcasters(tree, i, broadcasters)
    thr = _rng.threshold(p)
    state = _rng.trial_state(seed, trial)
    n = len(tree)
    tx = np.zeros(n, dtype=bool)
    rx = np.zeros(n, dtype=bool)
    tx[sources] = True
    for layer in tree.layers[i + 1:]:
        for v in layer.tolist():
            if tx[tree.parent[v]]:
                rx[v] = True
                if tree.child_counts[v] > 0 and _rng.draw(state, v) < thr:
                    tx[v] = True
    return PropagationOutcome(
        TRIAL, i, tuple(sources.tolist()), tx, rx, _sum_by_depth(tree, tx), _sum_by_depth(tree, rx), p=p, tree=tree
    )


@dataclass
class _Tally:
    tx_nodes: np.ndarray
    rx_nodes: np.ndarray
    sums: list[int]  # sum b_t, sum b_t^2, sum b_r, sum b_r^2

    def __iadd__(self, other: "_Tally") -> "_Tally":
        self.tx_nodes += other.tx_nodes
        self.rx_nodes += other.rx_nodes
        self.sums = [a + b for a, b in zip(self.sums, other.sums)]
        return self


def _mc_chunk(tree: Tree, i: int, sources: np.ndarray, thr: int, seed: int, lo: int, hi: int) -> _Tally:
    # node-major (n, trials) layout keeps the per-layer row gathers contiguous
    n = len(tree)
    states = _rng.trial_states(seed, np.arange(lo, hi, dtype=np.uint64))
    tx = np.zeros((n, hi - lo), dtype=bool)
    rx = np.zeros((n, hi - lo), dtype=bool)
    tx[sources] = True
    has_children = tree.child_counts > 0
    thr = np.uint64(thr)
    for layer in tree.layers[i + 1:]:
        rx[layer] = tx[tree.parent[layer]]
        relays = layer[has_children[layer]]
        if relays.size:
            tx[relays] = rx[relays] & (_rng.draw_array(states, relays).T < thr)
    b_t = tx[tree.depth >= i + 1].sum(axis=0, dtype=np.int64)
    b_r = rx[tree.depth >= i + 2].sum(axis=0, dtype=np.int64)
    sums = [int(b_t.sum()), int((b_t * b_t).sum()), int(b_r.sum()), int((b_r * b_r).sum())]
    return _Tally(tx.sum(axis=1, dtype=np.int64), rx.sum(axis=1, dtype=np.int64), sums)


def flood_controlled_mc(
    tree: Tree,
    i: int,
    p,
    trials: int,
    seed: int,
    broadcasters: Iterable[int] | None = None,
    workers: int = 1,
    chunk_cells: int = 1 << 22,
) -> PropagationOutcome:
    """Monte Carlo estimate of controlled flooding over ``trials`` seeded floods.

    Draws depend only on ``(seed, trial, node)``; the result is identical for
    any ``workers`` or chunk size.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    p = _probability(p)
    sources = _broadcasters(tree, i, broadcasters)
    thr = _rng.threshold(p)
    step = max(1, chunk_cells // len(tree))
    bounds = [(lo, min(lo + step, trials)) for lo in range(0, trials, step)]
    n = len(tree)
    total = _Tally(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64), [0, 0, 0, 0])
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = pool.map(lambda b: _mc_chunk(tree, i, sources, thr, seed, *b), bounds)
            for part in parts:
                total += part
    else:
        for lo, hi in bounds:
            total += _mc_chunk(tree, i, sources, thr, seed, lo, hi)

    s_t, s_tt, s_r, s_rr = total.sums
    stats = McStats(
        trials,
        Fraction(s_t, trials),
        Fraction(s_r, trials),
        _sample_var(s_t, s_tt, trials),
        _sample_var(s_r, s_rr, trials),
    )
    width = tree.max_depth + 1
    tx_by_depth = tuple(exact(Fraction(int(c), trials)) for c in _int_bincount(tree.depth, total.tx_nodes, width))
    rx_by_depth = tuple(exact(Fraction(int(c), trials)) for c in _int_bincount(tree.depth, total.rx_nodes, width))
    return PropagationOutcome(
        MONTE_CARLO,
        i,
        tuple(sources.tolist()),
        total.tx_nodes / trials,
        total.rx_nodes / trials,
        tx_by_depth,
        rx_by_depth,
        p=p,
        stats=stats,
        tree=tree,
    )


def _int_bincount(depth: np.ndarray, counts: np.ndarray, width: int) -> list[int]:
    out = np.zeros(width, dtype=np.int64)
    np.add.at(out, depth, counts)
    return out.tolist()


def _sample_var(s: int, ss: int, n: int) -> Fraction:
    if n < 2:
        return Fraction(0)
    return (Fraction(ss) - Fraction(s * s, n)) / (n - 1)


@dataclass(frozen=True)
class StructuralWastage:
    """Waste measured on a realized tree.

    ``t_x`` charges every broadcaster its transmission; ``t_x_compat`` and
    ``e_total_compat`` charge a single one, as the closed forms do.
    """

    b_t: Exact
    b_r: Exact
    t_x: Exact
    r_x: Exact
    n_total: Exact
    e_total: Exact
    broadcaster_count: int
    t_x_compat: Exact
    e_total_compat: Exact

    def compat(self) -> WastageReport:
        return WastageReport(self.b_t, self.b_r, self.t_x_compat, self.r_x, self.n_total, self.e_total_compat)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def wastage_structural(outcome: PropagationOutcome, i: int, em: EnergyModel) -> StructuralWastage:
    if outcome.i != i:
        raise DomainError(f"outcome was produced for depth {outcome.i}, not {i}")
    b_t = exact(sum(outcome.tx_by_depth[i + 1:]))
    b_r = exact(sum(outcome.rx_by_depth[i + 2:]))
    nb = len(outcome.broadcasters)
    t_x = exact(em.e_t * nb + em.e_t * b_t)
    t_x_compat = exact(em.e_t + em.e_t * b_t)
    r_x = exact(em.e_r * b_r)
    return StructuralWastage(
        b_t, b_r, t_x, r_x, exact(b_t + b_r), exact(t_x + r_x), nb, t_x_compat, exact(t_x_compat + r_x)
    )


@dataclass(frozen=True)
class DiscrepancyRecord:
    """Field-by-field ``analytic - structural`` differences (compat energy reading)."""

    analytic: WastageReport
    structural: WastageReport
    differences: dict

    @property
    def zero(self) -> dict:
        return {k: v == 0 for k, v in self.differences.items()}

    @property
    def clean(self) -> bool:
        return all(self.zero.values())


def compare(analytic_report: WastageReport, structural: StructuralWastage | WastageReport) -> DiscrepancyRecord:
    other = structural.compat() if isinstance(structural, StructuralWastage) else structural
    diffs = {k: exact(Fraction(getattr(analytic_report, k)) - Fraction(getattr(other, k))) for k in FIELDS}
    return DiscrepancyRecord(analytic_report, other, diffs)

