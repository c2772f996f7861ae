"""Stabilizer search on an adapted lattice.

Super-stabilizers are connected components of a per-basis search graph made
of every syndrome node of that basis plus the internally disabled data nodes.
All undisabled syndromes of one component are measured as gauges and their
product is the stabilizer.
"""

from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property

from .adapter import NodeStatus
from .lattice import X, Z, Coord, Lattice


class CommutationError(AssertionError):
    """An X and a Z stabilizer overlap on an odd number of data qubits."""


@dataclass(frozen=True)
class StabilizerSearchGraph:
    basis: str
    nodes: frozenset[Coord]
    adjacency: dict[Coord, tuple[Coord, ...]] = field(hash=False, compare=False)

    @property
    def edges(self) -> set[tuple[Coord, Coord]]:
        return {(a, b) for a, nb in self.adjacency.items() for b in nb if a < b}


@dataclass(frozen=True)
class Stabilizer:
    basis: str
    members: tuple[Coord, ...]
    support: frozenset[Coord]
    multiplicity: tuple[tuple[Coord, int], ...]
    region: frozenset[Coord] = frozenset()

    @property
    def key(self) -> Coord:
        return self.members[0]

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def is_super(self) -> bool:
        return len(self.members) >= 2

    @property
    def cancelled(self) -> frozenset[Coord]:
        """Data qubits counted an even number of times, hence absent from the support."""
        return frozenset(q for q, m in self.multiplicity if m % 2 == 0)


@dataclass(frozen=True)
class StabilizerGroup:
    gid: int
    stabilizers: tuple[Stabilizer, ...]
    region: frozenset[Coord]

    def of_basis(self, basis: str) -> tuple[Stabilizer, ...]:
        return tuple(s for s in self.stabilizers if s.basis == basis)

    def gauges(self, basis: str) -> list[Coord]:
        return sorted(m for s in self.of_basis(basis) for m in s.members)

    def _weights(self, basis: str | None) -> list[int]:
        stabs = [s for s in self.stabilizers if basis is None or s.basis == basis]
        supers = [s.weight for s in stabs if s.is_super]
        return supers or [s.weight for s in stabs]

    def w_avg(self, basis: str | None = None) -> float:
        w = self._weights(basis)
        return sum(w) / len(w) if w else 0.0

    def w_max(self, basis: str | None = None) -> int:
        return max(self._weights(basis), default=0)

    @property
    def w_avg_per_basis(self) -> dict[str, float]:
        return {b: self.w_avg(b) for b in (X, Z) if self.of_basis(b)}

    @property
    def w_max_per_basis(self) -> dict[str, int]:
        return {b: self.w_max(b) for b in (X, Z) if self.of_basis(b)}


def build_search_graph(lattice: Lattice, status: NodeStatus, basis: str) -> StabilizerSearchGraph:
    nodes = set(status.internally_disabled) | set(lattice.syndromes_of(basis))
    adjacency = {n: tuple(m for m in lattice.neighbors[n] if m in nodes) for n in sorted(nodes)}
    return StabilizerSearchGraph(basis=basis, nodes=frozenset(nodes), adjacency=adjacency)


def _make_stabilizer(basis: str, members: list[Coord], region: set[Coord], status: NodeStatus) -> Stabilizer:
    counts: Counter[Coord] = Counter()
    for s in members:
        counts.update(status.live_neighbors(s))
    return Stabilizer(
        basis=basis,
        members=tuple(sorted(members)),
        support=frozenset(q for q, m in counts.items() if m % 2),
        multiplicity=tuple(sorted(counts.items())),
        region=frozenset(region),
    )


def stabilizer_search(graph: StabilizerSearchGraph, status: NodeStatus) -> list[Stabilizer]:
    """One stabilizer per component holding at least one undisabled syndrome."""
    seen: set[Coord] = set()
    out = []
    starts = sorted(n for n in graph.nodes if n in status.lattice.syndromes and not status.is_disabled(n))
    for start in starts:
        if start in seen:
            continue
        comp = []
        queue = deque([start])
        seen.add(start)
        while queue:
            n = queue.popleft()
            comp.append(n)
            for m in graph.adjacency[n]:
                if m not in seen:
                    seen.add(m)
                    queue.append(m)
        members = [n for n in comp if n in status.lattice.syndromes and not status.is_disabled(n)]
        region = {n for n in comp if n in status.lattice.data}
        out.append(_make_stabilizer(graph.basis, members, region, status))
    return out


@dataclass
class CommutationReport:
    ok: bool
    checked_pairs: int
    violations: list[tuple[Coord, Coord, int]]

    def raise_if_failed(self) -> None:
        if not self.ok:
            x, z, k = self.violations[0]
            raise CommutationError(
                f"X stabilizer at {x} and Z stabilizer at {z} share {k} data qubits "
                f"({len(self.violations)} violating pair(s) in total)"
            )


def verify_commutation(stabilizers: list[Stabilizer]) -> CommutationReport:
    by_qubit: dict[Coord, list[int]] = defaultdict(list)
    zs = [s for s in stabilizers if s.basis == Z]
    for i, s in enumerate(zs):
        for q in s.support:
            by_qubit[q].append(i)
    violations = []
    pairs = 0
    for xs in (s for s in stabilizers if s.basis == X):
        overlap: Counter[int] = Counter()
        for q in xs.support:
            overlap.update(by_qubit.get(q, ()))
        pairs += len(overlap)
        for i, k in sorted(overlap.items()):
            if k % 2:
                violations.append((xs.key, zs[i].key, k))
    return CommutationReport(ok=not violations, checked_pairs=pairs, violations=violations)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def anticommuting_gauges(status: NodeStatus, stabilizers: list[Stabilizer]) -> list[tuple[Coord, Coord]]:
    """(X gauge, Z gauge) pairs whose live supports overlap oddly."""
    z_gauges_at: dict[Coord, list[Coord]] = defaultdict(list)
    for s in stabilizers:
        if s.basis == Z:
            for g in s.members:
                for q in status.live_neighbors(g):
                    z_gauges_at[q].append(g)
    pairs = []
    for s in stabilizers:
        if s.basis != X:
            continue
        for g in s.members:
            overlap: Counter[Coord] = Counter()
            for q in status.live_neighbors(g):
                overlap.update(z_gauges_at.get(q, ()))
            pairs.extend((g, h) for h, k in sorted(overlap.items()) if k % 2)
    return pairs


def group_stabilizers(stabilizers: list[Stabilizer], status: NodeStatus) -> list[StabilizerGroup]:
    """Group stabilizers whose defect regions touch.

    Stabilizers are linked when their components share an internally
    disabled data node.  Stabilizers whose individual gauges anticommute
    are linked too, so that regular (ungrouped) stabilizers commute with
    every gauge and can be measured in every cycle.
    """
    index = {m: i for i, s in enumerate(stabilizers) for m in s.members}
    uf = _UnionFind(len(stabilizers))
    owner: dict[Coord, int] = {}
    grouped = set()
    for i, s in enumerate(stabilizers):
        if s.region or s.is_super:
            grouped.add(i)
        for d in s.region:
            if d in owner:
                uf.union(owner[d], i)
            else:
                owner[d] = i
    for g, h in anticommuting_gauges(status, stabilizers):
        i, j = index[g], index[h]
        grouped.update((i, j))
        uf.union(i, j)
    comps: dict[int, list[int]] = defaultdict(list)
    for i in sorted(grouped):
        comps[uf.find(i)].append(i)
    groups = []
    ordered = sorted(comps.values(), key=lambda idx: min(stabilizers[i].key for i in idx))
    for gid, idx in enumerate(ordered):
        stabs = tuple(sorted((stabilizers[i] for i in idx), key=lambda s: (s.basis, s.key)))
        region = frozenset().union(*(s.region for s in stabs))
        groups.append(StabilizerGroup(gid=gid, stabilizers=stabs, region=region))
    return groups


@dataclass
class PatchedCode:
    """Stabilizers and groups of an adapted device."""

    lattice: Lattice
    status: NodeStatus
    stabilizers: list[Stabilizer]

    @cached_property
    def groups(self) -> list[StabilizerGroup]:
        return group_stabilizers(self.stabilizers, self.status)

    @cached_property
    def group_of(self) -> dict[Coord, int]:
        """Gauge syndrome -> group id, for every grouped stabilizer member."""
        return {m: g.gid for g in self.groups for s in g.stabilizers for m in s.members}

    @property
    def regular(self) -> list[Stabilizer]:
        grouped = self.group_of
        return [s for s in self.stabilizers if s.members[0] not in grouped]

    def of_basis(self, basis: str) -> list[Stabilizer]:
        return [s for s in self.stabilizers if s.basis == basis]

    @property
    def supers(self) -> list[Stabilizer]:
        return [s for s in self.stabilizers if s.is_super]

    def super_weights(self) -> list[int]:
        return [s.weight for s in self.supers]

    def average_super_weight(self) -> float | None:
        w = self.super_weights()
        return sum(w) / len(w) if w else None

    def cancelled_qubits(self, basis: str) -> frozenset[Coord]:
        return frozenset().union(*(s.cancelled for s in self.of_basis(basis)))

    def stabilizer_of(self, syndrome: Coord) -> Stabilizer:
        for s in self.stabilizers:
            if syndrome in s.members:
                return s
        raise KeyError(syndrome)


def patch(lattice: Lattice, status: NodeStatus) -> PatchedCode:
    stabs = []
    for basis in (X, Z):
        stabs.extend(stabilizer_search(build_search_graph(lattice, status, basis), status))
    return PatchedCode(lattice=lattice, status=status, stabilizers=stabs)


def stabilizer_dump(code: PatchedCode) -> list[dict]:
    gid = code.group_of
    rows = []
    for s in sorted(code.stabilizers, key=lambda s: (s.basis, s.key)):
        rows.append(
            {
                "basis": s.basis,
                "members": [list(m) for m in s.members],
                "support": sorted(list(q) for q in s.support),
                "weight": s.weight,
                "super": s.is_super,
                "group": gid.get(s.key),
            }
        )
    return rows
