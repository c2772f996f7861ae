"""Logical operator placement and code distances.

An X logical is a chain of undisabled data qubits from the top X boundary to
the bottom one in which consecutive qubits share a Z check; Z logicals run
left to right through X checks.  Path weight counts data qubits only.

Two flavours of "share a check" are used.  With stabilizer hubs (the
default for distances and string counts) two qubits are linked when they lie
in the mod-2 support of one opposite-basis stabilizer, so a string may cross
a super-stabilizer's hole for free: that is the shortest error string no
stabilizer detects.  With gauge hubs two qubits must share a single
undisabled syndrome; such paths commute with every measured gauge and are
what circuits use as observables.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .adapter import NodeStatus
from .lattice import BOTTOM, LEFT, RIGHT, TOP, X, Z, Coord, Lattice, other_basis
from .patch import PatchedCode, Stabilizer

class NoLogicalPath(RuntimeError):
    """The two opposing boundaries are disconnected: the logical qubit is gone."""


@dataclass(frozen=True)
class LogicalSearchGraph:
    basis: str
    data: frozenset[Coord]
    syndromes: frozenset[Coord]
    # data qubit -> data qubits reachable through one shared syndrome
    adjacency: dict[Coord, tuple[Coord, ...]] = field(hash=False, compare=False)
    sources: tuple[Coord, ...] = ()
    targets: tuple[Coord, ...] = ()


@dataclass(frozen=True)
class LogicalOperator:
    basis: str
    support: tuple[Coord, ...]
    endpoints: tuple[Coord, Coord]

    @property
    def weight(self) -> int:
        return len(self.support)


def build_logical_graph(
    lattice: Lattice, status: NodeStatus, basis: str, stabilizers: list[Stabilizer] | None = None
) -> LogicalSearchGraph:
    """Search graph for ``basis`` logicals.

    With ``stabilizers`` each opposite-basis stabilizer is one hub joining its
    whole support; without, every undisabled opposite-basis syndrome is a hub
    joining its live data neighbours.
    """
    opp = other_basis(basis)
    if stabilizers is None:
        hubs = {s: status.live_neighbors(s) for s in lattice.syndromes_of(opp) if not status.is_disabled(s)}
    else:
        hubs = {st.key: sorted(st.support) for st in stabilizers if st.basis == opp}
    data = frozenset(status.live_data)
    adj: dict[Coord, set[Coord]] = {d: set() for d in data}
    for members in hubs.values():
        for a in members:
            adj[a].update(b for b in members if b != a)
    start, end = (TOP, BOTTOM) if basis == X else (LEFT, RIGHT)
    return LogicalSearchGraph(
        basis=basis,
        data=data,
        syndromes=frozenset(hubs),
        adjacency={d: tuple(sorted(v)) for d, v in adj.items()},
        sources=tuple(sorted(d for d, sides in status.boundary.items() if start in sides)),
        targets=tuple(sorted(d for d, sides in status.boundary.items() if end in sides)),
    )


def _bfs(graph: LogicalSearchGraph, roots: tuple[Coord, ...]) -> dict[Coord, int]:
    dist = {r: 1 for r in roots}
    queue = deque(roots)
    while queue:
        a = queue.popleft()
        for b in graph.adjacency[a]:
            if b not in dist:
                dist[b] = dist[a] + 1
                queue.append(b)
    return dist


def _distance_field(graph: LogicalSearchGraph) -> tuple[int, dict[Coord, int]]:
    if not graph.sources or not graph.targets:
        raise NoLogicalPath(f"{graph.basis} logical: a boundary segment is empty")
    to_target = _bfs(graph, graph.targets)
    reachable = [to_target[s] for s in graph.sources if s in to_target]
    if not reachable:
        raise NoLogicalPath(f"{graph.basis} logical: opposing boundaries are disconnected")
    return min(reachable), to_target


def _restrict(graph: LogicalSearchGraph, avoid: frozenset[Coord]) -> LogicalSearchGraph:
    return replace(
        graph,
        data=graph.data - avoid,
        adjacency={d: tuple(b for b in nb if b not in avoid) for d, nb in graph.adjacency.items() if d not in avoid},
        sources=tuple(s for s in graph.sources if s not in avoid),
        targets=tuple(t for t in graph.targets if t not in avoid),
    )


def _walk(graph: LogicalSearchGraph, d: int, to_target: dict[Coord, int]) -> list[Coord]:
    node = min(s for s in graph.sources if to_target.get(s) == d)
    path = [node]
    while to_target[node] > 1:
        node = min(b for b in graph.adjacency[node] if to_target.get(b) == to_target[node] - 1)
        path.append(node)
    return path


def find_logical(
    lattice: Lattice,
    status: NodeStatus,
    basis: str,
    stabilizers: list[Stabilizer] | None = None,
    avoid: frozenset[Coord] = frozenset(),
) -> LogicalOperator:
    """Shortest boundary-to-boundary path; ties go to the lexicographically smallest walk.

    ``stabilizers`` selects stabilizer hubs (see the module docstring).
    Qubits in ``avoid`` are skipped whenever some path of the same minimum
    weight exists without them; otherwise they are allowed.  The weight is
    never changed by ``avoid``.
    """
    graph = build_logical_graph(lattice, status, basis, stabilizers)
    d, to_target = _distance_field(graph)
    if avoid:
        sub = _restrict(graph, avoid)
        if sub.sources and sub.targets:
            sub_field = _bfs(sub, sub.targets)
            if any(sub_field.get(s) == d for s in sub.sources):
                graph, to_target = sub, sub_field
    path = _walk(graph, d, to_target)
    return LogicalOperator(basis=basis, support=tuple(path), endpoints=(path[0], path[-1]))


def place_logicals(code: PatchedCode) -> tuple[LogicalOperator, LogicalOperator]:
    """Gauge-compatible X and Z logicals, steered off multiplicity-cancelled qubits.

    These commute with every individual gauge, so they can serve as circuit
    observables whatever the measurement schedule.
    """
    lat, status = code.lattice, code.status
    return (
        find_logical(lat, status, X, avoid=code.cancelled_qubits(Z)),
        find_logical(lat, status, Z, avoid=code.cancelled_qubits(X)),
    )


def _stabilizers(lattice: Lattice, status: NodeStatus, stabilizers: list[Stabilizer] | None) -> list[Stabilizer]:
    if stabilizers is None:
        from .patch import patch

        stabilizers = patch(lattice, status).stabilizers
    return stabilizers


def code_distances(
    lattice: Lattice, status: NodeStatus, stabilizers: list[Stabilizer] | None = None
) -> tuple[int, int]:
    """(d_X, d_Z): weights of the shortest strings no stabilizer detects."""
    stabs = _stabilizers(lattice, status, stabilizers)
    return (
        find_logical(lattice, status, X, stabs).weight,
        find_logical(lattice, status, Z, stabs).weight,
    )


@dataclass(frozen=True)
class MinWeightCount:
    distance: int
    count: int


def count_min_weight_logicals(
    lattice: Lattice,
    status: NodeStatus,
    basis: str,
    stabilizers: list[Stabilizer] | None = None,
) -> MinWeightCount:
    """Count distinct minimum-weight boundary-to-boundary strings.

    Every qubit on a shortest path sits at a fixed BFS level, so a path is
    determined by its support and counting supports reduces to counting
    paths through the shortest-path DAG.
    """
    graph = build_logical_graph(lattice, status, basis, _stabilizers(lattice, status, stabilizers))
    d, to_target = _distance_field(graph)
    ways: dict[Coord, int] = {}
    for node in sorted(to_target, key=to_target.get):
        level = to_target[node]
        if level == 1:
            ways[node] = 1
        else:
            ways[node] = sum(ways[b] for b in graph.adjacency[node] if to_target.get(b) == level - 1)
    return MinWeightCount(distance=d, count=sum(ways[s] for s in graph.sources if to_target.get(s) == d))


@dataclass
class LogicalReport:
    ok: bool
    failures: list[str]
    # opposite-basis gauges crossed an odd number of times (matters for circuits)
    gauge_violations: list[Coord] = field(default_factory=list)
    touches_cancelled: list[Coord] = field(default_factory=list)


def verify_logical(
    lattice: Lattice,
    status: NodeStatus,
    op: LogicalOperator,
    stabilizers: list[Stabilizer],
    partner: LogicalOperator | None = None,
) -> LogicalReport:
    failures = []
    support = set(op.support)
    if len(support) != len(op.support):
        failures.append("support repeats a qubit")
    disabled = sorted(q for q in support if status.is_disabled(q))
    if disabled:
        failures.append(f"support uses disabled qubits {disabled}")
    opp = other_basis(op.basis)
    for s in stabilizers:
        if s.basis == opp and len(support & s.support) % 2:
            failures.append(f"odd overlap with {opp} stabilizer {s.key}")
    if partner is not None and len(support & set(partner.support)) % 2 == 0:
        failures.append(f"{op.basis} and {partner.basis} logicals overlap evenly")
    gauges = [
        g
        for s in stabilizers
        if s.basis == opp
        for g in s.members
        if len(support & set(status.live_neighbors(g))) % 2
    ]
    cancelled = set()
    for s in stabilizers:
        if s.basis == opp:
            cancelled |= s.cancelled
    return LogicalReport(
        ok=not failures,
        failures=failures,
        gauge_violations=sorted(gauges),
        touches_cancelled=sorted(support & cancelled),
    )
