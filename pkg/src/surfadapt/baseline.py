"""Traditional super-stabilizer adaptation used as the comparison baseline.

After the bandage pipeline, internal weight-1 and bridge syndromes are
removed together with their data neighbours, repeatedly, until none remain.
Offenders touching a boundary data qubit are left alone, which keeps the
boundary fixed and makes this baseline slightly stronger than the original.
"""

from __future__ import annotations

from dataclasses import dataclass

from .adapter import (
    BASELINE_RULE,
    TRADITIONAL,
    NodeStatus,
    _ensure_alive,
    adapt_bandage,
    remove_weight_zero,
)
from .lattice import Coord, DefectMap, Lattice


@dataclass(frozen=True)
class BridgeClassification:
    syndrome: Coord
    diagonal_pair: tuple[Coord, Coord]


def bridge_pair(status: NodeStatus, s: Coord) -> tuple[Coord, Coord] | None:
    """The two live data neighbours of ``s`` if they sit on one diagonal through it."""
    live = status.live_neighbors(s)
    if len(live) != 2:
        return None
    a, b = live
    # Diagonal partners are point reflections of each other through s.
    if a[0] + b[0] == 2 * s[0] and a[1] + b[1] == 2 * s[1]:
        return (a, b)
    return None


def classify_bridge(status: NodeStatus, s: Coord) -> BridgeClassification | None:
    pair = bridge_pair(status, s)
    return BridgeClassification(s, pair) if pair else None


def _touches_boundary(status: NodeStatus, s: Coord) -> bool:
    return any(d in status.boundary for d in status.live_neighbors(s))


def is_offender(status: NodeStatus, s: Coord) -> bool:
    if status.is_disabled(s):
        return False
    w = status.weight(s)
    if w != 1 and bridge_pair(status, s) is None:
        return False
    return not _touches_boundary(status, s)


def find_weight1_and_bridge(status: NodeStatus) -> list[Coord]:
    """Internal weight-1 and bridge syndromes, in lexicographic order."""
    return [s for s in status.live_syndromes if is_offender(status, s)]


def adapt_traditional(lattice: Lattice, defects: DefectMap) -> NodeStatus:
    """Bandage adaptation plus iterative weight-1/bridge removal (the avalanche)."""
    status = adapt_bandage(lattice, defects)
    status.method = TRADITIONAL
    rounds = 0
    while True:
        offenders = find_weight1_and_bridge(status)
        if not offenders:
            break
        rounds += 1
        step = f"baseline-round-{rounds}"
        for s in offenders:
            if not is_offender(status, s):
                continue
            data = status.live_neighbors(s)
            status.disable(s, BASELINE_RULE, step, weight=len(data))
            for d in data:
                status.disable(d, BASELINE_RULE, step, internal=True, syndrome=list(s))
        remove_weight_zero(status, step)
        _ensure_alive(status)
    status.events.append({"step": "baseline-summary", "rounds": rounds})
    return status
