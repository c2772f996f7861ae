"""Bandage-style adaptation of a defective lattice.

The pipeline has two stages.  Boundary deformation walks the boundary data
nodes, disabling every unsafe one and cleaning its frontier, until the whole
boundary is safe.  Internal defect disabling then runs once over the interior
and never touches the boundary shape.  Weight-1 and bridge syndromes are kept;
the stabilizer search later merges across them.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .lattice import (
    BC,
    BX,
    BZ,
    X,
    X_SIDES,
    Z,
    Z_SIDES,
    Coord,
    DefectMap,
    Lattice,
    sides_class,
)

log = logging.getLogger(__name__)

# Reasons recorded in NodeStatus.disabled.
DEFECTIVE = "Defective"
FRONTIER_CLEANED = "FrontierCleaned"
NEIGHBOR_OF_DEFECT_SYNDROME = "NeighborOfDefectSyndrome"
COUPLER_DEFECT = "CouplerDefect"
WEIGHT_ZERO = "WeightZero"
BASELINE_RULE = "BaselineRule"
UNSAFE_BOUNDARY = "UnsafeBoundary"

BANDAGE = "bandage"
TRADITIONAL = "traditional"

# Expected frontier composition (X syndromes, Z syndromes) per boundary class.
SAFE_TEMPLATE = {BX: (2, 1), BZ: (1, 2), BC: (1, 1)}


class AdaptationExhausted(RuntimeError):
    """Every data qubit got disabled; the device cannot host the code."""


@dataclass
class NodeStatus:
    """Mutable record of what the adaptation disabled and where the boundary is."""

    lattice: Lattice
    disabled: dict[Coord, str] = field(default_factory=dict)
    boundary: dict[Coord, frozenset[str]] = field(default_factory=dict)
    internally_disabled: set[Coord] = field(default_factory=set)
    deformation_disabled: set[Coord] = field(default_factory=set)
    method: str = BANDAGE
    events: list[dict] = field(default_factory=list)

    @classmethod
    def fresh(cls, lattice: Lattice) -> NodeStatus:
        return cls(lattice=lattice, boundary=dict(lattice.initial_sides))

    def copy(self) -> NodeStatus:
        return NodeStatus(
            lattice=self.lattice,
            disabled=dict(self.disabled),
            boundary=dict(self.boundary),
            internally_disabled=set(self.internally_disabled),
            deformation_disabled=set(self.deformation_disabled),
            method=self.method,
            events=list(self.events),
        )

    # -- queries ---------------------------------------------------------

    def is_disabled(self, c: Coord) -> bool:
        return c in self.disabled

    def live_neighbors(self, c: Coord) -> list[Coord]:
        return [n for n in self.lattice.neighbors[c] if n not in self.disabled]

    def weight(self, s: Coord) -> int:
        """Number of undisabled data neighbours of syndrome ``s``."""
        return len(self.live_neighbors(s))

    def boundary_class(self, d: Coord) -> str:
        return sides_class(self.boundary.get(d, ()))

    @property
    def live_data(self) -> list[Coord]:
        return sorted(d for d in self.lattice.data if d not in self.disabled)

    @property
    def live_syndromes(self) -> list[Coord]:
        return sorted(s for s in self.lattice.syndromes if s not in self.disabled)

    def disabled_data(self) -> set[Coord]:
        return {c for c in self.disabled if c in self.lattice.data}

    # -- mutation ----------------------------------------------------------

    def disable(self, c: Coord, reason: str, step: str, internal: bool = False, **detail) -> None:
        if c in self.disabled:
            return
        self.disabled[c] = reason
        if c in self.lattice.data:
            self.boundary.pop(c, None)
            if internal:
                self.internally_disabled.add(c)
            else:
                self.deformation_disabled.add(c)
        self.events.append({"step": step, "node": list(c), "reason": reason, **detail})


def frontier(lattice: Lattice, status: NodeStatus, node: Coord) -> list[Coord]:
    """Undisabled syndrome neighbours of a data node."""
    return status.live_neighbors(node)


def is_safe(node: Coord, lattice: Lattice, defects: DefectMap, status: NodeStatus) -> tuple[bool, str | None]:
    """Check the three safety conditions for a current boundary data node.

    Returns ``(safe, reason)`` where ``reason`` is ``"condition-1"``,
    ``"condition-2"`` or ``"condition-3"`` for an unsafe node.
    """
    if node not in status.boundary or status.is_disabled(node):
        raise ValueError(f"{node} is not an undisabled boundary data node")
    if defects.is_defective(node):
        return False, "condition-1"
    front = frontier(lattice, status, node)
    for s in front:
        if defects.is_defective(s) or defects.edge_defective(node, s):
            return False, "condition-2"
    n_x = sum(1 for s in front if lattice.syndromes[s] == X)
    n_z = len(front) - n_x
    if (n_x, n_z) != SAFE_TEMPLATE[status.boundary_class(node)]:
        return False, "condition-3"
    return True, None


def _sides_for(sides: frozenset[str], t: str) -> frozenset[str]:
    return sides & (X_SIDES if t == BX else Z_SIDES)


def frontier_cleaner(
    n0: Coord,
    lattice: Lattice,
    defects: DefectMap,
    status: NodeStatus,
    t: str,
    sides: frozenset[str],
) -> tuple[list[Coord], list[Coord]]:
    """Clean the frontier of the just-disabled boundary data node ``n0``.

    ``t`` and ``sides`` are the boundary class and sides ``n0`` had before it
    was disabled.  Returns the syndromes disabled here and the data nodes
    newly added to the boundary.
    """
    newly_disabled: list[Coord] = []
    new_boundary: list[Coord] = []
    kind = lattice.syndromes

    for s in frontier(lattice, status, n0):
        if defects.is_defective(s):
            reason = DEFECTIVE
        elif status.weight(s) == 0:
            reason = WEIGHT_ZERO
        elif (kind[s] == X and t == BZ) or (kind[s] == Z and t == BX):
            reason = FRONTIER_CLEANED
        else:
            continue
        status.disable(s, reason, "frontier-cleaner", owner=list(n0))
        newly_disabled.append(s)

    if t == BC:
        remaining = frontier(lattice, status, n0)
        if len(remaining) == 2:
            a, b = remaining
            wa, wb = status.weight(a), status.weight(b)
            if wa != wb:
                victim = a if wa < wb else b
                rule = "fewer-undisabled-data-neighbours"
            else:
                victim = a if kind[a] == Z else b
                rule = "tie-prefers-keeping-X"
            status.disable(victim, FRONTIER_CLEANED, "frontier-cleaner", owner=list(n0), corner_rule=rule)
            newly_disabled.append(victim)

    s_d = [s for s in lattice.neighbors[n0] if status.is_disabled(s) and status.weight(s) > 0]

    if t == BC:
        x = z = 0
        for s in s_d:
            n_three = sum(1 for d in status.live_neighbors(s) if len(status.live_neighbors(d)) == 3)
            if kind[s] == X:
                x += n_three
            else:
                z += n_three
        t = BZ if x > z else BX
        status.events.append({"step": "corner-retype", "node": list(n0), "x": x, "z": z, "as": t})

    add_sides = _sides_for(sides, t)
    if not add_sides:
        return newly_disabled, new_boundary
    for s in s_d:
        if (kind[s] == X and t == BZ) or (kind[s] == Z and t == BX):
            for d in status.live_neighbors(s):
                before = status.boundary.get(d)
                status.boundary[d] = (before or frozenset()) | add_sides
                if before is None:
                    new_boundary.append(d)
    return newly_disabled, new_boundary


def _visit(n0: Coord, lattice: Lattice, defects: DefectMap, status: NodeStatus, step: str) -> bool:
    if status.is_disabled(n0) or n0 not in status.boundary:
        return False
    safe, why = is_safe(n0, lattice, defects, status)
    if safe:
        return False
    t = status.boundary_class(n0)
    sides = status.boundary[n0]
    reason = DEFECTIVE if why == "condition-1" else UNSAFE_BOUNDARY
    status.disable(n0, reason, step, condition=why, boundary_class=t)
    frontier_cleaner(n0, lattice, defects, status, t, sides)
    return True


def _ensure_alive(status: NodeStatus) -> None:
    if not status.live_data:
        raise AdaptationExhausted("every data qubit was disabled; the lattice cannot host a surface code")


def boundary_deformation(lattice: Lattice, defects: DefectMap, status: NodeStatus | None = None) -> NodeStatus:
    """Disable unsafe boundary data nodes until the boundary is clean.

    Corners are visited first.  Later rounds sweep every undisabled boundary
    node in lexicographic order; nodes introduced during a round are examined
    in the next one.
    """
    status = status or NodeStatus.fresh(lattice)
    for n0 in sorted(d for d in status.boundary if status.boundary_class(d) == BC):
        _visit(n0, lattice, defects, status, "boundary-corners")
    rounds = 0
    while True:
        rounds += 1
        changed = False
        for n0 in sorted(status.boundary):
            changed |= _visit(n0, lattice, defects, status, f"boundary-round-{rounds}")
        if not changed:
            break
        _ensure_alive(status)
    _ensure_alive(status)
    return status


def disable_internal_defects(lattice: Lattice, defects: DefectMap, status: NodeStatus) -> NodeStatus:
    """Apply the four internal disabling rules once, in order."""
    boundary_before = dict(status.boundary)
    for s in sorted(q for q in defects.qubits if q in lattice.syndromes):
        if status.is_disabled(s):
            continue
        status.disable(s, DEFECTIVE, "internal-1")
        for d in status.live_neighbors(s):
            status.disable(d, NEIGHBOR_OF_DEFECT_SYNDROME, "internal-1", internal=True, syndrome=list(s))
    for d in sorted(q for q in defects.qubits if q in lattice.data):
        status.disable(d, DEFECTIVE, "internal-2", internal=True)
    for d, s in sorted(defects.couplers):
        if not status.is_disabled(d) and not status.is_disabled(s):
            status.disable(d, COUPLER_DEFECT, "internal-3", internal=True, syndrome=list(s))
    remove_weight_zero(status, "internal-4")
    if status.boundary != boundary_before:
        raise AssertionError("internal defect disabling altered the boundary")
    _ensure_alive(status)
    return status


def remove_weight_zero(status: NodeStatus, step: str) -> list[Coord]:
    out = []
    for s in status.live_syndromes:
        if status.weight(s) == 0:
            status.disable(s, WEIGHT_ZERO, step)
            out.append(s)
    return out


def adapt_bandage(lattice: Lattice, defects: DefectMap) -> NodeStatus:
    """Boundary deformation followed by a single internal-disabling pass."""
    defects.validate(lattice)
    status = boundary_deformation(lattice, defects)
    disable_internal_defects(lattice, defects, status)
    log.debug("bandage adaptation disabled %d qubits", len(status.disabled))
    return status


# ---------------------------------------------------------------------------
# reporting


def boundary_membership(status: NodeStatus) -> dict[Coord, str]:
    return {d: status.boundary_class(d) for d in sorted(status.boundary)}


def adaptation_report(status: NodeStatus) -> dict:
    lat = status.lattice
    disabled = sorted(status.disabled)
    n_data = sum(1 for c in disabled if c in lat.data)
    return {
        "method": status.method,
        "size": lat.size,
        "counts": {
            "disabled_total": len(disabled),
            "disabled_data": n_data,
            "disabled_syndromes": len(disabled) - n_data,
            "internally_disabled_data": len(status.internally_disabled),
            "deformation_disabled_data": len(status.deformation_disabled),
            "qubits_total": lat.n_qubits,
        },
        "disabled": [{"node": list(c), "kind": lat.kind(c), "reason": status.disabled[c]} for c in disabled],
        "boundary": [
            {"node": list(d), "class": cls, "sides": sorted(status.boundary[d])}
            for d, cls in boundary_membership(status).items()
        ],
        "corner_rule_interpretation": "weight = undisabled data neighbours",
        "events": status.events,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"

