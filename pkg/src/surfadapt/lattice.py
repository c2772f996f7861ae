"""Rotated surface-code lattice, defect maps and the device file format.

Positions use doubled integer coordinates: data qubits sit at (odd, odd)
points in ``1..2L-1`` and syndrome qubits at (even, even) points in
``0..2L``.  ``x`` is the column and ``y`` the row, with ``y = 0`` at the top.
The top and bottom rows are X boundaries (weight-2 X checks live there) and
the left and right columns are Z boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

Coord = tuple[int, int]
Edge = tuple[Coord, Coord]  # (data, syndrome)

DATA = "D"
X = "X"
Z = "Z"

# Boundary sides.  Top/bottom belong to the X boundary, left/right to Z.
TOP, BOTTOM, LEFT, RIGHT = "T", "B", "L", "R"
X_SIDES = frozenset({TOP, BOTTOM})
Z_SIDES = frozenset({LEFT, RIGHT})

# Boundary classes of data nodes.
INTERIOR, BX, BZ, BC = "Interior", "BX", "BZ", "BC"


class DeviceFormatError(ValueError):
    """Raised when a device description cannot be parsed or validated."""


def syndrome_type(c: Coord) -> str:
    """Checkerboard type of the syndrome position ``c`` (both coordinates even).

    The top-left data qubit has its X neighbour above it, which fixes
    ``(x + y) / 2`` odd as X.
    """
    return X if ((c[0] + c[1]) // 2) % 2 == 1 else Z


def other_basis(basis: str) -> str:
    return Z if basis == X else X


def sides_class(sides: Iterable[str]) -> str:
    sides = set(sides)
    on_x = bool(sides & X_SIDES)
    on_z = bool(sides & Z_SIDES)
    if on_x and on_z:
        return BC
    if on_x:
        return BX
    if on_z:
        return BZ
    return INTERIOR


def canonical_edge(a: Coord, b: Coord) -> Edge:
    """Order a coupler as ``(data, syndrome)`` regardless of argument order."""
    if a[0] % 2 == 1:
        return (a, b)
    return (b, a)


@dataclass(frozen=True)
class Lattice:
    """Defect-free rotated surface code of size ``L`` (``L x L`` data qubits)."""

    size: int
    data: frozenset[Coord]
    syndromes: dict[Coord, str] = field(hash=False, compare=False)
    edges: frozenset[Edge]

    @cached_property
    def neighbors(self) -> dict[Coord, tuple[Coord, ...]]:
        nbrs: dict[Coord, list[Coord]] = {c: [] for c in self.data}
        nbrs.update({s: [] for s in self.syndromes})
        for d, s in self.edges:
            nbrs[d].append(s)
            nbrs[s].append(d)
        return {c: tuple(sorted(v)) for c, v in nbrs.items()}

    @cached_property
    def qubits(self) -> tuple[Coord, ...]:
        """All qubits in row-major order (by ``y``, then ``x``)."""
        return tuple(sorted(set(self.data) | set(self.syndromes), key=lambda c: (c[1], c[0])))

    @cached_property
    def initial_sides(self) -> dict[Coord, frozenset[str]]:
        """Boundary sides of every data node of the undeformed patch."""
        top, bottom = 1, 2 * self.size - 1
        out = {}
        for x, y in self.data:
            sides = set()
            if y == top:
                sides.add(TOP)
            if y == bottom:
                sides.add(BOTTOM)
            if x == top:
                sides.add(LEFT)
            if x == bottom:
                sides.add(RIGHT)
            if sides:
                out[(x, y)] = frozenset(sides)
        return out

    def kind(self, c: Coord) -> str:
        if c in self.data:
            return DATA
        if c in self.syndromes:
            return self.syndromes[c]
        raise KeyError(f"{c} is not a qubit of the L={self.size} lattice")

    def contains(self, c: Coord) -> bool:
        return c in self.data or c in self.syndromes

    def syndromes_of(self, basis: str) -> list[Coord]:
        return sorted(s for s, t in self.syndromes.items() if t == basis)

    def boundary_class(self, c: Coord) -> str:
        return sides_class(self.initial_sides.get(c, ()))

    @property
    def n_qubits(self) -> int:
        return len(self.data) + len(self.syndromes)


def build_lattice(L: int) -> Lattice:
    """Build the rotated surface-code lattice of odd size ``L``."""
    if not isinstance(L, (int, np.integer)) or isinstance(L, bool):
        raise ValueError(f"code size must be an integer, got {L!r}")
    if L < 1 or L % 2 == 0:
        raise ValueError(
            f"code size must be a positive odd integer, got {L}; "
            "even sizes have no unambiguous boundary convention"
        )
    L = int(L)
    hi = 2 * L
    data = frozenset((x, y) for x in range(1, hi, 2) for y in range(1, hi, 2))
    syndromes: dict[Coord, str] = {}
    for x in range(0, hi + 1, 2):
        for y in range(0, hi + 1, 2):
            t = syndrome_type((x, y))
            on_row = y in (0, hi)
            on_col = x in (0, hi)
            if on_row and on_col:
                continue
            # Boundary checks only exist on the sides matching their type.
            if on_row and (t != X or x in (0, hi)):
                continue
            if on_col and (t != Z or y in (0, hi)):
                continue
            syndromes[(x, y)] = t
    edges = set()
    for s in syndromes:
        for dx in (-1, 1):
            for dy in (-1, 1):
                d = (s[0] + dx, s[1] + dy)
                if d in data:
                    edges.add((d, s))
    return Lattice(size=L, data=data, syndromes=syndromes, edges=frozenset(edges))


@dataclass(frozen=True)
class DefectMap:
    """Defective qubits and couplers of one device.

    Rates and seed are provenance only; the sets are authoritative.
    """

    qubits: frozenset[Coord] = frozenset()
    couplers: frozenset[Edge] = frozenset()
    qubit_rate: float | None = None
    coupler_rate: float | None = None
    seed: int | None = None

    def is_defective(self, c: Coord) -> bool:
        return c in self.qubits

    def edge_defective(self, d: Coord, s: Coord) -> bool:
        return (d, s) in self.couplers

    def validate(self, lattice: Lattice) -> None:
        for q in self.qubits:
            if not lattice.contains(q):
                raise DeviceFormatError(f"defective qubit {list(q)} is not on the L={lattice.size} lattice")
        for e in self.couplers:
            if e not in lattice.edges:
                raise DeviceFormatError(
                    f"defective coupler {[list(e[0]), list(e[1])]} is not on the L={lattice.size} lattice"
                )

    @property
    def n_defects(self) -> int:
        return len(self.qubits) + len(self.couplers)


def _check_rate(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def inject_defects(lattice: Lattice, qubit_rate: float, coupler_rate: float, seed: int) -> DefectMap:
    """Draw an independent Bernoulli defect for every qubit and coupler.

    One ``numpy`` PCG64 stream seeded with ``seed`` supplies a uniform double
    per entity: first every qubit in row-major order, then every coupler in
    row-major order of its data endpoint followed by its syndrome endpoint.
    An entity is defective when its draw is below the rate.
    """
    qubit_rate = _check_rate("qubit_rate", qubit_rate)
    coupler_rate = _check_rate("coupler_rate", coupler_rate)
    rng = np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))
    qubits = lattice.qubits
    q_draw = rng.random(len(qubits))
    edges = sorted(lattice.edges, key=lambda e: (e[0][1], e[0][0], e[1][1], e[1][0]))
    e_draw = rng.random(len(edges))
    return DefectMap(
        qubits=frozenset(q for q, u in zip(qubits, q_draw) if u < qubit_rate),
        couplers=frozenset(e for e, u in zip(edges, e_draw) if u < coupler_rate),
        qubit_rate=qubit_rate,
        coupler_rate=coupler_rate,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# Device file


def _coord(value, where: str) -> Coord:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise DeviceFormatError(f"{where}: expected [x, y] integer pair, got {value!r}")
    return (value[0], value[1])


def parse_device(text: str) -> tuple[Lattice, DefectMap]:
    """Parse a JSON device description into a lattice and its defect map."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeviceFormatError(f"device file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "size" not in doc:
        raise DeviceFormatError("device file needs a top-level object with a 'size' field")
    try:
        lattice = build_lattice(doc["size"])
    except ValueError as exc:
        raise DeviceFormatError(f"size: {exc}") from None
    defects = doc.get("defects", {})
    if not isinstance(defects, dict):
        raise DeviceFormatError("'defects' must be an object")
    unknown = set(defects) - {"qubits", "couplers"}
    if unknown:
        raise DeviceFormatError(f"unknown field(s) in 'defects': {sorted(unknown)}")

    qubits: set[Coord] = set()
    for i, raw in enumerate(defects.get("qubits", [])):
        q = _coord(raw, f"defects.qubits[{i}]")
        if not lattice.contains(q):
            raise DeviceFormatError(f"defects.qubits[{i}]: unknown coordinate {list(q)} for L={lattice.size}")
        if q in qubits:
            raise DeviceFormatError(f"defects.qubits[{i}]: duplicate defect {list(q)}")
        qubits.add(q)

    couplers: set[Edge] = set()
    for i, raw in enumerate(defects.get("couplers", [])):
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise DeviceFormatError(f"defects.couplers[{i}]: expected [[x1, y1], [x2, y2]], got {raw!r}")
        a = _coord(raw[0], f"defects.couplers[{i}][0]")
        b = _coord(raw[1], f"defects.couplers[{i}][1]")
        for c in (a, b):
            if not lattice.contains(c):
                raise DeviceFormatError(
                    f"defects.couplers[{i}]: unknown coordinate {list(c)} for L={lattice.size}"
                )
        e = canonical_edge(a, b)
        if e not in lattice.edges:
            raise DeviceFormatError(f"defects.couplers[{i}]: {list(a)} and {list(b)} are not coupled")
        if e in couplers:
            raise DeviceFormatError(f"defects.couplers[{i}]: duplicate defect {[list(a), list(b)]}")
        couplers.add(e)

    meta = doc.get("meta", {}) or {}
    if not isinstance(meta, dict):
        raise DeviceFormatError("'meta' must be an object")
    dm = DefectMap(
        qubits=frozenset(qubits),
        couplers=frozenset(couplers),
        qubit_rate=meta.get("qubit_rate"),
        coupler_rate=meta.get("coupler_rate"),
        seed=meta.get("seed"),
    )
    return lattice, dm


def serialize_device(lattice: Lattice, defects: DefectMap) -> str:
    """Canonical device text: lists sorted lexicographically, one entry per line."""
    qubits = sorted(list(q) for q in defects.qubits)
    couplers = sorted(sorted([list(e[0]), list(e[1])]) for e in defects.couplers)
    lines = ["{", f'  "size": {lattice.size},', '  "defects": {']
    lines.append('    "qubits": [' + _join_block([json.dumps(q) for q in qubits]) + "],")
    lines.append('    "couplers": [' + _join_block([json.dumps(c) for c in couplers]) + "]")
    meta = {
        k: v
        for k, v in (
            ("qubit_rate", defects.qubit_rate),
            ("coupler_rate", defects.coupler_rate),
            ("seed", defects.seed),
        )
        if v is not None
    }
    if meta:
        lines.append("  },")
        lines.append('  "meta": ' + json.dumps(meta, sort_keys=True))
    else:
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _join_block(items: list[str]) -> str:
    if not items:
        return ""
    return "\n      " + ",\n      ".join(items) + "\n    "


def device_from_coords(
    L: int,
    qubits: Iterable[Coord] = (),
    couplers: Iterable[tuple[Coord, Coord]] = (),
) -> tuple[Lattice, DefectMap]:
    """Convenience constructor used by tests and the worked-example corpus."""
    lattice = build_lattice(L)
    dm = DefectMap(
        qubits=frozenset(tuple(q) for q in qubits),
        couplers=frozenset(canonical_edge(tuple(a), tuple(b)) for a, b in couplers),
    )
    dm.validate(lattice)
    return lattice, dm
