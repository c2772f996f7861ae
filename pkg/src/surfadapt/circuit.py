"""Shelled measurement schedules and their lowering to stabilizer circuits.

Regular stabilizers are measured every cycle.  Each stabilizer group measures
only one basis of gauges per cycle and switches basis after ``s_g``
consecutive cycles (its shell).  The circuit text uses the Stim instruction
set so external decoders can read it directly.

Every check is measured with a CZ-native gadget: reset the ancilla, H, four CZ
layers visiting the data neighbours in the fixed order NW, NE, SW, SE, H,
measure.  X checks additionally conjugate the data qubit by H around its CZ.
Using the same order for both bases keeps simultaneously measured commuting
checks compatible.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .lattice import X, Z, Coord, DefectMap, Lattice, other_basis, serialize_device
from .logical import LogicalOperator
from .patch import PatchedCode, Stabilizer, StabilizerGroup

GLOBAL = "GLOBAL"
LOCALAVG = "LOCALAVG"
LOCALMAX = "LOCALMAX"

ZERO = "zero"
PLUS = "plus"
MEMORY_BASIS = {ZERO: Z, PLUS: X}

# Data-neighbour offsets in CZ layer order.
CZ_ORDER = ((-1, -1), (1, -1), (-1, 1), (1, 1))


class CircuitError(ValueError):
    """The schedule, groups and logical operator cannot form a valid circuit."""


@dataclass(frozen=True)
class ShellStrategy:
    kind: str
    n_shell: int | None = None
    r: Fraction | None = None

    @classmethod
    def global_(cls, n_shell: int) -> ShellStrategy:
        return cls(GLOBAL, n_shell=int(n_shell))

    @classmethod
    def local(cls, kind: str, r) -> ShellStrategy:
        return cls(kind, r=Fraction(str(r)) if isinstance(r, float) else Fraction(r))

    @classmethod
    def parse(cls, text: str) -> ShellStrategy:
        """Parse ``GLOBAL:3``, ``LOCALAVG:0.5`` or ``LOCALMAX:1``."""
        kind, _, value = text.partition(":")
        kind = kind.upper()
        if kind == GLOBAL:
            return cls.global_(int(value))
        if kind in (LOCALAVG, LOCALMAX):
            return cls.local(kind, Fraction(value))
        raise ValueError(f"unknown shell strategy {text!r}")

    def validate(self, L: int) -> None:
        if self.kind == GLOBAL:
            if self.n_shell is None or not 1 <= self.n_shell <= max(1, (L - 1) // 2):
                raise ValueError(f"GLOBAL shell size must be in 1..{max(1, (L - 1) // 2)}, got {self.n_shell}")
        elif self.kind in (LOCALAVG, LOCALMAX):
            if self.r is None or self.r <= 0:
                raise ValueError(f"{self.kind} needs a positive ratio r, got {self.r}")
        else:
            raise ValueError(f"unknown shell strategy {self.kind!r}")

    @property
    def param(self) -> str:
        if self.kind == GLOBAL:
            return str(self.n_shell)
        return format(float(self.r), "g")

    def __str__(self) -> str:
        return f"{self.kind}:{self.param}"


def _super_weights(group: StabilizerGroup) -> list[int]:
    w = [s.weight for s in group.stabilizers if s.is_super]
    return w or [s.weight for s in group.stabilizers]


def shell_sizes(groups: list[StabilizerGroup], strategy: ShellStrategy, L: int) -> dict[int, int]:
    """Shell size per group id.

    Local strategies scale the average or maximum super-stabilizer weight of
    the whole group (both bases) and clamp the result to at least 1.
    """
    strategy.validate(L)
    sizes = {}
    for g in groups:
        if strategy.kind == GLOBAL:
            s = strategy.n_shell
        else:
            w = _super_weights(g)
            ref = Fraction(sum(w), len(w)) if strategy.kind == LOCALAVG else Fraction(max(w))
            s = math.floor(strategy.r * ref)
        sizes[g.gid] = max(1, s)
    return sizes


@dataclass(frozen=True)
class NoiseParams:
    """SI1000 circuit noise driven by a single rate ``p``."""

    p: float = 0.0

    def __post_init__(self):
        if not 0 <= self.p < 0.5:
            raise ValueError(f"physical error rate must lie in [0, 0.5), got {self.p}")

    @property
    def cz(self) -> float:
        return self.p

    @property
    def clifford1(self) -> float:
        return self.p / 10

    @property
    def reset(self) -> float:
        return 2 * self.p

    @property
    def measure(self) -> float:
        return 5 * self.p

    @property
    def idle(self) -> float:
        return self.p / 10

    @property
    def resonator_idle(self) -> float:
        return 2 * self.p


@dataclass
class Schedule:
    code: PatchedCode
    strategy: ShellStrategy
    state: str
    cycles: int
    shells: dict[int, int]
    first_basis: str

    def group_basis(self, gid: int, cycle: int) -> str:
        block = cycle // self.shells[gid]
        return self.first_basis if block % 2 == 0 else other_basis(self.first_basis)

    def block_start(self, gid: int, cycle: int) -> bool:
        return cycle % self.shells[gid] == 0

    def measured(self, cycle: int) -> list[Coord]:
        """Syndromes measured in ``cycle``: all regular checks plus one basis per group."""
        out = [m for s in self.code.regular for m in s.members]
        for g in self.code.groups:
            out.extend(g.gauges(self.group_basis(g.gid, cycle)))
        return sorted(out)

    def pattern(self, gid: int) -> str:
        return "".join(self.group_basis(gid, c) for c in range(self.cycles))


def build_schedule(
    code: PatchedCode, strategy: ShellStrategy, state: str = ZERO, cycles: int | None = None
) -> Schedule:
    L = code.lattice.size
    cycles = L if cycles is None else cycles
    if cycles < 1:
        raise ValueError(f"cycles must be at least 1, got {cycles}")
    if state not in MEMORY_BASIS:
        raise ValueError(f"prepared state must be one of {sorted(MEMORY_BASIS)}, got {state!r}")
    return Schedule(
        code=code,
        strategy=strategy,
        state=state,
        cycles=cycles,
        shells=shell_sizes(code.groups, strategy, L),
        first_basis=other_basis(MEMORY_BASIS[state]),
    )


# ---------------------------------------------------------------------------
# emission


@dataclass
class Circuit:
    text: str
    n_qubits: int
    n_measurements: int
    n_detectors: int
    observable: tuple[Coord, ...]
    qubit_ids: dict[Coord, int] = field(repr=False)

    def __str__(self) -> str:
        return self.text


def _fmt(p: float) -> str:
    return repr(float(p))


class _Writer:
    def __init__(self, noise: NoiseParams):
        self.lines: list[str] = []
        self.noise = noise
        self.n_meas = 0
        self.n_det = 0

    def op(self, name: str, targets, arg: float | None = None) -> None:
        targets = list(targets)
        if not targets:
            return
        head = name if arg is None else f"{name}({_fmt(arg)})"
        self.lines.append(head + " " + " ".join(map(str, targets)))

    def noisy(self, name: str, targets, arg: float) -> None:
        if arg > 0:
            self.op(name, targets, arg)

    def tick(self) -> None:
        self.lines.append("TICK")

    def measure(self, targets: list[int]) -> None:
        self.noisy("X_ERROR", targets, self.noise.measure)
        self.op("M", targets)
        self.n_meas += len(targets)

    def detector(self, coords: tuple, records: list[int]) -> None:
        recs = " ".join(f"rec[{r - self.n_meas}]" for r in sorted(records, reverse=True))
        self.lines.append(f"DETECTOR({', '.join(map(str, coords))}) {recs}")
        self.n_det += 1


def _commutes_with_gauges(stab: Stabilizer, gauges: list[Coord], code: PatchedCode) -> bool:
    live = code.status.live_neighbors
    return all(len(stab.support & set(live(g))) % 2 == 0 for g in gauges)


def _logical_gauge_clash(op: LogicalOperator, code: PatchedCode) -> list[Coord]:
    support = set(op.support)
    opp = other_basis(op.basis)
    return sorted(
        g for s in code.of_basis(opp) for g in s.members if len(support & set(code.status.live_neighbors(g))) % 2
    )


def emit_circuit(schedule: Schedule, noise: NoiseParams, logical: LogicalOperator) -> Circuit:
    """Lower a schedule to circuit text with detectors and one observable."""
    code = schedule.code
    status = code.status
    lat = code.lattice
    mem = MEMORY_BASIS[schedule.state]
    if logical.basis != mem:
        raise CircuitError(f"memory in {mem} needs a {mem} logical, got {logical.basis}")
    clash = _logical_gauge_clash(logical, code)
    if clash:
        raise CircuitError(f"{logical.basis} logical anticommutes with measured gauges {clash}")
    gid_of = code.group_of
    known = {m for s in code.stabilizers for m in s.members}
    for c in range(schedule.cycles):
        for s in schedule.measured(c):
            if s not in known:
                raise CircuitError(f"scheduled syndrome {s} is not a stabilizer member")
    for g in code.groups:
        if g.gid not in schedule.shells:
            raise CircuitError(f"group {g.gid} has no shell size")

    data = status.live_data
    ancillas = sorted({s for c in range(schedule.cycles) for s in schedule.measured(c)})
    qubits = sorted(data + ancillas, key=lambda c: (c[1], c[0]))
    qid = {q: i for i, q in enumerate(qubits)}
    data_ids = [qid[d] for d in sorted(data, key=lambda c: (c[1], c[0]))]
    live = {s: status.live_neighbors(s) for s in ancillas}

    w = _Writer(noise)
    for q in qubits:
        w.lines.append(f"QUBIT_COORDS({q[0]}, {q[1]}) {qid[q]}")

    # Preparation.
    w.op("R", data_ids)
    w.noisy("X_ERROR", data_ids, noise.reset)
    w.tick()
    if mem == X:
        w.op("H", data_ids)
        w.noisy("DEPOLARIZE1", data_ids, noise.clifford1)
        w.tick()

    record: dict[tuple[Coord, int], int] = {}
    stab_of = {m: s for s in code.stabilizers for m in s.members}
    groups = {g.gid: g for g in code.groups}

    for cycle in range(schedule.cycles):
        measured = schedule.measured(cycle)
        anc_ids = [qid[s] for s in sorted(measured, key=lambda c: (c[1], c[0]))]
        active = sorted(data_ids + anc_ids)

        w.op("R", anc_ids)
        w.noisy("X_ERROR", anc_ids, noise.reset)
        w.noisy("DEPOLARIZE1", data_ids, noise.resonator_idle)
        w.tick()

        # CZ layers with data frame changes for X checks.
        layers = []
        for dx, dy in CZ_ORDER:
            pairs, x_partner = [], set()
            for s in measured:
                d = (s[0] + dx, s[1] + dy)
                if d in live[s]:
                    pairs.append((qid[s], qid[d]))
                    if lat.syndromes[s] == X:
                        x_partner.add(qid[d])
            layers.append((pairs, x_partner))

        frame: set[int] = set()
        for k, (pairs, x_partner) in enumerate(layers):
            flip = sorted(frame ^ x_partner)
            hs = sorted(flip + anc_ids) if k == 0 else flip
            if hs:
                w.op("H", hs)
                w.noisy("DEPOLARIZE1", hs, noise.clifford1)
                w.noisy("DEPOLARIZE1", sorted(set(active) - set(hs)), noise.idle)
                w.tick()
            frame = set(x_partner)
            busy = sorted(q for pair in pairs for q in pair)
            w.op("CZ", [q for pair in sorted(pairs, key=lambda p: p[1]) for q in pair])
            w.noisy("DEPOLARIZE2", [q for pair in sorted(pairs, key=lambda p: p[1]) for q in pair], noise.cz)
            w.noisy("DEPOLARIZE1", sorted(set(active) - set(busy)), noise.idle)
            w.tick()
        hs = sorted(frame | set(anc_ids))
        w.op("H", hs)
        w.noisy("DEPOLARIZE1", hs, noise.clifford1)
        w.noisy("DEPOLARIZE1", sorted(set(active) - set(hs)), noise.idle)
        w.tick()

        order = sorted(measured, key=lambda c: (c[1], c[0]))
        base = w.n_meas
        w.measure([qid[s] for s in order])
        for i, s in enumerate(order):
            record[(s, cycle)] = base + i
        w.noisy("DEPOLARIZE1", data_ids, noise.resonator_idle)

        _cycle_detectors(w, schedule, cycle, record, stab_of, groups, gid_of, mem, code)
        w.tick()

    # Final data readout in the memory basis.
    if mem == X:
        w.op("H", data_ids)
        w.noisy("DEPOLARIZE1", data_ids, noise.clifford1)
        w.tick()
    order = sorted(data, key=lambda c: (c[1], c[0]))
    base = w.n_meas
    w.measure([qid[d] for d in order])
    final = {d: base + i for i, d in enumerate(order)}
    _final_detectors(w, schedule, record, final, groups, mem, code)
    recs = " ".join(f"rec[{final[d] - w.n_meas}]" for d in sorted(logical.support, key=lambda c: (c[1], c[0])))
    w.lines.append(f"OBSERVABLE_INCLUDE(0) {recs}")

    return Circuit(
        text="\n".join(w.lines) + "\n",
        n_qubits=len(qubits),
        n_measurements=w.n_meas,
        n_detectors=w.n_det,
        observable=tuple(logical.support),
        qubit_ids=qid,
    )


def _last_block_cycle(schedule: Schedule, gid: int, basis: str, before: int) -> int | None:
    """Latest cycle before ``before`` in which group ``gid`` measured ``basis``."""
    for c in range(before - 1, -1, -1):
        if schedule.group_basis(gid, c) == basis:
            return c
    return None


def _cycle_detectors(w, schedule, cycle, record, stab_of, groups, gid_of, mem, code) -> None:
    t = cycle
    for s in code.regular:
        m = s.members[0]
        if cycle == 0:
            if s.basis == mem:
                w.detector((m[0], m[1], t), [record[(m, 0)]])
        else:
            w.detector((m[0], m[1], t), [record[(m, cycle)], record[(m, cycle - 1)]])
    for gid in sorted(groups):
        g = groups[gid]
        basis = schedule.group_basis(gid, cycle)
        if not schedule.block_start(gid, cycle):
            for m in g.gauges(basis):
                w.detector((m[0], m[1], t), [record[(m, cycle)], record[(m, cycle - 1)]])
            continue
        opposite = g.gauges(other_basis(basis))
        prev = _last_block_cycle(schedule, gid, basis, cycle)
        for stab in g.of_basis(basis):
            if not _commutes_with_gauges(stab, opposite, code):
                continue
            recs = [record[(m, cycle)] for m in stab.members]
            if prev is not None:
                recs += [record[(m, prev)] for m in stab.members]
            elif basis != mem:
                continue
            k = stab.key
            w.detector((k[0], k[1], t), recs)


def _final_detectors(w, schedule, record, final, groups, mem, code) -> None:
    t = schedule.cycles
    last = schedule.cycles - 1
    live = code.status.live_neighbors
    for s in code.regular:
        if s.basis != mem:
            continue
        m = s.members[0]
        w.detector((m[0], m[1], t), [final[d] for d in live(m)] + [record[(m, last)]])
    for gid in sorted(groups):
        g = groups[gid]
        if schedule.group_basis(gid, last) == mem:
            for m in g.gauges(mem):
                w.detector((m[0], m[1], t), [final[d] for d in live(m)] + [record[(m, last)]])
            continue
        opposite = g.gauges(other_basis(mem))
        prev = _last_block_cycle(schedule, gid, mem, schedule.cycles)
        for stab in g.of_basis(mem):
            if not _commutes_with_gauges(stab, opposite, code):
                continue
            recs = [final[d] for d in stab.support]
            if prev is not None:
                recs += [record[(m, prev)] for m in stab.members]
            k = stab.key
            w.detector((k[0], k[1], t), recs)


def strip_noise(text: str) -> str:
    """Circuit text with every noise instruction removed."""
    noise = ("X_ERROR", "DEPOLARIZE1", "DEPOLARIZE2")
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith(noise))


# ---------------------------------------------------------------------------
# sweeps


def device_hash(lattice: Lattice, defects: DefectMap) -> str:
    return hashlib.sha256(serialize_device(lattice, defects).encode()).hexdigest()


def global_grid(L: int) -> list[ShellStrategy]:
    return [ShellStrategy.global_(n) for n in range(1, (L - 1) // 2 + 1)]


def sweep_circuits(
    code: PatchedCode,
    defects: DefectMap,
    strategies: list[ShellStrategy],
    ps: list[float],
    out_dir: str | Path,
    logicals: dict[str, LogicalOperator],
    states: tuple[str, ...] = (ZERO, PLUS),
    cycles: int | None = None,
) -> dict:
    """Write one circuit per (strategy, p, state) and a JSON manifest.

    ``logicals`` maps each memory basis to its observable operator.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dev = device_hash(code.lattice, defects)
    entries = []
    for strategy in strategies:
        for p in ps:
            for state in states:
                sched = build_schedule(code, strategy, state, cycles)
                circ = emit_circuit(sched, NoiseParams(p), logicals[MEMORY_BASIS[state]])
                name = f"{strategy.kind.lower()}_{strategy.param}_p{p:g}_{state}.stim"
                (out / name).write_text(circ.text)
                entries.append(
                    {
                        "file": name,
                        "device_sha256": dev,
                        "strategy": strategy.kind,
                        "param": strategy.param,
                        "p": p,
                        "state": state,
                        "cycles": sched.cycles,
                        "detectors": circ.n_detectors,
                    }
                )
    manifest = {"device_sha256": dev, "size": code.lattice.size, "circuits": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest
