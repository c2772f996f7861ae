"""Stabilizer-circuit execution: determinism checks and Pauli-frame sampling.

The tableau is stored column-major: for each qubit there is one Python-int
bitset over the 2n generator rows for its X part and one for its Z part, so
H and CZ cost a handful of big-int operations.  Rows ``0..n-1`` are
destabilizers and ``n..2n-1`` stabilizers.

Measurement outcomes are tracked symbolically.  Each random outcome (and
each random reset collapse) introduces a fresh variable.  Flipping that
variable is the same as applying the stabilizer row that anticommuted with
the measured observable, so the dependence of every later record on it is
obtained by propagating that Pauli as a frame whose bit ``k`` belongs to
variable ``k``.  A detector is deterministic exactly when the XOR of its
records' masks is zero.  Sign tracking is only needed for concrete outcome
values and is optional.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NOISE = ("X_ERROR", "DEPOLARIZE1", "DEPOLARIZE2")
GATES = ("H", "S", "CZ", "R", "M")
ANNOTATIONS = ("QUBIT_COORDS", "TICK", "DETECTOR", "OBSERVABLE_INCLUDE")
KNOWN = frozenset(NOISE + GATES + ANNOTATIONS)

_LINE = re.compile(r"^([A-Z_0-9]+)(?:\(([^)]*)\))?\s*(.*)$")


class CircuitParseError(ValueError):
    pass


class NondeterministicCircuit(RuntimeError):
    pass


@dataclass(frozen=True)
class Instruction:
    name: str
    args: tuple[float, ...]
    targets: tuple[int, ...]  # qubits, or absolute measurement indices for annotations
    line: int


@dataclass
class ParsedCircuit:
    instructions: list[Instruction]
    n_qubits: int
    n_measurements: int
    detectors: list[tuple[int, ...]] = field(default_factory=list)
    observables: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def without_noise(self) -> ParsedCircuit:
        return ParsedCircuit(
            [i for i in self.instructions if i.name not in NOISE],
            self.n_qubits,
            self.n_measurements,
            self.detectors,
            self.observables,
        )


def parse_circuit(text: str) -> ParsedCircuit:
    """Parse the supported subset of the Stim text format.

    Detector and observable record targets are resolved to absolute
    measurement indices.
    """
    out: list[Instruction] = []
    n_meas = 0
    n_qubits = 0
    detectors: list[tuple[int, ...]] = []
    observables: dict[int, list[int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise CircuitParseError(f"line {lineno}: cannot parse {raw!r}")
        name, args_text, rest = m.groups()
        if name not in KNOWN:
            raise CircuitParseError(f"line {lineno}: unsupported instruction {name}")
        args = tuple(float(a) for a in args_text.split(",")) if args_text else ()
        tokens = rest.split()
        if name in ("DETECTOR", "OBSERVABLE_INCLUDE"):
            recs = []
            for tok in tokens:
                rm = re.fullmatch(r"rec\[(-\d+)\]", tok)
                if not rm:
                    raise CircuitParseError(f"line {lineno}: bad record target {tok!r}")
                k = n_meas + int(rm.group(1))
                if k < 0:
                    raise CircuitParseError(f"line {lineno}: {tok} points before the first measurement")
                recs.append(k)
            if name == "DETECTOR":
                detectors.append(tuple(recs))
            else:
                observables.setdefault(int(args[0]) if args else 0, []).extend(recs)
            out.append(Instruction(name, args, tuple(recs), lineno))
            continue
        try:
            targets = tuple(int(t) for t in tokens)
        except ValueError:
            raise CircuitParseError(f"line {lineno}: non-integer target in {raw!r}") from None
        if name == "CZ" or name == "DEPOLARIZE2":
            if len(targets) % 2:
                raise CircuitParseError(f"line {lineno}: {name} needs an even number of targets")
        if name in NOISE and (len(args) != 1 or not 0 <= args[0] <= 1):
            raise CircuitParseError(f"line {lineno}: {name} needs one probability argument")
        if targets and name != "QUBIT_COORDS":
            n_qubits = max(n_qubits, max(targets) + 1)
        elif name == "QUBIT_COORDS" and targets:
            n_qubits = max(n_qubits, max(targets) + 1)
        if name == "M":
            n_meas += len(targets)
        out.append(Instruction(name, args, targets, lineno))
    return ParsedCircuit(out, n_qubits, n_meas, detectors, {k: tuple(v) for k, v in observables.items()})


# ---------------------------------------------------------------------------
# tableau


class Tableau:
    """Aaronson-Gottesman stabilizer tableau with symbolic outcome tracking.

    Parameters
    ----------
    n : int
        Number of qubits, all starting in |0>.
    track_signs : bool
        Keep generator signs so deterministic outcomes get concrete values.
        Costs O(n * k) per deterministic measurement, where k is the number of
        stabilizers combined; leave off for large circuits.
    rng : numpy.random.Generator, optional
        Source of random outcomes.  Without one every random outcome is 0.
    """

    def __init__(self, n: int, track_signs: bool = False, rng: np.random.Generator | None = None):
        self.n = n
        self.xs = [1 << q for q in range(n)]
        self.zs = [1 << (n + q) for q in range(n)]
        self.signs = 0
        self.track_signs = track_signs
        self.rng = rng
        self.stab_mask = ((1 << n) - 1) << n
        # symbolic frame: bit k of fx[q] / fz[q] belongs to random variable k
        self.fx = [0] * n
        self.fz = [0] * n
        self.n_vars = 0

    # -- gates -------------------------------------------------------------

    def h(self, q: int) -> None:
        x, z = self.xs[q], self.zs[q]
        self.signs ^= x & z
        self.xs[q], self.zs[q] = z, x
        self.fx[q], self.fz[q] = self.fz[q], self.fx[q]

    def s(self, q: int) -> None:
        x = self.xs[q]
        self.signs ^= x & self.zs[q]
        self.zs[q] ^= x
        self.fz[q] ^= self.fx[q]

    def x(self, q: int) -> None:
        self.signs ^= self.zs[q]

    def cz(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError(f"CZ on a single qubit {a}")
        xa, xb = self.xs[a], self.xs[b]
        self.signs ^= xa & xb & (self.zs[a] ^ self.zs[b])
        self.zs[a] ^= xb
        self.zs[b] ^= xa
        self.fz[a] ^= self.fx[b]
        self.fz[b] ^= self.fx[a]

    # -- row helpers ---------------------------------------------------------

    def _row(self, i: int) -> tuple[list[int], list[int]]:
        """Qubits where row ``i`` has an X part, and where it has a Z part."""
        px = [q for q in range(self.n) if self.xs[q] >> i & 1]
        pz = [q for q in range(self.n) if self.zs[q] >> i & 1]
        return px, pz

    def _rowsum_into(self, rows: int, p: int, px: list[int], pz: list[int]) -> None:
        """Multiply row ``p`` into every row whose bit is set in ``rows``."""
        if not rows:
            return
        if self.track_signs:
            lo = hi = 0
            for q in sorted(set(px) | set(pz)):
                hx, hz = self.xs[q] & rows, self.zs[q] & rows
                ax, az = q in px, q in pz
                if ax and not az:
                    plus, minus = hx & hz, hz & ~hx
                elif ax and az:
                    plus, minus = hz & ~hx, hx & ~hz
                else:
                    plus, minus = hx & ~hz, hx & hz
                # counter += plus; counter += 3 * minus (mod 4)
                carry = lo & plus
                lo ^= plus
                hi ^= carry
                carry = lo & minus
                lo ^= minus
                hi ^= carry ^ minus
            p_sign = rows if self.signs >> p & 1 else 0
            self.signs ^= (hi ^ p_sign) & rows
        for q in px:
            self.xs[q] ^= rows
        for q in pz:
            self.zs[q] ^= rows

    def _deterministic_sign(self, q: int) -> int:
        """Sign bit of +-Z_q as a product of stabilizers (needs sign tracking)."""
        n = self.n
        rows = self.xs[q] & ((1 << n) - 1)
        acc_x = acc_z = 0
        phase = 0  # power of i
        i = 0
        while rows:
            if rows & 1:
                r = n + i
                rx = sum(1 << j for j in range(n) if self.xs[j] >> r & 1)
                rz = sum(1 << j for j in range(n) if self.zs[j] >> r & 1)
                phase += 2 * (self.signs >> r & 1) + _pauli_product_phase(rx, rz, acc_x, acc_z)
                acc_x ^= rx
                acc_z ^= rz
            rows >>= 1
            i += 1
        return (phase % 4) // 2

    # -- measurement -----------------------------------------------------------

    def measure(self, q: int) -> tuple[int | None, int]:
        """Measure Z_q.

        Returns ``(value, mask)``.  ``mask`` is the set of random variables
        the outcome depends on; ``value`` is the outcome for the sampled
        branch, or None for a deterministic outcome when signs are untracked.
        """
        n = self.n
        anti = self.xs[q] & self.stab_mask
        if not anti:
            value = self._deterministic_sign(q) if self.track_signs else None
            return value, self.fx[q]
        p = (anti & -anti).bit_length() - 1
        px, pz = self._row(p)
        others = self.xs[q] & ~(1 << p)
        self._rowsum_into(others, p, px, pz)
        # destabilizer p - n takes the old stabilizer p
        d = p - n
        bit_p, bit_d = 1 << p, 1 << d
        for j in range(n):
            for cols in (self.xs, self.zs):
                c = cols[j]
                cols[j] = (c & ~bit_d) | (bit_d if c & bit_p else 0)
                cols[j] &= ~bit_p
        self.signs = (self.signs & ~bit_d) | (bit_d if self.signs & bit_p else 0)
        self.zs[q] |= bit_p
        value = int(self.rng.integers(2)) if self.rng is not None else 0
        self.signs = (self.signs & ~bit_p) | (bit_p if value else 0)
        # symbolic bookkeeping: outcome depends on a fresh variable k, and
        # flipping k applies the old stabilizer row p (after the collapse)
        k = self.n_vars
        self.n_vars += 1
        var = 1 << k
        mask = self.fx[q] ^ var
        for j in px:
            self.fx[j] ^= var
        for j in pz:
            self.fz[j] ^= var
        return value, mask

    def reset(self, q: int) -> None:
        value, _ = self.measure(q)
        if value:
            self.x(q)
        self.fx[q] = 0
        self.fz[q] = 0

    # -- inspection ---------------------------------------------------------------

    def stabilizers(self) -> list[str]:
        """Signed Pauli strings of the current stabilizer generators."""
        out = []
        for i in range(self.n, 2 * self.n):
            chars = []
            for q in range(self.n):
                xb, zb = self.xs[q] >> i & 1, self.zs[q] >> i & 1
                chars.append("IXZY"[xb + 2 * zb])
            sign = "-" if self.signs >> i & 1 else "+"
            out.append(sign + "".join(chars))
        return out


def _pauli_product_phase(ax: int, az: int, bx: int, bz: int) -> int:
    """Power of i picked up by the product (a)(b) of two unsigned Paulis."""
    total = 0
    bits = ax | az | bx | bz
    while bits:
        low = bits & -bits
        x1, z1, x2, z2 = bool(ax & low), bool(az & low), bool(bx & low), bool(bz & low)
        if x1 and not z1:
            total += z2 * (2 * x2 - 1)
        elif x1 and z1:
            total += z2 - x2
        elif z1:
            total += x2 * (1 - 2 * z2)
        bits ^= low
    return total


# ---------------------------------------------------------------------------
# execution


@dataclass
class Execution:
    records: list[int]  # symbolic masks per measurement
    values: list[int | None]
    n_vars: int


def run_tableau(
    circuit: ParsedCircuit, track_signs: bool = False, rng: np.random.Generator | None = None
) -> Execution:
    tab = Tableau(circuit.n_qubits, track_signs=track_signs, rng=rng)
    records: list[int] = []
    values: list[int | None] = []
    for ins in circuit.instructions:
        name, t = ins.name, ins.targets
        if name == "H":
            for q in t:
                tab.h(q)
        elif name == "S":
            for q in t:
                tab.s(q)
        elif name == "CZ":
            for a, b in zip(t[::2], t[1::2]):
                tab.cz(a, b)
        elif name == "R":
            for q in t:
                tab.reset(q)
        elif name == "M":
            for q in t:
                v, mask = tab.measure(q)
                records.append(mask)
                values.append(v)
        elif name in NOISE or name in ANNOTATIONS:
            continue
        else:  # pragma: no cover - parse_circuit rejects these
            raise CircuitParseError(f"unsupported instruction {name}")
    return Execution(records, values, tab.n_vars)


@dataclass
class DeterminismReport:
    n_detectors: int
    nondeterministic: list[int]
    observables_ok: dict[int, bool]
    # expected parity per detector, when signs were tracked
    parities: list[int] | None = None

    @property
    def ok(self) -> bool:
        return not self.nondeterministic and all(self.observables_ok.values())

    @property
    def deterministic(self) -> int:
        return self.n_detectors - len(self.nondeterministic)


def _parity(records: list[int], idx: tuple[int, ...]) -> int:
    acc = 0
    for i in idx:
        acc ^= records[i]
    return acc


def check_determinism(circuit: ParsedCircuit | str, track_signs: bool = False) -> DeterminismReport:
    """Report which detectors and observables are fixed in the noiseless circuit."""
    if isinstance(circuit, str):
        circuit = parse_circuit(circuit)
    run = run_tableau(circuit.without_noise(), track_signs=track_signs)
    bad = [i for i, d in enumerate(circuit.detectors) if _parity(run.records, d)]
    obs = {k: _parity(run.records, v) == 0 for k, v in circuit.observables.items()}
    parities = None
    if track_signs:
        parities = [sum(run.values[i] for i in d) % 2 for d in circuit.detectors]
    return DeterminismReport(len(circuit.detectors), bad, obs, parities)


# ---------------------------------------------------------------------------
# Pauli-frame sampling

# Non-identity Paulis as (x, z) bits, in the order I, X, Y, Z.
_PAULI_BITS = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=bool)


@dataclass
class SampleTables:
    detectors: np.ndarray  # shape (shots, n_detectors), uint8
    observables: np.ndarray  # shape (shots, n_observables), uint8


def sample_frames(
    circuit: ParsedCircuit | str, shots: int, seed: int, batch: int = 8192, check: bool = True
) -> SampleTables:
    """Sample detector and observable flips under the circuit's Pauli noise.

    Results are flips relative to the noiseless reference, so a noiseless
    circuit gives all-zero tables.  The same seed always gives the same
    tables.
    """
    if isinstance(circuit, str):
        circuit = parse_circuit(circuit)
    if check:
        rep = check_determinism(circuit)
        if not rep.ok:
            raise NondeterministicCircuit(
                f"{len(rep.nondeterministic)} nondeterministic detector(s), first {rep.nondeterministic[:5]}"
            )
    rng = np.random.default_rng(seed)
    n_obs = max(circuit.observables, default=-1) + 1
    det_rows, obs_rows = [], []
    for start in range(0, shots, batch):
        k = min(batch, shots - start)
        meas = _frame_batch(circuit, k, rng)
        det = np.zeros((k, len(circuit.detectors)), dtype=np.uint8)
        for i, d in enumerate(circuit.detectors):
            if d:
                det[:, i] = np.bitwise_xor.reduce(meas[list(d)], axis=0)
        obs = np.zeros((k, n_obs), dtype=np.uint8)
        for j, recs in circuit.observables.items():
            if recs:
                obs[:, j] = np.bitwise_xor.reduce(meas[list(recs)], axis=0)
        det_rows.append(det)
        obs_rows.append(obs)
    if not det_rows:
        return SampleTables(
            np.zeros((0, len(circuit.detectors)), dtype=np.uint8), np.zeros((0, n_obs), dtype=np.uint8)
        )
    return SampleTables(np.concatenate(det_rows), np.concatenate(obs_rows))


def _frame_batch(circuit: ParsedCircuit, shots: int, rng: np.random.Generator) -> np.ndarray:
    n = circuit.n_qubits
    fx = np.zeros((n, shots), dtype=np.uint8)
    fz = np.zeros((n, shots), dtype=np.uint8)
    meas = np.zeros((circuit.n_measurements, shots), dtype=np.uint8)
    m = 0
    for ins in circuit.instructions:
        name, t = ins.name, list(ins.targets)
        if name == "H":
            fx[t], fz[t] = fz[t], fx[t].copy()
        elif name == "S":
            fz[t] ^= fx[t]
        elif name == "CZ":
            a, b = t[::2], t[1::2]
            xa, xb = fx[a].copy(), fx[b].copy()
            fz[a] ^= xb
            fz[b] ^= xa
        elif name == "R":
            fx[t] = 0
            fz[t] = 0
        elif name == "M":
            meas[m : m + len(t)] = fx[t]
            m += len(t)
        elif name == "X_ERROR":
            fx[t] ^= (rng.random((len(t), shots)) < ins.args[0]).astype(np.uint8)
        elif name == "DEPOLARIZE1":
            hit = rng.random((len(t), shots)) < ins.args[0]
            which = rng.integers(1, 4, size=(len(t), shots))
            which = np.where(hit, which, 0)
            fx[t] ^= _PAULI_BITS[which, 0].astype(np.uint8)
            fz[t] ^= _PAULI_BITS[which, 1].astype(np.uint8)
        elif name == "DEPOLARIZE2":
            a, b = t[::2], t[1::2]
            hit = rng.random((len(a), shots)) < ins.args[0]
            which = np.where(hit, rng.integers(1, 16, size=(len(a), shots)), 0)
            pa, pb = which // 4, which % 4
            fx[a] ^= _PAULI_BITS[pa, 0].astype(np.uint8)
            fz[a] ^= _PAULI_BITS[pa, 1].astype(np.uint8)
            fx[b] ^= _PAULI_BITS[pb, 0].astype(np.uint8)
            fz[b] ^= _PAULI_BITS[pb, 1].astype(np.uint8)
    return meas


def write_bit_table(table: np.ndarray, path: str | Path, fmt: str = "01") -> None:
    """Write one row per shot, either as ``0``/``1`` characters or packed ``b8`` bytes."""
    path = Path(path)
    if fmt == "01":
        rows = ["".join("1" if b else "0" for b in row) for row in table]
        path.write_text("".join(r + "\n" for r in rows))
    elif fmt == "b8":
        path.write_bytes(np.packbits(table.astype(np.uint8), axis=1, bitorder="little").tobytes())
    else:
        raise ValueError(f"unknown bit table format {fmt!r}")


def read_bit_table(path: str | Path, width: int, fmt: str = "01") -> np.ndarray:
    path = Path(path)
    if fmt == "01":
        lines = [ln for ln in path.read_text().splitlines() if ln]
        return np.array([[c == "1" for c in ln] for ln in lines], dtype=np.uint8).reshape(len(lines), width)
    if fmt == "b8":
        raw = np.frombuffer(path.read_bytes(), dtype=np.uint8)
        per_row = (width + 7) // 8
        bits = np.unpackbits(raw.reshape(-1, per_row), axis=1, bitorder="little")
        return bits[:, :width]
    raise ValueError(f"unknown bit table format {fmt!r}")
