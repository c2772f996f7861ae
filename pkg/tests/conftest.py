"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import itertools

import networkx as nx
import numpy as np
import pytest

from surfadapt.adapter import adapt_bandage
from surfadapt.baseline import adapt_traditional
from surfadapt.lattice import build_lattice, inject_defects
from surfadapt.patch import patch
from surfadapt.verify import Tableau

METHODS = {"bandage": adapt_bandage, "traditional": adapt_traditional}


def adapted(lattice, defects, method="bandage"):
    status = METHODS[method](lattice, defects)
    return patch(lattice, status)


def random_device(L, rate, seed, coupler_rate=None):
    lat = build_lattice(L)
    return lat, inject_defects(lat, rate, rate if coupler_rate is None else coupler_rate, seed)


# ---------------------------------------------------------------------------
# GF(2) helpers


def _bits(support, index):
    v = 0
    for q in support:
        v |= 1 << index[q]
    return v


def gf2_basis(vectors):
    basis = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return basis


def gf2_reduce(v, basis):
    for b in basis:
        v = min(v, v ^ b)
    return v


def brute_force_logicals(code, basis, max_weight=None):
    """Minimum weight and number of distinct dressed logical operators.

    Enumerates every ``basis``-type Pauli on the live data qubits in order of
    weight and keeps those commuting with all opposite-basis stabilizers that
    are not products of same-basis stabilizers and gauges.  Returns
    ``(weight, count)`` or ``None`` when no logical exists up to
    ``max_weight``.  Independent of the path search under test.
    """
    status = code.status
    data = status.live_data
    index = {d: i for i, d in enumerate(data)}
    opp = [_bits(s.support, index) for s in code.stabilizers if s.basis != basis]
    gens = [_bits(s.support, index) for s in code.stabilizers if s.basis == basis]
    gens += [_bits(status.live_neighbors(g), index) for s in code.stabilizers if s.basis == basis for g in s.members]
    span = gf2_basis(gens)
    top = len(data) if max_weight is None else min(max_weight, len(data))
    for w in range(1, top + 1):
        count = 0
        for comb in itertools.combinations(range(len(data)), w):
            v = 0
            for i in comb:
                v |= 1 << i
            if all(bin(v & o).count("1") % 2 == 0 for o in opp) and gf2_reduce(v, span):
                count += 1
        if count:
            return w, count
    return None


# ---------------------------------------------------------------------------
# state-vector oracle for small Clifford + measurement circuits


class StateVector:
    """Dense simulator; qubit ``q`` is bit ``q`` of the basis index."""

    def __init__(self, n, rng):
        self.n = n
        self.psi = np.zeros(2**n, dtype=complex)
        self.psi[0] = 1.0
        self.rng = rng
        self.idx = np.arange(2**n)

    def _bit(self, q):
        return (self.idx >> q) & 1

    def h(self, q):
        b = self._bit(q).astype(bool)
        lo, hi = self.psi[~b], self.psi[b]
        new = np.empty_like(self.psi)
        new[~b] = (lo + hi) / np.sqrt(2)
        new[b] = (lo - hi) / np.sqrt(2)
        self.psi = new

    def s(self, q):
        self.psi = np.where(self._bit(q) == 1, 1j * self.psi, self.psi)

    def cz(self, a, b):
        self.psi = np.where((self._bit(a) & self._bit(b)) == 1, -self.psi, self.psi)

    def prob_one(self, q):
        return float(np.sum(np.abs(self.psi[self._bit(q) == 1]) ** 2))

    def measure(self, q, forced=None):
        p1 = self.prob_one(q)
        if forced is None:
            out = int(self.rng.random() < p1)
        else:
            out = forced
        keep = self._bit(q) == out
        self.psi = np.where(keep, self.psi, 0)
        self.psi /= np.linalg.norm(self.psi)
        return out, p1

    def reset(self, q):
        out, _ = self.measure(q)
        if out:
            flip = self.idx ^ (1 << q)
            self.psi = self.psi[flip]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------------------
# structural oracles


def stabilizer_oracle(lat, status, basis):
    """Components of same-basis syndromes and internally disabled data, via networkx."""
    g = nx.Graph()
    nodes = set(lat.syndromes_of(basis)) | set(status.internally_disabled)
    g.add_nodes_from(nodes)
    for d, s in lat.edges:
        if d in nodes and s in nodes:
            g.add_edge(d, s)
    out = set()
    for comp in nx.connected_components(g):
        members = frozenset(c for c in comp if c in lat.syndromes and not status.is_disabled(c))
        if members:
            out.add(members)
    return out


def group_oracle(code):
    """Stabilizers linked by shared defect region or anticommuting gauges."""
    status = code.status
    g = nx.Graph()
    stabs = code.stabilizers
    grouped = [s for s in stabs if s.is_super or s.region]
    for s in grouped:
        g.add_node(s.key)
    for a in stabs:
        for b in stabs:
            if a.key >= b.key:
                continue
            if a.region & b.region:
                g.add_edge(a.key, b.key)
            if a.basis != b.basis:
                for ga in a.members:
                    for gb in b.members:
                        if len(set(status.live_neighbors(ga)) & set(status.live_neighbors(gb))) % 2:
                            g.add_edge(a.key, b.key)
    return {frozenset(c) for c in nx.connected_components(g)}


# ---------------------------------------------------------------------------
# random Clifford circuits against the state vector


def random_clifford_circuit(rng, n, length):
    ops = []
    for _ in range(length):
        kind = rng.choice(["H", "S", "CZ", "M", "R"], p=[0.3, 0.2, 0.25, 0.15, 0.1])
        if kind == "CZ" and n >= 2:
            a, b = rng.choice(n, size=2, replace=False)
            ops.append(("CZ", int(a), int(b)))
        elif kind != "CZ":
            ops.append((kind, int(rng.integers(n))))
    return ops


def as_text(ops):
    return "\n".join(" ".join(map(str, op)) for op in ops) + "\n"


def compare_with_state_vector(ops, n, rng):
    """Step the tableau and a state vector together.

    Random tableau outcomes are forced onto the state vector; the state
    vector must then agree on which measurements are random (p = 1/2) and on
    the value of every deterministic one.  Returns the random outcomes.
    """
    tab = Tableau(n, track_signs=True, rng=rng)
    sv = StateVector(n, rng)
    random_values = []
    for op in ops:
        name = op[0]
        if name == "H":
            tab.h(op[1])
            sv.h(op[1])
        elif name == "S":
            tab.s(op[1])
            sv.s(op[1])
        elif name == "CZ":
            tab.cz(op[1], op[2])
            sv.cz(op[1], op[2])
        elif name in ("M", "R"):
            before = tab.n_vars
            value, _ = tab.measure(op[1])
            fresh = tab.n_vars > before
            p1 = sv.prob_one(op[1])
            if fresh:
                assert p1 == pytest.approx(0.5, abs=1e-9)
                random_values.append(value)
            else:
                assert p1 == pytest.approx(float(value), abs=1e-9)
            sv.measure(op[1], forced=value)
            if name == "R" and value:
                tab.x(op[1])
                sv.h(op[1]); sv.s(op[1]); sv.s(op[1]); sv.h(op[1])  # X = H Z H
            if name == "R":
                tab.fx[op[1]] = tab.fz[op[1]] = 0
    return random_values


# ---------------------------------------------------------------------------
# acceptance summary

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(criterion: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
