from __future__ import annotations

import json
import re
from fractions import Fraction

import numpy as np
import pytest

from surfadapt.adapter import AdaptationExhausted
from surfadapt.circuit import (
    GLOBAL,
    LOCALAVG,
    LOCALMAX,
    PLUS,
    ZERO,
    CircuitError,
    NoiseParams,
    ShellStrategy,
    build_schedule,
    emit_circuit,
    global_grid,
    shell_sizes,
    strip_noise,
    sweep_circuits,
)
from surfadapt.corpus import worked_device
from surfadapt.lattice import X, Z, build_lattice, device_from_coords, inject_defects
from surfadapt.logical import NoLogicalPath, place_logicals
from surfadapt.verify import check_determinism, parse_circuit, sample_frames

from conftest import adapted, random_device


def _clean(L):
    lat = build_lattice(L)
    return adapted(lat, inject_defects(lat, 0, 0, 0))


def _circuit(code, strategy="GLOBAL:1", state=ZERO, p=0.0, cycles=None):
    x_op, z_op = place_logicals(code)
    op = z_op if state == ZERO else x_op
    sched = build_schedule(code, ShellStrategy.parse(strategy), state, cycles)
    return emit_circuit(sched, NoiseParams(p), op)


# ---------------------------------------------------------------------------
# shells and schedules


def test_strategy_parsing():
    assert ShellStrategy.parse("GLOBAL:3") == ShellStrategy(GLOBAL, n_shell=3)
    s = ShellStrategy.parse("localavg:0.5")
    assert s.kind == LOCALAVG and s.r == Fraction(1, 2)
    assert str(ShellStrategy.parse("LOCALMAX:1")) == "LOCALMAX:1"
    with pytest.raises(ValueError):
        ShellStrategy.parse("RANDOM:2")


def test_strategy_bounds():
    ShellStrategy.global_(3).validate(7)
    with pytest.raises(ValueError):
        ShellStrategy.global_(4).validate(7)
    with pytest.raises(ValueError):
        ShellStrategy.local(LOCALAVG, 0).validate(7)


def test_global_shells_are_uniform():
    code = adapted(*worked_device("diagonal-abc"))
    sizes = shell_sizes(code.groups, ShellStrategy.global_(3), 7)
    assert set(sizes.values()) == {3}


def test_local_average_shell_arithmetic():
    code = adapted(*device_from_coords(7, [(5, 5)]))
    (grp,) = code.groups
    assert sorted(s.weight for s in grp.stabilizers if s.is_super) == [6, 6]
    assert shell_sizes(code.groups, ShellStrategy.local(LOCALAVG, 0.5), 7) == {grp.gid: 3}
    assert shell_sizes(code.groups, ShellStrategy.local(LOCALMAX, 1), 7) == {grp.gid: 6}
    # never below one cycle
    assert shell_sizes(code.groups, ShellStrategy.local(LOCALAVG, "1/100"), 7) == {grp.gid: 1}


def test_block_pattern():
    code = adapted(*device_from_coords(7, [(5, 5)]))
    sched = build_schedule(code, ShellStrategy.global_(2), ZERO, cycles=6)
    assert sched.pattern(0) == "XXZZXX"
    sched = build_schedule(code, ShellStrategy.global_(2), PLUS, cycles=6)
    assert sched.pattern(0) == "ZZXXZZ"


def test_regular_checks_measured_every_cycle():
    code = adapted(*worked_device("diagonal-abc"))
    sched = build_schedule(code, ShellStrategy.global_(2), ZERO, cycles=5)
    regular = {s.members[0] for s in code.regular}
    for c in range(5):
        assert regular <= set(sched.measured(c))


def test_no_defects_no_groups():
    code = _clean(5)
    sched = build_schedule(code, ShellStrategy.global_(1), ZERO)
    assert sched.shells == {}
    assert len(sched.measured(0)) == 24


# ---------------------------------------------------------------------------
# emission


@pytest.mark.parametrize("cycles", [1, 2, 3, 5])
def test_clean_distance_three_detector_count(cycles):
    circ = _circuit(_clean(3), cycles=cycles)
    # first round: 4 Z checks; later rounds: all 8; final: 4 Z checks against data
    assert circ.n_detectors == 4 + 8 * (cycles - 1) + 4
    rep = check_determinism(circ.text)
    assert rep.ok


def test_noise_only_adds_noise_lines():
    code = adapted(*worked_device("diagonal-abc"))
    clean = _circuit(code, "GLOBAL:2", p=0.0).text
    noisy = _circuit(code, "GLOBAL:2", p=0.002).text
    assert strip_noise(noisy) == clean
    assert strip_noise(clean) == clean
    assert "DEPOLARIZE2(0.002)" in noisy
    assert "X_ERROR(0.01)" in noisy  # 5p before measurement


def test_si1000_rates():
    n = NoiseParams(0.001)
    assert (n.cz, n.clifford1, n.idle, n.reset, n.measure, n.resonator_idle) == pytest.approx(
        (0.001, 0.0001, 0.0001, 0.002, 0.005, 0.002)
    )
    with pytest.raises(ValueError):
        NoiseParams(0.7)


def test_every_gate_is_followed_by_its_noise():
    text = _circuit(_clean(3), p=0.003).text.splitlines()
    for i, line in enumerate(text):
        if line.startswith("CZ "):
            assert text[i + 1] == "DEPOLARIZE2(0.003) " + line[3:]
        if line.startswith("M "):
            assert text[i - 1] == "X_ERROR(0.015) " + line[2:]


def test_qubit_ids_are_row_major():
    circ = _circuit(adapted(*worked_device("diagonal-ab")))
    coords = sorted(circ.qubit_ids, key=circ.qubit_ids.get)
    assert coords == sorted(coords, key=lambda c: (c[1], c[0]))
    assert len(coords) == circ.n_qubits


@pytest.mark.parametrize("name", ["diagonal-a", "diagonal-ab", "diagonal-abc", "weight-one", "avalanche"])
@pytest.mark.parametrize("strategy", ["GLOBAL:1", "GLOBAL:2", "GLOBAL:3", "LOCALAVG:0.5", "LOCALMAX:1"])
@pytest.mark.parametrize("state", [ZERO, PLUS])
def test_worked_examples_are_deterministic(name, strategy, state):
    for method in ("bandage", "traditional"):
        code = adapted(*worked_device(name), method)
        circ = _circuit(code, strategy, state, p=0.002)
        rep = check_determinism(circ.text)
        assert rep.ok, (method, rep.nondeterministic[:5], rep.observables_ok)


def test_random_devices_are_deterministic():
    checked = 0
    for seed in range(12):
        lat, dm = random_device(9, 0.02, seed)
        try:
            code = adapted(lat, dm)
            circ = _circuit(code, "GLOBAL:2", ZERO if seed % 2 else PLUS)
        except (AdaptationExhausted, NoLogicalPath):
            continue
        assert check_determinism(circ.text).ok
        checked += 1
    assert checked >= 8


def test_wrong_logical_basis_is_rejected():
    code = _clean(3)
    x_op, _ = place_logicals(code)
    sched = build_schedule(code, ShellStrategy.global_(1), ZERO)
    with pytest.raises(CircuitError):
        emit_circuit(sched, NoiseParams(0), x_op)


def _inject_after_first_round(text, qubit):
    lines = text.splitlines()
    first_m = next(i for i, l in enumerate(lines) if l.startswith("M "))
    tick = next(i for i in range(first_m, len(lines)) if lines[i] == "TICK")
    lines.insert(tick + 1, f"X_ERROR(1) {qubit}")
    return "\n".join(lines) + "\n"


def test_single_data_flip_lights_adjacent_checks():
    # a deterministic X flip on one data qubit between rounds 0 and 1 must
    # light exactly the round-1 detectors of its neighbouring Z checks
    code = _clean(3)
    circ = _circuit(code, cycles=3)
    target = (3, 3)
    text = _inject_after_first_round(circ.text, circ.qubit_ids[target])
    parsed = parse_circuit(text)
    tables = sample_frames(parsed, shots=4, seed=0, check=False)
    coords = [tuple(int(v) for v in m.group(1).split(", ")) for m in re.finditer(r"DETECTOR\(([^)]*)\)", text)]
    lit = {coords[i] for i in np.flatnonzero(tables.detectors[0])}
    z_checks = {s for s in code.lattice.neighbors[target] if code.lattice.syndromes[s] == Z}
    assert lit == {(s[0], s[1], 1) for s in z_checks}
    # the flip crosses the Z logical when (3,3) is on it
    x_op, z_op = place_logicals(code)
    assert tables.observables[0, 0] == int(target in z_op.support)
    assert (tables.detectors == tables.detectors[0]).all()


# ---------------------------------------------------------------------------
# sweeps


def test_global_sweep_size(tmp_path):
    code = _clean(21)
    grid = global_grid(21)
    assert [s.n_shell for s in grid] == list(range(1, 11))
    x_op, z_op = place_logicals(code)
    lat = code.lattice
    manifest = sweep_circuits(
        code, inject_defects(lat, 0, 0, 0), grid, [0.001], tmp_path, {X: x_op, Z: z_op}, states=(ZERO,), cycles=2
    )
    assert len(manifest["circuits"]) == 10
    assert json.loads((tmp_path / "manifest.json").read_text()) == manifest


def test_local_sweep_and_empty_grid(tmp_path):
    lat, dm = worked_device("diagonal-ab")
    code = adapted(lat, dm)
    x_op, z_op = place_logicals(code)
    logicals = {X: x_op, Z: z_op}
    grid = [ShellStrategy.local(LOCALAVG, r) for r in ("0.25", "0.5", "0.75", "1.0")]
    manifest = sweep_circuits(code, dm, grid, [0.002], tmp_path / "a", logicals)
    per_state = {}
    for e in manifest["circuits"]:
        per_state[e["state"]] = per_state.get(e["state"], 0) + 1
        assert (tmp_path / "a" / e["file"]).exists()
    assert per_state == {ZERO: 4, PLUS: 4}
    empty = sweep_circuits(code, dm, [], [0.002], tmp_path / "b", logicals)
    assert empty["circuits"] == []


def test_emission_is_deterministic():
    code = adapted(*worked_device("avalanche"), "traditional")
    assert _circuit(code, "LOCALAVG:0.5", PLUS, p=0.001).text == _circuit(code, "LOCALAVG:0.5", PLUS, p=0.001).text
