"""Small named devices used as worked examples and regression fixtures.

Each entry lists defective qubits and couplers on an L=7 lattice.  The
positions were found by exhaustive or random search for placements whose
adapted codes show the documented behaviour; the expected numbers live in the
test suite.
"""

from __future__ import annotations

from .lattice import DefectMap, Lattice, device_from_coords

WORKED = {
    # one interior data defect: both methods agree
    "diagonal-a": {"size": 7, "qubits": [(5, 5)], "couplers": []},
    # two diagonal neighbours: a bridge syndrome sits between them
    "diagonal-ab": {"size": 7, "qubits": [(5, 5), (7, 7)], "couplers": []},
    # three in a row on the diagonal: two bridges
    "diagonal-abc": {"size": 7, "qubits": [(5, 5), (7, 7), (9, 9)], "couplers": []},
    # three data defects around Z syndrome (6, 6), leaving it with weight 1
    "weight-one": {"size": 7, "qubits": [(5, 5), (5, 7), (7, 5)], "couplers": []},
    # bridge -> bridge -> two weight-1 syndromes under iterative removal
    "avalanche": {"size": 7, "qubits": [(5, 5), (7, 9), (9, 7)], "couplers": []},
}


def worked_device(name: str) -> tuple[Lattice, DefectMap]:
    try:
        entry = WORKED[name]
    except KeyError:
        raise KeyError(f"unknown worked example {name!r}; choose from {sorted(WORKED)}") from None
    return device_from_coords(entry["size"], entry["qubits"], entry["couplers"])
