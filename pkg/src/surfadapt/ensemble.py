"""Monte-Carlo statistics over random defect ensembles.

Device ``k`` of an ensemble draws its defects with seed ``base_seed + k``, so
both adaptation methods see the same devices and any single device can be
regenerated on its own.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .adapter import BANDAGE, TRADITIONAL, AdaptationExhausted, adapt_bandage
from .baseline import adapt_traditional
from .lattice import build_lattice, inject_defects
from .logical import NoLogicalPath, code_distances
from .patch import patch

log = logging.getLogger(__name__)

BOTH = "both"
METHODS = {BANDAGE: adapt_bandage, TRADITIONAL: adapt_traditional}

DISABLED_DENOMINATOR = "all qubits (2L^2-1, data + syndrome)"


@dataclass(frozen=True)
class EnsembleSpec:
    L: int
    qubit_rate: float
    coupler_rate: float
    n_devices: int = 100
    base_seed: int = 0
    method: str = BOTH

    def __post_init__(self):
        if self.n_devices < 1:
            raise ValueError(f"n_devices must be at least 1, got {self.n_devices}")
        if self.method not in (BANDAGE, TRADITIONAL, BOTH):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def methods(self) -> tuple[str, ...]:
        return (BANDAGE, TRADITIONAL) if self.method == BOTH else (self.method,)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class DeviceResult:
    method: str
    device: int
    seed: int
    n_defects: int
    ok: bool
    failure: str = ""
    d_x: int | None = None
    d_z: int | None = None
    disabled: int = 0
    disabled_data: int = 0
    n_super: int = 0
    super_weight_sum: int = 0

    @property
    def avg_super_weight(self) -> float | None:
        return self.super_weight_sum / self.n_super if self.n_super else None


@dataclass
class EnsembleStats:
    spec: EnsembleSpec
    method: str
    rows: list[DeviceResult]
    n_qubits: int
    avg_dX: float | None = None
    avg_dZ: float | None = None
    disabled_pct: float | None = None
    w_avg_weighted: float | None = None
    failures: int = 0

    @property
    def n_ok(self) -> int:
        return len(self.rows) - self.failures


def evaluate_device(L: int, qubit_rate: float, coupler_rate: float, seed: int, method: str, device: int = 0):
    lat = build_lattice(L)
    defects = inject_defects(lat, qubit_rate, coupler_rate, seed)
    base = dict(method=method, device=device, seed=seed, n_defects=defects.n_defects)
    try:
        status = METHODS[method](lat, defects)
        code = patch(lat, status)
        d_x, d_z = code_distances(lat, status, code.stabilizers)
    except (NoLogicalPath, AdaptationExhausted) as exc:
        return DeviceResult(ok=False, failure=type(exc).__name__, **base)
    weights = code.super_weights()
    return DeviceResult(
        ok=True,
        d_x=d_x,
        d_z=d_z,
        disabled=len(status.disabled),
        disabled_data=len(status.disabled_data()),
        n_super=len(weights),
        super_weight_sum=sum(weights),
        **base,
    )


def _job(args):
    return evaluate_device(*args)


def _aggregate(spec: EnsembleSpec, method: str, rows: list[DeviceResult]) -> EnsembleStats:
    n_qubits = 2 * spec.L * spec.L - 1
    ok = [r for r in rows if r.ok]
    stats = EnsembleStats(spec, method, rows, n_qubits, failures=len(rows) - len(ok))
    if ok:
        stats.avg_dX = sum(r.d_x for r in ok) / len(ok)
        stats.avg_dZ = sum(r.d_z for r in ok) / len(ok)
        stats.disabled_pct = 100.0 * sum(r.disabled for r in ok) / (len(ok) * n_qubits)
        n_super = sum(r.n_super for r in ok)
        stats.w_avg_weighted = sum(r.super_weight_sum for r in ok) / n_super if n_super else None
    return stats


def run_ensemble(spec: EnsembleSpec, workers: int = 1) -> dict[str, EnsembleStats]:
    """Run every method of ``spec`` over the same devices.

    Means are taken over successful devices only; failed ones are counted.
    """
    jobs = [
        (spec.L, spec.qubit_rate, spec.coupler_rate, spec.base_seed + k, method, k)
        for method in spec.methods
        for k in range(spec.n_devices)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=8))
    else:
        results = [_job(j) for j in jobs]
    out = {}
    for method in spec.methods:
        rows = [r for r in results if r.method == method]
        out[method] = _aggregate(spec, method, rows)
        if out[method].failures:
            log.warning("%s: %d of %d devices failed", method, out[method].failures, len(rows))
    return out


@dataclass
class Comparison:
    deltas: list[dict]
    mean_distance_gain_pct: float | None
    dominance: dict[str, int] = field(default_factory=dict)
    stats: dict[str, EnsembleStats] = field(default_factory=dict)

    @property
    def dominated_everywhere(self) -> bool:
        return self.dominance.get("violations", 0) == 0


def compare_methods(spec: EnsembleSpec, workers: int = 1) -> Comparison:
    """Paired bandage-minus-traditional deltas on identical devices."""
    if spec.method != BOTH:
        raise ValueError("compare_methods needs method='both'")
    stats = run_ensemble(spec, workers)
    band = stats[BANDAGE].rows
    trad = stats[TRADITIONAL].rows
    deltas = []
    dom = {"paired": 0, "distance_ge": 0, "disabled_le": 0, "violations": 0}
    sums = [0, 0]
    for b, t in zip(band, trad):
        if not (b.ok and t.ok):
            continue
        dom["paired"] += 1
        row = {
            "device": b.device,
            "seed": b.seed,
            "d_x": b.d_x - t.d_x,
            "d_z": b.d_z - t.d_z,
            "disabled": b.disabled - t.disabled,
            "avg_super_weight": (
                b.avg_super_weight - t.avg_super_weight
                if b.avg_super_weight is not None and t.avg_super_weight is not None
                else None
            ),
        }
        deltas.append(row)
        dist_ok = b.d_x >= t.d_x and b.d_z >= t.d_z
        dis_ok = b.disabled <= t.disabled
        dom["distance_ge"] += dist_ok
        dom["disabled_le"] += dis_ok
        dom["violations"] += not (dist_ok and dis_ok)
        sums[0] += b.d_x + b.d_z
        sums[1] += t.d_x + t.d_z
    # a traditional failure on a device where bandage succeeds still counts as dominance
    dom["traditional_only_failures"] = sum(1 for b, t in zip(band, trad) if b.ok and not t.ok)
    dom["bandage_only_failures"] = sum(1 for b, t in zip(band, trad) if t.ok and not b.ok)
    dom["violations"] += dom["bandage_only_failures"]
    # relative gain of the mean distance over paired devices
    gain = 100.0 * (sums[0] - sums[1]) / sums[1] if sums[1] else None
    return Comparison(deltas, gain, dom, stats)


# ---------------------------------------------------------------------------
# CSV output

DEVICE_COLUMNS = [
    "method",
    "device",
    "seed",
    "n_defects",
    "ok",
    "failure",
    "d_x",
    "d_z",
    "disabled",
    "disabled_data",
    "disabled_pct",
    "n_super",
    "super_weight_sum",
]

SUMMARY_COLUMNS = [
    "method",
    "L",
    "qubit_rate",
    "coupler_rate",
    "n_devices",
    "n_ok",
    "failures",
    "avg_dX",
    "avg_dZ",
    "disabled_pct",
    "w_avg_weighted",
]


def _header(spec: EnsembleSpec) -> str:
    meta = {
        "spec": asdict(spec),
        "spec_hash": spec.digest(),
        "disabled_pct_denominator": DISABLED_DENOMINATOR,
        "means_over": "successful devices only; failures counted separately",
    }
    return "".join(f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in meta.items())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def devices_csv(stats: dict[str, EnsembleStats]) -> str:
    spec = next(iter(stats.values())).spec
    buf = io.StringIO()
    buf.write(_header(spec))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DEVICE_COLUMNS)
    for method, st in stats.items():
        for r in st.rows:
            row = asdict(r)
            row["disabled_pct"] = 100.0 * r.disabled / st.n_qubits if r.ok else None
            w.writerow([_fmt(row[c]) for c in DEVICE_COLUMNS])
    return buf.getvalue()


def summary_csv(stats: dict[str, EnsembleStats]) -> str:
    spec = next(iter(stats.values())).spec
    buf = io.StringIO()
    buf.write(_header(spec))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for method, st in stats.items():
        w.writerow(
            [
                _fmt(v)
                for v in (
                    method,
                    spec.L,
                    spec.qubit_rate,
                    spec.coupler_rate,
                    spec.n_devices,
                    st.n_ok,
                    st.failures,
                    st.avg_dX,
                    st.avg_dZ,
                    st.disabled_pct,
                    st.w_avg_weighted,
                )
            ]
        )
    return buf.getvalue()
