"""Gate-equivalent area accounting for original and multi-voltage RO-PUFs.

Only the 0.5 GE per supply switch is a published figure. The remaining
constants are calibration values chosen so the worst-case switch overhead
(R=2, I=C=19, L=3) lands near 42 %; they are printed with every report.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Iterator

from .exceptions import InvariantViolation
from .topology import PufTopology

SWEEP_FIELDS = ("R", "I", "C", "L", "base_ge", "switch_ge", "overhead_pct", "max_bits", "bits_per_ge")


@dataclass(frozen=True)
class AreaConstants:
    ge_inverter: float = 0.75
    counter_bits: int = 8
    ge_counter_per_bit: float = 2.0
    ge_comparator_per_bit: float = 0.75
    ge_mux_per_input: float = 0.5
    ge_switch: float = 0.5
    buffer_inverters_per_ro: int = 2

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise InvariantViolation("area-constant-non-negative", f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class AreaReport:
    r_oscillators: int
    inverters_per_ro: int
    c_columns: int
    n_levels: int
    base_ge: float
    switch_ge: float
    total_ge: float
    overhead_percent: float
    max_output_bits: int
    bits_per_ge: float

    def to_dict(self) -> dict:
        return asdict(self)

    def row(self) -> tuple:
        return (self.r_oscillators, self.inverters_per_ro, self.c_columns, self.n_levels, self.base_ge,
                self.switch_ge, self.overhead_percent, self.max_output_bits, self.bits_per_ge)


def base_area(topology: PufTopology, constants: AreaConstants = AreaConstants(), has_muxes: bool = True) -> float:
    """Area of the plain RO-PUF: rings, output buffers, two counters, comparator, muxes.

    With only two oscillators there is nothing to select, so no muxes are counted.
    """
    R, I = topology.r_oscillators, topology.inverters_per_ro
    k = constants
    area = R * I * k.ge_inverter
    area += R * k.buffer_inverters_per_ro * k.ge_inverter
    area += 2 * k.counter_bits * k.ge_counter_per_bit
    area += k.counter_bits * k.ge_comparator_per_bit
    if has_muxes and R > 2:
        area += 2 * R * k.ge_mux_per_input
    return area


def switch_area(topology: PufTopology, constants: AreaConstants = AreaConstants()) -> float:
    """One PMOS switch per supply level per (global) column."""
    return topology.n_levels * topology.c_columns * constants.ge_switch


def switch_overhead(
    topology: PufTopology, constants: AreaConstants = AreaConstants(), has_muxes: bool = True
) -> tuple[float, float]:
    """``(switch_ge, overhead_percent)`` relative to the base area."""
    sw = switch_area(topology, constants)
    base = base_area(topology, constants, has_muxes)
    if base <= 0:
        return sw, 0.0 if sw == 0 else float("inf")
    return sw, 100.0 * sw / base


def bits_per_area(
    topology: PufTopology,
    constants: AreaConstants = AreaConstants(),
    has_muxes: bool = True,
    multi_voltage: bool = True,
) -> AreaReport:
    """Full area report. ``multi_voltage=False`` models the original RO-PUF (no switches, one bit per pair)."""
    base = base_area(topology, constants, has_muxes)
    if multi_voltage:
        sw, overhead = switch_overhead(topology, constants, has_muxes)
        bits = topology.n_pairs * topology.n_levels**topology.c_columns
    else:
        sw, overhead = 0.0, 0.0
        bits = topology.n_pairs
    total = base + sw
    return AreaReport(
        topology.r_oscillators,
        topology.inverters_per_ro,
        topology.c_columns if multi_voltage else 1,
        topology.n_levels if multi_voltage else 1,
        base,
        sw,
        total,
        overhead,
        bits,
        bits / total if total > 0 else float("inf"),
    )


def _topo(r: int, i: int, c: int, n_levels: int) -> PufTopology:
    return PufTopology.spread(r, i, c, n_levels)


def sweep_bit_counts(constants: AreaConstants = AreaConstants()) -> Iterator[tuple[str, AreaReport]]:
    """Bit-count comparison grids: series A-D.

    A/B vary R in 2..30 with 11 inverters; C/D fix R=20 and vary I=C over odd 3..19.
    Original RO-PUFs appear with C=L=1 in the report.
    """
    for r in range(2, 31):
        t = _topo(r, 11, 11, 3)
        yield "A", bits_per_area(t, constants, multi_voltage=False)
        yield "B", bits_per_area(t, constants)
    for i in range(3, 20, 2):
        t = _topo(20, i, i, 3)
        yield "C", bits_per_area(t, constants, multi_voltage=False)
        yield "D", bits_per_area(t, constants)


def sweep_density(constants: AreaConstants = AreaConstants(), n_levels: int = 3) -> Iterator[AreaReport]:
    """L=3, 2 <= R <= 30, I=C over odd 3..19."""
    for r in range(2, 31):
        for i in range(3, 20, 2):
            yield bits_per_area(_topo(r, i, i, n_levels), constants)


def sweep_overhead(constants: AreaConstants = AreaConstants(), n_levels: int = 3) -> Iterator[AreaReport]:
    """Switch-overhead grid; L=3 unless given."""
    return sweep_density(constants, n_levels)


def reports_to_csv(reports: Iterable[AreaReport], series: Iterable[str] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if series is None:
        w.writerow(SWEEP_FIELDS)
        for rep in reports:
            w.writerow(_fmt_row(rep.row()))
    else:
        w.writerow(("series",) + SWEEP_FIELDS)
        for s, rep in zip(series, reports):
            w.writerow((s,) + _fmt_row(rep.row()))
    return buf.getvalue()


def _fmt_row(row: tuple) -> tuple:
    return tuple(f"{v:.6g}" if isinstance(v, float) else v for v in row)


def reports_to_text(reports: Iterable[AreaReport], constants: AreaConstants = AreaConstants()) -> str:
    """Aligned-column table with the GE constants in a header comment."""
    rows = [tuple(str(v) for v in _fmt_row(r.row())) for r in reports]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(SWEEP_FIELDS)]
    lines = ["# GE constants: " + ", ".join(f"{k}={v}" for k, v in asdict(constants).items())]
    lines.append("  ".join(h.rjust(w) for h, w in zip(SWEEP_FIELDS, widths)))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows)
    return "\n".join(lines) + "\n"


def reports_to_json(reports: Iterable[AreaReport], constants: AreaConstants = AreaConstants()) -> str:
    return json.dumps({"constants": asdict(constants), "reports": [r.to_dict() for r in reports]}, indent=2)
