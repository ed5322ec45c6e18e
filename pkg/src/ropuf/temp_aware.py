"""Temperature-aware operation: pick, per RO pair, a voltage configuration whose
bit does not change anywhere in the operating temperature range, and store the
choices in a packed configuration memory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._parallel import ordered_map
from .device import ChipInstance, TechnologyParams
from .exceptions import InvariantViolation
from .puf import ro_delays
from .topology import PufTopology, VoltageConfiguration, enumerate_configs, format_pair, parse_pair

TEMP_MIN_C = -25.0
TEMP_MAX_C = 125.0
TEMP_STEP_C = 10.0


def temperature_grid(t_min: float = TEMP_MIN_C, t_max: float = TEMP_MAX_C, step: float = TEMP_STEP_C) -> tuple[float, ...]:
    """Inclusive grid from ``t_min`` to ``t_max``; ``t_max`` is appended if the step overshoots it."""
    if step <= 0 or t_max < t_min:
        raise InvariantViolation("temp-grid", f"bad temperature grid {t_min}..{t_max} step {step}")
    n = int(math.floor((t_max - t_min) / step + 1e-9))
    grid = [t_min + i * step for i in range(n + 1)]
    if not math.isclose(grid[-1], t_max):
        grid.append(t_max)
    return tuple(float(t) for t in grid)


DEFAULT_TEMPERATURES = temperature_grid()


@dataclass(frozen=True)
class StabilityProfile:
    """Noise-free bits of one pair for every configuration and sampled temperature.

    ``tied`` holds configurations where the two delays were exactly equal at
    some temperature; those never count as stable.
    """

    pair: tuple[int, int]
    temperatures: tuple[float, ...]
    rows: Mapping[VoltageConfiguration, tuple[int, ...]]
    tied: frozenset = frozenset()
    nominal: VoltageConfiguration | None = None

    def __post_init__(self):
        widths = {len(r) for r in self.rows.values()}
        if widths and widths != {len(self.temperatures)}:
            raise InvariantViolation("profile-shape", "every row needs one bit per sampled temperature")

    def is_stable(self, config: VoltageConfiguration) -> bool:
        row = self.rows[config]
        return config not in self.tied and len(set(row)) == 1

    def stable_configs(self) -> list[VoltageConfiguration]:
        return [c for c in sorted(self.rows) if self.is_stable(c)]


def stability_profile(
    chip: ChipInstance,
    pair: tuple[int, int],
    topology: PufTopology,
    tech: TechnologyParams,
    temp_samples: Sequence[float] = DEFAULT_TEMPERATURES,
) -> StabilityProfile:
    a, b = pair
    if not 0 <= a < b < topology.r_oscillators:
        raise InvariantViolation("canonical-pair-order", f"invalid pair {pair} for R={topology.r_oscillators}")
    configs = list(enumerate_configs(topology))
    d = ro_delays(chip, configs, topology, tech, temp_samples)  # (T, cfg, R)
    da, db = d[..., a], d[..., b]
    bits = (da >= db).astype(int)  # 0 when A is faster
    tied_mask = (da == db).any(axis=0)
    rows = {c: tuple(int(x) for x in bits[:, i]) for i, c in enumerate(configs)}
    tied = frozenset(c for i, c in enumerate(configs) if tied_mask[i])
    nominal = VoltageConfiguration.uniform(topology.nominal_level(tech.v_nominal), topology.c_columns)
    return StabilityProfile((a, b), tuple(float(t) for t in temp_samples), rows, tied, nominal)


def find_reliable_config(profile: StabilityProfile) -> VoltageConfiguration | None:
    """The all-nominal configuration if stable, else the first stable one, else ``None``."""
    if profile.nominal is not None and profile.nominal in profile.rows and profile.is_stable(profile.nominal):
        return profile.nominal
    stable = profile.stable_configs()
    return stable[0] if stable else None


@dataclass(frozen=True)
class ConfigTable:
    """Reliable configuration per RO pair, iterated in lexicographic pair order."""

    topology_ref: str
    entries: Mapping[tuple[int, int], VoltageConfiguration] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, pair):
        return self.entries[pair]

    def __contains__(self, pair):
        return pair in self.entries

    def is_complete(self, topology: PufTopology) -> bool:
        return all(p in self.entries for p in topology.pairs())

    def to_dict(self) -> dict:
        return {
            "topology_ref": self.topology_ref,
            "entries": [{"pair": format_pair(p), "config": str(c)} for p, c in self.entries.items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ConfigTable":
        entries = {parse_pair(e["pair"]): VoltageConfiguration.parse(e["config"]) for e in data["entries"]}
        return cls(data["topology_ref"], entries)

    @classmethod
    def from_json(cls, text: str) -> "ConfigTable":
        return cls.from_dict(json.loads(text))


def build_config_table(
    chip: ChipInstance,
    topology: PufTopology,
    tech: TechnologyParams,
    temp_samples: Sequence[float] = DEFAULT_TEMPERATURES,
    pairs: Iterable[tuple[int, int]] | None = None,
    threads: int = 1,
) -> tuple[ConfigTable, list[tuple[int, int]]]:
    """Search every pair (or the given subset) for a temperature-stable configuration.

    Returns the table and the pairs for which no configuration was stable.
    """
    chip.check_topology(topology)
    pairs = sorted(topology.pairs() if pairs is None else pairs)

    def search(pair):
        return find_reliable_config(stability_profile(chip, pair, topology, tech, temp_samples))

    found = ordered_map(search, pairs, threads)
    entries = {p: c for p, c in zip(pairs, found) if c is not None}
    unresolved = [p for p, c in zip(pairs, found) if c is None]
    return ConfigTable(topology.ref, entries), unresolved


def verify_table(
    chip: ChipInstance,
    table: ConfigTable,
    topology: PufTopology,
    tech: TechnologyParams,
    temp_samples: Sequence[float] = DEFAULT_TEMPERATURES,
) -> int:
    """Number of (pair, temperature) bit flips when replaying the table. Zero for a sound table."""
    flips = 0
    for (a, b), cfg in table.entries.items():
        d = ro_delays(chip, [cfg], topology, tech, temp_samples)[:, 0, :]
        bits = d[:, a] >= d[:, b]
        flips += int(np.count_nonzero(bits != bits[0]))
    return flips


def bits_per_level(n_levels: int) -> int:
    if n_levels < 1:
        raise InvariantViolation("level-count", "need at least one level")
    return (n_levels - 1).bit_length()  # == ceil(log2 L)


def memory_bits(topology: PufTopology) -> int:
    """Configuration-memory size: ceil(log2 L) * C * R(R-1)/2."""
    return bits_per_level(topology.n_levels) * topology.c_columns * topology.n_pairs


def encode_table(table: ConfigTable, topology: PufTopology) -> str:
    """Pack the table as a '0'/'1' string: pairs in lexicographic order, columns in
    order, each level index MSB-first in ceil(log2 L) bits."""
    if not table.is_complete(topology):
        missing = [format_pair(p) for p in topology.pairs() if p not in table]
        raise InvariantViolation("table-complete", f"cannot encode incomplete table, missing pairs {missing}")
    width = bits_per_level(topology.n_levels)
    chunks = []
    for pair in topology.pairs():
        cfg = table[pair]
        topology.check_config(cfg)
        chunks.extend(format(lv, f"0{width}b") if width else "" for lv in cfg.levels)
    return "".join(chunks)


def decode_table(bits: str, topology: PufTopology) -> ConfigTable:
    expected = memory_bits(topology)
    if len(bits) != expected:
        raise InvariantViolation("packed-length", f"packed table has {len(bits)} bits, expected {expected}")
    if set(bits) - {"0", "1"}:
        raise InvariantViolation("packed-alphabet", "packed table may only contain '0' and '1'")
    width = bits_per_level(topology.n_levels)
    C = topology.c_columns
    entries = {}
    pos = 0
    for pair in topology.pairs():
        levels = []
        for _ in range(C):
            levels.append(int(bits[pos:pos + width], 2) if width else 0)
            pos += width
        cfg = VoltageConfiguration(tuple(levels))
        topology.check_config(cfg)
        entries[pair] = cfg
    return ConfigTable(topology.ref, entries)


def bits_to_hex(bits: str) -> str:
    if not bits:
        return ""
    return format(int(bits, 2), f"0{(len(bits) + 3) // 4}x")
