"""Structure of a multi-voltage RO-PUF: oscillators, columns, supply levels.

Columns are global: inverter position ``j`` belongs to the same column in
every ring oscillator, so every oscillator sees the same voltage pattern
under a given configuration.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .exceptions import ChallengeParseError, InvariantViolation

DEFAULT_LEVELS = (1.08, 1.2, 1.32)
DEFAULT_LEVEL_VARIATION = 0.02

_CHALLENGE_RE = re.compile(r"^\s*(\d+)-(\d+):(\d+)\s*$")


@dataclass(frozen=True, order=True)
class VoltageConfiguration:
    """One supply-level index per column."""

    levels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))

    def __len__(self):
        return len(self.levels)

    def __str__(self):
        return "".join(str(v) for v in self.levels)

    @classmethod
    def parse(cls, text: str) -> "VoltageConfiguration":
        if not text or not text.isdigit():
            raise ChallengeParseError(f"voltage configuration must be a digit string, got {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def uniform(cls, level: int, c_columns: int) -> "VoltageConfiguration":
        return cls((level,) * c_columns)


@dataclass(frozen=True)
class PufTopology:
    """R ring oscillators of I inverters each, split into C columns fed by L levels.

    Parameters
    ----------
    r_oscillators, inverters_per_ro, c_columns:
        R, I (odd) and C (``1 <= C <= I``).
    voltage_levels:
        Strictly increasing supply levels in volts.
    level_variation:
        Maximum ripple of each level in volts. Distinct levels must be
        separated by more than the half-sum of their ripples.
    column_of_inverter:
        Column index for each inverter position; defaults to ``j mod C``.
    """

    r_oscillators: int
    inverters_per_ro: int
    c_columns: int
    voltage_levels: tuple[float, ...] = DEFAULT_LEVELS
    level_variation: tuple[float, ...] | None = None
    column_of_inverter: tuple[int, ...] | None = None
    _ref: str = field(default="", init=False, repr=False, compare=False)

    def __post_init__(self):
        levels = tuple(float(v) for v in self.voltage_levels)
        if self.level_variation is None:
            var = (DEFAULT_LEVEL_VARIATION,) * len(levels)
        else:
            var = tuple(float(v) for v in self.level_variation)
        if self.column_of_inverter is None:
            cols = tuple(j % self.c_columns for j in range(self.inverters_per_ro)) if self.c_columns > 0 else ()
        else:
            cols = tuple(int(c) for c in self.column_of_inverter)
        object.__setattr__(self, "voltage_levels", levels)
        object.__setattr__(self, "level_variation", var)
        object.__setattr__(self, "column_of_inverter", cols)
        self._validate()
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        ref = "R{}xI{}-C{}-L{}-{}".format(
            self.r_oscillators, self.inverters_per_ro, self.c_columns, self.n_levels,
            hashlib.sha256(blob).hexdigest()[:10],
        )
        object.__setattr__(self, "_ref", ref)

    def _validate(self):
        R, I, C = self.r_oscillators, self.inverters_per_ro, self.c_columns
        if R < 1:
            raise InvariantViolation("r-positive", f"need at least one ring oscillator, got R={R}")
        if I < 1 or I % 2 == 0:
            raise InvariantViolation("odd-inverter-count", f"inverters per RO must be odd and positive, got I={I}")
        if not 1 <= C <= I:
            raise InvariantViolation("column-count", f"need 1 <= C <= I, got C={C}, I={I}")
        if len(self.column_of_inverter) != I:
            raise InvariantViolation(
                "column-assignment", f"column_of_inverter has {len(self.column_of_inverter)} entries, expected {I}"
            )
        if any(not 0 <= c < C for c in self.column_of_inverter):
            raise InvariantViolation("column-assignment", "column index outside [0, C)")
        if set(self.column_of_inverter) != set(range(C)):
            raise InvariantViolation("column-assignment", "every column must hold at least one inverter")
        levels, var = self.voltage_levels, self.level_variation
        if not levels:
            raise InvariantViolation("level-count", "need at least one voltage level")
        if len(var) != len(levels):
            raise InvariantViolation(
                "level-variation", f"{len(var)} level variations given for {len(levels)} voltage levels"
            )
        if any(v <= 0 for v in levels):
            raise InvariantViolation("level-positive", "voltage levels must be positive")
        if any(v < 0 for v in var):
            raise InvariantViolation("level-variation", "level variations must be non-negative")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise InvariantViolation("level-order", "voltage levels must be strictly increasing")
        for i, j in itertools.combinations(range(len(levels)), 2):
            gap = abs(levels[i] - levels[j])
            need = (var[i] + var[j]) / 2
            if not gap > need:
                raise InvariantViolation(
                    "level-spacing",
                    f"levels {levels[i]} V and {levels[j]} V are {gap:.4g} V apart, "
                    f"must exceed (VAR_i + VAR_j)/2 = {need:.4g} V",
                )

    @property
    def n_levels(self) -> int:
        return len(self.voltage_levels)

    @property
    def ref(self) -> str:
        """Stable identifier derived from the topology's content."""
        return self._ref

    @property
    def n_pairs(self) -> int:
        return self.r_oscillators * (self.r_oscillators - 1) // 2

    def column_sizes(self) -> list[int]:
        sizes = [0] * self.c_columns
        for c in self.column_of_inverter:
            sizes[c] += 1
        return sizes

    def nominal_level(self, v_nominal: float) -> int:
        """Index of the level closest to ``v_nominal``."""
        return min(range(self.n_levels), key=lambda i: abs(self.voltage_levels[i] - v_nominal))

    def inverter_voltages(self, config: VoltageConfiguration) -> tuple[float, ...]:
        self.check_config(config)
        return tuple(self.voltage_levels[config.levels[c]] for c in self.column_of_inverter)

    def check_config(self, config: VoltageConfiguration) -> None:
        if len(config.levels) != self.c_columns:
            raise InvariantViolation(
                "config-length", f"configuration {config} has {len(config.levels)} columns, topology has {self.c_columns}"
            )
        for c, lv in enumerate(config.levels):
            if not 0 <= lv < self.n_levels:
                raise InvariantViolation(
                    "level-index-range", f"column {c} uses level {lv}, valid range is 0..{self.n_levels - 1}"
                )

    def check_challenge(self, challenge: "Challenge") -> None:
        if challenge.ro_b >= self.r_oscillators:
            raise InvariantViolation(
                "ro-index-range", f"RO index {challenge.ro_b} out of range for R={self.r_oscillators}"
            )
        self.check_config(challenge.config)

    def pairs(self) -> Iterator[tuple[int, int]]:
        return itertools.combinations(range(self.r_oscillators), 2)

    def to_dict(self) -> dict:
        return {
            "r_oscillators": self.r_oscillators,
            "inverters_per_ro": self.inverters_per_ro,
            "c_columns": self.c_columns,
            "voltage_levels_v": list(self.voltage_levels),
            "level_variation_v": list(self.level_variation),
            "column_of_inverter": list(self.column_of_inverter),
        }

    @classmethod
    def spread(cls, r: int, i: int, c: int, n_levels: int, **kwargs) -> "PufTopology":
        """Topology with ``n_levels`` supplies spread over 1.08-1.32 V.

        Convenient for sweeps where only R, I, C and L matter.
        """
        if n_levels == 1:
            levels: Sequence[float] = (1.2,)
        else:
            step = 0.24 / (n_levels - 1)
            levels = tuple(round(1.08 + k * step, 6) for k in range(n_levels))
        return cls(r, i, c, voltage_levels=tuple(levels), **kwargs)


def enumerate_configs(topology: PufTopology) -> Iterator[VoltageConfiguration]:
    """All L**C configurations in lexicographic order."""
    for levels in itertools.product(range(topology.n_levels), repeat=topology.c_columns):
        yield VoltageConfiguration(levels)


@dataclass(frozen=True, order=True)
class Challenge:
    """An RO pair (``ro_a < ro_b``) plus the voltage configuration to apply."""

    ro_a: int
    ro_b: int
    config: VoltageConfiguration

    def __post_init__(self):
        if not isinstance(self.config, VoltageConfiguration):
            object.__setattr__(self, "config", VoltageConfiguration(tuple(self.config)))
        if self.ro_a < 0 or self.ro_b < 0:
            raise InvariantViolation("ro-index-range", "RO indices must be non-negative")
        if not self.ro_a < self.ro_b:
            raise InvariantViolation(
                "canonical-pair-order", f"challenge pair must satisfy a < b, got {self.ro_a}-{self.ro_b}"
            )

    @property
    def pair(self) -> tuple[int, int]:
        return (self.ro_a, self.ro_b)

    def __str__(self):
        return f"{self.ro_a}-{self.ro_b}:{self.config}"

    @classmethod
    def parse(cls, text: str) -> "Challenge":
        """Parse ``"a-b:v1v2...vC"``, e.g. ``"0-3:102"``."""
        m = _CHALLENGE_RE.match(text)
        if m is None:
            raise ChallengeParseError(f"malformed challenge {text!r}, expected 'a-b:v1v2...vC'")
        return cls(int(m.group(1)), int(m.group(2)), VoltageConfiguration.parse(m.group(3)))


def enumerate_challenges(topology: PufTopology) -> Iterator[Challenge]:
    """Every (pair, configuration) challenge, pairs outermost."""
    configs = list(enumerate_configs(topology))
    for a, b in topology.pairs():
        for cfg in configs:
            yield Challenge(a, b, cfg)


def format_pair(pair: tuple[int, int]) -> str:
    return f"{pair[0]}-{pair[1]}"


def parse_pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(p) for p in text.strip().split("-"))
    except ValueError:
        raise ChallengeParseError(f"malformed pair {text!r}, expected 'a-b'") from None
    if a < 0 or not a < b:
        raise InvariantViolation("canonical-pair-order", f"pair must satisfy 0 <= a < b, got {text!r}")
    return a, b
