"""Ring-oscillator delays, counter measurement and response bits."""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvariantViolation
from .device import ChipInstance, TechnologyParams, alpha_law_delay
from .topology import Challenge, PufTopology, VoltageConfiguration

# floor() guard: compare_time / delay may land an ulp below an exact integer.
_COUNT_RTOL = 1e-12


@dataclass(frozen=True)
class MeasurementSettings:
    compare_time: float = 10e-6
    counter_bits: int = 16
    jitter_sigma: float = 1e-3
    temperature: float = 25.0

    def __post_init__(self):
        if not self.compare_time > 0:
            raise InvariantViolation("compare-time-positive", f"compare_time must be > 0, got {self.compare_time}")
        if self.counter_bits < 1:
            raise InvariantViolation("counter-bits", f"counter_bits must be >= 1, got {self.counter_bits}")
        if self.jitter_sigma < 0:
            raise InvariantViolation("sigma-non-negative", "jitter_sigma must be >= 0")

    def noise_free(self) -> "MeasurementSettings":
        return MeasurementSettings(self.compare_time, self.counter_bits, 0.0, self.temperature)

    def at(self, temperature: float) -> "MeasurementSettings":
        return MeasurementSettings(self.compare_time, self.counter_bits, self.jitter_sigma, temperature)


@dataclass(frozen=True)
class Response:
    """One comparison. ``unstable`` marks equal counts (reported as bit 1)."""

    bit: int
    unstable: bool
    count_a: int
    count_b: int


def ro_delay(
    chip: ChipInstance,
    ro: int,
    config: VoltageConfiguration,
    topology: PufTopology,
    tech: TechnologyParams,
    temperature: float,
) -> float:
    """Loop delay of one oscillator: the sum of its inverter delays."""
    if not 0 <= ro < topology.r_oscillators:
        raise InvariantViolation("ro-index-range", f"RO index {ro} out of range for R={topology.r_oscillators}")
    v = np.asarray(topology.inverter_voltages(config))
    per_inverter = alpha_law_delay(chip.d_base[ro], v, temperature, tech, chip.kappa[ro])
    return math.fsum(per_inverter)


def ro_delays(
    chip: ChipInstance,
    configs: Sequence[VoltageConfiguration],
    topology: PufTopology,
    tech: TechnologyParams,
    temperatures: Sequence[float],
) -> np.ndarray:
    """Delays of every oscillator, shape ``(len(temperatures), len(configs), R)``."""
    temps = np.asarray(temperatures, dtype=float)
    volts = np.array([topology.inverter_voltages(c) for c in configs], dtype=float)  # (n_cfg, I)
    # (T, 1, 1, 1) x (1, n_cfg, 1, I) x (1, 1, R, I)
    t = temps[:, None, None, None]
    per_inverter = alpha_law_delay(chip.d_base[None, None], volts[None, :, None, :], t, tech, chip.kappa[None, None])
    return per_inverter.sum(axis=-1)


def ideal_bit(delay_a: float, delay_b: float) -> tuple[int, bool]:
    """Noise-free bit from loop delays: 0 when A is faster. Ties give ``(1, True)``."""
    if delay_a < delay_b:
        return 0, False
    return 1, delay_a == delay_b


def count_oscillations(delay: float, settings: MeasurementSettings, rng: np.random.Generator | None = None) -> int:
    """Counter value after ``settings.compare_time``, saturating at the counter width."""
    eff = delay
    if settings.jitter_sigma > 0:
        if rng is None:
            raise ValueError("rng is required when jitter_sigma > 0")
        eff = delay * (1.0 + rng.normal(0.0, settings.jitter_sigma))
    cap = 2**settings.counter_bits - 1
    if eff <= 0:
        return cap
    q = settings.compare_time / eff
    if q >= cap:
        return cap
    return min(cap, math.floor(q * (1.0 + _COUNT_RTOL)))


def _temperature_word(temperature: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(temperature)))[0]


def challenge_rng(chip_seed: int, challenge: Challenge, temperature: float, index: int = 0) -> np.random.Generator:
    """Per-measurement generator keyed on (chip, challenge, temperature, repeat index).

    Makes jittered results independent of evaluation order and thread count.
    """
    key = [int(chip_seed), challenge.ro_a, challenge.ro_b, *challenge.config.levels,
           _temperature_word(temperature), int(index)]
    return np.random.default_rng(key)


def measure_pair(
    chip: ChipInstance,
    ro_a: int,
    ro_b: int,
    config: VoltageConfiguration,
    topology: PufTopology,
    tech: TechnologyParams,
    settings: MeasurementSettings,
    rng: np.random.Generator | None = None,
) -> Response:
    """Compare oscillators ``ro_a`` and ``ro_b`` in either order."""
    da = ro_delay(chip, ro_a, config, topology, tech, settings.temperature)
    db = ro_delay(chip, ro_b, config, topology, tech, settings.temperature)
    ca = count_oscillations(da, settings, rng)
    cb = count_oscillations(db, settings, rng)
    if ca > cb:
        return Response(0, False, ca, cb)
    return Response(1, ca == cb, ca, cb)


def respond(
    chip: ChipInstance,
    challenge: Challenge,
    topology: PufTopology,
    tech: TechnologyParams,
    settings: MeasurementSettings,
    rng: np.random.Generator | None = None,
) -> Response:
    """Evaluate one challenge.

    Bit 0 means the first oscillator counted more (was faster). Without an
    explicit ``rng``, jitter is drawn from :func:`challenge_rng`.
    """
    topology.check_challenge(challenge)
    if rng is None and settings.jitter_sigma > 0:
        rng = challenge_rng(chip.seed, challenge, settings.temperature)
    return measure_pair(chip, challenge.ro_a, challenge.ro_b, challenge.config, topology, tech, settings, rng)


RESPONSE_CSV_HEADER = ("chip_id", "challenge", "temperature_c", "bit", "unstable")


def responses_to_csv(rows: Iterable[tuple[str, Challenge, float, Response]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESPONSE_CSV_HEADER)
    for chip_id, challenge, temperature, resp in rows:
        writer.writerow([chip_id, str(challenge), f"{temperature:g}", resp.bit, int(resp.unstable)])
    return buf.getvalue()
