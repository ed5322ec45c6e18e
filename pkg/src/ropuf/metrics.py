"""Evaluation metrics: uniqueness, temperature reliability, challenge space, delta sweeps."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._parallel import ordered_map
from .device import ChipInstance, TechnologyParams
from .exceptions import InvariantViolation
from .puf import MeasurementSettings, challenge_rng, measure_pair, respond, ro_delays
from .topology import Challenge, PufTopology, VoltageConfiguration, enumerate_configs, enumerate_challenges

DEFAULT_VALIDITY_MARGIN = 0.005


@dataclass(frozen=True)
class UniquenessReport:
    k_chips: int
    n_challenges: int
    uniqueness_percent: float
    pairwise_hd_matrix: np.ndarray

    def to_dict(self) -> dict:
        return {
            "k_chips": self.k_chips,
            "n_challenges": self.n_challenges,
            "uniqueness_percent": self.uniqueness_percent,
            "pairwise_hd_matrix": self.pairwise_hd_matrix.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def hamming_distance(a, b) -> int:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"response vectors differ in length: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def uniqueness_from_responses(responses) -> UniquenessReport:
    """Average pairwise Hamming distance of a ``(k, n)`` bit matrix, in percent."""
    O = np.asarray(responses, dtype=np.uint8)
    if O.ndim != 2 or O.shape[0] < 2 or O.shape[1] < 1:
        raise ValueError(f"need a (k>=2, n>=1) response matrix, got shape {O.shape}")
    k, n = O.shape
    hd = (O[:, None, :] != O[None, :, :]).sum(axis=-1)  # exact integer counts
    iu = np.triu_indices(k, 1)
    total = int(hd[iu].sum())
    u = 100.0 * 2.0 * total / (k * (k - 1) * n)
    return UniquenessReport(k, n, u, hd * (100.0 / n))


def _check_cohort(chips: Sequence[ChipInstance], topology: PufTopology) -> None:
    if len(chips) < 2:
        raise InvariantViolation("cohort-size", f"uniqueness needs at least 2 chips, got {len(chips)}")
    for chip in chips:
        chip.check_topology(topology)


def response_matrix(
    chips: Sequence[ChipInstance],
    challenges: Sequence[Challenge],
    topology: PufTopology,
    tech: TechnologyParams,
    settings: MeasurementSettings,
    threads: int = 1,
) -> np.ndarray:
    for ch in challenges:
        topology.check_challenge(ch)

    def row(chip):
        return [respond(chip, ch, topology, tech, settings).bit for ch in challenges]

    return np.array(ordered_map(row, chips, threads), dtype=np.uint8).reshape(len(chips), len(challenges))


def uniqueness(
    chips: Sequence[ChipInstance],
    challenges: Sequence[Challenge],
    topology: PufTopology,
    tech: TechnologyParams,
    settings: MeasurementSettings | None = None,
    noisy: bool = False,
    threads: int = 1,
) -> UniquenessReport:
    """Inter-chip uniqueness over a shared challenge list.

    Responses are noise-free unless ``noisy`` is set.
    """
    _check_cohort(chips, topology)
    if not challenges:
        raise InvariantViolation("challenge-count", "uniqueness needs at least one challenge")
    settings = settings or MeasurementSettings()
    if not noisy:
        settings = settings.noise_free()
    return uniqueness_from_responses(response_matrix(chips, challenges, topology, tech, settings, threads))


def reference_temperature(temp_sweep: Sequence[float], t_ref: float = 25.0) -> float:
    return min(temp_sweep, key=lambda t: abs(t - t_ref))


def reliability(
    chip: ChipInstance,
    challenges: Sequence[Challenge],
    topology: PufTopology,
    tech: TechnologyParams,
    temp_sweep: Sequence[float],
    repeats: int = 1,
    settings: MeasurementSettings | None = None,
    threads: int = 1,
) -> float:
    """Percentage of measurements agreeing with the reference-temperature response.

    The reference is measurement 0 at the sweep temperature closest to
    25 C; every sweep temperature is then measured ``repeats`` more times
    with jitter from ``settings``.
    """
    if not temp_sweep:
        raise InvariantViolation("temp-sweep", "temperature sweep must not be empty")
    if repeats < 1:
        raise InvariantViolation("repeats", "repeats must be >= 1")
    if not challenges:
        raise InvariantViolation("challenge-count", "reliability needs at least one challenge")
    settings = settings or MeasurementSettings()
    t0 = reference_temperature(temp_sweep, tech.t_ref)

    def measure(ch: Challenge, temp: float, index: int) -> int:
        s = settings.at(temp)
        rng = challenge_rng(chip.seed, ch, temp, index) if s.jitter_sigma > 0 else None
        return measure_pair(chip, ch.ro_a, ch.ro_b, ch.config, topology, tech, s, rng).bit

    def flips(ch: Challenge) -> int:
        topology.check_challenge(ch)
        ref = measure(ch, t0, 0)
        return sum(measure(ch, t, 1 + r) != ref for t in temp_sweep for r in range(repeats))

    total = sum(ordered_map(flips, challenges, threads))
    n = len(challenges) * len(temp_sweep) * repeats
    return 100.0 * (1.0 - total / n)


def challenge_space(topology: PufTopology) -> int:
    """Maximum number of challenge/response pairs, R(R-1)/2 * L**C."""
    if topology.r_oscillators < 2:
        raise InvariantViolation("r-at-least-2", "challenge space needs at least two oscillators")
    return topology.n_pairs * topology.n_levels**topology.c_columns


def valid_challenges(
    chip: ChipInstance,
    topology: PufTopology,
    tech: TechnologyParams,
    margin: float = DEFAULT_VALIDITY_MARGIN,
    temp_sweep: Sequence[float] = (25.0,),
) -> list[Challenge]:
    """Challenges whose frequency gap exceeds ``margin`` and whose bit holds over ``temp_sweep``.

    The gap is ``|d_A - d_B| / min(d_A, d_B)`` on noise-free delays.
    """
    if margin < 0:
        raise InvariantViolation("margin-non-negative", f"margin must be >= 0, got {margin}")
    if not temp_sweep:
        raise InvariantViolation("temp-sweep", "temperature sweep must not be empty")
    configs = list(enumerate_configs(topology))
    delays = ro_delays(chip, configs, topology, tech, temp_sweep)  # (T, cfg, R)
    out = []
    for a, b in topology.pairs():
        da, db = delays[..., a], delays[..., b]
        gap = np.abs(da - db) / np.minimum(da, db)
        wide = (gap > margin).all(axis=0)
        faster = da < db
        constant = faster.all(axis=0) | (da > db).all(axis=0)
        for ci in np.flatnonzero(wide & constant):
            out.append(Challenge(a, b, configs[ci]))
    return out


@dataclass(frozen=True)
class DeltaSweep:
    """``d_ROA - d_ROB`` for every configuration of one pair."""

    pair: tuple[int, int]
    temperature: float
    entries: tuple[tuple[VoltageConfiguration, float], ...]

    @property
    def sign_split(self) -> tuple[int, int]:
        """(#configurations with A faster, #configurations with B faster)."""
        neg = sum(1 for _, d in self.entries if d < 0)
        pos = sum(1 for _, d in self.entries if d > 0)
        return neg, pos

    def bits(self) -> list[int]:
        return [0 if d < 0 else 1 for _, d in self.entries]

    def to_dict(self) -> dict:
        neg, pos = self.sign_split
        return {
            "pair": f"{self.pair[0]}-{self.pair[1]}",
            "temperature_c": self.temperature,
            "entries": [{"config": str(c), "delta_ps": d * 1e12} for c, d in self.entries],
            "n_a_faster": neg,
            "n_b_faster": pos,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["config_string", "delta_ps"])
        for c, d in self.entries:
            w.writerow([str(c), repr(d * 1e12)])
        return buf.getvalue()


def delta_sweep(
    chip: ChipInstance,
    pair: tuple[int, int],
    topology: PufTopology,
    tech: TechnologyParams,
    temperature: float = 25.0,
) -> DeltaSweep:
    a, b = pair
    if not (0 <= a < topology.r_oscillators and 0 <= b < topology.r_oscillators and a != b):
        raise InvariantViolation("ro-index-range", f"invalid pair {pair} for R={topology.r_oscillators}")
    configs = list(enumerate_configs(topology))
    delays = ro_delays(chip, configs, topology, tech, [temperature])[0]
    entries = tuple((c, float(delays[i, a] - delays[i, b])) for i, c in enumerate(configs))
    return DeltaSweep((a, b), float(temperature), entries)


__all__ = [
    "DEFAULT_VALIDITY_MARGIN",
    "DeltaSweep",
    "UniquenessReport",
    "challenge_space",
    "delta_sweep",
    "enumerate_challenges",
    "hamming_distance",
    "reliability",
    "response_matrix",
    "uniqueness",
    "uniqueness_from_responses",
    "valid_challenges",
]
