"""Process technology, per-chip device sampling and the alpha-power-law delay model.

Delays follow the alpha power law normalised to the nominal operating
point::

    d(V, T) = d_base * (1 + kappa*(T - t_ref)) * K * V / (V - V_th(T))**alpha
    K       = (V_M - V_th0)**alpha / V_M
    V_th(T) = V_th0 + k_vth_temp * (T - t_ref)

so ``d(V_M, t_ref) == d_base`` exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .exceptions import InvariantViolation, TopologyMismatchError, VoltageBelowThresholdError
from .topology import PufTopology

SEED_MAX = 2**64


@dataclass(frozen=True)
class TechnologyParams:
    """Alpha-law constants of a process node (defaults: UMC 90 nm)."""

    v_nominal: float = 1.2
    v_th0: float = 0.6
    alpha: float = 1.54
    d_inv_nominal: float = 50e-12
    k_vth_temp: float = -0.7e-3
    t_ref: float = 25.0

    def __post_init__(self):
        if not self.v_th0 > 0:
            raise InvariantViolation("vth-positive", f"v_th0 must be positive, got {self.v_th0}")
        if not self.v_nominal > self.v_th0:
            raise InvariantViolation(
                "vnominal-above-vth", f"v_nominal={self.v_nominal} must exceed v_th0={self.v_th0}"
            )
        if not self.alpha > 0:
            raise InvariantViolation("alpha-positive", f"alpha must be positive, got {self.alpha}")
        if not self.d_inv_nominal > 0:
            raise InvariantViolation("delay-positive", f"d_inv_nominal must be positive, got {self.d_inv_nominal}")

    @property
    def k_factor(self) -> float:
        """The scaling factor K = (V_M - V_th)^alpha / V_M."""
        return (self.v_nominal - self.v_th0) ** self.alpha / self.v_nominal

    def v_th(self, temperature):
        return self.v_th0 + self.k_vth_temp * (np.asarray(temperature, dtype=float) - self.t_ref)


@dataclass(frozen=True)
class VariationModel:
    """Hierarchical Gaussian process variation (all sigmas relative unless noted).

    ``kappa_mean`` and ``sigma_kappa`` are per degree Celsius.
    """

    sigma_inter: float = 0.05
    sigma_intra: float = 0.03
    kappa_mean: float = 5e-4
    sigma_kappa: float = 5e-5
    sigma_jitter: float = 1e-3

    def __post_init__(self):
        for name in ("sigma_inter", "sigma_intra", "sigma_kappa", "sigma_jitter"):
            if getattr(self, name) < 0:
                raise InvariantViolation("sigma-non-negative", f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class InverterDevice:
    d_base: float
    kappa: float


def _voltage_factor(v, temperature, tech: TechnologyParams):
    v = np.asarray(v, dtype=float)
    vth = tech.v_th(temperature)
    if np.any(v <= vth):
        raise VoltageBelowThresholdError(
            f"supply {np.min(v):.4g} V is not above V_th={np.max(vth):.4g} V at T={temperature} C"
        )
    # Written as ratios so the nominal point evaluates to exactly 1.0.
    return (v / tech.v_nominal) * ((tech.v_nominal - tech.v_th0) / (v - vth)) ** tech.alpha


def alpha_law_delay(d_base, v, temperature, tech: TechnologyParams, kappa=0.0):
    """Delay of a gate with nominal delay ``d_base`` at supply ``v`` and ``temperature``.

    Broadcasts over numpy arrays. Raises :class:`VoltageBelowThresholdError`
    if any supply is at or below ``V_th(temperature)``.
    """
    d_base = np.asarray(d_base, dtype=float)
    if np.any(d_base <= 0):
        raise InvariantViolation("delay-positive", "d_base must be positive")
    dt = np.asarray(temperature, dtype=float) - tech.t_ref
    out = d_base * (1.0 + np.asarray(kappa, dtype=float) * dt) * _voltage_factor(v, temperature, tech)
    return out[()] if out.ndim == 0 else out


def voltage_scale_factor(v_from: float, v_to: float, temperature: float, tech: TechnologyParams) -> float:
    """Multiplier taking a delay at ``v_from`` to its value at ``v_to``."""
    return float(alpha_law_delay(1.0, v_to, temperature, tech) / alpha_law_delay(1.0, v_from, temperature, tech))


@dataclass(frozen=True, eq=False)
class ChipInstance:
    """One manufactured chip.

    ``d_base`` and ``kappa`` are read-only ``(R, I)`` arrays indexed
    ``[ro][inverter]``.
    """

    chip_id: str
    seed: int
    topology_ref: str
    d_base: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        d = np.array(self.d_base, dtype=float)
        k = np.array(self.kappa, dtype=float)
        if d.ndim != 2 or d.shape != k.shape:
            raise InvariantViolation("device-shape", f"d_base {d.shape} and kappa {k.shape} must be equal 2-D shapes")
        if np.any(d <= 0):
            raise InvariantViolation("delay-positive", "every inverter needs d_base > 0")
        d.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "d_base", d)
        object.__setattr__(self, "kappa", k)

    @property
    def shape(self) -> tuple[int, int]:
        return self.d_base.shape

    def device(self, ro: int, inverter: int) -> InverterDevice:
        return InverterDevice(float(self.d_base[ro, inverter]), float(self.kappa[ro, inverter]))

    def __eq__(self, other):
        if not isinstance(other, ChipInstance):
            return NotImplemented
        return (
            self.chip_id == other.chip_id
            and self.seed == other.seed
            and self.topology_ref == other.topology_ref
            and np.array_equal(self.d_base, other.d_base)
            and np.array_equal(self.kappa, other.kappa)
        )

    def check_topology(self, topology: PufTopology) -> None:
        if self.topology_ref != topology.ref:
            raise TopologyMismatchError(
                f"chip {self.chip_id} was sampled for {self.topology_ref}, not {topology.ref}"
            )
        if self.shape != (topology.r_oscillators, topology.inverters_per_ro):
            raise TopologyMismatchError(f"chip devices {self.shape} do not match topology")

    def to_dict(self) -> dict[str, Any]:
        devices = [
            [
                {"d_base_ps": float(d) * 1e12, "kappa_per_c": float(k)}
                for d, k in zip(d_row, k_row)
            ]
            for d_row, k_row in zip(self.d_base, self.kappa)
        ]
        return {"chip_id": self.chip_id, "seed": self.seed, "topology_ref": self.topology_ref, "devices": devices}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ChipInstance":
        try:
            rows = data["devices"]
            d = [[cell["d_base_ps"] / 1e12 for cell in row] for row in rows]
            k = [[cell["kappa_per_c"] for cell in row] for row in rows]
            return cls(str(data["chip_id"]), int(data["seed"]), str(data["topology_ref"]), d, k)
        except (KeyError, TypeError) as exc:
            raise InvariantViolation("chip-file", f"malformed chip document: {exc!r}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ChipInstance":
        return cls.from_dict(json.loads(text))


def _positive_normal(rng: np.random.Generator, mean: float, sigma: float, size) -> np.ndarray:
    draws = rng.normal(mean, sigma, size)
    bad = draws <= 0
    while np.any(bad):
        draws[bad] = rng.normal(mean, sigma, int(bad.sum()))
        bad = draws <= 0
    return draws


def sample_chip(
    tech: TechnologyParams,
    var: VariationModel,
    topology: PufTopology,
    seed: int,
    chip_id: str | None = None,
) -> ChipInstance:
    """Draw one chip: a chip-wide delay shift times per-inverter mismatch.

    Deterministic in ``(seed, topology, tech, var)``.
    """
    seed = int(seed)
    if not 0 <= seed < SEED_MAX:
        raise InvariantViolation("seed-range", f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(seed)
    shape = (topology.r_oscillators, topology.inverters_per_ro)
    shift = _positive_normal(rng, 1.0, var.sigma_inter, 1)[0]
    d_base = tech.d_inv_nominal * shift * _positive_normal(rng, 1.0, var.sigma_intra, shape)
    kappa = rng.normal(var.kappa_mean, var.sigma_kappa, shape)
    if chip_id is None:
        chip_id = f"chip-{seed:016x}"
    return ChipInstance(chip_id, seed, topology.ref, d_base, kappa)
