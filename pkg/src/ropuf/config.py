"""Run configuration loaded from a TOML file.

Every physical quantity carries its unit in the key name::

    [technology]
    v_nominal_v = 1.2
    d_inv_nominal_ps = 50.0
    k_vth_temp_mv_per_c = -0.7

    [topology]
    r_oscillators = 2
    inverters_per_ro = 13
    c_columns = 3
    voltage_levels_v = [1.2, 1.32]

Missing sections or keys fall back to the defaults below, which set up the
20-chip, 2 x 13-inverter, C=3, L=2 cohort at UMC 90 nm.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .area import AreaConstants
from .device import TechnologyParams, VariationModel
from .exceptions import PufError
from .puf import MeasurementSettings
from .temp_aware import TEMP_MAX_C, TEMP_MIN_C, TEMP_STEP_C, temperature_grid
from .topology import PufTopology

OUTPUT_FORMATS = ("json", "csv", "text")


class ConfigError(PufError):
    """Malformed configuration file: bad syntax, unknown key or wrong type."""


@dataclass(frozen=True)
class SweepSettings:
    k_chips: int = 20
    temp_min_c: float = TEMP_MIN_C
    temp_max_c: float = TEMP_MAX_C
    temp_step_c: float = TEMP_STEP_C
    repeats: int = 5
    validity_margin: float = 0.005

    def temperatures(self) -> tuple[float, ...]:
        return temperature_grid(self.temp_min_c, self.temp_max_c, self.temp_step_c)


def default_topology() -> PufTopology:
    return PufTopology(2, 13, 3, voltage_levels=(1.2, 1.32), level_variation=(0.02, 0.02))


@dataclass(frozen=True)
class RunConfig:
    technology: TechnologyParams = field(default_factory=TechnologyParams)
    variation: VariationModel = field(default_factory=VariationModel)
    topology: PufTopology = field(default_factory=default_topology)
    measurement: MeasurementSettings = field(default_factory=MeasurementSettings)
    seeds: tuple[int, ...] = (1,)
    output_format: str | None = None
    sweep: SweepSettings = field(default_factory=SweepSettings)
    area: AreaConstants = field(default_factory=AreaConstants)
    has_muxes: bool = True

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("run.seeds: at least one seed is required")
        if self.output_format is not None and self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"run.output_format: must be one of {OUTPUT_FORMATS}, got {self.output_format!r}")


def _num(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    return float(v)


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("expected an integer")
    return v


def _num_list(v):
    if not isinstance(v, list):
        raise TypeError("expected an array of numbers")
    return tuple(_num(x) for x in v)


def _int_list(v):
    if not isinstance(v, list):
        raise TypeError("expected an array of integers")
    return tuple(_int(x) for x in v)


def _str(v):
    if not isinstance(v, str):
        raise TypeError("expected a string")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError("expected true/false")
    return v


def _scaled(conv: Callable, factor: float):
    return lambda v: conv(v) * factor


# section -> key -> (target attribute, converter)
_SCHEMA: dict[str, dict[str, tuple[str, Callable[[Any], Any]]]] = {
    "technology": {
        "v_nominal_v": ("v_nominal", _num),
        "v_th0_v": ("v_th0", _num),
        "alpha": ("alpha", _num),
        "d_inv_nominal_ps": ("d_inv_nominal", _scaled(_num, 1e-12)),
        "k_vth_temp_mv_per_c": ("k_vth_temp", _scaled(_num, 1e-3)),
        "t_ref_c": ("t_ref", _num),
    },
    "variation": {
        "sigma_inter": ("sigma_inter", _num),
        "sigma_intra": ("sigma_intra", _num),
        "kappa_mean_per_c": ("kappa_mean", _num),
        "sigma_kappa_per_c": ("sigma_kappa", _num),
        "sigma_jitter": ("sigma_jitter", _num),
    },
    "topology": {
        "r_oscillators": ("r_oscillators", _int),
        "inverters_per_ro": ("inverters_per_ro", _int),
        "c_columns": ("c_columns", _int),
        "voltage_levels_v": ("voltage_levels", _num_list),
        "level_variation_v": ("level_variation", _num_list),
        "column_of_inverter": ("column_of_inverter", _int_list),
    },
    "measurement": {
        "compare_time_us": ("compare_time", _scaled(_num, 1e-6)),
        "counter_bits": ("counter_bits", _int),
        "temperature_c": ("temperature", _num),
    },
    "run": {
        "seeds": ("seeds", _int_list),
        "output_format": ("output_format", _str),
    },
    "sweep": {
        "k_chips": ("k_chips", _int),
        "temp_min_c": ("temp_min_c", _num),
        "temp_max_c": ("temp_max_c", _num),
        "temp_step_c": ("temp_step_c", _num),
        "repeats": ("repeats", _int),
        "validity_margin": ("validity_margin", _num),
    },
    "area": {
        "ge_inverter": ("ge_inverter", _num),
        "counter_bits": ("counter_bits", _int),
        "ge_counter_per_bit": ("ge_counter_per_bit", _num),
        "ge_comparator_per_bit": ("ge_comparator_per_bit", _num),
        "ge_mux_per_input": ("ge_mux_per_input", _num),
        "ge_switch": ("ge_switch", _num),
        "buffer_inverters_per_ro": ("buffer_inverters_per_ro", _int),
        "has_muxes": ("has_muxes", _bool),
    },
}


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"^\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return n
    return None


def _where(text: str, section: str, key: str | None = None) -> str:
    line = _line_of(text, section, key)
    name = f"{section}.{key}" if key else f"[{section}]"
    return f"{name} (line {line})" if line else name


def _convert(text: str, data: dict) -> dict[str, dict[str, Any]]:
    out: dict[str, dict[str, Any]] = {s: {} for s in _SCHEMA}
    for section, body in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section {_where(text, section)}; known: {sorted(_SCHEMA)}")
        if not isinstance(body, dict):
            raise ConfigError(f"{section} must be a table")
        for key, value in body.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {_where(text, section, key)}; known: {sorted(_SCHEMA[section])}"
                )
            attr, conv = _SCHEMA[section][key]
            try:
                out[section][attr] = conv(value)
            except TypeError as exc:
                raise ConfigError(f"{_where(text, section, key)}: {exc}, got {value!r}") from None
    return out


def parse_config(text: str) -> RunConfig:
    """Build a :class:`RunConfig` from TOML text.

    Raises :class:`ConfigError` for syntax/schema problems and
    :class:`~ropuf.exceptions.InvariantViolation` when values break a
    domain rule (for example level spacing).
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    s = _convert(text, data)

    variation = VariationModel(**s["variation"])
    topo_kw = dict(s["topology"])
    base_topo = default_topology()
    if topo_kw:
        dims = ("r_oscillators", "inverters_per_ro", "c_columns")
        merged = {d: topo_kw.get(d, getattr(base_topo, d)) for d in dims}
        levels = topo_kw.get("voltage_levels", base_topo.voltage_levels)
        topology = PufTopology(
            merged["r_oscillators"], merged["inverters_per_ro"], merged["c_columns"],
            voltage_levels=levels, level_variation=topo_kw.get("level_variation"),
            column_of_inverter=topo_kw.get("column_of_inverter"),
        )
    else:
        topology = base_topo
    area_kw = dict(s["area"])
    has_muxes = area_kw.pop("has_muxes", True)
    return RunConfig(
        technology=TechnologyParams(**s["technology"]),
        variation=variation,
        topology=topology,
        measurement=MeasurementSettings(jitter_sigma=variation.sigma_jitter, **s["measurement"]),
        sweep=SweepSettings(**s["sweep"]),
        area=AreaConstants(**area_kw),
        has_muxes=has_muxes,
        **s["run"],
    )


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
