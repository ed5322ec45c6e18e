"""Simulator and metrics for ring-oscillator PUFs with per-column supply voltages."""

from .area import AreaConstants, AreaReport, base_area, bits_per_area, switch_overhead
from .device import (
    ChipInstance,
    InverterDevice,
    TechnologyParams,
    VariationModel,
    alpha_law_delay,
    sample_chip,
    voltage_scale_factor,
)
from .exceptions import (
    ChallengeParseError,
    InvariantViolation,
    PufError,
    TopologyMismatchError,
    VoltageBelowThresholdError,
)
from .metrics import (
    DeltaSweep,
    UniquenessReport,
    challenge_space,
    delta_sweep,
    reliability,
    uniqueness,
    valid_challenges,
)
from .puf import MeasurementSettings, Response, count_oscillations, measure_pair, respond, ro_delay, ro_delays
from .temp_aware import (
    ConfigTable,
    StabilityProfile,
    build_config_table,
    decode_table,
    encode_table,
    find_reliable_config,
    memory_bits,
    stability_profile,
)
from .topology import Challenge, PufTopology, VoltageConfiguration, enumerate_challenges, enumerate_configs

__version__ = "0.1.0"
