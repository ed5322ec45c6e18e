import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ropuf import (
    ConfigTable,
    PufTopology,
    StabilityProfile,
    VariationModel,
    VoltageConfiguration,
    build_config_table,
    decode_table,
    encode_table,
    find_reliable_config,
    memory_bits,
    sample_chip,
    stability_profile,
)
from ropuf.exceptions import InvariantViolation
from ropuf.temp_aware import DEFAULT_TEMPERATURES, bits_to_hex, temperature_grid, verify_table

from conftest import make_chip

VC = VoltageConfiguration.parse


def test_default_grid():
    assert DEFAULT_TEMPERATURES[0] == -25.0 and DEFAULT_TEMPERATURES[-1] == 125.0
    assert len(DEFAULT_TEMPERATURES) == 16
    assert temperature_grid(0, 25, 10) == (0.0, 10.0, 20.0, 25.0)


def test_profile_shape(tech, var, topo):
    chip = sample_chip(tech, var, topo, 1)
    prof = stability_profile(chip, (0, 1), topo, tech)
    assert len(prof.rows) == 8
    assert all(len(r) == len(DEFAULT_TEMPERATURES) for r in prof.rows.values())
    assert prof.nominal == VC("000")


def test_uniform_kappa_rows_constant(tech, topo):
    chip = sample_chip(tech, VariationModel(sigma_kappa=0.0), topo, 2)
    prof = stability_profile(chip, (0, 1), topo, tech)
    assert all(prof.is_stable(c) for c in prof.rows)


def crafted_hot_inverter_chip():
    t = PufTopology(2, 3, 3, voltage_levels=(1.2, 1.32))
    k0 = 5e-4
    # B is 0.5 ps faster at 25 C, but its third inverter heats up 10x faster
    chip = make_chip(t, [[100e-12] * 3, [100e-12, 100e-12, 99.5e-12]], [[k0] * 3, [k0, k0, 10 * k0]])
    return t, chip


def test_hot_inverter_makes_rows_unstable(tech):
    t, chip = crafted_hot_inverter_chip()
    prof = stability_profile(chip, (0, 1), t, tech)
    row = prof.rows[VC("000")]
    # direct check of the crossing: A slower at 25 C, A faster at 125 C
    assert row[DEFAULT_TEMPERATURES.index(25.0)] == 1
    assert row[DEFAULT_TEMPERATURES.index(125.0)] == 0
    assert not prof.is_stable(VC("000"))
    assert any(not prof.is_stable(c) for c in prof.rows)


def _profile(rows, nominal=None, tied=()):
    return StabilityProfile((0, 1), (0.0, 50.0), {VC(k): v for k, v in rows.items()},
                            frozenset(VC(t) for t in tied), VC(nominal) if nominal else None)


def test_find_prefers_nominal():
    prof = _profile({"00": (1, 1), "01": (0, 0), "10": (1, 1), "11": (0, 0)}, nominal="11")
    assert find_reliable_config(prof) == VC("11")
    prof = _profile({"00": (1, 1), "01": (0, 0), "10": (1, 1), "11": (0, 0)})
    assert find_reliable_config(prof) == VC("00")


def test_find_none_when_all_unstable():
    prof = _profile({"00": (1, 0), "01": (0, 1), "10": (1, 0), "11": (0, 1)}, nominal="00")
    assert find_reliable_config(prof) is None


def test_find_single_stable_row():
    prof = _profile({"00": (1, 0), "01": (0, 1), "10": (1, 1), "11": (0, 1)}, nominal="00")
    assert find_reliable_config(prof) == VC("10")


def test_tied_rows_are_unstable():
    prof = _profile({"00": (1, 1), "01": (0, 0)}, tied=("00",))
    assert find_reliable_config(prof) == VC("01")


def test_single_pair_table(tech, var, topo):
    chip = sample_chip(tech, var, topo, 6)
    table, unresolved = build_config_table(chip, topo, tech)
    assert len(table) + len(unresolved) == 1
    assert len(table) <= 1


def test_table_soundness_and_determinism(tech, var):
    t = PufTopology(6, 13, 3, voltage_levels=(1.2, 1.32))
    chip = sample_chip(tech, var, t, 31)
    table, unresolved = build_config_table(chip, t, tech)
    assert len(table) + len(unresolved) == 15
    assert verify_table(chip, table, t, tech) == 0
    again, _ = build_config_table(chip, t, tech, threads=4)
    assert again.entries == table.entries
    for pair, cfg in table.entries.items():
        assert stability_profile(chip, pair, t, tech).is_stable(cfg)


def test_table_json_round_trip(tech, var):
    t = PufTopology(4, 13, 3, voltage_levels=(1.2, 1.32))
    table, _ = build_config_table(sample_chip(tech, var, t, 3), t, tech)
    back = ConfigTable.from_json(table.to_json())
    assert back.entries == table.entries and back.topology_ref == table.topology_ref


@pytest.mark.parametrize(
    "r, c, levels, bits",
    [
        (4, 5, (1.2, 1.32), 30),
        (4, 5, (1.2,), 0),
        (20, 3, (1.08, 1.2, 1.32), 1140),
    ],
)
def test_memory_bits(r, c, levels, bits):
    t = PufTopology(r, c, c, voltage_levels=levels)
    assert memory_bits(t) == bits


TABLE_III = {(0, 1): "01001", (0, 2): "01100", (0, 3): "10010", (1, 2): "01110", (1, 3): "11000", (2, 3): "00110"}


def test_table_iii_encoding():
    t = PufTopology(4, 5, 5, voltage_levels=(1.2, 1.32))
    table = ConfigTable(t.ref, {p: VC(s) for p, s in TABLE_III.items()})
    packed = encode_table(table, t)
    assert packed == "010010110010010011101100000110"
    assert len(packed) == memory_bits(t) == 30
    assert decode_table(packed, t).entries == table.entries
    assert bits_to_hex(packed) == format(int(packed, 2), "08x")


def test_trivial_single_bit_table():
    t = PufTopology(2, 1, 1, voltage_levels=(1.2, 1.32))
    assert encode_table(ConfigTable(t.ref, {(0, 1): VC("0")}), t) == "0"


def test_three_levels_use_two_bits():
    t = PufTopology(3, 3, 3, voltage_levels=(1.08, 1.2, 1.32))
    table = ConfigTable(t.ref, {(0, 1): VC("012"), (0, 2): VC("111"), (1, 2): VC("220")})
    packed = encode_table(table, t)
    assert packed == "000110" "010101" "101000"
    assert decode_table(packed, t).entries == table.entries
    with pytest.raises(InvariantViolation):  # index 3 does not exist for L=3
        decode_table("11" + packed[2:], t)


def test_decode_rejects_wrong_length():
    t = PufTopology(4, 5, 5, voltage_levels=(1.2, 1.32))
    with pytest.raises(InvariantViolation):
        decode_table("0" * 29, t)
    with pytest.raises(InvariantViolation):
        decode_table("2" * 30, t)


def test_encode_rejects_incomplete():
    t = PufTopology(3, 3, 3, voltage_levels=(1.2, 1.32))
    with pytest.raises(InvariantViolation):
        encode_table(ConfigTable(t.ref, {(0, 1): VC("000")}), t)


@settings(max_examples=60)
@given(st.data())
def test_encode_round_trip(data):
    r = data.draw(st.integers(2, 6))
    c = data.draw(st.integers(1, 5))
    n_levels = data.draw(st.integers(1, 5))
    t = PufTopology.spread(r, c if c % 2 else c + 1, c, n_levels)
    entries = {
        p: VoltageConfiguration(tuple(data.draw(st.lists(st.integers(0, n_levels - 1), min_size=c, max_size=c))))
        for p in t.pairs()
    }
    table = ConfigTable(t.ref, entries)
    packed = encode_table(table, t)
    assert len(packed) == memory_bits(t)
    assert decode_table(packed, t).entries == table.entries


def _resolved(chip_arrays, topology, tech):
    d, k = chip_arrays
    chip = make_chip(topology, d, k)
    table, _ = build_config_table(chip, topology, tech)
    return set(table.entries)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_more_levels_never_lose_pairs(tech, seed):
    # wider kappa spread (2e-4) so that some pairs are unresolvable at L=2
    var = VariationModel(sigma_kappa=2e-4)
    t2 = PufTopology(6, 9, 3, voltage_levels=(1.2, 1.32))
    t3 = PufTopology(6, 9, 3, voltage_levels=(1.08, 1.2, 1.32))
    base = sample_chip(tech, var, t2, seed)
    arrays = (base.d_base, base.kappa)
    assert _resolved(arrays, t2, tech) <= _resolved(arrays, t3, tech)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_more_columns_never_lose_pairs(tech, seed):
    var = VariationModel(sigma_kappa=2e-4)
    levels = (1.2, 1.32)
    topos = [PufTopology(6, 9, c, voltage_levels=levels) for c in (1, 3, 9)]
    base = sample_chip(tech, var, topos[0], seed)
    arrays = (base.d_base, base.kappa)
    sets = [_resolved(arrays, t, tech) for t in topos]
    assert sets[0] <= sets[1] <= sets[2]
