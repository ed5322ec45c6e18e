import json

import pytest

from ropuf.cli import derive_seeds, main


def write_cfg(tmp_path, body, name="run.toml"):
    p = tmp_path / name
    p.write_text(body)
    return str(p)


SMALL = """
[topology]
r_oscillators = 2
inverters_per_ro = 13
c_columns = 3
voltage_levels_v = [1.2, 1.32]
"""

QUIET = SMALL + """
[variation]
sigma_jitter = 0.0
"""


def test_gen_chip_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen-chip", "--seed", "42", "--out", str(a)]) == 0
    assert main(["gen-chip", "--seed", "42", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["seed"] == 42 and len(doc["devices"]) == 2 and len(doc["devices"][0]) == 13
    assert "chip-" in capsys.readouterr().out


def test_gen_chip_seed_differs(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["gen-chip", "--seed", "1", "--out", str(a)])
    main(["gen-chip", "--seed", "2", "--out", str(b)])
    assert a.read_bytes() != b.read_bytes()


def test_level_spacing_violation_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
[topology]
voltage_levels_v = [1.2, 1.21]
level_variation_v = [0.05, 0.05]
""")
    assert main(["gen-chip", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "level-spacing" in err and "1.2" in err


def test_parse_error_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[topology]\nr_oscillators = \n")
    assert main(["gen-chip", "--config", cfg]) == 1
    assert "line 2" in capsys.readouterr().err


def test_unknown_key_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[variation]\nsigma_inter = 0.05\nsigma_bogus = 1\n")
    assert main(["gen-chip", "--config", cfg]) == 1
    err = capsys.readouterr().err
    assert "variation.sigma_bogus (line 3)" in err


def test_wrong_type_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[topology]\nc_columns = \"three\"\n")
    assert main(["gen-chip", "--config", cfg]) == 1
    assert "topology.c_columns (line 2)" in capsys.readouterr().err


def test_missing_config_file_exit_1(tmp_path):
    assert main(["gen-chip", "--config", str(tmp_path / "nope.toml")]) == 1


def test_bad_verb_exit_1():
    assert main(["frobnicate"]) == 1


@pytest.fixture
def chip_file(tmp_path):
    cfg = write_cfg(tmp_path, QUIET)
    chip = tmp_path / "chip.json"
    assert main(["gen-chip", "--config", cfg, "--seed", "5", "--out", str(chip)]) == 0
    return cfg, str(chip)


def test_respond_single_row(chip_file, capsys):
    cfg, chip = chip_file
    capsys.readouterr()
    assert main(["respond", "--config", cfg, "--chip", chip, "--challenge", "0-1:000"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "chip_id,challenge,temperature_c,bit,unstable"
    assert len(lines) == 2
    assert lines[1].split(",")[3] in ("0", "1")


def test_respond_repeats_identical_without_jitter(chip_file, capsys):
    cfg, chip = chip_file
    capsys.readouterr()
    assert main(["respond", "--config", cfg, "--chip", chip, "--challenge", "0-1:101", "--repeats", "5"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()[1:]
    assert len(rows) == 5 and len(set(rows)) == 1


@pytest.mark.parametrize("challenge, code", [("1-0:000", 2), ("0-1:020", 2), ("0-1:00", 2), ("0-2:000", 2),
                                              ("zero-one", 1), ("0-1:0a0", 1)])
def test_respond_rejects(chip_file, challenge, code):
    cfg, chip = chip_file
    assert main(["respond", "--config", cfg, "--chip", chip, "--challenge", challenge]) == code


def test_respond_topology_mismatch(chip_file, tmp_path, capsys):
    _, chip = chip_file
    other = write_cfg(tmp_path, SMALL.replace("c_columns = 3", "c_columns = 1"), "other.toml")
    assert main(["respond", "--config", other, "--chip", chip, "--challenge", "0-1:0"]) == 2
    assert "topology-match" in capsys.readouterr().err


def test_challenge_space(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
[topology]
r_oscillators = 20
inverters_per_ro = 11
c_columns = 11
voltage_levels_v = [1.08, 1.2, 1.32]
""")
    assert main(["challenge-space", "--config", cfg]) == 0
    assert capsys.readouterr().out.strip() == "33657930"


def test_temp_table_packed_length(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
[topology]
r_oscillators = 4
inverters_per_ro = 13
c_columns = 5
voltage_levels_v = [1.2, 1.32]
""")
    assert main(["temp-table", "--config", cfg, "--seed", "3", "--no-timestamp"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["unresolved"] == []
    assert doc["packed_length"] == doc["memory_bits"] == 30
    assert doc["verification_flips"] == 0
    assert len(doc["entries"]) == 6


def test_uniqueness_identical_chips(tmp_path, capsys):
    cfg = write_cfg(tmp_path, QUIET)
    assert main(["uniqueness", "--config", cfg, "--chip-seeds", "7,7", "--format", "text"]) == 0
    assert capsys.readouterr().out.startswith("uniqueness: 0.00%")


def test_reports_reproducible_without_timestamp(tmp_path):
    cfg = write_cfg(tmp_path, QUIET)
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"u{threads}.json"
        assert main(["uniqueness", "--config", cfg, "--seed", "9", "--k", "6", "--no-timestamp",
                     "--threads", threads, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert "generated_at" not in json.loads(outs[0])


def test_timestamp_present_by_default(tmp_path, capsys):
    cfg = write_cfg(tmp_path, QUIET)
    assert main(["uniqueness", "--config", cfg, "--k", "3"]) == 0
    assert "generated_at" in json.loads(capsys.readouterr().out)


def test_reliability_report(tmp_path, capsys):
    cfg = write_cfg(tmp_path, QUIET + "\n[sweep]\ntemp_step_c = 50.0\n")
    assert main(["reliability", "--config", cfg, "--repeats", "2", "--no-timestamp"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert 0 <= doc["reliability_percent"] <= 100
    assert doc["temperatures_c"] == [-25.0, 25.0, 75.0, 125.0]


def test_delta_sweep_csv(tmp_path, capsys):
    cfg = write_cfg(tmp_path, QUIET)
    assert main(["delta-sweep", "--config", cfg, "--pair", "0-1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "config_string,delta_ps" and len(lines) == 9


@pytest.mark.parametrize("sweep, n_rows", [("bits", 2 * 29 + 2 * 9), ("density", 29 * 9), ("overhead", 29 * 9)])
def test_area_sweeps(sweep, n_rows, capsys):
    assert main(["area", "--sweep", sweep]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == n_rows + 1


def test_area_single_text(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
[topology]
r_oscillators = 2
inverters_per_ro = 19
c_columns = 19
voltage_levels_v = [1.08, 1.2, 1.32]
""")
    assert main(["area", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# GE constants:") and "69.5" in out and "41.0072" in out


def test_derive_seeds_stable():
    assert derive_seeds(3, 4) == derive_seeds(3, 4)
    assert derive_seeds(3, 4)[:2] == derive_seeds(3, 2)
    assert len(set(derive_seeds(3, 50))) == 50
