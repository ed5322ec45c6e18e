"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 domain invariant violation.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import area as area_mod
from .config import OUTPUT_FORMATS, ConfigError, RunConfig, load_config
from .device import ChipInstance, sample_chip
from .exceptions import ChallengeParseError, InvariantViolation
from .metrics import challenge_space, delta_sweep, reliability, uniqueness, valid_challenges
from .puf import challenge_rng, measure_pair, responses_to_csv
from .temp_aware import bits_to_hex, build_config_table, encode_table, memory_bits, verify_table
from .topology import Challenge, enumerate_challenges, parse_pair

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def derive_seeds(base_seed: int, k: int) -> list[int]:
    """``k`` chip seeds spawned from ``base_seed``."""
    return [int(s) for s in np.random.SeedSequence(base_seed).generate_state(k, dtype=np.uint64)]


def _parse_seed_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad seed list {text!r}") from None


class Context:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: RunConfig = load_config(args.config)

    @property
    def seed(self) -> int:
        return self.args.seed if self.args.seed is not None else self.config.seeds[0]

    def fmt(self, default: str) -> str:
        return self.args.format or self.config.output_format or default

    def chip(self, seed: int | None = None) -> ChipInstance:
        c = self.config
        return sample_chip(c.technology, c.variation, c.topology, self.seed if seed is None else seed)

    def report(self, payload: dict) -> str:
        doc = dict(payload)
        if not self.args.no_timestamp:
            doc["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return json.dumps(doc, indent=2) + "\n"

    def emit(self, text: str) -> None:
        if self.args.out:
            Path(self.args.out).write_text(text)
        else:
            sys.stdout.write(text)


def _meta(ctx: Context) -> dict:
    topo = ctx.config.topology
    return {"topology_ref": topo.ref, "topology": topo.to_dict()}


def cmd_gen_chip(ctx: Context) -> None:
    chip = ctx.chip()
    text = chip.to_json() + "\n"
    if ctx.args.out:
        Path(ctx.args.out).write_text(text)
        print(f"{chip.chip_id} {chip.seed}")
    else:
        sys.stdout.write(text)
        print(f"{chip.chip_id} {chip.seed}", file=sys.stderr)


def cmd_respond(ctx: Context) -> None:
    c = ctx.config
    try:
        chip = ChipInstance.from_json(Path(ctx.args.chip).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read chip file {ctx.args.chip}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"chip file {ctx.args.chip} is not valid JSON: {exc}") from None
    chip.check_topology(c.topology)
    challenge = Challenge.parse(ctx.args.challenge)
    c.topology.check_challenge(challenge)
    temp = c.measurement.temperature if ctx.args.temperature is None else ctx.args.temperature
    settings = c.measurement.at(temp)
    rows = []
    for r in range(ctx.args.repeats):
        rng = challenge_rng(chip.seed, challenge, temp, r) if settings.jitter_sigma > 0 else None
        resp = measure_pair(chip, challenge.ro_a, challenge.ro_b, challenge.config, c.topology, c.technology,
                            settings, rng)
        rows.append((chip.chip_id, challenge, temp, resp))
    fmt = ctx.fmt("csv")
    if fmt == "csv":
        ctx.emit(responses_to_csv(rows))
    elif fmt == "json":
        ctx.emit(ctx.report({"responses": [
            {"chip_id": cid, "challenge": str(ch), "temperature_c": t, "bit": r.bit, "unstable": r.unstable,
             "count_a": r.count_a, "count_b": r.count_b} for cid, ch, t, r in rows]}))
    else:
        ctx.emit("".join(f"{cid} {ch} T={t:g}C bit={r.bit}{' unstable' if r.unstable else ''}\n"
                         for cid, ch, t, r in rows))


def cmd_uniqueness(ctx: Context) -> None:
    c = ctx.config
    if ctx.args.chip_seeds:
        seeds = _parse_seed_list(ctx.args.chip_seeds)
    else:
        k = ctx.args.k if ctx.args.k is not None else c.sweep.k_chips
        seeds = derive_seeds(ctx.seed, k)
    chips = [sample_chip(c.technology, c.variation, c.topology, s) for s in seeds]
    challenges = list(enumerate_challenges(c.topology))
    rep = uniqueness(chips, challenges, c.topology, c.technology, c.measurement, threads=ctx.args.threads)
    fmt = ctx.fmt("json")
    if fmt == "json":
        ctx.emit(ctx.report({**_meta(ctx), "chip_seeds": seeds, **rep.to_dict()}))
    elif fmt == "csv":
        lines = ["chip_i,chip_j,hd_percent"]
        k = rep.k_chips
        lines += [f"{i},{j},{rep.pairwise_hd_matrix[i, j]:.6g}" for i in range(k) for j in range(i + 1, k)]
        ctx.emit("\n".join(lines) + "\n")
    else:
        ctx.emit(f"uniqueness: {rep.uniqueness_percent:.2f}% (k={rep.k_chips}, n={rep.n_challenges})\n")


def cmd_reliability(ctx: Context) -> None:
    c = ctx.config
    chip = ctx.chip()
    temps = c.sweep.temperatures()
    repeats = ctx.args.repeats if ctx.args.repeats is not None else c.sweep.repeats
    challenges = list(enumerate_challenges(c.topology))
    value = reliability(chip, challenges, c.topology, c.technology, temps, repeats, c.measurement,
                        threads=ctx.args.threads)
    valid = valid_challenges(chip, c.topology, c.technology, c.sweep.validity_margin, temps)
    payload = {
        **_meta(ctx), "chip_id": chip.chip_id, "seed": chip.seed, "temperatures_c": list(temps),
        "repeats": repeats, "n_challenges": len(challenges), "reliability_percent": value,
        "validity_margin": c.sweep.validity_margin, "n_valid_challenges": len(valid),
    }
    fmt = ctx.fmt("json")
    if fmt == "json":
        ctx.emit(ctx.report(payload))
    elif fmt == "csv":
        ctx.emit("chip_id,reliability_percent,n_challenges,n_valid_challenges\n"
                 f"{chip.chip_id},{value:.6g},{len(challenges)},{len(valid)}\n")
    else:
        ctx.emit(f"reliability: {value:.3f}% over {len(challenges)} challenges; "
                 f"{len(valid)} valid at margin {c.sweep.validity_margin}\n")


def cmd_delta_sweep(ctx: Context) -> None:
    c = ctx.config
    chip = ctx.chip()
    temp = c.measurement.temperature if ctx.args.temperature is None else ctx.args.temperature
    sweep = delta_sweep(chip, parse_pair(ctx.args.pair), c.topology, c.technology, temp)
    fmt = ctx.fmt("csv")
    if fmt == "csv":
        ctx.emit(sweep.to_csv())
    elif fmt == "json":
        ctx.emit(ctx.report({**_meta(ctx), "chip_id": chip.chip_id, **sweep.to_dict()}))
    else:
        neg, pos = sweep.sign_split
        body = "".join(f"{cfg}  {d * 1e12:+.4f} ps\n" for cfg, d in sweep.entries)
        ctx.emit(body + f"A faster in {neg}, B faster in {pos} of {len(sweep.entries)} configurations\n")


def cmd_challenge_space(ctx: Context) -> None:
    topo = ctx.config.topology
    n = challenge_space(topo)
    fmt = ctx.fmt("text")
    if fmt == "text":
        ctx.emit(f"{n}\n")
    elif fmt == "json":
        ctx.emit(ctx.report({**_meta(ctx), "n_pairs": topo.n_pairs,
                             "configs_per_pair": topo.n_levels**topo.c_columns, "challenge_space": n}))
    else:
        ctx.emit(f"R,C,L,challenge_space\n{topo.r_oscillators},{topo.c_columns},{topo.n_levels},{n}\n")


def cmd_temp_table(ctx: Context) -> None:
    c = ctx.config
    chip = ctx.chip()
    temps = c.sweep.temperatures()
    table, unresolved = build_config_table(chip, c.topology, c.technology, temps, threads=ctx.args.threads)
    flips = verify_table(chip, table, c.topology, c.technology, temps)
    mem = memory_bits(c.topology)
    packed = encode_table(table, c.topology) if not unresolved else None
    if unresolved:
        print(f"warning: {len(unresolved)} pair(s) have no temperature-stable configuration; "
              "packed table not written", file=sys.stderr)
    payload = {
        **_meta(ctx), "chip_id": chip.chip_id, "seed": chip.seed, "temperatures_c": list(temps),
        **table.to_dict(), "unresolved": [f"{a}-{b}" for a, b in unresolved], "verification_flips": flips,
        "memory_bits": mem, "packed_bits": packed, "packed_length": len(packed) if packed is not None else None,
        "packed_hex": bits_to_hex(packed) if packed else None,
    }
    fmt = ctx.fmt("json")
    if fmt == "json":
        ctx.emit(ctx.report(payload))
    elif fmt == "csv":
        lines = ["pair,config"] + [f"{a}-{b},{cfg}" for (a, b), cfg in table.entries.items()]
        ctx.emit("\n".join(lines) + "\n")
    else:
        lines = [f"pair {a}-{b}: {cfg}" for (a, b), cfg in table.entries.items()]
        lines += [f"pair {p}: unresolved" for p in payload["unresolved"]]
        lines.append(f"memory_bits: {mem}")
        if packed is not None:
            lines.append(f"packed ({len(packed)} bits): {packed}")
            lines.append(f"hex: {bits_to_hex(packed)}")
        ctx.emit("\n".join(lines) + "\n")


def cmd_area(ctx: Context) -> None:
    c = ctx.config
    k = c.area
    which = ctx.args.sweep
    series = None
    if which == "bits":
        pairs = list(area_mod.sweep_bit_counts(k))
        series = [s for s, _ in pairs]
        reports = [r for _, r in pairs]
    elif which in ("density", "overhead"):
        reports = list(area_mod.sweep_density(k) if which == "density" else area_mod.sweep_overhead(k))
    else:
        reports = [area_mod.bits_per_area(c.topology, k, c.has_muxes)]
    fmt = ctx.fmt("text" if which == "none" else "csv")
    if fmt == "csv":
        ctx.emit(area_mod.reports_to_csv(reports, series))
    elif fmt == "json":
        doc = json.loads(area_mod.reports_to_json(reports, k))
        if series is not None:
            for s, r in zip(series, doc["reports"]):
                r["series"] = s
        if which == "overhead":
            doc["note"] = "level count for the overhead grid defaults to L=3"
        ctx.emit(ctx.report(doc))
    else:
        ctx.emit(area_mod.reports_to_text(reports, k))


COMMANDS = {
    "gen-chip": cmd_gen_chip,
    "respond": cmd_respond,
    "uniqueness": cmd_uniqueness,
    "reliability": cmd_reliability,
    "delta-sweep": cmd_delta_sweep,
    "challenge-space": cmd_challenge_space,
    "temp-table": cmd_temp_table,
    "area": cmd_area,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (defaults if omitted)")
    common.add_argument("--seed", type=int, help="chip seed, or base seed for cohorts")
    common.add_argument("--format", choices=OUTPUT_FORMATS)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--no-timestamp", action="store_true", help="omit generated_at from JSON reports")
    common.add_argument("--threads", type=int, default=1)

    parser = _Parser(prog="ropuf", description="Multi-voltage ring-oscillator PUF simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("gen-chip", parents=[common], help="sample a chip and write its JSON")

    p = sub.add_parser("respond", parents=[common], help="evaluate one challenge on a chip file")
    p.add_argument("--chip", required=True)
    p.add_argument("--challenge", required=True, help="'a-b:v1v2...vC', e.g. 0-1:010")
    p.add_argument("--temperature", type=float)
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("uniqueness", parents=[common], help="inter-chip uniqueness of a cohort")
    p.add_argument("--k", type=int, help="cohort size (default from config)")
    p.add_argument("--chip-seeds", help="explicit comma-separated chip seeds, overrides --k/--seed")

    p = sub.add_parser("reliability", parents=[common], help="temperature reliability of one chip")
    p.add_argument("--repeats", type=int)

    p = sub.add_parser("delta-sweep", parents=[common], help="d_A - d_B over all configurations")
    p.add_argument("--pair", default="0-1")
    p.add_argument("--temperature", type=float)

    sub.add_parser("challenge-space", parents=[common], help="count the challenge/response pairs")
    sub.add_parser("temp-table", parents=[common], help="build the temperature-aware configuration memory")

    p = sub.add_parser("area", parents=[common], help="gate-equivalent area report or sweep")
    p.add_argument("--sweep", choices=("none", "bits", "density", "overhead"), default="none")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "repeats", None) is not None and args.repeats < 1:
            raise UsageError("--repeats must be >= 1")
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        COMMANDS[args.command](Context(args))
    except (UsageError, ConfigError, ChallengeParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
