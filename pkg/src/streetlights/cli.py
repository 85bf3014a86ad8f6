"""Operator command line: evolve, simulate, extract rules, export, cross-check.

Every run that produces artifacts confines them to its output directory
and finishes by writing a manifest (inputs, digests, seed, tool version,
duration) sufficient to reproduce the run. Exit codes: 0 success, 2 input
error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from pathlib import Path

from . import __version__
from .controller import (
    DEFAULT_POLICY,
    ControllerError,
    discretize,
    forward,
    input_lattice,
)
from .evolution import (
    EvolutionError,
    GaConfig,
    compute_fitness,
    evolve,
    fitness_csv_lines,
    genome_to_weights,
)
from .export import (
    BundleError,
    Provenance,
    WeightBundle,
    canonical_digest,
    generate_controller_source,
    load_bundle,
    write_bundle,
)
from .rules import (
    RuleExtractionError,
    enumerate_lattice,
    extract_from_logs,
    format_rules,
    table_to_json_records,
)
from .scenario import ScenarioError, load_scenario, scenario_from_document
from .world import (
    AsyncConfig,
    LogFormatError,
    TrialError,
    TrialRecorder,
    run_trial,
    run_trial_async,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_VERIFICATION_FAILURE = 3

RAW_TOLERANCE = 1e-9

_INPUT_ERRORS = (ScenarioError, BundleError, EvolutionError, ControllerError,
                 TrialError, LogFormatError, OSError)


class _CliInputError(Exception):
    pass


def _fail(message: str) -> "_CliInputError":
    return _CliInputError(message)


def _default_out_dir() -> str:
    return os.environ.get("STREETLIGHTS_OUT_DIR", "out")


def _ensure_out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise _fail(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise _fail(f"{path} is not valid JSON: {exc}")


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, newline="\n")


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    master_seed, started: float, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "inputs": {key: getattr(args, key) for key in vars(args)
                   if key not in ("func", "out") and getattr(args, key) is not None},
        "masterSeed": master_seed,
        "outDir": str(out_dir),
        "toolVersion": __version__,
        "durationSeconds": time.monotonic() - started,
    }
    if extra:
        manifest.update(extra)
    target = out_dir / "manifest.json"
    tmp = out_dir / "manifest.json.tmp"
    _write_text(tmp, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, target)


def _load_scenario_arg(path: str):
    document = _read_json(path)
    scenario = scenario_from_document(document, Path(path).stem)
    return scenario, canonical_digest(document)


# --- evolve -----------------------------------------------------------------

def cmd_evolve(args: argparse.Namespace) -> int:
    started = time.monotonic()
    scenario, scenario_digest = _load_scenario_arg(args.scenario)
    if args.ga_config:
        config = GaConfig.from_document(_read_json(args.ga_config))
    else:
        config = GaConfig()
    out_dir = _ensure_out_dir(args.out)

    def report(generation, best):
        print(f"generation {generation}: best fitness {best.fitness:.4f} "
              f"(pPeople {best.p_people:.2f}, pEnergy {best.p_energy:.2f}, "
              f"pTrip {best.p_trip:.2f})")

    result = evolve(scenario, DEFAULT_POLICY, config,
                    on_generation=report, workers=args.workers)

    _write_text(out_dir / "fitness.csv",
                "\n".join(fitness_csv_lines(result.per_generation_best)) + "\n")
    bundle = WeightBundle(
        weights=genome_to_weights(result.best_genome),
        policy=DEFAULT_POLICY,
        provenance=Provenance(
            master_seed=config.master_seed,
            ga_config_digest=canonical_digest(config.to_document()),
            scenario_digest=scenario_digest,
            generation=len(result.per_generation_best) - 1,
            fitness=result.best_breakdown.fitness,
        ),
    )
    write_bundle(bundle, out_dir / "best_genome.json")
    _write_manifest(out_dir, "evolve", args, config.master_seed, started,
                    extra={"gaConfig": config.to_document()})
    print(f"wrote {out_dir / 'fitness.csv'} and {out_dir / 'best_genome.json'}")
    return EXIT_OK


# --- simulate -----------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    scenario, _ = _load_scenario_arg(args.scenario)
    bundle = load_bundle(args.bundle)
    out_dir = _ensure_out_dir(args.out)
    recorder = TrialRecorder()

    if args.run_async:
        async_config = AsyncConfig(clock_jitter=args.jitter,
                                   message_loss_rate=args.loss)
        stats, report = run_trial_async(scenario, bundle.weights, bundle.policy,
                                        args.seed, async_config, recorder)
        _write_text(out_dir / "divergence.json",
                    json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    else:
        stats = run_trial(scenario, bundle.weights, bundle.policy, args.seed, recorder)

    recorder.write_log(out_dir / "trial_log.csv")
    summary = {"stats": stats.to_json()}
    if stats.total_people > 0:
        summary["fitness"] = compute_fitness(stats).to_json()
    _write_text(out_dir / "stats.json",
                json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_manifest(out_dir, "simulate", args, args.seed, started)
    print(f"completed {stats.completed_people}/{stats.total_people} people, "
          f"energy {stats.total_energy:.2f}, trip time {stats.total_time_trip:.2f}")
    return EXIT_OK


# --- extract-rules -----------------------------------------------------------

def cmd_extract_rules(args: argparse.Namespace) -> int:
    started = time.monotonic()
    if not args.bundle and not args.log:
        raise _fail("extract-rules needs --bundle and/or --log")
    if args.verify and not (args.bundle and args.log):
        raise _fail("--verify needs both --bundle and --log")
    out_dir = _ensure_out_dir(args.out)

    lattice_table = None
    if args.bundle:
        bundle = load_bundle(args.bundle)
        lattice_table = enumerate_lattice(bundle.weights, bundle.policy)

    log_table = None
    if args.log:
        try:
            with open(args.log, "r", encoding="utf-8") as handle:
                log_table = extract_from_logs(handle)
        except OSError as exc:
            raise _fail(f"cannot read {args.log}: {exc}")

    table = log_table if log_table is not None else lattice_table
    _write_text(out_dir / "rules.txt",
                format_rules(table, include_support=log_table is not None))
    _write_text(out_dir / "rules.json",
                json.dumps(table_to_json_records(table), indent=2) + "\n")
    _write_manifest(out_dir, "extract-rules", args, None, started)
    print(f"wrote {len(table.records)} rules to {out_dir}")

    if args.verify and not log_table.is_subset_of(lattice_table):
        print("verification failed: log rules are not a subset of the "
              "lattice rules for this bundle", file=sys.stderr)
        return EXIT_VERIFICATION_FAILURE
    return EXIT_OK


# --- export ------------------------------------------------------------------

def cmd_export(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.bundle)
    source = generate_controller_source(bundle)
    out_path = Path(args.out_path)
    try:
        _write_text(out_path, source)
    except OSError as exc:
        raise _fail(f"cannot write {out_path}: {exc}")
    print(f"wrote {out_path}")
    print("parity check: build the firmware harness against this file "
          "(firmware/build.sh <this file>) and run "
          f"`streetlights xcheck {args.bundle} <harness executable>`")
    return EXIT_OK


# --- xcheck ------------------------------------------------------------------

def _format_frame(frame) -> str:
    return " ".join(f"{v:g}" for v in frame.as_tuple())


def cmd_xcheck(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.bundle)
    harness = Path(args.harness)
    if not harness.exists():
        raise _fail(f"harness executable {harness} not found")

    frames = list(input_lattice())
    stdin_text = "\n".join(_format_frame(f) for f in frames) + "\n"
    try:
        # absolute path: a bare name would be looked up on PATH instead
        proc = subprocess.run([str(harness.resolve())], input=stdin_text,
                              capture_output=True, text=True, timeout=60)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise _fail(f"cannot run harness {harness}: {exc}")
    if proc.returncode != 0:
        raise _fail(f"harness exited with {proc.returncode}: {proc.stderr.strip()}")

    lines = [line for line in proc.stdout.splitlines() if line.strip()]
    if len(lines) != len(frames):
        raise _fail(f"harness answered {len(lines)} lines for {len(frames)} frames")

    mismatches = []
    for frame, line in zip(frames, lines):
        parts = line.split()
        if len(parts) != 6:
            raise _fail(f"malformed harness response {line!r}")
        got_discrete = tuple(float(p) for p in parts[:3])
        got_raw = tuple(float(p) for p in parts[3:])
        raw = forward(bundle.weights, frame)
        command = discretize(raw, bundle.policy)
        if got_discrete != command.as_tuple():
            mismatches.append((frame.as_tuple(), "discrete",
                               got_discrete, command.as_tuple()))
        elif any(abs(g - e) > RAW_TOLERANCE
                 for g, e in zip(got_raw, raw.as_tuple())):
            mismatches.append((frame.as_tuple(), "raw", got_raw, raw.as_tuple()))

    if mismatches:
        for frame, kind, got, expected in mismatches:
            print(f"mismatch at frame {frame}: {kind} outputs {got} != {expected}",
                  file=sys.stderr)
        print(f"transfer parity FAILED on {len(mismatches)}/{len(frames)} frames",
              file=sys.stderr)
        return EXIT_VERIFICATION_FAILURE
    print(f"transfer parity OK: {len(frames)}/{len(frames)} frames match "
          f"(raws within {RAW_TOLERANCE:g})")
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streetlights",
        description="Evolve, audit and export decentralized street light controllers.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run the genetic algorithm on a scenario")
    p.add_argument("scenario", help="scenario JSON document")
    p.add_argument("--ga-config", help="flat key/value GA config JSON")
    p.add_argument("--out", default=_default_out_dir(), help="output directory")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel candidate evaluations per generation")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("simulate", help="run one seeded trial with a weight bundle")
    p.add_argument("scenario")
    p.add_argument("bundle", help="weight bundle JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=_default_out_dir())
    p.add_argument("--async", dest="run_async", action="store_true",
                   help="run lights on jittered clocks with lossy messaging")
    p.add_argument("--jitter", type=float, default=0.0,
                   help="clock jitter amplitude (async mode)")
    p.add_argument("--loss", type=float, default=0.0,
                   help="message loss rate in [0, 1] (async mode)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract-rules",
                       help="recover the decision rules of a controller")
    p.add_argument("--bundle", help="enumerate the full input lattice of this bundle")
    p.add_argument("--log", help="rebuild observed rules from this trial log")
    p.add_argument("--out", default=_default_out_dir())
    p.add_argument("--verify", action="store_true",
                   help="fail unless the log rules are a subset of the lattice rules")
    p.set_defaults(func=cmd_extract_rules)

    p = sub.add_parser("export", help="generate firmware controller source")
    p.add_argument("bundle")
    p.add_argument("out_path", help="path of the generated source file")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("xcheck",
                       help="verify a built harness against this package")
    p.add_argument("bundle")
    p.add_argument("harness", help="path to the firmware harness executable")
    p.set_defaults(func=cmd_xcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except RuleExtractionError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION_FAILURE
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
