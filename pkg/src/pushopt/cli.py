"""Command-line entry point: evolve / run / hybrid / analyze workflows.

Every command resolves its parameters (flags or config file), records them
verbatim in ``manifest.json`` inside the output directory, and writes its
result files deterministically. ``pushopt replay --manifest path`` re-runs
any recorded command; repeated runs from the same manifest produce
byte-identical result files. All randomness flows from the single ``seed``
parameter via named stream splitting.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import analysis, evolution, hybrid
from .harness import (
    RunConfig,
    fitness,
    format_value,
    repeated_runs,
    run_optimisation,
    write_trajectory_csv,
    write_trajectory_jsonl,
)
from .problems import (
    ProblemFamily,
    TransformRanges,
    make_function,
    problem_family_from_descriptor,
)
from .push import (
    DEFAULT_INSTRUCTION_SET,
    InstructionSet,
    Program,
    load_program,
    parse_program,
    print_program,
    save_program,
)


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# Parameter schemas: single source of truth for defaults and validation
# ---------------------------------------------------------------------------

EVOLVE_DEFAULTS = {
    "function": None,  # required
    "D": None,  # required
    "seed": 0,
    "problem_seed": 0,
    "swarm": 1,
    "moves": 1000,
    "pop": 200,
    "gens": 50,
    "tournament": 5,
    "size_limit": 100,
    "execution_limit": 100,
    "repeats": 10,
    "rates": {"crossover": 0.4, "mutation": 0.4, "reproduction": 0.2},
    "transforms": "random",
    "transform_ranges": {"translate_frac": 0.5, "scale": [0.5, 2.0], "flip_prob": 0.5},
    "instructions": None,  # null means the full default instruction set
    "jobs": 1,
}

RUN_DEFAULTS = {
    "program": None,  # required (path or program text)
    "function": None,
    "D": None,
    "problem_seed": 0,
    "problem_file": None,
    "swarm": 1,
    "moves": 1000,
    "execution_limit": 100,
    "repeats": 1,
    "seed": 0,
    "transforms": "identity",
    "trajectory": None,
}

HYBRID_DEFAULTS = dict(RUN_DEFAULTS)
del HYBRID_DEFAULTS["program"]
HYBRID_DEFAULTS.update({"pool": None, "dir": None, "top": None, "mode": "per_move"})


def resolve_params(defaults: dict, given: dict, command: str) -> dict:
    """Overlay ``given`` on ``defaults``; unknown keys are hard errors."""
    unknown = set(given) - set(defaults)
    if unknown:
        raise CliError(f"unknown {command} config keys: {', '.join(sorted(unknown))}")
    params = {}
    for key, default in defaults.items():
        value = given.get(key, default)
        if isinstance(default, dict) and key in given:
            extra = set(value) - set(default)
            if extra:
                raise CliError(f"unknown {command} config keys under {key}: {', '.join(sorted(extra))}")
            value = {**default, **value}
        params[key] = value
    return params


def _require(params: dict, keys, command: str) -> None:
    missing = [k for k in keys if params.get(k) is None]
    if missing:
        raise CliError(f"{command} requires: {', '.join(missing)}")


def _write_manifest(out_dir: Path, command: str, params: dict) -> None:
    payload = {"command": command, "params": params}
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _problem_family(params: dict) -> ProblemFamily:
    if params.get("problem_file"):
        return problem_family_from_descriptor(
            json.loads(Path(params["problem_file"]).read_text(encoding="utf-8"))
        )
    _require(params, ["function", "D"], "problem selection")
    function = make_function(params["function"], int(params["D"]), int(params["problem_seed"]))
    return ProblemFamily(function, randomize=(params["transforms"] == "random"))


def _run_config(params: dict, record: bool) -> RunConfig:
    return RunConfig(
        swarm_size=int(params["swarm"]),
        moves=int(params["moves"]),
        execution_limit=int(params["execution_limit"]),
        record_trajectory=record,
        seed=int(params["seed"]),
    )


def _load_program_arg(value) -> Program:
    path = Path(value)
    if path.exists():
        return load_program(path)
    if value.lstrip().startswith("("):
        return parse_program(value)
    raise CliError(f"program file not found: {value}")


def _write_results_csv(path, report) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["repeat", "pbest", "evaluations", "moves"])
        for r, result in enumerate(report.results):
            writer.writerow(
                [r, format_value(result.pbest), result.evaluations_used, result.moves_executed]
            )
        writer.writerow(["mean", format_value(report.mean), "", ""])


def _write_trajectory(path, report, run_id) -> None:
    runs = [(r, result) for r, result in enumerate(report.results)]
    if str(path).endswith(".jsonl"):
        write_trajectory_jsonl(path, runs, run_id=run_id)
    else:
        write_trajectory_csv(path, runs, run_id=run_id)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_evolve(params: dict, out_dir: Path) -> None:
    _require(params, ["function", "D"], "evolve")
    rates = params["rates"]
    ranges = params["transform_ranges"]
    family = ProblemFamily(
        make_function(params["function"], int(params["D"]), int(params["problem_seed"])),
        randomize=(params["transforms"] == "random"),
        ranges=TransformRanges(
            translate_frac=float(ranges["translate_frac"]),
            scale=tuple(ranges["scale"]),
            flip_prob=float(ranges["flip_prob"]),
        ),
    )
    instruction_set = (
        InstructionSet(params["instructions"]) if params["instructions"] else DEFAULT_INSTRUCTION_SET
    )
    config = evolution.EvolutionConfig(
        population_size=int(params["pop"]),
        generations=int(params["gens"]),
        tournament_size=int(params["tournament"]),
        size_limit=int(params["size_limit"]),
        crossover_rate=float(rates["crossover"]),
        mutation_rate=float(rates["mutation"]),
        reproduction_rate=float(rates["reproduction"]),
        repeats=int(params["repeats"]),
        run=RunConfig(
            swarm_size=int(params["swarm"]),
            moves=int(params["moves"]),
            execution_limit=int(params["execution_limit"]),
        ),
        instruction_set=instruction_set,
        seed=int(params["seed"]),
    )
    checkpoint_dir = out_dir / "checkpoints"
    checkpoint_dir.mkdir(parents=True, exist_ok=True)

    def on_generation(generation, population, fitnesses):
        path = checkpoint_dir / f"gen_{generation:04d}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for program, fit in zip(population, fitnesses):
                fh.write(
                    json.dumps({"fitness": fit, "program": print_program(program)})
                    + "\n"
                )

    result = evolution.evolve(config, family, on_generation=on_generation, jobs=int(params["jobs"]))
    save_program(result.best_program, out_dir / "best_program.txt")
    with open(out_dir / "generations.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", "best", "mean", "median", "best_so_far"])
        for s in result.stats:
            writer.writerow(
                [
                    s.generation,
                    format_value(s.best),
                    format_value(s.mean),
                    format_value(s.median),
                    format_value(s.best_so_far),
                ]
            )


def cmd_run(params: dict, out_dir: Path) -> None:
    _require(params, ["program"], "run")
    program = _load_program_arg(params["program"])
    family = _problem_family(params)
    record = params["trajectory"] is not None
    config = _run_config(params, record)

    def runner(problem, run_config):
        return run_optimisation(program, problem, run_config)

    report = repeated_runs(runner, family, int(params["repeats"]), config)
    _write_results_csv(out_dir / "results.csv", report)
    if record:
        _write_trajectory(Path(params["trajectory"]), report, int(params["seed"]))


def cmd_hybrid(params: dict, out_dir: Path) -> None:
    if params.get("pool") and (params.get("dir") or params.get("top")):
        raise CliError("give either a pool manifest or a checkpoint dir with --top, not both")
    if params.get("pool"):
        pool = hybrid.load_pool_manifest(params["pool"])
    elif params.get("dir"):
        checkpoints = sorted(Path(params["dir"]).glob("*.jsonl"))
        if not checkpoints:
            raise CliError(f"no checkpoint files in {params['dir']}")
        top = int(params["top"]) if params.get("top") is not None else None
        pool = hybrid.build_pool(checkpoints, top_n=top)
    else:
        raise CliError("hybrid requires a pool manifest or a checkpoint dir")
    family = _problem_family(params)
    record = params["trajectory"] is not None
    config = _run_config(params, record)

    def runner(problem, run_config):
        return hybrid.run_hybrid(pool, problem, run_config, mode=params["mode"])

    report = repeated_runs(runner, family, int(params["repeats"]), config)
    hybrid.write_pool_manifest(pool, out_dir / "pool.json")
    _write_results_csv(out_dir / "results.csv", report)
    if record:
        _write_trajectory(Path(params["trajectory"]), report, int(params["seed"]))


USAGE_DEFAULTS = {
    "checkpoints": None,  # required: list of files or directories
    "top": 20,
    "mode": "static",
    "function": None,
    "D": None,
    "problem_seed": 0,
    "swarm": 1,
    "moves": 100,
    "execution_limit": 100,
    "seed": 0,
}

SIMPLIFY_DEFAULTS = {
    "program": None,
    "function": None,
    "D": None,
    "problem_seed": 0,
    "problem_file": None,
    "swarm": 1,
    "moves": 100,
    "execution_limit": 100,
    "repeats": 10,
    "seed": 0,
    "tolerance": 1e-6,
    "transforms": "random",
}

REEVALUATE_DEFAULTS = {
    "programs": [],
    "pools": [],
    "functions": None,  # required
    "D": None,  # required
    "problem_seed": 0,
    "runs": 25,
    "swarm": 1,
    "moves": 1000,
    "execution_limit": 100,
    "seed": 0,
    "jobs": 1,
}


def _collect_checkpoints(entries) -> dict:
    """Map a unique label to checkpoint files for each given path."""
    groups = {}
    for entry in entries:
        path = Path(entry)
        if path.is_dir():
            files = sorted(path.glob("*.jsonl"))
            if not files:
                raise CliError(f"no checkpoint files in {path}")
            label = path.name
        elif path.exists():
            files = [path]
            label = path.stem
        else:
            raise CliError(f"checkpoint path not found: {path}")
        if label in groups:
            label = str(path)
        groups[label] = files
    return groups


def cmd_analyze_usage(params: dict, out_dir: Path) -> None:
    _require(params, ["checkpoints"], "analyze usage")
    groups = _collect_checkpoints(params["checkpoints"])
    top = int(params["top"])
    per_label = {}
    for label, files in groups.items():
        entries = []
        for f in files:
            entries.extend(hybrid.read_checkpoint(f))
        programs = [e.program for e in entries]
        if params["mode"] == "dynamic":
            family = _problem_family({**params, "transforms": "random"})
            rows = analysis.dynamic_instruction_usage(
                programs, family, _run_config(params, record=False), top=top
            )
        else:
            rows = analysis.instruction_usage(programs, top=top)
        per_label[label] = rows
        safe = label.replace("/", "_").replace("\\", "_")
        analysis.write_usage_csv(out_dir / f"usage_{safe}.csv", rows)
    with open(out_dir / "usage.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        labels = list(per_label)
        writer.writerow(["rank"] + labels)
        for rank in range(top):
            row = [rank + 1]
            for label in labels:
                rows = per_label[label]
                row.append(rows[rank].instruction if rank < len(rows) else "")
            writer.writerow(row)


def cmd_analyze_simplify(params: dict, out_dir: Path) -> None:
    _require(params, ["program"], "analyze simplify")
    program = _load_program_arg(params["program"])
    family = _problem_family(params)
    config = _run_config(params, record=False)
    repeats = int(params["repeats"])
    simplified = analysis.simplify(
        program, family, config, repeats=repeats, tolerance=float(params["tolerance"])
    )
    save_program(simplified, out_dir / "simplified.txt")
    with open(out_dir / "simplify.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variant", "length", "fitness"])
        writer.writerow(
            ["input", len(program), format_value(fitness(program, family, repeats, config))]
        )
        writer.writerow(
            ["simplified", len(simplified), format_value(fitness(simplified, family, repeats, config))]
        )


def cmd_analyze_reevaluate(params: dict, out_dir: Path) -> None:
    _require(params, ["functions", "D"], "analyze reevaluate")
    optimisers = []
    for entry in params["programs"]:
        optimisers.append((Path(entry).stem, _load_program_arg(entry)))
    for entry in params["pools"]:
        optimisers.append((Path(entry).stem, hybrid.load_pool_manifest(entry)))
    if not optimisers:
        raise CliError("analyze reevaluate requires at least one program or pool")
    functions = [
        make_function(fid, int(params["D"]), int(params["problem_seed"]))
        for fid in params["functions"]
    ]
    report = analysis.reevaluate(
        optimisers,
        functions,
        _run_config(params, record=False),
        runs=int(params["runs"]),
        jobs=int(params["jobs"]),
    )
    analysis.write_error_table_csv(out_dir / "errors.csv", report)
    analysis.write_per_run_csv(out_dir / "per_run.csv", report)


COMMANDS = {
    "evolve": (EVOLVE_DEFAULTS, cmd_evolve),
    "run": (RUN_DEFAULTS, cmd_run),
    "hybrid": (HYBRID_DEFAULTS, cmd_hybrid),
    "analyze-usage": (USAGE_DEFAULTS, cmd_analyze_usage),
    "analyze-simplify": (SIMPLIFY_DEFAULTS, cmd_analyze_simplify),
    "analyze-reevaluate": (REEVALUATE_DEFAULTS, cmd_analyze_reevaluate),
}


def execute(command: str, given: dict, out_dir) -> None:
    defaults, fn = COMMANDS[command]
    params = resolve_params(defaults, given, command)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(out_dir, command, params)
    fn(params, out_dir)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_problem_flags(parser, transforms_default):
    parser.add_argument("--function", help="benchmark function id (e.g. F9)")
    parser.add_argument("--dim", type=int, dest="D", help="problem dimensionality")
    parser.add_argument("--problem-seed", type=int, dest="problem_seed")
    parser.add_argument("--problem", dest="problem_file", help="problem descriptor JSON file")
    parser.add_argument(
        "--transforms", choices=["random", "identity"], default=None,
        help=f"instance transforms (default {transforms_default})",
    )


def _add_run_flags(parser):
    parser.add_argument("--swarm", type=int, help="swarm size")
    parser.add_argument("--moves", type=int, help="moves per run")
    parser.add_argument("--execution-limit", type=int, dest="execution_limit")
    parser.add_argument("--repeats", type=int, help="number of repeated runs")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--trajectory", help="write trajectory CSV to this path")


def _gather(args, keys) -> dict:
    given = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            given[key] = value
    return given


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pushopt",
        description="Evolve, run, hybridise and analyse stack-program optimisers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_evolve = sub.add_parser("evolve", help="run the evolutionary loop")
    p_evolve.add_argument("--config", required=True, help="JSON config file")
    p_evolve.add_argument("--seed", type=int, help="override the config seed")
    p_evolve.add_argument("--jobs", type=int, help="parallel fitness workers")
    p_evolve.add_argument("--out", required=True)

    p_run = sub.add_parser("run", help="run one program as an optimiser")
    p_run.add_argument("--program", required=True, help="program file (or inline text)")
    _add_problem_flags(p_run, "identity")
    _add_run_flags(p_run)
    p_run.add_argument("--out", required=True)

    p_hybrid = sub.add_parser("hybrid", help="run a heterogeneous swarm over a pool")
    p_hybrid.add_argument("--pool", help="pool manifest JSON")
    p_hybrid.add_argument("--dir", help="directory of checkpoint JSONL files")
    p_hybrid.add_argument("--top", type=int, help="take the top-n programs from the checkpoints")
    p_hybrid.add_argument("--mode", choices=["per_move", "per_member"])
    _add_problem_flags(p_hybrid, "identity")
    _add_run_flags(p_hybrid)
    p_hybrid.add_argument("--out", required=True)

    p_an = sub.add_parser("analyze", help="usage / simplify / reevaluate tooling")
    an_sub = p_an.add_subparsers(dest="analyze_command", required=True)

    p_usage = an_sub.add_parser("usage", help="instruction usage table")
    p_usage.add_argument("--checkpoints", nargs="+", required=True)
    p_usage.add_argument("--top", type=int)
    p_usage.add_argument("--mode", choices=["static", "dynamic"])
    p_usage.add_argument("--function")
    p_usage.add_argument("--dim", type=int, dest="D")
    p_usage.add_argument("--problem-seed", type=int, dest="problem_seed")
    p_usage.add_argument("--seed", type=int)
    p_usage.add_argument("--out", required=True)

    p_simplify = an_sub.add_parser("simplify", help="remove effect-free instructions")
    p_simplify.add_argument("--program", required=True)
    _add_problem_flags(p_simplify, "random")
    p_simplify.add_argument("--swarm", type=int)
    p_simplify.add_argument("--moves", type=int)
    p_simplify.add_argument("--repeats", type=int)
    p_simplify.add_argument("--seed", type=int)
    p_simplify.add_argument("--tolerance", type=float)
    p_simplify.add_argument("--out", required=True)

    p_reeval = an_sub.add_parser("reevaluate", help="error table over problems")
    p_reeval.add_argument("--programs", nargs="*", default=[])
    p_reeval.add_argument("--pools", nargs="*", default=[])
    p_reeval.add_argument("--functions", nargs="+")
    p_reeval.add_argument("--dim", type=int, dest="D")
    p_reeval.add_argument("--problem-seed", type=int, dest="problem_seed")
    p_reeval.add_argument("--runs", type=int)
    p_reeval.add_argument("--swarm", type=int)
    p_reeval.add_argument("--moves", type=int)
    p_reeval.add_argument("--seed", type=int)
    p_reeval.add_argument("--jobs", type=int, help="parallel re-evaluation workers")
    p_reeval.add_argument("--out", required=True)

    p_replay = sub.add_parser("replay", help="re-run a recorded command")
    p_replay.add_argument("--manifest", required=True)
    p_replay.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            with open(args.manifest, encoding="utf-8") as fh:
                recorded = json.load(fh)
            execute(recorded["command"], recorded["params"], args.out)
        elif args.command == "evolve":
            with open(args.config, encoding="utf-8") as fh:
                given = json.load(fh)
            if args.seed is not None:
                given["seed"] = args.seed
            if args.jobs is not None:
                given["jobs"] = args.jobs
            execute("evolve", given, args.out)
        elif args.command == "run":
            given = _gather(
                args,
                [
                    "program", "function", "D", "problem_seed", "problem_file",
                    "swarm", "moves", "execution_limit", "repeats", "seed",
                    "transforms", "trajectory",
                ],
            )
            execute("run", given, args.out)
        elif args.command == "hybrid":
            given = _gather(
                args,
                [
                    "pool", "dir", "top", "mode", "function", "D", "problem_seed",
                    "problem_file", "swarm", "moves", "execution_limit", "repeats",
                    "seed", "transforms", "trajectory",
                ],
            )
            execute("hybrid", given, args.out)
        elif args.command == "analyze":
            if args.analyze_command == "usage":
                given = _gather(
                    args,
                    ["checkpoints", "top", "mode", "function", "D", "problem_seed", "seed"],
                )
                execute("analyze-usage", given, args.out)
            elif args.analyze_command == "simplify":
                given = _gather(
                    args,
                    [
                        "program", "function", "D", "problem_seed", "problem_file",
                        "swarm", "moves", "repeats", "seed", "tolerance", "transforms",
                    ],
                )
                execute("analyze-simplify", given, args.out)
            else:
                given = _gather(
                    args,
                    [
                        "programs", "pools", "functions", "D", "problem_seed",
                        "runs", "swarm", "moves", "seed", "jobs",
                    ],
                )
                execute("analyze-reevaluate", given, args.out)
        return 0
    except (CliError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
