"""Post-hoc tooling: instruction usage tables, program simplification and
re-evaluation reports with mean ranks."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .harness import RunConfig, fitness, format_value, run_optimisation
from .hybrid import Pool, run_hybrid
from .problems import Problem, ProblemFamily
from .push import Program
from .rng import derive_seed, stream


@dataclass(frozen=True)
class UsageRow:
    instruction: str
    count: int
    rate: float


def _usage_rows(counts: dict, top: int = None) -> list:
    total = sum(counts.values())
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if top is not None:
        ordered = ordered[:top]
    return [UsageRow(name, count, count / total) for name, count in ordered]


def instruction_usage(programs, top: int = None) -> list:
    """Ranked static instruction counts over a list of programs.

    Literals are excluded; rates are normalised over all counted
    instructions (before any top-k truncation of the returned rows).
    """
    if not programs:
        raise ValueError("no programs given")
    counts = {}
    for program in programs:
        for item in program.items:
            if type(item) is str:
                counts[item] = counts.get(item, 0) + 1
    return _usage_rows(counts, top)


def dynamic_instruction_usage(
    programs, family: ProblemFamily, config: RunConfig, top: int = None
) -> list:
    """Ranked executed-instruction counts, measured by running each program
    once per family instance under ``config``."""
    if not programs:
        raise ValueError("no programs given")
    counts = {}
    for i, program in enumerate(programs):
        problem = family.instance(stream(config.seed, "usage", i))
        run_optimisation(program, problem, config, usage=counts)
    if not counts:
        return []
    return _usage_rows(counts, top)


def write_usage_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "instruction", "count", "rate"])
        for rank, row in enumerate(rows, start=1):
            writer.writerow([rank, row.instruction, row.count, format_value(row.rate)])


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------


def simplify(
    program: Program,
    family: ProblemFamily,
    config: RunConfig,
    repeats: int = 10,
    tolerance: float = 1e-6,
) -> Program:
    """Greedily drop items whose removal does not hurt fitness.

    Fitness is measured with paired seeds (identical instances and run seeds
    for every candidate), so removals of effect-free instructions compare
    exactly. A removal is kept when the candidate fitness stays within
    ``tolerance`` (relative) of the fitness of the input program; the loop
    repeats until no single removal is accepted, so the result is never
    longer than the input and never worse beyond the tolerance.
    """
    baseline = fitness(program, family, repeats, config)
    threshold = baseline * (1.0 + tolerance)
    current = program
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(current.items):
            candidate = Program(current.items[:i] + current.items[i + 1 :])
            if fitness(candidate, family, repeats, config) <= threshold:
                current = candidate
                changed = True
            else:
                i += 1
    return current


# ---------------------------------------------------------------------------
# Re-evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReevalReport:
    """Mean errors of optimisers across problems, with mean ranks.

    ``means[i][j]`` is optimiser i's mean error on problem j over ``runs``
    runs; ``per_run[i][j]`` holds the individual run bests.
    """

    names: tuple
    problem_ids: tuple
    means: tuple
    per_run: tuple
    mean_ranks: tuple
    runs: int


def _column_ranks(values) -> list:
    # Average midranks for ties.
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    return ranks


def _run_optimiser(task) -> float:
    optimiser, problem, config = task
    if isinstance(optimiser, Pool):
        return run_hybrid(optimiser, problem, config).pbest
    return run_optimisation(optimiser, problem, config).pbest


def reevaluate(
    optimisers,
    functions,
    config: RunConfig,
    runs: int = 25,
    jobs: int = 1,
) -> ReevalReport:
    """Re-evaluate optimisers over identity-transform instances.

    ``optimisers`` is a list of (name, Program-or-Pool) pairs; every
    optimiser faces the same ``runs`` random initial conditions per
    function, derived from (config.seed, function id, run index), so
    comparisons are paired. ``jobs > 1`` runs the (optimiser, problem, run)
    grid in parallel worker processes without changing the results.
    """
    if not optimisers:
        raise ValueError("no optimisers given")
    if not functions:
        raise ValueError("no functions given")
    names = tuple(name for name, _ in optimisers)
    problem_ids = tuple(fn.id for fn in functions)
    tasks = [
        (
            optimiser,
            Problem.plain(fn),
            replace(config, seed=derive_seed(config.seed, "reeval", fn.id, r)),
        )
        for _, optimiser in optimisers
        for fn in functions
        for r in range(runs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            flat = list(executor.map(_run_optimiser, tasks, chunksize=8))
    else:
        flat = [_run_optimiser(task) for task in tasks]
    per_run = []
    means = []
    index = 0
    for _ in names:
        rows = []
        row_means = []
        for _fn in functions:
            bests = tuple(flat[index : index + runs])
            index += runs
            rows.append(bests)
            row_means.append(sum(bests) / runs)
        per_run.append(tuple(rows))
        means.append(tuple(row_means))
    rank_columns = [
        _column_ranks([means[i][j] for i in range(len(names))])
        for j in range(len(problem_ids))
    ]
    mean_ranks = tuple(
        sum(rank_columns[j][i] for j in range(len(problem_ids))) / len(problem_ids)
        for i in range(len(names))
    )
    return ReevalReport(names, problem_ids, tuple(means), tuple(per_run), mean_ranks, runs)


def write_error_table_csv(path, report: ReevalReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["optimiser", "runs"] + list(report.problem_ids) + ["mean_rank"])
        for i, name in enumerate(report.names):
            row = [name, report.runs]
            row += [format_value(m) for m in report.means[i]]
            row.append(format_value(report.mean_ranks[i]))
            writer.writerow(row)


def write_per_run_csv(path, report: ReevalReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["optimiser", "problem", "run", "pbest"])
        for i, name in enumerate(report.names):
            for j, pid in enumerate(report.problem_ids):
                for r, value in enumerate(report.per_run[i][j]):
                    writer.writerow([name, pid, r, format_value(value)])
