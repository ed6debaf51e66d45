"""Bounded execution of programs against an interpreter state."""

from __future__ import annotations

from .ops import REGISTRY, ExecGroup
from .state import DEFAULT_EXECUTION_LIMIT, InterpreterState, SwarmContext


class UnknownInstructionError(KeyError):
    pass


def _run_exec(state: InterpreterState, ctx) -> None:
    # Hot loop: stacks are bound locally (they are only ever mutated in
    # place, so the aliases stay valid across instruction calls).
    ex = state.exec
    registry = REGISTRY
    booleans = state.booleans
    integers = state.integers
    floats = state.floats
    usage = state.usage
    limit = state.step_limit
    while ex and state.steps_used < limit:
        item = ex.pop()
        state.steps_used += 1
        kind = type(item)
        if kind is str:
            fn = registry.get(item)
            if fn is None:
                raise UnknownInstructionError(item)
            fn(state, ctx)
            if usage is not None:
                usage[item] = usage.get(item, 0) + 1
        elif kind is bool:
            booleans.append(item)
        elif kind is int:
            integers.append(item)
        elif kind is float:
            floats.append(item)
        elif kind is ExecGroup:
            ex.extend(reversed(item.items))
        else:
            raise TypeError(f"cannot execute item of type {kind.__name__}")


def run_single_item(state: InterpreterState, ctx, item) -> None:
    """Run one item to completion on a private exec stack.

    Used by instructions that take a code argument; shares the caller's step
    budget so nested execution cannot exceed the move limit.
    """
    saved = state.exec
    state.exec = [item]
    try:
        _run_exec(state, ctx)
    finally:
        state.exec = saved


def run_move(
    state: InterpreterState,
    program,
    ctx: SwarmContext = None,
    limit: int = DEFAULT_EXECUTION_LIMIT,
    usage: dict = None,
) -> InterpreterState:
    """Execute one move of ``program`` against ``state``.

    The exec stack is cleared and reloaded with the program items; execution
    proceeds until the exec stack empties or ``limit`` item executions have
    been counted (literals and group unpacks count). All other stacks
    persist between moves.
    """
    if limit <= 0:
        raise ValueError("execution limit must be positive")
    state.exec.clear()
    state.exec.extend(reversed(program.items))
    state.steps_used = 0
    state.step_limit = limit
    state.usage = usage
    _run_exec(state, ctx)
    return state
