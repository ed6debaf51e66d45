"""A typed stack-program interpreter with a search-point vector extension."""

from .interpreter import UnknownInstructionError, run_move, run_single_item
from .ops import (
    DEFAULT_INSTRUCTION_SET,
    ERC_MARKERS,
    INT_LIMIT,
    REGISTRY,
    ExecGroup,
    InstructionSet,
    default_instruction_set,
    push_value,
)
from .program import (
    DEFAULT_SIZE_LIMIT,
    Program,
    ProgramError,
    load_program,
    parse_program,
    print_program,
    save_program,
)
from .state import (
    DEFAULT_EXECUTION_LIMIT,
    DEFAULT_SETTINGS,
    InterpreterState,
    PushSettings,
    SwarmContext,
)

__all__ = [
    "DEFAULT_EXECUTION_LIMIT",
    "DEFAULT_INSTRUCTION_SET",
    "DEFAULT_SETTINGS",
    "DEFAULT_SIZE_LIMIT",
    "ERC_MARKERS",
    "INT_LIMIT",
    "REGISTRY",
    "ExecGroup",
    "InstructionSet",
    "InterpreterState",
    "Program",
    "ProgramError",
    "PushSettings",
    "SwarmContext",
    "UnknownInstructionError",
    "default_instruction_set",
    "load_program",
    "parse_program",
    "print_program",
    "push_value",
    "run_move",
    "run_single_item",
    "save_program",
]
