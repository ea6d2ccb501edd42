from .encode import encode_entailment, encode_sat, Script, EncodeError
from .session import SolverSession, SmtBackend, default_solver_cmd

__all__ = [
    "encode_entailment",
    "encode_sat",
    "Script",
    "EncodeError",
    "SolverSession",
    "SmtBackend",
    "default_solver_cmd",
]
