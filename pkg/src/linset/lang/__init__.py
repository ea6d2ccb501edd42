from .ast import Program, Procedure, StructDecl, Stmt, Com, Seq, Choice, Loop, Command
from .parser import parse, ParseError
from .desugar import desugar, DesugarError
from .pretty import pretty_program

__all__ = [
    "Program", "Procedure", "StructDecl",
    "Stmt", "Com", "Seq", "Choice", "Loop", "Command",
    "parse", "ParseError", "desugar", "DesugarError", "pretty_program",
]
