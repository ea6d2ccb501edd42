from .context import VerifyContext, VerifyFailure, Config
from .prove import ProcedureProver

__all__ = ["VerifyContext", "VerifyFailure", "Config", "ProcedureProver"]
