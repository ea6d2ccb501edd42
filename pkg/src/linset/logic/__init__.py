from .assertion import (
    Assertion, NodeAtom, PastAtom, FutureAtom, UpdateToken, OBL, FUL, NO_TOKEN,
    rename_primed, normalize,
)

__all__ = [
    "Assertion", "NodeAtom", "PastAtom", "FutureAtom",
    "UpdateToken", "OBL", "FUL", "NO_TOKEN",
    "rename_primed", "normalize",
]
