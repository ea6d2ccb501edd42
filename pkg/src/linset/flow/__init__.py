from .monoid import FlowMonoid, PathCount, KeySet, OMEGA
from .edges import EdgeFunction, EIdentity, EConst, EStripBelow, ERestrict, ESum, IDENTITY
from .constraint import FlowConstraint, FlowSolution, solve, compose, apply_update, transformer_eq, FlowError
from .graph import HeapGraph, FlowGraph, Generator, harris_generator, bst_generator, array_generator, footprint, induced_constraint

__all__ = [
    "FlowMonoid", "PathCount", "KeySet", "OMEGA",
    "EdgeFunction", "EIdentity", "EConst", "EStripBelow", "ERestrict", "ESum", "IDENTITY",
    "FlowConstraint", "FlowSolution", "solve", "compose", "apply_update", "transformer_eq",
    "FlowError",
    "HeapGraph", "FlowGraph", "Generator", "harris_generator", "bst_generator",
    "array_generator", "footprint", "induced_constraint",
]
