"""Bundled SMT-LIB 2 solver for the quantifier-free fragment the encoder emits.

Runs as a separate process (`linset-solve`) speaking SMT-LIB 2 over standard
streams, so sessions are managed exactly like any external solver.  The
decision procedure is lazy SMT: a CDCL SAT core over the boolean abstraction
plus an integer difference-logic theory checker with conflict cores.
"""
