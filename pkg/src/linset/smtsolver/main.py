"""SMT-LIB 2 front end: lowering to SAT + difference logic, lazy theory loop.

Usage: linset-solve [--timeout SECONDS] [--always-unknown]

Reads SMT-LIB 2 commands from stdin, answers on stdout.  Supports the
quantifier-free fragment over Bool, Int and uninterpreted sorts with
difference-form arithmetic and Ackermannized uninterpreted functions; any
construct outside the fragment makes check-sat answer `unknown`.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import dl, sexpr
from .sat import Solver

ZERO = "$zero"


class Unsupported(Exception):
    pass


class Env:
    def __init__(self):
        self.sorts: dict[str, int] = {"Bool": 0, "Int": 0}
        self.consts: dict[str, str] = {}
        self.funs: dict[str, tuple[list[str], str]] = {}
        self.defines: dict[str, tuple[list[tuple[str, str]], str, object]] = {}
        self.assertions: list[list] = [[]]
        self.decl_stack: list[list[str]] = [[]]

    def push(self):
        self.assertions.append([])
        self.decl_stack.append([])

    def pop(self):
        if len(self.assertions) == 1:
            raise Unsupported("pop on empty stack")
        self.assertions.pop()
        for name in self.decl_stack.pop():
            self.consts.pop(name, None)
            self.funs.pop(name, None)
            self.defines.pop(name, None)

    def all_assertions(self):
        for frame in self.assertions:
            yield from frame


class Lowering:
    """One check-sat's translation context."""

    def __init__(self, env: Env):
        self.env = env
        self.sat = Solver()
        self.bool_vars: dict[str, int] = {}
        self.int_vars: dict[str, int] = {}
        self.atom_vars: dict[tuple, int] = {}
        self.atom_of_var: dict[int, tuple] = {}
        self.node_var: dict = {}
        self.apps_int: dict[tuple, str] = {}
        self.apps_bool: dict[tuple, str] = {}
        self.app_args: dict[str, tuple] = {}
        self._fresh = 0

    # ---- variables -------------------------------------------------------

    def bool_var(self, name: str) -> int:
        if name not in self.bool_vars:
            self.bool_vars[name] = self.sat.new_var()
        return self.bool_vars[name]

    def int_var(self, name: str) -> int:
        if name not in self.int_vars:
            self.int_vars[name] = self.sat.nvars + 1000000 + len(self.int_vars)
        return self.int_vars[name]

    def atom_var(self, x: int, y: int, c: int) -> int:
        key = (x, y, c)
        if key not in self.atom_vars:
            v = self.sat.new_var()
            self.atom_vars[key] = v
            self.atom_of_var[v] = key
        return self.atom_vars[key]

    def fresh_name(self, prefix: str) -> str:
        self._fresh += 1
        return f"{prefix}!{self._fresh}"

    # ---- integer terms ---------------------------------------------------

    def norm_int(self, e, scope) -> tuple[dict, int]:
        """Return (coeffs: var-> coeff, const)."""
        if isinstance(e, str):
            if e in scope:
                return self.norm_int(scope[e], scope)
            if e.lstrip("-").isdigit():
                return {}, int(e)
            if e in self.env.defines:
                params, _ret, body = self.env.defines[e]
                if params:
                    raise Unsupported(f"macro {e} needs arguments")
                return self.norm_int(body, scope)
            sort = self.env.consts.get(e)
            if sort == "Bool":
                raise Unsupported(f"bool constant {e} in integer position")
            return {e: 1}, 0
        if not e:
            raise Unsupported("empty term")
        head = e[0]
        if head == "+":
            coeffs: dict = {}
            const = 0
            for arg in e[1:]:
                c2, k2 = self.norm_int(arg, scope)
                for v, c in c2.items():
                    coeffs[v] = coeffs.get(v, 0) + c
                const += k2
            return {v: c for v, c in coeffs.items() if c}, const
        if head == "-":
            if len(e) == 2:
                c2, k2 = self.norm_int(e[1], scope)
                return {v: -c for v, c in c2.items()}, -k2
            first, rest = self.norm_int(e[1], scope), e[2:]
            coeffs, const = dict(first[0]), first[1]
            for arg in rest:
                c2, k2 = self.norm_int(arg, scope)
                for v, c in c2.items():
                    coeffs[v] = coeffs.get(v, 0) - c
                const -= k2
            return {v: c for v, c in coeffs.items() if c}, const
        if head == "let":
            scope2 = dict(scope)
            for name, val in e[1]:
                scope2[name] = _substitute(val, scope)
            return self.norm_int(e[2], scope2)
        if isinstance(head, str) and (head in self.env.funs or head in self.env.defines):
            return {self.lower_app(e, scope, want="Int"): 1}, 0
        raise Unsupported(f"integer term {sexpr.to_str(e)}")

    def lower_app(self, e, scope, want: str) -> str:
        """Ackermannize an uninterpreted application; returns the fresh name."""
        head = e[0]
        if head in self.env.defines:
            params, _ret, body = self.env.defines[head]
            if len(params) != len(e) - 1:
                raise Unsupported(f"arity mismatch for {head}")
            scope2 = dict(scope)
            for (p, _s), arg in zip(params, e[1:]):
                scope2[p] = _substitute(arg, scope)
            if want == "Int":
                name = self.fresh_name("def")
                coeffs, const = self.norm_int(body, scope2)
                # name = body: encode equality via two atoms later by aliasing
                return self._alias_int(coeffs, const)
            raise Unsupported("bool define in term position")
        argsorts, ret = self.env.funs[head]
        if len(argsorts) != len(e) - 1:
            raise Unsupported(f"arity mismatch for {head}")
        argkeys = []
        for arg in e[1:]:
            coeffs, const = self.norm_int(arg, scope)
            argkeys.append((tuple(sorted(coeffs.items())), const))
        key = (head, tuple(argkeys))
        table = self.apps_bool if ret == "Bool" else self.apps_int
        if key not in table:
            name = self.fresh_name(f"{head}@")
            table[key] = name
            self.app_args[name] = (head, tuple(e[1:]), tuple(argkeys))
        return table[key]

    def _alias_int(self, coeffs: dict, const: int) -> str:
        """Introduce a fresh int variable equal to the given linear term."""
        name = self.fresh_name("alias")
        # alias - term <= 0 and term - alias <= 0
        for sign in (1, -1):
            cs = {name: sign}
            for v, c in coeffs.items():
                cs[v] = cs.get(v, 0) - sign * c
            node = self.atom_from_linear(cs, -sign * const)
            self.sat.add_clause([node])
        return name

    def atom_from_linear(self, coeffs: dict, const: int) -> int:
        """Literal for `sum coeffs + const <= 0`; difference form required."""
        coeffs = {v: c for v, c in coeffs.items() if c}
        pos = [v for v, c in coeffs.items() if c == 1]
        neg = [v for v, c in coeffs.items() if c == -1]
        if len(pos) + len(neg) != len(coeffs) or len(pos) > 1 or len(neg) > 1:
            raise Unsupported(f"non-difference constraint {coeffs}")
        x = self.int_var(pos[0]) if pos else self.int_var(ZERO)
        y = self.int_var(neg[0]) if neg else self.int_var(ZERO)
        # x - y + const <= 0  <=>  x - y <= -const
        if x == y:
            return self.true_lit() if const <= 0 else self.false_lit()
        return self.atom_var(x, y, -const)

    def true_lit(self) -> int:
        if not hasattr(self, "_true"):
            self._true = self.sat.new_var()
            self.sat.add_clause([self._true])
        return self._true

    def false_lit(self) -> int:
        return -self.true_lit()

    # ---- formulas --------------------------------------------------------

    def lower_formula(self, e, scope) -> int:
        """Returns a SAT literal equisatisfiable with the formula (Tseitin)."""
        lit = self._lower(e, scope)
        return lit

    def _gate_and(self, lits: list[int]) -> int:
        lits = [l for l in lits if l != self.true_lit()]
        if any(l == self.false_lit() for l in lits):
            return self.false_lit()
        if not lits:
            return self.true_lit()
        if len(lits) == 1:
            return lits[0]
        g = self.sat.new_var()
        for l in lits:
            self.sat.add_clause([-g, l])
        self.sat.add_clause([g] + [-l for l in lits])
        return g

    def _gate_or(self, lits: list[int]) -> int:
        return -self._gate_and([-l for l in lits])

    def _lower(self, e, scope) -> int:
        if isinstance(e, str):
            if e in scope:
                return self._lower(scope[e], scope)
            if e == "true":
                return self.true_lit()
            if e == "false":
                return self.false_lit()
            if e in self.env.defines:
                params, _ret, body = self.env.defines[e]
                if params:
                    raise Unsupported(f"macro {e} needs arguments")
                return self._lower(body, scope)
            if self.env.consts.get(e) == "Bool":
                return self.bool_var(e)
            raise Unsupported(f"formula atom {e}")
        head = e[0]
        if head == "and":
            return self._gate_and([self._lower(x, scope) for x in e[1:]])
        if head == "or":
            return self._gate_or([self._lower(x, scope) for x in e[1:]])
        if head == "not":
            return -self._lower(e[1], scope)
        if head == "=>":
            lits = [self._lower(x, scope) for x in e[1:]]
            acc = lits[-1]
            for l in reversed(lits[:-1]):
                acc = self._gate_or([-l, acc])
            return acc
        if head == "xor":
            a, b = (self._lower(x, scope) for x in e[1:3])
            return self._gate_or([self._gate_and([a, -b]), self._gate_and([-a, b])])
        if head == "ite":
            c = self._lower(e[1], scope)
            t = self._lower(e[2], scope)
            f = self._lower(e[3], scope)
            return self._gate_or([self._gate_and([c, t]), self._gate_and([-c, f])])
        if head == "let":
            scope2 = dict(scope)
            for name, val in e[1]:
                scope2[name] = _substitute(val, scope)
            return self._lower(e[2], scope2)
        if head in ("<=", "<", ">=", ">"):
            ca, ka = self.norm_int(e[1], scope)
            cb, kb = self.norm_int(e[2], scope)
            # a <= b  <=>  a - b <= 0
            coeffs = dict(ca)
            for v, c in cb.items():
                coeffs[v] = coeffs.get(v, 0) - c
            const = ka - kb
            if head == "<":
                const += 1
            if head in (">=", ">"):
                coeffs = {v: -c for v, c in coeffs.items()}
                const = -const + (1 if head == ">" else 0)
            return self.atom_from_linear(coeffs, const)
        if head in ("=", "distinct"):
            return self._lower_eq(e, scope)
        if head in self.env.defines:
            params, ret, body = self.env.defines[head]
            scope2 = dict(scope)
            if len(params) != len(e) - 1:
                raise Unsupported(f"arity mismatch for {head}")
            for (p, _s), arg in zip(params, e[1:]):
                scope2[p] = _substitute(arg, scope)
            return self._lower(body, scope2)
        if head in self.env.funs and self.env.funs[head][1] == "Bool":
            name = self.lower_app(e, scope, want="Bool")
            return self.bool_var(name)
        if head in ("forall", "exists"):
            raise Unsupported("quantifiers")
        raise Unsupported(f"formula {sexpr.to_str(e)}")

    def _is_bool(self, e, scope) -> bool:
        if isinstance(e, str):
            if e in scope:
                return self._is_bool(scope[e], scope)
            if e in ("true", "false"):
                return True
            if e in self.env.defines:
                return self.env.defines[e][1] == "Bool"
            return self.env.consts.get(e) == "Bool"
        head = e[0]
        if head in ("and", "or", "not", "=>", "xor", "ite", "=", "distinct", "<=", "<", ">=", ">"):
            return True
        if head in self.env.defines:
            return self.env.defines[head][1] == "Bool"
        if head in self.env.funs:
            return self.env.funs[head][1] == "Bool"
        return False

    def _lower_eq(self, e, scope) -> int:
        args = e[1:]
        pairs = []
        if e[0] == "=":
            pairs = [(args[i], args[i + 1]) for i in range(len(args) - 1)]
            combine, flip = self._gate_and, False
        else:
            pairs = [
                (args[i], args[j]) for i in range(len(args)) for j in range(i + 1, len(args))
            ]
            combine, flip = self._gate_and, True
        lits = []
        for a, b in pairs:
            if self._is_bool(a, scope) and self._is_bool(b, scope):
                la, lb = self._lower(a, scope), self._lower(b, scope)
                both = self._gate_and([la, lb])
                neither = self._gate_and([-la, -lb])
                lit = self._gate_or([both, neither])
            else:
                le1 = self._cmp_le(a, b, scope)
                le2 = self._cmp_le(b, a, scope)
                lit = self._gate_and([le1, le2])
            lits.append(-lit if flip else lit)
        return combine(lits)

    def _cmp_le(self, a, b, scope) -> int:
        ca, ka = self.norm_int(a, scope)
        cb, kb = self.norm_int(b, scope)
        coeffs = dict(ca)
        for v, c in cb.items():
            coeffs[v] = coeffs.get(v, 0) - c
        return self.atom_from_linear(coeffs, ka - kb)

    # ---- congruence closure for Ackermannized applications ---------------

    def add_congruence(self):
        for table in (self.apps_int, self.apps_bool):
            items = list(table.items())
            for i in range(len(items)):
                for j in range(i + 1, len(items)):
                    (f1, _), n1 = items[i]
                    (f2, _), n2 = items[j]
                    if f1 != f2:
                        continue
                    _h1, args1, keys1 = self.app_args[n1]
                    _h2, args2, keys2 = self.app_args[n2]
                    eq_lits = []
                    for k1, k2 in zip(keys1, keys2):
                        coeffs = dict(k1[0])
                        for v, c in k2[0]:
                            coeffs[v] = coeffs.get(v, 0) - c
                        const = k1[1] - k2[1]
                        le1 = self.atom_from_linear(dict(coeffs), const)
                        le2 = self.atom_from_linear({v: -c for v, c in coeffs.items()}, -const)
                        eq_lits.append(self._gate_and([le1, le2]))
                    args_eq = self._gate_and(eq_lits)
                    if table is self.apps_bool:
                        b1, b2 = self.bool_var(n1), self.bool_var(n2)
                        same = self._gate_or(
                            [self._gate_and([b1, b2]), self._gate_and([-b1, -b2])]
                        )
                    else:
                        le1 = self.atom_from_linear({n1: 1, n2: -1}, 0)
                        le2 = self.atom_from_linear({n1: -1, n2: 1}, 0)
                        same = self._gate_and([le1, le2])
                    self.sat.add_clause([-args_eq, same])


def _substitute(e, scope):
    if isinstance(e, str):
        return scope.get(e, e)
    if e and e[0] == "let":
        inner = dict(scope)
        bindings = [[n, _substitute(v, scope)] for n, v in e[1]]
        return ["let", bindings, _substitute(e[2], inner)]
    return [_substitute(x, scope) for x in e]


def check(env: Env, deadline: float | None) -> str:
    low = Lowering(env)
    try:
        for a in env.all_assertions():
            lit = low.lower_formula(a, {})
            low.sat.add_clause([lit])
        low.add_congruence()
    except Unsupported:
        return "unknown"
    for _round in range(20000):
        if deadline is not None and time.monotonic() > deadline:
            return "unknown"
        try:
            ok = low.sat.solve()
        except TimeoutError:
            return "unknown"
        if not ok:
            return "unsat"
        constraints = []
        for v, (x, y, c) in low.atom_of_var.items():
            val = low.sat.assign.get(v)
            if val is True:
                constraints.append((x, y, c, v))
            elif val is False:
                constraints.append((y, x, -c - 1, -v))
        core = dl.check(constraints)
        if core is None:
            return "sat"
        low.sat._backtrack(0)
        low.sat.add_clause([-tag for tag in core])
    return "unknown"


def run(instream, outstream, timeout: float | None, always_unknown: bool) -> None:
    env = Env()
    buf = ""
    depth = 0
    for line in instream:
        buf += line
        depth = _paren_depth(buf)
        if depth > 0:
            continue
        try:
            cmds = sexpr.parse_all(buf)
        except sexpr.SexprError:
            continue
        buf = ""
        for cmd in cmds:
            out = dispatch(env, cmd, timeout, always_unknown)
            if out is not None:
                outstream.write(out + "\n")
                outstream.flush()
            if isinstance(cmd, list) and cmd and cmd[0] == "exit":
                return


def _paren_depth(text: str) -> int:
    depth = 0
    in_str = in_sym = False
    i = 0
    while i < len(text):
        ch = text[i]
        if in_str:
            if ch == '"':
                in_str = False
        elif in_sym:
            if ch == "|":
                in_sym = False
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif ch == '"':
            in_str = True
        elif ch == "|":
            in_sym = True
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        i += 1
    return depth


def dispatch(env: Env, cmd, timeout: float | None, always_unknown: bool) -> str | None:
    if not isinstance(cmd, list) or not cmd:
        return "(error \"bad command\")"
    head = cmd[0]
    try:
        if head in ("set-logic", "set-info", "set-option", "reset-assertions"):
            if head == "reset-assertions":
                env.assertions = [[]]
            return None
        if head == "reset":
            env.__init__()
            return None
        if head == "declare-sort":
            env.sorts[cmd[1]] = int(cmd[2]) if len(cmd) > 2 else 0
            return None
        if head == "declare-const":
            env.consts[cmd[1]] = _sort_name(cmd[2])
            env.decl_stack[-1].append(cmd[1])
            return None
        if head == "declare-fun":
            name, args, ret = cmd[1], cmd[2], _sort_name(cmd[3])
            if not args:
                env.consts[name] = ret
            else:
                env.funs[name] = ([_sort_name(a) for a in args], ret)
            env.decl_stack[-1].append(name)
            return None
        if head == "define-fun":
            name, params, ret, body = cmd[1], cmd[2], _sort_name(cmd[3]), cmd[4]
            env.defines[name] = ([(p[0], _sort_name(p[1])) for p in params], ret, body)
            env.decl_stack[-1].append(name)
            return None
        if head == "assert":
            env.assertions[-1].append(cmd[1])
            return None
        if head == "push":
            for _ in range(int(cmd[1]) if len(cmd) > 1 else 1):
                env.push()
            return None
        if head == "pop":
            for _ in range(int(cmd[1]) if len(cmd) > 1 else 1):
                env.pop()
            return None
        if head == "check-sat":
            if always_unknown:
                return "unknown"
            deadline = time.monotonic() + timeout if timeout else None
            return check(env, deadline)
        if head == "echo":
            return cmd[1].strip('"')
        if head == "exit":
            return None
        if head == "get-info":
            if len(cmd) > 1 and cmd[1] == ":name":
                return '(:name "linset-solve")'
            if len(cmd) > 1 and cmd[1] == ":reason-unknown":
                return '(:reason-unknown "incomplete")'
            return "(:unsupported)"
        return f'(error "unsupported command {head}")'
    except Unsupported as exc:
        return f'(error "{exc}")'
    except Exception as exc:  # keep the session alive on malformed input
        return f'(error "internal: {exc}")'


def _sort_name(s) -> str:
    if isinstance(s, list):
        return s[0]
    return s


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="linset-solve")
    ap.add_argument("--timeout", type=float, default=None, help="per-query seconds")
    ap.add_argument(
        "--always-unknown",
        action="store_true",
        help="stub mode: answer unknown to every check-sat",
    )
    ap.add_argument("files", nargs="*", help="scripts to run instead of stdin")
    ns = ap.parse_args(argv)
    if ns.files:
        for path in ns.files:
            with open(path) as fh:
                run(fh, sys.stdout, ns.timeout, ns.always_unknown)
        return 0
    run(sys.stdin, sys.stdout, ns.timeout, ns.always_unknown)
    return 0


if __name__ == "__main__":
    sys.exit(main())
