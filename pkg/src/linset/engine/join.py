"""Join in the disjunction-free domain.

The join keeps what both branches agree on: matched atoms (via the stack
correspondence), pure facts entailed by both sides under the correspondence,
snapshots whose atoms match, and futures with the same shape.  Tokens must
agree (their value terms join through the correspondence); a mismatch is a
linearization-count bug in the proof search.
"""

from __future__ import annotations

from .. import terms as T
from ..logic.assertion import Assertion, FutureAtom, NodeAtom, PastAtom, UpdateToken
from .context import VerifyFailure
from .state import SymState


class Correspondence:
    """Pairs (term_a, term_b) -> joined term; equal terms stay themselves."""

    def __init__(self, ctx):
        self.ctx = ctx
        self.map: dict[tuple, T.Term] = {}

    def pair(self, a: T.Term, b: T.Term, hint: str = "j") -> T.Term:
        if a == b:
            return a
        key = (a, b)
        if key not in self.map:
            self.map[key] = self.ctx.fresh.fresh(hint, a.sort)
        return self.map[key]

    def translate_back(self, side: int) -> dict[T.Term, T.Term]:
        """joined var -> original term of the given side (0=a, 1=b)."""
        return {v: k[side] for k, v in self.map.items()}


def join(sa: SymState, sb: SymState) -> SymState:
    if sa.dead:
        return sb
    if sb.dead:
        return sa
    ctx = sa.ctx
    corr = Correspondence(ctx)
    out = SymState(ctx)
    out.trace = sa.trace + [("join", "")]

    a, b = sa.a, sb.a
    out.a.nset = corr.pair(a.nset, b.nset, "N")
    if a.nset != b.nset:
        out.a.add_pure(T.SubNs(a.nset, out.a.nset))
        out.a.add_pure(T.SubNs(b.nset, out.a.nset))

    # stack correspondence
    for var in a.stack:
        if var in b.stack:
            out.a.stack[var] = corr.pair(a.stack[var], b.stack[var], var)

    # atoms: match by joined address term
    addr_pairs: list[tuple[T.Term, NodeAtom, NodeAtom]] = []
    b_by_addr = dict(b.atoms)
    for addr_a, atom_a in a.atoms.items():
        for addr_b, atom_b in b_by_addr.items():
            if corr_has(corr, addr_a, addr_b) or addr_a == addr_b:
                if atom_a.boxed == atom_b.boxed:
                    addr_pairs.append((corr.pair(addr_a, addr_b), atom_a, atom_b))
                    del b_by_addr[addr_b]
                    break
    for joined_addr, atom_a, atom_b in addr_pairs:
        fields = {}
        for sel in atom_a.fields:
            if sel in atom_b.fields:
                fields[sel] = corr.pair(atom_a.fields[sel], atom_b.fields[sel], f"{sel}")
        flow = None
        if atom_a.flow is not None and atom_b.flow is not None:
            flow = corr.pair(atom_a.flow, atom_b.flow, "flow")
        inflow = []
        for (src_a, val_a) in atom_a.inflow:
            for (src_b, val_b) in atom_b.inflow:
                if src_a == src_b or corr_has(corr, src_a, src_b):
                    inflow.append((corr.pair(src_a, src_b), corr.pair(val_a, val_b, "inval")))
                    break
        out.a.add_atom(NodeAtom(joined_addr, fields, flow, tuple(inflow), atom_a.boxed))

    # pure facts: keep those provable on both sides under the correspondence
    back_a = corr.translate_back(0)
    back_b = corr.translate_back(1)
    hyps_a = sa.hyps()
    hyps_b = sb.hyps()
    candidates: list[T.Formula] = []
    seen = set()

    def consider(f: T.Formula):
        key = repr(f)
        if key not in seen:
            seen.add(key)
            candidates.append(f)

    for f in a.pure:
        consider(_translate(f, _invert(back_a)))
    for f in b.pure:
        consider(_translate(f, _invert(back_b)))
    with ctx.timer.phase("join"):
        for f in candidates:
            fa = _translate(f, back_a)
            fb = _translate(f, back_b)
            if fa == f and fb == f and f in a.pure and f in b.pure:
                out.a.add_pure(f)
                continue
            if ctx.entails(hyps_a, fa) == "yes" and ctx.entails(hyps_b, fb) == "yes":
                out.a.add_pure(f)

    # pasts: order-preserving alignment (the loop body extends the prefix it
    # inherited, so positional matching with consumption pairs the snapshots)
    j = 0
    for pa in a.pasts:
        while j < len(b.pasts):
            joined = _join_past(ctx, corr, pa, b.pasts[j])
            j += 1
            if joined is not None:
                out.a.pasts.append(joined)
                break
    out.a.pasts = _dedup_pasts(out.a.pasts)

    # futures: same written object/selector/values up to the correspondence
    for fa_ in a.futures:
        for fb_ in b.futures:
            jf = _join_future(ctx, corr, fa_, fb_)
            if jf is not None:
                out.a.futures.append(jf)
                break

    out.a.token = _join_token(corr, a.token, b.token)
    return out


def corr_has(corr: Correspondence, a: T.Term, b: T.Term) -> bool:
    return (a, b) in corr.map


def _dedup_pasts(pasts: list[PastAtom]) -> list[PastAtom]:
    """Alpha-equivalent snapshots collapse to the latest one (sound weakening:
    dropping a past only forgets a moment)."""
    import re

    pattern = re.compile(r"[A-Za-z_.'~@0-9]*\$\d+")
    sid_pattern = re.compile(r"past\[\d+\]")

    def shape(p: PastAtom) -> str:
        mapping: dict[str, str] = {}

        def rename(m):
            tok = m.group(0)
            if tok not in mapping:
                mapping[tok] = f"${len(mapping)}"
            return mapping[tok]

        return pattern.sub(rename, sid_pattern.sub("past", p.render()))

    seen: dict[str, int] = {}
    for i, p in enumerate(pasts):
        seen[shape(p)] = i
    keep = sorted(seen.values())
    return [pasts[i] for i in keep]


def _invert(mapping: dict) -> dict:
    return {v: k for k, v in mapping.items()}


def _translate(f: T.Formula, mapping: dict) -> T.Formula:
    from ..interference import _subst_terms

    return _subst_terms(f, mapping, {})


def _join_past(ctx, corr: Correspondence, pa: PastAtom, pb: PastAtom) -> PastAtom | None:
    if len(pa.atoms) != len(pb.atoms) or len(pa.guard) != len(pb.guard):
        return None
    atoms = []
    for xa, xb in zip(pa.atoms, pb.atoms):
        addr = corr.pair(xa.addr, xb.addr) if (xa.addr == xb.addr or corr_has(corr, xa.addr, xb.addr)) else None
        if addr is None:
            return None
        fields = {}
        for sel in xa.fields:
            if sel in xb.fields:
                fields[sel] = corr.pair(xa.fields[sel], xb.fields[sel], f"p{sel}")
        flow = None
        if xa.flow is not None and xb.flow is not None:
            flow = corr.pair(xa.flow, xb.flow, "pflow")
        atoms.append(NodeAtom(addr, fields, flow, (), True))
    guard = []
    for ga, gb in zip(pa.guard, pb.guard):
        back_a = corr.translate_back(0)
        ja = _translate(ga, _invert(back_a))
        jb = _translate(gb, _invert(corr.translate_back(1)))
        if ja != jb:
            return None
        guard.append(ja)
    facts = []
    for fa_ in pa.facts:
        ja = _translate(fa_, _invert(corr.translate_back(0)))
        for fb_ in pb.facts:
            jb = _translate(fb_, _invert(corr.translate_back(1)))
            if ja == jb:
                facts.append(ja)
                break
    nset = corr.pair(pa.nset, pb.nset, "N") if pa.nset and pb.nset else None
    return PastAtom(ctx.next_sid(), tuple(atoms), tuple(facts), tuple(guard), nset)


def _join_future(ctx, corr: Correspondence, fa: FutureAtom, fb: FutureAtom) -> FutureAtom | None:
    if fa.sel != fb.sel or len(fa.pre_fields) != len(fb.pre_fields):
        return None

    def pairable(x, y):
        return x == y or corr_has(corr, x, y)

    if not (pairable(fa.obj, fb.obj) and pairable(fa.old_val, fb.old_val) and pairable(fa.new_val, fb.new_val)):
        return None
    pre = []
    for (sa, va), (sb, vb) in zip(fa.pre_fields, fb.pre_fields):
        if sa != sb:
            return None
        pre.append((sa, corr.pair(va, vb, f"f{sa}")))
    lower = None
    if fa.post_flow_lower is not None and fb.post_flow_lower is not None:
        lower = corr.pair(fa.post_flow_lower, fb.post_flow_lower, "flower")
    members = []
    for ma in fa.members:
        for mb in fb.members:
            if pairable(ma, mb):
                members.append(corr.pair(ma, mb))
                break
    return FutureAtom(
        corr.pair(fa.region, fb.region, "M"),
        corr.pair(fa.obj, fb.obj),
        fa.sel,
        corr.pair(fa.old_val, fb.old_val),
        corr.pair(fa.new_val, fb.new_val),
        tuple(pre),
        lower,
        tuple(members),
    )


def _join_token(corr: Correspondence, ta: UpdateToken, tb: UpdateToken) -> UpdateToken:
    if ta.kind != tb.kind or ta.spec != tb.spec:
        raise VerifyFailure(
            f"update tokens disagree across joined branches ({ta.kind} vs {tb.kind})"
        )
    if ta.kind == "none":
        return ta
    key = corr.pair(ta.key, tb.key, "k") if ta.key is not None else None
    if ta.kind == "obl":
        return UpdateToken("obl", ta.spec, key)
    value = corr.pair(ta.value, tb.value, "v") if ta.value is not None else None
    return UpdateToken("ful", ta.spec, key, value)
