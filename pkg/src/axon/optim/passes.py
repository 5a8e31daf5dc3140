"""The TAC optimization passes.

Each pass maps a TacProgram to a PassResult whose certificate the checker
decides.  Analyses here are untrusted; `stress=True` re-enables two
historically unsound certificate shapes so the checker's rejection paths
can be exercised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from axon import tac as T
from axon import values as V
from axon.certcheck import (Certificate, TransVarEqOrigVar, VarEqBinop,
                            VarEqConst, identity_certificate)
from axon.optim import analysis as An
from axon.optim.rewrite import Edits, RewriteError, apply_edits
from axon.tac import Const


@dataclass
class PassResult:
    name: str
    transformed: T.TacProgram
    cert: Certificate
    stats: dict = field(default_factory=dict)

    @property
    def changed(self) -> bool:
        return not self.transformed.same_shape(self.cert.original)


def _var_map(orig: T.TacProgram, prog: T.TacProgram, live_in=None) -> dict:
    """Identity on variables of both programs that are live somewhere in prog."""
    live_in = live_in if live_in is not None else An.liveness(prog)[0]
    live = frozenset().union(*live_in) if live_in else frozenset()
    return {v: v for v in sorted(live) if v in orig.ctx and orig.ctx[v] == prog.ctx.get(v)}


def _finish(name, orig, edits, *, sp_orig=None, sp_trans=None, rel=None, ctx=None,
            drop_unreachable=False, stats=None, var_map=None) -> PassResult:
    reach = T.reachable(orig) if drop_unreachable else None
    if edits.empty() and ctx is None and (reach is None or all(reach)):
        return PassResult(name, orig, identity_certificate(orig), dict(stats or {}))
    rw = apply_edits(orig, edits, ctx=ctx, drop_unreachable=drop_unreachable)
    prog = rw.program
    sp_orig = sp_orig(rw) if callable(sp_orig) else (sp_orig or {})
    image = set(rw.cmd_map.values())
    sp_orig = {L: invs for L, invs in sp_orig.items() if L in image}
    sp_trans = sp_trans(rw) if callable(sp_trans) else (sp_trans or {})
    rel = rel(rw) if callable(rel) else (rel or {})
    vm = var_map if var_map is not None else _var_map(orig, prog)
    cert = Certificate(orig, prog, rw.cmd_map, sp_inv_orig=sp_orig, sp_inv_trans=sp_trans,
                       rel_inv=rel, var_map=vm, trans_map=rw.trans_map)
    st = dict(stats or {})
    if rw.kept:
        st["deletions_undone"] = len(rw.kept)
    return PassResult(name, prog, cert, st)


def _map_operands(cmd, f):
    """cmd with every operand position passed through f (destinations untouched)."""
    if isinstance(cmd, T.AssignUnop):
        return T.AssignUnop(cmd.dst, cmd.op, f(cmd.src))
    if isinstance(cmd, T.AssignBinop):
        return T.AssignBinop(cmd.dst, cmd.op, f(cmd.lhs), f(cmd.rhs))
    if isinstance(cmd, T.AssignFma):
        return T.AssignFma(cmd.dst, f(cmd.addend), f(cmd.mul_l), f(cmd.mul_r), cmd.sub)
    if isinstance(cmd, T.ArrayLoad):
        return T.ArrayLoad(cmd.dst, cmd.array, f(cmd.index))
    if isinstance(cmd, T.ArrayStore):
        return T.ArrayStore(cmd.array, f(cmd.index), f(cmd.src))
    if isinstance(cmd, T.Print):
        return T.Print(cmd.kind, f(cmd.operand))
    return cmd


def _with_dest(cmd, d):
    if isinstance(cmd, T.AssignConst):
        return T.AssignConst(d, cmd.const)
    if isinstance(cmd, T.AssignUnop):
        return T.AssignUnop(d, cmd.op, cmd.src)
    if isinstance(cmd, T.AssignBinop):
        return T.AssignBinop(d, cmd.op, cmd.lhs, cmd.rhs)
    if isinstance(cmd, T.AssignFma):
        return T.AssignFma(d, cmd.addend, cmd.mul_l, cmd.mul_r, cmd.sub)
    if isinstance(cmd, T.ArrayLoad):
        return T.ArrayLoad(d, cmd.array, cmd.index)
    raise TypeError(cmd)


def _rename(cmd, f):
    c = _map_operands(cmd, lambda o: f(o) if isinstance(o, str) else o)
    if isinstance(c, T.IfGoto):
        c = T.IfGoto(f(c.cond), c.target)
    d = T.dest(c)
    return _with_dest(c, f(d)) if d is not None else c


# -- constant facts shared by CP and RCE -------------------------------------------


def _fact_deps(prog, facts) -> dict:
    """var -> variables whose constant facts feed a folded definition of var."""
    deps = {}
    for L, cmd in enumerate(prog.commands):
        d = T.dest(cmd)
        if d is None or facts[L] is None:
            continue
        deps.setdefault(d, set()).update(u for u in T.uses(cmd) if u in facts[L])
    return deps


def _const_invariants(prog, facts, used: set, rw, extra=()) -> dict:
    """VarEqConst invariants for `used` (closed under fact dependencies) at O labels
    where the variable is live in either program, plus explicit (label, var) pairs."""
    if not used:
        return {}
    deps = _fact_deps(prog, facts)
    need, stack = set(used), list(used)
    while stack:
        for w in deps.get(stack.pop(), ()):
            if w not in need:
                need.add(w)
                stack.append(w)
    o_live = An.liveness(prog)[0]
    t_live = An.liveness(rw.program)[0]
    extra = set(extra)
    out = {}
    for L, st in enumerate(facts):
        if not st:
            continue
        tl = rw.main_label.get(L)
        lv = o_live[L] | (t_live[tl] if tl is not None else frozenset())
        invs = tuple(VarEqConst(v, c) for v, c in sorted(st.items(), key=lambda kv: kv[0])
                     if v in need and (v in lv or (L, v) in extra))
        if invs:
            out[L] = invs
    return out


def constant_propagation(prog: T.TacProgram, stress: bool = False) -> PassResult:
    cfg = An.build_cfg(prog)
    facts = An.const_facts(prog, cfg)
    edits = Edits()
    used = set()
    folded = branches = 0
    for L, cmd in enumerate(prog.commands):
        st = facts[L]
        if not st:
            continue
        d = T.dest(cmd)
        if d is not None and not isinstance(cmd, T.AssignConst):
            v = An.fold(cmd, st)
            if v is not None:
                edits.replace[L] = T.AssignConst(d, v)
                used.update(u for u in T.uses(cmd) if u in st)
                folded += 1
                continue
        if isinstance(cmd, T.IfGoto):
            c = st.get(cmd.cond)
            if c is not None:
                edits.replace[L] = T.Goto(cmd.target if c.value else L + 1)
                used.add(cmd.cond)
                branches += 1
            continue
        hit = [u for u in T.uses(cmd) if u in st]
        if hit:
            edits.replace[L] = _map_operands(cmd, lambda o: st.get(o, o) if isinstance(o, str) else o)
            used.update(hit)
    return _finish("CP", prog, edits,
                   sp_orig=lambda rw: _const_invariants(prog, facts, used, rw),
                   stats={"folded": folded, "branches": branches,
                          "substituted": len(edits.replace) - folded - branches})


def unreachable_code_elimination(prog: T.TacProgram, stress: bool = False) -> PassResult:
    reach = T.reachable(prog)
    removed = reach.count(False)
    return _finish("UCE", prog, Edits(), drop_unreachable=True, stats={"removed": removed})


_COMMUTATIVE_OPS = frozenset({"add", "mul", "and", "or", "eq", "ne", "beq", "bne",
                              "fadd", "fmul", "feq", "fne"})


def common_subexpression_elimination(prog: T.TacProgram, stress: bool = False) -> PassResult:
    cfg = An.build_cfg(prog)
    avail = An.available_exprs(prog, cfg)
    edits = Edits()
    used = {}  # (var holding, key) -> invariant
    for L, cmd in enumerate(prog.commands):
        st = avail[L]
        key = An.expr_key(cmd)
        if not st or key is None:
            continue
        keys = [key]
        if key[0] in _COMMUTATIVE_OPS:
            keys.append((key[0], key[2], key[1]))
        for k in keys:
            t = st.get(k)
            if t is not None and t != cmd.dst:
                edits.replace[L] = T.AssignUnop(cmd.dst, "copy", t)
                used[(t, k)] = _expr_inv(t, k)
                break

    def invariants(rw):
        if not used:
            return {}
        o_live = An.liveness(prog, cfg)[0]
        t_live = An.liveness(rw.program)[0]
        out = {}
        for L, st in enumerate(avail):
            if not st:
                continue
            tl = rw.main_label.get(L)
            lv = o_live[L] | (t_live[tl] if tl is not None else frozenset())
            invs = []
            for k, t in st.items():
                inv = used.get((t, k))
                if inv is not None and t in lv:
                    invs.append(inv)
            if invs:
                out[L] = tuple(sorted(invs, key=repr))
        return out

    return _finish("CSE", prog, edits, sp_orig=invariants, stats={"replaced": len(edits.replace)})


def _expr_inv(t, key):
    from axon.certcheck import VarEqFma
    if key[0] in ("fma", "fms"):
        return VarEqFma(t, key[1], key[2], key[3], key[0] == "fms")
    return VarEqBinop(t, key[0], key[1], key[2])


def dead_assignment_elimination(prog: T.TacProgram, stress: bool = False) -> PassResult:
    cfg = An.build_cfg(prog)
    _, live_out = An.liveness(prog, cfg)
    edits = Edits()
    for L, cmd in enumerate(prog.commands):
        d = T.dest(cmd)
        if d is None or not cfg.reach[L] or T.is_source(d) or d in live_out[L] or T.may_trap(cmd):
            continue
        edits.delete.add(L)

    def rel(rw):
        if not stress:
            return {}
        # the historical certificate: the removed destination still holds the
        # value the dead assignment would have given it
        out = {}
        for L in edits.delete - rw.kept:
            tl = _landing(prog, rw, L + 1)
            if tl is not None:
                d = T.dest(prog.commands[L])
                out.setdefault(tl, ())
                out[tl] += (TransVarEqOrigVar(d, d),)
        return out

    return _finish("DAE", prog, edits, rel=rel, stats={"removed": len(edits.delete)})


def _landing(prog, rw, g):
    while g not in rw.main_label:
        if not 0 <= g < len(prog.commands):
            return None
        c = prog.commands[g]
        g = c.target if isinstance(c, T.Goto) else g + 1
    return rw.main_label[g]


# -- LICM ----------------------------------------------------------------------------


def loop_invariant_constant_motion(prog: T.TacProgram, stress: bool = False) -> PassResult:
    cfg = An.build_cfg(prog)
    dom = An.dominators(cfg)
    loops = An.natural_loops(cfg, dom)
    live_in, _ = An.liveness(prog, cfg)
    taken = set()
    hoists = []  # (loop, def label, var, const, triggering)
    for lp in loops:
        h = lp.header
        if h - 1 in lp.body and (h - 1) in cfg.pred[h] and not isinstance(prog.commands[h - 1], T.Goto):
            continue  # an in-loop fallthrough into the header cannot bypass a preheader
        exits = lp.exits(cfg)
        defs = {}
        for l in sorted(lp.body):
            d = T.dest(prog.commands[l])
            if d is not None:
                defs.setdefault(d, []).append(l)
        for v, ls in sorted(defs.items()):
            if any(l in taken for l in ls):
                continue
            cmds = [prog.commands[l] for l in ls]
            if not all(isinstance(c, T.AssignConst) for c in cmds):
                continue
            if v in live_in[h] or any(v in live_in[e] for e in exits):
                continue
            distinct = len({c.const for c in cmds}) > 1
            if len(ls) > 1 and not (stress and distinct):
                continue
            trig = len(ls) > 1 and any(
                s in lp.body for l in ls[1:] for s in cfg.succ[l])
            hoists.append((lp, ls[0], v, cmds[0].const, trig))
            taken.update(ls)
    edits = Edits()
    for lp, l, v, c, _ in hoists:
        edits.insert.setdefault(lp.header, []).append(T.AssignConst(v, c))
        edits.bypass.setdefault(lp.header, set()).update(lp.body)
        edits.delete.add(l)

    def sp_trans(rw):
        out = {}
        pre_index = {}
        for tl, L in rw.cmd_map.items():
            if tl != rw.main_label.get(L):
                pre_index[tl] = tl - (rw.main_label[L] - len(edits.insert[L]))
        for lp, l, v, c, _ in hoists:
            own = edits.insert[lp.header]
            pos = next(i for i, cmd in enumerate(own) if cmd.dst == v)
            for tl, L in rw.cmd_map.items():
                if L not in lp.body:
                    continue
                if L == lp.header and tl in pre_index and pre_index[tl] <= pos:
                    continue
                out.setdefault(tl, []).append(VarEqConst(v, c))
        return {k: tuple(v) for k, v in out.items()}

    def sp_orig(rw):
        out = {}
        for lp, l, v, c, _ in hoists:
            for L in An.must_defined(prog, cfg, lp.body, lp.header, v):
                out.setdefault(L, []).append(VarEqConst(v, c))
        return {k: tuple(v) for k, v in out.items()}

    return _finish("LICM", prog, edits, sp_orig=sp_orig, sp_trans=sp_trans,
                   stats={"hoisted": len(hoists),
                          "triggering": sum(1 for h in hoists if h[4])})


def redundant_constant_elimination(prog: T.TacProgram, stress: bool = False) -> PassResult:
    cfg = An.build_cfg(prog)
    facts = An.const_facts(prog, cfg)
    edits = Edits()
    used, extra = set(), set()
    for L, cmd in enumerate(prog.commands):
        st = facts[L]
        if st and isinstance(cmd, T.AssignConst) and st.get(cmd.dst) == cmd.const:
            edits.delete.add(L)
            used.add(cmd.dst)
            extra.add((L, cmd.dst))
    return _finish("RCE", prog, edits,
                   sp_orig=lambda rw: _const_invariants(prog, facts, used, rw, extra),
                   stats={"removed": len(edits.delete)})


# -- FMA -------------------------------------------------------------------------------


def fma_fusion(prog: T.TacProgram, stress: bool = False) -> PassResult:
    cfg = An.build_cfg(prog)
    _, live_out = An.liveness(prog, cfg)
    targets = An.jump_targets(prog)
    edits = Edits()
    facts = {}
    busy = set()
    cmds = prog.commands
    for L1 in range(len(cmds) - 1):
        L2 = L1 + 1
        m, a = cmds[L1], cmds[L2]
        if L1 in busy or L2 in targets or not cfg.reach[L1]:
            continue
        if not (isinstance(m, T.AssignBinop) and m.op == "fmul" and not T.is_source(m.dst)):
            continue
        if not (isinstance(a, T.AssignBinop) and a.op in ("fadd", "fsub")):
            continue
        tf = m.dst
        if tf in (m.lhs, m.rhs) or tf == a.dst or tf in live_out[L2]:
            continue
        if a.op == "fadd" and a.rhs == tf and a.lhs != tf:
            addend, sub = a.lhs, False
        elif a.op == "fadd" and a.lhs == tf and a.rhs != tf:
            addend, sub = a.rhs, False
        elif a.op == "fsub" and a.rhs == tf and a.lhs != tf:
            addend, sub = a.lhs, True
        else:
            continue
        edits.delete.add(L1)
        edits.replace[L2] = T.AssignFma(a.dst, addend, m.lhs, m.rhs, sub)
        facts[L2] = (VarEqBinop(tf, "fmul", m.lhs, m.rhs),)
        busy.update((L1, L2))
    return _finish("FMA", prog, edits, sp_orig=facts, stats={"fused": len(facts)})


# -- peephole -----------------------------------------------------------------------

_NEGATED_CMP = {"lt": ("le", True), "le": ("lt", True), "eq": ("ne", False),
                "ne": ("eq", False), "beq": ("bne", False), "bne": ("beq", False),
                "feq": ("fne", False), "fne": ("feq", False)}
_ZERO, _ONE = Const(V.INT, 0), Const(V.INT, 1)


def _identity_copy(cmd):
    """x+0, 0+x, x-0, x*1, 1*x on integers -> copy."""
    if not isinstance(cmd, T.AssignBinop):
        return None
    a, b = cmd.lhs, cmd.rhs
    if cmd.op in ("add", "sub") and b == _ZERO:
        return T.AssignUnop(cmd.dst, "copy", a)
    if cmd.op == "add" and a == _ZERO:
        return T.AssignUnop(cmd.dst, "copy", b)
    if cmd.op == "mul" and b == _ONE:
        return T.AssignUnop(cmd.dst, "copy", a)
    if cmd.op == "mul" and a == _ONE:
        return T.AssignUnop(cmd.dst, "copy", b)
    return None


def peephole(prog: T.TacProgram, stress: bool = False) -> PassResult:
    cfg = An.build_cfg(prog)
    _, live_out = An.liveness(prog, cfg)
    targets = An.jump_targets(prog)
    cmds = prog.commands
    edits = Edits()
    stats = {"identity": 0, "jumps": 0, "coalesced": 0, "negations": 0}
    busy = set()
    n = len(cmds)
    for L in range(n):
        if L in busy or not cfg.reach[L]:
            continue
        c = cmds[L]
        nxt = cmds[L + 1] if L + 1 < n else None
        pair_ok = nxt is not None and L + 1 not in targets and L + 1 not in busy
        d = T.dest(c)
        if pair_ok and d is not None and not T.is_source(d) and d not in live_out[L + 1]:
            if (isinstance(nxt, T.AssignUnop) and nxt.op == "copy" and nxt.src == d
                    and nxt.dst != d):
                edits.replace[L] = _with_dest(_identity_copy(c) or c, nxt.dst)
                edits.delete.add(L + 1)
                busy.update((L, L + 1))
                stats["coalesced"] += 1
                continue
            if (isinstance(c, T.AssignBinop) and c.op in _NEGATED_CMP
                    and isinstance(nxt, T.AssignUnop) and nxt.op == "not" and nxt.src == d
                    and nxt.dst != d):
                op, swap = _NEGATED_CMP[c.op]
                lhs, rhs = (c.rhs, c.lhs) if swap else (c.lhs, c.rhs)
                edits.replace[L] = T.AssignBinop(nxt.dst, op, lhs, rhs)
                edits.delete.add(L + 1)
                busy.update((L, L + 1))
                stats["negations"] += 1
                continue
        if isinstance(c, T.Goto) and c.target == L + 1:
            edits.delete.add(L)
            busy.add(L)
            stats["jumps"] += 1
            continue
        if isinstance(c, T.IfGoto) and c.target == L + 1:
            edits.delete.add(L)
            busy.add(L)
            stats["jumps"] += 1
            continue
        ic = _identity_copy(c)
        if ic is not None:
            edits.replace[L] = ic
            busy.add(L)
            stats["identity"] += 1
    return _finish("P", prog, edits, stats=stats)


# -- register allocation --------------------------------------------------------------

INT_COLORS = 10
FLOAT_COLORS = 8


def _reg_class(ty):
    return "d" if ty == V.FLOAT else "x"


def allocate_registers(prog: T.TacProgram):
    """Greedy priority colouring.  Returns (assignment var -> reg name, spilled list, costs)."""
    cfg = An.build_cfg(prog)
    live_in, live_out = An.liveness(prog, cfg)
    depth = An.loop_depth(cfg)
    cands = {v for v, t in prog.ctx.items() if T.classify(v).cls in ("source", "temp")}
    cost = {}
    adj = {}
    for L, cmd in enumerate(prog.commands):
        if not cfg.reach[L]:
            continue
        w = 10 ** depth[L]
        d = T.dest(cmd)
        for v in T.uses(cmd) + ((d,) if d else ()):
            if v in cands:
                cost[v] = cost.get(v, 0) + w
        if d in cands:
            for u in live_out[L]:
                if u != d and u in cands:
                    adj.setdefault(d, set()).add(u)
                    adj.setdefault(u, set()).add(d)
    entry = sorted(v for v in live_in[0] if v in cands) if live_in else []
    for i, u in enumerate(entry):
        for v in entry[i + 1:]:
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
    color, spilled = {}, []
    for v in sorted(cost, key=lambda v: (-cost[v], v)):
        cls = _reg_class(prog.ctx[v])
        taken = {color[u] for u in adj.get(v, ()) if u in color and _reg_class(prog.ctx[u]) == cls}
        limit = FLOAT_COLORS if cls == "d" else INT_COLORS
        k = next((k for k in range(1, limit + 1) if k not in taken), None)
        if k is None:
            spilled.append(v)
        else:
            color[v] = k
    assign = {v: f"{T.REG_PREFIX[prog.ctx[v]]}{k}" for v, k in color.items()}
    return assign, spilled, cost


def register_allocation(prog: T.TacProgram, stress: bool = False) -> PassResult:
    assign, spilled, cost = allocate_registers(prog)
    f = lambda v: assign.get(v, v)  # noqa: E731
    edits = Edits()
    for L, cmd in enumerate(prog.commands):
        new = _rename(cmd, f)
        if new != cmd:
            edits.replace[L] = new
        if isinstance(cmd, T.Halt):
            backs = [T.AssignUnop(v, "copy", assign[v]) for v in prog.observables() if v in assign]
            if backs:
                edits.insert[L] = backs
    ctx = {v: t for v, t in prog.ctx.items() if T.is_source(v) or v not in assign}
    for v, r in assign.items():
        ctx[r] = prog.ctx[v]
    owner = {}
    for v, r in assign.items():
        owner.setdefault(r, []).append(v)

    def rel(rw):
        t_live = An.liveness(rw.program)[0]
        o_live = An.liveness(prog)[0]
        out = {}
        for tl, lv in enumerate(t_live):
            invs = []
            for r in sorted(lv):
                vs = owner.get(r)
                if not vs:
                    continue
                v = _owner_at(o_live, rw.cmd_map[tl], vs)
                if v is not None:
                    invs.append(TransVarEqOrigVar(r, v))
            if invs:
                out[tl] = tuple(invs)
        return out

    return _finish("RA", prog, edits, ctx=ctx, rel=rel,
                   stats={"allocated": len(assign), "spilled": len(spilled)})


def _owner_at(o_live, L, vs):
    """The variable register-mates vs that is live at original label L, if any.

    Variables sharing a register never interfere, so at most one is live.
    """
    if len(vs) == 1:
        return vs[0]
    here = [v for v in vs if v in o_live[L]]
    return here[0] if here else None


PASSES = {
    "cp": constant_propagation,
    "uce": unreachable_code_elimination,
    "cse": common_subexpression_elimination,
    "dae": dead_assignment_elimination,
    "licm": loop_invariant_constant_motion,
    "rce": redundant_constant_elimination,
    "fma": fma_fusion,
    "p": peephole,
    "ra": register_allocation,
}
