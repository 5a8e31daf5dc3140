"""Dataflow analyses over the index-labelled TAC control-flow graph.

None of this code is trusted: every pass that consumes these results emits a
certificate, and the checker recomputes whatever it relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

from axon import tac as T
from axon import values as V
from axon.tac import Const


@dataclass
class Cfg:
    succ: list  # label -> list of in-range successor labels
    pred: list
    reach: list  # label -> bool

    @property
    def n(self):
        return len(self.succ)


def build_cfg(prog: T.TacProgram) -> Cfg:
    n = len(prog.commands)
    succ = [[t for t, _ in T.successors(prog, l) if 0 <= t < n] for l in range(n)]
    pred = [[] for _ in range(n)]
    for l, ss in enumerate(succ):
        for s in ss:
            pred[s].append(l)
    return Cfg(succ, pred, T.reachable(prog))


def jump_targets(prog: T.TacProgram) -> set:
    return {c.target for c in prog.commands if isinstance(c, (T.Goto, T.IfGoto))}


def liveness(prog: T.TacProgram, cfg: Cfg | None = None):
    """(live_in, live_out) per label.  Halt reads every observable scalar."""
    cfg = cfg or build_cfg(prog)
    n = cfg.n
    observ = frozenset(prog.observables())
    use = [frozenset(T.uses(c)) | (observ if isinstance(c, T.Halt) else frozenset())
           for c in prog.commands]
    defs = [T.dest(c) for c in prog.commands]
    live_in = [frozenset()] * n
    live_out = [frozenset()] * n
    changed = True
    while changed:
        changed = False
        for l in range(n - 1, -1, -1):
            out = frozenset().union(*(live_in[s] for s in cfg.succ[l]))
            new = use[l] | (out - {defs[l]} if defs[l] else out)
            live_out[l] = out
            if new != live_in[l]:
                live_in[l] = new
                changed = True
    return live_in, live_out


def dominators(cfg: Cfg) -> list:
    """dom[l] = set of labels dominating l (None for unreachable labels)."""
    n = cfg.n
    every = frozenset(range(n))
    dom = [every if cfg.reach[l] else None for l in range(n)]
    if n:
        dom[0] = frozenset({0})
    changed = True
    while changed:
        changed = False
        for l in range(1, n):
            if not cfg.reach[l]:
                continue
            ps = [dom[p] for p in cfg.pred[l] if cfg.reach[p]]
            new = frozenset.intersection(*ps) | {l} if ps else frozenset({l})
            if new != dom[l]:
                dom[l] = new
                changed = True
    return dom


@dataclass
class Loop:
    header: int
    body: frozenset
    latches: tuple

    def exits(self, cfg: Cfg) -> set:
        return {s for l in self.body for s in cfg.succ[l] if s not in self.body}


def natural_loops(cfg: Cfg, dom=None) -> list:
    """One loop per header (back edges sharing a header are merged), outermost first."""
    dom = dom if dom is not None else dominators(cfg)
    by_header = {}
    for l in range(cfg.n):
        if not cfg.reach[l]:
            continue
        for s in cfg.succ[l]:
            if s in dom[l]:
                by_header.setdefault(s, []).append(l)
    loops = []
    for h, latches in by_header.items():
        body = {h}
        stack = [x for x in latches if x != h]
        body.update(stack)
        while stack:
            x = stack.pop()
            for p in cfg.pred[x]:
                if p not in body and cfg.reach[p]:
                    body.add(p)
                    stack.append(p)
        loops.append(Loop(h, frozenset(body), tuple(latches)))
    loops.sort(key=lambda lp: (-len(lp.body), lp.header))
    return loops


def loop_depth(cfg: Cfg, loops=None) -> list:
    loops = loops if loops is not None else natural_loops(cfg)
    depth = [0] * cfg.n
    for lp in loops:
        for l in lp.body:
            depth[l] += 1
    return depth


# -- forward "must" analyses ----------------------------------------------------

def _forward(prog, cfg, transfer, entry: dict):
    """Forward must-analysis with dict states and intersection meet.

    `entry` is the state on the program's entry edge into label 0.  Returns
    the in-state per label (None for unreachable labels).
    """
    n = cfg.n
    ins = [None] * n
    outs = [None] * n
    work = list(range(n))
    onwork = set(work)
    while work:
        l = work.pop(0)
        onwork.discard(l)
        if not cfg.reach[l]:
            continue
        ps = [outs[p] for p in cfg.pred[l] if outs[p] is not None]
        if l == 0:
            ps.insert(0, entry)
        if not ps:
            continue
        new = dict(ps[0])
        for s in ps[1:]:
            for k in [k for k, v in new.items() if s.get(k) != v]:
                del new[k]
        ins[l] = new
        out = transfer(l, prog.commands[l], new)
        if out != outs[l]:
            outs[l] = out
            for s in cfg.succ[l]:
                if s not in onwork:
                    work.append(s)
                    onwork.add(s)
    return ins


def zero_state(prog) -> dict:
    return {n: Const(t, V.zero_of(t)) for n, t in prog.ctx.items()}


def const_facts(prog: T.TacProgram, cfg: Cfg | None = None) -> list:
    """Per label, the map var -> Const that holds on entry on every path."""
    cfg = cfg or build_cfg(prog)

    def transfer(l, cmd, state):
        d = T.dest(cmd)
        if d is None:
            return state
        out = dict(state)
        out.pop(d, None)
        v = fold(cmd, state)
        if v is not None:
            out[d] = v
        return out

    return _forward(prog, cfg, transfer, zero_state(prog))


def fold(cmd, consts: dict):
    """The constant cmd assigns, given constant operands, or None."""
    def val(o):
        if isinstance(o, Const):
            return o
        return consts.get(o)

    if isinstance(cmd, T.AssignConst):
        return cmd.const
    if isinstance(cmd, T.AssignUnop):
        a = val(cmd.src)
        if a is None:
            return None
        if cmd.op == "copy":
            return a
        sig = V.UNOP_SIG[cmd.op]
        return Const(sig[1], V.eval_unop(cmd.op, a.value))
    if isinstance(cmd, T.AssignBinop):
        a, b = val(cmd.lhs), val(cmd.rhs)
        if a is None or b is None:
            return None
        if cmd.op in V.TRAPPING and b.value == 0:
            return None
        return Const(V.BINOP_SIG[cmd.op][2], V.eval_binop(cmd.op, a.value, b.value))
    if isinstance(cmd, T.AssignFma):
        a, b, c = val(cmd.addend), val(cmd.mul_l), val(cmd.mul_r)
        if a is None or b is None or c is None:
            return None
        return Const("float", V.eval_fma(a.value, b.value, c.value, cmd.sub))
    return None


def expr_key(cmd):
    """Hashable right-hand side of a pure binop/fma command, or None."""
    if isinstance(cmd, T.AssignBinop) and cmd.op not in V.TRAPPING:
        return (cmd.op, cmd.lhs, cmd.rhs)
    if isinstance(cmd, T.AssignFma):
        return ("fms" if cmd.sub else "fma", cmd.addend, cmd.mul_l, cmd.mul_r)
    return None


def available_exprs(prog: T.TacProgram, cfg: Cfg | None = None) -> list:
    """Per label, map expr_key -> var holding it on entry on every path."""
    cfg = cfg or build_cfg(prog)

    def transfer(l, cmd, state):
        d = T.dest(cmd)
        if d is None:
            return state
        out = {k: v for k, v in state.items() if v != d and d not in k[1:]}
        key = expr_key(cmd)
        if key is not None and d not in key[1:] and key not in out:
            out[key] = d
        return out

    return _forward(prog, cfg, transfer, {})


def must_defined(prog: T.TacProgram, cfg: Cfg, region: frozenset, start: int, var: str) -> set:
    """Labels of region whose every in-region path from start passes a definition of var."""
    order = sorted(region)
    state = {l: l != start for l in order}
    changed = True
    while changed:
        changed = False
        for l in order:
            if l == start:
                continue
            ps = [p for p in cfg.pred[l] if p in region]
            v = bool(ps) and all(state[p] or T.dest(prog.commands[p]) == var for p in ps)
            if v != state[l]:
                state[l] = v
                changed = True
    return {l for l in order if state[l]}
