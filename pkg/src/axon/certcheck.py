"""Certificates for TAC optimizations and the executable checker that decides them.

A certificate relates an original TAC program O to a transformed program T.
The checker establishes, by symbolic execution of every reachable T edge
against the O path the certificate maps it to, that T refines O:

(a) T is well-formed TAC and declares the same observables and arrays;
(b) single-program invariants are inductive;
(c) relational invariants (plus the variable map) are preserved;
(d) prints, halting stores and error checks coincide;
(e) no two live register names alias one machine register;
(f) every invariant holds on the zero-initialized entry state.

Expressions are plain tuples so they hash and compare cheaply:
atoms ('O', name) / ('T', name), constants ('k', type, payload) with float
payloads stored as bit patterns, and operator nodes (op, arg, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from axon import tac as T
from axon import values as V
from axon.tac import EXIT, Const
from axon.values import BOOL, FLOAT, INT

ENTRY = -2  # pseudo-label: trans_map[(ENTRY, 0)] is the original entry path

# -- invariants -----------------------------------------------------------------


@dataclass(frozen=True)
class VarEqConst:
    var: str
    const: Const


@dataclass(frozen=True)
class VarEqBinop:
    var: str
    op: str
    lhs: T.Operand
    rhs: T.Operand


@dataclass(frozen=True)
class VarEqFma:
    var: str
    addend: T.Operand
    mul_l: T.Operand
    mul_r: T.Operand
    sub: bool = False


SpInvariant = Union[VarEqConst, VarEqBinop, VarEqFma]


@dataclass(frozen=True)
class TransVarEqOrigVar:
    vt: str
    vo: str


@dataclass(frozen=True)
class TransVarEqConst:
    vt: str
    const: Const


RelInvariant = Union[TransVarEqOrigVar, TransVarEqConst]


@dataclass
class Certificate:
    original: T.TacProgram
    transformed: T.TacProgram
    cmd_map: dict  # T label -> O label
    sp_inv_orig: dict = field(default_factory=dict)  # O label -> tuple of SpInvariant
    sp_inv_trans: dict = field(default_factory=dict)  # T label -> tuple of SpInvariant
    rel_inv: dict = field(default_factory=dict)  # T label -> tuple of RelInvariant
    var_map: dict = field(default_factory=dict)  # T var -> O var name or Const
    trans_map: dict = field(default_factory=dict)  # (L, L') -> tuple of O edges


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    rule: str = ""
    labels: tuple = ()
    reason: str = ""

    def __bool__(self):
        return self.accepted

    def __str__(self):
        if self.accepted:
            return "accept"
        where = ",".join(map(str, self.labels))
        return f"reject ({self.rule}) at [{where}]: {self.reason}"


ACCEPT = Verdict(True)


class Reject(Exception):
    def __init__(self, rule, labels, reason):
        super().__init__(reason)
        self.verdict = Verdict(False, rule, tuple(labels), reason)


# -- expressions ----------------------------------------------------------------


def kconst(ty: str, value) -> tuple:
    if ty == FLOAT:
        return ("k", FLOAT, V.float_bits(value))
    if ty == BOOL:
        return ("k", BOOL, bool(value))
    return ("k", INT, value)


def kvalue(e: tuple):
    return V.bits_float(e[2]) if e[1] == FLOAT else e[2]


def from_const(c: Const) -> tuple:
    return kconst(c.type, c.value)


TRUE = kconst(BOOL, True)
FALSE = kconst(BOOL, False)


def atom(side: str, o: T.Operand) -> tuple:
    return from_const(o) if isinstance(o, Const) else (side, o)


def is_const(e) -> bool:
    return e[0] == "k"


def to_text(e) -> str:
    if e[0] == "k":
        return T.format_operand(Const(e[1], kvalue(e)))
    if e[0] in ("O", "T"):
        return f"{e[0]}.{e[1]}"
    if e[0] == "load":
        return f"{e[1]}{list(e[2]) if e[2] else ''}[{to_text(e[3])}]"
    return f"{e[0]}(" + ", ".join(to_text(a) for a in e[1:]) + ")"


_COMMUTATIVE = frozenset({"add", "mul", "and", "or", "eq", "ne", "beq", "bne",
                          "fadd", "fmul", "feq", "fne"})
_FLIP = {"gt": "lt", "ge": "le", "fgt": "flt", "fge": "fle"}
_NEGATE = {"lt": ("le", True), "le": ("lt", True), "eq": ("ne", False), "ne": ("eq", False),
           "beq": ("bne", False), "bne": ("beq", False), "feq": ("fne", False),
           "fne": ("feq", False)}


def _order(a, b):
    return (a, b) if repr(a) <= repr(b) else (b, a)


def rewrite(op: str, args: tuple) -> tuple:
    """One bottom-up simplification step; args are already simplified."""
    if len(args) == 1:
        a = args[0]
        if op == "copy":
            return a
        if is_const(a):
            return kconst(V.UNOP_SIG[op][1], V.eval_unop(op, kvalue(a)))
        if op in ("not", "neg", "fneg") and a[0] == op:
            return a[1]
        if op == "not" and a[0] in _NEGATE:
            nop, swap = _NEGATE[a[0]]
            return rewrite(nop, (a[2], a[1]) if swap else (a[1], a[2]))
        return (op, a)
    a, b = args
    if op in _FLIP:
        return rewrite(_FLIP[op], (b, a))
    if is_const(a) and is_const(b):
        if not (op in V.TRAPPING and kvalue(b) == 0):
            return kconst(V.BINOP_SIG[op][2], V.eval_binop(op, kvalue(a), kvalue(b)))
    if op in _COMMUTATIVE:
        a, b = _order(a, b)
    zero, one = kconst(INT, 0), kconst(INT, 1)
    if op == "add":
        if a == zero:
            return b
        if b == zero:
            return a
    elif op == "sub":
        if b == zero:
            return a
        if a == b:
            return zero
    elif op == "mul":
        if zero in (a, b):
            return zero
        if a == one:
            return b
        if b == one:
            return a
    elif op in ("and", "or"):
        absorbing, neutral = (FALSE, TRUE) if op == "and" else (TRUE, FALSE)
        if absorbing in (a, b):
            return absorbing
        if a == neutral:
            return b
        if b == neutral or a == b:
            return a
    elif op in ("beq", "bne"):
        for x, y in ((a, b), (b, a)):
            if is_const(y):
                keep = kvalue(y) == (op == "beq")
                return x if keep else rewrite("not", (x,))
    if a == b and op in ("eq", "le", "beq"):
        return TRUE
    if a == b and op in ("ne", "lt", "bne"):
        return FALSE
    return (op, a, b)


class Facts:
    """Equalities known at one program point, closed under union-find.

    Classes may hold one constant and one defining expression; an atom is
    rewritten to its class constant, else to its (simplified) definition,
    else to the class representative (O atoms preferred over T atoms).
    """

    def __init__(self):
        self.parent = {}
        self.const_of = {}
        self.def_of = {}
        self.contradiction = None
        self._memo = {}
        self._busy = set()

    def find(self, a):
        p = self.parent.get(a, a)
        if p == a:
            return a
        root = self.find(p)
        self.parent[a] = root
        return root

    def _merge_payload(self, keep, drop):
        c_keep, c_drop = self.const_of.get(keep), self.const_of.pop(drop, None)
        if c_drop is not None:
            if c_keep is not None and c_keep != c_drop:
                self.contradiction = f"{to_text(c_keep)} = {to_text(c_drop)}"
            else:
                self.const_of[keep] = c_drop
        d_drop = self.def_of.pop(drop, None)
        if d_drop is not None and keep not in self.def_of:
            self.def_of[keep] = d_drop

    def equate(self, a, b):
        """a is an atom; b an atom or a constant."""
        self._memo.clear()
        ra = self.find(a)
        if is_const(b):
            old = self.const_of.get(ra)
            if old is not None and old != b:
                self.contradiction = f"{to_text(a)} = {to_text(old)} and {to_text(b)}"
            self.const_of[ra] = b
            return
        rb = self.find(b)
        if ra == rb:
            return
        keep, drop = sorted((ra, rb))  # 'O' sorts before 'T'
        self.parent[drop] = keep
        self._merge_payload(keep, drop)

    def define(self, a, expr):
        self._memo.clear()
        r = self.find(a)
        self.def_of.setdefault(r, expr)

    def norm(self, e):
        hit = self._memo.get(e)
        if hit is not None:
            return hit
        tag = e[0]
        if tag == "k":
            return e
        if tag in ("O", "T"):
            r = self.find(e)
            c = self.const_of.get(r)
            if c is not None:
                out = c
            elif r in self.def_of and r not in self._busy:
                self._busy.add(r)
                try:
                    out = self.norm(self.def_of[r])
                finally:
                    self._busy.discard(r)
            else:
                out = r
            if not self._busy:
                self._memo[e] = out
            return out
        if tag == "load":
            stores = tuple((self.norm(i), self.norm(v)) for i, v in e[2])
            out = ("load", e[1], stores, self.norm(e[3]))
        else:
            out = rewrite(tag, tuple(self.norm(a) for a in e[1:]))
        if not self._busy:
            self._memo[e] = out
        return out


def sp_expr(inv, side: str) -> tuple:
    """Right-hand side of a single-program invariant as an expression."""
    if isinstance(inv, VarEqConst):
        return from_const(inv.const)
    if isinstance(inv, VarEqBinop):
        return (inv.op, atom(side, inv.lhs), atom(side, inv.rhs))
    prod = ("fmul", atom(side, inv.mul_l), atom(side, inv.mul_r))
    return ("fsub" if inv.sub else "fadd", atom(side, inv.addend), prod)


def simplify(e: tuple, facts=(), side: str = "O") -> tuple:
    """Normalize e under single-program facts about `side` variables."""
    f = Facts()
    for inv in facts:
        if isinstance(inv, VarEqConst):
            f.equate((side, inv.var), from_const(inv.const))
        else:
            f.define((side, inv.var), sp_expr(inv, side))
    return f.norm(e)


def _mentions(inv, name: str) -> bool:
    if inv.var == name:
        return True
    if isinstance(inv, VarEqBinop):
        return name in (inv.lhs, inv.rhs)
    if isinstance(inv, VarEqFma):
        return name in (inv.addend, inv.mul_l, inv.mul_r)
    return False


def strongest_post(cmd, facts) -> list:
    """Facts that hold after cmd given facts before it (kill, then generate)."""
    d = T.dest(cmd)
    if d is None:
        return list(facts)
    out = [f for f in facts if not _mentions(f, d)]
    if isinstance(cmd, AssignConstT):
        out.append(VarEqConst(d, cmd.const))
    elif isinstance(cmd, T.AssignUnop) and cmd.op == "copy" and isinstance(cmd.src, Const):
        out.append(VarEqConst(d, cmd.src))
    elif isinstance(cmd, T.AssignBinop) and d not in (cmd.lhs, cmd.rhs):
        rhs = simplify((cmd.op, atom("O", cmd.lhs), atom("O", cmd.rhs)), facts)
        if is_const(rhs):
            out.append(VarEqConst(d, Const(rhs[1], kvalue(rhs))))
        else:
            out.append(VarEqBinop(d, cmd.op, cmd.lhs, cmd.rhs))
    elif isinstance(cmd, T.AssignFma) and d not in (cmd.addend, cmd.mul_l, cmd.mul_r):
        out.append(VarEqFma(d, cmd.addend, cmd.mul_l, cmd.mul_r, cmd.sub))
    return out


AssignConstT = T.AssignConst


# -- symbolic execution ---------------------------------------------------------


class _Sym:
    """Symbolic state for one side of an edge."""

    __slots__ = ("side", "env", "stores", "events", "conds")

    def __init__(self, side):
        self.side = side
        self.env = {}
        self.stores = {}
        self.events = []
        self.conds = []

    def val(self, o):
        if isinstance(o, Const):
            return from_const(o)
        return self.env.get(o) or (self.side, o)

    def step(self, cmd, cond):
        k = type(cmd)
        if k is T.AssignBinop:
            a, b = self.val(cmd.lhs), self.val(cmd.rhs)
            if cmd.op in V.TRAPPING:
                self.events.append(("div", b))
            self.env[cmd.dst] = (cmd.op, a, b)
        elif k is T.AssignUnop:
            self.env[cmd.dst] = (cmd.op, self.val(cmd.src))
        elif k is T.AssignConst:
            self.env[cmd.dst] = from_const(cmd.const)
        elif k is T.AssignFma:
            prod = ("fmul", self.val(cmd.mul_l), self.val(cmd.mul_r))
            self.env[cmd.dst] = ("fsub" if cmd.sub else "fadd", self.val(cmd.addend), prod)
        elif k is T.ArrayLoad:
            idx = self.val(cmd.index)
            self.events.append(("oob", cmd.array, idx))
            self.env[cmd.dst] = ("load", cmd.array, tuple(self.stores.get(cmd.array, ())), idx)
        elif k is T.ArrayStore:
            idx = self.val(cmd.index)
            self.events.append(("oob", cmd.array, idx))
            self.stores.setdefault(cmd.array, []).append((idx, self.val(cmd.src)))
        elif k is T.Print:
            self.events.append(("print", cmd.kind, self.val(cmd.operand)))
        elif k is T.PrintString:
            self.events.append(("print_s", cmd.text))
        elif k is T.IfGoto and cond is not None:
            c = self.val(cmd.cond)
            self.conds.append(c if cond else ("not", c))


def _norm_events(events, facts: Facts, arrays) -> list:
    out = []
    for ev in events:
        if ev[0] == "div":
            d = facts.norm(ev[1])
            if is_const(d) and d[2] != 0:
                continue
            out.append(("div", d))
        elif ev[0] == "oob":
            i = facts.norm(ev[2])
            if is_const(i) and 0 <= i[2] < arrays[ev[1]][1]:
                continue
            out.append(("oob", ev[1], i))
        elif ev[0] == "print":
            out.append(("print", ev[1], facts.norm(ev[2])))
        else:
            out.append(ev)
    return out


# -- checker-side analyses ------------------------------------------------------


def _liveness(prog: T.TacProgram) -> list:
    """Live-in sets per label; Halt reads every observable scalar."""
    n = len(prog.commands)
    observ = frozenset(prog.observables())
    use = [frozenset(T.uses(c)) | (observ if isinstance(c, T.Halt) else frozenset())
           for c in prog.commands]
    defs = [T.dest(c) for c in prog.commands]
    succ = [[t for t, _ in T.successors(prog, l) if 0 <= t < n] for l in range(n)]
    live = [frozenset()] * n
    changed = True
    while changed:
        changed = False
        for l in range(n - 1, -1, -1):
            out = frozenset().union(*(live[s] for s in succ[l])) if succ[l] else frozenset()
            new = use[l] | (out - {defs[l]} if defs[l] else out)
            if new != live[l]:
                live[l] = new
                changed = True
    return live


def _exec_quiet(cmd, env, label: int, nxt: int) -> bool:
    """Execute a non-observable, non-trapping command on env and confirm that
    control moves from label to nxt; False otherwise."""
    val = lambda o: o.value if isinstance(o, Const) else env[o]  # noqa: E731
    if isinstance(cmd, T.Goto):
        return nxt == cmd.target
    if isinstance(cmd, T.IfGoto):
        if cmd.target == label + 1:
            return nxt == label + 1
        return nxt == (cmd.target if env[cmd.cond] else label + 1)
    if T.may_trap(cmd) or T.dest(cmd) is None:
        return False
    if isinstance(cmd, T.AssignConst):
        env[cmd.dst] = cmd.const.value
    elif isinstance(cmd, T.AssignUnop):
        env[cmd.dst] = val(cmd.src) if cmd.op == "copy" else V.eval_unop(cmd.op, val(cmd.src))
    elif isinstance(cmd, T.AssignBinop):
        env[cmd.dst] = V.eval_binop(cmd.op, val(cmd.lhs), val(cmd.rhs))
    elif isinstance(cmd, T.AssignFma):
        env[cmd.dst] = V.eval_fma(val(cmd.addend), val(cmd.mul_l), val(cmd.mul_r), cmd.sub)
    else:
        return False
    return nxt == label + 1


def _eval_sp_concrete(inv, env) -> bool:
    z = lambda o: o.value if isinstance(o, Const) else env[o]  # noqa: E731
    try:
        if isinstance(inv, VarEqConst):
            rhs = inv.const.value
        elif isinstance(inv, VarEqBinop):
            rhs = V.eval_binop(inv.op, z(inv.lhs), z(inv.rhs))
        else:
            rhs = V.eval_fma(z(inv.addend), z(inv.mul_l), z(inv.mul_r), inv.sub)
    except V.DivByZeroTrap:
        return False
    return V.same_value(env[inv.var], rhs)


def _sp_typed(inv, prog) -> bool:
    ctx = prog.ctx

    def ty(o):
        return o.type if isinstance(o, Const) else ctx.get(o)

    vt = ctx.get(inv.var)
    if vt is None:
        return False
    if isinstance(inv, VarEqConst):
        return isinstance(inv.const, Const) and inv.const.type == vt
    if isinstance(inv, VarEqBinop):
        return V.BINOP_SIG.get(inv.op) == (ty(inv.lhs), ty(inv.rhs), vt)
    return vt == FLOAT and all(ty(o) == FLOAT for o in (inv.addend, inv.mul_l, inv.mul_r))


# -- the checker ----------------------------------------------------------------


class _Checker:
    def __init__(self, cert: Certificate):
        self.c = cert
        self.O = cert.original
        self.T = cert.transformed
        self._facts = {}
        self._rel = {}
        self.o_succ = [T.successors(self.O, l) for l in range(len(self.O.commands))]
        self.t_succ = [T.successors(self.T, l) for l in range(len(self.T.commands))]

    # (a) ------------------------------------------------------------------
    def check_structure(self):
        O, Tp = self.O, self.T
        try:
            T.check_tac_wf(Tp)
        except T.TacWfError as e:
            raise Reject("a", [e.index], f"transformed program ill-formed: {e}")
        if O.observables() != Tp.observables():
            raise Reject("a", [], "observable variable sets differ")
        for n in O.observables():
            if O.ctx[n] != Tp.ctx[n]:
                raise Reject("a", [], f"observable {n} changed type")
        if O.arrays != Tp.arrays:
            raise Reject("a", [], "array declarations differ")
        for lab, invs in self.c.sp_inv_trans.items():
            for inv in invs:
                if not _sp_typed(inv, Tp):
                    raise Reject("a", [lab], f"ill-typed transformed invariant {inv}")
        nt = len(Tp.commands)
        image = set(self.c.cmd_map.values())
        for lab in self.c.sp_inv_orig:
            if lab not in image:
                raise Reject("a", [lab], f"original invariants at O{lab}, which no transformed label maps to")
        for table, what in ((self.c.sp_inv_trans, "transformed invariants"), (self.c.rel_inv, "relations")):
            for lab in table:
                if not (isinstance(lab, int) and 0 <= lab < nt):
                    raise Reject("a", [lab], f"{what} at nonexistent label T{lab}")
        for lab, invs in self.c.sp_inv_orig.items():
            for inv in invs:
                if not _sp_typed(inv, O):
                    raise Reject("a", [lab], f"ill-typed original invariant {inv}")
        for lab, invs in self.c.rel_inv.items():
            for inv in invs:
                self._check_rel_typed(inv.vt, inv.vo if isinstance(inv, TransVarEqOrigVar) else inv.const, lab)
        for vt, vo in self.c.var_map.items():
            self._check_rel_typed(vt, vo, "varmap")

    def _check_rel_typed(self, vt, vo, lab):
        tt = self.T.ctx.get(vt)
        ot = vo.type if isinstance(vo, Const) else self.O.ctx.get(vo)
        if tt is None or ot is None or tt != ot:
            raise Reject("a", [lab] if lab != "varmap" else [], f"ill-typed relation {vt} ~ {vo}")

    # facts at a T label ------------------------------------------------------
    def rel_facts(self, L) -> list:
        hit = self._rel.get(L)
        if hit is not None:
            return hit
        explicit = list(self.c.rel_inv.get(L, ()))
        mentioned = {r.vt for r in explicit}
        pinned = {i.var for i in self.c.sp_inv_trans.get(L, ()) if isinstance(i, VarEqConst)}
        out = []
        for r in explicit:
            out.append((r.vt, r.vo if isinstance(r, TransVarEqOrigVar) else r.const))
        live = self.live[L]
        for vt in sorted(live):
            if vt in self.c.var_map and vt not in mentioned and vt not in pinned:
                out.append((vt, self.c.var_map[vt]))
        self._rel[L] = out
        return out

    def facts_at(self, L) -> Facts:
        f = self._facts.get(L)
        if f is not None:
            return f
        f = Facts()
        for inv in self.c.sp_inv_trans.get(L, ()):
            if isinstance(inv, VarEqConst):
                f.equate(("T", inv.var), from_const(inv.const))
            else:
                f.define(("T", inv.var), sp_expr(inv, "T"))
        for inv in self.c.sp_inv_orig.get(self.c.cmd_map[L], ()):
            if isinstance(inv, VarEqConst):
                f.equate(("O", inv.var), from_const(inv.const))
            else:
                f.define(("O", inv.var), sp_expr(inv, "O"))
        for vt, vo in self.rel_facts(L):
            f.equate(("T", vt), atom("O", vo))
        if f.contradiction:
            raise Reject("b", [L], f"contradictory invariants: {f.contradiction}")
        self._facts[L] = f
        return f

    # (e) ------------------------------------------------------------------
    def check_aliasing(self):
        n = len(self.T.commands)
        for L in range(n):
            if not self.reach[L]:
                continue
            slots = {}
            for v in self.live[L]:
                s = T.machine_slot(v)
                if s is None:
                    continue
                other = slots.setdefault(s, v)
                if other != v:
                    raise Reject("e", [L], f"{other} and {v} share machine register {s} while both live")
            d = T.dest(self.T.commands[L])
            s = T.machine_slot(d) if d else None
            if s is not None:
                for t, _ in self.t_succ[L]:
                    if 0 <= t < n:
                        for v in self.live[t]:
                            if v != d and T.machine_slot(v) == s:
                                raise Reject("e", [L], f"write to {d} clobbers live {v}")

    # (f) ------------------------------------------------------------------
    def check_entry(self):
        """Invariants hold on the zero store.  When original label 0 was
        deleted, the original first runs the certificate's entry path
        (ENTRY, 0) concretely; it must be free of events and back edges."""
        start = self.c.cmd_map.get(0)
        o_env = {n: V.zero_of(t) for n, t in self.O.ctx.items()}
        if start != 0:
            path = self.c.trans_map.get((ENTRY, 0))
            if path is None:
                raise Reject("f", [0], "entry labels are not related")
            at = 0
            for a, b in path:
                if a != at or b == EXIT or b <= a or not 0 <= a < len(self.O.commands):
                    raise Reject("f", [0], "entry path is not a forward original path")
                if not any(t == b for t, _ in T.successors(self.O, a)):
                    raise Reject("f", [0], f"O{a}->O{b} is not an edge of the original")
                if not _exec_quiet(self.O.commands[a], o_env, a, b):
                    raise Reject("f", [0], f"entry path command O{a} has an observable effect")
                at = b
            if at != start:
                raise Reject("f", [0], "entry path does not reach the mapped label")
        t_env = {n: V.zero_of(t) for n, t in self.T.ctx.items()}
        for inv in self.c.sp_inv_trans.get(0, ()):
            if not _eval_sp_concrete(inv, t_env):
                raise Reject("f", [0], f"transformed invariant {_inv_text(inv)} false at entry")
        for inv in self.c.sp_inv_orig.get(start, ()):
            if not _eval_sp_concrete(inv, o_env):
                raise Reject("f", [0], f"original invariant {_inv_text(inv)} false at entry")
        for vt, vo in self.rel_facts(0):
            ov = vo.value if isinstance(vo, Const) else o_env[vo]
            if not V.same_value(t_env[vt], ov):
                raise Reject("f", [0], f"relation {vt} ~ {T.format_operand(vo)} false at entry")

    # structural mapping checks ----------------------------------------------
    def o_path(self, L, L2):
        key = (L, L2)
        path = self.c.trans_map.get(key)
        if path is None:
            raise Reject("c", [L], f"no transition mapping for edge {L}->{L2}")
        path = tuple(path)
        start = self.c.cmd_map.get(L)
        end = EXIT if L2 == EXIT else self.c.cmd_map.get(L2)
        if start is None or end is None:
            raise Reject("c", [L], "command map is not total on reachable labels")
        at = start
        back = 0
        no = len(self.O.commands)
        for (a, b) in path:
            if a != at or not 0 <= a < no:
                raise Reject("c", [L], f"transition path for {L}->{L2} is not connected at O{a}")
            if not any(t == b for t, _ in self.o_succ[a]):
                raise Reject("c", [L], f"O{a}->O{b} is not an edge of the original")
            if b != EXIT and b <= a:
                back += 1
            at = b
        if at != end:
            raise Reject("c", [L], f"transition path for {L}->{L2} ends at O{at}, expected O{end}")
        t_back = 1 if (L2 != EXIT and L2 <= L) else 0
        if back != t_back:
            raise Reject("c", [L], f"edge {L}->{L2} changes the loop back-edge count")
        return path

    def check_stutter_acyclic(self, empty_edges):
        graph = {}
        for a, b in empty_edges:
            graph.setdefault(a, []).append(b)
        state = {}

        def visit(u):
            state[u] = 1
            for v in graph.get(u, ()):
                s = state.get(v)
                if s == 1:
                    raise Reject("c", [u, v], "cycle of transformed steps with no original counterpart")
                if s is None:
                    visit(v)
            state[u] = 2

        for u in list(graph):
            if u not in state:
                visit(u)

    # (b)-(d) per edge ---------------------------------------------------------
    def check_edge(self, L, L2, tcond, path):
        tcmd = self.T.commands[L]
        facts = self.facts_at(L)
        ts = _Sym("T")
        ts.step(tcmd, tcond)
        if ts.conds:
            tc = facts.norm(ts.conds[0])
            if tc == FALSE:
                return  # edge cannot be taken under the invariants
        else:
            tc = TRUE
        os_ = _Sym("O")
        for (a, b) in path:
            cond = None
            for t, c in self.o_succ[a]:
                if t == b:
                    cond = c
            os_.step(self.O.commands[a], cond)
        for oc in os_.conds:
            n = facts.norm(oc)
            if n != TRUE and n != tc:
                raise Reject("d", [L], f"original branch {to_text(n)} not implied by {to_text(tc)}")
        arrays = self.O.arrays
        te = _norm_events(ts.events, facts, arrays)
        oe = _norm_events(os_.events, facts, arrays)
        if te != oe:
            raise Reject("d", [L], f"observations differ on {L}->{L2}: {te} vs {oe}")
        for arr in set(ts.stores) | set(os_.stores):
            a1 = [(facts.norm(i), facts.norm(v)) for i, v in ts.stores.get(arr, ())]
            a2 = [(facts.norm(i), facts.norm(v)) for i, v in os_.stores.get(arr, ())]
            if a1 != a2:
                raise Reject("d", [L], f"array {arr} updates differ on {L}->{L2}")
        if L2 == EXIT:
            for name in self.O.observables():
                tv, ov = facts.norm(ts.val(name)), facts.norm(os_.val(name))
                if tv != ov:
                    raise Reject("d", [L], f"halting value of {name}: {to_text(tv)} vs {to_text(ov)}")
            return
        # (b) invariants at the target, both programs
        fast = None
        for inv in self.c.sp_inv_trans.get(L2, ()):
            if fast is None:
                fast = set(strongest_post(tcmd, self.c.sp_inv_trans.get(L, ())))
            if inv in fast:
                continue
            lhs = facts.norm(ts.val(inv.var))
            rhs = facts.norm(_subst(sp_expr(inv, "T"), ts))
            if lhs != rhs:
                raise Reject("b", [L, L2], f"transformed invariant {_inv_text(inv)} not preserved "
                                          f"({to_text(lhs)} vs {to_text(rhs)})")
        for inv in self.c.sp_inv_orig.get(self.c.cmd_map[L2], ()):
            lhs = facts.norm(os_.val(inv.var))
            rhs = facts.norm(_subst(sp_expr(inv, "O"), os_))
            if lhs != rhs:
                raise Reject("b", [L, L2], f"original invariant {_inv_text(inv)} not preserved "
                                          f"({to_text(lhs)} vs {to_text(rhs)})")
        # (c) relations at the target
        for vt, vo in self.rel_facts(L2):
            lhs = facts.norm(ts.val(vt))
            rhs = facts.norm(os_.val(vo))
            if lhs != rhs:
                raise Reject("c", [L, L2], f"relation {vt} ~ {T.format_operand(vo)} not preserved "
                                          f"({to_text(lhs)} vs {to_text(rhs)})")

    def run(self) -> Verdict:
        try:
            self.check_structure()
            self.reach = T.reachable(self.T)
            self.live = _liveness(self.T)
            no = len(self.O.commands)
            for L, ok in enumerate(self.reach):
                if ok and not (isinstance(self.c.cmd_map.get(L), int) and 0 <= self.c.cmd_map[L] < no):
                    raise Reject("c", [L], "command map is not total on reachable labels")
            self.check_entry()
            self.check_aliasing()
            empty = []
            for L, ok in enumerate(self.reach):
                if not ok:
                    continue
                for L2, cond in self.t_succ[L]:
                    path = self.o_path(L, L2)
                    if not path:
                        if L2 == EXIT:
                            raise Reject("c", [L], "halt mapped to an empty original path")
                        empty.append((L, L2))
                    self.check_edge(L, L2, cond, path)
            self.check_stutter_acyclic(empty)
        except Reject as r:
            return r.verdict
        except (KeyError, TypeError, ValueError, IndexError, AttributeError, RecursionError) as e:
            return Verdict(False, "a", (), f"malformed certificate: {type(e).__name__}: {e}")
        return ACCEPT


def _subst(e, sym: _Sym):
    """Replace the atoms of a pre-state expression with post-state values."""
    tag = e[0]
    if tag == "k":
        return e
    if tag in ("O", "T"):
        return sym.val(e[1])
    return (tag,) + tuple(_subst(a, sym) for a in e[1:])


def _inv_text(inv) -> str:
    if isinstance(inv, VarEqConst):
        return f"{inv.var} = {T.format_operand(inv.const)}"
    return f"{inv.var} = {to_text(sp_expr(inv, 'P'))}"


def check_certificate(cert: Certificate) -> Verdict:
    """Accept iff every rule (a)-(f) is discharged; never raises."""
    try:
        return _Checker(cert).run()
    except Exception as e:  # defensive: the checker must stay total
        return Verdict(False, "a", (), f"checker fault: {type(e).__name__}: {e}")


def identity_certificate(prog: T.TacProgram) -> Certificate:
    n = len(prog.commands)
    tm = {}
    for L in range(n):
        for L2, _ in T.successors(prog, L):
            tm[(L, L2)] = ((L, L2),)
    return Certificate(prog, prog, {L: L for L in range(n)},
                       var_map={v: v for v in prog.ctx}, trans_map=tm)
