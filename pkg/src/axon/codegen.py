"""TAC -> AArch64 lowering: bounds-check elimination, frame layout, templates.

Nothing here is checked by the certificate checker; the differential harness
and the forced-checks A/B run are what keep it honest.
"""

from __future__ import annotations

from dataclasses import dataclass

from axon import asmmach as M
from axon import tac as T
from axon import values as V
from axon.tac import Const

INT_MIN, INT_MAX = V.INT_MIN, V.INT_MAX
TOP = (INT_MIN, INT_MAX)
WIDEN_AFTER = 3


class LayoutError(Exception):
    pass


@dataclass(frozen=True)
class IntervalFact:
    variable: str
    lower: int | None
    upper: int | None
    label: int

    def __post_init__(self):
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ValueError("empty interval")

    def render(self) -> str:
        lo = "-inf" if self.lower is None else str(self.lower)
        hi = "+inf" if self.upper is None else str(self.upper)
        return f"L{self.label}: {self.variable} in [{lo}, {hi}]"


@dataclass
class BceResult:
    program: T.TacProgram
    check_free: frozenset  # labels of array accesses that need no bounds check
    facts: list  # IntervalFact, index operands only

    @property
    def checked(self) -> list:
        return [l for l, c in enumerate(self.program.commands)
                if isinstance(c, (T.ArrayLoad, T.ArrayStore)) and l not in self.check_free]


# -- interval analysis ------------------------------------------------------------

def _fits(lo, hi):
    return (lo, hi) if INT_MIN <= lo and hi <= INT_MAX else TOP


def _iv(state, o):
    if isinstance(o, Const):
        return (o.value, o.value)
    return state[0].get(o, TOP)


def _arith(op, a, b):
    if op == "add":
        return _fits(a[0] + b[0], a[1] + b[1])
    if op == "sub":
        return _fits(a[0] - b[1], a[1] - b[0])
    if op == "mul":
        ps = [x * y for x in a for y in b]
        return _fits(min(ps), max(ps))
    if op == "div" and b[0] == b[1] and b[0] > 0:
        c = b[0]
        return (V.idiv(a[0], c), V.idiv(a[1], c))
    if op == "rem" and b[0] == b[1] and b[0] not in (0, INT_MIN):
        m = abs(b[0]) - 1
        if a[0] >= 0:
            return (0, min(a[1], m))
        if a[1] <= 0:
            return (max(a[0], -m), 0)
        return (-m, m)
    return TOP


_NEG = {"lt": "ge", "ge": "lt", "le": "gt", "gt": "le", "eq": "ne", "ne": "eq"}


def _mentions(fact, v):
    return any(o == v for o in fact[1:])


def _transfer(prog, l, cmd, state):
    """Out-state of cmd along its fallthrough/jump edges (refinement happens per edge)."""
    ivs, rel = state
    d = T.dest(cmd)
    if d is None:
        if isinstance(cmd, T.ArrayStore) and isinstance(cmd.index, str):
            n = prog.arrays[cmd.array][1]
            ivs = dict(ivs)
            lo, hi = ivs.get(cmd.index, TOP)
            lo, hi = max(lo, 0), min(hi, n - 1)  # the access just succeeded
            if lo > hi:
                return None  # it never does
            ivs[cmd.index] = (lo, hi)
        return (ivs, rel)
    ivs = dict(ivs)
    ivs.pop(d, None)
    rel = {b: f for b, f in rel.items() if b != d and not _mentions(f, d)}
    ty = prog.ctx[d]
    if isinstance(cmd, T.AssignConst) and ty == V.INT:
        ivs[d] = (cmd.const.value, cmd.const.value)
    elif isinstance(cmd, T.AssignUnop):
        if cmd.op == "copy":
            if ty == V.INT:
                ivs[d] = _iv(state, cmd.src)
            elif isinstance(cmd.src, str) and cmd.src in state[1] and cmd.src != d:
                rel[d] = state[1][cmd.src]
        elif cmd.op == "neg":
            lo, hi = _iv(state, cmd.src)
            ivs[d] = TOP if lo == INT_MIN else (-hi, -lo)
        elif cmd.op == "not" and isinstance(cmd.src, str) and cmd.src in state[1] and cmd.src != d:
            f = state[1][cmd.src]
            rel[d] = (_NEG[f[0]],) + f[1:]
    elif isinstance(cmd, T.AssignBinop):
        if ty == V.INT:
            ivs[d] = _arith(cmd.op, _iv(state, cmd.lhs), _iv(state, cmd.rhs))
        elif cmd.op in _NEG and d not in (cmd.lhs, cmd.rhs):
            rel[d] = (cmd.op, cmd.lhs, cmd.rhs)
    elif isinstance(cmd, T.ArrayLoad) and isinstance(cmd.index, str) and cmd.index != d:
        n = prog.arrays[cmd.array][1]
        lo, hi = ivs.get(cmd.index, TOP)
        lo, hi = max(lo, 0), min(hi, n - 1)
        if lo > hi:
            return None
        ivs[cmd.index] = (lo, hi)
    for k in [k for k, v in ivs.items() if v == TOP]:
        del ivs[k]
    return (ivs, rel)


def _refine(state, fact, truth):
    """state restricted to paths where fact has the given truth value; None if empty."""
    op, a, b = fact
    if not truth:
        op = _NEG[op]
    ivs = dict(state[0])
    (alo, ahi), (blo, bhi) = _iv(state, a), _iv(state, b)
    if op == "lt":
        ahi, blo = min(ahi, bhi - 1), max(blo, alo + 1)
    elif op == "le":
        ahi, blo = min(ahi, bhi), max(blo, alo)
    elif op == "gt":
        alo, bhi = max(alo, blo + 1), min(bhi, ahi - 1)
    elif op == "ge":
        alo, bhi = max(alo, blo), min(bhi, ahi)
    elif op == "eq":
        alo, ahi = max(alo, blo), min(ahi, bhi)
        blo, bhi = alo, ahi
    if alo > ahi or blo > bhi:
        return None
    if isinstance(a, str):
        ivs[a] = (alo, ahi)
    if isinstance(b, str):
        ivs[b] = (blo, bhi)
    return (ivs, state[1])


def _join(s1, s2):
    if s1 is None:
        return s2
    if s2 is None:
        return s1
    ivs = {}
    for k, (lo, hi) in s1[0].items():
        o = s2[0].get(k)
        if o is not None:
            j = (min(lo, o[0]), max(hi, o[1]))
            if j != TOP:
                ivs[k] = j
    rel = {k: f for k, f in s1[1].items() if s2[1].get(k) == f}
    return (ivs, rel)


def _widen(old, new):
    if old is None:
        return new
    ivs = {}
    for k, (lo, hi) in new[0].items():
        o = old[0].get(k)
        if o is None:
            continue
        j = (lo if lo >= o[0] else INT_MIN, hi if hi <= o[1] else INT_MAX)
        if j != TOP:
            ivs[k] = j
    rel = {k: f for k, f in new[1].items() if old[1].get(k) == f}
    return (ivs, rel)


def _edges(prog, l, out, cmd):
    """(successor, state) pairs with branch refinement applied."""
    res = []
    if out is None:
        return res
    for s, cond in T.successors(prog, l):
        if s == T.EXIT:
            continue
        st = out
        if cond is not None:
            fact = out[1].get(cmd.cond)
            if fact is not None:
                st = _refine(out, fact, cond)
        if st is not None:
            res.append((s, st))
    return res


def interval_states(prog: T.TacProgram) -> list:
    """Per-label in-states (intervals, boolean compare facts); None if unreached."""
    n = len(prog.commands)
    if n == 0:
        return []
    heads = {c.target for l, c in enumerate(prog.commands)
             if isinstance(c, (T.Goto, T.IfGoto)) and c.target <= l}
    ins = [None] * n
    visits = [0] * n
    entry = ({v: (0, 0) for v, t in prog.ctx.items() if t == V.INT}, {})
    ins[0] = entry
    work = {0}
    while work:
        l = min(work)
        work.discard(l)
        cmd = prog.commands[l]
        out = _transfer(prog, l, cmd, ins[l])
        for s, st in _edges(prog, l, out, cmd):
            new = _join(ins[s], st)
            if s in heads:
                visits[s] += 1
                if visits[s] > WIDEN_AFTER:
                    new = _widen(ins[s], new)
            if new != ins[s]:
                ins[s] = new
                work.add(s)
    # one narrowing pass from the post-fixpoint
    nar = [None] * n
    nar[0] = entry
    for l in range(n):
        if ins[l] is None:
            continue
        cmd = prog.commands[l]
        for s, st in _edges(prog, l, _transfer(prog, l, cmd, ins[l]), cmd):
            nar[s] = _join(nar[s], st)
    return nar


def bounds_check_elim(prog: T.TacProgram, enabled: bool = True) -> BceResult:
    if not enabled:
        return BceResult(prog, frozenset(), [])
    try:
        states = interval_states(prog)
    except Exception:  # analysis failure keeps every check
        return BceResult(prog, frozenset(), [])
    free, facts = set(), []
    for l, cmd in enumerate(prog.commands):
        if not isinstance(cmd, (T.ArrayLoad, T.ArrayStore)) or states[l] is None:
            continue
        length = prog.arrays[cmd.array][1]
        lo, hi = _iv(states[l], cmd.index)
        if isinstance(cmd.index, str):
            facts.append(IntervalFact(cmd.index, None if lo == INT_MIN else lo,
                                      None if hi == INT_MAX else hi, l))
        if 0 <= lo and hi < length:
            free.add(l)
    return BceResult(prog, frozenset(free), facts)


# -- layout --------------------------------------------------------------------------

def machine_register(name: str):
    """x19.. for int/bool Regs, d8.. for float Regs; None if outside the pools."""
    c = T.classify(name)
    if c.cls != "reg":
        return None
    if c.kind == V.FLOAT:
        return f"d{7 + c.number}" if c.number <= len(M.FLOAT_POOL) else None
    return f"x{18 + c.number}" if c.number <= len(M.INT_POOL) else None


def _mentioned(prog: T.TacProgram) -> list:
    seen = dict.fromkeys(prog.observables())
    for cmd in prog.commands:
        d = T.dest(cmd)
        if d is not None:
            seen.setdefault(d)
        for o in T.operands(cmd):
            if isinstance(o, str):
                seen.setdefault(o)
    return list(seen)


def _align16(n):
    return (n + 15) // 16 * 16


def assign_layout(prog: T.TacProgram, strict: bool = True) -> M.Layout:
    """Registers for Reg names, frame slots for everything else.

    With strict=False, Reg names that would share a machine register while
    live together (or fall outside the pools) are demoted to stack slots
    instead of raising LayoutError.
    """
    from axon.certcheck import _liveness  # the checker's own liveness, not the optimizer's

    names = _mentioned(prog)
    for v in names:
        if v not in prog.ctx:
            raise LayoutError(f"variable {v} has no type")
    regs = {}
    for v in names:
        r = machine_register(v)
        if r is None and T.classify(v).cls == "reg":
            if strict:
                raise LayoutError(f"{v} is outside the machine register pool")
            continue
        if r is not None:
            regs[v] = r
    if regs:
        clash = _clashes(prog, regs, _liveness(prog))
        if clash:
            if strict:
                a, b = sorted(clash)[0]
                raise LayoutError(f"{a} and {b} share {regs[a]} while both live")
            for pair in clash:
                for v in pair:
                    regs.pop(v, None)
    slots, off = {}, 0
    for v in names:
        if v not in regs:
            slots[v] = off
            off += 8
    bases = {}
    for a, (_, length) in sorted(prog.arrays.items()):
        bases[a] = off
        off += 8 * length
    return M.Layout(regs, slots, bases, _align16(off), {v: prog.ctx[v] for v in names})


def _clashes(prog, regs, live) -> set:
    out = set()
    n = len(prog.commands)
    for l in range(n):
        by = {}
        for v in live[l]:
            r = regs.get(v)
            if r is not None:
                by.setdefault(r, []).append(v)
        for vs in by.values():
            if len(vs) > 1:
                out.update((a, b) for a in vs for b in vs if a < b)
        d = T.dest(prog.commands[l])
        if d in regs:
            for s, _ in T.successors(prog, l):
                if 0 <= s < n:
                    for v in live[s]:
                        if v != d and regs.get(v) == regs[d]:
                            out.add(tuple(sorted((d, v))))
    return out


# -- instruction selection -------------------------------------------------------------

_ICMP = {"lt": "lt", "le": "le", "gt": "gt", "ge": "ge", "eq": "eq", "ne": "ne"}
_FCMP = {"flt": "mi", "fle": "ls", "fgt": "gt", "fge": "ge", "feq": "eq", "fne": "ne"}
_X3 = {"add": M.Add, "sub": M.Sub, "mul": M.Mul, "and": M.And, "or": M.Orr}
_D3 = {"fadd": M.Fadd, "fsub": M.Fsub, "fmul": M.Fmul, "fdiv": M.Fdiv}


def tac_label(l: int) -> str:
    return f"ax{l}"


TERM, DIVZERO, OOB = "ax_term", "ax_divzero", "ax_oob"


class _Gen:
    def __init__(self, prog: T.TacProgram, layout: M.Layout, check_free):
        self.p = prog
        self.lay = layout
        self.free = check_free
        self.out = []
        self.labels = {}

    def emit(self, ins):
        self.out.append(ins)

    def is_float(self, v):
        return self.p.ctx[v] == V.FLOAT

    # memory operands
    def slot(self, v, rt, load: bool):
        off = self.lay.stack_slots[v]
        if off <= M.MAX_LDR_OFFSET:
            self.emit((M.Ldr if load else M.Str)(rt, M.SP, off))
        else:
            self.emit(M.MovImm("x14", off))
            self.emit(M.Add("x14", M.SP, "x14"))
            self.emit((M.Ldr if load else M.Str)(rt, "x14", 0))

    def sp_plus(self, rd, off):
        if off < 4096:
            self.emit(M.AddImm(rd, M.SP, off))
        else:
            self.emit(M.MovImm(rd, off))
            self.emit(M.Add(rd, M.SP, rd))

    # operand fetch
    def xval(self, o, scratch) -> str:
        if isinstance(o, Const):
            self.emit(M.MovImm(scratch, int(o.value)))
            return scratch
        r = self.lay.reg_assign.get(o)
        if r is not None:
            return r
        self.slot(o, scratch, True)
        return scratch

    def dval(self, o, scratch) -> str:
        if isinstance(o, Const):
            bits = V.float_bits(o.value)
            if bits == 0:
                self.emit(M.FmovGen(scratch, M.XZR))
            else:
                self.emit(M.MovImm("x9", V.wrap(bits)))
                self.emit(M.FmovGen(scratch, "x9"))
            return scratch
        r = self.lay.reg_assign.get(o)
        if r is not None:
            return r
        self.slot(o, scratch, True)
        return scratch

    def dst(self, v, scratch):
        """(register to compute into, whether a store to v's slot must follow)."""
        r = self.lay.reg_assign.get(v)
        return (r, False) if r is not None else (scratch, True)

    def put(self, v, reg, spill):
        if spill:
            self.slot(v, reg, False)

    # commands
    def gen(self, l, cmd, fuse, skip_flag):  # noqa: C901
        k = type(cmd)
        if k is T.AssignConst:
            self.gen_const(cmd.dst, cmd.const)
        elif k is T.AssignUnop:
            self.gen_unop(cmd)
        elif k is T.AssignBinop:
            self.gen_binop(cmd, skip_flag)
        elif k is T.AssignFma:
            a = self.dval(cmd.mul_l, "d16")
            b = self.dval(cmd.mul_r, "d17")
            self.emit(M.Fmul("d16", a, b))
            c = self.dval(cmd.addend, "d17")
            rd, sp = self.dst(cmd.dst, "d16")
            self.emit((M.Fsub if cmd.sub else M.Fadd)(rd, c, "d16"))
            self.put(cmd.dst, rd, sp)
        elif k is T.ArrayLoad:
            self.gen_access(l, cmd.array, cmd.index, cmd.dst, None)
        elif k is T.ArrayStore:
            self.gen_access(l, cmd.array, cmd.index, None, cmd.src)
        elif k is T.Goto:
            if cmd.target != l + 1:
                self.emit(M.B(tac_label(cmd.target)))
        elif k is T.IfGoto:
            if cmd.target == l + 1:
                return
            if fuse is not None:
                self.emit(M.Bcond(fuse, tac_label(cmd.target)))
                return
            r = self.xval(cmd.cond, "x10")
            self.emit(M.CmpImm(r, 0))
            self.emit(M.Bcond("ne", tac_label(cmd.target)))
        elif k is T.Print:
            if cmd.kind == V.FLOAT:
                self.move_d("d0", cmd.operand)
            else:
                self.move_x("x0", cmd.operand)
            self.emit(M.Bl("print_" + cmd.kind))
        elif k is T.PrintString:
            self.emit(M.Bl("print_string", cmd.text))
        elif k is T.Halt:
            self.emit(M.B(TERM))
        else:
            raise AssertionError(cmd)

    def move_x(self, rd, o):
        if isinstance(o, Const):
            self.emit(M.MovImm(rd, int(o.value)))
        elif o in self.lay.reg_assign:
            self.emit(M.MovReg(rd, self.lay.reg_assign[o]))
        else:
            self.slot(o, rd, True)

    def move_d(self, rd, o):
        if isinstance(o, Const):
            self.dval(o, rd)
        elif o in self.lay.reg_assign:
            self.emit(M.FmovReg(rd, self.lay.reg_assign[o]))
        else:
            self.slot(o, rd, True)

    def gen_const(self, v, c):
        if self.is_float(v):
            rd, sp = self.dst(v, "d16")
            if sp:  # the bit pattern goes straight to the slot
                self.emit(M.MovImm("x10", V.wrap(V.float_bits(c.value))))
                self.slot(v, "x10", False)
                return
            self.dval(c, rd)
            return
        rd, sp = self.dst(v, "x10")
        self.emit(M.MovImm(rd, int(c.value)))
        self.put(v, rd, sp)

    def gen_unop(self, cmd):
        op, v, s = cmd.op, cmd.dst, cmd.src
        if op == "copy":
            if self.is_float(v):
                self.copy_float(v, s)
            else:
                self.copy_int(v, s)
            return
        if op in ("fneg", "i2f"):
            rd, sp = self.dst(v, "d16")
            if op == "fneg":
                self.emit(M.Fneg(rd, self.dval(s, "d16")))
            else:
                self.emit(M.Scvtf(rd, self.xval(s, "x10")))
            self.put(v, rd, sp)
            return
        rd, sp = self.dst(v, "x10")
        if op == "neg":
            self.emit(M.Neg(rd, self.xval(s, "x10")))
        elif op == "not":
            self.emit(M.EorImm(rd, self.xval(s, "x10"), 1))
        elif op == "f2i":
            self.emit(M.Fcvtzs(rd, self.dval(s, "d16")))
        else:
            raise AssertionError(op)
        self.put(v, rd, sp)

    def copy_int(self, v, s):
        rd = self.lay.reg_assign.get(v)
        if rd is not None:
            if not (isinstance(s, str) and self.lay.reg_assign.get(s) == rd):
                self.move_x(rd, s)
            return
        r = self.xval(s, "x10")
        self.slot(v, r, False)

    def copy_float(self, v, s):
        """Every residence pair: reg<-reg, reg<-stack, stack<-reg, stack<-stack (and constants)."""
        rd = self.lay.reg_assign.get(v)
        if rd is not None:
            if isinstance(s, str) and self.lay.reg_assign.get(s) == rd:
                return
            self.move_d(rd, s)
            return
        if isinstance(s, Const):
            self.gen_const(v, s)
            return
        r = self.dval(s, "d16")
        self.slot(v, r, False)

    def gen_binop(self, cmd, skip_flag):
        op, v = cmd.op, cmd.dst
        if op in _FCMP:
            a = self.dval(cmd.lhs, "d16")
            b = self.dval(cmd.rhs, "d17")
            self.emit(M.Fcmp(a, b))
            if not skip_flag:
                rd, sp = self.dst(v, "x10")
                self.emit(M.Cset(rd, _FCMP[op]))
                self.put(v, rd, sp)
            return
        if op in _D3:
            a = self.dval(cmd.lhs, "d16")
            b = self.dval(cmd.rhs, "d17")
            rd, sp = self.dst(v, "d16")
            self.emit(_D3[op](rd, a, b))
            self.put(v, rd, sp)
            return
        a = self.xval(cmd.lhs, "x10")
        small = isinstance(cmd.rhs, Const) and 0 <= int(cmd.rhs.value) < 4096
        if op in _ICMP:
            if small:
                self.emit(M.CmpImm(a, int(cmd.rhs.value)))
            else:
                self.emit(M.Cmp(a, self.xval(cmd.rhs, "x11")))
            if not skip_flag:
                rd, sp = self.dst(v, "x10")
                self.emit(M.Cset(rd, _ICMP[op]))
                self.put(v, rd, sp)
            return
        rd, sp = self.dst(v, "x10")
        if op in ("add", "sub") and small and not isinstance(cmd.lhs, Const):
            self.emit((M.AddImm if op == "add" else M.SubImm)(rd, a, int(cmd.rhs.value)))
        elif op in _X3:
            self.emit(_X3[op](rd, a, self.xval(cmd.rhs, "x11")))
        elif op in ("beq", "bne"):
            self.emit(M.Eor(rd, a, self.xval(cmd.rhs, "x11")))
            if op == "beq":
                self.emit(M.EorImm(rd, rd, 1))
        elif op in ("div", "rem"):
            b = self.xval(cmd.rhs, "x11")
            self.emit(M.CmpImm(b, 0))
            self.emit(M.Bcond("eq", DIVZERO))
            if op == "div":
                self.emit(M.Sdiv(rd, a, b))
            else:
                # quotient in x12, never one of the operand registers
                self.emit(M.Sdiv("x12", a, b))
                self.emit(M.Msub(rd, "x12", b, a))
        else:
            raise AssertionError(op)
        self.put(v, rd, sp)

    def gen_access(self, l, arr, index, dst, src):
        ty, length = self.p.arrays[arr]
        base = self.lay.array_bases[arr]
        fl = ty == V.FLOAT
        if isinstance(index, Const) and 0 <= index.value < length and \
                base + 8 * index.value <= M.MAX_LDR_OFFSET:
            off = base + 8 * index.value
            if dst is not None:
                rd, sp = self.dst(dst, "d16" if fl else "x10")
                self.emit(M.Ldr(rd, M.SP, off))
                self.put(dst, rd, sp)
            else:
                r = self.dval(src, "d16") if fl else self.xval(src, "x10")
                self.emit(M.Str(r, M.SP, off))
            return
        ri = self.xval(index, "x15")
        if l not in self.free:
            if length < 4096:
                self.emit(M.CmpImm(ri, length))
            else:
                self.emit(M.MovImm("x9", length))
                self.emit(M.Cmp(ri, "x9"))
            self.emit(M.Bcond("hs", OOB))  # unsigned: negative indices fail too
        self.sp_plus("x13", base)
        if dst is not None:
            rd, sp = self.dst(dst, "d16" if fl else "x10")
            self.emit(M.LdrIdx(rd, "x13", ri))
            self.put(dst, rd, sp)
        else:
            r = self.dval(src, "d16") if fl else self.xval(src, "x10")
            self.emit(M.StrIdx(r, "x13", ri))


def _fusable(prog, live_out, targets):
    """Labels l where `b = cmp ...; ifgoto b` can branch on the flags directly.

    Maps the IfGoto label to (condition, skip_flag) where skip_flag says the
    boolean itself is dead and need not be materialized.
    """
    out = {}
    cmds = prog.commands
    for l in range(1, len(cmds)):
        c, prev = cmds[l], cmds[l - 1]
        if not isinstance(c, T.IfGoto) or c.target == l + 1 or l in targets:
            continue
        if not isinstance(prev, T.AssignBinop) or prev.dst != c.cond:
            continue
        cond = _ICMP.get(prev.op) or _FCMP.get(prev.op)
        if cond is None:
            continue
        out[l] = (cond, c.cond not in live_out[l])
    return out


def gen_asm(bce: BceResult, layout: M.Layout) -> M.AsmProgram:
    from axon.certcheck import _liveness

    prog = bce.program
    cmds = prog.commands
    n = len(cmds)
    live = _liveness(prog)
    live_out = [frozenset().union(*(live[s] for s, _ in T.successors(prog, l) if 0 <= s < n))
                for l in range(n)]
    targets = {c.target for c in cmds if isinstance(c, (T.Goto, T.IfGoto))}
    fused = _fusable(prog, live_out, targets)
    g = _Gen(prog, layout, bce.check_free)

    used_x = sorted({r for r in layout.reg_assign.values() if r.startswith("x")}, key=lambda r: int(r[1:]))
    used_d = sorted({r for r in layout.reg_assign.values() if r.startswith("d")}, key=lambda r: int(r[1:]))
    saved = ["x29", "x30"] + used_x + used_d
    save_size = _align16(8 * len(saved))
    total = layout.frame_size + save_size

    # prologue
    if total < 4096:
        g.emit(M.SubImm(M.SP, M.SP, total))
    else:
        g.emit(M.MovImm("x9", total))
        g.emit(M.Sub(M.SP, M.SP, "x9"))
    save_base = _save_base(g, layout.frame_size)
    for i, r in enumerate(saved):
        g.emit(M.Str(r, save_base[0], save_base[1] + 8 * i))
    words = layout.frame_size // 8
    if 0 < words <= 8:
        for i in range(words):
            g.emit(M.Str(M.XZR, M.SP, 8 * i))
    elif words:
        g.emit(M.MovImm("x9", 0))
        g.labels["ax_zero"] = len(g.out)
        g.emit(M.StrIdx(M.XZR, M.SP, "x9"))
        g.emit(M.AddImm("x9", "x9", 1))
        if words < 4096:
            g.emit(M.CmpImm("x9", words))
        else:
            g.emit(M.MovImm("x10", words))
            g.emit(M.Cmp("x9", "x10"))
        g.emit(M.Bcond("lt", "ax_zero"))
    for r in used_x:
        g.emit(M.MovImm(r, 0))
    for r in used_d:
        g.emit(M.FmovGen(r, M.XZR))

    # body
    for l, cmd in enumerate(cmds):
        if l in targets:
            g.labels[tac_label(l)] = len(g.out)
        fuse = fused.get(l)
        nxt = fused.get(l + 1)
        skip = nxt is not None and nxt[1] and isinstance(cmd, T.AssignBinop)
        g.gen(l, cmd, fuse[0] if fuse else None, skip)

    # termination and error blocks
    term = len(g.out)
    g.labels[TERM] = term
    g.emit(M.MovImm("x0", 0))
    save_base = _save_base(g, layout.frame_size)
    for i, r in enumerate(saved):
        g.emit(M.Ldr(r, save_base[0], save_base[1] + 8 * i))
    if total < 4096:
        g.emit(M.AddImm(M.SP, M.SP, total))
    else:
        g.emit(M.MovImm("x9", total))
        g.emit(M.Add(M.SP, M.SP, "x9"))
    g.emit(M.Ret())
    dz = len(g.out)
    g.labels[DIVZERO] = dz
    g.emit(M.MovImm("x0", 2))
    g.emit(M.Bl("fail"))
    oob = len(g.out)
    g.labels[OOB] = oob
    g.emit(M.MovImm("x0", 3))
    g.emit(M.Bl("fail"))
    return M.AsmProgram(g.out, g.labels, layout, term, dz, oob,
                        {v: prog.ctx[v] for v in prog.observables()},
                        dict(prog.arrays), save_size,
                        frozenset(tac_label(l) for l in targets))


def _save_base(g, frame_size):
    if frame_size + 8 * 40 <= M.MAX_LDR_OFFSET:
        return (M.SP, frame_size)
    g.sp_plus("x9", frame_size)
    return ("x9", 0)


def compile_tac(prog: T.TacProgram, bce: bool = True, strict: bool = False) -> M.AsmProgram:
    """boundsCheckElim -> assignLayout -> genAsm.  Never fails on well-formed input
    unless strict layout checking is requested."""
    return gen_asm(bounds_check_elim(prog, bce), assign_layout(prog, strict=strict))
