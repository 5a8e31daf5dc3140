"""The AArch64 subset the code generator emits: instructions, simulator, printer.

The simulator pre-decodes every instruction into a closure returning the next
pc, so corpus-scale differential runs stay affordable.  Registers hold wrapped
signed 64-bit ints (x) and Python floats (d); a frame word keeps whichever kind
was stored last and is reinterpreted bit-wise when read as the other kind.

Fuel counts taken backward branches whose target is a TAC label, mirroring
the AST and TAC interpreters.  Print shims are atomic pseudo-calls here and
real `bl`s into a small runtime in the printed text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from typing import Optional

from axon import ast as A
from axon import values as V

# -- registers ---------------------------------------------------------------

RESERVED = frozenset({"x16", "x17", "x18"})
XZR = "xzr"
SP = "sp"
INT_POOL = tuple(f"x{k}" for k in range(19, 29))
FLOAT_POOL = tuple(f"d{k}" for k in range(8, 16))
X_SCRATCH = tuple(f"x{k}" for k in range(9, 16))
D_SCRATCH = ("d16", "d17")

_XREG = re.compile(r"^x([0-9]|[12][0-9]|30)$")
_DREG = re.compile(r"^d([0-9]|[12][0-9]|3[01])$")


def is_xreg(r: str) -> bool:
    return r in (XZR, SP) or bool(_XREG.match(r))


def is_dreg(r: str) -> bool:
    return bool(_DREG.match(r))


# -- instructions -------------------------------------------------------------

@dataclass(frozen=True)
class MovImm:
    rd: str
    imm: int


@dataclass(frozen=True)
class MovReg:
    rd: str
    rn: str


@dataclass(frozen=True)
class Ldr:
    rt: str  # x or d register
    base: str
    off: int = 0


@dataclass(frozen=True)
class Str:
    rt: str
    base: str
    off: int = 0


@dataclass(frozen=True)
class LdrIdx:
    """ldr rt, [base, idx, lsl #3]"""
    rt: str
    base: str
    idx: str


@dataclass(frozen=True)
class StrIdx:
    rt: str
    base: str
    idx: str


@dataclass(frozen=True)
class Add:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Sub:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Mul:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Sdiv:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Msub:
    """rd = ra - rn * rm"""
    rd: str
    rn: str
    rm: str
    ra: str


@dataclass(frozen=True)
class AddImm:
    rd: str
    rn: str
    imm: int


@dataclass(frozen=True)
class SubImm:
    rd: str
    rn: str
    imm: int


@dataclass(frozen=True)
class Neg:
    rd: str
    rn: str


@dataclass(frozen=True)
class And:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Orr:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Eor:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class EorImm:
    rd: str
    rn: str
    imm: int


@dataclass(frozen=True)
class Fadd:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Fsub:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Fmul:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Fdiv:
    rd: str
    rn: str
    rm: str


@dataclass(frozen=True)
class Fneg:
    rd: str
    rn: str


@dataclass(frozen=True)
class FmovReg:
    rd: str
    rn: str


@dataclass(frozen=True)
class FmovGen:
    """fmov dN, xM: raw bit transfer"""
    rd: str
    rn: str


@dataclass(frozen=True)
class Scvtf:
    rd: str
    rn: str


@dataclass(frozen=True)
class Fcvtzs:
    rd: str
    rn: str


@dataclass(frozen=True)
class Cmp:
    rn: str
    rm: str


@dataclass(frozen=True)
class CmpImm:
    rn: str
    imm: int


@dataclass(frozen=True)
class Fcmp:
    rn: str
    rm: str


@dataclass(frozen=True)
class Cset:
    rd: str
    cond: str


@dataclass(frozen=True)
class B:
    label: str


@dataclass(frozen=True)
class Bcond:
    cond: str
    label: str


@dataclass(frozen=True)
class Bl:
    sym: str  # print_int | print_float | print_bool | print_string | fail
    text: Optional[str] = None


@dataclass(frozen=True)
class Ret:
    pass


MAX_LDR_OFFSET = 32760  # scaled unsigned 12-bit offset for 8-byte accesses
CONDS = ("eq", "ne", "lt", "le", "gt", "ge", "hs", "mi", "ls")
PRINT_SYMS = ("print_int", "print_float", "print_bool", "print_string")
BL_SYMS = PRINT_SYMS + ("fail",)

_D3 = {Fadd: "fadd", Fsub: "fsub", Fmul: "fmul", Fdiv: "fdiv"}
_X3 = {Add: "add", Sub: "sub", Mul: "mul", Sdiv: "sdiv", And: "and", Orr: "orr", Eor: "eor"}


def registers(ins) -> list:
    """Every register name an instruction mentions."""
    out = []
    for f in fields(ins):
        if f.name in ("rd", "rn", "rm", "ra", "rt", "base", "idx"):
            out.append(getattr(ins, f.name))
    return out


# -- programs -----------------------------------------------------------------

@dataclass
class Layout:
    reg_assign: dict  # TAC Reg name -> machine register
    stack_slots: dict  # variable -> frame offset
    array_bases: dict  # array -> frame offset
    frame_size: int
    var_types: dict = field(default_factory=dict)  # every laid-out scalar -> value type

    def location(self, var: str):
        r = self.reg_assign.get(var)
        return r if r is not None else self.stack_slots[var]


@dataclass
class AsmProgram:
    instrs: list
    labels: dict  # symbol -> instruction index
    layout: Layout
    term_block: int
    div_zero_block: int
    oob_block: int
    observables: dict  # Source scalar -> type
    arrays: dict  # array -> (elem type, length)
    save_size: int = 0  # bytes of callee-save area above the frame
    tac_labels: frozenset = frozenset()  # symbols standing for TAC labels

    @property
    def total_frame(self) -> int:
        return self.layout.frame_size + self.save_size


class SimFault(Exception):
    def __init__(self, pc: int, kind: str):
        super().__init__(f"pc {pc}: {kind}")
        self.pc, self.kind = pc, kind


class _OutOfFuel(Exception):
    pass


def check_reserved(p: AsmProgram) -> list:
    """(index, register) for every mention of x16/x17/x18."""
    return [(i, r) for i, ins in enumerate(p.instrs) for r in registers(ins) if r in RESERVED]


# -- simulator ----------------------------------------------------------------

_BASE = 1 << 20
_POISON = 0x5A5A5A5A5A5A5A5A
_M64 = V.MASK64


def _xi(r: str, pc: int) -> int:
    if r == XZR:
        return 31
    if r == SP:
        return 32
    m = _XREG.match(r)
    if not m or r in RESERVED:
        raise SimFault(pc, f"bad x register {r}")
    return int(m.group(1))


def _di(r: str, pc: int) -> int:
    m = _DREG.match(r)
    if not m:
        raise SimFault(pc, f"bad d register {r}")
    return int(m.group(1))


_COND = {
    "eq": lambda f: f[1],
    "ne": lambda f: not f[1],
    "lt": lambda f: f[0] != f[3],
    "le": lambda f: f[1] or f[0] != f[3],
    "gt": lambda f: not f[1] and f[0] == f[3],
    "ge": lambda f: f[0] == f[3],
    "hs": lambda f: f[2],
    "mi": lambda f: f[0],
    "ls": lambda f: not f[2] or f[1],
}


class _Machine:
    def __init__(self, p: AsmProgram, fuel: int):
        self.p = p
        self.X = [0] * 33
        self.D = [0.0] * 32
        self.F = [False, False, False, False]
        total = p.total_frame
        if total % 16:
            raise SimFault(0, "frame size not 16-byte aligned")
        self.mem = [0] * (total // 8)
        self.X[32] = _BASE + total
        self.out = []
        self.fuel = fuel
        self.count = 0
        self.code = [self._decode(i, ins) for i, ins in enumerate(p.instrs)]

    # memory
    def _slot(self, addr: int, pc: int) -> int:
        i = (addr - _BASE) >> 3
        if addr & 7 or not 0 <= i < len(self.mem):
            raise SimFault(pc, f"memory access at {addr:#x} outside the frame")
        return i

    def _target(self, label: str, pc: int) -> int:
        t = self.p.labels.get(label)
        if t is None:
            raise SimFault(pc, f"unresolved label {label}")
        return t

    def _decode(self, pc: int, ins):  # noqa: C901 - one arm per instruction form
        X, D, F, mem = self.X, self.D, self.F, self.mem
        nxt = pc + 1
        wrap = V.wrap
        k = type(ins)
        if k is MovImm:
            d, v = _xi(ins.rd, pc), wrap(ins.imm)

            def f():
                X[d] = v
                return nxt
        elif k is MovReg:
            d, n = _xi(ins.rd, pc), _xi(ins.rn, pc)

            def f():
                X[d] = X[n]
                return nxt
        elif k in (Ldr, Str):
            b, off = _xi(ins.base, pc), ins.off
            if off % 8 or not 0 <= off <= MAX_LDR_OFFSET:
                raise SimFault(pc, f"offset {off} not encodable")
            slot = self._slot
            if is_dreg(ins.rt):
                t = _di(ins.rt, pc)
                if k is Ldr:
                    def f():
                        v = mem[slot(X[b] + off, pc)]
                        D[t] = v if type(v) is float else V.bits_float(v)
                        return nxt
                else:
                    def f():
                        mem[slot(X[b] + off, pc)] = D[t]
                        return nxt
            else:
                t = _xi(ins.rt, pc)
                if k is Ldr:
                    def f():
                        v = mem[slot(X[b] + off, pc)]
                        X[t] = v if type(v) is int else wrap(V.float_bits(v))
                        return nxt
                else:
                    def f():
                        mem[slot(X[b] + off, pc)] = X[t]
                        return nxt
        elif k in (LdrIdx, StrIdx):
            b, ix = _xi(ins.base, pc), _xi(ins.idx, pc)
            slot = self._slot
            if is_dreg(ins.rt):
                t = _di(ins.rt, pc)
                if k is LdrIdx:
                    def f():
                        v = mem[slot(X[b] + (X[ix] << 3), pc)]
                        D[t] = v if type(v) is float else V.bits_float(v)
                        return nxt
                else:
                    def f():
                        mem[slot(X[b] + (X[ix] << 3), pc)] = D[t]
                        return nxt
            else:
                t = _xi(ins.rt, pc)
                if k is LdrIdx:
                    def f():
                        v = mem[slot(X[b] + (X[ix] << 3), pc)]
                        X[t] = v if type(v) is int else wrap(V.float_bits(v))
                        return nxt
                else:
                    def f():
                        mem[slot(X[b] + (X[ix] << 3), pc)] = X[t]
                        return nxt
        elif k in (Add, Sub, Mul, And, Orr, Eor):
            d, n, m = _xi(ins.rd, pc), _xi(ins.rn, pc), _xi(ins.rm, pc)
            op = {Add: lambda a, b: wrap(a + b), Sub: lambda a, b: wrap(a - b),
                  Mul: lambda a, b: wrap(a * b), And: lambda a, b: a & b,
                  Orr: lambda a, b: a | b, Eor: lambda a, b: a ^ b}[k]

            def f():
                X[d] = op(X[n], X[m])
                X[31] = 0
                return nxt
        elif k is Sdiv:
            d, n, m = _xi(ins.rd, pc), _xi(ins.rn, pc), _xi(ins.rm, pc)
            dz = self.p.div_zero_block

            def f():
                if X[m] == 0:
                    return dz
                X[d] = V.idiv(X[n], X[m])
                return nxt
        elif k is Msub:
            d, n, m, a = (_xi(r, pc) for r in (ins.rd, ins.rn, ins.rm, ins.ra))

            def f():
                X[d] = wrap(X[a] - X[n] * X[m])
                return nxt
        elif k in (AddImm, SubImm):
            d, n = _xi(ins.rd, pc), _xi(ins.rn, pc)
            imm = ins.imm if k is AddImm else -ins.imm
            if not 0 <= ins.imm < 4096:
                raise SimFault(pc, f"immediate {ins.imm} not encodable")
            if d == 32 or n == 32:
                def f():
                    X[d] = X[n] + imm  # sp arithmetic is plain address arithmetic
                    return nxt
            else:
                def f():
                    X[d] = wrap(X[n] + imm)
                    return nxt
        elif k is Neg:
            d, n = _xi(ins.rd, pc), _xi(ins.rn, pc)

            def f():
                X[d] = wrap(-X[n])
                return nxt
        elif k is EorImm:
            d, n, imm = _xi(ins.rd, pc), _xi(ins.rn, pc), ins.imm

            def f():
                X[d] = X[n] ^ imm
                return nxt
        elif k in _D3:
            d, n, m = _di(ins.rd, pc), _di(ins.rn, pc), _di(ins.rm, pc)
            op = V.BINOPS[_D3[k]]

            def f():
                D[d] = op(D[n], D[m])
                return nxt
        elif k is Fneg:
            d, n = _di(ins.rd, pc), _di(ins.rn, pc)

            def f():
                D[d] = -D[n]
                return nxt
        elif k is FmovReg:
            d, n = _di(ins.rd, pc), _di(ins.rn, pc)

            def f():
                D[d] = D[n]
                return nxt
        elif k is FmovGen:
            d, n = _di(ins.rd, pc), _xi(ins.rn, pc)

            def f():
                D[d] = V.bits_float(X[n])
                return nxt
        elif k is Scvtf:
            d, n = _di(ins.rd, pc), _xi(ins.rn, pc)

            def f():
                D[d] = float(X[n])
                return nxt
        elif k is Fcvtzs:
            d, n = _xi(ins.rd, pc), _di(ins.rn, pc)

            def f():
                X[d] = V.f2i(D[n])
                return nxt
        elif k in (Cmp, CmpImm):
            n = _xi(ins.rn, pc)
            if k is CmpImm:
                if not 0 <= ins.imm < 4096:
                    raise SimFault(pc, f"immediate {ins.imm} not encodable")
                imm = ins.imm
                m = None
            else:
                m = _xi(ins.rm, pc)

            def f():
                a = X[n]
                b = imm if m is None else X[m]
                r = wrap(a - b)
                F[0] = r < 0
                F[1] = r == 0
                F[2] = (a & _M64) >= (b & _M64)
                F[3] = (a - b) != r
                return nxt
        elif k is Fcmp:
            n, m = _di(ins.rn, pc), _di(ins.rm, pc)

            def f():
                a, b = D[n], D[m]
                if a != a or b != b:
                    F[:] = (False, False, True, True)
                elif a == b:
                    F[:] = (False, True, True, False)
                elif a < b:
                    F[:] = (True, False, False, False)
                else:
                    F[:] = (False, False, True, False)
                return nxt
        elif k is Cset:
            d = _xi(ins.rd, pc)
            if ins.cond not in _COND:
                raise SimFault(pc, f"bad condition {ins.cond}")
            c = _COND[ins.cond]

            def f():
                X[d] = 1 if c(F) else 0
                return nxt
        elif k is B:
            t = self._target(ins.label, pc)
            f = self._branch(pc, t, ins.label, None)
        elif k is Bcond:
            t = self._target(ins.label, pc)
            if ins.cond not in _COND:
                raise SimFault(pc, f"bad condition {ins.cond}")
            f = self._branch(pc, t, ins.label, _COND[ins.cond])
        elif k is Bl:
            f = self._call(pc, ins)
        elif k is Ret:
            end = len(self.p.instrs)
            top = _BASE + self.p.total_frame

            def f():
                if X[32] != top:
                    raise SimFault(pc, "ret with unbalanced stack")
                return end
        else:
            raise SimFault(pc, f"unknown instruction {ins!r}")
        return f

    def _branch(self, pc, t, label, cond):
        F = self.F
        counted = t <= pc and label in self.p.tac_labels
        nxt = pc + 1
        m = self
        if cond is None and not counted:
            return lambda: t
        if cond is None:
            def f():
                if m.fuel <= 0:
                    raise _OutOfFuel()
                m.fuel -= 1
                return t
            return f
        if not counted:
            return lambda: t if cond(F) else nxt

        def g():
            if not cond(F):
                return nxt
            if m.fuel <= 0:
                raise _OutOfFuel()
            m.fuel -= 1
            return t
        return g

    def _call(self, pc, ins):
        X, D, out = self.X, self.D, self.out
        nxt = pc + 1
        sym = ins.sym
        if sym not in BL_SYMS:
            raise SimFault(pc, f"unknown runtime symbol {sym}")

        def clobber():
            # caller-saved registers do not survive a call into the C runtime
            for i in range(0, 16):
                X[i] = _POISON
            X[30] = nxt
            for i in list(range(0, 8)) + list(range(16, 32)):
                D[i] = V.bits_float(_POISON)

        def f():
            if X[32] & 15:
                raise SimFault(pc, "sp misaligned at call")
            if sym == "print_int":
                out.append(A.OutputEvent("int", X[0]))
            elif sym == "print_bool":
                out.append(A.OutputEvent("bool", X[0] != 0))
            elif sym == "print_float":
                out.append(A.OutputEvent("float", D[0]))
            elif sym == "print_string":
                out.append(A.OutputEvent("string", ins.text))
            else:
                raise SimFault(pc, "runtime failure call outside an error block")
            clobber()
            return nxt
        return f

    # final store
    def read_var(self, var: str, ty: str):
        lay = self.p.layout
        r = lay.reg_assign.get(var)
        if r is not None:
            if is_dreg(r):
                v = self.D[_di(r, -1)]
            else:
                v = self.X[_xi(r, -1)]
        else:
            v = self.mem[lay.stack_slots[var] // 8]
        return _as_type(v, ty)

    def store(self):
        lay = self.p.layout
        scalars = {n: self.read_var(n, t) for n, t in self.p.observables.items()}
        arrays = {}
        for n, (ty, length) in self.p.arrays.items():
            base = lay.array_bases[n] // 8
            arrays[n] = tuple(_as_type(self.mem[base + i], ty) for i in range(length))
        return scalars, arrays


def _as_type(v, ty):
    if ty == V.FLOAT:
        return v if type(v) is float else V.bits_float(v)
    if type(v) is float:
        v = V.wrap(V.float_bits(v))
    if ty == V.BOOL:
        if v not in (0, 1):
            raise SimFault(-1, f"boolean register holds {v}")
        return v == 1
    return v


@dataclass
class SimResult:
    behavior: A.Behavior
    count: int


def run(p: AsmProgram, fuel: int = 10**7) -> SimResult:
    """Execute p from index 0; see `simulate`."""
    m = _Machine(p, fuel)
    code = m.code
    end = len(code)
    stop = min(p.term_block, p.div_zero_block, p.oob_block)
    pc = 0
    count = 0
    try:
        while pc < stop:
            pc = code[pc]()
            count += 1
    except _OutOfFuel:
        return SimResult(A.Behavior(A.DIVERGE, tuple(m.out)), count + 1)
    except IndexError as e:
        raise SimFault(pc, f"index error: {e}") from None
    if pc == p.div_zero_block:
        return SimResult(A.Behavior(A.DIV_BY_ZERO, tuple(m.out)), count)
    if pc == p.oob_block:
        return SimResult(A.Behavior(A.OUT_OF_BOUNDS, tuple(m.out)), count)
    if pc != p.term_block:
        raise SimFault(pc, "control left the program body")
    scalars, arrays = m.store()
    while pc < end:
        if pc >= p.div_zero_block:
            raise SimFault(pc, "fell into an error block from the termination block")
        pc = code[pc]()
        count += 1
    return SimResult(A.Behavior(A.HALT, tuple(m.out), scalars, arrays), count)


def simulate(p: AsmProgram, fuel: int = 10**7) -> A.Behavior:
    return run(p, fuel).behavior


class DivergeError(Exception):
    pass


def count_dynamic_instructions(p: AsmProgram, fuel: int = 10**7) -> int:
    r = run(p, fuel)
    if r.behavior.kind == A.DIVERGE:
        raise DivergeError("program did not terminate within the fuel bound")
    return r.count


# -- pretty printer -------------------------------------------------------------

@dataclass(frozen=True)
class Target:
    name: str
    sym_prefix: str
    local_prefix: str

    def sym(self, s: str) -> str:
        return self.sym_prefix + s

    def local(self, s: str) -> str:
        return self.local_prefix + s


LINUX = Target("linux", "", ".L")
MACOS = Target("macos", "_", "L")
TARGETS = {"linux": LINUX, "macos": MACOS}


def _imm_lines(rd: str, imm: int) -> list:
    if -65536 <= imm < 65536:
        return [f"mov {rd}, #{imm}"]
    u = imm & _M64
    chunks = [(u >> s) & 0xFFFF for s in (0, 16, 32, 48)]
    lines = [f"movz {rd}, #{chunks[0]}"]
    for i in range(1, 4):
        if chunks[i]:
            lines.append(f"movk {rd}, #{chunks[i]}, lsl #{16 * i}")
    return lines


def _mem(base, off):
    return f"[{base}, #{off}]" if off else f"[{base}]"


def format_instr(ins, tgt: Target = LINUX, strings: dict | None = None) -> list:
    """Assembly lines for one instruction (MovImm may expand to movz/movk)."""
    k = type(ins)
    L = tgt.local
    if k is MovImm:
        return _imm_lines(ins.rd, ins.imm)
    if k is MovReg:
        return [f"mov {ins.rd}, {ins.rn}"]
    if k is Ldr:
        return [f"ldr {ins.rt}, {_mem(ins.base, ins.off)}"]
    if k is Str:
        return [f"str {ins.rt}, {_mem(ins.base, ins.off)}"]
    if k is LdrIdx:
        return [f"ldr {ins.rt}, [{ins.base}, {ins.idx}, lsl #3]"]
    if k is StrIdx:
        return [f"str {ins.rt}, [{ins.base}, {ins.idx}, lsl #3]"]
    if k in _X3:
        return [f"{_X3[k]} {ins.rd}, {ins.rn}, {ins.rm}"]
    if k in _D3:
        return [f"{_D3[k]} {ins.rd}, {ins.rn}, {ins.rm}"]
    if k is Msub:
        return [f"msub {ins.rd}, {ins.rn}, {ins.rm}, {ins.ra}"]
    if k is AddImm:
        return [f"add {ins.rd}, {ins.rn}, #{ins.imm}"]
    if k is SubImm:
        return [f"sub {ins.rd}, {ins.rn}, #{ins.imm}"]
    if k is Neg:
        return [f"neg {ins.rd}, {ins.rn}"]
    if k is EorImm:
        return [f"eor {ins.rd}, {ins.rn}, #{ins.imm}"]
    if k is Fneg:
        return [f"fneg {ins.rd}, {ins.rn}"]
    if k in (FmovReg, FmovGen):
        return [f"fmov {ins.rd}, {ins.rn}"]
    if k is Scvtf:
        return [f"scvtf {ins.rd}, {ins.rn}"]
    if k is Fcvtzs:
        return [f"fcvtzs {ins.rd}, {ins.rn}"]
    if k is Cmp:
        return [f"cmp {ins.rn}, {ins.rm}"]
    if k is CmpImm:
        return [f"cmp {ins.rn}, #{ins.imm}"]
    if k is Fcmp:
        return [f"fcmp {ins.rn}, {ins.rm}"]
    if k is Cset:
        return [f"cset {ins.rd}, {ins.cond}"]
    if k is B:
        return [f"b {L(ins.label)}"]
    if k is Bcond:
        return [f"b.{ins.cond} {L(ins.label)}"]
    if k is Bl:
        lines = []
        if ins.sym == "print_string":
            s = L((strings or {}).get(ins.text, "str0"))
            if tgt is MACOS:
                lines += [f"adrp x0, {s}@PAGE", f"add x0, x0, {s}@PAGEOFF"]
            else:
                lines += [f"adrp x0, {s}", f"add x0, x0, :lo12:{s}"]
        return lines + [f"bl {tgt.sym('axon_' + ins.sym)}"]
    if k is Ret:
        return ["ret"]
    raise ValueError(f"cannot print {ins!r}")


def _c_string(s: str) -> str:
    out = []
    for ch in s:
        if ch in '"\\':
            out.append("\\" + ch)
        elif 32 <= ord(ch) < 127:
            out.append(ch)
        else:
            out.extend(f"\\{b:03o}" for b in ch.encode("utf-8"))
    return '"' + "".join(out) + '"'


MSG_DIV = "error: division by zero\n"
MSG_OOB = "error: array index out of bounds\n"


def _runtime(tgt: Target) -> list:
    """Print shims and the failure handler; variadic printf arguments go on
    the stack on macOS and in registers on Linux."""
    S, L = tgt.sym, tgt.local
    mac = tgt is MACOS

    def addr(reg, lab):
        if mac:
            return [f"adrp {reg}, {lab}@PAGE", f"add {reg}, {reg}, {lab}@PAGEOFF"]
        return [f"adrp {reg}, {lab}", f"add {reg}, {reg}, :lo12:{lab}"]

    def shim(name, body):
        return ([f"{S(name)}:", "stp x29, x30, [sp, #-32]!", "mov x29, sp"] + body
                + ["ldp x29, x30, [sp], #32", "ret"])

    out = []
    if mac:
        out += shim("axon_print_int", ["sub sp, sp, #16", "str x0, [sp]"]
                    + addr("x0", L("fmt_int")) + [f"bl {S('printf')}", "add sp, sp, #16"])
        out += shim("axon_print_float", ["sub sp, sp, #16", "str d0, [sp]"]
                    + addr("x0", L("fmt_float")) + [f"bl {S('printf')}", "add sp, sp, #16"])
    else:
        out += shim("axon_print_int", ["mov x1, x0"] + addr("x0", L("fmt_int")) + [f"bl {S('printf')}"])
        out += shim("axon_print_float", addr("x0", L("fmt_float")) + [f"bl {S('printf')}"])
    out += shim("axon_print_bool", ["cmp x0, #0", f"b.ne {L('bool_t')}"] + addr("x0", L("s_false"))
                + [f"b {L('bool_p')}", f"{L('bool_t')}:"] + addr("x0", L("s_true"))
                + [f"{L('bool_p')}:", f"bl {S('puts')}"])
    out += shim("axon_print_string", [f"bl {S('puts')}"])
    # x0 = exit code (2 div-zero, 3 out-of-bounds)
    out += [f"{S('axon_fail')}:", "stp x29, x30, [sp, #-32]!", "mov x29, sp",
            "str x0, [sp, #16]", "cmp x0, #2", f"b.ne {L('fail_oob')}"]
    out += addr("x1", L("msg_div")) + [f"mov x2, #{len(MSG_DIV)}", f"b {L('fail_w')}",
                                       f"{L('fail_oob')}:"]
    out += addr("x1", L("msg_oob")) + [f"mov x2, #{len(MSG_OOB)}", f"{L('fail_w')}:", "mov x0, #2",
                                       f"bl {S('write')}", "ldr x0, [sp, #16]", f"bl {S('exit')}"]
    return out


def pretty_print(p: AsmProgram, target: str = "linux") -> str:
    tgt = TARGETS[target]
    strings = {}
    for ins in p.instrs:
        if isinstance(ins, Bl) and ins.text is not None and ins.text not in strings:
            strings[ins.text] = f"str{len(strings)}"
    at = {}
    for lab, i in p.labels.items():
        at.setdefault(i, []).append(lab)
    lines = ["\t.text", "\t.p2align 2", f"\t.globl {tgt.sym('main')}", f"{tgt.sym('main')}:"]
    for i, ins in enumerate(p.instrs):
        for lab in sorted(at.get(i, ())):
            lines.append(f"{tgt.local(lab)}:")
        for ln in format_instr(ins, tgt, strings):
            lines.append("\t" + ln)
    for lab in sorted(at.get(len(p.instrs), ())):
        lines.append(f"{tgt.local(lab)}:")
    lines.append("")
    for ln in _runtime(tgt):
        lines.append(ln if ln.endswith(":") else "\t" + ln)
    lines.append("")
    lines.append("\t.section __TEXT,__cstring" if tgt is MACOS else "\t.section .rodata")
    consts = [("fmt_int", "%lld\n"), ("fmt_float", "%.17g\n"), ("s_true", "true"),
              ("s_false", "false"), ("msg_div", MSG_DIV), ("msg_oob", MSG_OOB)]
    for lab, s in consts + [(v, k) for k, v in strings.items()]:
        lines.append(f"{tgt.local(lab)}:")
        lines.append(f"\t.asciz {_c_string(s)}")
    return "\n".join(lines) + "\n"


# -- reading the body back ---------------------------------------------------------

_ARG = re.compile(r"\s*,\s*(?![^\[]*\])")
_INV_X3 = {v: k for k, v in _X3.items()}
_INV_D3 = {v: k for k, v in _D3.items()}


def parse_body(text: str, target: str = "linux"):
    """Instructions and labels of the `main` body of pretty_print output.

    Inverse of the printer up to string-literal naming: print_string calls
    come back with the literal's label as `text`.
    """
    tgt = TARGETS[target]
    lines = text.splitlines()
    start = lines.index(f"{tgt.sym('main')}:") + 1
    instrs, labels = [], {}
    pending_adr = None
    for raw in lines[start:]:
        ln = raw.strip()
        if not ln:
            break
        if ln.endswith(":"):
            name = ln[:-1]
            if not name.startswith(tgt.local_prefix):
                raise ValueError(f"unexpected label {name}")
            labels[name[len(tgt.local_prefix):]] = len(instrs)
            continue
        op, _, rest = ln.partition(" ")
        args = _ARG.split(rest) if rest else []
        if op == "adrp":
            pending_adr = args[1].split("@")[0]
            continue
        if op == "add" and pending_adr is not None and args[0] == "x0" and args[1] == "x0":
            continue
        instrs.append(_parse_one(op, args, tgt, instrs, pending_adr))
        if op == "bl":
            pending_adr = None
    return instrs, labels


def _imm(s: str) -> int:
    return int(s.lstrip("#"), 0)


def _parse_mem(s: str):
    inner = s.strip()[1:-1]
    parts = [x.strip() for x in inner.split(",")]
    if len(parts) == 3:
        return parts[0], parts[1], True
    return parts[0], (_imm(parts[1]) if len(parts) == 2 else 0), False


def _parse_one(op, a, tgt, prev, adr):  # noqa: C901
    strip = lambda lab: lab[len(tgt.local_prefix):]  # noqa: E731
    if op in ("mov", "movz"):
        if a[1].startswith("#"):
            return MovImm(a[0], _imm(a[1]))
        return MovReg(a[0], a[1])
    if op == "movk":
        last = prev.pop()
        shift = int(a[2].split("#")[1])
        u = (last.imm & _M64) | (_imm(a[1]) << shift)
        return MovImm(a[0], V.wrap(u))
    if op in ("ldr", "str"):
        base, off, idx = _parse_mem(a[1])
        if idx:
            return (LdrIdx if op == "ldr" else StrIdx)(a[0], base, off)
        return (Ldr if op == "ldr" else Str)(a[0], base, off)
    if op in ("add", "sub") and a[2].startswith("#"):
        return (AddImm if op == "add" else SubImm)(a[0], a[1], _imm(a[2]))
    if op == "eor" and a[2].startswith("#"):
        return EorImm(a[0], a[1], _imm(a[2]))
    if op in _INV_X3:
        return _INV_X3[op](*a)
    if op in _INV_D3:
        return _INV_D3[op](*a)
    if op == "msub":
        return Msub(*a)
    if op == "neg":
        return Neg(*a)
    if op == "fneg":
        return Fneg(*a)
    if op == "fmov":
        return (FmovReg if is_dreg(a[1]) else FmovGen)(a[0], a[1])
    if op == "scvtf":
        return Scvtf(*a)
    if op == "fcvtzs":
        return Fcvtzs(*a)
    if op == "cmp":
        return CmpImm(a[0], _imm(a[1])) if a[1].startswith("#") else Cmp(*a)
    if op == "fcmp":
        return Fcmp(*a)
    if op == "cset":
        return Cset(*a)
    if op == "b":
        return B(strip(a[0]))
    if op.startswith("b."):
        return Bcond(op[2:], strip(a[0]))
    if op == "bl":
        sym = a[0][len(tgt.sym_prefix) + len("axon_"):]
        return Bl(sym, strip(adr) if sym == "print_string" else None)
    if op == "ret":
        return Ret()
    raise ValueError(f"unknown mnemonic {op}")
