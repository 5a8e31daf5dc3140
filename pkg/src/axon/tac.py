"""Three-address code: commands, typing discipline, flattening from the AST,
the small-step TAC interpreter, and the textual dump format."""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from axon import ast as A
from axon import values as V
from axon.values import BOOL, FLOAT, INT

EXIT = -1  # pseudo-label reached by Halt

REG_POOLS = {"__ir": (INT, 10), "__br": (BOOL, 10), "__fr": (FLOAT, 8)}
TEMP_PREFIX = {INT: "__t", FLOAT: "__ft", BOOL: "__bt"}
REG_PREFIX = {INT: "__ir", FLOAT: "__fr", BOOL: "__br"}
_NAME_RE = re.compile(r"^(__t|__ft|__bt|__ir|__fr|__br)([1-9][0-9]*)$")


@dataclass(frozen=True)
class TacName:
    name: str
    cls: str  # "source" | "temp" | "reg" | "reserved"
    kind: Optional[str] = None  # value type for temps and regs
    number: int = 0


@functools.lru_cache(maxsize=1 << 16)
def classify(name: str) -> TacName:
    if not name.startswith("__"):
        return TacName(name, "source")
    m = _NAME_RE.match(name)
    if not m:
        return TacName(name, "reserved")
    prefix, n = m.group(1), int(m.group(2))
    if prefix in REG_POOLS:
        return TacName(name, "reg", REG_POOLS[prefix][0], n)
    kind = {"__t": INT, "__ft": FLOAT, "__bt": BOOL}[prefix]
    return TacName(name, "temp", kind, n)


def is_source(name: str) -> bool:
    return not name.startswith("__")


def machine_slot(name: str):
    """Machine register a Reg name maps to: ('x', k) for int/bool, ('d', k) for float."""
    c = classify(name)
    if c.cls != "reg":
        return None
    return ("d" if c.kind == FLOAT else "x", c.number)


# -- operands ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Const:
    type: str
    value: object

    def key(self):
        return (self.type, V.value_key(self.value))

    def __eq__(self, other):
        return isinstance(other, Const) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return format_operand(self)


Operand = Union[str, Const]


def int_const(v: int) -> Const:
    return Const(INT, v)


def format_operand(o: Operand) -> str:
    if isinstance(o, str):
        return o
    if o.type == BOOL:
        return "true" if o.value else "false"
    if o.type == FLOAT:
        f = o.value
        if f != f:
            return "#nan" if V.float_bits(f) >> 63 == 0 else "#-nan"
        return "#" + f.hex()
    return str(o.value)


def parse_operand(s: str) -> Operand:
    if s == "true":
        return Const(BOOL, True)
    if s == "false":
        return Const(BOOL, False)
    if s.startswith("#"):
        body = s[1:]
        if body in ("nan", "-nan"):
            f = V.DEFAULT_NAN if body == "nan" else V.bits_float(V.DEFAULT_NAN_BITS | 1 << 63)
            return Const(FLOAT, f)
        return Const(FLOAT, float.fromhex(body))
    if s[0] == "-" or s[0].isdigit():
        return Const(INT, int(s))
    return s


# -- commands ---------------------------------------------------------------

@dataclass(frozen=True)
class AssignConst:
    dst: str
    const: Const


@dataclass(frozen=True)
class AssignUnop:
    dst: str
    op: str  # neg fneg not i2f f2i copy
    src: Operand


@dataclass(frozen=True)
class AssignBinop:
    dst: str
    op: str
    lhs: Operand
    rhs: Operand


@dataclass(frozen=True)
class AssignFma:
    """dst = addend +/- (mul_l * mul_r), rounding after the multiply and again after the add."""
    dst: str
    addend: Operand
    mul_l: Operand
    mul_r: Operand
    sub: bool = False


@dataclass(frozen=True)
class ArrayLoad:
    dst: str
    array: str
    index: Operand


@dataclass(frozen=True)
class ArrayStore:
    array: str
    index: Operand
    src: Operand


@dataclass(frozen=True)
class Goto:
    target: int


@dataclass(frozen=True)
class IfGoto:
    cond: str
    target: int


@dataclass(frozen=True)
class Print:
    kind: str  # int | float | bool
    operand: Operand


@dataclass(frozen=True)
class PrintString:
    text: str


@dataclass(frozen=True)
class Halt:
    pass


TacCmd = Union[AssignConst, AssignUnop, AssignBinop, AssignFma, ArrayLoad, ArrayStore,
               Goto, IfGoto, Print, PrintString, Halt]

ASSIGNS = (AssignConst, AssignUnop, AssignBinop, AssignFma, ArrayLoad)


def dest(cmd) -> Optional[str]:
    return cmd.dst if isinstance(cmd, ASSIGNS) else None


def operands(cmd) -> tuple:
    """All operand positions read by cmd (variables and constants)."""
    if isinstance(cmd, AssignConst):
        return (cmd.const,)
    if isinstance(cmd, AssignUnop):
        return (cmd.src,)
    if isinstance(cmd, AssignBinop):
        return (cmd.lhs, cmd.rhs)
    if isinstance(cmd, AssignFma):
        return (cmd.addend, cmd.mul_l, cmd.mul_r)
    if isinstance(cmd, ArrayLoad):
        return (cmd.index,)
    if isinstance(cmd, ArrayStore):
        return (cmd.index, cmd.src)
    if isinstance(cmd, IfGoto):
        return (cmd.cond,)
    if isinstance(cmd, Print):
        return (cmd.operand,)
    return ()


def uses(cmd) -> tuple:
    return tuple(o for o in operands(cmd) if isinstance(o, str))


def may_trap(cmd) -> bool:
    if isinstance(cmd, (ArrayLoad, ArrayStore)):
        return True
    if isinstance(cmd, AssignBinop) and cmd.op in V.TRAPPING:
        return not (isinstance(cmd.rhs, Const) and cmd.rhs.value != 0)
    return False


@dataclass(frozen=True)
class TacProgram:
    commands: tuple
    ctx: dict = field(compare=False)  # scalar name -> value type
    arrays: dict = field(compare=False)  # array name -> (elem type, length)

    def __len__(self):
        return len(self.commands)

    def observables(self) -> list:
        return sorted(n for n in self.ctx if is_source(n))

    def same_shape(self, other: "TacProgram") -> bool:
        return self.commands == other.commands and self.ctx == other.ctx and self.arrays == other.arrays


def successors(prog: TacProgram, label: int) -> list:
    """(target, condition) pairs; condition is None, True (cond taken) or False."""
    cmd = prog.commands[label]
    if isinstance(cmd, Halt):
        return [(EXIT, None)]
    if isinstance(cmd, Goto):
        return [(cmd.target, None)]
    if isinstance(cmd, IfGoto):
        if cmd.target == label + 1:
            return [(label + 1, None)]
        return [(cmd.target, True), (label + 1, False)]
    return [(label + 1, None)]


def reachable(prog: TacProgram) -> list:
    seen = [False] * len(prog.commands)
    if not prog.commands:
        return seen
    stack = [0]
    seen[0] = True
    while stack:
        l = stack.pop()
        for t, _ in successors(prog, l):
            if 0 <= t < len(prog.commands) and not seen[t]:
                seen[t] = True
                stack.append(t)
    return seen


# -- well-formedness ----------------------------------------------------------

class TacWfError(Exception):
    def __init__(self, index, kind, message=""):
        super().__init__(f"L{index}: {kind}{': ' + message if message else ''}")
        self.index, self.kind = index, kind


@dataclass(frozen=True)
class TacEvidence:
    program: TacProgram


def _operand_type(o: Operand, prog: TacProgram, idx: int) -> str:
    if isinstance(o, Const):
        return o.type
    t = prog.ctx.get(o)
    if t is None:
        kind = "array-as-scalar" if o in prog.arrays else "undeclared"
        raise TacWfError(idx, kind, o)
    return t


def check_tac_wf(prog: TacProgram) -> TacEvidence:
    n = len(prog.commands)
    if n == 0:
        raise TacWfError(0, "empty-program")
    for name, t in prog.ctx.items():
        if t not in V.SCALAR_TYPES:
            raise TacWfError(-1, "type", f"{name}: {t}")
        c = classify(name)
        if c.cls == "reserved":
            raise TacWfError(-1, "reserved-name", name)
        if c.cls in ("temp", "reg") and c.kind != t:
            raise TacWfError(-1, "type", f"{name} declared {t}")
        if c.cls == "reg" and not 1 <= c.number <= REG_POOLS[name[:4]][1]:
            raise TacWfError(-1, "register-out-of-pool", name)
        if name in prog.arrays:
            raise TacWfError(-1, "name-clash", name)
    for name, (t, length) in prog.arrays.items():
        if t not in V.SCALAR_TYPES or not 1 <= length <= A.MAX_ARRAY_LEN or not is_source(name):
            raise TacWfError(-1, "array-decl", name)
    for i, cmd in enumerate(prog.commands):
        ty = lambda o: _operand_type(o, prog, i)  # noqa: E731
        d = dest(cmd)
        dt = ty(d) if d is not None else None
        if isinstance(cmd, AssignConst):
            if not isinstance(cmd.const, Const) or cmd.const.type != dt:
                raise TacWfError(i, "type")
        elif isinstance(cmd, AssignUnop):
            if cmd.op == "copy":
                if ty(cmd.src) != dt:
                    raise TacWfError(i, "type")
            elif cmd.op not in V.UNOP_SIG or V.UNOP_SIG[cmd.op] != (ty(cmd.src), dt):
                raise TacWfError(i, "type", cmd.op)
        elif isinstance(cmd, AssignBinop):
            sig = V.BINOP_SIG.get(cmd.op)
            if sig is None or sig != (ty(cmd.lhs), ty(cmd.rhs), dt):
                raise TacWfError(i, "type", cmd.op)
        elif isinstance(cmd, AssignFma):
            if not all(ty(o) == FLOAT for o in (cmd.addend, cmd.mul_l, cmd.mul_r)) or dt != FLOAT:
                raise TacWfError(i, "type", "fma")
        elif isinstance(cmd, (ArrayLoad, ArrayStore)):
            if cmd.array not in prog.arrays:
                raise TacWfError(i, "undeclared-array", cmd.array)
            if ty(cmd.index) != INT:
                raise TacWfError(i, "type", "index")
            elem = prog.arrays[cmd.array][0]
            got = dt if isinstance(cmd, ArrayLoad) else ty(cmd.src)
            if got != elem:
                raise TacWfError(i, "type", "element")
        elif isinstance(cmd, (Goto, IfGoto)):
            if not isinstance(cmd.target, int) or not 0 <= cmd.target < n:
                raise TacWfError(i, "label-out-of-range", str(cmd.target))
            if isinstance(cmd, IfGoto) and (not isinstance(cmd.cond, str) or ty(cmd.cond) != BOOL):
                raise TacWfError(i, "type", "condition")
        elif isinstance(cmd, Print):
            if ty(cmd.operand) != cmd.kind:
                raise TacWfError(i, "type", "print")
        elif not isinstance(cmd, (PrintString, Halt)):
            raise TacWfError(i, "unknown-command")
    # no reachable command may fall off the end
    for i, ok in enumerate(reachable(prog)):
        if ok and any(t == n for t, _ in successors(prog, i)):
            raise TacWfError(i, "falls-off-end")
    return TacEvidence(prog)


# -- flattening ---------------------------------------------------------------

class _Flattener:
    def __init__(self, ctx):
        self.cmds = []
        self.ctx = {}
        self.arrays = {}
        for name, vt in ctx.items():
            if vt.is_array:
                self.arrays[name] = (vt.elem, vt.length)
            else:
                self.ctx[name] = vt.elem
        self.counters = {INT: 0, FLOAT: 0, BOOL: 0}
        self.src_ctx = ctx

    def temp(self, ty) -> str:
        self.counters[ty] += 1
        name = f"{TEMP_PREFIX[ty]}{self.counters[ty]}"
        self.ctx[name] = ty
        return name

    def emit(self, cmd) -> int:
        self.cmds.append(cmd)
        return len(self.cmds) - 1

    def type_of(self, e) -> str:
        return A.expr_type(e, self.src_ctx)

    def operand(self, e) -> Operand:
        """Flatten e to a variable or constant, adding temporaries as needed."""
        if isinstance(e, A.IntLit):
            return Const(INT, e.value)
        if isinstance(e, A.FloatLit):
            return Const(FLOAT, e.value)
        if isinstance(e, A.BoolLit):
            return Const(BOOL, e.value)
        if isinstance(e, A.Var):
            return e.name
        return self.compute(e)

    def compute(self, e) -> str:
        if isinstance(e, A.Index):
            idx = self.operand(e.index)
            t = self.temp(self.arrays[e.array][0])
            self.emit(ArrayLoad(t, e.array, idx))
            return t
        if isinstance(e, A.Unary):
            src = self.operand(e.operand)
            ty = self.type_of(e.operand)
            op = "not" if e.op == "!" else ("fneg" if ty == FLOAT else "neg")
            t = self.temp(ty)
            self.emit(AssignUnop(t, op, src))
            return t
        if isinstance(e, A.Binary):
            lhs = self.operand(e.lhs)
            rhs = self.operand(e.rhs)
            op = V.SOURCE_BINOPS[self.type_of(e.lhs)][e.op]
            t = self.temp(V.BINOP_SIG[op][2])
            self.emit(AssignBinop(t, op, lhs, rhs))
            return t
        if isinstance(e, A.Convert):
            src = self.operand(e.operand)
            if e.op == "intToFloat":
                t = self.temp(FLOAT)
                self.emit(AssignUnop(t, "i2f", src))
            else:
                t = self.temp(INT)
                self.emit(AssignUnop(t, "f2i", src))
            return t
        # literal or variable at statement level: materialize into a temporary
        o = self.operand(e)
        ty = self.type_of(e)
        t = self.temp(ty)
        if isinstance(o, Const):
            self.emit(AssignConst(t, o))
        else:
            self.emit(AssignUnop(t, "copy", o))
        return t

    def negated_cond(self, cond) -> str:
        c = self.compute(cond)
        nc = self.temp(BOOL)
        self.emit(AssignUnop(nc, "not", c))
        return nc

    def stmts(self, body):
        for s in body:
            self.stmt(s)

    def stmt(self, s):
        if isinstance(s, A.Assign):
            t = self.compute(s.value)
            self.emit(AssignUnop(s.target, "copy", t))
        elif isinstance(s, A.ArrayAssign):
            idx = self.operand(s.index)
            val = self.operand(s.value)
            self.emit(ArrayStore(s.array, idx, val))
        elif isinstance(s, A.While):
            head = len(self.cmds)
            nc = self.negated_cond(s.cond)
            exit_jump = self.emit(IfGoto(nc, -1))
            self.stmts(s.body)
            self.emit(Goto(head))
            self.cmds[exit_jump] = IfGoto(nc, len(self.cmds))
        elif isinstance(s, A.If):
            nc = self.negated_cond(s.cond)
            skip = self.emit(IfGoto(nc, -1))
            self.stmts(s.then)
            if s.orelse is not None:
                end_jump = self.emit(Goto(-1))
                self.cmds[skip] = IfGoto(nc, len(self.cmds))
                self.stmts(s.orelse)
                self.cmds[end_jump] = Goto(len(self.cmds))
            else:
                self.cmds[skip] = IfGoto(nc, len(self.cmds))
        elif isinstance(s, A.Print):
            t = self.compute(s.value)
            self.emit(Print(s.kind, t))
        elif isinstance(s, A.PrintString):
            self.emit(PrintString(s.text))
        else:
            raise AssertionError(f"not well-formed: {s!r}")


def flatten(p: A.AstProgram, ev: A.WellFormedEvidence) -> TacProgram:
    if ev.program is not p:
        raise ValueError("evidence does not belong to this program")
    f = _Flattener(ev.ctx)
    f.stmts(p.body)
    f.emit(Halt())
    return TacProgram(tuple(f.cmds), f.ctx, f.arrays)


# -- interpreter --------------------------------------------------------------

def _initial_state(prog: TacProgram):
    scalars = {n: V.zero_of(t) for n, t in prog.ctx.items()}
    arrays = {n: [V.zero_of(t)] * length for n, (t, length) in prog.arrays.items()}
    return scalars, arrays


def eval_tac(prog: TacProgram, fuel: int = 10**7) -> A.Behavior:
    """Small-step execution.  Fuel counts taken backward jumps (target <= source)."""
    env, arrays = _initial_state(prog)
    out = []
    cmds = prog.commands
    pc = 0
    binops, unops = V.BINOPS, V.UNOPS

    def val(o):
        return o.value if type(o) is Const else env[o]

    try:
        while True:
            cmd = cmds[pc]
            k = type(cmd)
            nxt = pc + 1
            if k is AssignBinop:
                env[cmd.dst] = binops[cmd.op](val(cmd.lhs), val(cmd.rhs))
            elif k is AssignUnop:
                env[cmd.dst] = val(cmd.src) if cmd.op == "copy" else unops[cmd.op](val(cmd.src))
            elif k is AssignConst:
                env[cmd.dst] = cmd.const.value
            elif k is IfGoto:
                if env[cmd.cond]:
                    nxt = cmd.target
            elif k is Goto:
                nxt = cmd.target
            elif k is ArrayLoad:
                arr = arrays[cmd.array]
                i = val(cmd.index)
                if not 0 <= i < len(arr):
                    return A.Behavior(A.OUT_OF_BOUNDS, tuple(out))
                env[cmd.dst] = arr[i]
            elif k is ArrayStore:
                arr = arrays[cmd.array]
                i = val(cmd.index)
                if not 0 <= i < len(arr):
                    return A.Behavior(A.OUT_OF_BOUNDS, tuple(out))
                arr[i] = val(cmd.src)
            elif k is AssignFma:
                env[cmd.dst] = V.eval_fma(val(cmd.addend), val(cmd.mul_l), val(cmd.mul_r), cmd.sub)
            elif k is Print:
                out.append(A.OutputEvent(cmd.kind, val(cmd.operand)))
            elif k is PrintString:
                out.append(A.OutputEvent("string", cmd.text))
            elif k is Halt:
                scalars = {n: env[n] for n in prog.ctx if is_source(n)}
                return A.Behavior(A.HALT, tuple(out), scalars,
                                  {n: tuple(a) for n, a in arrays.items()})
            else:
                raise AssertionError(cmd)
            if nxt <= pc:
                if fuel <= 0:
                    return A.Behavior(A.DIVERGE, tuple(out))
                fuel -= 1
            pc = nxt
    except V.DivByZeroTrap:
        return A.Behavior(A.DIV_BY_ZERO, tuple(out))


# -- text format ---------------------------------------------------------------

def format_cmd(cmd) -> str:
    f = format_operand
    if isinstance(cmd, AssignConst):
        return f"{cmd.dst} = const {f(cmd.const)}"
    if isinstance(cmd, AssignUnop):
        return f"{cmd.dst} = {cmd.op} {f(cmd.src)}"
    if isinstance(cmd, AssignBinop):
        return f"{cmd.dst} = {cmd.op} {f(cmd.lhs)} {f(cmd.rhs)}"
    if isinstance(cmd, AssignFma):
        return f"{cmd.dst} = {'fms' if cmd.sub else 'fma'} {f(cmd.addend)} {f(cmd.mul_l)} {f(cmd.mul_r)}"
    if isinstance(cmd, ArrayLoad):
        return f"{cmd.dst} = load {cmd.array} {f(cmd.index)}"
    if isinstance(cmd, ArrayStore):
        return f"store {cmd.array} {f(cmd.index)} {f(cmd.src)}"
    if isinstance(cmd, Goto):
        return f"goto L{cmd.target}"
    if isinstance(cmd, IfGoto):
        return f"ifgoto {cmd.cond} L{cmd.target}"
    if isinstance(cmd, Print):
        return f"print {cmd.kind} {f(cmd.operand)}"
    if isinstance(cmd, PrintString):
        return f"print string {json.dumps(cmd.text)}"
    if isinstance(cmd, Halt):
        return "halt"
    raise AssertionError(cmd)


def dump(prog: TacProgram) -> str:
    lines = []
    for name in sorted(prog.ctx):
        lines.append(f"var {prog.ctx[name]} {name}")
    for name in sorted(prog.arrays):
        t, n = prog.arrays[name]
        lines.append(f"array {t} {n} {name}")
    for i, cmd in enumerate(prog.commands):
        lines.append(f"L{i}: {format_cmd(cmd)}")
    return "\n".join(lines) + "\n"


def _label(s: str) -> int:
    if not s.startswith("L"):
        raise ValueError(f"bad label {s!r}")
    return int(s[1:])


def parse_cmd(text: str):
    if text.startswith("print string "):
        return PrintString(json.loads(text[len("print string "):]))
    parts = text.split()
    if parts[0] == "halt":
        return Halt()
    if parts[0] == "goto":
        return Goto(_label(parts[1]))
    if parts[0] == "ifgoto":
        return IfGoto(parts[1], _label(parts[2]))
    if parts[0] == "store":
        return ArrayStore(parts[1], parse_operand(parts[2]), parse_operand(parts[3]))
    if parts[0] == "print":
        return Print(parts[1], parse_operand(parts[2]))
    if len(parts) < 4 or parts[1] != "=":
        raise ValueError(f"bad command {text!r}")
    dst, op, args = parts[0], parts[2], parts[3:]
    if op == "const":
        c = parse_operand(args[0])
        if not isinstance(c, Const):
            raise ValueError(f"bad constant {args[0]!r}")
        return AssignConst(dst, c)
    if op == "load":
        return ArrayLoad(dst, args[0], parse_operand(args[1]))
    if op in ("fma", "fms"):
        return AssignFma(dst, *map(parse_operand, args[:3]), sub=(op == "fms"))
    if len(args) == 1:
        return AssignUnop(dst, op, parse_operand(args[0]))
    return AssignBinop(dst, op, parse_operand(args[0]), parse_operand(args[1]))


def parse_dump(text: str) -> TacProgram:
    ctx, arrays, cmds = {}, {}, []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("var "):
            _, t, name = line.split()
            ctx[name] = t
        elif line.startswith("array "):
            _, t, n, name = line.split()
            arrays[name] = (t, int(n))
        else:
            lab, _, body = line.partition(": ")
            if _label(lab) != len(cmds):
                raise ValueError(f"labels out of order at {lab}")
            cmds.append(parse_cmd(body))
    return TacProgram(tuple(cmds), ctx, arrays)
