"""Axon AST: node types, type checking, well-formedness, and the reference
big-step interpreter that defines observable program behavior."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from axon import values as V
from axon.values import BOOL, FLOAT, INT

MAX_ARRAY_LEN = 1 << 20


@dataclass(frozen=True)
class SourceSpan:
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self):
        return f"{self.start_line}:{self.start_col}"


NOSPAN = SourceSpan(0, 0, 0, 0)


def _span():
    return field(default=NOSPAN, compare=False, repr=False)


# -- expressions ----------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int
    span: SourceSpan = _span()


@dataclass(frozen=True)
class FloatLit:
    value: float
    span: SourceSpan = _span()

    def __eq__(self, other):
        return isinstance(other, FloatLit) and V.same_value(self.value, other.value)

    def __hash__(self):
        return hash(V.value_key(self.value))


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Index:
    array: str
    index: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Convert:
    op: str  # "intToFloat" or "floatToInt"
    operand: "Expr"
    span: SourceSpan = _span()


Expr = Union[IntLit, FloatLit, BoolLit, Var, Index, Unary, Binary, Convert]


# -- statements -----------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    target: str
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ArrayAssign:
    array: str
    index: Expr
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    orelse: Optional[tuple] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Print:
    kind: str  # "int" | "float" | "bool"
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class PrintString:
    text: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Goto:
    label: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Labeled:
    label: str
    stmt: "Stmt"
    span: SourceSpan = _span()


Stmt = Union[Assign, ArrayAssign, While, If, Print, PrintString, Goto, Labeled]


@dataclass(frozen=True)
class Decl:
    name: str
    type: str  # scalar element type
    length: Optional[int] = None  # set for arrays
    span: SourceSpan = _span()

    @property
    def is_array(self) -> bool:
        return self.length is not None


@dataclass(frozen=True)
class AstProgram:
    decls: tuple
    body: tuple


# -- errors ---------------------------------------------------------------

class AxonError(Exception):
    """Base class for diagnostics reported to the user."""

    def __init__(self, message: str, span: SourceSpan = NOSPAN):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        if self.span is NOSPAN or self.span.start_line == 0:
            return self.message
        return f"{self.span}: {self.message}"


class TypeError_(AxonError):
    pass


class WellFormednessError(AxonError):
    def __init__(self, kind: str, message: str, span: SourceSpan = NOSPAN):
        super().__init__(f"{kind}: {message}", span)
        self.kind = kind


# -- typing ---------------------------------------------------------------

@dataclass(frozen=True)
class VarType:
    elem: str
    length: Optional[int] = None

    @property
    def is_array(self) -> bool:
        return self.length is not None


TypingContext = dict  # name -> VarType


def type_check(p: AstProgram) -> TypingContext:
    ctx: TypingContext = {}
    for d in p.decls:
        if d.is_array and not (1 <= d.length <= MAX_ARRAY_LEN):
            raise TypeError_(f"array length of '{d.name}' must be in 1..{MAX_ARRAY_LEN}", d.span)
        ctx.setdefault(d.name, VarType(d.type, d.length))
    for s in p.body:
        _check_stmt(s, ctx)
    return ctx


def _scalar(ctx, name, span) -> str:
    t = ctx.get(name)
    if t is None:
        raise TypeError_(f"undeclared variable '{name}'", span)
    if t.is_array:
        raise TypeError_(f"array '{name}' used as a scalar", span)
    return t.elem


def _array(ctx, name, span) -> VarType:
    t = ctx.get(name)
    if t is None:
        raise TypeError_(f"undeclared variable '{name}'", span)
    if not t.is_array:
        raise TypeError_(f"scalar '{name}' indexed as an array", span)
    return t


def expr_type(e: Expr, ctx: TypingContext) -> str:
    if isinstance(e, IntLit):
        return INT
    if isinstance(e, FloatLit):
        return FLOAT
    if isinstance(e, BoolLit):
        return BOOL
    if isinstance(e, Var):
        return _scalar(ctx, e.name, e.span)
    if isinstance(e, Index):
        t = _array(ctx, e.array, e.span)
        if expr_type(e.index, ctx) != INT:
            raise TypeError_("array index must be int", e.index.span)
        return t.elem
    if isinstance(e, Unary):
        t = expr_type(e.operand, ctx)
        if e.op == "-" and t in (INT, FLOAT):
            return t
        if e.op == "!" and t == BOOL:
            return BOOL
        raise TypeError_(f"operator '{e.op}' not defined on {t}", e.span)
    if isinstance(e, Binary):
        lt, rt = expr_type(e.lhs, ctx), expr_type(e.rhs, ctx)
        if lt != rt:
            raise TypeError_(f"operands of '{e.op}' have types {lt} and {rt}", e.span)
        op = V.SOURCE_BINOPS[lt].get(e.op)
        if op is None:
            raise TypeError_(f"operator '{e.op}' not defined on {lt}", e.span)
        return V.BINOP_SIG[op][2]
    if isinstance(e, Convert):
        t = expr_type(e.operand, ctx)
        want, out = (INT, FLOAT) if e.op == "intToFloat" else (FLOAT, INT)
        if t != want:
            raise TypeError_(f"{e.op} expects {want}, got {t}", e.span)
        return out
    raise TypeError_(f"unknown expression {e!r}")


def _check_stmt(s: Stmt, ctx: TypingContext) -> None:
    if isinstance(s, Assign):
        t = _scalar(ctx, s.target, s.span)
        vt = expr_type(s.value, ctx)
        if vt != t:
            raise TypeError_(f"cannot assign {vt} to {t} variable '{s.target}'", s.span)
    elif isinstance(s, ArrayAssign):
        at = _array(ctx, s.array, s.span)
        if expr_type(s.index, ctx) != INT:
            raise TypeError_("array index must be int", s.index.span)
        vt = expr_type(s.value, ctx)
        if vt != at.elem:
            raise TypeError_(f"cannot store {vt} into {at.elem} array '{s.array}'", s.span)
    elif isinstance(s, (While, If)):
        if expr_type(s.cond, ctx) != BOOL:
            raise TypeError_("condition must be bool", s.cond.span)
        blocks = [s.body] if isinstance(s, While) else [s.then, s.orelse or ()]
        for b in blocks:
            for inner in b:
                _check_stmt(inner, ctx)
    elif isinstance(s, Print):
        t = expr_type(s.value, ctx)
        if t != s.kind:
            raise TypeError_(f"print{s.kind.capitalize()} given {t}", s.span)
    elif isinstance(s, Labeled):
        _check_stmt(s.stmt, ctx)
    # PrintString and Goto carry nothing to type


# -- well-formedness ------------------------------------------------------

@dataclass(frozen=True)
class WellFormedEvidence:
    """Proof token: only check_well_formed constructs one."""
    program: AstProgram
    ctx: TypingContext = field(compare=False)


def _walk(stmts):
    for s in stmts:
        yield s
        if isinstance(s, While):
            yield from _walk(s.body)
        elif isinstance(s, If):
            yield from _walk(s.then)
            yield from _walk(s.orelse or ())
        elif isinstance(s, Labeled):
            yield from _walk((s.stmt,))


def check_well_formed(p: AstProgram, ctx: Optional[TypingContext] = None) -> WellFormedEvidence:
    if ctx is None:
        ctx = type_check(p)
    seen = set()
    for d in p.decls:
        if d.name.startswith("__"):
            raise WellFormednessError("ReservedName", f"'{d.name}' starts with __", d.span)
        if d.name in seen:
            raise WellFormednessError("Duplicate", f"'{d.name}' declared twice", d.span)
        seen.add(d.name)
    for s in _walk(p.body):
        if isinstance(s, (Goto, Labeled)):
            raise WellFormednessError("GotoPresent", "goto and labels are not supported", s.span)
    return WellFormedEvidence(p, ctx)


# -- behavior -------------------------------------------------------------

HALT = "Halt"
DIV_BY_ZERO = "DivByZero"
OUT_OF_BOUNDS = "OutOfBounds"
DIVERGE = "Diverge"


@dataclass(frozen=True)
class OutputEvent:
    kind: str  # "string" | "int" | "float" | "bool"
    value: object

    def key(self):
        return (self.kind, V.value_key(self.value) if self.kind != "string" else self.value)

    def __eq__(self, other):
        return isinstance(other, OutputEvent) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def render(self) -> str:
        if self.kind == "string":
            return self.value
        if self.kind == "bool":
            return "true" if self.value else "false"
        if self.kind == "float":
            return format_float(self.value)
        return str(self.value)


def format_float(f: float) -> str:
    """Mirror C's %.17g."""
    if f != f:
        return "-nan" if V.float_bits(f) >> 63 else "nan"
    if f in (float("inf"), float("-inf")):
        return "inf" if f > 0 else "-inf"
    return "%.17g" % f


@dataclass(frozen=True)
class Behavior:
    kind: str
    output: tuple
    scalars: Optional[dict] = None  # Halt only
    arrays: Optional[dict] = None

    def key(self):
        store = None
        if self.kind == HALT:
            store = (
                tuple(sorted((k, V.value_key(v)) for k, v in self.scalars.items())),
                tuple(sorted((k, tuple(V.value_key(x) for x in a)) for k, a in self.arrays.items())),
            )
        return (self.kind, tuple(e.key() for e in self.output), store)

    def __eq__(self, other):
        return isinstance(other, Behavior) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def first_difference(self, other: "Behavior") -> str:
        if self.kind != other.kind:
            return f"kind {self.kind} vs {other.kind}"
        for i, (a, b) in enumerate(zip(self.output, other.output)):
            if a != b:
                return f"output[{i}] {a.render()} vs {b.render()}"
        if len(self.output) != len(other.output):
            return f"output length {len(self.output)} vs {len(other.output)}"
        if self.kind == HALT:
            for k in sorted(set(self.scalars) | set(other.scalars)):
                a, b = self.scalars.get(k), other.scalars.get(k)
                if a is None or b is None or not V.same_value(a, b):
                    return f"store {k}: {a!r} vs {b!r}"
            for k in sorted(set(self.arrays) | set(other.arrays)):
                a, b = self.arrays.get(k), other.arrays.get(k)
                if a is None or b is None or len(a) != len(b):
                    return f"array {k} shape"
                for i, (x, y) in enumerate(zip(a, b)):
                    if not V.same_value(x, y):
                        return f"array {k}[{i}]: {x!r} vs {y!r}"
        return ""


# -- reference interpreter -----------------------------------------------

class _Stop(Exception):
    def __init__(self, kind):
        self.kind = kind


class _Interp:
    def __init__(self, p: AstProgram, ctx: TypingContext, fuel: int, check_types: bool):
        self.ctx = ctx
        self.fuel = fuel
        self.check_types = check_types
        self.out = []
        self.scalars = {}
        self.arrays = {}
        for d in p.decls:
            if d.is_array:
                self.arrays[d.name] = [V.zero_of(d.type)] * d.length
            else:
                self.scalars[d.name] = V.zero_of(d.type)

    def eval(self, e):
        if isinstance(e, (IntLit, FloatLit, BoolLit)):
            return e.value
        if isinstance(e, Var):
            return self.scalars[e.name]
        if isinstance(e, Index):
            i = self.eval(e.index)
            arr = self.arrays[e.array]
            if not 0 <= i < len(arr):
                raise _Stop(OUT_OF_BOUNDS)
            return arr[i]
        if isinstance(e, Unary):
            v = self.eval(e.operand)
            if e.op == "!":
                return not v
            return -v if isinstance(v, float) else V.wrap(-v)
        if isinstance(e, Binary):
            # both operands always evaluate, left first
            a = self.eval(e.lhs)
            b = self.eval(e.rhs)
            op = V.SOURCE_BINOPS[V.type_of(a)][e.op]
            try:
                return V.eval_binop(op, a, b)
            except V.DivByZeroTrap:
                raise _Stop(DIV_BY_ZERO)
        if isinstance(e, Convert):
            v = self.eval(e.operand)
            return V.i2f(v) if e.op == "intToFloat" else V.f2i(v)
        raise AssertionError(e)

    def store(self, name, v):
        if self.check_types:
            want = self.ctx[name].elem
            assert V.type_of(v) == want, f"type preservation violated at {name}"
        self.scalars[name] = v

    def run(self, stmts):
        for s in stmts:
            self.exec(s)

    def exec(self, s):
        if isinstance(s, Assign):
            self.store(s.target, self.eval(s.value))
        elif isinstance(s, ArrayAssign):
            i = self.eval(s.index)
            v = self.eval(s.value)
            arr = self.arrays[s.array]
            if not 0 <= i < len(arr):
                raise _Stop(OUT_OF_BOUNDS)
            if self.check_types:
                assert V.type_of(v) == self.ctx[s.array].elem
            arr[i] = v
        elif isinstance(s, While):
            while self.eval(s.cond):
                self.run(s.body)
                # one unit of fuel per completed iteration (a taken back edge)
                if self.fuel <= 0:
                    raise _Stop(DIVERGE)
                self.fuel -= 1
        elif isinstance(s, If):
            if self.eval(s.cond):
                self.run(s.then)
            elif s.orelse:
                self.run(s.orelse)
        elif isinstance(s, Print):
            self.out.append(OutputEvent(s.kind, self.eval(s.value)))
        elif isinstance(s, PrintString):
            self.out.append(OutputEvent("string", s.text))
        else:
            raise AssertionError(f"unsupported statement {s!r}")


def eval_ast(p: AstProgram, fuel: int = 10**7, ctx: Optional[TypingContext] = None,
             check_types: bool = False) -> Behavior:
    """Run p to a Behavior.  Fuel counts loop back edges taken."""
    if ctx is None:
        ctx = type_check(p)
    it = _Interp(p, ctx, fuel, check_types)
    try:
        it.run(p.body)
    except _Stop as stop:
        return Behavior(stop.kind, tuple(it.out))
    except RecursionError:
        raise AxonError("program nesting too deep for the reference interpreter")
    return Behavior(HALT, tuple(it.out), dict(it.scalars),
                    {k: tuple(v) for k, v in it.arrays.items()})


# -- canonical source printer --------------------------------------------

def _fmt_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, FloatLit):
        return repr(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Index):
        return f"{e.array}[{_fmt_expr(e.index)}]"
    if isinstance(e, Unary):
        return f"({e.op}{_fmt_expr(e.operand)})"
    if isinstance(e, Binary):
        return f"({_fmt_expr(e.lhs)} {e.op} {_fmt_expr(e.rhs)})"
    if isinstance(e, Convert):
        return f"{e.op}({_fmt_expr(e.operand)})"
    raise AssertionError(e)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _fmt_block(stmts, indent) -> list:
    lines = []
    for s in stmts:
        lines.extend(_fmt_stmt(s, indent))
    return lines


def _fmt_stmt(s, indent) -> list:
    pad = "    " * indent
    if isinstance(s, Assign):
        return [f"{pad}{s.target} = {_fmt_expr(s.value)};"]
    if isinstance(s, ArrayAssign):
        return [f"{pad}{s.array}[{_fmt_expr(s.index)}] = {_fmt_expr(s.value)};"]
    if isinstance(s, While):
        return ([f"{pad}while ({_fmt_expr(s.cond)}) {{"]
                + _fmt_block(s.body, indent + 1) + [f"{pad}}}"])
    if isinstance(s, If):
        lines = [f"{pad}if ({_fmt_expr(s.cond)}) {{"] + _fmt_block(s.then, indent + 1)
        if s.orelse is not None:
            lines += [f"{pad}}} else {{"] + _fmt_block(s.orelse, indent + 1)
        return lines + [f"{pad}}}"]
    if isinstance(s, Print):
        return [f"{pad}print{s.kind.capitalize()} {_fmt_expr(s.value)};"]
    if isinstance(s, PrintString):
        return [f"{pad}printString {_quote(s.text)};"]
    if isinstance(s, Goto):
        return [f"{pad}goto {s.label};"]
    if isinstance(s, Labeled):
        inner = _fmt_stmt(s.stmt, indent)
        inner[0] = f"{pad}{s.label}: {inner[0].lstrip()}"
        return inner
    raise AssertionError(s)


def to_source(p: AstProgram) -> str:
    lines = []
    for d in p.decls:
        if d.is_array:
            lines.append(f"{d.type}[{d.length}] {d.name};")
        else:
            lines.append(f"{d.type} {d.name};")
    lines += _fmt_block(p.body, 0)
    return "\n".join(lines) + "\n"
