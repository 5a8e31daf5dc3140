"""64-bit value semantics shared by every Axon interpreter and the simplifier.

Integers are two's-complement 64-bit (wrapping), floats are IEEE-754
binary64 with round-to-nearest-even, booleans are Python bools.  Every
arithmetic float result that is a NaN is replaced by the AArch64 default
NaN (the machine runs with FPCR.DN set), so NaN payloads never depend on
the host.
"""

from __future__ import annotations

import math
import struct

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1
MASK64 = (1 << 64) - 1
DEFAULT_NAN_BITS = 0x7FF8000000000000

INT = "int"
FLOAT = "float"
BOOL = "bool"
SCALAR_TYPES = (INT, FLOAT, BOOL)


class DivByZeroTrap(Exception):
    pass


def wrap(x: int) -> int:
    x &= MASK64
    return x - (1 << 64) if x >> 63 else x


def float_bits(f: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", f))[0]


def bits_float(b: int) -> float:
    return struct.unpack("<d", struct.pack("<Q", b & MASK64))[0]


DEFAULT_NAN = bits_float(DEFAULT_NAN_BITS)


def canon(f: float) -> float:
    return DEFAULT_NAN if f != f else f


def zero_of(ty: str):
    return {INT: 0, FLOAT: 0.0, BOOL: False}[ty]


def same_value(a, b) -> bool:
    """Bit-exact equality (floats compared by bit pattern)."""
    if isinstance(a, float) or isinstance(b, float):
        return (
            isinstance(a, float) and isinstance(b, float)
            and float_bits(a) == float_bits(b)
        )
    return type(a) is type(b) and a == b


def value_key(v):
    """Hashable, bit-exact key for a scalar value."""
    if isinstance(v, bool):
        return ("b", v)
    if isinstance(v, float):
        return ("f", float_bits(v))
    return ("i", v)


def type_of(v) -> str:
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, float):
        return FLOAT
    return INT


# -- integer arithmetic ---------------------------------------------------

def idiv(a: int, b: int) -> int:
    if b == 0:
        raise DivByZeroTrap()
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap(q)


def irem(a: int, b: int) -> int:
    if b == 0:
        raise DivByZeroTrap()
    return wrap(a - wrap(idiv(a, b) * b))


def fdiv(a: float, b: float) -> float:
    if b == 0.0:
        if a != a or a == 0.0:
            return DEFAULT_NAN
        neg = (math.copysign(1.0, a) < 0) != (math.copysign(1.0, b) < 0)
        return -math.inf if neg else math.inf
    return canon(a / b)


def fmul(a: float, b: float) -> float:
    # inf * 0 is NaN in IEEE; CPython agrees, but canonicalize.
    return canon(a * b)


def f2i(f: float) -> int:
    """fcvtzs: truncate toward zero, saturate, NaN -> 0."""
    if f != f:
        return 0
    if f >= 9.2233720368547758e18:
        return INT_MAX
    if f <= -9.2233720368547758e18:
        return INT_MIN
    return int(f)


def i2f(i: int) -> float:
    return float(i)


BINOPS = {
    "add": lambda a, b: wrap(a + b),
    "sub": lambda a, b: wrap(a - b),
    "mul": lambda a, b: wrap(a * b),
    "div": idiv,
    "rem": irem,
    "lt": lambda a, b: a < b,
    "le": lambda a, b: a <= b,
    "gt": lambda a, b: a > b,
    "ge": lambda a, b: a >= b,
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "fadd": lambda a, b: canon(a + b),
    "fsub": lambda a, b: canon(a - b),
    "fmul": fmul,
    "fdiv": fdiv,
    "flt": lambda a, b: a < b,
    "fle": lambda a, b: a <= b,
    "fgt": lambda a, b: a > b,
    "fge": lambda a, b: a >= b,
    "feq": lambda a, b: a == b,
    "fne": lambda a, b: a != b,
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
    "beq": lambda a, b: a == b,
    "bne": lambda a, b: a != b,
}

# op -> (lhs type, rhs type, result type)
BINOP_SIG = {}
for _op in ("add", "sub", "mul", "div", "rem"):
    BINOP_SIG[_op] = (INT, INT, INT)
for _op in ("lt", "le", "gt", "ge", "eq", "ne"):
    BINOP_SIG[_op] = (INT, INT, BOOL)
for _op in ("fadd", "fsub", "fmul", "fdiv"):
    BINOP_SIG[_op] = (FLOAT, FLOAT, FLOAT)
for _op in ("flt", "fle", "fgt", "fge", "feq", "fne"):
    BINOP_SIG[_op] = (FLOAT, FLOAT, BOOL)
for _op in ("and", "or", "beq", "bne"):
    BINOP_SIG[_op] = (BOOL, BOOL, BOOL)
del _op

UNOPS = {
    "neg": lambda a: wrap(-a),
    "fneg": lambda a: -a,
    "not": lambda a: not a,
    "i2f": i2f,
    "f2i": f2i,
}
UNOP_SIG = {
    "neg": (INT, INT),
    "fneg": (FLOAT, FLOAT),
    "not": (BOOL, BOOL),
    "i2f": (INT, FLOAT),
    "f2i": (FLOAT, INT),
}

TRAPPING = frozenset({"div", "rem"})


def eval_binop(op: str, a, b):
    return BINOPS[op](a, b)


def eval_unop(op: str, a):
    return UNOPS[op](a)


def eval_fma(addend: float, a: float, b: float, sub: bool) -> float:
    """Multiply, round, then add or subtract and round again."""
    p = fmul(a, b)
    return canon(addend - p) if sub else canon(addend + p)


# source-level operator spelling -> typed op, keyed by operand type
SOURCE_BINOPS = {
    INT: {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "rem",
          "<": "lt", "<=": "le", ">": "gt", ">=": "ge", "==": "eq", "!=": "ne"},
    FLOAT: {"+": "fadd", "-": "fsub", "*": "fmul", "/": "fdiv",
            "<": "flt", "<=": "fle", ">": "fgt", ">=": "fge", "==": "feq",
            "!=": "fne"},
    BOOL: {"&&": "and", "||": "or", "==": "beq", "!=": "bne"},
}
