"""Canonical text form of certificates, for `--emit cert` and `axon check-cert`.

    ORIGINAL            TAC dump of the original program
    TRANSFORMED         TAC dump of the transformed program
    CMDMAP              `T3 -> O5`
    SPINV orig          `O5: x = 3`, `O5: y = add a b`, `O5: z = fma c a b`
    SPINV trans         same forms on transformed labels
    RELINV              `T3: __ir1 ~ x` or `T3: __ir1 ~ 5`
    VARMAP              `__ir1 ~ x`
    TRANSMAP            `T3 -> T4: O5->O6 O6->O7`, `-` for an empty path;
                        `exit` is the halting pseudo-label, `entry` the entry edge
"""

from __future__ import annotations

from axon import tac as T
from axon.certcheck import (ENTRY, Certificate, TransVarEqConst, TransVarEqOrigVar,
                            VarEqBinop, VarEqConst, VarEqFma)
from axon.tac import EXIT, Const

SECTIONS = ("ORIGINAL", "TRANSFORMED", "CMDMAP", "SPINV orig", "SPINV trans", "RELINV",
            "VARMAP", "TRANSMAP")


class CertFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _op(o) -> str:
    return T.format_operand(o)


def _sp_text(inv) -> str:
    if isinstance(inv, VarEqConst):
        return f"{inv.var} = {_op(inv.const)}"
    if isinstance(inv, VarEqBinop):
        return f"{inv.var} = {inv.op} {_op(inv.lhs)} {_op(inv.rhs)}"
    kw = "fms" if inv.sub else "fma"
    return f"{inv.var} = {kw} {_op(inv.addend)} {_op(inv.mul_l)} {_op(inv.mul_r)}"


def _label(prefix, l) -> str:
    if l == EXIT:
        return "exit"
    if l == ENTRY:
        return "entry"
    return f"{prefix}{l}"


def format_certificate(c: Certificate) -> str:
    out = ["ORIGINAL", T.dump(c.original).rstrip("\n"), "TRANSFORMED",
           T.dump(c.transformed).rstrip("\n"), "CMDMAP"]
    out += [f"T{t} -> O{o}" for t, o in sorted(c.cmd_map.items())]
    for name, m, pre in (("SPINV orig", c.sp_inv_orig, "O"), ("SPINV trans", c.sp_inv_trans, "T")):
        out.append(name)
        out += [f"{pre}{l}: {_sp_text(inv)}" for l in sorted(m) for inv in m[l]]
    out.append("RELINV")
    for l in sorted(c.rel_inv):
        for r in c.rel_inv[l]:
            rhs = r.vo if isinstance(r, TransVarEqOrigVar) else _op(r.const)
            out.append(f"T{l}: {r.vt} ~ {rhs}")
    out.append("VARMAP")
    out += [f"{vt} ~ {_op(vo)}" for vt, vo in sorted(c.var_map.items())]
    out.append("TRANSMAP")
    for (a, b), path in sorted(c.trans_map.items()):
        edges = " ".join(f"{_label('O', x)}->{_label('O', y)}" for x, y in path) or "-"
        out.append(f"{_label('T', a)} -> {_label('T', b)}: {edges}")
    return "\n".join(out) + "\n"


def _parse_label(s: str, prefix: str, n: int) -> int:
    if s == "exit":
        return EXIT
    if s == "entry":
        return ENTRY
    if not s.startswith(prefix) or not s[len(prefix):].isdigit():
        raise CertFormatError(n, f"expected a {prefix} label, got {s!r}")
    return int(s[len(prefix):])


def _parse_sp(text: str, n: int):
    var, eq, rhs = text.partition(" = ")
    if not eq:
        raise CertFormatError(n, "expected `var = ...`")
    parts = rhs.split()
    try:
        if len(parts) == 1:
            c = T.parse_operand(parts[0])
            if not isinstance(c, Const):
                raise CertFormatError(n, "constant invariant needs a constant")
            return VarEqConst(var, c)
        if len(parts) == 3:
            return VarEqBinop(var, parts[0], T.parse_operand(parts[1]), T.parse_operand(parts[2]))
        if len(parts) == 4 and parts[0] in ("fma", "fms"):
            a, l, r = (T.parse_operand(x) for x in parts[1:])
            return VarEqFma(var, a, l, r, parts[0] == "fms")
    except (ValueError, IndexError) as e:
        raise CertFormatError(n, str(e)) from None
    raise CertFormatError(n, f"unrecognized invariant {text!r}")


def parse_certificate(text: str) -> Certificate:
    lines = text.splitlines()
    bodies, current = {}, None
    for n, raw in enumerate(lines, 1):
        line = raw.rstrip()
        if line in SECTIONS:
            if line in bodies:
                raise CertFormatError(n, f"duplicate section {line}")
            current = line
            bodies[current] = []
        elif line:
            if current is None:
                raise CertFormatError(n, "content before the first section")
            bodies[current].append((n, line))
    missing = [s for s in SECTIONS if s not in bodies]
    if missing:
        raise CertFormatError(len(lines), f"missing section {missing[0]}")

    def prog(sec):
        try:
            return T.parse_dump("\n".join(l for _, l in bodies[sec]))
        except Exception as e:  # the TAC parser reports its own errors
            first = bodies[sec][0][0] if bodies[sec] else 0
            raise CertFormatError(first, f"{sec}: {e}") from None

    def split(n, line, sep):
        a, s, b = line.partition(sep)
        if not s:
            raise CertFormatError(n, f"expected {sep.strip()!r}")
        return a.strip(), b.strip()

    original, transformed = prog("ORIGINAL"), prog("TRANSFORMED")
    cmd_map = {}
    for n, line in bodies["CMDMAP"]:
        a, b = split(n, line, "->")
        cmd_map[_parse_label(a, "T", n)] = _parse_label(b, "O", n)
    sp = {}
    for sec, pre in (("SPINV orig", "O"), ("SPINV trans", "T")):
        m = {}
        for n, line in bodies[sec]:
            a, b = split(n, line, ":")
            m.setdefault(_parse_label(a, pre, n), []).append(_parse_sp(b, n))
        sp[sec] = {k: tuple(v) for k, v in m.items()}
    rel = {}
    for n, line in bodies["RELINV"]:
        a, b = split(n, line, ":")
        vt, vo = split(n, b, "~")
        o = T.parse_operand(vo)
        inv = TransVarEqConst(vt, o) if isinstance(o, Const) else TransVarEqOrigVar(vt, o)
        rel.setdefault(_parse_label(a, "T", n), []).append(inv)
    var_map = {}
    for n, line in bodies["VARMAP"]:
        vt, vo = split(n, line, "~")
        var_map[vt] = T.parse_operand(vo)
    trans = {}
    for n, line in bodies["TRANSMAP"]:
        head, tail = split(n, line, ":")
        a, b = split(n, head, "->")
        path = []
        if tail != "-":
            for e in tail.split():
                x, y = split(n, e, "->")
                path.append((_parse_label(x, "O", n), _parse_label(y, "O", n)))
        trans[(_parse_label(a, "T", n), _parse_label(b, "T", n))] = tuple(path)
    return Certificate(original, transformed, cmd_map, sp["SPINV orig"], sp["SPINV trans"],
                       {k: tuple(v) for k, v in rel.items()}, var_map, trans)
