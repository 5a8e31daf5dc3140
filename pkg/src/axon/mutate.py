"""Single-field certificate mutations and the mutation-sensitivity experiment."""

from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass

from axon import ast as A
from axon import asmmach as M
from axon import tac as T
from axon import values as V
from axon.certcheck import (Certificate, TransVarEqConst, TransVarEqOrigVar, VarEqConst,
                            check_certificate)
from axon.codegen import compile_tac
from axon.generator import generate_program
from axon.optim.pipeline import PipelineConfig, run_pipeline
from axon.tac import Const

FAMILIES = ("sp-const", "rel-const", "rel-var", "cmd-map", "var-map")


def perturb(c: Const, r: random.Random) -> Const:
    """A constant of the same type with a different value."""
    if c.type == V.BOOL:
        return Const(V.BOOL, not c.value)
    if c.type == V.INT:
        return Const(V.INT, V.wrap(c.value + r.choice((1, -1, 2, 7, 1 << 32))))
    x = c.value
    if math.isnan(x) or math.isinf(x):
        return Const(V.FLOAT, r.choice((0.0, 1.0)))
    options = [y for y in (x + 1.0, -x - 0.5, x * 2.0 + 0.25) if V.float_bits(y) != V.float_bits(x)]
    return Const(V.FLOAT, r.choice(options) if options else math.nextafter(x, math.inf))


@dataclass
class Mutant:
    family: str
    where: str
    cert: Certificate


def _sites(cert: Certificate) -> dict:
    out = {f: [] for f in FAMILIES}
    for side, table in (("orig", cert.sp_inv_orig), ("trans", cert.sp_inv_trans)):
        for L, invs in table.items():
            for i, inv in enumerate(invs):
                if isinstance(inv, VarEqConst):
                    out["sp-const"].append((side, L, i))
    for L, invs in cert.rel_inv.items():
        for i, inv in enumerate(invs):
            if isinstance(inv, TransVarEqConst):
                out["rel-const"].append((L, i))
            elif isinstance(inv, TransVarEqOrigVar):
                out["rel-var"].append((L, i))
    if len(cert.original.commands) > 1:
        out["cmd-map"] = sorted(cert.cmd_map)
    out["var-map"] = sorted(cert.var_map)
    return out


def _same_type_vars(prog: T.TacProgram, ty: str, avoid) -> list:
    return sorted(v for v, t in prog.ctx.items() if t == ty and v != avoid)


def _replace_inv(invs: tuple, i: int, new) -> tuple:
    return invs[:i] + (new,) + invs[i + 1:]


def mutate(cert: Certificate, r: random.Random):
    """One single-field mutant of cert, or None if it has nothing to mutate."""
    sites = _sites(cert)
    families = [f for f in FAMILIES if sites[f]]
    r.shuffle(families)
    for fam in families:
        site = r.choice(sites[fam])
        m = _apply(cert, fam, site, r)
        if m is not None:
            return m
    return None


def _apply(cert, fam, site, r):
    o = cert.original
    if fam == "sp-const":
        side, L, i = site
        field = "sp_inv_orig" if side == "orig" else "sp_inv_trans"
        table = dict(getattr(cert, field))
        inv = table[L][i]
        table[L] = _replace_inv(table[L], i, VarEqConst(inv.var, perturb(inv.const, r)))
        return Mutant(fam, f"{side} L{L} {inv.var}", dataclasses.replace(cert, **{field: table}))
    if fam in ("rel-const", "rel-var"):
        L, i = site
        table = dict(cert.rel_inv)
        inv = table[L][i]
        if fam == "rel-const":
            new = TransVarEqConst(inv.vt, perturb(inv.const, r))
        else:
            ty = o.ctx.get(inv.vo)
            choices = _same_type_vars(o, ty, inv.vo)
            if not choices:
                return None
            new = TransVarEqOrigVar(inv.vt, r.choice(choices))
        table[L] = _replace_inv(table[L], i, new)
        return Mutant(fam, f"T{L} {inv.vt}", dataclasses.replace(cert, rel_inv=table))
    if fam == "cmd-map":
        tl = site
        n = len(o.commands)
        cur = cert.cmd_map[tl]
        new = r.choice([L for L in range(n) if L != cur])
        cm = dict(cert.cmd_map)
        cm[tl] = new
        return Mutant(fam, f"T{tl} O{cur}->O{new}", dataclasses.replace(cert, cmd_map=cm))
    vt = site
    cur = cert.var_map[vt]
    ty = cert.transformed.ctx.get(vt) or o.ctx.get(vt)
    choices = _same_type_vars(o, ty, cur if isinstance(cur, str) else None)
    vm = dict(cert.var_map)
    if isinstance(cur, Const):
        vm[vt] = perturb(cur, r)
    elif choices:
        vm[vt] = r.choice(choices)
    else:
        return None
    return Mutant(fam, f"{vt}", dataclasses.replace(cert, var_map=vm))


# -- the experiment --------------------------------------------------------------

def accepted_certificates(count: int, start_seed: int = 0, extra_programs=(), max_seeds: int = 100_000):
    """At least `count` accepted certificates from pipeline runs, in seed order."""
    out = []
    progs = list(extra_programs)
    seed = start_seed
    cfg = PipelineConfig(keep_certs=True)
    while len(out) < count:
        if progs:
            tac = progs.pop(0)
        else:
            if seed - start_seed >= max_seeds:
                break
            p = generate_program(seed)
            seed += 1
            tac = T.flatten(p, A.check_well_formed(p))
        rep = run_pipeline(tac, cfg)
        out.extend(res.cert for res, verdict in rep.certs if verdict is not None and verdict.accepted)
    return out


def differential_ok(cert: Certificate, fuel: int = 10_000) -> bool:
    """The certified pair behaves identically, as TAC and once compiled."""
    b_o = T.eval_tac(cert.original, fuel=fuel)
    b_t = T.eval_tac(cert.transformed, fuel=fuel)
    if b_o != b_t:
        return False
    return M.simulate(compile_tac(cert.transformed), fuel) == b_o


@dataclass
class MutationReport:
    total: int
    rejected: int
    accepted_mutants: list  # (Mutant, differential ok)
    by_family: dict  # family -> [total, rejected]

    @property
    def rejection_rate(self) -> float:
        return self.rejected / self.total if self.total else 0.0

    @property
    def unsound(self) -> list:
        return [m for m, ok in self.accepted_mutants if not ok]

    def render(self) -> str:
        lines = [f"mutants: {self.total}, rejected: {self.rejected} ({self.rejection_rate:.1%})"]
        for fam, (n, rej) in sorted(self.by_family.items()):
            lines.append(f"  {fam:10} {rej}/{n}")
        lines.append(f"accepted mutants: {len(self.accepted_mutants)}, "
                     f"failing differential re-run: {len(self.unsound)}")
        return "\n".join(lines) + "\n"


def mutation_experiment(certs, seed: int = 0, per_cert: int = 1) -> MutationReport:
    r = random.Random(seed)
    total = rejected = 0
    accepted, fams = [], {}
    for cert in certs:
        for _ in range(per_cert):
            m = mutate(cert, r)
            if m is None:
                continue
            total += 1
            slot = fams.setdefault(m.family, [0, 0])
            slot[0] += 1
            if check_certificate(m.cert).accepted:
                accepted.append((m, differential_ok(m.cert)))
            else:
                rejected += 1
                slot[1] += 1
    return MutationReport(total, rejected, accepted, fams)
