"""Seeded random Axon programs for differential testing.

Programs are well-formed by construction.  Most loops use a private counter
(`while (cK < N) { ...; cK = cK + 1; }`) and always terminate; the rest loop
on an arbitrary boolean expression and may diverge, in which case every
interpreter stops at the same fuel bound.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from axon import ast as A
from axon.values import BOOL, FLOAT, INT

_SPAN = A.NOSPAN

FLOAT_LITERALS = (0.0, 0.5, 1.0, 1.5, 2.0, 3.25, 10.0, 0.1, 1e-300, 1e300, 123.456, 7.0)
INT_LITERALS = (0, 1, 2, 3, 4, 5, 7, 8, 10, 16, 100, 1000, 65535, 1 << 31, (1 << 62) + 3,
                (1 << 63) - 1)


@dataclass
class GenConfig:
    budget: int = 12  # statements, roughly
    max_depth: int = 3  # expression depth
    max_nest: int = 2  # loop/if nesting
    bounded_loop_share: float = 0.8


class _Gen:
    def __init__(self, seed: int, cfg: GenConfig):
        self.r = random.Random(seed)
        self.cfg = cfg
        self.scalars = {INT: [], FLOAT: [], BOOL: []}
        self.arrays = {INT: [], FLOAT: [], BOOL: []}
        self.lengths = {}
        self.decls = []
        self.counters = []
        self.locked = set()  # counters of enclosing loops (never assigned in the body)
        self.left = cfg.budget

    # declarations ----------------------------------------------------------------
    def declare(self):
        r = self.r
        n = 0
        for ty, lo, hi in ((INT, 2, 5), (FLOAT, 1, 3), (BOOL, 1, 2)):
            for _ in range(r.randint(lo, hi)):
                name = f"{ty[0]}{n}"
                n += 1
                self.scalars[ty].append(name)
                self.decls.append(A.Decl(name, ty, None, _SPAN))
        for _ in range(r.randint(0, 2)):
            ty = r.choice((INT, INT, FLOAT, BOOL))
            name = f"arr{n}"
            n += 1
            length = r.randint(1, 8)
            self.arrays[ty].append(name)
            self.lengths[name] = length
            self.decls.append(A.Decl(name, ty, length, _SPAN))

    def counter(self) -> str:
        name = f"c{len(self.counters)}"
        self.counters.append(name)
        self.decls.append(A.Decl(name, INT, None, _SPAN))
        return name

    # expressions -----------------------------------------------------------------
    def lit(self, ty):
        r = self.r
        if ty == INT:
            return A.IntLit(r.choice(INT_LITERALS) if r.random() < 0.3 else r.randint(0, 9), _SPAN)
        if ty == FLOAT:
            return A.FloatLit(r.choice(FLOAT_LITERALS), _SPAN)
        return A.BoolLit(r.random() < 0.5, _SPAN)

    def readable(self, ty):
        names = list(self.scalars[ty])
        if ty == INT:
            names += self.counters
        return names

    def leaf(self, ty):
        names = self.readable(ty)
        if names and self.r.random() < 0.65:
            return A.Var(self.r.choice(names), _SPAN)
        return self.lit(ty)

    def index(self, arr, depth):
        r = self.r
        n = self.lengths[arr]
        roll = r.random()
        if roll < 0.35:
            return A.IntLit(r.randrange(n), _SPAN)
        if roll < 0.6 and self.counters:
            return A.Var(r.choice(self.counters), _SPAN)
        if roll < 0.85:
            return A.Binary("%", self.expr(INT, depth + 1), A.IntLit(n, _SPAN), _SPAN)
        return self.expr(INT, depth + 1)

    def expr(self, ty, depth=0):
        r = self.r
        if depth >= self.cfg.max_depth or r.random() < 0.3:
            return self.leaf(ty)
        if self.arrays[ty] and r.random() < 0.15:
            arr = r.choice(self.arrays[ty])
            return A.Index(arr, self.index(arr, depth), _SPAN)
        d = depth + 1
        if ty == INT:
            roll = r.random()
            if roll < 0.1:
                return A.Unary("-", self.expr(INT, d), _SPAN)
            if roll < 0.17:
                return A.Convert("floatToInt", self.expr(FLOAT, d), _SPAN)
            op = r.choice(("+", "+", "-", "*", "/", "%"))
            rhs = self.expr(INT, d)
            if op in ("/", "%") and r.random() < 0.85:
                rhs = A.IntLit(r.choice((1, 2, 3, 5, 7, 10)), _SPAN)
                if r.random() < 0.3:
                    rhs = A.Unary("-", rhs, _SPAN)
            return A.Binary(op, self.expr(INT, d), rhs, _SPAN)
        if ty == FLOAT:
            roll = r.random()
            if roll < 0.08:
                return A.Unary("-", self.expr(FLOAT, d), _SPAN)
            if roll < 0.2:
                return A.Convert("intToFloat", self.expr(INT, d), _SPAN)
            if roll < 0.25:  # special values: inf, -inf, nan
                num = r.choice((1.0, -1.0, 0.0))
                lit = A.FloatLit(abs(num), _SPAN)
                num_e = A.Unary("-", lit, _SPAN) if num < 0 else lit
                return A.Binary("/", num_e, A.FloatLit(0.0, _SPAN), _SPAN)
            op = r.choice(("+", "-", "*", "*", "/"))
            return A.Binary(op, self.expr(FLOAT, d), self.expr(FLOAT, d), _SPAN)
        roll = r.random()
        if roll < 0.45:
            t = r.choice((INT, INT, FLOAT))
            op = r.choice(("<", "<=", ">", ">=", "==", "!="))
            return A.Binary(op, self.expr(t, d), self.expr(t, d), _SPAN)
        if roll < 0.6:
            return A.Unary("!", self.expr(BOOL, d), _SPAN)
        op = r.choice(("&&", "||", "==", "!="))
        return A.Binary(op, self.expr(BOOL, d), self.expr(BOOL, d), _SPAN)

    # statements ------------------------------------------------------------------
    def assign(self):
        r = self.r
        ty = r.choice((INT, INT, INT, FLOAT, FLOAT, BOOL))
        if self.arrays[ty] and r.random() < 0.3:
            arr = r.choice(self.arrays[ty])
            return A.ArrayAssign(arr, self.index(arr, 1), self.expr(ty), _SPAN)
        return A.Assign(r.choice(self.scalars[ty]), self.expr(ty), _SPAN)

    def block(self, nest):
        out = []
        for _ in range(self.r.randint(1, 3)):
            if self.left <= 0:
                break
            out.extend(self.stmt(nest))
        return tuple(out)

    def stmt(self, nest) -> list:
        r = self.r
        self.left -= 1
        roll = r.random()
        if nest < self.cfg.max_nest and roll < 0.15:
            return self.loop(nest)
        if nest < self.cfg.max_nest and roll < 0.27:
            orelse = self.block(nest + 1) if r.random() < 0.5 else None
            return [A.If(self.expr(BOOL), self.block(nest + 1), orelse, _SPAN)]
        if roll < 0.42:
            ty = r.choice((INT, FLOAT, BOOL))
            return [A.Print(ty, self.expr(ty), _SPAN)]
        if roll < 0.45:
            return [A.PrintString(r.choice(("tick", "x=\"1\"", "a\\b", "")), _SPAN)]
        return [self.assign()]

    def loop(self, nest) -> list:
        r = self.r
        if r.random() < self.cfg.bounded_loop_share:
            c = self.counter()
            bound = A.IntLit(r.randint(0, 6), _SPAN)
            init = A.Assign(c, A.IntLit(0, _SPAN), _SPAN)
            body = self.block(nest + 1)
            step = A.Assign(c, A.Binary("+", A.Var(c, _SPAN), A.IntLit(1, _SPAN), _SPAN), _SPAN)
            cond = A.Binary("<", A.Var(c, _SPAN), bound, _SPAN)
            loop = A.While(cond, body + (step,), _SPAN)
            return [init, loop]
        # unconstrained: the step is 1 + (e % 2) for a random e, so it may be 0 or
        # negative on some trips and the loop can run into the fuel bound
        v = r.choice(self.scalars[INT])
        cond = A.Binary(r.choice(("<", "<=")), A.Var(v, _SPAN), A.IntLit(r.randint(0, 6), _SPAN), _SPAN)
        if r.random() < 0.3:
            cond = A.Binary("&&", cond, self.expr(BOOL, 1), _SPAN)
        wobble = A.Binary("%", self.expr(INT, 1), A.IntLit(2, _SPAN), _SPAN)
        step = A.Binary("+", A.Binary("+", A.Var(v, _SPAN), A.IntLit(1, _SPAN), _SPAN), wobble, _SPAN)
        body = self.block(nest + 1) + (A.Assign(v, step, _SPAN),)
        return [A.While(cond, body, _SPAN)]

    def program(self) -> A.AstProgram:
        self.declare()
        body = []
        while self.left > 0:
            body.extend(self.stmt(0))
        for ty in (INT, FLOAT, BOOL):
            if self.scalars[ty] and self.r.random() < 0.5:
                body.append(A.Print(ty, A.Var(self.r.choice(self.scalars[ty]), _SPAN), _SPAN))
        return A.AstProgram(tuple(self.decls), tuple(body))


def generate_program(seed: int, budget: int = 12, cfg: GenConfig | None = None) -> A.AstProgram:
    if budget < 1:
        raise ValueError("budget must be at least 1")
    cfg = cfg or GenConfig(budget=budget)
    if cfg.budget != budget:
        cfg = GenConfig(budget, cfg.max_depth, cfg.max_nest, cfg.bounded_loop_share)
    return _Gen(seed, cfg).program()
