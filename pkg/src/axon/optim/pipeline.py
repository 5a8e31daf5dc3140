"""Pass ordering, certificate gating and the fixed-point loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from axon import tac as T
from axon.certcheck import check_certificate
from axon.optim.passes import PASSES
from axon.optim.rewrite import RewriteError

PREFIX = ("cp", "uce", "cse", "cp", "dae")
LOOP = ("licm", "cp", "rce", "cse", "dae")
SUFFIX = ("fma", "uce", "p", "ra")
MAX_ITERATIONS = 5


@dataclass
class PassRecord:
    name: str
    accepted: bool
    reason: str = ""
    changed: bool = False
    pass_seconds: float = 0.0
    check_seconds: float = 0.0
    stats: dict = field(default_factory=dict)


@dataclass
class PipelineReport:
    records: list
    final: T.TacProgram
    fixed_point_iterations: int = 0
    converged: bool = True

    def render(self) -> str:
        lines = [f"{'pass':6} {'verdict':8} {'changed':7} {'pass ms':>8} {'check ms':>8}  stats"]
        for r in self.records:
            verdict = "accept" if r.accepted else "REJECT"
            stats = " ".join(f"{k}={v}" for k, v in sorted(r.stats.items()))
            lines.append(f"{r.name:6} {verdict:8} {str(r.changed):7} {r.pass_seconds * 1e3:8.2f} "
                         f"{r.check_seconds * 1e3:8.2f}  {stats}")
            if not r.accepted:
                lines.append(f"       {r.reason}")
        lines.append(f"fixed-point iterations: {self.fixed_point_iterations}"
                     f"{'' if self.converged else ' (cap reached)'}")
        return "\n".join(lines) + "\n"

    @property
    def accepted(self) -> list:
        return [r.name for r in self.records if r.accepted]


@dataclass
class PipelineConfig:
    passes: Optional[tuple] = None  # explicit pass list; None runs the standard schedule
    stress: bool = False
    check: bool = True
    checker: Callable = check_certificate
    keep_certs: bool = False
    skip: frozenset = frozenset()  # passes left out of the standard schedule


class _Runner:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.records = []
        self.certs = []

    def run(self, name: str, prog: T.TacProgram) -> T.TacProgram:
        if name in self.cfg.skip:
            return prog
        fn = PASSES[name]
        t0 = time.perf_counter()
        try:
            res = fn(prog, stress=self.cfg.stress)
        except RewriteError as e:
            self.records.append(PassRecord(name.upper(), False, f"pass failed: {e}",
                                           pass_seconds=time.perf_counter() - t0))
            return prog
        t1 = time.perf_counter()
        if not res.changed:
            # the original is returned untouched, so there is nothing to certify
            self.records.append(PassRecord(res.name, True, "unchanged", False, t1 - t0, 0.0, res.stats))
            return prog
        if self.cfg.check:
            verdict = self.cfg.checker(res.cert)
        else:
            verdict = None
        t2 = time.perf_counter()
        ok = verdict is None or verdict.accepted
        self.records.append(PassRecord(res.name, ok, "" if ok else str(verdict),
                                       res.changed and ok, t1 - t0, t2 - t1, res.stats))
        if self.cfg.keep_certs:
            self.certs.append((res, verdict))
        return res.transformed if ok else prog


def run_pipeline(prog: T.TacProgram, cfg: PipelineConfig | None = None) -> PipelineReport:
    cfg = cfg or PipelineConfig()
    r = _Runner(cfg)
    if cfg.passes is not None:
        for name in cfg.passes:
            prog = r.run(name, prog)
        rep = PipelineReport(r.records, prog, 0)
        rep.certs = r.certs
        return rep
    for name in PREFIX:
        prog = r.run(name, prog)
    iterations, converged = 0, False
    while iterations < MAX_ITERATIONS:
        iterations += 1
        before = prog
        for name in LOOP:
            prog = r.run(name, prog)
        if prog.same_shape(before):
            converged = True
            break
    for name in SUFFIX:
        prog = r.run(name, prog)
    rep = PipelineReport(r.records, prog, iterations, converged)
    rep.certs = r.certs
    return rep
