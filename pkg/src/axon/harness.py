"""Compiler driver, differential harness and kernel benchmark."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from axon import ast as A
from axon import asmmach as M
from axon import tac as T
from axon.certcheck import Verdict
from axon.codegen import BceResult, assign_layout, bounds_check_elim, compile_tac, gen_asm
from axon.frontend import parse_source
from axon.generator import generate_program
from axon.optim.pipeline import PipelineConfig, PipelineReport, run_pipeline

EMIT_TARGETS = frozenset({"tac", "cert", "intervals", "asm", "report"})
TEST_PROFILE_ENV = "AXON_TEST_PROFILE"
DIFF_FUEL = 10_000  # matched fuel for generated programs; see README


def test_profile() -> bool:
    return bool(os.environ.get(TEST_PROFILE_ENV))


@dataclass
class CompileConfig:
    optimize: bool = False
    passes: Optional[tuple] = None
    emit: frozenset = frozenset()
    fuel: int = 10**7
    seed: Optional[int] = None
    stress: bool = False
    bce: bool = True
    check: bool = True
    target: str = "linux"
    reject_all: bool = False  # totality testing: every certificate is refused
    skip: tuple = ()  # passes dropped from the standard schedule (ablation)

    def __post_init__(self):
        bad = set(self.emit) - EMIT_TARGETS
        if bad:
            raise ValueError(f"unknown emit target(s): {', '.join(sorted(bad))}")
        if self.fuel <= 0:
            raise ValueError("fuel must be positive")
        if not self.check and not test_profile():
            raise ValueError(f"disabling the checker requires {TEST_PROFILE_ENV} to be set")
        if self.target not in M.TARGETS:
            raise ValueError(f"unknown target {self.target!r}")

    def pipeline(self) -> PipelineConfig:
        pc = PipelineConfig(passes=self.passes, stress=self.stress, check=self.check,
                            keep_certs="cert" in self.emit, skip=frozenset(self.skip))
        if self.reject_all:
            pc.checker = _reject_everything
        return pc


def _reject_everything(cert) -> Verdict:
    return Verdict(False, "forced", (), "every certificate rejected")


@dataclass
class Artifacts:
    ast: A.AstProgram
    tac: T.TacProgram
    optimized: T.TacProgram
    report: Optional[PipelineReport]
    bce: BceResult
    asm: M.AsmProgram
    text: str
    seconds: float = 0.0


def frontend(source: str):
    """lex, parse, type check and well-formedness: (ast, flattened TAC)."""
    p = parse_source(source)
    ctx = A.type_check(p)
    ev = A.check_well_formed(p, ctx)
    return p, T.flatten(p, ev)


def compile_ast(p: Optional[A.AstProgram], tac: T.TacProgram, cfg: CompileConfig) -> Artifacts:
    t0 = time.perf_counter()
    report = None
    opt = tac
    if cfg.optimize or cfg.passes is not None:
        report = run_pipeline(tac, cfg.pipeline())
        opt = report.final
    bce = bounds_check_elim(opt, cfg.bce)
    asm = gen_asm(bce, assign_layout(opt, strict=False))
    text = M.pretty_print(asm, cfg.target)
    return Artifacts(p, tac, opt, report, bce, asm, text, time.perf_counter() - t0)


def compile_source(source: str, cfg: CompileConfig) -> Artifacts:
    p, tac = frontend(source)
    return compile_ast(p, tac, cfg)


# -- differential testing ---------------------------------------------------------

@dataclass
class DiffReport:
    name: str
    reference: A.Behavior  # evalAst, or evalTac of the input for TAC files
    tac: A.Behavior
    optimized: A.Behavior
    asm: A.Behavior
    asm_unoptimized: A.Behavior
    counts: dict = field(default_factory=dict)  # "unopt"/"opt" -> simulated instructions
    sim_fault: str = ""

    @property
    def behaviors(self) -> dict:
        return {"tac": self.tac, "optimized": self.optimized, "asm": self.asm,
                "asm_unoptimized": self.asm_unoptimized}

    @property
    def mismatch(self) -> str:
        """First disagreement with the reference behavior, or "" when all agree."""
        if self.sim_fault:
            return f"simulator fault: {self.sim_fault}"
        for k, b in self.behaviors.items():
            d = self.reference.first_difference(b)
            if d:
                return f"{k}: {d}"
        return ""

    @property
    def agree(self) -> bool:
        return not self.mismatch

    def line(self) -> str:
        verdict = "agree" if self.agree else f"MISMATCH {self.mismatch}"
        return f"{self.name}: {self.reference.kind} {verdict}"


def _sim(asm, fuel):
    try:
        return M.run(asm, fuel), ""
    except M.SimFault as e:
        return None, str(e)


def diff_program(name: str, p: A.AstProgram, fuel: int = DIFF_FUEL,
                 cfg: CompileConfig | None = None) -> DiffReport:
    tac = T.flatten(p, A.check_well_formed(p))
    return _diff(name, A.eval_ast(p, fuel=fuel), p, tac, fuel, cfg)


def diff_tac(name: str, tac: T.TacProgram, fuel: int = DIFF_FUEL,
             cfg: CompileConfig | None = None) -> DiffReport:
    """Like diff_program, with the input TAC's own behavior as the reference."""
    T.check_tac_wf(tac)
    return _diff(name, T.eval_tac(tac, fuel=fuel), None, tac, fuel, cfg)


def _diff(name, reference, p, tac, fuel, cfg) -> DiffReport:
    cfg = cfg or CompileConfig(optimize=True, fuel=fuel)
    b_tac = T.eval_tac(tac, fuel=fuel)
    art = compile_ast(p, tac, cfg)
    b_opt = T.eval_tac(art.optimized, fuel=fuel)
    r_opt, fault = _sim(art.asm, fuel)
    r_un, fault_un = _sim(compile_tac(tac), fuel)
    missing = A.Behavior("SimFault", ())
    return DiffReport(
        name, reference, b_tac, b_opt,
        r_opt.behavior if r_opt else missing,
        r_un.behavior if r_un else missing,
        {"unopt": r_un.count if r_un else -1, "opt": r_opt.count if r_opt else -1},
        fault or fault_un,
    )


def diff_seed(seed: int, fuel: int = DIFF_FUEL, budget: int = 12) -> DiffReport:
    return diff_program(f"seed {seed}", generate_program(seed, budget), fuel)


def _diff_seed_tuple(args):
    return diff_seed(*args)


def diff_seeds(start: int, count: int, fuel: int = DIFF_FUEL, workers: int = 1) -> list:
    """Reports in seed order, whatever the worker count."""
    jobs = [(s, fuel) for s in range(start, start + count)]
    if workers <= 1:
        return [_diff_seed_tuple(j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(_diff_seed_tuple, jobs, chunksize=32))


def diff_source(name: str, source: str, fuel: int = 10**7,
                cfg: CompileConfig | None = None) -> DiffReport:
    """Differential run of Axon source, or of a TAC dump when name ends in .tac."""
    if name.endswith(".tac"):
        return diff_tac(name, T.parse_dump(source), fuel, cfg)
    p, _ = frontend(source)
    return diff_program(name, p, fuel, cfg)


# -- kernels ---------------------------------------------------------------------

def kernel_sources() -> list:
    """(name, source) for the bundled kernels, sorted by name."""
    root = resources.files("axon") / "kernels"
    out = [(f.name.removesuffix(".axon"), f.read_text()) for f in root.iterdir()
           if f.name.endswith(".axon")]
    return sorted(out)


def directory_sources(path) -> list:
    """(file name, text) for every .axon and .tac file directly under path."""
    files = [f for f in sorted(Path(path).iterdir()) if f.suffix in (".axon", ".tac")]
    return [(f.name, f.read_text()) for f in files]


@dataclass
class BenchRow:
    name: str
    unopt: int
    opt: int
    compile_seconds: float
    check_seconds: dict  # pass name -> seconds spent in the checker
    pass_seconds: float
    iterations: int
    rejected: list
    error: str = ""

    @property
    def ratio(self) -> float:
        return self.unopt / self.opt if self.opt > 0 else float("nan")

    @property
    def check_share(self) -> float:
        total = sum(self.check_seconds.values()) + self.pass_seconds
        return sum(self.check_seconds.values()) / total if total else 0.0


def bench_kernel(name: str, source: str, cfg: CompileConfig | None = None) -> BenchRow:
    cfg = cfg or CompileConfig(optimize=True)
    p, tac = frontend(source)
    art = compile_ast(p, tac, cfg)
    checks, pass_s = {}, 0.0
    for r in art.report.records:
        checks[r.name] = checks.get(r.name, 0.0) + r.check_seconds
        pass_s += r.pass_seconds
    rejected = [r.name for r in art.report.records if not r.accepted]
    row = BenchRow(name, -1, -1, art.seconds, checks, pass_s, art.report.fixed_point_iterations,
                   rejected)
    try:
        row.unopt = M.count_dynamic_instructions(compile_tac(tac), cfg.fuel)
        row.opt = M.count_dynamic_instructions(art.asm, cfg.fuel)
    except M.DivergeError:
        row.error = "timeout under fuel"
    return row


def bench_kernels(cfg: CompileConfig | None = None) -> list:
    return [bench_kernel(n, s, cfg) for n, s in kernel_sources()]


def geomean(xs) -> float:
    xs = list(xs)
    return math.exp(sum(math.log(x) for x in xs) / len(xs)) if xs else float("nan")


LIGHT_PASSES = ("CP", "UCE", "CSE", "RCE", "P")


def render_bench(rows: list) -> str:
    head = (f"{'kernel':22} {'unopt':>9} {'opt':>9} {'ratio':>6} {'iters':>5} {'compile s':>9} "
            + " ".join(f"{p + ' ms':>8}" for p in LIGHT_PASSES) + f" {'check %':>7}")
    lines = [head]
    for r in rows:
        if r.error:
            lines.append(f"{r.name:22} {r.error}")
            continue
        checks = " ".join(f"{r.check_seconds.get(p, 0.0) * 1e3:8.1f}" for p in LIGHT_PASSES)
        lines.append(f"{r.name:22} {r.unopt:9d} {r.opt:9d} {r.ratio:6.2f} {r.iterations:5d} "
                     f"{r.compile_seconds:9.2f} {checks} {r.check_share * 100:7.1f}")
    ok = [r for r in rows if not r.error]
    lines.append(f"geometric-mean reduction: {geomean(r.ratio for r in ok):.3f}x over {len(ok)} kernels")
    return "\n".join(lines) + "\n"
