"""End-to-end acceptance run: one PASS/FAIL line per criterion.

Slow (several minutes on one core).  Run alone with
    pytest tests/test_acceptance.py -s
"""
import random
import time

import pytest

from axon import ast as A
from axon import harness as H
from axon import tac as T
from axon.certcheck import check_certificate
from axon.fuzz import fuzz_build
from axon.generator import generate_program
from axon.mutate import accepted_certificates, mutation_experiment
from axon.optim.passes import PASSES
from axon.stress import aliasing_certificate, licm_trigger

from test_regressions import CASES

pytestmark = pytest.mark.slow

CORPUS = 10_000
KERNEL_FUEL = 10**7


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def corpus():
    """Differential reports and reject-all compile outcomes for seeds plus kernels.

    The two are timed apart: only the differential run has a time budget.
    """
    reports, totality_failures = [], []
    diff_seconds = 0.0
    reject_all = H.CompileConfig(optimize=True, reject_all=True)
    programs = [(f"seed {s}", generate_program(s), H.DIFF_FUEL) for s in range(CORPUS)]
    programs += [(n, H.frontend(src)[0], KERNEL_FUEL) for n, src in H.kernel_sources()]
    for name, p, fuel in programs:
        t0 = time.perf_counter()
        reports.append(H.diff_program(name, p, fuel))
        diff_seconds += time.perf_counter() - t0
        try:
            tac = T.flatten(p, A.check_well_formed(p))
            if not H.compile_ast(p, tac, reject_all).text:
                totality_failures.append(name)
        except Exception as e:  # noqa: BLE001 - any failure counts against totality
            totality_failures.append(f"{name}: {e}")
    return reports, totality_failures, diff_seconds


def test_c1_three_way_agreement(corpus, report):
    reports, _, seconds = corpus
    bad = [r.line() for r in reports if not r.agree]
    ok = not bad and seconds <= 15 * 60
    report(1, ok, f"{len(reports)} programs, {len(bad)} mismatches, {seconds / 60:.1f} min")
    assert not bad, bad[:5]
    assert seconds <= 15 * 60


def test_c2_characterization(corpus, report):
    reports, _, _ = corpus
    legal = {A.HALT, A.DIV_BY_ZERO, A.OUT_OF_BOUNDS, A.DIVERGE}
    faults = [r.name for r in reports if r.sim_fault]
    kinds = {}
    for r in reports:
        for b in (r.asm, r.asm_unoptimized):
            kinds[b.kind] = kinds.get(b.kind, 0) + 1
    ok = not faults and set(kinds) <= legal
    report(2, ok, f"SimFault={len(faults)} " + " ".join(f"{k}={v}" for k, v in sorted(kinds.items())))
    assert ok


def test_c3_totality(corpus, report):
    reports, failures, _ = corpus
    ok = not failures
    report(3, ok, f"-O with every certificate rejected: {len(reports) - len(failures)}/{len(reports)} compiled")
    assert ok, failures[:5]


def test_c4_documented_failures_rejected(report):
    r = random.Random(4)
    licm = [0, 0]
    for _ in range(200):
        res = PASSES["licm"](licm_trigger(r), stress=True)
        if res.stats["triggering"]:
            licm[0] += 1
            licm[1] += not check_certificate(res.cert).accepted
    dae = [0, 0]
    for seed in range(1000):
        p = generate_program(seed)
        t = PASSES["cp"](T.flatten(p, A.check_well_formed(p))).transformed
        res = PASSES["dae"](t, stress=True)
        if res.cert.rel_inv:
            dae[0] += 1
            dae[1] += not check_certificate(res.cert).accepted
    alias = check_certificate(aliasing_certificate())
    ok = licm[0] > 0 and licm[0] == licm[1] and dae[0] > 0 and dae[0] == dae[1] and not alias.accepted
    report(4, ok, f"LICM {licm[1]}/{licm[0]} rejected, DAE {dae[1]}/{dae[0]} rejected, "
                  f"aliasing {'rejected (' + alias.rule + ')' if not alias.accepted else 'ACCEPTED'}")
    assert ok


def test_c5_mutation_sensitivity(report):
    certs = accepted_certificates(1000)
    rep = mutation_experiment(certs, seed=5)
    ok = len(certs) >= 1000 and rep.total >= 1000 and rep.rejection_rate >= 0.95 and not rep.unsound
    report(5, ok, f"{len(certs)} certificates, {rep.total} mutants, {rep.rejection_rate:.1%} rejected, "
                  f"{len(rep.accepted_mutants)} accepted ({len(rep.unsound)} fail re-run)")
    assert ok


def test_c6_regressions(report):
    bad = []
    for name, src in sorted(CASES.items()):
        p, _ = H.frontend(src)
        for opt in (False, True):
            r = H.diff_program(name, p, 10_000, H.CompileConfig(optimize=opt))
            if not r.agree:
                bad.append(r.line())
    import re
    reserved = re.compile(r"\b[xw]1[678]\b")
    dirty = [n for n, s in list(H.kernel_sources()) + sorted(CASES.items())
             for tgt in ("linux", "macos")
             if reserved.search(H.compile_source(s, H.CompileConfig(optimize=True, target=tgt)).text)]
    ok = not bad and not dirty
    report(6, ok, f"{len(CASES) * 2 - len(bad)}/{len(CASES) * 2} regression runs agree, "
                  f"reserved registers in {len(dirty)} outputs")
    assert ok, bad + dirty


@pytest.fixture(scope="module")
def bench():
    return H.bench_kernels(H.CompileConfig(optimize=True, fuel=KERNEL_FUEL))


def test_c7_kernel_speedup(bench, report):
    errors = [r.name for r in bench if r.error]
    worse = [r.name for r in bench if not r.error and r.opt > r.unopt]
    g = H.geomean(r.ratio for r in bench if not r.error)
    ok = not errors and not worse and g >= 2.0
    report(7, ok, f"geomean {g:.3f}x over {len(bench)} kernels, regressions={worse}, errors={errors}")
    assert ok


def test_c8_fixed_point(bench, report):
    iters = {r.name: r.iterations for r in bench}
    ok = max(iters.values()) <= 2
    report(8, ok, f"max fixed-point iterations {max(iters.values())}")
    assert ok


def test_c9_check_times(bench, report, capsys):
    with capsys.disabled():
        print()
        print(H.render_bench(bench), end="")
    slow = [r.name for r in bench if r.compile_seconds >= 10]
    share = sum(r.check_share for r in bench) / len(bench)
    ok = not slow
    report(9, ok, f"max compile {max(r.compile_seconds for r in bench):.2f} s, "
                  f"mean checking share {share:.0%} (reported only)")
    assert ok


def test_c10_fuzz_robustness(report):
    codes, crashes = fuzz_build(10_000, seed=10)
    ok = not crashes
    report(10, ok, "exit codes " + " ".join(f"{c}:{n}" for c, n in sorted(codes.items())))
    assert ok, crashes[:3]
