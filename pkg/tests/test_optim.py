import pytest
from hypothesis import given, strategies as st

from axon import ast as A
from axon import tac as T
from axon.certcheck import check_certificate
from axon.generator import generate_program
from axon.optim import pipeline as PL
from axon.optim.passes import PASSES, allocate_registers, register_allocation
from axon.optim.pipeline import PipelineConfig, run_pipeline

from conftest import flat
from axon.stress import DAE_TRIGGER, LICM_TRIGGER


def apply(names, src):
    t = flat(src) if isinstance(src, str) else src
    for n in names[:-1]:
        t = PASSES[n](t).transformed
    return t, PASSES[names[-1]](t)


def same_behavior(a, b, fuel=10_000):
    assert T.eval_tac(a, fuel=fuel) == T.eval_tac(b, fuel=fuel)


def assert_sound(t, res):
    assert check_certificate(res.cert).accepted
    same_behavior(t, res.transformed)


def cmds(p, kind):
    return [c for c in p.commands if isinstance(c, kind)]


def test_cp_folds_constant_chain():
    t, res = apply(["cp"], "int x; int y; x = 3; y = x + 4; printInt y;")
    assert res.stats["folded"] > 0
    assert any(isinstance(c, T.Print) and c.operand == T.Const(T.V.INT, 7) for c in res.transformed.commands)
    assert_sound(t, res)


def test_uce_drops_dead_branch_after_cp():
    t, res = apply(["cp", "uce"], "int x; if (false) { x = 1; } printInt x;")
    assert res.stats["removed"] == 2
    assert not cmds(res.transformed, T.IfGoto)
    assert_sound(t, res)


def test_cse_reuses_earlier_product():
    t, res = apply(["cse"], "int a; int b; int x; int y; x = a * b; y = a * b; printInt x + y;")
    assert res.stats["replaced"] == 1
    assert sum(1 for c in res.transformed.commands
               if isinstance(c, T.AssignBinop) and c.op == "mul") == 1
    assert_sound(t, res)


def test_dae_removes_dead_temporaries_but_keeps_observables():
    t, res = apply(["cp", "dae"], "int x; int y; x = 5; y = 6; printInt y;")
    assert res.stats["removed"] == 3
    assert {T.dest(c) for c in res.transformed.commands if T.dest(c)} == {"x", "y"}
    assert_sound(t, res)


def test_licm_hoists_loop_constant():
    t, res = apply(["licm"], "int i; int k; i = 0; while (i < 3) { k = 9; i = i + k; } printInt i;")
    assert res.stats["hoisted"] == 1
    back = next(L for L, c in enumerate(res.transformed.commands) if isinstance(c, T.Goto))
    const9 = next(L for L, c in enumerate(res.transformed.commands)
                  if isinstance(c, T.AssignConst) and c.const.value == 9)
    assert const9 < res.transformed.commands[back].target
    assert_sound(t, res)


def test_licm_leaves_multiply_defined_temp_in_place():
    prog = T.parse_dump(LICM_TRIGGER)
    assert not PASSES["licm"](prog).changed


def test_rce_removes_redundant_constant():
    t, res = apply(["rce"], "int i; int s; i = 0; while (i < 3) { s = s + 7; i = i + 1; } printInt s;")
    assert res.stats["removed"] == 1
    assert len(res.transformed.commands) == len(t.commands) - 1
    assert_sound(t, res)


def test_fma_fuses_multiply_add():
    t, res = apply(["fma"], "float a; float b; float c; float d; d = a * b + c; printFloat d;")
    assert res.stats["fused"] == 1
    assert any(isinstance(c, T.AssignFma) for c in res.transformed.commands)
    assert_sound(t, res)


def test_fma_not_applied_to_integers():
    _, res = apply(["fma"], "int a; int b; int c; int d; d = a * b + c; printInt d;")
    assert not res.changed


def test_peephole_folds_negation_into_compare():
    t, res = apply(["p"], "int x; int y; if (x < y) { x = 1; } printInt x;")
    assert res.stats["negations"] == 1
    assert not any(isinstance(c, T.AssignUnop) and c.op == "not" for c in res.transformed.commands)
    assert_sound(t, res)


def test_ra_renames_into_register_pool():
    t, res = apply(["ra"], "int i; int s; i = 0; while (i < 3) { s = s + i; i = i + 1; } printInt s;")
    regs = [v for v in res.transformed.ctx if T.classify(v).cls == "reg"]
    assert regs
    assert_sound(t, res)


def _pressure_program(n):
    """n integer temporaries all live after the last definition, then summed."""
    vals = [f"__t{k + 1}" for k in range(n)]
    sums = [f"__t{n + k}" for k in range(1, n)]
    lines = [f"var int {v}" for v in vals + sums]
    body = [f"{v} = const {k + 1}" for k, v in enumerate(vals)]
    acc = vals[0]
    for v, s in zip(vals[1:], sums):
        body.append(f"{s} = add {acc} {v}")
        acc = s
    body += [f"print int {acc}", "halt"]
    return T.parse_dump("\n".join(lines + [f"L{i}: {c}" for i, c in enumerate(body)]) + "\n")


def test_ra_ten_live_integers_fit():
    _, spilled, _ = allocate_registers(_pressure_program(10))
    assert spilled == []


def test_ra_spills_the_eleventh_live_integer():
    t = _pressure_program(11)
    _, spilled, _ = allocate_registers(t)
    assert len(spilled) == 1
    res = register_allocation(t)
    assert res.stats["spilled"] == 1
    assert_sound(t, res)


def test_ra_float_and_int_pools_are_separate():
    src = "int a; float f; a = 1; f = 2.0; printInt a; printFloat f;"
    assign, spilled, _ = allocate_registers(flat(src))
    assert not spilled
    assert {r[:3] for r in assign.values()} == {"__i", "__f"}


# -- pipeline ---------------------------------------------------------------------

def test_schedule_order():
    t = flat("int i; int s; i = 0; while (i < 4) { s = s + 7; i = i + 1; } printInt s;")
    rep = run_pipeline(t)
    names = [r.name.lower() for r in rep.records]
    n_prefix = len(PL.PREFIX)
    assert tuple(names[:n_prefix]) == PL.PREFIX
    loop = names[n_prefix:len(names) - len(PL.SUFFIX)]
    assert len(loop) == len(PL.LOOP) * rep.fixed_point_iterations
    assert tuple(names[-len(PL.SUFFIX):]) == PL.SUFFIX
    assert rep.converged


def test_explicit_pass_list():
    t = flat("int x; x = 1 + 2; printInt x;")
    rep = run_pipeline(t, PipelineConfig(passes=("cp",)))
    assert [r.name for r in rep.records] == ["CP"]
    rep = run_pipeline(t, PipelineConfig(passes=()))
    assert rep.records == [] and rep.final is t


def test_unchanged_passes_skip_the_checker():
    calls = []

    def spy(cert):
        calls.append(cert)
        return check_certificate(cert)

    t = flat("int x; printInt x;")
    rep = run_pipeline(t, PipelineConfig(checker=spy))
    assert len(calls) == sum(1 for r in rep.records if r.changed)


def test_rejection_keeps_input_and_continues():
    prog = T.parse_dump(DAE_TRIGGER)
    rep = run_pipeline(prog, PipelineConfig(passes=("dae", "cp"), stress=True))
    assert not rep.records[0].accepted
    assert rep.records[1].name == "CP"
    same_behavior(prog, rep.final)


def test_reject_all_still_produces_program():
    t = flat("int x; x = 1 + 2; printInt x;")
    rep = run_pipeline(t, PipelineConfig(checker=lambda c: check_certificate(
        c).__class__(False, "forced", (), "no")))
    assert rep.final.same_shape(t)


def test_skip_removes_pass_from_schedule():
    t = flat("int i; int s; i = 0; while (i < 4) { s = s + 7; i = i + 1; } printInt s;")
    rep = run_pipeline(t, PipelineConfig(skip=frozenset({"ra"})))
    assert "RA" not in [r.name for r in rep.records]
    assert not any(T.classify(v).cls == "reg" for v in rep.final.ctx)


def test_stress_mode_triggers_are_rejected_in_pipeline():
    rep = run_pipeline(T.parse_dump(LICM_TRIGGER), PipelineConfig(passes=("licm",), stress=True))
    assert not rep.records[0].accepted


@given(st.integers(0, 5000))
def test_translation_validation_over_generated_programs(seed):
    p = generate_program(seed)
    t = T.flatten(p, A.check_well_formed(p))
    rep = run_pipeline(t, PipelineConfig(keep_certs=True))
    assert all(r.accepted for r in rep.records)
    for res, verdict in rep.certs:
        assert verdict.accepted
        same_behavior(res.cert.original, res.transformed)
    same_behavior(t, rep.final)
    T.check_tac_wf(rep.final)


@given(st.integers(0, 5000), st.sampled_from(sorted(PASSES)))
def test_each_pass_alone_is_sound(seed, name):
    p = generate_program(seed)
    t = T.flatten(p, A.check_well_formed(p))
    res = PASSES[name](t)
    if res.changed:
        assert check_certificate(res.cert).accepted
        same_behavior(t, res.transformed)
