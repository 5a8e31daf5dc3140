import pytest
from hypothesis import given, strategies as st

from axon import ast as A
from axon import asmmach as M
from axon import tac as T
from axon.codegen import (LayoutError, assign_layout, bounds_check_elim, compile_tac,
                          machine_register)
from axon.generator import generate_program

from conftest import flat

FILL = "int[8] a; int i; i = 0; while (i < 8) { a[i] = i * i; i = i + 1; } "


def asm_behavior(prog, fuel=100_000, bce=True):
    return M.simulate(compile_tac(prog, bce=bce), fuel)


def agrees(prog, fuel=100_000):
    ref = T.eval_tac(prog, fuel=fuel)
    assert asm_behavior(prog, fuel) == ref
    assert asm_behavior(prog, fuel, bce=False) == ref
    return ref


# -- bounds-check elimination -----------------------------------------------------

def test_loop_guarded_index_is_check_free():
    r = bounds_check_elim(flat(FILL + "printInt a[7];"))
    assert r.checked == []
    assert all(f.lower == 0 and f.upper == 7 for f in r.facts if f.variable == "i")


def test_unknown_index_keeps_check():
    r = bounds_check_elim(flat("int[8] a; int j; j = a[1]; printInt a[j];"))
    assert len(r.checked) == 1


def test_off_by_one_loop_keeps_check():
    src = "int[8] a; int i; i = 0; while (i <= 8) { a[i] = 1; i = i + 1; }"
    r = bounds_check_elim(flat(src))
    assert len(r.checked) == 1
    assert agrees(flat(src)).kind == A.OUT_OF_BOUNDS


def test_disabled_bce_checks_everything():
    r = bounds_check_elim(flat(FILL), enabled=False)
    assert len(r.checked) == 1 and r.facts == []


def test_checked_access_branches_to_oob_block():
    p = compile_tac(flat("int[8] a; int j; j = 0 - 1; printInt a[j];"))
    conds = [i for i in p.instrs if isinstance(i, M.Bcond) and i.cond == "hs"]
    assert conds and all(i.label == "ax_oob" for i in conds)
    assert M.simulate(p).kind == A.OUT_OF_BOUNDS


def test_check_free_access_has_no_branch():
    p = compile_tac(flat(FILL))
    assert not any(isinstance(i, M.Bcond) and i.cond == "hs" for i in p.instrs)


def test_interval_fact_rendering():
    r = bounds_check_elim(flat(FILL))
    assert r.facts[0].render().endswith("in [0, 7]")


# -- layout -------------------------------------------------------------------------

def test_machine_register_pools():
    assert machine_register("__ir1") == "x19"
    assert machine_register("__ir10") == "x28"
    assert machine_register("__fr1") == "d8"
    assert machine_register("__fr8") == "d15"
    assert machine_register("__br2") == "x20"
    assert machine_register("x") is None


def test_layout_assigns_slots_and_aligns_frame():
    lay = assign_layout(flat("int x; float f; int[3] a; printInt x; printFloat f;"))
    assert set(lay.stack_slots) >= {"x", "f"}
    assert lay.frame_size % 16 == 0
    offs = sorted(lay.stack_slots.values()) + [lay.array_bases["a"]]
    assert len(set(offs)) == len(offs)


def test_bool_used_only_in_branch_is_laid_out():
    prog = flat("int x; if (x < 3) { x = 1; } printInt x;")
    lay = assign_layout(prog)
    assert all(v in lay.var_types for v in prog.ctx if v.startswith("__bt"))


CLASH = """var int __ir1
var bool __br1
var int x
L0: __ir1 = add x 1
L1: __br1 = lt x 2
L2: print int __ir1
L3: print bool __br1
L4: halt
"""


def test_strict_layout_rejects_shared_live_register():
    with pytest.raises(LayoutError):
        assign_layout(T.parse_dump(CLASH))


def test_lenient_layout_demotes_clashing_registers():
    prog = T.parse_dump(CLASH)
    lay = assign_layout(prog, strict=False)
    assert "__ir1" not in lay.reg_assign and "__br1" not in lay.reg_assign
    agrees(prog)


# -- instruction selection ------------------------------------------------------------

@pytest.mark.parametrize("a,b", [(7, 3), (-7, 3), (7, -3), (-7, -3), (0, 5), ("0 - 9223372036854775807 - 1", -1)])
def test_remainder_matches_truncating_semantics(a, b):
    src = f"int a; int b; a = {a}; b = {b}; printInt a % b; printInt a / b;"
    assert agrees(flat(src)).output == A.eval_ast(flat_ast(src)).output


def flat_ast(src):
    from axon.harness import frontend
    return frontend(src)[0]


def test_remainder_quotient_register_distinct_from_operands():
    p = compile_tac(flat("int a; int b; a = 9; b = 4; printInt a % b;"))
    for ins in p.instrs:
        if isinstance(ins, M.Msub):
            assert ins.rn not in (ins.rm, ins.ra)


RESIDENCE = """var float __fr1
var float __fr2
var float __ft1
var float __ft2
var float f
L0: __fr1 = const #0x1.8p+0
L1: __fr2 = copy __fr1
L2: __ft1 = copy __fr2
L3: __ft2 = copy __ft1
L4: __fr1 = copy __ft2
L5: f = fadd __fr1 __ft2
L6: print float f
L7: print float __fr2
L8: halt
"""


def test_float_copies_between_registers_and_stack():
    prog = T.parse_dump(RESIDENCE)
    lay = assign_layout(prog)
    assert lay.reg_assign["__fr1"] == "d8" and "__ft1" in lay.stack_slots
    b = agrees(prog)
    assert [e.value for e in b.output] == [3.0, 1.5]


def test_reserved_registers_never_emitted():
    for src in (FILL + "printInt a[3];", "float f; f = 2.5; printFloat f * f;"):
        p = compile_tac(flat(src))
        assert M.check_reserved(p) == []
        text = M.pretty_print(p)
        for r in M.RESERVED:
            assert r not in text.replace(",", " ").split()


def test_constant_divisor_zero_reaches_div_block():
    b = agrees(flat("int a; a = 5; printInt a / 0;"))
    assert b.kind == A.DIV_BY_ZERO


@given(st.integers(0, 4000))
def test_bce_on_and_off_agree(seed):
    p = generate_program(seed)
    t = T.flatten(p, A.check_well_formed(p))
    ref = T.eval_tac(t, fuel=10_000)
    assert M.simulate(compile_tac(t, bce=True), 10_000) == ref
    assert M.simulate(compile_tac(t, bce=False), 10_000) == ref
