"""Programs aimed at known code generation and allocation bugs, run through every level."""
import re

import pytest

from axon import ast as A
from axon import asmmach as M
from axon import harness as H
from axon.codegen import compile_tac

REM = """int a; int b; int q; int r; int i;
a = 0 - 17; b = 5; i = 0;
while (i < 6) {
    r = a % b; q = a / b;
    printInt r; printInt q; printInt b % a; printInt a % (0 - b);
    a = a + 7; b = 0 - b - 1; i = i + 1;
}
printInt (0 - 7) % 2; printInt 7 % (0 - 2);
"""

BOUNDS = """int[5] a; int i; int j; int s;
i = 0;
while (i < 5) { a[i] = i + 1; i = i + 1; }
j = a[4] - 1;
s = a[j] + a[a[0]];
printInt s;
j = j + 1;
printInt a[j];
"""

BOUNDS_LOW = "int[5] a; int j; j = 0 - 1; a[2] = 7; printInt a[2]; printInt a[j];"

FLOATS = """float f0; float f1; float f2; float f3; float f4; float f5; float f6; float f7;
float f8; float f9; float g; int i;
f0 = 0.5; f1 = 1.5; f2 = 2.5; f3 = 3.5; f4 = 4.5; f5 = 5.5; f6 = 6.5; f7 = 7.5; f8 = 8.5; f9 = 9.5;
i = 0;
while (i < 3) {
    g = f0; f0 = f9; f9 = f8; f8 = f7; f7 = f6; f6 = f5; f5 = f4; f4 = f3; f3 = f2; f2 = f1; f1 = g;
    printFloat f0 * f1 + f2 - f3 + f4 * f5 - f6 + f7 / f8 + f9;
    i = i + 1;
}
"""

CASES = {"rem": REM, "bounds": BOUNDS, "bounds_low": BOUNDS_LOW, "floats": FLOATS}


@pytest.mark.parametrize("optimize", [False, True])
@pytest.mark.parametrize("name", sorted(CASES))
def test_three_way_agreement(name, optimize):
    p, _ = H.frontend(CASES[name])
    r = H.diff_program(name, p, fuel=10_000, cfg=H.CompileConfig(optimize=optimize))
    assert r.agree, r.mismatch


def test_rem_values_follow_truncation():
    b = A.eval_ast(H.frontend(REM)[0])
    vals = [e.value for e in b.output]
    assert vals[:4] == [-2, -3, 5, -2]
    assert vals[-2:] == [-1, 1]


def test_bounds_cases_hit_expected_ends():
    assert A.eval_ast(H.frontend(BOUNDS)[0]).kind == A.OUT_OF_BOUNDS
    b = A.eval_ast(H.frontend(BOUNDS_LOW)[0])
    assert b.kind == A.OUT_OF_BOUNDS and [e.value for e in b.output] == [7]


def test_float_case_spills_under_allocation():
    _, tac = H.frontend(FLOATS)
    art = H.compile_ast(None, tac, H.CompileConfig(optimize=True))
    ra = [r for r in art.report.records if r.name == "RA"][0]
    assert ra.stats["spilled"] >= 1
    assert art.asm.layout.reg_assign and art.asm.layout.stack_slots


def test_branch_tests_the_compared_register():
    _, tac = H.frontend(BOUNDS)
    asm = compile_tac(tac)
    for k, ins in enumerate(asm.instrs):
        if isinstance(ins, M.Bcond) and ins.label == "ax_oob":
            assert isinstance(asm.instrs[k - 1], (M.Cmp, M.CmpImm))


_RESERVED = re.compile(r"\b[xw]1[678]\b")


@pytest.mark.parametrize("target", sorted(M.TARGETS))
def test_no_reserved_registers_in_text(target):
    cfg = H.CompileConfig(optimize=True, target=target)
    for name, src in list(H.kernel_sources()) + sorted(CASES.items()):
        text = H.compile_source(src, cfg).text
        assert not _RESERVED.search(text), name
