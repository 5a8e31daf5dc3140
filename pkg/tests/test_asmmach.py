import dataclasses
import shutil
import subprocess

import pytest
from hypothesis import given, strategies as st

from axon import ast as A
from axon import asmmach as M
from axon import tac as T
from axon.codegen import compile_tac
from axon.generator import generate_program

from conftest import flat


def prog_of(src):
    return compile_tac(flat(src))


def test_simulate_prints_and_halts():
    b = M.simulate(prog_of('int x; x = 6 * 7; printInt x; printBool x > 1; printString "hi";'))
    assert b.kind == A.HALT
    assert [e.render() for e in b.output] == ["42", "true", "hi"]
    assert b.scalars["x"] == 42


def test_counts_are_deterministic():
    p = prog_of("int i; i = 0; while (i < 50) { i = i + 1; }")
    assert len({M.run(p).count for _ in range(3)}) == 1


def test_empty_program_count_is_small_constant():
    a = M.run(prog_of("")).count
    b = M.run(prog_of("int x; float f; bool c;")).count
    assert 0 < a < 40
    assert a == M.run(prog_of("")).count
    assert 0 < b - a < 10  # frame zeroing only


def test_count_grows_linearly_with_trips():
    c = [M.run(prog_of(f"int i; i = 0; while (i < {n}) {{ i = i + 1; }}")).count for n in (10, 20, 30)]
    assert c[2] - c[1] == c[1] - c[0] > 0


def test_divergence_under_fuel():
    p = prog_of("int i; while (true) { i = i + 1; }")
    assert M.simulate(p, 100).kind == A.DIVERGE
    with pytest.raises(M.DivergeError):
        M.count_dynamic_instructions(p, 100)


def test_fuel_counts_back_edges_like_tac():
    src = "int i; i = 0; while (i < 10) { printInt i; i = i + 1; }"
    for fuel in (1, 5, 10, 11):
        assert M.simulate(prog_of(src), fuel) == T.eval_tac(flat(src), fuel=fuel)


def test_stray_jump_is_sim_fault():
    p = prog_of("int x; printInt x;")
    bad = dataclasses.replace(p, instrs=[M.B("nowhere")] + p.instrs[1:])
    with pytest.raises((M.SimFault, KeyError)):
        M.run(bad)


# -- printing ----------------------------------------------------------------------

def lines_for(ins):
    return M.format_instr(ins, M.LINUX, {})


def test_small_immediate_is_single_mov():
    assert lines_for(M.MovImm("x9", 42)) == ["mov x9, #42"]


def test_wide_immediate_uses_movk():
    out = lines_for(M.MovImm("x9", 0x1234_0000_5678))
    assert out[0].startswith("movz") and any("lsl #32" in ln for ln in out)


def test_msub_operand_order():
    assert lines_for(M.Msub("x10", "x12", "x11", "x9")) == ["msub x10, x12, x11, x9"]


def test_targets_differ_in_symbol_prefixes():
    p = prog_of("printInt 1;")
    assert "_main:" in M.pretty_print(p, "macos")
    assert "\nmain:" in M.pretty_print(p, "linux")


def _strip_text(instrs):
    return [dataclasses.replace(i, text=None) if isinstance(i, M.Bl) else i for i in instrs]


@given(st.integers(0, 3000))
def test_parse_body_round_trip(seed):
    p = generate_program(seed)
    asm = compile_tac(T.flatten(p, A.check_well_formed(p)))
    instrs, labels = M.parse_body(M.pretty_print(asm))
    assert _strip_text(instrs) == _strip_text(asm.instrs)
    assert labels == asm.labels


@given(st.floats(allow_nan=False), st.floats(allow_nan=False))
def test_fadd_commutes_in_simulator(x, y):
    def run(a, b):
        src = f"float a; float b; a = {a!r}; b = {b!r}; printFloat a + b;"
        return M.simulate(prog_of(src)).output

    if "inf" in repr(x) + repr(y) or "e" in repr(x) + repr(y):
        return
    assert run(x, y) == run(y, x)


@pytest.mark.skipif(shutil.which("clang") is None, reason="clang not installed")
@pytest.mark.parametrize("target,triple", [("linux", "aarch64-linux-gnu"), ("macos", "arm64-apple-macos")])
def test_output_assembles(tmp_path, target, triple):
    src = ('int[4] a; int i; float f; i = 0; while (i < 4) { a[i] = i * 100000007; i = i + 1; } '
           'f = intToFloat(a[3]) / 3.0; printFloat f; printInt a[2] % 7; printString "done";')
    s = tmp_path / "k.s"
    s.write_text(M.pretty_print(prog_of(src), target))
    r = subprocess.run(["clang", f"--target={triple}", "-c", str(s), "-o", str(tmp_path / "k.o")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
