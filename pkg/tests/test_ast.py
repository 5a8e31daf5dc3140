import math
import struct

import pytest
from hypothesis import given, strategies as st

from axon import ast as A
from axon import values as V
from axon.frontend import parse_source
from axon.generator import generate_program

from conftest import outputs, run_src


def check(src):
    p = parse_source(src)
    return A.check_well_formed(p, A.type_check(p))


# -- typing ----------------------------------------------------------------------

def test_explicit_conversion_type_checks():
    A.type_check(parse_source("int x; float y; y = intToFloat(x);"))


@pytest.mark.parametrize("src", [
    "int x; float y; y = x;",
    "int x; float y; x = x + y;",
    "int x; while (x) { }",
    "int[3] a; int x; x = a;",
    "int x; x[0] = 1;",
    "bool b; b = 1 && true;",
    "float f; printInt f;",
    "int x; x = y;",
])
def test_type_errors(src):
    with pytest.raises(A.TypeError_):
        A.type_check(parse_source(src))


def test_comparison_yields_bool():
    ctx = A.type_check(parse_source("bool b; b = 1 < 2;"))
    assert ctx["b"].elem == V.BOOL


# -- well-formedness -------------------------------------------------------------

@pytest.mark.parametrize("src, kind", [
    ("int x; int x;", "Duplicate"),
    ("int __t1;", "ReservedName"),
    ("int x; goto l; l: x = 1;", "GotoPresent"),
])
def test_well_formedness_errors(src, kind):
    with pytest.raises(A.WellFormednessError) as e:
        check(src)
    assert e.value.kind == kind


def test_array_length_bounds_enforced():
    check("int[1048576] a;")
    with pytest.raises(A.AxonError):
        check("int[1048577] a;")
    with pytest.raises(A.AxonError):
        check("int[0] a;")


# -- evaluation oracles ----------------------------------------------------------

def test_positive_remainder():
    b = run_src("int x; x = 7 % 3; printInt x;")
    assert b.kind == A.HALT and outputs(b) == [1]


def test_negative_remainder():
    assert outputs(run_src("int x; x = 0 - 7; x = x % 3; printInt x;")) == [-1]


def _trunc_div(a, b):
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def test_division_oracle_grid():
    for a in range(-9, 10):
        for b in (-4, -3, -1, 1, 2, 5):
            src = f"int a; int b; int q; int r; a = 0 - {-a} + 0; b = 0 - {-b}; q = a / b; r = a % b;"
            s = run_src(src).scalars
            assert s["q"] == _trunc_div(a, b)
            assert s["r"] == a - _trunc_div(a, b) * b
            assert s["q"] * b + s["r"] == a


def test_int_min_edge_cases_wrap():
    s = run_src("int m; int q; int r; m = 0 - 9223372036854775807 - 1; q = m / (0 - 1); r = m % (0 - 1);").scalars
    assert s["q"] == V.INT_MIN and s["r"] == 0


def test_integer_overflow_wraps():
    s = run_src("int x; x = 9223372036854775807 + 1;").scalars
    assert s["x"] == V.INT_MIN


def test_out_of_bounds():
    assert run_src("int[2] a; int x; x = a[5];").kind == A.OUT_OF_BOUNDS
    assert run_src("int[2] a; a[0 - 1] = 3;").kind == A.OUT_OF_BOUNDS


def test_division_by_zero_keeps_prior_output():
    b = run_src("int x; printInt 4; x = 1 / x;")
    assert b.kind == A.DIV_BY_ZERO and outputs(b) == [4]
    assert run_src("int x; x = 1 % x;").kind == A.DIV_BY_ZERO


def test_float_division_by_zero_is_not_an_error():
    b = run_src("float f; f = 1.0 / 0.0; printFloat f;")
    assert b.kind == A.HALT and outputs(b) == [math.inf]


def test_empty_loop_diverges():
    b = run_src("while (true) { }", fuel=10**6)
    assert b.kind == A.DIVERGE and b.scalars is None


@pytest.mark.parametrize("f, want", [
    (3.9, 3), (-3.9, -3), (1e30, V.INT_MAX), (-1e30, V.INT_MIN), (math.nan, 0),
    (math.inf, V.INT_MAX), (-math.inf, V.INT_MIN),
])
def test_float_to_int_saturates(f, want):
    assert V.f2i(f) == want


def test_float_to_int_in_source():
    assert outputs(run_src("int x; x = floatToInt(0.0 - 2.5); printInt x;")) == [-2]
    assert outputs(run_src("int x; x = floatToInt(0.0 / 0.0); printInt x;")) == [0]


def test_fma_rounds_twice():
    a, b, c = 0.1, 10.0, -1.0
    assert V.eval_fma(c, a, b, False) == (a * b) + c
    assert V.eval_fma(c, a, b, True) == c - (a * b)


def test_logical_operators_evaluate_both_sides():
    # no short-circuit: the right operand's trap is observable
    assert run_src("int x; bool b; b = false && (1 / x > 0);").kind == A.DIV_BY_ZERO


def test_zero_initialised_store():
    b = run_src("int x; float f; bool b; int[2] a;")
    assert b.scalars == {"x": 0, "f": 0.0, "b": False}
    assert b.arrays == {"a": (0, 0)}


def test_print_events_in_order():
    b = run_src('int x; printString "hi"; printInt 3; printBool true; printFloat 0.5;')
    assert [e.kind for e in b.output] == ["string", "int", "bool", "float"]
    assert [e.render() for e in b.output] == ["hi", "3", "true", "0.5"]


def test_float_render_matches_c_format():
    assert A.format_float(0.1) == "0.10000000000000001"
    assert A.format_float(1e300) == "1.0000000000000001e+300"
    assert A.format_float(-0.0) == "-0"


def test_float_output_compares_by_bits():
    neg = A.OutputEvent("float", -0.0)
    pos = A.OutputEvent("float", 0.0)
    assert neg != pos
    nan = struct.unpack("<d", struct.pack("<Q", V.DEFAULT_NAN_BITS))[0]
    assert A.OutputEvent("float", nan) == A.OutputEvent("float", nan)


def test_first_difference_names_the_store_entry():
    a = A.Behavior(A.HALT, (), {"x": 1}, {})
    b = A.Behavior(A.HALT, (), {"x": 2}, {})
    assert "x" in a.first_difference(b)
    assert a.first_difference(a) == ""


# -- properties ------------------------------------------------------------------

@given(st.integers(0, 5000))
def test_evaluation_is_deterministic(seed):
    p = generate_program(seed)
    assert A.eval_ast(p, fuel=500) == A.eval_ast(p, fuel=500)


@given(st.integers(0, 5000), st.integers(1, 200))
def test_fuel_monotonicity(seed, extra):
    p = generate_program(seed)
    b = A.eval_ast(p, fuel=300)
    if b.kind != A.DIVERGE:
        assert A.eval_ast(p, fuel=300 + extra) == b


@given(st.integers(0, 5000))
def test_type_preservation(seed):
    A.eval_ast(generate_program(seed), fuel=300, check_types=True)
