import pytest
from hypothesis import given, strategies as st

from axon import ast as A
from axon import tac as T
from axon.generator import generate_program
from axon.tac import Const

from conftest import flat


def prog(text):
    return T.parse_dump(text)


def test_flatten_nested_expression():
    t = flat("int x; x = 1 + 2 * 3;")
    assert T.dump(t).splitlines()[-4:] == [
        "L0: __t1 = mul 2 3", "L1: __t2 = add 1 __t1", "L2: x = copy __t2", "L3: halt"]


def test_flatten_while_uses_negated_bool_temp():
    cmds = flat("bool b; while (b) { }").commands
    assert cmds[0] == T.AssignUnop("__bt1", "copy", "b")
    assert cmds[1] == T.AssignUnop("__bt2", "not", "__bt1")
    assert cmds[2] == T.IfGoto("__bt2", 4)
    assert cmds[3] == T.Goto(0) and cmds[4] == T.Halt()


def test_flatten_empty_program():
    assert flat("").commands == (T.Halt(),)


def test_temporaries_numbered_per_kind_in_order():
    t = flat("int x; float f; bool b; x = x + 1; f = f * 2.0; b = x < 3; x = x * x;")
    temps = [T.dest(c) for c in t.commands if T.dest(c) and T.dest(c).startswith("__")]
    assert temps == ["__t1", "__ft1", "__bt1", "__t2"]


def test_name_classification():
    assert T.classify("x").cls == "source"
    c = T.classify("__ft12")
    assert (c.cls, c.kind, c.number) == ("temp", "float", 12)
    assert T.classify("__br3").cls == "reg"


def test_register_names_beyond_pool_are_rejected():
    t = prog("var int __ir11\nL0: __ir11 = const 1\nL1: halt\n")
    with pytest.raises(T.TacWfError) as e:
        T.check_tac_wf(t)
    assert e.value.kind == "register-out-of-pool"


def test_label_out_of_range():
    t = prog("L0: goto L99\nL1: halt\nL2: halt\n")
    with pytest.raises(T.TacWfError) as e:
        T.check_tac_wf(t)
    assert e.value.kind == "label-out-of-range"


def test_ifgoto_on_int_is_a_type_error():
    t = prog("var int x\nL0: ifgoto x L1\nL1: halt\n")
    with pytest.raises(T.TacWfError) as e:
        T.check_tac_wf(t)
    assert e.value.kind == "type"


def test_program_must_not_fall_off_the_end():
    with pytest.raises(T.TacWfError):
        T.check_tac_wf(prog("var int x\nL0: x = const 1\n"))


def test_eval_simple_print():
    b = T.eval_tac(prog("var int x\nL0: x = const 1\nL1: print int x\nL2: halt\n"))
    assert b.kind == A.HALT and [e.value for e in b.output] == [1]


def test_eval_division_by_zero():
    t = prog("var int x\nvar int y\nvar int z\nL0: x = div y z\nL1: halt\n")
    assert T.eval_tac(t).kind == A.DIV_BY_ZERO


def test_eval_projects_source_variables_only():
    b = T.eval_tac(flat("int x; x = 2 * 3;"))
    assert b.scalars == {"x": 6}


def test_eval_fma_matches_two_roundings():
    t = prog("var float d\nvar float a\nL0: a = const #0x1.999999999999ap-4\n"
             "L1: d = fma a a 10.0\nL2: halt\n".replace("10.0", "#0x1.4000000000000p+3"))
    b = T.eval_tac(t)
    assert b.scalars["d"] == 0.1 + (0.1 * 10.0)


def test_backward_goto_consumes_fuel():
    t = prog("L0: goto L0\n")
    assert T.eval_tac(t, fuel=50).kind == A.DIVERGE


def test_operand_text_round_trip():
    for o in ("x", Const("int", -5), Const("bool", True), Const("float", -0.0),
              Const("float", float("inf"))):
        assert T.parse_operand(T.format_operand(o)) == o


@given(st.integers(0, 10_000))
def test_dump_round_trip(seed):
    p = generate_program(seed)
    t = T.flatten(p, A.check_well_formed(p))
    assert T.parse_dump(T.dump(t)).same_shape(t)


@given(st.integers(0, 10_000))
def test_flatten_output_is_well_formed(seed):
    p = generate_program(seed)
    T.check_tac_wf(T.flatten(p, A.check_well_formed(p)))


@given(st.integers(0, 10_000))
def test_flattening_refines_source(seed):
    p = generate_program(seed)
    t = T.flatten(p, A.check_well_formed(p))
    assert T.eval_tac(t, fuel=400) == A.eval_ast(p, fuel=400)


@given(st.integers(0, 10_000))
def test_temporaries_have_one_type(seed):
    p = generate_program(seed)
    t = T.flatten(p, A.check_well_formed(p))
    for c in t.commands:
        d = T.dest(c)
        if d and d.startswith("__"):
            assert t.ctx[d] == T.classify(d).kind
