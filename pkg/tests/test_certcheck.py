import dataclasses

import pytest
from hypothesis import given, strategies as st

from axon import ast as A
from axon import tac as T
from axon import values as V
from axon.certcheck import (Certificate, TransVarEqConst, TransVarEqOrigVar, VarEqBinop,
                            VarEqConst, check_certificate, identity_certificate, kconst, kvalue,
                            simplify, strongest_post)
from axon.certfmt import CertFormatError, format_certificate, parse_certificate
from axon.generator import generate_program
from axon.optim.passes import (dead_assignment_elimination, loop_invariant_constant_motion,
                               register_allocation)
from axon.optim.pipeline import PipelineConfig, run_pipeline
from axon.stress import (ALIAS_SRC, DAE_TRIGGER, LICM_TRIGGER, aliasing_certificate,
                         rename_in_certificate)
from axon.tac import Const

from conftest import flat

I = V.INT


def k(v):
    return kconst(I, v)


def O(name):
    return ("O", name)


# -- simplify --------------------------------------------------------------------

def test_additive_identity_for_integers():
    assert simplify(("add", O("x"), k(0))) == O("x")


def test_float_add_zero_is_kept():
    e = ("fadd", O("f"), kconst(V.FLOAT, 0.0))
    assert simplify(e) != O("f")


def test_substitution_from_facts():
    assert simplify(O("y"), [VarEqConst("y", Const(I, 5))]) == k(5)


def test_comparison_orientation_is_canonical():
    assert simplify(("lt", k(3), O("x"))) == simplify(("gt", O("x"), k(3)))


def test_float_add_commutes():
    a = simplify(("fadd", O("f"), O("g")))
    assert a == simplify(("fadd", O("g"), O("f")))


def test_binop_fact_expands():
    facts = [VarEqBinop("t", "add", "a", "b")]
    assert simplify(("sub", O("t"), O("t")), facts) == k(0)
    assert simplify(O("t"), facts) == simplify(("add", O("b"), O("a")))


def test_trapping_constant_division_not_folded():
    assert simplify(("div", k(1), k(0))) == ("div", k(1), k(0))


_atoms = st.sampled_from([O("a"), O("b"), O("c")]) | st.integers(-3, 3).map(k)


def _int_expr():
    return st.recursive(_atoms, lambda sub: st.tuples(
        st.sampled_from(["add", "sub", "mul"]), sub, sub), max_leaves=8)


_bool_expr = st.tuples(st.sampled_from(["lt", "le", "gt", "ge", "eq", "ne"]),
                       _int_expr(), _int_expr())


def _eval(e, env):
    if e[0] == "k":
        return kvalue(e)
    if e[0] == "O":
        return env[e[1]]
    if len(e) == 2:
        return V.eval_unop(e[0], _eval(e[1], env))
    return V.eval_binop(e[0], _eval(e[1], env), _eval(e[2], env))


@given(_int_expr() | _bool_expr)
def test_simplify_idempotent(e):
    once = simplify(e)
    assert simplify(once) == once


@given(_int_expr() | _bool_expr, st.integers(-2**63, 2**63 - 1), st.integers(-5, 5),
       st.integers(-5, 5))
def test_simplify_preserves_value(e, a, b, c):
    env = {"a": a, "b": b, "c": c}
    assert _eval(simplify(e), env) == _eval(e, env)


@given(_int_expr(), st.integers(-5, 5))
def test_simplify_with_fact_preserves_value(e, a):
    env = {"a": a, "b": 2, "c": -1}
    facts = [VarEqConst("a", Const(I, a))]
    assert _eval(simplify(e, facts), env) == _eval(e, env)


# -- strongest postcondition ----------------------------------------------------

def test_sp_generates_constant_fact():
    assert strongest_post(T.AssignConst("x", Const(I, 5)), []) == [VarEqConst("x", Const(I, 5))]


def test_sp_kills_facts_mentioning_destination():
    facts = [VarEqBinop("y", "add", "x", "z")]
    assert strongest_post(T.AssignConst("x", Const(I, 5)), facts) == [VarEqConst("x", Const(I, 5))]


def test_sp_array_store_leaves_facts():
    facts = [VarEqConst("x", Const(I, 1))]
    assert strongest_post(T.ArrayStore("a", "i", "v"), facts) == facts


# -- the checker -----------------------------------------------------------------

def test_identity_certificate_accepted():
    assert check_certificate(identity_certificate(flat("int x; x = 1; printInt x;"))).accepted


@given(st.integers(0, 3000))
def test_identity_certificates_accepted_on_corpus(seed):
    p = generate_program(seed)
    t = T.flatten(p, A.check_well_formed(p))
    assert check_certificate(identity_certificate(t)).accepted


def test_stress_licm_multi_constant_hoist_rejected_at_b():
    prog = T.parse_dump(LICM_TRIGGER)
    res = loop_invariant_constant_motion(prog, stress=True)
    assert res.changed
    v = check_certificate(res.cert)
    assert not v.accepted and v.rule == "b"
    # the sound mode leaves this loop alone
    assert not loop_invariant_constant_motion(prog).changed


def test_stress_dae_dead_value_invariant_rejected_at_c():
    prog = T.parse_dump(DAE_TRIGGER)
    res = dead_assignment_elimination(prog, stress=True)
    v = check_certificate(res.cert)
    assert not v.accepted and v.rule == "c"
    assert check_certificate(dead_assignment_elimination(prog).cert).accepted


def test_aliasing_certificate_rejected_at_e():
    res = register_allocation(T.parse_dump(ALIAS_SRC))
    assert check_certificate(res.cert).accepted
    regs = set(res.transformed.ctx)
    assert "__ir2" in regs and "__br1" in regs
    bad = aliasing_certificate()  # __ir1 and __br1 share x19
    assert bad.transformed.same_shape(rename_in_certificate(res.cert, "__ir2", "__ir1").transformed)
    v = check_certificate(bad)
    assert not v.accepted and v.rule == "e"


def test_entry_rule_rejects_false_initial_invariant():
    t = flat("int x; x = 1; printInt x;")
    cert = identity_certificate(t)
    cert.sp_inv_orig = {0: (VarEqConst("x", Const(I, 7)),)}
    v = check_certificate(cert)
    assert not v.accepted and v.rule == "f"


def test_wrong_relation_rejected():
    t = flat("int x; int y; x = 1; y = x + 1; printInt y;")
    cert = identity_certificate(t)
    cert.rel_inv = {2: (TransVarEqConst("x", Const(I, 2)),)}
    assert not check_certificate(cert).accepted


def test_changed_print_rejected_at_d():
    o = flat("int x; printInt x;")
    t = T.parse_dump(T.dump(o).replace("print int", "print int").replace("= copy x", "= const 3"))
    cert = identity_certificate(o)
    cert = dataclasses.replace(cert, transformed=t)
    v = check_certificate(cert)
    assert not v.accepted and v.rule in ("c", "d")


def test_checker_is_total_on_garbage():
    t = flat("int x; printInt x;")
    cert = identity_certificate(t)
    cert.cmd_map = {0: "nonsense"}
    assert not check_certificate(cert).accepted
    cert = Certificate(t, t, None)
    assert not check_certificate(cert).accepted


def test_invariants_at_unmapped_original_labels_rejected():
    o = flat("int x; x = 1; printInt x;")
    cert = identity_certificate(o)
    cert.cmd_map = dict(cert.cmd_map)
    cert.sp_inv_orig = {len(o.commands) + 5: (VarEqConst("x", Const(I, 1)),)}
    assert not check_certificate(cert).accepted


# -- text format -----------------------------------------------------------------

def _pipeline_certs(seed):
    p = generate_program(seed)
    t = T.flatten(p, A.check_well_formed(p))
    rep = run_pipeline(t, PipelineConfig(keep_certs=True))
    return [r.cert for r, _ in rep.certs]


@given(st.integers(0, 3000))
def test_certificate_text_round_trip(seed):
    for cert in _pipeline_certs(seed):
        text = format_certificate(cert)
        back = parse_certificate(text)
        assert format_certificate(back) == text
        assert check_certificate(back).accepted == check_certificate(cert).accepted


def test_certificate_format_errors_carry_line():
    with pytest.raises(CertFormatError) as e:
        parse_certificate("ORIGINAL\nL0: bogus\n")
    assert e.value.line_no >= 1
