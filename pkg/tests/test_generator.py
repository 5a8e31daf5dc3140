from hypothesis import given, strategies as st

from axon import ast as A
from axon import tac as T
from axon.frontend import parse_source
from axon.generator import GenConfig, generate_program

import pytest


def test_same_seed_same_program():
    assert A.to_source(generate_program(11)) == A.to_source(generate_program(11))


def test_different_seeds_differ():
    texts = {A.to_source(generate_program(s)) for s in range(20)}
    assert len(texts) > 15


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        generate_program(0, budget=0)


def test_budget_scales_size():
    small = sum(len(A.to_source(generate_program(s, 3))) for s in range(30))
    large = sum(len(A.to_source(generate_program(s, 30))) for s in range(30))
    assert large > 2 * small


@given(st.integers(0, 10**6), st.integers(1, 25))
def test_well_formed_by_construction(seed, budget):
    p = generate_program(seed, budget)
    A.type_check(p)
    T.check_tac_wf(T.flatten(p, A.check_well_formed(p)))


@given(st.integers(0, 10**6))
def test_printed_source_reparses_to_same_program(seed):
    p = generate_program(seed)
    assert A.to_source(parse_source(A.to_source(p))) == A.to_source(p)


def test_most_programs_terminate_within_fuel():
    kinds = [A.eval_ast(generate_program(s), fuel=10_000).kind for s in range(400)]
    assert sum(k != A.DIVERGE for k in kinds) / len(kinds) >= 0.95
    assert A.HALT in kinds


def test_all_loops_bounded_when_configured():
    cfg = GenConfig(bounded_loop_share=1.0)
    kinds = [A.eval_ast(generate_program(s, cfg=cfg), fuel=10_000).kind for s in range(200)]
    assert kinds.count(A.DIVERGE) <= 2
