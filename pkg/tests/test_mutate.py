import random

from hypothesis import given, strategies as st

from axon import tac as T
from axon.certcheck import check_certificate, identity_certificate
from axon.mutate import (FAMILIES, accepted_certificates, differential_ok, mutate,
                         mutation_experiment, perturb)
from axon.tac import Const
from axon import values as V

from conftest import flat


@given(st.integers(-2**63, 2**63 - 1), st.integers(0, 100))
def test_perturb_int_changes_value(v, seed):
    c = perturb(Const(V.INT, v), random.Random(seed))
    assert c.type == V.INT and c.value != v and V.wrap(c.value) == c.value


@given(st.floats(), st.integers(0, 100))
def test_perturb_float_changes_bits(x, seed):
    c = perturb(Const(V.FLOAT, x), random.Random(seed))
    assert c.type == V.FLOAT and V.float_bits(c.value) != V.float_bits(x)


def test_perturb_bool_flips():
    assert perturb(Const(V.BOOL, True), random.Random(0)).value is False


def test_mutant_differs_in_one_family():
    certs = accepted_certificates(30)
    r = random.Random(1)
    for c in certs:
        m = mutate(c, r)
        if m is None:
            continue
        assert m.family in FAMILIES
        assert m.cert is not c and m.cert.original is c.original


def test_nothing_to_mutate_returns_none():
    cert = identity_certificate(flat(""))
    assert mutate(cert, random.Random(0)) is None or mutate(cert, random.Random(0)).family == "var-map"


def test_small_experiment_rejects_most_mutants():
    certs = accepted_certificates(150)
    assert len(certs) >= 150 and all(check_certificate(c).accepted for c in certs[:20])
    rep = mutation_experiment(certs, seed=3)
    assert rep.total >= 100
    assert rep.rejection_rate >= 0.9
    assert rep.unsound == []
    assert "mutants:" in rep.render()


def test_differential_ok_on_real_certificates():
    for c in accepted_certificates(10):
        assert differential_ok(c)
