import pytest
from hypothesis import HealthCheck, settings

from axon import ast as A
from axon import harness as H
from axon import tac as T

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def flat(src: str) -> T.TacProgram:
    return H.frontend(src)[1]


def run_src(src: str, fuel: int = 10**6) -> A.Behavior:
    return A.eval_ast(H.frontend(src)[0], fuel=fuel)


def outputs(b: A.Behavior) -> list:
    return [e.value for e in b.output]


@pytest.fixture
def tac_of():
    return flat
