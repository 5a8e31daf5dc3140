"""Stress-mode passes on their trigger programs, with and without the checker."""
import random

from axon import tac as T
from axon.certcheck import check_certificate
from axon.optim.passes import PASSES
from axon.stress import DAE_TRIGGER, aliasing_certificate, licm_trigger


def show(name, prog, res):
    v = check_certificate(res.cert)
    before = T.eval_tac(prog, fuel=1000)
    after = T.eval_tac(res.transformed, fuel=1000)
    diff = before.first_difference(after) or "same behavior"
    print(f"{name:5} verdict: {v}\n      unchecked result: {diff}")


def main():
    r = random.Random(0)
    for _ in range(3):
        p = licm_trigger(r)
        show("LICM", p, PASSES["licm"](p, stress=True))
    p = T.parse_dump(DAE_TRIGGER)
    show("DAE", p, PASSES["dae"](p, stress=True))
    print(f"RA    aliasing verdict: {check_certificate(aliasing_certificate())}")


if __name__ == "__main__":
    main()
