"""Hand-built programs that make the stress-mode passes emit their unsound certificates.

Flattening gives every constant a fresh temporary, so Axon source never
reaches the LICM trigger; these are written directly as TAC.
"""

from __future__ import annotations

import dataclasses
import random

from axon import tac as T
from axon.optim.passes import register_allocation

LICM_TRIGGER = """var bool __bt1
var int __t1
var int c0
var int x
L0: c0 = const 0
L1: __bt1 = lt c0 3
L2: ifgoto __bt1 L4
L3: halt
L4: __t1 = const 1
L5: x = add x __t1
L6: __t1 = const 2
L7: x = add x __t1
L8: c0 = add c0 1
L9: goto L1
"""

DAE_TRIGGER = """var int __t1
var int x
L0: __t1 = const 4
L1: x = add x __t1
L2: __t1 = add x 3
L3: print int x
L4: halt
"""

# __t1 and __bt1 are live together at L2
ALIAS_SRC = """var int __t1
var bool __bt1
var int x
L0: __t1 = add x 1
L1: __bt1 = lt x 2
L2: print int __t1
L3: print bool __bt1
L4: halt
"""


def licm_trigger(r: random.Random) -> T.TacProgram:
    """A counted loop assigning two different constants to one temporary."""
    k1, k2 = r.sample(range(-50, 50), 2)
    pad = [f"y = add y {r.randint(1, 9)}" for _ in range(r.randint(0, 2))]
    cmds = (["c0 = const 0", f"__bt1 = lt c0 {r.randint(1, 6)}", "ifgoto __bt1 L4", "halt",
             f"__t1 = const {k1}", "x = add x __t1"] + pad
            + [f"__t1 = const {k2}", "x = add x __t1", "c0 = add c0 1", "goto L1"])
    decls = "".join(f"var {t} {v}\n" for t, v in
                    (("bool", "__bt1"), ("int", "__t1"), ("int", "c0"), ("int", "x"), ("int", "y")))
    return T.parse_dump(decls + "".join(f"L{i}: {c}\n" for i, c in enumerate(cmds)))


def rename_in_certificate(cert, old: str, new: str):
    """cert with variable `old` of the transformed side renamed to `new` everywhere."""
    tp = T.parse_dump(T.dump(cert.transformed).replace(old, new))
    rel = {L: tuple(dataclasses.replace(r, vt=new if r.vt == old else r.vt) for r in invs)
           for L, invs in cert.rel_inv.items()}
    vm = {(new if a == old else a): b for a, b in cert.var_map.items()}
    return dataclasses.replace(cert, transformed=tp, rel_inv=rel, var_map=vm)


def aliasing_certificate():
    """An allocation certificate in which two simultaneously live values share x19."""
    res = register_allocation(T.parse_dump(ALIAS_SRC))
    return rename_in_certificate(res.cert, "__ir2", "__ir1")
