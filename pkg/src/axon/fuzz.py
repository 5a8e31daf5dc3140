"""Malformed-input fuzzing of `axon build`."""

from __future__ import annotations

import contextlib
import io
import random
import tempfile
from pathlib import Path

from axon import ast as A
from axon.generator import generate_program

_TOKENS = [b";", b"(", b")", b"{", b"}", b"=", b"[", b"]", b"%", b"goto ", b"int ",
           b"9999999999999999999999", b"1e999", b"\"", b"@", b"L1:"]


def malformed(r: random.Random, base: str) -> bytes:
    """base with one to four random byte-level edits."""
    data = bytearray(base.encode())
    for _ in range(r.randint(1, 4)):
        op = r.randrange(7)
        n = len(data)
        i = r.randrange(n + 1)
        if op == 0 and n:
            del data[i:i + r.randint(1, 8)]
        elif op == 1:
            data[i:i] = r.choice(_TOKENS)
        elif op == 2:
            data = data[:i]
        elif op == 3:
            data[i:i] = bytes(r.randrange(256) for _ in range(r.randint(1, 4)))
        elif op == 4 and n:
            j = r.randrange(n)
            data[i:i] = data[j:j + r.randint(1, 30)]
        elif op == 5:
            data[i:i] = b"(" * r.randint(1, 400)
        else:
            data[i:i] = b"while (true) { }"
    return bytes(data)


def seed_sources(n: int = 200) -> list:
    from axon.harness import kernel_sources
    return [A.to_source(generate_program(s)) for s in range(n)] + [s for _, s in kernel_sources()]


def fuzz_build(count: int, seed: int = 0, args=("-O",)) -> tuple:
    """Exit-code histogram and the inputs of any run that exited with neither 0 nor 1."""
    from axon.cli import main

    r = random.Random(seed)
    bases = seed_sources()
    codes, crashes = {}, []
    with tempfile.TemporaryDirectory() as d:
        src, out = Path(d) / "f.axon", Path(d) / "f.s"
        for _ in range(count):
            data = malformed(r, r.choice(bases))
            src.write_bytes(data)
            with contextlib.redirect_stderr(io.StringIO()), contextlib.redirect_stdout(io.StringIO()):
                rc = main(["build", str(src), *args, "-o", str(out)])
            codes[rc] = codes.get(rc, 0) + 1
            if rc not in (0, 1):
                crashes.append(data)
    return codes, crashes
