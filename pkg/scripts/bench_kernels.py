"""Kernel instruction-count table, optionally with a per-pass ablation."""
import argparse

from axon import harness as H
from axon.optim.passes import PASSES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ablate", action="store_true", help="also rerun with each pass left out")
    args = ap.parse_args()

    rows = H.bench_kernels(H.CompileConfig(optimize=True))
    print(H.render_bench(rows), end="")
    if not args.ablate:
        return
    full = H.geomean(r.ratio for r in rows if not r.error)
    print(f"\n{'left out':10} {'geomean':>8} {'delta':>7}")
    for name in PASSES:
        ab = H.bench_kernels(H.CompileConfig(optimize=True, skip=(name,)))
        g = H.geomean(r.ratio for r in ab if not r.error)
        print(f"{name:10} {g:8.3f} {g - full:+7.3f}")


if __name__ == "__main__":
    main()
