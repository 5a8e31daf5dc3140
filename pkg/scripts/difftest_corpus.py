"""Differential run over generated programs and the kernels, with a kind histogram."""
import argparse
import time

from axon import harness as H


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10_000)
    ap.add_argument("--start", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--no-kernels", action="store_true")
    args = ap.parse_args()

    t0 = time.perf_counter()
    reports = H.diff_seeds(args.start, args.count, H.DIFF_FUEL, args.jobs)
    if not args.no_kernels:
        reports += [H.diff_source(n, s) for n, s in H.kernel_sources()]
    kinds = {}
    for r in reports:
        kinds[r.reference.kind] = kinds.get(r.reference.kind, 0) + 1
        if not r.agree:
            print(r.line())
    bad = sum(not r.agree for r in reports)
    print(f"{len(reports)} programs, {bad} mismatches, {time.perf_counter() - t0:.0f} s")
    print("  " + " ".join(f"{k}={v}" for k, v in sorted(kinds.items())))
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
