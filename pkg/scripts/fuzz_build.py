"""Feed malformed sources to `axon build` and tally exit codes."""
import argparse
import sys

from axon.fuzz import fuzz_build


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    codes, crashes = fuzz_build(args.count, args.seed)
    print("exit codes: " + " ".join(f"{c}:{n}" for c, n in sorted(codes.items())))
    for data in crashes[:5]:
        print("crash on:", data[:200], file=sys.stderr)
    return 1 if crashes else 0


if __name__ == "__main__":
    raise SystemExit(main())
