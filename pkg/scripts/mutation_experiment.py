"""Single-field certificate mutations: how many does the checker catch?"""
import argparse

from axon.mutate import accepted_certificates, mutation_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--certs", type=int, default=1000)
    ap.add_argument("--per-cert", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--show", action="store_true", help="list accepted mutants")
    args = ap.parse_args()

    rep = mutation_experiment(accepted_certificates(args.certs), args.seed, args.per_cert)
    print(rep.render(), end="")
    if args.show:
        for m, ok in rep.accepted_mutants:
            print(f"  {m.family:9} {m.where:30} re-run {'ok' if ok else 'FAILS'}")


if __name__ == "__main__":
    main()
