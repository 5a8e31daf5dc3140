"""Command-line driver: build, run, difftest, check-cert, bench, gen.

Exit codes: 0 success, 1 rejection or diagnostic, 2 internal fault.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from axon import ast as A
from axon import asmmach as M
from axon import harness as H
from axon import tac as T
from axon.certcheck import check_certificate
from axon.certfmt import CertFormatError, format_certificate, parse_certificate
from axon.generator import generate_program
from axon.optim.passes import PASSES

OK, DIAGNOSTIC, FAULT = 0, 1, 2


class Diagnostic(Exception):
    """A user-facing error that maps to exit code 1."""


def _read(path: str) -> str:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise Diagnostic(f"{path}: {e.strerror or e}")
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise Diagnostic(f"{path}: not UTF-8 text (byte {e.start})")


def _csv(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _passes(text):
    if text is None:
        return None
    names = tuple(n.lower() for n in _csv(text))
    unknown = [n for n in names if n not in PASSES]
    if unknown:
        raise Diagnostic(f"unknown pass(es): {', '.join(unknown)}; choose from {', '.join(PASSES)}")
    return names


def _config(args, **extra) -> H.CompileConfig:
    if getattr(args, "no_check", False) and not H.test_profile():
        raise Diagnostic(f"--no-check is only available when {H.TEST_PROFILE_ENV} is set")
    fields = dict(
        optimize=getattr(args, "O", False),
        passes=_passes(getattr(args, "passes", None)),
        emit=frozenset(_csv(getattr(args, "emit", "") or "")),
        fuel=getattr(args, "fuel", 10**7),
        stress=getattr(args, "stress", False),
        bce=not getattr(args, "no_bce", False),
        check=not getattr(args, "no_check", False),
        target=getattr(args, "target", "linux"),
    )
    fields.update(extra)
    try:
        return H.CompileConfig(**fields)
    except ValueError as e:
        raise Diagnostic(str(e))


def _load(path: str, source: str):
    """(ast or None, TAC) for an .axon source or a .tac dump."""
    if path.endswith(".tac"):
        try:
            prog = T.parse_dump(source)
            T.check_tac_wf(prog)
        except (ValueError, T.TacWfError) as e:
            raise Diagnostic(f"{path}: {e}")
        return None, prog
    try:
        return H.frontend(source)
    except A.AxonError as e:
        raise Diagnostic(f"{path}:{e}")
    except RecursionError:
        raise Diagnostic(f"{path}: program nested too deeply")


# -- build ------------------------------------------------------------------------

def cmd_build(args) -> int:
    cfg = _config(args)
    p, tac = _load(args.file, _read(args.file))
    art = H.compile_ast(p, tac, cfg)
    out = args.output or str(Path(args.file).with_suffix(".s"))
    base = Path(out if out != "-" else args.file).with_suffix("")
    if out == "-":
        sys.stdout.write(art.text)
    else:
        Path(out).write_text(art.text)
    if "tac" in cfg.emit:
        Path(f"{base}.tac").write_text(T.dump(art.optimized))
        if art.optimized is not art.tac:
            Path(f"{base}.flat.tac").write_text(T.dump(art.tac))
    if "intervals" in cfg.emit:
        lines = [f.render() for f in art.bce.facts]
        lines.append(f"# bounds checks removed: {sorted(art.bce.check_free)}")
        Path(f"{base}.intervals").write_text("\n".join(lines) + "\n")
    if "cert" in cfg.emit and art.report is not None:
        for i, (res, verdict) in enumerate(getattr(art.report, "certs", ())):
            Path(f"{base}.{i:02d}-{res.name.lower()}.cert").write_text(format_certificate(res.cert))
    if "report" in cfg.emit and art.report is not None:
        text = art.report.render()
        Path(f"{base}.report").write_text(text)
        if out != "-":
            sys.stdout.write(text)
    return OK


# -- run --------------------------------------------------------------------------

def cmd_run(args) -> int:
    level = "tac" if args.tac else "ast" if args.ast else "asm"
    path = args.file
    p, tac = _load(path, _read(path))
    if level == "ast":
        if p is None:
            raise Diagnostic("--ast needs Axon source, not a TAC dump")
        b = A.eval_ast(p, fuel=args.fuel)
    elif level == "tac":
        b = T.eval_tac(H.compile_ast(p, tac, _config(args)).optimized if args.O else tac, args.fuel)
    else:
        art = H.compile_ast(p, tac, _config(args))
        r = M.run(art.asm, args.fuel)
        b = r.behavior
        if args.count:
            print(f"instructions: {r.count}", file=sys.stderr)
    for e in b.output:
        sys.stdout.write(e.render() + "\n")
    if b.kind == A.HALT:
        return OK
    msg = {A.DIV_BY_ZERO: M.MSG_DIV, A.OUT_OF_BOUNDS: M.MSG_OOB}.get(
        b.kind, f"error: no termination within {args.fuel} backward jumps\n")
    sys.stderr.write(msg)
    return DIAGNOSTIC


# -- difftest ---------------------------------------------------------------------

def cmd_difftest(args) -> int:
    if args.path:
        if not Path(args.path).is_dir():
            raise Diagnostic(f"{args.path}: not a directory")
        cfg = _config(args)
        reports = []
        for name, text in H.directory_sources(args.path):
            try:
                reports.append(H.diff_source(name, text, args.fuel, cfg))
            except (A.AxonError, ValueError, T.TacWfError) as e:
                print(f"{name}: skipped: {e}")
    elif args.kernels:
        cfg = _config(args)
        reports = [H.diff_source(n, s, args.fuel, cfg) for n, s in H.kernel_sources()]
    else:
        reports = H.diff_seeds(args.seed, args.count, args.fuel, args.jobs)
    bad = [r for r in reports if not r.agree]
    for r in reports:
        if args.verbose or not r.agree:
            print(r.line())
    kinds = {}
    for r in reports:
        kinds[r.reference.kind] = kinds.get(r.reference.kind, 0) + 1
    summary = " ".join(f"{k}={v}" for k, v in sorted(kinds.items()))
    print(f"{len(reports)} programs, {len(bad)} mismatches ({summary})")
    return DIAGNOSTIC if bad else OK


# -- check-cert -------------------------------------------------------------------

def cmd_check_cert(args) -> int:
    try:
        cert = parse_certificate(_read(args.file))
    except CertFormatError as e:
        raise Diagnostic(f"{args.file}:{e}")
    verdict = check_certificate(cert)
    print(verdict)
    return OK if verdict.accepted else DIAGNOSTIC


# -- bench and gen ----------------------------------------------------------------

def cmd_bench(args) -> int:
    skip = tuple(n.lower() for n in _csv(args.skip or ""))
    cfg = _config(args, optimize=True, skip=skip)
    rows = H.bench_kernels(cfg)
    sys.stdout.write(H.render_bench(rows))
    return DIAGNOSTIC if any(r.error for r in rows) else OK


def cmd_gen(args) -> int:
    if args.budget < 1:
        raise Diagnostic("--budget must be at least 1")
    sys.stdout.write(A.to_source(generate_program(args.seed, args.budget)))
    return OK


# -- argument parsing -------------------------------------------------------------

def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _compile_flags(sp, optimize=True):
    if optimize:
        sp.add_argument("-O", action="store_true", help="run the optimization pipeline")
        sp.add_argument("--passes", help="comma list of passes to run instead of the standard schedule")
    sp.add_argument("--no-bce", action="store_true", help="keep every array bounds check")
    sp.add_argument("--target", choices=sorted(M.TARGETS), default="linux")
    sp.add_argument("--stress", action="store_true", help="let passes emit their unsound certificate shapes")
    sp.add_argument("--no-check", action="store_true", help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="axon", description="Axon compiler with certificate-checked optimizations")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="compile to AArch64 assembly")
    b.add_argument("file")
    _compile_flags(b)
    b.add_argument("--emit", default="", help="comma list of tac,cert,intervals,asm,report")
    b.add_argument("-o", dest="output", help="output .s path ('-' for stdout)")
    b.set_defaults(fn=cmd_build)

    r = sub.add_parser("run", help="execute at one level")
    r.add_argument("file")
    lvl = r.add_mutually_exclusive_group()
    lvl.add_argument("--asm", action="store_true", help="simulate generated assembly (default)")
    lvl.add_argument("--tac", action="store_true", help="interpret the flattened TAC")
    lvl.add_argument("--ast", action="store_true", help="interpret the source AST")
    r.add_argument("--fuel", type=_positive, default=10**7)
    r.add_argument("--count", action="store_true", help="report simulated instruction count")
    _compile_flags(r)
    r.set_defaults(fn=cmd_run)

    d = sub.add_parser("difftest", help="compare every execution level")
    d.add_argument("path", nargs="?", help="directory of .axon/.tac files")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--count", type=_positive, default=100)
    d.add_argument("--kernels", action="store_true", help="run the bundled kernels")
    d.add_argument("--fuel", type=_positive, default=H.DIFF_FUEL)
    d.add_argument("--jobs", type=_positive, default=1)
    d.add_argument("-v", "--verbose", action="store_true")
    d.add_argument("--passes", help="comma list of passes to run instead of the standard schedule")
    _compile_flags(d, optimize=False)
    d.set_defaults(fn=cmd_difftest, O=True)

    c = sub.add_parser("check-cert", help="re-check a certificate file")
    c.add_argument("file")
    c.set_defaults(fn=cmd_check_cert)

    be = sub.add_parser("bench", help="kernel instruction counts and compile times")
    be.add_argument("--fuel", type=_positive, default=10**7)
    be.add_argument("--skip", help="comma list of passes to leave out (ablation)")
    be.set_defaults(fn=cmd_bench)

    g = sub.add_parser("gen", help="print a generated program")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--budget", type=int, default=12)
    g.set_defaults(fn=cmd_gen)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return OK if e.code == 0 else DIAGNOSTIC
    try:
        return args.fn(args)
    except Diagnostic as e:
        print(f"axon: {e}", file=sys.stderr)
        return DIAGNOSTIC
    except BrokenPipeError:
        return OK
    except OSError as e:
        print(f"axon: {e}", file=sys.stderr)
        return DIAGNOSTIC
    except Exception as e:  # noqa: BLE001 - any escape is an internal fault
        print(f"axon: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return FAULT


if __name__ == "__main__":
    sys.exit(main())
