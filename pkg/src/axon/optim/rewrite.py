"""Label-preserving program rewriting with automatic command/transition maps.

A pass describes its transformation as edits on original labels:

* ``replace[L] = cmd``: the command at L becomes cmd.  Jump targets inside
  cmd are original labels, resolved after renumbering.
* ``delete``: labels whose command disappears.  Control entering a deleted
  label continues with its original successor (fallthrough, or the target of
  a deleted Goto).
* ``insert[L] = [cmd, ...]``: commands placed immediately before L, run as
  stutter steps mapped to L.  Every jump to L enters them, except jumps from
  the original labels listed in ``bypass[L]``, which go straight to L itself.

The builder derives the transformed program, ``cmd_map`` (transformed label
-> original label it simulates) and ``trans_map`` (transformed edge -> the
original path it covers).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from axon import tac as T
from axon.tac import EXIT


class RewriteError(Exception):
    pass


@dataclass
class Edits:
    replace: dict = field(default_factory=dict)
    delete: set = field(default_factory=set)
    insert: dict = field(default_factory=dict)
    bypass: dict = field(default_factory=dict)  # O label -> set of O source labels

    def empty(self) -> bool:
        return not (self.replace or self.delete or self.insert)


@dataclass
class Rewritten:
    program: T.TacProgram
    cmd_map: dict
    trans_map: dict
    main_label: dict  # O label -> T label holding its (possibly replaced) command
    kept: set  # deletions the builder had to undo


def o_targets(cmd, L) -> list:
    """(O target, condition) pairs for a command standing at original label L."""
    if isinstance(cmd, T.Halt):
        return [(EXIT, None)]
    if isinstance(cmd, T.Goto):
        return [(cmd.target, None)]
    if isinstance(cmd, T.IfGoto):
        if cmd.target == L + 1:
            return [(L + 1, None)]
        return [(cmd.target, True), (L + 1, False)]
    return [(L + 1, None)]


class _Layout:
    def __init__(self, prog, edits, dropped, deleted):
        self.cmds = prog.commands
        self.n = len(self.cmds)
        self.edits = edits
        self.dropped = dropped
        self.deleted = deleted

    def chase(self, g):
        """Follow deleted labels from O label g: (path, landing label)."""
        path = []
        seen = set()
        while g != EXIT and g in self.deleted:
            if g in seen or not 0 <= g < self.n:
                raise RewriteError(f"control runs into a cycle of deleted commands at L{g}")
            seen.add(g)
            c = self.cmds[g]
            nxt = c.target if isinstance(c, T.Goto) else g + 1
            path.append((g, nxt))
            g = nxt
        if g != EXIT and (g in self.dropped or not 0 <= g < self.n):
            raise RewriteError(f"control reaches dropped label L{g}")
        return path, g

    def enters_prefix(self, src, g) -> bool:
        return bool(self.edits.insert.get(g)) and src not in self.edits.bypass.get(g, ())


def apply_edits(prog: T.TacProgram, edits: Edits, ctx: dict | None = None,
                drop_unreachable: bool = False) -> Rewritten:
    cmds = prog.commands
    n = len(cmds)
    reach = T.reachable(prog)
    dropped = {L for L in range(n) if drop_unreachable and not reach[L]}
    deleted = set(edits.delete) | dropped
    for L in edits.delete:
        c = cmds[L]
        if isinstance(c, T.Halt) or (isinstance(c, T.IfGoto) and c.target != L + 1):
            raise RewriteError(f"cannot delete control command at L{L}")
        if L in edits.replace or edits.insert.get(L):
            raise RewriteError(f"L{L} is deleted and also edited")
    lay = _Layout(prog, edits, dropped, deleted)

    # undo deletions that would merge both edges of a conditional jump
    kept = set()
    changed = True
    while changed:
        changed = False
        for M in range(n):
            if M in deleted:
                continue
            c = edits.replace.get(M, cmds[M])
            if not isinstance(c, T.IfGoto) or c.target == M + 1:
                continue
            _, a = lay.chase(c.target)
            _, b = lay.chase(M + 1)
            if a == b and lay.enters_prefix(M, a) == lay.enters_prefix(M, b):
                first = M + 1
                if first not in edits.delete:
                    raise RewriteError(f"conditional at L{M} degenerates")
                deleted.discard(first)
                kept.add(first)
                changed = True

    # lay out transformed labels
    t_cmds, origin = [], []  # origin: (O label, is_main)
    slot_start, main_label = {}, {}
    for L in range(n):
        if L in deleted:
            continue
        slot_start[L] = len(t_cmds)
        for c in edits.insert.get(L, ()):
            t_cmds.append(c)
            origin.append((L, False))
        main_label[L] = len(t_cmds)
        t_cmds.append(edits.replace.get(L, cmds[L]))
        origin.append((L, True))

    def land(src, g):
        if g == EXIT:
            return EXIT
        return slot_start[g] if lay.enters_prefix(src, g) else main_label[g]

    out, cmd_map, trans_map = [], {}, {}
    for tl, (c, (L, is_main)) in enumerate(zip(t_cmds, origin)):
        cmd_map[tl] = L
        if not is_main:
            out.append(c)
            trans_map[(tl, tl + 1)] = ()
            continue
        edges = []
        for g, cond in o_targets(c, L):
            path, landing = lay.chase(g) if g != EXIT else ([], EXIT)
            edges.append((cond, land(L, landing), ((L, g),) + tuple(path)))
        if isinstance(c, T.Goto):
            c = T.Goto(edges[0][1])
        elif isinstance(c, T.IfGoto):
            if len(edges) == 1:
                c = T.IfGoto(c.cond, tl + 1)
            else:
                c = T.IfGoto(c.cond, edges[0][1])
        for cond, target, path in edges:
            if cond is not True and not isinstance(c, T.Goto) and target not in (EXIT, tl + 1):
                raise RewriteError(f"fallthrough from L{L} lands at T{target}, not T{tl + 1}")
            trans_map[(tl, target)] = path
        out.append(c)
    if out and cmd_map[0] != 0:
        path, landing = lay.chase(0)
        trans_map[(-2, 0)] = tuple(path)
    program = T.TacProgram(tuple(out), dict(ctx if ctx is not None else prog.ctx), prog.arrays)
    return Rewritten(program, cmd_map, trans_map, main_label, kept)
