"""Intra-procedural control-flow graphs over lowered statement lists.

The body of a procedure is a flat pre-order list; branch statements name
which following statements belong to their arms.  ``build_cfg`` recovers
edges from that shape: sequential fallthrough at top level and inside arms,
branch fan-out into each arm (or past the branch for an absent arm), joins
back to the statement after the branch region, and returns wired to a
synthetic exit.  Loop-origin branches get no back edge on purpose; the taint
engine is flow-insensitive, so one pass over the body already reaches the
fixpoint a back edge would add.

Dominators computed here feed guard attribution: a branch that dominates a
sink is a condition every execution must pass through first.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ir import CFG, Branch, ModelError, Procedure, Return, Statement

ENTRY = "<entry>"
EXIT = "<exit>"


def _scope_map(body: list[Statement]) -> dict[str, set[str]]:
    """Statement id -> ids of all statements nested under it (transitively)."""
    by_id = {s.id: s for s in body}
    out: dict[str, set[str]] = {}

    def collect(stmt: Statement) -> set[str]:
        if stmt.id in out:
            return out[stmt.id]
        nested: set[str] = set()
        if isinstance(stmt, Branch):
            for sid in stmt.then_ids + stmt.else_ids:
                if sid not in by_id:
                    raise ModelError(f"branch {stmt.id} names unknown statement {sid}")
                nested.add(sid)
                nested |= collect(by_id[sid])
        out[stmt.id] = nested
        return nested

    for s in body:
        collect(s)
    return out


def toplevel_sequence(body: list[Statement], within: set[str] | None = None) -> list[Statement]:
    """Statements not nested inside any branch (or, with ``within``, the
    statements of one arm in body order, minus deeper nesting)."""
    nested: set[str] = set()
    scope = _scope_map(body)
    if within is None:
        for s in body:
            nested |= scope[s.id]
        return [s for s in body if s.id not in nested]
    members = [s for s in body if s.id in within]
    inner: set[str] = set()
    for s in members:
        inner |= scope[s.id]
    return [s for s in members if s.id not in inner]


def build_cfg(proc: Procedure) -> CFG:
    body = proc.body
    edges: set[tuple[str, str]] = set()
    nodes: set[str] = {ENTRY, EXIT} | {s.id for s in body}

    def wire(seq: list[Statement], entry_from: list[str], after: list[str]) -> None:
        """Wire a straight-line region.  ``entry_from`` are nodes falling in;
        ``after`` are nodes execution reaches when the region completes."""
        pending = list(entry_from)
        for stmt in seq:
            for src in pending:
                edges.add((src, stmt.id))
            if isinstance(stmt, Return):
                edges.add((stmt.id, EXIT))
                pending = []
            elif isinstance(stmt, Branch):
                then_seq = toplevel_sequence(body, set(stmt.then_ids))
                else_seq = toplevel_sequence(body, set(stmt.else_ids))
                joins: list[str] = []
                tails: list[str] = []
                for arm in (then_seq, else_seq):
                    if arm:
                        wire(arm, [stmt.id], tails)
                    else:
                        joins.append(stmt.id)
                pending = joins + tails
            else:
                pending = [stmt.id]
        after.extend(pending)

    tail: list[str] = []
    wire(toplevel_sequence(body), [ENTRY], tail)
    for src in tail:
        edges.add((src, EXIT))
    if not body:
        edges.add((ENTRY, EXIT))

    return CFG(nodes=frozenset(nodes), edges=frozenset(edges), entry=ENTRY, exits=frozenset({EXIT}))


def dominators(cfg: CFG) -> dict[str, set[str]]:
    """Classic iterative dominator sets.  Unreachable nodes keep the full
    node set (vacuous domination), which guard attribution filters out by
    only ever asking about reachable sinks."""
    nodes = set(cfg.nodes)
    preds: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in cfg.edges:
        preds[b].append(a)
    dom: dict[str, set[str]] = {n: set(nodes) for n in nodes}
    dom[cfg.entry] = {cfg.entry}
    changed = True
    while changed:
        changed = False
        for n in sorted(nodes):
            if n == cfg.entry:
                continue
            ps = [dom[p] for p in preds[n]]
            new = set.intersection(*ps) if ps else set(nodes)
            new = new | {n}
            if new != dom[n]:
                dom[n] = new
                changed = True
    return dom


@dataclass(frozen=True)
class BranchScopes:
    """Arm membership for one branch, flattened transitively."""

    branch_id: str
    then_all: frozenset[str]
    else_all: frozenset[str]


def branch_scopes(proc: Procedure) -> list[BranchScopes]:
    scope = _scope_map(proc.body)
    out = []
    for s in proc.body:
        if not isinstance(s, Branch):
            continue
        then_all: set[str] = set()
        for sid in s.then_ids:
            then_all.add(sid)
            then_all |= scope[sid]
        else_all: set[str] = set()
        for sid in s.else_ids:
            else_all.add(sid)
            else_all |= scope[sid]
        out.append(BranchScopes(s.id, frozenset(then_all), frozenset(else_all)))
    return out
