"""TDFA post-processing: fallback operations, register optimizations,
minimization.

The register operations of a TDFA form a control-flow graph with basic
blocks (operations on symbol transitions, plus a start block), final blocks
(final quasi-transitions) and fallback blocks (fallback quasi-transitions).
Two blocks are connected when one is reachable from the other without
passing other register operations; fallback blocks additionally connect to
every block on a non-accepting path out of their state, which is where
control may fall through to them.

The pipeline is: compaction once, then N rounds of liveness analysis, dead
code elimination, interference analysis, register allocation with copy
coalescing, renaming, and local normalization.  Minimization (Moore
partition refinement treating operation lists as part of the transition
label) runs last, after normalization has canonicalized the lists.
"""

from .determinize import Tdfa
from .regops import APPEND, COPY, SET, remove_duplicates, topological_sort


# -- fallback operations ----------------------------------------------------


def find_fallback_states(tdfa: Tdfa):
    """Final states with non-accepting continuations, plus the registers
    that may be clobbered on those continuations.

    The input may end anywhere, so every non-final state lies on a
    non-accepting path; a final state falls back iff some transition leaves
    it for a non-final state.  Paths through another final state refresh
    the match point and never fall back here, so the clobber scan stops at
    final states.
    """
    finals = tdfa.finals
    out: dict[int, int] = {}
    for (s, _), (target, _) in tdfa.delta.items():
        if s in finals and target not in finals:
            out.setdefault(s, 0)
    fallback = set(out)

    clobbered: dict[int, set[int]] = {}
    for s in fallback:
        dests: set[int] = set()
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for cls in range(tdfa.n_classes()):
                cell = tdfa.delta.get((u, cls))
                if cell is None or cell[0] in finals:
                    continue
                dests.update(op[1] for op in cell[1])
                if cell[0] not in seen:
                    seen.add(cell[0])
                    stack.append(cell[0])
        clobbered[s] = dests
    return fallback, clobbered


def add_fallback_regops(tdfa: Tdfa):
    """Back up clobbered sources of final operations and build the fallback
    quasi-transitions.

    Final registers double as backup storage: a clobbered copy i <- j
    becomes a copy on every risky outgoing transition and disappears from
    the fallback list; a clobbered append i <- j.h is backed up the same
    way and the fallback list appends onto the backup (i <- i.h).
    """
    fallback, clobbered = find_fallback_states(tdfa)
    tdfa.fallback = fallback
    finals = tdfa.finals

    def backup(s: int, i: int, j: int):
        # Prepended: the backup must read j before the transition's own
        # operations overwrite it (that overwrite is the clobber being
        # protected against).
        for cls in range(tdfa.n_classes()):
            cell = tdfa.delta.get((s, cls))
            if cell is not None and cell[0] not in finals:
                tdfa.delta[(s, cls)] = (cell[0], ((COPY, i, j),) + cell[1])

    for s in sorted(fallback):
        ops = []
        for op in tdfa.phi[s]:
            if op[0] == APPEND and op[2] in clobbered[s]:
                backup(s, op[1], op[2])
                ops.append((APPEND, op[1], op[1], op[3]))
            elif op[0] == COPY and op[2] in clobbered[s]:
                backup(s, op[1], op[2])
            else:
                ops.append(op)
        tdfa.psi[s] = tuple(ops)
    tdfa.invalidate()
    return tdfa.psi


# -- control-flow graph -----------------------------------------------------


class Block:
    __slots__ = ("kind", "loc", "ops", "succ")

    def __init__(self, kind, loc, ops):
        self.kind = kind  # "basic" | "final" | "fallback"
        self.loc = loc  # None | (state, class) | state
        self.ops = list(ops)
        self.succ: list[int] = []


class RegCfg:
    def __init__(self, tdfa: Tdfa):
        self.tdfa = tdfa
        self.blocks: list[Block] = []
        self.fallthrough: dict[int, list[int]] = {}
        self.n_regs = tdfa.max_reg

    def block_ids(self, kind: str):
        return [i for i, b in enumerate(self.blocks) if b.kind == kind]

    def to_dot(self) -> str:
        from .regops import format_op

        lines = ["digraph cfg {", "  node [shape=box, fontname=monospace];"]
        for i, b in enumerate(self.blocks):
            ops = "\\l".join(format_op(o) for o in b.ops)
            lines.append(f'  {i} [label="{i} {b.kind} {b.loc}\\l{ops}\\l"];')
            for s in b.succ:
                style = ", style=dashed" if b.kind == "fallback" else ""
                lines.append(f"  {i} -> {s} [{style.strip(', ')}];")
        lines.append("}")
        return "\n".join(lines)


def build_cfg(tdfa: Tdfa) -> RegCfg:
    cfg = RegCfg(tdfa)
    blocks = cfg.blocks
    blocks.append(Block("basic", None, []))  # start block

    by_trans: dict[tuple[int, int], int] = {}
    for key in sorted(tdfa.delta):
        target, ops = tdfa.delta[key]
        if ops:
            by_trans[key] = len(blocks)
            blocks.append(Block("basic", key, ops))
    # Final blocks exist for every final state (even with no operations
    # left): they seed final-register liveness for the result reader.
    by_final: dict[int, int] = {}
    if tdfa.tags:
        for s in sorted(tdfa.finals):
            by_final[s] = len(blocks)
            blocks.append(Block("final", s, tdfa.phi.get(s, ())))
    by_fallback: dict[int, int] = {}
    if tdfa.tags:
        for s in sorted(tdfa.fallback):
            by_fallback[s] = len(blocks)
            blocks.append(Block("fallback", s, tdfa.psi.get(s, ())))

    # States reachable from u without passing register operations.
    reach_memo: dict[int, frozenset[int]] = {}

    def op_free_reach(u: int) -> frozenset[int]:
        got = reach_memo.get(u)
        if got is not None:
            return got
        seen = {u}
        stack = [u]
        while stack:
            v = stack.pop()
            for cls in range(tdfa.n_classes()):
                cell = tdfa.delta.get((v, cls))
                if cell is not None and not cell[1] and cell[0] not in seen:
                    seen.add(cell[0])
                    stack.append(cell[0])
        out = frozenset(seen)
        reach_memo[u] = out
        return out

    def next_blocks(u: int) -> list[int]:
        out = set()
        for v in op_free_reach(u):
            if v in by_final:
                out.add(by_final[v])
            for cls in range(tdfa.n_classes()):
                bid = by_trans.get((v, cls))
                if bid is not None:
                    out.add(bid)
        return sorted(out)

    blocks[0].succ = next_blocks(tdfa.s0)
    for key, bid in by_trans.items():
        blocks[bid].succ = next_blocks(tdfa.delta[key][0])

    # Fallback blocks: arcs to every block on a non-accepting path out of
    # their state (where execution may fall through to them).
    for s, bid in by_fallback.items():
        path_blocks: set[int] = set()
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for cls in range(tdfa.n_classes()):
                cell = tdfa.delta.get((u, cls))
                if cell is None or cell[0] in tdfa.finals:
                    continue
                tb = by_trans.get((u, cls))
                if tb is not None:
                    path_blocks.add(tb)
                if cell[0] not in seen:
                    seen.add(cell[0])
                    stack.append(cell[0])
        blocks[bid].succ = sorted(path_blocks)
        cfg.fallthrough[bid] = sorted(path_blocks)
    return cfg


def flush_cfg(cfg: RegCfg):
    """Write block operation lists back into the automaton."""
    tdfa = cfg.tdfa
    for b in cfg.blocks:
        if b.kind == "basic" and b.loc is not None:
            target, _ = tdfa.delta[b.loc]
            tdfa.delta[b.loc] = (target, tuple(b.ops))
        elif b.kind == "final":
            tdfa.phi[b.loc] = tuple(b.ops)
        elif b.kind == "fallback":
            tdfa.psi[b.loc] = tuple(b.ops)
    tdfa.invalidate()


# -- optimization passes -----------------------------------------------------


def compaction(cfg: RegCfg) -> dict[int, int]:
    """Rename registers onto a contiguous range 1..n, dropping unused ones."""
    used: set[int] = set()
    for b in cfg.blocks:
        for op in b.ops:
            used.add(op[1])
            if op[0] != SET:
                used.add(op[2])
    return {r: i + 1 for i, r in enumerate(sorted(used))}


def renaming(cfg: RegCfg, V: dict[int, int]):
    """Apply a register renaming; trivial self-copies are dropped."""
    for b in cfg.blocks:
        out = []
        for op in b.ops:
            if op[0] == SET:
                op = (SET, V.get(op[1], op[1]), op[2])
            else:
                op = (op[0], V.get(op[1], op[1]), V.get(op[2], op[2])) + tuple(op[3:])
                if op[0] == COPY and op[1] == op[2]:
                    continue
            out.append(op)
        b.ops = out
    tdfa = cfg.tdfa
    tdfa.rf = {t: V[r] for t, r in tdfa.rf.items()}
    tdfa.r0 = {t: V[r] for t, r in tdfa.r0.items() if r in V}
    cfg.n_regs = max(V.values(), default=0)
    tdfa.max_reg = cfg.n_regs


def _live_in(ops, live_out: set) -> set:
    live = set(live_out)
    for op in reversed(ops):
        if op[0] == SET:
            live.discard(op[1])
        elif op[1] in live:
            live.discard(op[1])
            live.add(op[2])
    return live


def _postorder(cfg: RegCfg) -> list[int]:
    seen = set()
    order: list[int] = []

    def dfs(b: int):
        seen.add(b)
        for s in cfg.blocks[b].succ:
            if s not in seen:
                dfs(s)
        order.append(b)

    dfs(0)
    for b in range(len(cfg.blocks)):
        if b not in seen:
            dfs(b)
    return order


def liveness_analysis(cfg: RegCfg) -> list[set[int]]:
    """Live registers per block (at block exit), by iterative data flow.

    Final registers are live in final blocks; the fixpoint expands over
    basic blocks; finally backup registers are marked live along every
    path that may fall through to a fallback block.
    """
    tdfa = cfg.tdfa
    final_regs = set(tdfa.rf.values())
    L: list[set[int]] = [set() for _ in cfg.blocks]
    for i, b in enumerate(cfg.blocks):
        if b.kind == "final":
            L[i] = set(final_regs)

    basics = [i for i in _postorder(cfg) if cfg.blocks[i].kind == "basic"]
    changed = True
    while changed:
        changed = False
        for i in basics:
            new: set[int] = set()
            for s in cfg.blocks[i].succ:
                new |= _live_in(cfg.blocks[s].ops, L[s])
            if new != L[i]:
                L[i] = new
                changed = True

    for i, b in enumerate(cfg.blocks):
        if b.kind != "fallback":
            continue
        L[i] |= final_regs
        lb = set(L[i])
        for op in b.ops:
            lb.discard(op[1])
        for op in b.ops:
            if op[0] != SET:
                lb.add(op[2])
        for s in cfg.fallthrough.get(i, ()):
            L[s] |= lb
    return L


def dead_code_elimination(cfg: RegCfg, L: list[set[int]]):
    """Drop operations writing registers that are not live afterwards."""
    for i, b in enumerate(cfg.blocks):
        if b.kind != "basic":
            continue
        live = set(L[i])
        kept = []
        for op in reversed(b.ops):
            if op[1] in live:
                live.discard(op[1])
                if op[0] != SET:
                    live.add(op[2])
                kept.append(op)
        kept.reverse()
        b.ops = kept


def interference_analysis(cfg: RegCfg, L: list[set[int]]) -> list[set[int]]:
    """Symmetric interference matrix (as adjacency sets).

    Within a block, an operation's destination interferes with every
    register live after it that provably holds a different value; value
    tracking over the block suppresses the same-value pairs.  Finally,
    registers used in append operations (history trees) interfere with all
    registers that are not.
    """
    n = cfg.n_regs
    I: list[set[int]] = [set() for _ in range(n + 1)]

    def mark(a: int, b: int):
        if a != b:
            I[a].add(b)
            I[b].add(a)

    for bi, b in enumerate(cfg.blocks):
        ops = b.ops
        if not ops:
            continue
        live = set(L[bi])
        after: list[set[int]] = [set()] * len(ops)
        for k in range(len(ops) - 1, -1, -1):
            after[k] = set(live)
            op = ops[k]
            if op[0] == SET:
                live.discard(op[1])
            elif op[1] in live:
                live.discard(op[1])
                live.add(op[2])

        value: dict[int, object] = {}
        for op in ops:
            if op[0] != SET:
                value.setdefault(op[2], ("reg", op[2]))
        for k, op in enumerate(ops):
            d = op[1]
            if op[0] == SET:
                value[d] = ("val", op[2])
            elif op[0] == COPY:
                value[d] = value[op[2]]
            else:
                value[d] = ("app", value[op[2]], op[3])
            vd = value[d]
            for r in after[k]:
                if r != d and value.get(r) != vd:
                    mark(d, r)

    append_regs: set[int] = set()
    for b in cfg.blocks:
        for op in b.ops:
            if op[0] == APPEND:
                append_regs.add(op[1])
                append_regs.add(op[2])
    if append_regs:
        for r in range(1, n + 1):
            if r not in append_regs:
                for a in append_regs:
                    mark(r, a)
    return I


def register_allocation(cfg: RegCfg, I: list[set[int]]) -> dict[int, int]:
    """Partition registers into non-interfering classes (copy coalescing
    first, then class merging, then leftover placement) and renumber the
    classes consecutively."""
    n = cfg.n_regs
    B: dict[int, int] = {}
    S: dict[int, set[int]] = {}

    def compatible(cls: set[int], r: int) -> bool:
        return all(r not in I[k] for k in cls)

    for b in cfg.blocks:
        for op in b.ops:
            if op[0] == SET or op[1] == op[2]:
                continue
            i, j = op[1], op[2]
            x, y = B.get(i), B.get(j)
            if x is None and y is None:
                if j not in I[i]:
                    B[i] = B[j] = i
                    S[i] = {i, j}
            elif x is not None and y is None:
                if compatible(S[x], j):
                    B[j] = x
                    S[x].add(j)
            elif x is None and y is not None:
                if compatible(S[y], i):
                    B[i] = y
                    S[y].add(i)

    reps = [r for r in sorted(S) if B.get(r) == r]
    for i in reps:
        if not S.get(i):
            continue
        for j in reps:
            if j <= i or not S.get(j):
                continue
            if all(compatible(S[i], k) for k in S[j]):
                B[j] = i
                S[i] |= S[j]
                S[j] = set()

    for r in range(1, n + 1):
        if B.get(r) is not None:
            continue
        for i in sorted(S):
            if B.get(i) == i and S[i] and compatible(S[i], r):
                B[r] = i
                S[i].add(r)
                break
        else:
            B[r] = r
            S[r] = {r}

    V: dict[int, int] = {}
    nxt = 0
    for i in sorted(S):
        if B.get(i) == i and S[i]:
            nxt += 1
            for j in S[i]:
                V[j] = nxt
    return V


def normalization(cfg: RegCfg):
    """Canonicalize each block: per contiguous same-kind run, remove
    duplicates; sort set runs by (dest, value); topologically sort copy
    runs.  Runs of different kinds are never reordered."""
    for b in cfg.blocks:
        out = []
        i = 0
        ops = b.ops
        while i < len(ops):
            kind = ops[i][0]
            j = i
            while j < len(ops) and ops[j][0] == kind:
                j += 1
            run = remove_duplicates(ops[i:j])
            if kind == SET:
                run.sort(key=lambda op: (op[1], op[2]))
            elif kind == COPY:
                run, _ = topological_sort(run)
            out.extend(run)
            i = j
        b.ops = out


def optimize(tdfa: Tdfa, rounds: int = 2, dump=None, skip_normalization: bool = False) -> Tdfa:
    """Full register-optimization pipeline, in place."""
    add_fallback_regops(tdfa)
    cfg = build_cfg(tdfa)
    if dump:
        dump("cfg", cfg, None, None)
    renaming(cfg, compaction(cfg))
    if dump:
        dump("compaction", cfg, None, None)
    for r in range(1, rounds + 1):
        L = liveness_analysis(cfg)
        dead_code_elimination(cfg, L)
        I = interference_analysis(cfg, L)
        V = register_allocation(cfg, I)
        renaming(cfg, V)
        if not skip_normalization:
            normalization(cfg)
        if dump:
            dump(f"round{r}", cfg, L, I)
    flush_cfg(cfg)
    return tdfa


# -- minimization -------------------------------------------------------------


def minimize(tdfa: Tdfa) -> Tdfa:
    """Moore partition refinement; the transition label is (symbol class,
    interned operation-list id), so states with different operations are
    never merged.  Run after normalization for canonical lists."""
    interned: dict[tuple, int] = {}

    def opid(ops) -> int:
        return interned.setdefault(tuple(ops), len(interned))

    n = tdfa.n_states
    cls_range = range(tdfa.n_classes())

    def renumber(keys) -> list[int]:
        mapping: dict = {}
        out = []
        for k in keys:
            if k not in mapping:
                mapping[k] = len(mapping)
            out.append(mapping[k])
        return out

    part = renumber(
        (
            s in tdfa.finals,
            opid(tdfa.phi.get(s, ())) if s in tdfa.finals else -1,
            opid(tdfa.psi.get(s, ())) if s in tdfa.fallback else -1,
        )
        for s in range(n)
    )
    while True:
        sigs = []
        for s in range(n):
            row = []
            for c in cls_range:
                cell = tdfa.delta.get((s, c))
                row.append(None if cell is None else (part[cell[0]], opid(cell[1])))
            sigs.append((part[s], tuple(row)))
        new = renumber(sigs)
        if new == part:
            break
        part = new

    n_classes = max(part) + 1 if n else 0
    rep = [None] * n_classes
    for s in range(n):
        if rep[part[s]] is None:
            rep[part[s]] = s

    out = Tdfa.__new__(Tdfa)
    out.tags = tdfa.tags
    out.multi = tdfa.multi
    out.alphabet = tdfa.alphabet
    out.byte_to_class = tdfa.byte_to_class
    out.r0 = dict(tdfa.r0)
    out.rf = dict(tdfa.rf)
    out.max_reg = tdfa.max_reg
    out.n_states = n_classes
    out.s0 = part[tdfa.s0]
    out.finals = {part[s] for s in tdfa.finals}
    out.fallback = {part[s] for s in tdfa.fallback}
    out.delta = {}
    out.phi = {}
    out.psi = {}
    out._table = None
    for c, m in enumerate(rep):
        for cls in cls_range:
            cell = tdfa.delta.get((m, cls))
            if cell is not None:
                out.delta[(c, cls)] = (part[cell[0]], cell[1])
        if m in tdfa.phi:
            out.phi[c] = tdfa.phi[m]
        if m in tdfa.psi:
            out.psi[c] = tdfa.psi[m]
    return out
