"""Execution of register TDFAs: register file, prefix tree, match modes.

Multi-valued tags store their whole offset history in a prefix tree:
a register then holds a node index, so copies stay scalar and appends are
amortized constant.  Offsets are characters consumed; operation lists on a
transition run with the position *before* the consumed symbol (that is
where the closure observed the tags), final and fallback quasi-transitions
run at the match end position.
"""

from dataclasses import dataclass, field

from .determinize import Tdfa
from .regops import APPEND, COPY, SET


class PrefixTree:
    """Growable tree of (pred, offs) nodes; index 0 is the empty sequence.

    Appends only; common prefixes are shared, so copying a history is
    copying an index.
    """

    __slots__ = ("pred", "offs")

    def __init__(self):
        self.pred = [0]
        self.offs = [None]

    def append(self, idx: int, hist: str, pos: int) -> int:
        pred, offs = self.pred, self.offs
        for ch in hist:
            pred.append(idx)
            offs.append(pos if ch == "p" else None)
            idx = len(pred) - 1
        return idx

    def unpack(self, idx: int) -> list:
        out = []
        while idx:
            out.append(self.offs[idx])
            idx = self.pred[idx]
        out.reverse()
        return out


@dataclass
class MatchOutcome:
    kind: str  # "match" | "prefix" | "none"
    end: int | None = None
    # tag -> offset | None (single-valued) or list of offsets/-1 (multi).
    values: dict = field(default_factory=dict)
    tstring: list | None = None

    def __bool__(self) -> bool:
        return self.kind != "none"


NO_MATCH = MatchOutcome("none")


def run_ops(ops, regs, tree: PrefixTree, pos: int):
    """Apply one operation list in order."""
    for op in ops:
        kind = op[0]
        if kind == SET:
            regs[op[1]] = pos if op[2] == "p" else None
        elif kind == COPY:
            regs[op[1]] = regs[op[2]]
        else:
            regs[op[1]] = tree.append(regs[op[2]], op[3], pos)


def _read_values(tdfa: Tdfa, regs, tree: PrefixTree) -> dict:
    values = {}
    for t in tdfa.tags:
        r = regs[tdfa.rf[t]]
        if t in tdfa.multi:
            values[t] = [-1 if x is None else x for x in tree.unpack(r)]
        else:
            values[t] = r
    return values


def exec_tdfa(tdfa: Tdfa, data: bytes, mode: str = "full", counters: dict | None = None) -> MatchOutcome:
    """Run the automaton over data.

    Full mode accepts iff the whole input ends in a final state.  Longest-
    prefix mode remembers the last visited final state (offset and state)
    and, on a dead end, restores it: the fallback quasi-transition replaces
    the final one when the automaton moved past the match point.
    """
    tree = PrefixTree()
    regs: list = [None] * (tdfa.max_reg + 1)
    for t in tdfa.multi:
        regs[tdfa.r0[t]] = 0
    b2c = tdfa.byte_to_class
    table = tdfa.table()
    finals = tdfa.finals

    state = tdfa.s0
    pos = 0
    match_pos = 0 if state in finals else -1
    match_state = state
    row = table[state]

    if counters is None:
        for byte in data:
            cls = b2c[byte]
            cell = row[cls] if cls >= 0 else None
            if cell is None:
                break
            if cell[1]:
                run_ops(cell[1], regs, tree, pos)
            state = cell[0]
            pos += 1
            row = table[state]
            if state in finals:
                match_pos = pos
                match_state = state
    else:
        trans = ops_run = 0
        for byte in data:
            cls = b2c[byte]
            cell = row[cls] if cls >= 0 else None
            if cell is None:
                break
            trans += 1
            ops_run += len(cell[1])
            if cell[1]:
                run_ops(cell[1], regs, tree, pos)
            state = cell[0]
            pos += 1
            row = table[state]
            if state in finals:
                match_pos = pos
                match_state = state
        counters["transitions"] = counters.get("transitions", 0) + trans
        counters["operations"] = counters.get("operations", 0) + ops_run

    if mode == "full":
        if match_pos != len(data):
            return NO_MATCH
        run_ops(tdfa.phi[match_state], regs, tree, len(data))
        return MatchOutcome("match", len(data), _read_values(tdfa, regs, tree))

    # longest-prefix mode
    if match_pos < 0:
        return NO_MATCH
    if match_pos == pos:
        quasi = tdfa.phi[match_state]
    else:
        quasi = tdfa.psi.get(match_state)
        assert quasi is not None, "left a final state without fallback operations"
    run_ops(quasi, regs, tree, match_pos)
    kind = "match" if match_pos == len(data) else "prefix"
    return MatchOutcome(kind, match_pos, _read_values(tdfa, regs, tree))
