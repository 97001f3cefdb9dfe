"""Independent oracles used across the test suite.

These deliberately avoid the library's own matching machinery: the path
enumerator ranks whole TNFA paths by priority, and the naive register file
stores full offset lists instead of prefix-tree indices.
"""

from itertools import product

from tdfa.resyntax import Alt, Cat, Empty, Rep, Sym, Tag
from tdfa.tnfa import Tnfa


def brute_force_match(nfa: Tnfa, data: bytes):
    """First accepting TNFA path in lexicographic priority order.

    Depth-first search exploring eps-transitions in ascending priority;
    a path may not revisit a state without consuming input in between.
    Returns the winning path's tag values, or None.
    """
    n = len(data)
    tags = nfa.tags

    def dfs(q, pos, seen, m):
        if q == nfa.qf:
            return dict(m) if pos == n else None
        for _, tag, p in nfa.eps[q]:
            if p in seen:
                continue
            if tag == 0:
                m2 = m
            else:
                m2 = dict(m)
                if tag > 0:
                    m2[tag] = pos
                else:
                    m2[-tag] = None
            r = dfs(p, pos, seen | {p}, m2)
            if r is not None:
                return r
        if pos < n:
            p = nfa.syms[q].get(data[pos])
            if p is not None:
                return dfs(p, pos + 1, {p}, m)
        return None

    return dfs(nfa.q0, 0, {nfa.q0}, {t: None for t in tags})


def all_inputs(alphabet: bytes, max_len: int):
    for k in range(max_len + 1):
        for combo in product(alphabet, repeat=k):
            yield bytes(combo)


_REPS = ((0, None), (1, None), (0, 1), (1, 2), (2, 2), (0, 0))


def all_asts(size: int):
    """Every AST shape of exactly `size` nodes over {a, b}; tags are
    emitted as Tag(0) placeholders, renumbered by number_tags."""
    if size <= 0:
        return
    if size == 1:
        yield Empty()
        yield Sym(ord("a"))
        yield Sym(ord("b"))
        yield Tag(0)
        return
    for lo, hi in _REPS:
        for body in all_asts(size - 1):
            yield Rep(body, lo, hi)
    for left_size in range(1, size - 1):
        for left in all_asts(left_size):
            for right in all_asts(size - 1 - left_size):
                yield Alt(left, right)
                yield Cat(left, right)


def number_tags(e, counter=None):
    """Assign placeholder tags contiguous ids in reading order; returns
    (ast, tag count)."""
    if counter is None:
        counter = [0]
    match e:
        case Tag(_):
            counter[0] += 1
            return Tag(counter[0]), counter[0]
        case Alt(l, r):
            l2, _ = number_tags(l, counter)
            r2, _ = number_tags(r, counter)
            return Alt(l2, r2), counter[0]
        case Cat(l, r):
            l2, _ = number_tags(l, counter)
            r2, _ = number_tags(r, counter)
            return Cat(l2, r2), counter[0]
        case Rep(b, lo, hi):
            b2, _ = number_tags(b, counter)
            return Rep(b2, lo, hi), counter[0]
        case _:
            return e, counter[0]


class NaiveRegisters:
    """Reference register file: every register holds a full value list
    (offsets and None), copied wholesale on copy operations."""

    def __init__(self, n_regs: int, tree_regs):
        self.vals = {}
        for r in range(1, n_regs + 1):
            self.vals[r] = [] if r in tree_regs else None

    def run(self, ops, pos: int):
        for op in ops:
            if op[0] == "s":
                self.vals[op[1]] = pos if op[2] == "p" else None
            elif op[0] == "c":
                src = self.vals[op[2]]
                self.vals[op[1]] = list(src) if isinstance(src, list) else src
            else:
                src = self.vals[op[2]]
                self.vals[op[1]] = list(src) + [pos if ch == "p" else None for ch in op[3]]
