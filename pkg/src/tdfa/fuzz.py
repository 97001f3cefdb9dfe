"""Randomized cross-checking of every engine against the simulation.

Patterns are generated as concrete syntax strings (so any counterexample is
reproducible from the command line), compiled through all engine
configurations, and matched against every input up to a length bound; the
tagged NFA simulation is the reference for match results and tag values.
"""

from dataclasses import dataclass
from itertools import product
from random import Random

from . import Pattern

_ESCAPE = set("|()*+?{}#\\")


@dataclass
class Divergence:
    pattern: str
    engine: str
    data: bytes
    detail: str

    def __str__(self):
        return (
            f"engine {self.engine} diverges on pattern {self.pattern!r} "
            f"input {self.data!r}: {self.detail}"
        )


def gen_pattern(rng: Random, max_nodes: int = 10, max_tags: int = 6,
                alphabet: str = "ab", max_rep: int = 3) -> str:
    """Random pattern within the size limits."""
    budget = [rng.randint(1, max_nodes)]
    tags = [max_tags]

    def atom() -> str:
        budget[0] -= 1
        roll = rng.random()
        if roll < 0.15 and tags[0] > 0:
            tags[0] -= 1
            return "#"
        if roll < 0.25 and budget[0] > 0:
            if rng.random() < 0.4 and tags[0] >= 2:
                tags[0] -= 2
                return "(" + alternation() + ")"
            return "(?:" + alternation() + ")"
        ch = rng.choice(alphabet)
        return "\\" + ch if ch in _ESCAPE else ch

    def postfix() -> str:
        a = atom()
        if rng.random() < 0.3:
            budget[0] -= 1
            roll = rng.random()
            if roll < 0.4:
                return a + "*"
            if roll < 0.55:
                return a + "+"
            if roll < 0.7:
                return a + "?"
            lo = rng.randint(0, max_rep)
            if roll < 0.8:
                return a + "{%d}" % max(lo, 1)
            hi = rng.randint(lo, max_rep)
            return a + "{%d,%d}" % (lo, hi)
        return a

    def concat() -> str:
        parts = [postfix()]
        while budget[0] > 0 and rng.random() < 0.6:
            parts.append(postfix())
        return "".join(parts)

    def alternation() -> str:
        out = concat()
        while budget[0] > 0 and rng.random() < 0.25:
            budget[0] -= 1
            out += "|" + concat()
        return out

    return alternation()


def all_inputs(alphabet: str, max_len: int):
    data = alphabet.encode()
    for n in range(max_len + 1):
        for combo in product(data, repeat=n):
            yield bytes(combo)


def _last(value):
    """Normalize to the last-offset view: -1 and empty lists become nil."""
    if isinstance(value, list):
        value = value[-1] if value else None
    return None if value == -1 else value


def _lists_from_tstring(tokens, tags) -> dict:
    lists: dict[int, list] = {t: [] for t in tags}
    pos = 0
    for tok in tokens:
        if isinstance(tok, int):
            if tok > 0:
                lists[tok].append(pos)
            else:
                lists[-tok].append(-1)
        else:
            pos += 1
    return lists


def cross_check(pattern: str, alphabet: str = "ab", max_len: int = 6,
                multi: str = "auto", mutate=None, max_states: int = 100_000):
    """Compare all engines on all inputs; returns a Divergence or None."""
    sim = Pattern(pattern, engine="simulation")
    tags = sim.tags
    engines = {
        "tdfa-raw": Pattern(pattern, engine="tdfa", opt="none", multi=multi,
                            max_states=max_states, _mutate=mutate),
        "tdfa-opt": Pattern(pattern, engine="tdfa", opt="full", multi=multi,
                            max_states=max_states, _mutate=mutate),
        "tdfa-min": Pattern(pattern, engine="tdfa", opt="full", use_minimize=True,
                            multi=multi, max_states=max_states, _mutate=mutate),
        "tdfa-fixed": Pattern(pattern, engine="tdfa", opt="full", fixed_tags=True,
                              multi=multi, max_states=max_states, _mutate=mutate),
    }
    mp = Pattern(pattern, engine="multipass", max_states=max_states)

    raw, opt = engines["tdfa-raw"].tdfa, engines["tdfa-opt"].tdfa
    if opt.register_count() > raw.register_count() or opt.op_count() > raw.op_count():
        return Divergence(pattern, "tdfa-opt", b"", "optimization increased registers or operations")

    multi_tags = engines["tdfa-raw"].tdfa.multi

    for data in all_inputs(alphabet, max_len):
        want = sim.match(data)
        for name, eng in engines.items():
            got = eng.match(data)
            if got.kind != want.kind:
                return Divergence(pattern, name, data, f"kind {got.kind} != {want.kind}")
            if not want:
                continue
            for t in tags:
                if _last(got.values[t]) != want.values[t]:
                    return Divergence(
                        pattern, name, data,
                        f"t{t}: {got.values[t]!r} vs simulation {want.values[t]!r}")

        mp_off = mp.match(data)
        if mp_off.kind != want.kind:
            return Divergence(pattern, "multipass", data, f"kind {mp_off.kind} != {want.kind}")
        if not want:
            continue
        mp_lists = mp.match(data, repr_="lists")
        ts = mp.match(data, repr_="tstring")
        ts_lists = _lists_from_tstring(ts.tstring, tags)
        for t in tags:
            if mp_off.values[t] != want.values[t]:
                return Divergence(pattern, "multipass", data,
                                  f"t{t}: {mp_off.values[t]!r} vs {want.values[t]!r}")
            if _last(mp_lists.values[t]) != want.values[t]:
                return Divergence(pattern, "multipass-lists", data,
                                  f"t{t}: {mp_lists.values[t]!r} last vs {want.values[t]!r}")
            if ts_lists[t] != mp_lists.values[t]:
                return Divergence(pattern, "multipass-tstring", data,
                                  f"t{t}: {ts_lists[t]!r} vs lists {mp_lists.values[t]!r}")
            if t in multi_tags:
                got = engines["tdfa-raw"].match(data).values[t]
                if got != mp_lists.values[t]:
                    return Divergence(pattern, "tdfa-raw-lists", data,
                                      f"t{t}: {got!r} vs multipass {mp_lists.values[t]!r}")
    return None


def run_corpus(seed: int, count: int, max_nodes: int = 10, max_tags: int = 6,
               alphabet: str = "ab", max_len: int = 6, max_rep: int = 3,
               multi: str = "auto", mutate=None, progress=None):
    """Generate and cross-check a corpus; returns (checked, first divergence)."""
    rng = Random(seed)
    for i in range(count):
        pattern = gen_pattern(rng, max_nodes, max_tags, alphabet, max_rep)
        div = cross_check(pattern, alphabet, max_len, multi, mutate)
        if div is not None:
            return i + 1, div
        if progress and (i + 1) % progress == 0:
            print(f"  checked {i + 1}/{count} patterns")
    return count, None
