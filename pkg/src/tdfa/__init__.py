"""Submatch extraction with tagged deterministic finite automata.

    import tdfa
    p = tdfa.compile("(a)*#(?:a|#b)#b*")
    m = p.match(b"aab")          # m.values maps tag -> offset
    m = p.match(b"aab", mode="prefix")

Engines: "tdfa" (register automaton, default), "simulation" (direct tagged
NFA simulation, the reference), "multipass" (register-free, decoded
backwards; supports offset lists and tagged strings).
"""

from . import multipass as _mp
from . import resyntax as _syn
from . import tnfa as _tnfa
from .determinize import ResourceLimit, Tdfa, determinize
from .optimizer import add_fallback_regops, minimize as _minimize, optimize
from .resyntax import ParseError, TagInfo
from .runtime import NO_MATCH, MatchOutcome, exec_tdfa

__all__ = [
    "compile",
    "match",
    "Pattern",
    "MatchOutcome",
    "ParseError",
    "ResourceLimit",
    "TagInfo",
]


def _resolve_multi(spec, ast):
    if spec == "auto":
        return _syn.default_multi_tags(ast)
    if spec == "none":
        return frozenset()
    if spec == "all":
        return frozenset(_syn.collect_tags(ast))
    return frozenset(spec)


class Pattern:
    """A compiled pattern bound to one engine configuration."""

    def __init__(
        self,
        pattern: str | bytes,
        engine: str = "tdfa",
        opt: str = "full",
        use_minimize: bool = False,
        fixed_tags: bool = False,
        multi: str = "auto",
        auto_tags: bool = False,
        max_states: int = 100_000,
        _mutate=None,
    ):
        if engine not in ("tdfa", "simulation", "multipass"):
            raise ValueError(f"unknown engine {engine!r}")
        if opt not in ("none", "full"):
            raise ValueError(f"unknown optimization level {opt!r}")
        self.pattern = pattern
        self.engine = engine
        ast = _syn.parse_regex(pattern)
        if auto_tags:
            ast = _syn.auto_tag(ast)
        self.ast = ast
        self.tags = _syn.collect_tags(ast)
        self.multi = _resolve_multi(multi, ast)
        self.fixes: dict[int, tuple[int, int]] = {}
        self.tag_info = {
            t: TagInfo(t, multi=t in self.multi) for t in self.tags
        }

        if engine == "simulation":
            self.tnfa = _tnfa.build_tnfa(ast)
            return
        if engine == "multipass":
            # Tagged strings need every tag present, so the full automaton
            # is always built here.
            self.tnfa = _tnfa.build_tnfa(ast)
            self.mp = _mp.determinize_multipass(self.tnfa, max_states)
            return

        if fixed_tags:
            self.fixes = _syn.find_fixed_tags(ast)
            for t, (base, dist) in self.fixes.items():
                self.tag_info[t].base = base
                self.tag_info[t].distance = dist
            ast = _syn.strip_fixed_tags(ast, set(self.fixes))
        self.tnfa = _tnfa.build_tnfa(ast)
        free_multi = frozenset(t for t in self.multi if t not in self.fixes)
        det_mutate = _mutate if _mutate in ("skip-map-copies", "skip-map-toposort") else None
        self.tdfa = determinize(self.tnfa, free_multi, max_states, mutate=det_mutate)
        if opt == "full":
            optimize(self.tdfa, skip_normalization=_mutate == "skip-normalization")
        else:
            # Longest-prefix mode needs fallback operations regardless.
            add_fallback_regops(self.tdfa)
        if use_minimize:
            self.tdfa = _minimize(self.tdfa)

    def match(self, data: str | bytes, mode: str = "full", repr_: str = "offsets",
              counters: dict | None = None) -> MatchOutcome:
        if isinstance(data, str):
            data = data.encode()
        if mode not in ("full", "prefix"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "prefix" and self.engine != "tdfa":
            raise ValueError("longest-prefix mode requires the tdfa engine")
        if repr_ != "offsets" and self.engine != "multipass":
            raise ValueError(f"representation {repr_!r} requires the multipass engine")

        if self.engine == "simulation":
            values = _tnfa.simulate(self.tnfa, data)
            if values is None:
                return NO_MATCH
            return MatchOutcome("match", len(data), self._finish(values, len(data)))

        if self.engine == "multipass":
            fw = _mp.match_forward(self.mp, data)
            if fw is None:
                return NO_MATCH
            if repr_ == "offsets":
                values = _mp.extract_offsets(self.mp, data, fw)
            elif repr_ == "lists":
                values = _mp.extract_offset_lists(self.mp, data, fw)
            elif repr_ == "tstring":
                ts = _mp.extract_tstring(self.mp, data, fw)
                return MatchOutcome("match", len(data), {}, tstring=ts)
            else:
                raise ValueError(f"unknown representation {repr_!r}")
            return MatchOutcome("match", len(data), values)

        out = exec_tdfa(self.tdfa, data, mode, counters)
        if not out:
            return out
        out.values = self._finish(out.values, out.end)
        return out

    def _finish(self, values: dict, length: int) -> dict:
        if self.fixes:
            values = _syn.apply_fixed_tags(values, self.fixes, length)
        return values


def compile(pattern: str | bytes, **kwargs) -> Pattern:
    """Compile a pattern; see Pattern for the options."""
    return Pattern(pattern, **kwargs)


def match(handle: Pattern, data: str | bytes, mode: str = "full") -> MatchOutcome:
    """Module-level convenience mirroring compile/match handle APIs."""
    return handle.match(data, mode=mode)
