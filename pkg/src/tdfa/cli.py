"""Command line front end: compile, match, fuzz, bench.

Exit codes: 0 ok, 1 no match, 2 usage or syntax error, 3 fuzz divergence,
4 resource cap exceeded.
"""

import argparse
import json
import os
import sys
import time

from . import Pattern
from .determinize import ResourceLimit, Tdfa, determinize
from .multipass import determinize_multipass, render_tstring
from .optimizer import build_cfg, minimize, optimize
from .resyntax import ParseError, ast_to_json, parse_regex
from .tnfa import build_tnfa, tnfa_to_dot

EX_OK = 0
EX_NOMATCH = 1
EX_USAGE = 2
EX_DIVERGENCE = 3
EX_RESOURCE = 4


def _engine_flags(p: argparse.ArgumentParser):
    p.add_argument("--engine", choices=["simulation", "tdfa", "multipass"], default="tdfa")
    p.add_argument("--opt", choices=["none", "full"], default="full")
    p.add_argument("--minimize", action="store_true", help="minimize after optimization")
    p.add_argument("--fixed-tags", action="store_true", help="remove fixed tags before construction")
    p.add_argument("--multi", default="auto", help="multi-valued tags: auto, none, all, or comma ids")
    p.add_argument("--auto-tags", action="store_true", help="surround every subexpression with a tag pair")
    p.add_argument("--max-states", type=int, default=100_000)


def _multi_arg(value: str):
    if value in ("auto", "none", "all"):
        return value
    return frozenset(int(x) for x in value.split(","))


def _compile(args, pattern: str) -> Pattern:
    return Pattern(
        pattern,
        engine=args.engine,
        opt=args.opt,
        use_minimize=args.minimize,
        fixed_tags=args.fixed_tags,
        multi=_multi_arg(args.multi),
        auto_tags=args.auto_tags,
        max_states=args.max_states,
    )


def _liveness_grid(cfg, L) -> str:
    n = cfg.n_regs
    lines = ["block " + " ".join(f"r{r}" for r in range(1, n + 1))]
    for i, row in enumerate(L):
        cells = " ".join(("*" if r in row else ".").rjust(len(f"r{r}")) for r in range(1, n + 1))
        lines.append(f"{i:5d} {cells}")
    return "\n".join(lines)


def _interference_grid(cfg, I) -> str:
    n = cfg.n_regs
    head = "    " + " ".join(f"r{r}" for r in range(1, n + 1))
    lines = [head]
    for a in range(1, n + 1):
        cells = " ".join(("*" if b in I[a] else ".").rjust(len(f"r{b}")) for b in range(1, n + 1))
        lines.append(f"r{a:<3d}{cells}")
    return "\n".join(lines)


def cmd_compile(args) -> int:
    dumps = set(args.dump.split(",")) if args.dump else set()
    if "all" in dumps:
        dumps = {"ast", "tnfa", "tdfa", "cfg", "opt", "min", "multipass", "json"}
    out_dir = args.out
    if dumps and out_dir:
        os.makedirs(out_dir, exist_ok=True)

    def write(name: str, text: str):
        if not out_dir:
            return
        with open(os.path.join(out_dir, name), "w") as f:
            f.write(text + "\n")

    ast = parse_regex(args.pattern)
    if args.auto_tags:
        from .resyntax import auto_tag

        ast = auto_tag(ast)
    if "ast" in dumps:
        write("ast.json", json.dumps(ast_to_json(ast), indent=2))

    stats = {}
    p = _compile(args, args.pattern)
    stats["tnfa_states"] = p.tnfa.n_states
    if "tnfa" in dumps:
        write("tnfa.dot", tnfa_to_dot(p.tnfa))

    if args.engine == "tdfa":
        raw = determinize(p.tnfa, p.tdfa.multi, args.max_states)
        stats["tdfa_states"] = raw.n_states
        stats["tdfa_finals"] = sorted(raw.finals)
        stats["raw_registers"] = raw.register_count()
        stats["raw_operations"] = raw.op_count()
        if "tdfa" in dumps:
            write("tdfa_raw.dot", raw.to_dot())
        if "cfg" in dumps:

            def dump_stage(stage, cfg, L, I):
                write(f"cfg_{stage}.dot", cfg.to_dot())
                if L is not None:
                    write(f"liveness_{stage}.txt", _liveness_grid(cfg, L))
                if I is not None:
                    write(f"interference_{stage}.txt", _interference_grid(cfg, I))

            optimize(raw, dump=dump_stage)
            stats["cfg_blocks"] = len(build_cfg(raw).blocks)
        stats["registers"] = p.tdfa.register_count()
        stats["final_registers"] = len(set(p.tdfa.rf.values()))
        stats["operations"] = p.tdfa.op_count()
        stats["states"] = p.tdfa.n_states
        if "opt" in dumps and args.opt == "full":
            write("tdfa_opt.dot", p.tdfa.to_dot())
        if "min" in dumps:
            write("tdfa_min.dot", minimize(p.tdfa).to_dot())
        if "json" in dumps:
            write("tdfa.json", p.tdfa.to_json())
        if p.fixes:
            stats["fixed_tags"] = {
                f"t{t}": f"t{b}-{d}" if b else f"len-{d}" for t, (b, d) in sorted(p.fixes.items())
            }
    elif args.engine == "multipass":
        stats.update(p.mp.stats())
        if "multipass" in dumps:
            write("multipass.dot", p.mp.to_dot())

    print(json.dumps(stats, indent=2))
    return EX_OK


def _format_value(v) -> str:
    if isinstance(v, list):
        return "{" + ",".join(str(x) for x in v) + "}"
    return "n" if v is None else str(v)


def cmd_match(args) -> int:
    p = _compile(args, args.pattern)
    if args.file:
        with open(args.file, "rb") as f:
            data = f.read()
    else:
        data = args.input.encode() if args.input is not None else b""
    out = p.match(data, mode=args.mode, repr_=args.repr)
    if not out:
        print("no match")
        return EX_NOMATCH
    if args.repr == "tstring":
        print(render_tstring(out.tstring))
        return EX_OK
    fields = []
    if out.kind == "prefix":
        fields.append(f"end={out.end}")
    fields.extend(f"t{t}={_format_value(out.values[t])}" for t in sorted(out.values))
    print(" ".join(fields) if fields else "match")
    return EX_OK


def cmd_fuzz(args) -> int:
    from .fuzz import run_corpus

    t0 = time.perf_counter()
    checked, div = run_corpus(
        seed=args.seed,
        count=args.count,
        max_nodes=args.max_nodes,
        max_tags=args.max_tags,
        alphabet=args.alphabet,
        max_len=args.max_len,
        max_rep=args.max_rep,
        multi=_multi_arg(args.multi),
        mutate=args.mutate,
        progress=args.count // 10 if args.progress else None,
    )
    dt = time.perf_counter() - t0
    if div is None:
        print(f"ok: {checked} patterns x all inputs len<={args.max_len} over "
              f"{args.alphabet!r}, no divergence ({dt:.1f}s)")
        return EX_OK
    print(f"DIVERGENCE after {checked} patterns ({dt:.1f}s)")
    print(f"  {div}")
    print(f"  reproduce: tdfa match --engine=tdfa {div.pattern!r} {div.data.decode()!r}")
    return EX_DIVERGENCE


def _bench_one(p: Pattern, data: bytes, repr_: str = "offsets"):
    counters: dict = {}
    t0 = time.perf_counter()
    if p.engine == "tdfa":
        out = p.match(data, counters=counters)
    else:
        out = p.match(data, repr_=repr_)
    dt = time.perf_counter() - t0
    mbps = len(data) / dt / 1e6 if dt else float("inf")
    opb = counters.get("operations", 0) / max(len(data), 1)
    return out, dt, mbps, opb


def cmd_bench(args) -> int:
    patterns = args.pattern or ["(?:#a)*", "(?:#a)*a{10}", "(?:#a)*a{100}"]
    size = int(args.size_mb * 1e6)
    data = (args.input_char.encode() * size)[:size]
    rows = []
    for pat in patterns:
        p = Pattern(pat, engine="tdfa", opt="full")
        out, dt, mbps, opb = _bench_one(p, data)
        rows.append((pat, "tdfa", f"{mbps:8.1f}", f"{opb:8.2f}",
                     p.tdfa.register_count(), p.tdfa.op_count(), out.kind))
        mp = Pattern(pat, engine="multipass")
        for repr_ in args.repr.split(","):
            out, dt, mbps, _ = _bench_one(mp, data, repr_)
            rows.append((pat, f"multipass/{repr_}", f"{mbps:8.1f}", "       -", "-", "-", out.kind))
    print(f"{'pattern':24} {'engine':20} {'MB/s':>8} {'ops/byte':>8} {'regs':>5} {'ops':>5} result")
    for pat, eng, mbps, opb, regs, ops, kind in rows:
        print(f"{pat:24} {eng:20} {mbps:>8} {opb:>8} {regs!s:>5} {ops!s:>5} {kind}")
    return EX_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tdfa", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("compile", help="build automata, dump artifacts, print stats")
    c.add_argument("pattern")
    c.add_argument("--out", help="directory for dump files")
    c.add_argument("--dump", help="comma list: ast,tnfa,tdfa,cfg,opt,min,multipass,json,all")
    _engine_flags(c)
    c.set_defaults(func=cmd_compile)

    m = sub.add_parser("match", help="match input and print tag values")
    m.add_argument("pattern")
    m.add_argument("input", nargs="?", default=None)
    m.add_argument("--file", help="read input bytes from a file")
    m.add_argument("--mode", choices=["full", "prefix"], default="full")
    m.add_argument("--repr", choices=["offsets", "lists", "tstring"], default="offsets")
    _engine_flags(m)
    m.set_defaults(func=cmd_match)

    f = sub.add_parser("fuzz", help="cross-check all engines against the simulation")
    f.add_argument("--seed", type=int, default=1)
    f.add_argument("--count", type=int, default=1000)
    f.add_argument("--max-nodes", type=int, default=10)
    f.add_argument("--max-tags", type=int, default=6)
    f.add_argument("--alphabet", default="ab")
    f.add_argument("--max-len", type=int, default=6)
    f.add_argument("--max-rep", type=int, default=3)
    f.add_argument("--multi", default="auto")
    f.add_argument("--mutate", choices=["skip-map-copies", "skip-map-toposort", "skip-normalization"],
                   help="inject a bug into the pipeline (harness self-test)")
    f.add_argument("--progress", action="store_true")
    f.set_defaults(func=cmd_fuzz)

    b = sub.add_parser("bench", help="throughput and per-byte operation counts")
    b.add_argument("--pattern", action="append")
    b.add_argument("--size-mb", type=float, default=10.0)
    b.add_argument("--input-char", default="a")
    b.add_argument("--repr", default="offsets,lists,tstring")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_USAGE
    except ResourceLimit as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_RESOURCE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())
