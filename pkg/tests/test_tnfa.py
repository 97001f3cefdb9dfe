from random import Random

from helpers import all_asts, all_inputs, brute_force_match, number_tags

from tdfa.resyntax import Sym, Tag, collect_tags, parse_regex
from tdfa.tnfa import (
    build_tnfa,
    ntags,
    sim_epsilon_closure,
    sim_step_on_symbol,
    simulate,
    tnfa_to_dot,
)

A, B = ord("a"), ord("b")
GOLDEN = "(a)*#(?:a|#b)#b*"


def golden_nfa():
    return build_tnfa(parse_regex(GOLDEN))


def test_build_symbol():
    nfa = build_tnfa(Sym(A))
    assert nfa.n_states == 2
    assert nfa.syms[nfa.q0] == {A: nfa.qf}
    assert not nfa.eps[nfa.q0]


def test_build_tag():
    nfa = build_tnfa(Tag(1))
    assert nfa.n_states == 2
    assert nfa.eps[nfa.q0] == ((1, 1, nfa.qf),)


def test_ntags_chain():
    start, states, transitions = ntags([1, 2], qf=9, first_state=5)
    assert start == 5 and states == [5, 6]
    assert transitions == [(5, 1, -1, 6), (6, 1, -2, 9)]


def test_ntags_empty():
    start, states, transitions = ntags([], qf=3, first_state=7)
    assert start == 3 and states == [] and transitions == []


def test_ntags_single():
    _, _, transitions = ntags([4], qf=1, first_state=0)
    assert transitions == [(0, 1, -4, 1)]


def test_build_golden_structure():
    nfa = golden_nfa()
    assert nfa.n_states == 18 and nfa.q0 == 0 and nfa.qf == 17
    # zero-repetition bypass emits -t1 -t2 along 0 -> 5 -> 6 -> 7
    assert (2, 0, 5) in nfa.eps[0]
    assert nfa.eps[5] == ((1, -1, 6),)
    assert nfa.eps[6] == ((1, -2, 7),)
    # the left alternative branch emits -t4 along 8 -> 9 -> 10 -> 13
    assert (1, 0, 9) in nfa.eps[8]
    assert nfa.syms[9] == {A: 10}
    assert nfa.eps[10] == ((1, -4, 13),)
    # final state has no outgoing transitions
    assert not nfa.eps[17] and not nfa.syms[17]


def test_priorities_distinct_from_one():
    for pattern in (GOLDEN, "a|b|ab", "(?:ab)+", "a{2,4}"):
        nfa = build_tnfa(parse_regex(pattern))
        for lst in nfa.eps:
            assert [pri for pri, _, _ in lst] == list(range(1, len(lst) + 1))


def test_simulate_golden():
    nfa = golden_nfa()
    assert simulate(nfa, b"aab") == {1: 1, 2: 2, 3: 2, 4: 2, 5: 3}
    assert simulate(nfa, b"") is None
    assert simulate(nfa, b"b") == {1: None, 2: None, 3: 0, 4: 0, 5: 1}


def test_simulate_greedy_repetition():
    nfa = build_tnfa(parse_regex("(a)*"))
    assert simulate(nfa, b"aa") == {1: 1, 2: 2}


def test_simulate_empty_loop_terminates():
    nfa = build_tnfa(parse_regex("(?:#)*"))
    assert simulate(nfa, b"") == {1: 0}


def test_simulate_deterministic():
    nfa = golden_nfa()
    runs = [simulate(nfa, b"aab") for _ in range(3)]
    assert runs[0] == runs[1] == runs[2]


def test_closure_initial_rows():
    nfa = golden_nfa()
    C = sim_epsilon_closure([(nfa.q0, [None] * 5)], nfa, 0)
    assert [q for q, _ in C] == [2, 9, 12]
    by_state = {q: m for q, m in C}
    assert by_state[2] == [0, None, None, None, None]
    assert by_state[9] == [None, None, 0, None, None]
    assert by_state[12] == [None, None, 0, 0, None]


def test_closure_symbol_only_state():
    nfa = build_tnfa(Sym(A))
    C = sim_epsilon_closure([(nfa.q0, [])], nfa, 0)
    assert C == [(nfa.q0, [])]


def test_closure_alt_order():
    nfa = build_tnfa(parse_regex("a|b"))
    C = sim_epsilon_closure([(nfa.q0, [])], nfa, 0)
    states = [q for q, _ in C]
    # left branch claimed before right branch
    assert states == sorted(states)
    assert nfa.syms[states[0]] == {A: nfa.qf}
    assert nfa.syms[states[1]] == {B: nfa.qf}


def test_step_on_symbol():
    nfa = golden_nfa()
    C = sim_epsilon_closure([(nfa.q0, [None] * 5)], nfa, 0)
    stepped = sim_step_on_symbol(C, nfa, A)
    assert [q for q, _ in stepped] == [3, 10]
    assert sim_step_on_symbol(C, nfa, ord("c")) == []
    single = sim_step_on_symbol([C[0]], nfa, A)
    assert len(single) == 1


def test_dot_dump_mentions_priorities_and_tags():
    dot = tnfa_to_dot(golden_nfa())
    assert "style=bold" in dot and "1/-1" in dot and "style=dashed" in dot


def _check_against_brute(nfa, max_len=4):
    for data in all_inputs(b"ab", max_len):
        want = brute_force_match(nfa, data)
        got = simulate(nfa, data)
        assert got == want, (data, got, want)


def test_brute_force_equivalence_exhaustive_small():
    n = 0
    for size in range(1, 5):
        for shape in all_asts(size):
            ast, ntag = number_tags(shape)
            if ntag > 4:
                continue
            _check_against_brute(build_tnfa(ast), max_len=3)
            n += 1
    assert n > 1500


def test_brute_force_equivalence_random_larger():
    from tdfa.fuzz import gen_pattern

    rng = Random(11)
    for _ in range(120):
        pattern = gen_pattern(rng, max_nodes=8, max_tags=4)
        nfa = build_tnfa(parse_regex(pattern))
        for data in all_inputs(b"ab", 5):
            assert simulate(nfa, data) == brute_force_match(nfa, data), (pattern, data)
