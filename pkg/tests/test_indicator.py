import itertools

import pytest
from hypothesis import given
import hypothesis.strategies as st

from pcsp.conditions import (FunctionSymbol, MinorCondition, example_2_16, example_2_18, g_loop, is_trivial,
                             minor_identity, olsak)
from pcsp.core import Structure, clique, cycle, disjoint_union, nae, one_in_three, power, template
from pcsp.homsearch import find_hom, search_hom
from pcsp.indicator import (check_condition_in_pol, clique_certificate, clique_refutes, condition_to_instance,
                            graph_is_loopless, instance_to_condition, is_clique, touched_indicator,
                            verify_witness)
from pcsp.minionlab import minor_of, olsak_k_2k, projection

from conftest import edges_of, oracle_homs, structures


def one_constraint(a):
    return Structure("I", 3, a.signature, [[(0, 1, 2)]])


def test_nae_instance_identities():
    c = instance_to_condition(nae(2), one_constraint(nae(2)))
    assert [(s.name, s.arity) for s in c.symbols] == [("f0", 2), ("f1", 2), ("f2", 2), ("g0", 6)]
    # R^{H2} in lex order: 001 010 011 100 101 110
    assert [i.rhs_args for i in c.identities] == [(0, 0, 0, 1, 1, 1), (0, 1, 1, 0, 0, 1), (1, 0, 1, 0, 1, 0)]


def test_one_in_three_instance_identities():
    c = instance_to_condition(one_in_three(), one_constraint(one_in_three()))
    assert c.symbol("g0").arity == 3
    assert [str(i) for i in c.identities] == ["f0(x1,x2) = g0(x1,x1,x2)", "f1(x1,x2) = g0(x1,x2,x1)",
                                              "f2(x1,x2) = g0(x2,x1,x1)"]


def test_instance_without_constraints():
    c = instance_to_condition(clique(3), Structure("I", 2, clique(3).signature, [[]]))
    assert [s.name for s in c.symbols] == ["f0", "f1"] and not c.identities
    assert is_trivial(c)


def test_triangle_condition_is_trivial():
    assert is_trivial(instance_to_condition(clique(3), cycle(3)))


def test_small_indicator_by_hand():
    c = MinorCondition("d", (FunctionSymbol("f", 1, "U"), FunctionSymbol("g", 2, "V")),
                       (minor_identity("f", 1, "g", (0, 0)),))
    ind = condition_to_instance(c, clique(2))
    s = ind.structure
    assert s.domain_size == 4
    f0, f1 = ind.vertex_of("f", (0,)), ind.vertex_of("f", (1,))
    assert f0 == ind.vertex_of("g", (0, 0)) and f1 == ind.vertex_of("g", (1, 1))
    g01, g10 = ind.vertex_of("g", (0, 1)), ind.vertex_of("g", (1, 0))
    assert edges_of(s) == {(f0, f1), (f1, f0), (g01, g10), (g10, g01)}


def test_olsak_indicator_size():
    ind = condition_to_instance(olsak(), clique(3))
    assert ind.pre_size == 738 and ind.structure.domain_size == 717


def test_indicator_without_identities_is_union():
    c = MinorCondition("free", (FunctionSymbol("f", 1), FunctionSymbol("g", 2)), ())
    ind = condition_to_instance(c, clique(2))
    union, _ = disjoint_union([power(clique(2), 1), power(clique(2), 2)])
    assert ind.structure == union


def test_condition_examples():
    assert check_condition_in_pol(olsak(), template(clique(3), clique(6))).status == "sat"
    assert check_condition_in_pol(olsak(), template(clique(3), clique(5))).status == "unsat"
    r = check_condition_in_pol(example_2_16(), template(nae(2), nae(4)))
    assert r.status == "sat" and r.report.ok
    assert check_condition_in_pol(example_2_18(), template(nae(2))).status == "unsat"


def test_explicit_witness_path():
    o = olsak_k_2k(3)
    zeta = {"o": o, "f": minor_of(o, (0, 0, 1, 1, 1, 0), 2)}
    r = check_condition_in_pol(olsak(), template(clique(3), clique(6)), witness=zeta)
    assert r.method == "explicit" and r.report.ok
    cert = r.certificate()
    assert cert["kind"] == "witness" and set(cert["verification"]["identities"]) == {"pass"}
    # a broken witness is rejected and the search takes over
    bad = {"o": o, "f": projection(3, 2, 1, 6)}
    assert verify_witness(olsak(), template(clique(3), clique(6)), bad).identities == [False] * 3
    r = check_condition_in_pol(olsak(), template(clique(3), clique(6)), witness=bad)
    assert r.method == "indicator" and r.report.ok and "supplied witness failed verification" in r.notes


def test_budget_reports_unknown():
    r = check_condition_in_pol(olsak(), template(clique(3), clique(5)), node_budget=1)
    assert r.status == "unknown" and r.certificate(1) == {"kind": "unknown", "method": "budget",
                                                           "nodes": r.nodes, "budget": 1}


def test_touched_indicator_refutes_k4_loop():
    c = g_loop(clique(4))
    r = check_condition_in_pol(c, template(clique(4)))
    assert r.status == "unsat" and r.method == "touched-indicator"


def test_clique_examples():
    assert sorted(clique_certificate(clique(4), 4)) == [0, 1, 2, 3]
    assert clique_certificate(cycle(5), 3) is None
    ind = condition_to_instance(olsak(), clique(3))
    seed = []
    for i in range(3):
        seed.append(ind.vertex_of("o", [(i + s) % 3 for s in (0, 1, 2, 1, 2, 0)]))
        seed.append(ind.vertex_of("o", [(i + s) % 3 for s in (1, 0, 0, 0, 1, 1)]))
    assert is_clique(ind.structure, seed)
    found = clique_certificate(ind.structure, 6)
    assert found is not None and is_clique(ind.structure, found)


def test_clique_refutes_smaller_cliques_consistently():
    ind = condition_to_instance(olsak(), clique(3))
    cl = clique_certificate(ind.structure, 6)
    for k in (3, 4, 5):
        assert clique_refutes(ind.structure, cl, clique(k))
        if k < 5:
            assert search_hom(ind.structure, clique(k)).status == "unsat"
    assert not clique_refutes(ind.structure, cl, clique(6))
    assert graph_is_loopless(clique(3))


def test_clique_matches_brute_force_on_small_graphs():
    g = Structure("G", 6, [("E", 2)], [[(u, v) for u in range(6) for v in range(6)
                                        if u != v and (u + v) % 3 != 0]])
    pairs = edges_of(g)
    for k in range(1, 6):
        has = any(all((u, v) in pairs for u in S for v in S if u != v)
                  for S in itertools.combinations(range(6), k))
        assert (clique_certificate(g, k) is not None) == has


@st.composite
def small_conditions(draw):
    syms = [FunctionSymbol("f", draw(st.integers(1, 2)), "U"), FunctionSymbol("g", draw(st.integers(1, 3)), "V")]
    ids = []
    for _ in range(draw(st.integers(1, 3))):
        pi = draw(st.tuples(*[st.integers(0, syms[0].arity - 1)] * syms[1].arity))
        ids.append(minor_identity("f", syms[0].arity, "g", pi))
    return MinorCondition("c", tuple(syms), tuple(ids))


TEMPLATES = [template(clique(2)), template(clique(2), clique(3)), template(nae(2)), template(one_in_three(), nae(2)),
             template(cycle(3))]


@given(small_conditions(), st.sampled_from(TEMPLATES))
def test_check_agrees_with_indicator_hom(c, t):
    r = check_condition_in_pol(c, t)
    ind = condition_to_instance(c, t.a)
    assert (r.status == "sat") == (find_hom(ind.structure, t.b) is not None)
    if r.status == "sat":
        assert verify_witness(c, t, r.witness).ok
    # the touched indicator is an induced part of the full one
    if find_hom(touched_indicator(c, t.a).structure, t.b) is None:
        assert r.status == "unsat"


@given(structures(sig=(("E", 2),), max_size=3, max_tuples=4, name="A"),
       structures(sig=(("E", 2),), max_size=4, max_tuples=4, name="I"))
def test_round_trip_law(a, i):
    if len(a.relations[0]) == 0:
        return
    has = bool(oracle_homs(i, a))
    c = instance_to_condition(a, i)
    assert bool(is_trivial(c)) == has
    assert (check_condition_in_pol(c, template(a)).status == "sat") == has


def test_decode_needs_full_indicator():
    ind = touched_indicator(olsak(), clique(3))
    with pytest.raises(ValueError):
        ind.decode([0] * ind.structure.domain_size, 3)
